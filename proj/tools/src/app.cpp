#include "camf/cli/commands.hpp"

#include "camf/error.hpp"

#include <CLI11.hpp>

#include <ostream>

namespace camf::cli {

namespace {

// Flag values that override the config file; empty strings mean "not given".
struct RunFlags {
  std::string config;
  std::string method, dem, alpha1, gamma1, landcover, candidate_classes, candidates, derivation, outlet;
  std::string cells, target_syr, engine, drain;
  std::int32_t threads = 0;
  std::string out;
};

void add_run_flags(CLI::App& cmd, RunFlags& f) {
  cmd.add_option("-c,--config", f.config, "Key-value run configuration file");
  cmd.add_option("--method", f.method, "Flow routing: sfd (D8) or mfd (FD8) [mfd]");
  cmd.add_option("--dem", f.dem, "DEM ASCII grid");
  cmd.add_option("--alpha1", f.alpha1, "Initial production grid, ton/ha/yr (else computed from RUSLE keys)");
  cmd.add_option("--gamma1", f.gamma1, "Initial flow factor grid [normalised DEM slope]");
  cmd.add_option("--landcover", f.landcover, "Land cover class grid");
  cmd.add_option("--candidate-classes", f.candidate_classes, "Comma-separated land cover codes open to afforestation");
  cmd.add_option("--candidates", f.candidates, "Candidate mask grid (nonzero = candidate)");
  cmd.add_option("--derivation", f.derivation, "tabacay, maarkebeek or a factor file [tabacay]");
  cmd.add_option("--outlet", f.outlet, "auto or row,col[;row,col...] [auto: sink with the largest upslope area]");
  cmd.add_option("--engine", f.engine, "suffix, suffix-full, sfd-path or naive [suffix]");
  cmd.add_option("--drain", f.drain, "per-successor or fixed-outflow [per-successor]");
  cmd.add_option("--threads", f.threads, "Worker threads for candidate evaluation [1]");
  cmd.add_option("-o,--out", f.out, "Output directory [CAMF_OUTPUT_DIR, then output_dir, then camf_out]");
}

RunConfig build_config(const RunFlags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : RunConfig::load(f.config);
  const std::pair<const char*, const std::string*> overrides[] = {
      {"method", &f.method},       {"dem", &f.dem},
      {"alpha1", &f.alpha1},       {"gamma1", &f.gamma1},
      {"landcover", &f.landcover}, {"candidate_classes", &f.candidate_classes},
      {"candidates", &f.candidates}, {"derivation", &f.derivation},
      {"outlet", &f.outlet},       {"engine", &f.engine},
      {"drain", &f.drain}};
  for (const auto& [key, value] : overrides) {
    if (!value->empty()) {
      cfg.set(key, *value);
    }
  }
  // A stop flag replaces whichever stop criterion the file set.
  if (!f.cells.empty() && !f.target_syr.empty()) {
    throw ConfigError("give either --cells or --target-syr, not both");
  }
  if (!f.cells.empty()) {
    cfg.target_syr.reset();
    cfg.set("cells", f.cells);
  }
  if (!f.target_syr.empty()) {
    cfg.cells.reset();
    cfg.cells_percent.reset();
    cfg.set("target_syr", f.target_syr);
  }
  if (f.threads != 0) {
    cfg.threads = f.threads;
  }
  return cfg;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Greedy site selection for sediment yield reduction on raster catchments"};
  app.require_subcommand(1);

  RunFlags base_flags;
  bool dump_deliveries = false;
  auto* baseflow = app.add_subcommand("baseflow", "Sediment accumulation of the untouched catchment");
  add_run_flags(*baseflow, base_flags);
  baseflow->add_flag("--deliveries", dump_deliveries, "Also write per-edge deliveries.csv");

  RunFlags opt_flags;
  auto* optimize = app.add_subcommand("optimize", "Greedy afforestation site selection");
  add_run_flags(*optimize, opt_flags);
  optimize->add_option("-n,--cells", opt_flags.cells, "Cells to select, or a percentage of candidates like 5%");
  optimize->add_option("--target-syr", opt_flags.target_syr, "Stop once SYR reaches this many ton/yr");

  RusleInputs rusle_in;
  std::string rusle_r, rusle_p = "1", rusle_dem, rusle_landcover, rusle_out;
  auto* rusle = app.add_subcommand("rusle", "Initial production E = R K LS C P in ton/ha/yr");
  rusle->add_option("--r", rusle_r, "Rainfall erosivity: number or grid")->required();
  rusle->add_option("--p", rusle_p, "Support practice: number or grid [1]");
  rusle->add_option("--k", rusle_in.k, "K grid");
  rusle->add_option("--soil", rusle_in.soil, "Soil class grid (with --k-table)");
  rusle->add_option("--k-table", rusle_in.k_table, "Soil code to K lookup");
  rusle->add_option("--c", rusle_in.c, "C grid");
  rusle->add_option("--landcover", rusle_landcover, "Land cover class grid (with --c-table)");
  rusle->add_option("--c-table", rusle_in.c_table, "Land cover code to C lookup");
  rusle->add_option("--ls", rusle_in.ls, "LS grid [derived from --dem]");
  rusle->add_option("--dem", rusle_dem, "DEM grid, frame for --ls derivation");
  rusle->add_option("-o,--out", rusle_out, "Output directory");

  SynthArgs synth_args;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a deterministic synthetic catchment case");
  synth->add_option("--seed", synth_args.seed, "Random seed [1]");
  synth->add_option("--rows", synth_args.rows, "Rows [64]");
  synth->add_option("--cols", synth_args.cols, "Columns [64]");
  synth->add_option("--relief", synth_args.relief, "Terrain relief in metres [60]");
  synth->add_option("--candidate-fraction", synth_args.candidate_fraction, "Share of candidate cells in (0, 1] [0.35]");
  synth->add_option("--cell-size", synth_args.options.cell_size, "Cell size in metres [30]");
  synth->add_flag("--allow-pits", synth_args.options.allow_pits, "Keep local depressions");
  synth->add_option("-o,--out", synth_out, "Output directory");

  CropArgs crop_args;
  std::string crop_window, crop_out;
  std::vector<std::string> crop_in;
  auto* cropc = app.add_subcommand("crop", "Cut the same window out of one or more grids");
  cropc->add_option("--in", crop_in, "Input grids");
  cropc->add_option("--case", crop_args.case_dir, "Case directory with camf.cfg; crops every grid it names");
  cropc->add_option("--window", crop_window, "row0,col0,rows,cols");
  cropc->add_option("--divisor", crop_args.divisor, "Keep ceil(rows/d) x ceil(cols/d) around the outlet");
  cropc->add_option("--outlet", crop_args.outlet, "Window centre for --divisor: auto or row,col [auto]");
  cropc->add_option("-o,--out", crop_out, "Output directory");

  BenchArgs bench_args;
  std::string bench_sizes, bench_csv;
  bool skip_naive = false;
  auto* bench = app.add_subcommand("bench", "Time base flow and one selection iteration, SFD and MFD");
  bench->add_option("--sizes", bench_sizes, "Comma-separated ROWSxCOLS list [89x87,178x173]");
  bench->add_option("--seed", bench_args.seed, "Synthetic case seed [1]");
  bench->add_option("--repeats", bench_args.repeats, "Runs per measurement; the median is reported [3]")
      ->check(CLI::Range(1, 1000));
  bench->add_option("--max-candidates", bench_args.max_candidates, "Cap on evaluated candidates, 0 = all [0]");
  bench->add_option("--candidate-fraction", bench_args.candidate_fraction, "Share of candidate cells [0.35]");
  bench->add_option("--threads", bench_args.threads, "Worker threads [1]");
  bench->add_flag("--no-naive", skip_naive, "Skip the full-recomputation baseline");
  bench->add_option("--csv", bench_csv, "Report path [<out>/bench.csv]");
  std::string bench_out;
  bench->add_option("-o,--out", bench_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "camf: " << e.what() << "\n";
    for (const CLI::App* sub : app.get_subcommands()) {
      err << "see 'camf " << sub->get_name() << " --help'\n";
    }
    return kConfigError;
  }

  try {
    if (*baseflow) {
      const RunConfig cfg = build_config(base_flags);
      (void)cmd_baseflow(cfg, resolve_output_dir(base_flags.out, cfg.output_dir), dump_deliveries, out);
    } else if (*optimize) {
      const RunConfig cfg = build_config(opt_flags);
      (void)cmd_optimize(cfg, resolve_output_dir(opt_flags.out, cfg.output_dir), out);
    } else if (*rusle) {
      rusle_in.r = FactorSource::parse(rusle_r);
      rusle_in.p = FactorSource::parse(rusle_p);
      (void)cmd_rusle(rusle_in, rusle_dem, rusle_landcover, resolve_output_dir(rusle_out, {}), out);
    } else if (*synth) {
      (void)cmd_synth(synth_args, resolve_output_dir(synth_out, {}), out);
    } else if (*cropc) {
      for (const std::string& p : crop_in) {
        crop_args.inputs.emplace_back(p);
      }
      if (!crop_window.empty()) {
        std::vector<std::int32_t> v;
        std::stringstream ss(crop_window);
        std::string item;
        while (std::getline(ss, item, ',')) {
          try {
            v.push_back(std::stoi(item));
          } catch (const std::exception&) {
            throw ConfigError("--window expects integers, got '" + crop_window + "'");
          }
        }
        if (v.size() != 4) {
          throw ConfigError("--window expects row0,col0,rows,cols");
        }
        crop_args.window = CropWindow{v[0], v[1], v[2], v[3]};
      }
      (void)cmd_crop(crop_args, resolve_output_dir(crop_out, {}), out);
    } else if (*bench) {
      if (!bench_sizes.empty()) {
        bench_args.sizes = parse_sizes(bench_sizes);
      }
      bench_args.naive = !skip_naive;
      const std::filesystem::path csv =
          bench_csv.empty() ? resolve_output_dir(bench_out, {}) / "bench.csv" : std::filesystem::path(bench_csv);
      (void)cmd_bench(bench_args, csv, out);
    }
  } catch (const ConfigError& e) {
    err << "camf: configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    err << "camf: I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const DomainError& e) {
    err << "camf: numeric domain error: " << e.what() << "\n";
    return kDomainError;
  } catch (const std::exception& e) {
    err << "camf: internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}

} // namespace camf::cli
