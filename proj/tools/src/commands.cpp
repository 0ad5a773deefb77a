#include "camf/cli/commands.hpp"

#include "camf/error.hpp"
#include "camf/keyvalue.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace camf::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) {
    return {};
  }
  return s.substr(first, s.find_last_not_of(" \t") - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    out.push_back(trim(item));
  }
  return out;
}

std::optional<double> try_real(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    return std::nullopt;
  }
  return v;
}

double real_of(const std::string& key, const std::string& s) {
  if (const auto v = try_real(s)) {
    return *v;
  }
  throw ConfigError("'" + key + "' expects a number, got '" + s + "'");
}

std::int64_t integer_of(const std::string& key, const std::string& s) {
  std::int64_t v = 0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError("'" + key + "' expects an integer, got '" + s + "'");
  }
  return v;
}

fs::path resolve(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::vector<std::int32_t> linear_outlets(const FlowGraph& graph, const std::vector<CellIndex>& outlets) {
  std::vector<std::int32_t> out;
  for (const CellIndex& o : outlets) {
    if (o.row < 0 || o.row >= graph.rows() || o.col < 0 || o.col >= graph.cols()) {
      throw ConfigError("outlet (" + std::to_string(o.row) + "," + std::to_string(o.col) + ") is outside the grid");
    }
    out.push_back(o.linear(graph.cols()));
  }
  if (out.empty()) {
    out.push_back(default_outlet(graph));
  }
  validate_outlets(graph, out);
  return out;
}

Factor factor_of(const FactorSource& f, double fallback) {
  if (f.value) {
    return *f.value;
  }
  if (f.raster.empty()) {
    return fallback;
  }
  return read_ascii_grid(f.raster);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  }
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) {
    throw IoError("cannot write '" + p.string() + "'");
  }
  return out;
}

} // namespace

FactorSource FactorSource::parse(const std::string& text) {
  FactorSource f;
  if (const auto v = try_real(text)) {
    f.value = *v;
  } else {
    f.raster = text;
  }
  return f;
}

Routing parse_method(const std::string& s) {
  if (s == "sfd" || s == "d8") return Routing::sfd;
  if (s == "mfd" || s == "fd8") return Routing::mfd;
  throw ConfigError("method must be 'sfd' or 'mfd', got '" + s + "'");
}

Engine parse_engine(const std::string& s) {
  if (s == "suffix") return Engine::suffix;
  if (s == "suffix-full") return Engine::suffix_full;
  if (s == "sfd-path") return Engine::sfd_path;
  if (s == "naive") return Engine::naive;
  throw ConfigError("engine must be suffix, suffix-full, sfd-path or naive, got '" + s + "'");
}

DrainMode parse_drain(const std::string& s) {
  if (s == "per-successor") return DrainMode::per_successor;
  if (s == "fixed-outflow") return DrainMode::fixed_outflow;
  throw ConfigError("drain must be per-successor or fixed-outflow, got '" + s + "'");
}

const char* to_string(Routing r) { return r == Routing::sfd ? "sfd" : "mfd"; }

const char* to_string(Engine e) {
  switch (e) {
  case Engine::suffix: return "suffix";
  case Engine::suffix_full: return "suffix-full";
  case Engine::sfd_path: return "sfd-path";
  case Engine::naive: return "naive";
  }
  return "?";
}

std::vector<CellIndex> parse_outlets(const std::string& s) {
  std::vector<CellIndex> out;
  if (trim(s) == "auto" || trim(s).empty()) {
    return out;
  }
  for (const std::string& item : split(s, ';')) {
    const auto rc = split(item, ',');
    if (rc.size() != 2) {
      throw ConfigError("outlet must be 'auto' or 'row,col[;row,col...]', got '" + s + "'");
    }
    out.push_back({static_cast<std::int32_t>(integer_of("outlet", rc[0])),
                   static_cast<std::int32_t>(integer_of("outlet", rc[1]))});
  }
  return out;
}

ParamDerivation resolve_derivation(const std::string& name) {
  if (name == "tabacay") return ParamDerivation::tabacay();
  if (name == "maarkebeek") return ParamDerivation::maarkebeek();
  return ParamDerivation::load(name);
}

fs::path resolve_output_dir(const fs::path& flag, const fs::path& configured) {
  if (!flag.empty()) {
    return flag;
  }
  if (const char* env = std::getenv("CAMF_OUTPUT_DIR"); env && *env) {
    return env;
  }
  return configured.empty() ? fs::path("camf_out") : configured;
}

RunConfig RunConfig::load(const fs::path& path) {
  RunConfig cfg;
  const fs::path base = path.parent_path();
  for (const KeyValue& kv : read_key_values(path)) {
    try {
      cfg.set(kv.key, kv.value, base);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(kv.line) + ": " + e.what());
    }
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value, const fs::path& base) {
  auto path = [&] { return resolve(base, value); };
  if (key == "method") method = parse_method(value);
  else if (key == "dem") dem = path();
  else if (key == "alpha1") alpha1 = path();
  else if (key == "gamma1") gamma1 = path();
  else if (key == "landcover") landcover = path();
  else if (key == "candidates") candidate_mask = path();
  else if (key == "candidate_classes") {
    candidate_classes.clear();
    for (const std::string& c : split(value, ',')) {
      candidate_classes.push_back(static_cast<std::int32_t>(integer_of(key, c)));
    }
  } else if (key == "derivation") {
    derivation = value == "tabacay" || value == "maarkebeek" ? value : path().string();
  } else if (key == "outlet") outlets = parse_outlets(value);
  else if (key == "cells") {
    cells.reset();
    cells_percent.reset();
    if (!value.empty() && value.back() == '%') {
      cells_percent = real_of(key, trim(value.substr(0, value.size() - 1)));
    } else {
      cells = integer_of(key, value);
    }
  } else if (key == "target_syr") target_syr = real_of(key, value);
  else if (key == "output_dir") output_dir = path();
  else if (key == "engine") engine = parse_engine(value);
  else if (key == "drain") drain = parse_drain(value);
  else if (key == "threads") threads = static_cast<std::int32_t>(integer_of(key, value));
  else if (key == "rusle_r" || key == "rusle_p") {
    FactorSource f = FactorSource::parse(value);
    if (!f.raster.empty()) {
      f.raster = path();
    }
    (key == "rusle_r" ? rusle.r : rusle.p) = f;
  } else if (key == "k") rusle.k = path();
  else if (key == "soil") rusle.soil = path();
  else if (key == "k_table") rusle.k_table = path();
  else if (key == "c") rusle.c = path();
  else if (key == "c_table") rusle.c_table = path();
  else if (key == "ls") rusle.ls = path();
  else throw ConfigError("unknown configuration key '" + key + "'");
}

void RunConfig::validate(bool need_stop) const {
  if (dem.empty()) {
    throw ConfigError("no DEM configured (key 'dem' or --dem)");
  }
  if (alpha1.empty() && !rusle.configured()) {
    throw ConfigError("no sediment production configured: set 'alpha1' or the RUSLE keys (rusle_r, ...)");
  }
  const int stops = (cells || cells_percent ? 1 : 0) + (target_syr ? 1 : 0);
  if (stops > 1) {
    throw ConfigError("set exactly one stop criterion: 'cells' or 'target_syr', not both");
  }
  if (need_stop && stops == 0) {
    throw ConfigError("no stop criterion: set 'cells' (count or percent) or 'target_syr'");
  }
  if (cells && *cells < 0) {
    throw ConfigError("'cells' must be non-negative");
  }
  if (cells_percent && !(*cells_percent >= 0.0 && *cells_percent <= 100.0)) {
    throw ConfigError("'cells' percentage must lie in [0, 100]");
  }
  if (target_syr && !(*target_syr >= 0.0)) {
    throw ConfigError("'target_syr' must be non-negative");
  }
  if (threads < 1) {
    throw ConfigError("'threads' must be at least 1");
  }
  if (!candidate_classes.empty() && landcover.empty()) {
    throw ConfigError("'candidate_classes' needs a 'landcover' raster");
  }
}

RasterGrid compute_rusle(const RusleInputs& in, const RasterGrid& dem, const fs::path& landcover) {
  if (!in.configured()) {
    throw ConfigError("RUSLE factor R is not set");
  }
  RasterGrid k;
  if (!in.k.empty()) {
    k = read_ascii_grid(in.k);
  } else if (!in.soil.empty() && !in.k_table.empty()) {
    k = classify(read_ascii_grid(in.soil), FactorTable::load(in.k_table));
  } else {
    throw ConfigError("RUSLE factor K needs a K raster or a soil raster with a K table");
  }
  RasterGrid c;
  if (!in.c.empty()) {
    c = read_ascii_grid(in.c);
  } else if (!landcover.empty() && !in.c_table.empty()) {
    c = classify(read_ascii_grid(landcover), FactorTable::load(in.c_table));
  } else {
    throw ConfigError("RUSLE factor C needs a C raster or a land cover raster with a C table");
  }
  const RasterGrid ls = in.ls.empty() ? simple_ls(dem) : read_ascii_grid(in.ls);
  return rusle_alpha(factor_of(in.r, 1.0), k, ls, c, factor_of(in.p, 1.0));
}

Inputs load_inputs(const RunConfig& config) {
  Inputs in;
  in.dem = read_ascii_grid(config.dem);
  in.alpha1 = config.alpha1.empty() ? compute_rusle(config.rusle, in.dem, config.landcover)
                                    : read_ascii_grid(config.alpha1);
  if (!in.alpha1.same_frame(in.dem)) {
    throw ConfigError("production raster is not aligned with the DEM");
  }
  // Cells without production data take no part in routing.
  RasterGrid dem = in.dem;
  for (std::int32_t i = 0; i < dem.size(); ++i) {
    if (!in.alpha1.is_active(i)) {
      dem[i] = dem.nodata_value();
    }
  }
  in.dem = dem;
  const RasterGrid gamma1 = config.gamma1.empty() ? gamma1_from_dem(in.dem) : read_ascii_grid(config.gamma1);
  if (!gamma1.same_frame(in.dem)) {
    throw ConfigError("flow factor raster is not aligned with the DEM");
  }
  in.graph = build_flow_graph(in.dem, config.method);
  in.params = derive_params(in.alpha1, gamma1, resolve_derivation(config.derivation), in.dem.cell_area_ha());
  in.outlets = linear_outlets(in.graph, config.outlets);

  std::vector<std::int32_t> cells;
  if (!config.candidate_mask.empty()) {
    const RasterGrid mask = read_ascii_grid(config.candidate_mask);
    if (!mask.same_frame(in.dem)) {
      throw ConfigError("candidate mask is not aligned with the DEM");
    }
    cells = CandidateSet::from_mask(mask).cells;
  }
  if (!config.candidate_classes.empty()) {
    const RasterGrid classes = read_ascii_grid(config.landcover);
    if (!classes.same_frame(in.dem)) {
      throw ConfigError("land cover raster is not aligned with the DEM");
    }
    const auto extra = CandidateSet::from_classes(classes, config.candidate_classes).cells;
    cells.insert(cells.end(), extra.begin(), extra.end());
  }
  std::erase_if(cells, [&](std::int32_t c) { return !in.graph.is_active(c); });
  in.candidates = CandidateSet::from_cells(in.graph, std::move(cells));
  return in;
}

BaseflowReport cmd_baseflow(const RunConfig& config, const fs::path& out_dir, bool dump_deliveries,
                            std::ostream& log) {
  config.validate(false);
  const Inputs in = load_inputs(config);
  const std::vector<std::uint8_t> none(static_cast<std::size_t>(in.graph.cell_count()), 0);
  const TransportState st = compute_base_flow(in.graph, in.params, none, in.outlets, config.drain);

  ensure_dir(out_dir);
  write_ascii_grid(sa_raster(st, in.dem), out_dir / "sa.asc");
  if (dump_deliveries) {
    write_deliveries_csv(in.graph, st, out_dir / "deliveries.csv");
  }
  BaseflowReport report{st.sy, in.graph.active_count(), static_cast<std::int32_t>(in.candidates.size()), in.outlets};
  std::ofstream out = open_out(out_dir / "baseflow.txt");
  out << "method = " << to_string(config.method) << "\n"
      << "sy_ton_per_yr = " << format("%.17g", st.sy) << "\n"
      << "active_cells = " << report.active_cells << "\n"
      << "candidate_cells = " << report.candidate_cells << "\n"
      << "edges = " << in.graph.edge_count() << "\n";
  for (const std::int32_t o : in.outlets) {
    const CellIndex idx = in.graph.index(o);
    out << "outlet = " << idx.row << "," << idx.col << "\n";
  }
  log << "SY (" << to_string(config.method) << ") = " << format("%.6f", st.sy) << " ton/yr over "
      << report.active_cells << " active cells, " << report.candidate_cells << " candidates\n";
  return report;
}

SelectionResult cmd_optimize(const RunConfig& config, const fs::path& out_dir, std::ostream& log) {
  config.validate(true);
  const Inputs in = load_inputs(config);
  StopCriterion stop;
  if (config.cells) {
    stop.count = *config.cells;
  } else if (config.cells_percent) {
    stop.count = static_cast<std::int64_t>(std::floor(*config.cells_percent / 100.0 *
                                                      static_cast<double>(in.candidates.size())));
  } else {
    stop.target_syr = *config.target_syr;
  }
  if (in.candidates.size() == 0 && stop.count.value_or(1) > 0) {
    throw ConfigError("no candidate cells: set 'candidate_classes' with 'landcover', or 'candidates'");
  }
  const SelectionResult r =
      select(in.graph, in.params, in.candidates, stop, in.outlets, {config.engine, config.drain, config.threads});

  ensure_dir(out_dir);
  write_trajectory_csv(r, in.graph, out_dir / "trajectory.csv");
  write_ascii_grid(selection_raster(r, in.dem), out_dir / "selection.asc");
  std::ofstream txt = open_out(out_dir / "summary.txt");
  txt << "method = " << to_string(config.method) << "\n"
      << "engine = " << to_string(config.engine) << "\n"
      << "candidate_cells = " << in.candidates.size() << "\n"
      << "selected_cells = " << r.selected.size() << "\n"
      << "iterations = " << r.iterations.size() << "\n"
      << "sy_base = " << format("%.6f", r.sy_base) << "\n"
      << "sy_final = " << format("%.6f", r.sy_final) << "\n"
      << "syr = " << format("%.6f", r.cumulative_syr()) << "\n"
      << "percent_syr = " << format("%.2f", r.percent_syr()) << "\n"
      << "stop = " << to_string(r.stop) << "\n";

  nlohmann::json j;
  j["method"] = to_string(config.method);
  j["engine"] = to_string(config.engine);
  j["candidate_cells"] = in.candidates.size();
  j["sy_base"] = r.sy_base;
  j["sy_final"] = r.sy_final;
  j["syr"] = r.cumulative_syr();
  j["percent_syr"] = r.percent_syr();
  j["stop"] = to_string(r.stop);
  auto& sel = j["selected"] = nlohmann::json::array();
  for (const std::int32_t c : r.selected) {
    const CellIndex idx = in.graph.index(c);
    sel.push_back({idx.row, idx.col});
  }
  open_out(out_dir / "summary.json") << j.dump(2) << "\n";

  log << r.selected.size() << " cells selected in " << r.iterations.size() << " iterations; SY "
      << format("%.6f", r.sy_base) << " -> " << format("%.6f", r.sy_final) << " ton/yr (SYR "
      << format("%.2f", r.percent_syr()) << "%), stop: " << to_string(r.stop) << "\n";
  return r;
}

RasterGrid cmd_rusle(const RusleInputs& in, const fs::path& dem, const fs::path& landcover, const fs::path& out_dir,
                     std::ostream& log) {
  if (dem.empty() && in.ls.empty()) {
    throw ConfigError("rusle needs an LS raster (--ls) or a DEM (--dem) to derive it from");
  }
  RasterGrid frame;
  if (!dem.empty()) {
    frame = read_ascii_grid(dem);
  }
  const RasterGrid alpha = compute_rusle(in, frame, landcover);
  ensure_dir(out_dir);
  write_ascii_grid(alpha, out_dir / "alpha1.asc");
  double sum = 0.0;
  for (std::int32_t i = 0; i < alpha.size(); ++i) {
    sum += alpha.is_active(i) ? alpha[i] : 0.0;
  }
  log << "alpha1 written for " << alpha.active_count() << " cells, mean "
      << format("%.6f", alpha.active_count() ? sum / alpha.active_count() : 0.0) << " ton/ha/yr\n";
  return alpha;
}

SyntheticCase cmd_synth(const SynthArgs& args, const fs::path& out_dir, std::ostream& log) {
  const SyntheticCase c = generate(args.seed, args.rows, args.cols, args.relief, args.candidate_fraction, args.options);
  write_case(c, out_dir);
  log << "synthetic case " << args.rows << "x" << args.cols << " (" << c.dem.size() << " cells, "
      << c.candidate_count() << " candidates) written to " << out_dir.string() << "\n";
  return c;
}

CropWindow divisor_window(std::int32_t rows, std::int32_t cols, CellIndex outlet, std::int32_t divisor) {
  if (divisor < 1) {
    throw ConfigError("crop divisor must be at least 1");
  }
  CropWindow w;
  w.rows = (rows + divisor - 1) / divisor;
  w.cols = (cols + divisor - 1) / divisor;
  w.row0 = std::clamp(outlet.row - w.rows / 2, 0, rows - w.rows);
  w.col0 = std::clamp(outlet.col - w.cols / 2, 0, cols - w.cols);
  return w;
}

CropWindow cmd_crop(const CropArgs& args, const fs::path& out_dir, std::ostream& log) {
  static const std::set<std::string> raster_keys{"dem", "alpha1", "gamma1", "landcover", "candidates",
                                                 "soil", "k", "c", "ls"};
  static const std::set<std::string> path_keys{"k_table", "c_table", "derivation"};

  std::vector<KeyValue> cfg;
  std::vector<fs::path> inputs = args.inputs;
  fs::path dem_path;
  if (!args.case_dir.empty()) {
    cfg = read_key_values(args.case_dir / "camf.cfg");
    for (const KeyValue& kv : cfg) {
      if (raster_keys.count(kv.key)) {
        inputs.push_back(resolve(args.case_dir, kv.value));
        if (kv.key == "dem") {
          dem_path = inputs.back();
        }
      }
    }
  }
  if (inputs.empty()) {
    throw ConfigError("crop needs input grids (--in) or a case directory (--case)");
  }
  if (dem_path.empty()) {
    dem_path = inputs.front();
  }
  const RasterGrid first = read_ascii_grid(dem_path);

  CropWindow w;
  if (args.window) {
    w = *args.window;
  } else if (args.divisor > 0) {
    std::vector<CellIndex> outlets = parse_outlets(args.outlet);
    if (outlets.empty()) {
      for (const KeyValue& kv : cfg) {
        if (kv.key == "outlet") {
          outlets = parse_outlets(kv.value);
        }
      }
    }
    if (outlets.empty()) {
      const FlowGraph g = build_flow_graph(first, Routing::sfd);
      outlets.push_back(g.index(default_outlet(g)));
    }
    w = divisor_window(first.rows(), first.cols(), outlets.front(), args.divisor);
  } else {
    throw ConfigError("crop needs a window (--window r0,c0,rows,cols) or a divisor (--divisor)");
  }

  ensure_dir(out_dir);
  std::map<fs::path, fs::path> written;
  for (const fs::path& p : inputs) {
    if (written.count(p)) {
      continue;
    }
    const fs::path target = out_dir / p.filename();
    write_ascii_grid(crop(read_ascii_grid(p), w.row0, w.col0, w.rows, w.cols), target);
    written[p] = target;
  }
  if (!cfg.empty()) {
    std::ofstream out = open_out(out_dir / "camf.cfg");
    out << "# cropped window " << w.row0 << "," << w.col0 << " size " << w.rows << "x" << w.cols << "\n";
    for (const KeyValue& kv : cfg) {
      if (raster_keys.count(kv.key)) {
        out << kv.key << " = " << fs::path(kv.value).filename().string() << "\n";
      } else if (path_keys.count(kv.key) && kv.value != "tabacay" && kv.value != "maarkebeek") {
        out << kv.key << " = " << fs::absolute(resolve(args.case_dir, kv.value)).string() << "\n";
      } else if (kv.key == "outlet") {
        std::string shifted;
        for (const CellIndex& o : parse_outlets(kv.value)) {
          const CellIndex s{o.row - w.row0, o.col - w.col0};
          if (s.row >= 0 && s.row < w.rows && s.col >= 0 && s.col < w.cols) {
            shifted += (shifted.empty() ? "" : ";") + std::to_string(s.row) + "," + std::to_string(s.col);
          }
        }
        out << "outlet = " << (shifted.empty() ? "auto" : shifted) << "\n";
      } else {
        out << kv.key << " = " << kv.value << "\n";
      }
    }
  }
  log << "cropped " << written.size() << " grid(s) to rows " << w.row0 << ".." << w.row0 + w.rows - 1 << ", cols "
      << w.col0 << ".." << w.col0 + w.cols - 1 << " (" << w.rows << "x" << w.cols << " = "
      << static_cast<std::int64_t>(w.rows) * w.cols << " cells)\n";
  return w;
}

std::vector<std::pair<std::int32_t, std::int32_t>> parse_sizes(const std::string& s) {
  std::vector<std::pair<std::int32_t, std::int32_t>> out;
  for (const std::string& item : split(s, ',')) {
    const auto x = item.find('x');
    if (x == std::string::npos) {
      throw ConfigError("size must look like ROWSxCOLS, got '" + item + "'");
    }
    out.emplace_back(static_cast<std::int32_t>(integer_of("sizes", item.substr(0, x))),
                     static_cast<std::int32_t>(integer_of("sizes", item.substr(x + 1))));
  }
  if (out.empty()) {
    throw ConfigError("no sizes given");
  }
  return out;
}

std::vector<BenchRow> cmd_bench(const BenchArgs& args, const fs::path& csv, std::ostream& log) {
  std::vector<BenchRow> rows;
  for (const auto& [r, c] : args.sizes) {
    const SyntheticCase sc = generate(args.seed, r, c, args.relief, args.candidate_fraction);
    const CellParams params = derive_params(sc.alpha1, sc.gamma1, sc.derivation, sc.dem.cell_area_ha());
    BenchRow row;
    row.rows = r;
    row.cols = c;
    row.cells = sc.dem.size();
    row.active = sc.dem.active_count();
    for (const Routing method : {Routing::sfd, Routing::mfd}) {
      const FlowGraph graph = build_flow_graph(sc.dem, method);
      const std::vector<std::int32_t> codes{kSynthCandidateClass};
      CandidateSet cand = CandidateSet::from_classes(sc.landcover, codes);
      if (args.max_candidates > 0 && static_cast<std::int64_t>(cand.size()) > args.max_candidates) {
        // Evenly spaced subset keeps the spatial spread of the full set.
        std::vector<std::int32_t> kept;
        for (std::int64_t k = 0; k < args.max_candidates; ++k) {
          kept.push_back(cand.cells[static_cast<std::size_t>(k * static_cast<std::int64_t>(cand.size()) /
                                                             args.max_candidates)]);
        }
        cand = CandidateSet::from_cells(graph, kept);
      }
      row.candidates = static_cast<std::int64_t>(cand.size());
      const std::vector<std::int32_t> outlets{default_outlet(graph)};
      const std::vector<std::uint8_t> none(static_cast<std::size_t>(graph.cell_count()), 0);
      TransportState base;
      BenchTiming& t = method == Routing::sfd ? row.sfd : row.mfd;
      t.base = median_seconds(args.repeats, [&] { base = compute_base_flow(graph, params, none, outlets); });
      std::vector<EvalScratch> workers(static_cast<std::size_t>(std::max(1, args.threads)));
      t.iteration = median_seconds(args.repeats, [&] {
        (void)evaluate_all(base, graph, params, cand, workers, Engine::suffix);
      });
      t.naive = args.naive ? median_seconds(args.repeats, [&] {
        (void)evaluate_all(base, graph, params, cand, workers, Engine::naive);
      })
                           : std::numeric_limits<double>::quiet_NaN();
      log << r << "x" << c << " " << to_string(method) << ": base " << format("%.6f", t.base) << " s, iteration "
          << format("%.6f", t.iteration) << " s";
      if (args.naive) {
        log << ", naive " << format("%.6f", t.naive) << " s";
      }
      log << "\n";
    }
    rows.push_back(row);
  }
  write_bench_csv(rows, csv);
  return rows;
}

void write_bench_csv(const std::vector<BenchRow>& rows, const fs::path& path) {
  if (path.has_parent_path()) {
    ensure_dir(path.parent_path());
  }
  std::ofstream out = open_out(path);
  out << "rows,cols,cells,active_cells,candidates,"
         "base_sfd_s,base_mfd_s,iter_sfd_s,iter_mfd_s,naive_sfd_s,naive_mfd_s,"
         "base_ratio_sfd,base_ratio_mfd,iter_ratio_sfd,iter_ratio_mfd,"
         "mfd_over_sfd_base,mfd_over_sfd_iter,naive_over_replay_sfd,naive_over_replay_mfd\n";
  auto num = [](double v) { return std::isnan(v) ? std::string() : format("%.6g", v); };
  for (const BenchRow& r : rows) {
    // Ratio columns compare each size with the first (smallest) one.
    const BenchRow& f = rows.front();
    out << r.rows << ',' << r.cols << ',' << r.cells << ',' << r.active << ',' << r.candidates << ','
        << num(r.sfd.base) << ',' << num(r.mfd.base) << ',' << num(r.sfd.iteration) << ','
        << num(r.mfd.iteration) << ',' << num(r.sfd.naive) << ',' << num(r.mfd.naive) << ','
        << num(r.sfd.base / f.sfd.base) << ',' << num(r.mfd.base / f.mfd.base) << ','
        << num(r.sfd.iteration / f.sfd.iteration) << ',' << num(r.mfd.iteration / f.mfd.iteration) << ','
        << num(r.mfd.base / r.sfd.base) << ',' << num(r.mfd.iteration / r.sfd.iteration) << ','
        << num(r.sfd.naive / r.sfd.iteration) << ',' << num(r.mfd.naive / r.mfd.iteration) << '\n';
  }
}

} // namespace camf::cli
