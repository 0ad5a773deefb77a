#pragma once

#include "camf/rusle.hpp"
#include "camf/selection.hpp"
#include "camf/synthcase.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace camf::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kConfigError = 2, kIoError = 3, kDomainError = 4 };

/// A RUSLE factor given as a number or as a raster path.
struct FactorSource {
  std::optional<double> value;
  std::filesystem::path raster;

  [[nodiscard]] bool empty() const { return !value && raster.empty(); }
  /// A number if `text` parses as one, otherwise a path.
  static FactorSource parse(const std::string& text);
};

/// Inputs for computing initial production from soil loss factors.
struct RusleInputs {
  FactorSource r;
  FactorSource p;
  std::filesystem::path k;  ///< K raster, or
  std::filesystem::path soil, k_table;  ///< soil classes plus lookup
  std::filesystem::path c;  ///< C raster, or land cover plus `c_table`
  std::filesystem::path c_table;
  std::filesystem::path ls;  ///< computed from the DEM when empty

  [[nodiscard]] bool configured() const { return !r.empty(); }
};

struct RunConfig {
  Routing method = Routing::mfd;
  std::filesystem::path dem;
  std::filesystem::path alpha1;  ///< ton/ha/yr; computed from `rusle` when empty
  std::filesystem::path gamma1;  ///< normalised DEM slope when empty
  std::filesystem::path landcover;
  std::vector<std::int32_t> candidate_classes;
  std::filesystem::path candidate_mask;
  std::string derivation = "tabacay";  ///< "tabacay", "maarkebeek" or a file path
  std::vector<CellIndex> outlets;      ///< empty: automatic
  std::optional<std::int64_t> cells;
  std::optional<double> cells_percent;  ///< of the candidate count, rounded down
  std::optional<double> target_syr;
  std::filesystem::path output_dir;
  Engine engine = Engine::suffix;
  DrainMode drain = DrainMode::per_successor;
  std::int32_t threads = 1;
  RusleInputs rusle;

  /// Reads a key-value file; relative paths resolve against its directory.
  static RunConfig load(const std::filesystem::path& path);
  /// Applies one key; `base` resolves relative paths.
  void set(const std::string& key, const std::string& value, const std::filesystem::path& base = {});

  /// Requires a DEM, a production source and at most one stop criterion
  /// (exactly one when `need_stop`).
  void validate(bool need_stop) const;
};

[[nodiscard]] Routing parse_method(const std::string& s);
[[nodiscard]] Engine parse_engine(const std::string& s);
[[nodiscard]] DrainMode parse_drain(const std::string& s);
[[nodiscard]] const char* to_string(Routing r);
[[nodiscard]] const char* to_string(Engine e);
/// "auto", "r,c" or "r,c;r,c;...".
[[nodiscard]] std::vector<CellIndex> parse_outlets(const std::string& s);
[[nodiscard]] ParamDerivation resolve_derivation(const std::string& name);

/// Flag, then CAMF_OUTPUT_DIR, then the config value, then "camf_out".
[[nodiscard]] std::filesystem::path resolve_output_dir(const std::filesystem::path& flag,
                                                       const std::filesystem::path& configured);

/// Everything the sweep and the selection need, loaded from a config.
struct Inputs {
  RasterGrid dem;
  RasterGrid alpha1;  ///< ton/ha/yr
  FlowGraph graph;
  CellParams params;
  CandidateSet candidates;
  std::vector<std::int32_t> outlets;
};

[[nodiscard]] Inputs load_inputs(const RunConfig& config);

/// Soil loss raster (ton/ha/yr) from the configured factors.
[[nodiscard]] RasterGrid compute_rusle(const RusleInputs& in, const RasterGrid& dem, const std::filesystem::path& landcover);

struct BaseflowReport {
  double sy = 0.0;
  std::int32_t active_cells = 0;
  std::int32_t candidate_cells = 0;
  std::vector<std::int32_t> outlets;
};

/// Writes sa.asc and baseflow.txt (plus deliveries.csv when asked).
BaseflowReport cmd_baseflow(const RunConfig& config, const std::filesystem::path& out_dir, bool dump_deliveries,
                            std::ostream& log);

/// Writes trajectory.csv, selection.asc, summary.txt and summary.json.
SelectionResult cmd_optimize(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

/// Writes alpha1.asc.
RasterGrid cmd_rusle(const RusleInputs& in, const std::filesystem::path& dem, const std::filesystem::path& landcover,
                     const std::filesystem::path& out_dir, std::ostream& log);

struct SynthArgs {
  std::uint64_t seed = 1;
  std::int32_t rows = 64;
  std::int32_t cols = 64;
  double relief = 60.0;
  double candidate_fraction = 0.35;
  SynthOptions options;
};

SyntheticCase cmd_synth(const SynthArgs& args, const std::filesystem::path& out_dir, std::ostream& log);

struct CropWindow {
  std::int32_t row0 = 0;
  std::int32_t col0 = 0;
  std::int32_t rows = 0;
  std::int32_t cols = 0;
};

/// ceil(rows / divisor) x ceil(cols / divisor), centred on `outlet` and clamped to the grid.
[[nodiscard]] CropWindow divisor_window(std::int32_t rows, std::int32_t cols, CellIndex outlet, std::int32_t divisor);

struct CropArgs {
  std::vector<std::filesystem::path> inputs;  ///< grids cropped to the same window
  std::filesystem::path case_dir;              ///< or a case directory with camf.cfg
  std::optional<CropWindow> window;
  std::int32_t divisor = 0;
  std::string outlet = "auto";  ///< centre for divisor windows
};

CropWindow cmd_crop(const CropArgs& args, const std::filesystem::path& out_dir, std::ostream& log);

struct BenchArgs {
  std::vector<std::pair<std::int32_t, std::int32_t>> sizes{{89, 87}, {178, 173}};
  std::uint64_t seed = 1;
  double relief = 60.0;
  double candidate_fraction = 0.35;
  std::int32_t repeats = 3;
  std::int64_t max_candidates = 0;  ///< 0: all
  bool naive = true;
  std::int32_t threads = 1;
};

struct BenchTiming {
  double base = 0.0;
  double iteration = 0.0;
  double naive = 0.0;  ///< NaN when skipped
};

struct BenchRow {
  std::int32_t rows = 0;
  std::int32_t cols = 0;
  std::int32_t cells = 0;
  std::int32_t active = 0;
  std::int64_t candidates = 0;
  BenchTiming sfd;
  BenchTiming mfd;
};

[[nodiscard]] std::vector<std::pair<std::int32_t, std::int32_t>> parse_sizes(const std::string& s);
std::vector<BenchRow> cmd_bench(const BenchArgs& args, const std::filesystem::path& csv, std::ostream& log);
void write_bench_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path);

/// Median wall time in seconds of `repeats` runs of `fn`.
template <typename Fn>
double median_seconds(std::int32_t repeats, Fn&& fn);

/// Full command line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace camf::cli

#include <algorithm>
#include <chrono>

template <typename Fn>
double camf::cli::median_seconds(std::int32_t repeats, Fn&& fn) {
  std::vector<double> t;
  for (std::int32_t i = 0; i < std::max(1, repeats); ++i) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(t.begin(), t.end());
  const std::size_t n = t.size();
  return n % 2 ? t[n / 2] : 0.5 * (t[n / 2 - 1] + t[n / 2]);
}
