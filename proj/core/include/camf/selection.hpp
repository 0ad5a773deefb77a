#pragma once

#include "camf/transport.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace camf {

/// Cells on which afforestation is permitted, ascending by linear index.
struct CandidateSet {
  std::vector<std::int32_t> cells;
  std::vector<std::uint8_t> selected;  ///< parallel to `cells`

  /// Deduplicates and sorts; every cell must be active in `graph`.
  static CandidateSet from_cells(const FlowGraph& graph, std::vector<std::int32_t> cells);
  /// Active cells whose class code is one of `codes`.
  static CandidateSet from_classes(const RasterGrid& classes, std::span<const std::int32_t> codes);
  /// Active cells with a nonzero value.
  static CandidateSet from_mask(const RasterGrid& mask);

  [[nodiscard]] std::size_t size() const { return cells.size(); }
  [[nodiscard]] std::size_t remaining() const;
};

/// How a tentative afforestation is evaluated.
enum class Engine {
  suffix,       ///< replay_suffix over the downstream cone
  suffix_full,  ///< replay_suffix over every later sorted position
  sfd_path,     ///< replay_sfd_path; single-flow graphs only
  naive,        ///< full sweep per candidate
};

/// Per-worker buffers for evaluate_candidate.
struct EvalScratch {
  ReplayScratch replay;
  std::vector<std::uint8_t> afforested;
  std::vector<double> sa;
  std::vector<double> outflow;
  std::int64_t edge_visits = 0;
};

/// SYR of afforesting `cell` relative to `base`: base.sy minus the tentative SY.
[[nodiscard]] double evaluate_candidate(const TransportState& base, const FlowGraph& graph,
                                        const CellParams& params, std::int32_t cell,
                                        EvalScratch& scratch, Engine engine = Engine::suffix);

struct Evaluation {
  std::int32_t cell = 0;
  double syr = 0.0;
};

/// Descending SYR; equal SYR in ascending cell index.
[[nodiscard]] std::vector<Evaluation> rank_candidates(std::vector<Evaluation> evaluations);

/// Stop rule: a cell count, a cumulative SYR target, or both (first reached wins).
struct StopCriterion {
  std::optional<std::int64_t> count;
  std::optional<double> target_syr;

  static StopCriterion cells(std::int64_t n) { return {n, std::nullopt}; }
  static StopCriterion target(double syr) { return {std::nullopt, syr}; }
};

enum class StopReason { count_reached, target_reached, zero_gain, exhausted };

[[nodiscard]] const char* to_string(StopReason reason);

struct IterationRecord {
  std::int32_t iteration = 0;                  ///< 1-based
  std::vector<Evaluation> committed;           ///< marginal SYR against the previous committed state
  double best_syr_vs_base = 0.0;               ///< SY^b minus the best tentative SY of this iteration
  double sy = 0.0;                             ///< SY after commitment
  double cumulative_syr = 0.0;                 ///< SY^b minus `sy`
  std::int64_t evaluations = 0;
  std::int64_t edge_visits = 0;
};

struct SelectionResult {
  double sy_base = 0.0;
  double sy_final = 0.0;
  std::vector<std::int32_t> selected;  ///< commitment order
  std::vector<IterationRecord> iterations;
  StopReason stop = StopReason::count_reached;

  [[nodiscard]] double cumulative_syr() const { return sy_base - sy_final; }
  /// 100 * SYR / SY^b, 0 when SY^b is 0.
  [[nodiscard]] double percent_syr() const;
};

struct SelectOptions {
  Engine engine = Engine::suffix;
  DrainMode mode = DrainMode::per_successor;
  std::int32_t threads = 1;
};

/// Greedy loop: evaluate every unselected candidate against the committed
/// state, commit all cells tied at the maximal SYR (truncated by ascending
/// index to the remaining count), refresh the committed state by a full sweep.
[[nodiscard]] SelectionResult select(const FlowGraph& graph, const CellParams& params,
                                     const CandidateSet& candidates, const StopCriterion& stop,
                                     std::span<const std::int32_t> outlets,
                                     const SelectOptions& options = {});

/// One greedy iteration's evaluation of all unselected candidates against `base`,
/// in candidate order. Results do not depend on `threads`.
[[nodiscard]] std::vector<Evaluation> evaluate_all(const TransportState& base, const FlowGraph& graph,
                                                   const CellParams& params,
                                                   const CandidateSet& candidates,
                                                   std::vector<EvalScratch>& workers, Engine engine);

/// iteration,cell_row,cell_col,marginal_SYR,cumulative_SYR,SY
void write_trajectory_csv(const SelectionResult& result, const FlowGraph& graph,
                          const std::filesystem::path& path);

/// Iteration number at selected cells, nodata elsewhere.
[[nodiscard]] RasterGrid selection_raster(const SelectionResult& result, const RasterGrid& frame);

} // namespace camf
