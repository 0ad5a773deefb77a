#pragma once

#include "camf/flowgraph.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace camf {

/// Land-use state of a cell: k = 1 (initial) or k = 2 (afforested).
enum class LandState : std::uint8_t { initial = 0, afforested = 1 };

/// Retention capacity, saturation threshold and flow factor of the outflow curve.
struct OutflowParams {
  double rho = 0.0;
  double sigma = 0.0;
  double gamma = 0.0;
};

/// Piece-wise linear outflow: nothing up to `rho`, a `gamma` share of the excess
/// up to `sigma`, everything above `sigma`. Throws DomainError on invalid input.
[[nodiscard]] double outflow(double sa, const OutflowParams& p);

/// Unchecked kernel form of outflow().
[[nodiscard]] inline double outflow_unchecked(double sa, double rho, double sigma, double gamma) {
  if (sa <= rho) {
    return 0.0;
  }
  if (sa <= sigma) {
    return gamma * (sa - rho);
  }
  return gamma * (sigma - rho) + (sa - sigma);
}

/// Per-cell sediment parameters for both land-use states, in ton/yr per cell.
struct CellParams {
  // Indexed [state][cell] with state 0 = initial, 1 = afforested.
  std::array<std::vector<double>, 2> alpha;
  std::array<std::vector<double>, 2> rho;
  std::array<std::vector<double>, 2> sigma;
  std::array<std::vector<double>, 2> gamma;

  /// Same values for every cell in both states.
  static CellParams uniform(std::int32_t cells, double alpha, double rho, double sigma, double gamma);

  [[nodiscard]] std::int32_t cell_count() const { return static_cast<std::int32_t>(alpha[0].size()); }

  [[nodiscard]] OutflowParams outflow_params(std::int32_t cell, LandState state) const {
    const auto k = static_cast<std::size_t>(state);
    const auto c = static_cast<std::size_t>(cell);
    return {rho[k][c], sigma[k][c], gamma[k][c]};
  }
  [[nodiscard]] double production(std::int32_t cell, LandState state) const {
    return alpha[static_cast<std::size_t>(state)][static_cast<std::size_t>(cell)];
  }

  /// Copies the afforested values of `cell` from its initial ones (a no-op afforestation).
  void make_inert(std::int32_t cell);

  /// Checks sizes and 0 <= rho <= sigma, 0 <= gamma <= 1, alpha >= 0 on active cells.
  void validate(const FlowGraph& graph) const;
  /// True when every active cell obeys alpha2 <= alpha1, gamma2 <= gamma1, rho2 >= rho1, sigma2 >= sigma1.
  [[nodiscard]] bool obeys_afforestation_ordering(const FlowGraph& graph) const;
};

/// How a cell with several successors releases sediment.
enum class DrainMode {
  /// Outflow is re-evaluated from the already drained accumulation for each
  /// successor in turn, exactly as the sweep pseudocode prints it.
  per_successor,
  /// Outflow is evaluated once from the complete accumulation and split by fraction.
  fixed_outflow,
};

/// Replayable result of one full accumulation sweep.
struct TransportState {
  std::vector<double> sa;             ///< final per-cell accumulation (residual after drains)
  std::vector<double> edge_delivery;  ///< D(j,i) per edge id
  std::vector<double> sa_before_drain;///< source accumulation just before each edge's drain
  std::vector<double> cell_outflow;   ///< fixed_outflow mode: outflow of each cell
  std::vector<std::uint8_t> afforested;
  std::vector<std::int32_t> outlets;
  DrainMode mode = DrainMode::per_successor;
  double sy = 0.0;
  std::int64_t edge_visits = 0;

  [[nodiscard]] LandState state(std::int32_t cell) const {
    return afforested[static_cast<std::size_t>(cell)] ? LandState::afforested : LandState::initial;
  }
};

/// Full sweep over the topological order. `afforested` holds one flag per cell.
[[nodiscard]] TransportState compute_base_flow(const FlowGraph& graph, const CellParams& params,
                                               std::span<const std::uint8_t> afforested,
                                               std::span<const std::int32_t> outlets,
                                               DrainMode mode = DrainMode::per_successor);

/// SY of a full sweep without recording any replay state. Same arithmetic as
/// compute_base_flow, so the result is identical; `sa` and `cell_outflow` are
/// caller-owned work buffers. Assumes validated inputs.
[[nodiscard]] double full_sweep_sy(const FlowGraph& graph, const CellParams& params,
                                   std::span<const std::uint8_t> afforested,
                                   std::span<const std::int32_t> outlets, DrainMode mode,
                                   std::vector<double>& sa, std::vector<double>& cell_outflow);

/// Sum of the final accumulation over `outlets`. Every outlet must be a sink.
[[nodiscard]] double sediment_yield(const FlowGraph& graph, const TransportState& state,
                                    std::span<const std::int32_t> outlets);

/// Throws ConfigError if any outlet is inactive or not a sink.
void validate_outlets(const FlowGraph& graph, std::span<const std::int32_t> outlets);

/// The sink drained by the most cells (ties to the lowest index).
[[nodiscard]] std::int32_t default_outlet(const FlowGraph& graph);

/// Number of cells, `cell` included, with a flow path into `cell`.
[[nodiscard]] std::int32_t contributing_cells(const FlowGraph& graph, std::int32_t cell);

/// Which cells a suffix replay re-runs.
enum class SuffixScope {
  /// Only cells downstream of the flipped cell; all others keep their base values.
  downstream,
  /// Every sorted position at or after the flipped cell.
  full,
};

/// Caller-owned buffers for replays. Reusable across sequential replays
/// against any base state of the same graph; one per concurrent worker.
class ReplayScratch {
public:
  /// Accumulation after the most recent replay, falling back to `base`.
  [[nodiscard]] double value(const TransportState& base, std::int32_t cell) const;
  /// Edge visits performed by replays since construction or reset.
  [[nodiscard]] std::int64_t edge_visits() const { return edge_visits_; }
  void reset_counter() { edge_visits_ = 0; }

private:
  friend double replay_suffix(const TransportState&, const FlowGraph&, const CellParams&,
                              std::int32_t, ReplayScratch&, SuffixScope);
  friend double replay_sfd_path(const TransportState&, const FlowGraph&, const CellParams&,
                                std::int32_t, ReplayScratch&);

  void bind(std::int32_t cells);
  void touch(std::int32_t cell, double value) {
    stamp_[static_cast<std::size_t>(cell)] = epoch_;
    sa_[static_cast<std::size_t>(cell)] = value;
  }
  [[nodiscard]] bool touched(std::int32_t cell) const { return stamp_[static_cast<std::size_t>(cell)] == epoch_; }

  std::vector<double> sa_;
  std::vector<double> outflow_;
  std::vector<std::uint32_t> stamp_;
  std::vector<std::int32_t> heap_;
  std::uint32_t epoch_ = 0;
  std::int64_t edge_visits_ = 0;
};

/// SY after afforesting `cell`, computed by re-running the sweep only from the
/// cell's sorted position on. Equal to a full recomputation bit for bit; the
/// base state is not modified.
[[nodiscard]] double replay_suffix(const TransportState& base, const FlowGraph& graph,
                                   const CellParams& params, std::int32_t cell, ReplayScratch& scratch,
                                   SuffixScope scope = SuffixScope::downstream);

/// Single-flow variant: recomputes only the path from `cell` to its sink.
/// Throws DomainError if a cell on that path has more than one successor.
[[nodiscard]] double replay_sfd_path(const TransportState& base, const FlowGraph& graph,
                                     const CellParams& params, std::int32_t cell, ReplayScratch& scratch);

/// Per-cell accumulation rescaled from ton/yr per cell to ton/ha/yr on the DEM frame.
[[nodiscard]] RasterGrid sa_raster(const TransportState& state, const RasterGrid& frame);

/// Debug dump: from_row,from_col,to_row,to_col,delivery.
void write_deliveries_csv(const FlowGraph& graph, const TransportState& state,
                          const std::filesystem::path& path);

} // namespace camf
