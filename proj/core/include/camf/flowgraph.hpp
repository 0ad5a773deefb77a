#pragma once

#include "camf/error.hpp"
#include "camf/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace camf {

/// Directed transfer from cell `from` to cell `to` carrying `fraction` of the outflow of `from`.
struct FlowEdge {
  std::int32_t from = 0;
  std::int32_t to = 0;
  double fraction = 1.0;
  friend bool operator==(const FlowEdge&, const FlowEdge&) = default;
};

enum class Routing { sfd, mfd };

/// Raised by topo_sort when the direction matrix contains a cycle.
class CycleError : public DomainError {
public:
  CycleError(const std::string& what, std::vector<std::int32_t> residual)
      : DomainError(what), residual_(std::move(residual)) {}
  /// Cells that never became ready, ascending.
  [[nodiscard]] const std::vector<std::int32_t>& residual() const { return residual_; }

private:
  std::vector<std::int32_t> residual_;
};

/// Cell connectivity over the active cells of a raster.
///
/// Successor edges are stored contiguously per source cell (CSR), so an edge id
/// is its index in `edges()`. Ancestor lists hold edge ids and are filled by
/// build_adjacency; once a topological order is attached they are sorted by the
/// ancestor's position in that order.
class FlowGraph {
public:
  FlowGraph() = default;

  /// Builds the successor structure. Edges may arrive in any order; they are
  /// grouped by source, keeping the relative order of edges from one cell.
  static FlowGraph from_edges(std::int32_t rows, std::int32_t cols, std::vector<std::uint8_t> active,
                              std::vector<FlowEdge> edges);

  [[nodiscard]] std::int32_t rows() const { return rows_; }
  [[nodiscard]] std::int32_t cols() const { return cols_; }
  [[nodiscard]] std::int32_t cell_count() const { return rows_ * cols_; }
  [[nodiscard]] std::int32_t active_count() const { return active_count_; }
  [[nodiscard]] std::int32_t edge_count() const { return static_cast<std::int32_t>(edges_.size()); }
  [[nodiscard]] bool is_active(std::int32_t cell) const { return active_[static_cast<std::size_t>(cell)] != 0; }
  [[nodiscard]] std::span<const std::uint8_t> active_mask() const { return active_; }

  [[nodiscard]] std::span<const FlowEdge> edges() const { return edges_; }
  [[nodiscard]] const FlowEdge& edge(std::int32_t id) const { return edges_[static_cast<std::size_t>(id)]; }
  [[nodiscard]] std::int32_t first_out_edge(std::int32_t cell) const { return out_offset_[static_cast<std::size_t>(cell)]; }
  [[nodiscard]] std::span<const FlowEdge> out_edges(std::int32_t cell) const;
  [[nodiscard]] std::int32_t out_degree(std::int32_t cell) const;

  [[nodiscard]] bool has_adjacency() const { return !in_offset_.empty(); }
  /// Edge ids of the edges entering `cell`.
  [[nodiscard]] std::span<const std::int32_t> in_edges(std::int32_t cell) const;
  [[nodiscard]] std::int32_t in_degree(std::int32_t cell) const;

  [[nodiscard]] bool has_order() const { return !order_.empty() || active_count_ == 0; }
  [[nodiscard]] std::span<const std::int32_t> order() const { return order_; }
  /// Position in the topological order, -1 for inactive cells.
  [[nodiscard]] std::int32_t position(std::int32_t cell) const { return position_[static_cast<std::size_t>(cell)]; }

  /// Active cells with out-degree 0, ascending.
  [[nodiscard]] const std::vector<std::int32_t>& sinks() const { return sinks_; }
  [[nodiscard]] bool is_sink(std::int32_t cell) const { return is_active(cell) && out_degree(cell) == 0; }
  /// True when every cell has at most one outgoing edge and all fractions are 1.
  [[nodiscard]] bool is_single_flow() const;

  [[nodiscard]] CellIndex index(std::int32_t cell) const { return CellIndex::from_linear(cell, cols_); }

private:
  friend FlowGraph build_adjacency(FlowGraph graph);
  friend FlowGraph with_topological_order(FlowGraph graph);

  std::int32_t rows_ = 0;
  std::int32_t cols_ = 0;
  std::int32_t active_count_ = 0;
  std::vector<std::uint8_t> active_;
  std::vector<FlowEdge> edges_;
  std::vector<std::int32_t> out_offset_;
  std::vector<std::int32_t> in_offset_;
  std::vector<std::int32_t> in_edge_;
  std::vector<std::int32_t> order_;
  std::vector<std::int32_t> position_;
  std::vector<std::int32_t> sinks_;
};

/// Single flow direction: each cell drains to its lowest strictly lower neighbour
/// (elevation argmin, ties resolved by the E, SE, S, SW, W, NW, N, NE enumeration).
[[nodiscard]] FlowGraph d8_directions(const RasterGrid& dem);

/// FD8 multiple flow direction. Fractions are proportional to tan(G) * L with
/// contour length L = 0.5 * cell size (cardinal) or 0.354 * cell size (diagonal).
[[nodiscard]] FlowGraph fd8_directions(const RasterGrid& dem);

/// Fills ancestor lists as the exact transpose of the successor lists.
[[nodiscard]] FlowGraph build_adjacency(FlowGraph graph);

/// Kahn's algorithm; ready cells leave in ascending linear index.
/// Throws CycleError when some active cell never becomes ready.
[[nodiscard]] std::vector<std::int32_t> topo_sort(const FlowGraph& graph);

/// Builds adjacency if needed, attaches the topological order and sorts every
/// ancestor list by ascending ancestor position.
[[nodiscard]] FlowGraph with_topological_order(FlowGraph graph);

/// Directions, adjacency and order in one call.
[[nodiscard]] FlowGraph build_flow_graph(const RasterGrid& dem, Routing routing);

/// Debug dump: from_row,from_col,to_row,to_col,fraction.
void write_edges_csv(const FlowGraph& graph, const std::filesystem::path& path);

} // namespace camf
