#include "camf/flowgraph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <queue>
#include <string>

namespace camf {

FlowGraph FlowGraph::from_edges(std::int32_t rows, std::int32_t cols, std::vector<std::uint8_t> active,
                                std::vector<FlowEdge> edges) {
  const std::int32_t n = rows * cols;
  if (rows <= 0 || cols <= 0 || static_cast<std::int32_t>(active.size()) != n) {
    throw ConfigError("flow graph mask does not match " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " grid");
  }
  FlowGraph g;
  g.rows_ = rows;
  g.cols_ = cols;
  g.active_ = std::move(active);
  g.active_count_ = static_cast<std::int32_t>(std::count(g.active_.begin(), g.active_.end(), 1));

  for (const FlowEdge& e : edges) {
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n || !g.is_active(e.from) ||
        !g.is_active(e.to)) {
      throw ConfigError("flow edge " + std::to_string(e.from) + "->" + std::to_string(e.to) +
                        " touches an inactive or out-of-range cell");
    }
    if (!(e.fraction > 0.0 && e.fraction <= 1.0)) {
      throw DomainError("flow edge " + std::to_string(e.from) + "->" + std::to_string(e.to) +
                        " has fraction outside (0, 1]");
    }
  }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const FlowEdge& a, const FlowEdge& b) { return a.from < b.from; });
  g.edges_ = std::move(edges);

  g.out_offset_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (const FlowEdge& e : g.edges_) {
    ++g.out_offset_[static_cast<std::size_t>(e.from) + 1];
  }
  for (std::int32_t c = 0; c < n; ++c) {
    g.out_offset_[static_cast<std::size_t>(c) + 1] += g.out_offset_[static_cast<std::size_t>(c)];
  }
  g.position_.assign(static_cast<std::size_t>(n), -1);
  for (std::int32_t c = 0; c < n; ++c) {
    if (g.is_active(c) && g.out_degree(c) == 0) {
      g.sinks_.push_back(c);
    }
  }
  return g;
}

std::span<const FlowEdge> FlowGraph::out_edges(std::int32_t cell) const {
  const auto begin = static_cast<std::size_t>(out_offset_[static_cast<std::size_t>(cell)]);
  const auto end = static_cast<std::size_t>(out_offset_[static_cast<std::size_t>(cell) + 1]);
  return std::span<const FlowEdge>(edges_).subspan(begin, end - begin);
}

std::int32_t FlowGraph::out_degree(std::int32_t cell) const {
  return out_offset_[static_cast<std::size_t>(cell) + 1] - out_offset_[static_cast<std::size_t>(cell)];
}

std::span<const std::int32_t> FlowGraph::in_edges(std::int32_t cell) const {
  const auto begin = static_cast<std::size_t>(in_offset_[static_cast<std::size_t>(cell)]);
  const auto end = static_cast<std::size_t>(in_offset_[static_cast<std::size_t>(cell) + 1]);
  return std::span<const std::int32_t>(in_edge_).subspan(begin, end - begin);
}

std::int32_t FlowGraph::in_degree(std::int32_t cell) const {
  return in_offset_[static_cast<std::size_t>(cell) + 1] - in_offset_[static_cast<std::size_t>(cell)];
}

bool FlowGraph::is_single_flow() const {
  for (std::int32_t c = 0; c < cell_count(); ++c) {
    if (out_degree(c) > 1) {
      return false;
    }
  }
  return std::all_of(edges_.begin(), edges_.end(), [](const FlowEdge& e) { return e.fraction == 1.0; });
}

namespace {

std::vector<std::uint8_t> active_mask(const RasterGrid& dem) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(dem.size()));
  for (std::int32_t i = 0; i < dem.size(); ++i) {
    mask[static_cast<std::size_t>(i)] = dem.is_active(i) ? 1 : 0;
  }
  return mask;
}

} // namespace

FlowGraph d8_directions(const RasterGrid& dem) {
  std::vector<FlowEdge> edges;
  edges.reserve(static_cast<std::size_t>(dem.size()));
  for (std::int32_t r = 0; r < dem.rows(); ++r) {
    for (std::int32_t c = 0; c < dem.cols(); ++c) {
      if (!dem.is_active(r, c)) {
        continue;
      }
      const double z = dem.at(r, c);
      std::int32_t target = -1;
      double lowest = z;
      for (std::int32_t d = 0; d < kNeighbourCount; ++d) {
        const std::int32_t nr = r + kNeighbourDRow[d];
        const std::int32_t nc = c + kNeighbourDCol[d];
        if (dem.is_active(nr, nc) && dem.at(nr, nc) < lowest) {
          lowest = dem.at(nr, nc);
          target = nr * dem.cols() + nc;
        }
      }
      if (target >= 0) {
        edges.push_back({r * dem.cols() + c, target, 1.0});
      }
    }
  }
  return FlowGraph::from_edges(dem.rows(), dem.cols(), active_mask(dem), std::move(edges));
}

FlowGraph fd8_directions(const RasterGrid& dem) {
  const double cardinal_distance = dem.cell_size();
  const double diagonal_distance = dem.cell_size() * std::sqrt(2.0);
  const double cardinal_contour = 0.5 * dem.cell_size();
  const double diagonal_contour = 0.354 * dem.cell_size();

  std::vector<FlowEdge> edges;
  edges.reserve(static_cast<std::size_t>(dem.size()) * 3);
  std::array<std::int32_t, kNeighbourCount> targets{};
  std::array<double, kNeighbourCount> weights{};
  for (std::int32_t r = 0; r < dem.rows(); ++r) {
    for (std::int32_t c = 0; c < dem.cols(); ++c) {
      if (!dem.is_active(r, c)) {
        continue;
      }
      const double z = dem.at(r, c);
      std::int32_t count = 0;
      double total = 0.0;
      for (std::int32_t d = 0; d < kNeighbourCount; ++d) {
        const std::int32_t nr = r + kNeighbourDRow[d];
        const std::int32_t nc = c + kNeighbourDCol[d];
        if (!dem.is_active(nr, nc) || !(dem.at(nr, nc) < z)) {
          continue;
        }
        const bool diag = is_diagonal(d);
        const double tan_gradient = (z - dem.at(nr, nc)) / (diag ? diagonal_distance : cardinal_distance);
        const double w = tan_gradient * (diag ? diagonal_contour : cardinal_contour);
        targets[static_cast<std::size_t>(count)] = nr * dem.cols() + nc;
        weights[static_cast<std::size_t>(count)] = w;
        total += w;
        ++count;
      }
      const std::int32_t from = r * dem.cols() + c;
      for (std::int32_t k = 0; k < count; ++k) {
        const double fraction = count == 1 ? 1.0 : weights[static_cast<std::size_t>(k)] / total;
        edges.push_back({from, targets[static_cast<std::size_t>(k)], fraction});
      }
    }
  }
  return FlowGraph::from_edges(dem.rows(), dem.cols(), active_mask(dem), std::move(edges));
}

FlowGraph build_adjacency(FlowGraph graph) {
  const std::int32_t n = graph.cell_count();
  graph.in_offset_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (const FlowEdge& e : graph.edges_) {
    ++graph.in_offset_[static_cast<std::size_t>(e.to) + 1];
  }
  for (std::int32_t c = 0; c < n; ++c) {
    graph.in_offset_[static_cast<std::size_t>(c) + 1] += graph.in_offset_[static_cast<std::size_t>(c)];
  }
  graph.in_edge_.assign(graph.edges_.size(), -1);
  std::vector<std::int32_t> fill(graph.in_offset_.begin(), graph.in_offset_.end() - 1);
  // Edges are grouped by ascending source, so every ancestor list ends up ascending by cell index.
  for (std::int32_t id = 0; id < graph.edge_count(); ++id) {
    const auto to = static_cast<std::size_t>(graph.edges_[static_cast<std::size_t>(id)].to);
    graph.in_edge_[static_cast<std::size_t>(fill[to]++)] = id;
  }
  return graph;
}

std::vector<std::int32_t> topo_sort(const FlowGraph& graph) {
  if (!graph.has_adjacency()) {
    throw ConfigError("topo_sort requires ancestor lists; call build_adjacency first");
  }
  const std::int32_t n = graph.cell_count();
  std::vector<std::int32_t> pending(static_cast<std::size_t>(n), 0);
  std::priority_queue<std::int32_t, std::vector<std::int32_t>, std::greater<>> ready;
  for (std::int32_t c = 0; c < n; ++c) {
    if (!graph.is_active(c)) {
      continue;
    }
    pending[static_cast<std::size_t>(c)] = graph.in_degree(c);
    if (pending[static_cast<std::size_t>(c)] == 0) {
      ready.push(c);
    }
  }

  std::vector<std::int32_t> sorted;
  sorted.reserve(static_cast<std::size_t>(graph.active_count()));
  while (!ready.empty()) {
    const std::int32_t cell = ready.top();
    ready.pop();
    sorted.push_back(cell);
    for (const FlowEdge& e : graph.out_edges(cell)) {
      if (--pending[static_cast<std::size_t>(e.to)] == 0) {
        ready.push(e.to);
      }
    }
  }

  if (static_cast<std::int32_t>(sorted.size()) < graph.active_count()) {
    std::vector<std::int32_t> residual;
    for (std::int32_t c = 0; c < n; ++c) {
      if (graph.is_active(c) && pending[static_cast<std::size_t>(c)] > 0) {
        residual.push_back(c);
      }
    }
    std::string listing;
    for (std::size_t k = 0; k < residual.size() && k < 16; ++k) {
      const CellIndex idx = graph.index(residual[k]);
      listing += (k ? " " : "") + std::string("(") + std::to_string(idx.row) + "," +
                 std::to_string(idx.col) + ")";
    }
    if (residual.size() > 16) {
      listing += " ...";
    }
    throw CycleError("flow directions contain a cycle; " + std::to_string(residual.size()) +
                         " cells unsorted: " + listing,
                     std::move(residual));
  }
  return sorted;
}

FlowGraph with_topological_order(FlowGraph graph) {
  if (!graph.has_adjacency()) {
    graph = build_adjacency(std::move(graph));
  }
  graph.order_ = topo_sort(graph);
  std::fill(graph.position_.begin(), graph.position_.end(), -1);
  for (std::size_t p = 0; p < graph.order_.size(); ++p) {
    graph.position_[static_cast<std::size_t>(graph.order_[p])] = static_cast<std::int32_t>(p);
  }
  for (std::int32_t c = 0; c < graph.cell_count(); ++c) {
    auto begin = graph.in_edge_.begin() + graph.in_offset_[static_cast<std::size_t>(c)];
    auto end = graph.in_edge_.begin() + graph.in_offset_[static_cast<std::size_t>(c) + 1];
    std::sort(begin, end, [&graph](std::int32_t a, std::int32_t b) {
      return graph.position(graph.edge(a).from) < graph.position(graph.edge(b).from);
    });
  }
  return graph;
}

FlowGraph build_flow_graph(const RasterGrid& dem, Routing routing) {
  FlowGraph directions = routing == Routing::sfd ? d8_directions(dem) : fd8_directions(dem);
  return with_topological_order(build_adjacency(std::move(directions)));
}

void write_edges_csv(const FlowGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write edge list '" + path.string() + "'");
  }
  out << "from_row,from_col,to_row,to_col,fraction\n";
  char buf[32];
  for (const FlowEdge& e : graph.edges()) {
    const CellIndex from = graph.index(e.from);
    const CellIndex to = graph.index(e.to);
    std::snprintf(buf, sizeof buf, "%.17g", e.fraction);
    out << from.row << ',' << from.col << ',' << to.row << ',' << to.col << ',' << buf << '\n';
  }
}

} // namespace camf
