#include "camf/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>

namespace camf {

double outflow(double sa, const OutflowParams& p) {
  if (!(p.rho >= 0.0) || !(p.rho <= p.sigma)) {
    throw DomainError("outflow parameters require 0 <= rho <= sigma (rho=" + std::to_string(p.rho) +
                      ", sigma=" + std::to_string(p.sigma) + ")");
  }
  if (!(p.gamma >= 0.0 && p.gamma <= 1.0)) {
    throw DomainError("flow factor gamma must lie in [0, 1], got " + std::to_string(p.gamma));
  }
  if (!(sa >= 0.0)) {
    throw DomainError("sediment accumulation must be non-negative, got " + std::to_string(sa));
  }
  return outflow_unchecked(sa, p.rho, p.sigma, p.gamma);
}

CellParams CellParams::uniform(std::int32_t cells, double alpha, double rho, double sigma, double gamma) {
  CellParams p;
  const auto n = static_cast<std::size_t>(cells);
  for (std::size_t k = 0; k < 2; ++k) {
    p.alpha[k].assign(n, alpha);
    p.rho[k].assign(n, rho);
    p.sigma[k].assign(n, sigma);
    p.gamma[k].assign(n, gamma);
  }
  return p;
}

void CellParams::make_inert(std::int32_t cell) {
  const auto c = static_cast<std::size_t>(cell);
  alpha[1][c] = alpha[0][c];
  rho[1][c] = rho[0][c];
  sigma[1][c] = sigma[0][c];
  gamma[1][c] = gamma[0][c];
}

void CellParams::validate(const FlowGraph& graph) const {
  const auto n = static_cast<std::size_t>(graph.cell_count());
  for (std::size_t k = 0; k < 2; ++k) {
    if (alpha[k].size() != n || rho[k].size() != n || sigma[k].size() != n || gamma[k].size() != n) {
      throw ConfigError("cell parameters sized for " + std::to_string(alpha[k].size()) +
                        " cells, graph has " + std::to_string(n));
    }
  }
  for (std::int32_t c = 0; c < graph.cell_count(); ++c) {
    if (!graph.is_active(c)) {
      continue;
    }
    for (std::size_t k = 0; k < 2; ++k) {
      const auto i = static_cast<std::size_t>(c);
      const bool ok = alpha[k][i] >= 0.0 && rho[k][i] >= 0.0 && rho[k][i] <= sigma[k][i] &&
                      gamma[k][i] >= 0.0 && gamma[k][i] <= 1.0 && std::isfinite(sigma[k][i]) &&
                      std::isfinite(alpha[k][i]);
      if (!ok) {
        const CellIndex idx = graph.index(c);
        throw DomainError("invalid parameters at cell (" + std::to_string(idx.row) + "," +
                          std::to_string(idx.col) + ") state k=" + std::to_string(k + 1) +
                          ": need alpha >= 0, 0 <= rho <= sigma, 0 <= gamma <= 1");
      }
    }
  }
}

bool CellParams::obeys_afforestation_ordering(const FlowGraph& graph) const {
  for (std::int32_t c = 0; c < graph.cell_count(); ++c) {
    const auto i = static_cast<std::size_t>(c);
    if (graph.is_active(c) && (alpha[1][i] > alpha[0][i] || gamma[1][i] > gamma[0][i] ||
                               rho[1][i] < rho[0][i] || sigma[1][i] < sigma[0][i])) {
      return false;
    }
  }
  return true;
}

void validate_outlets(const FlowGraph& graph, std::span<const std::int32_t> outlets) {
  for (const std::int32_t o : outlets) {
    if (o < 0 || o >= graph.cell_count() || !graph.is_active(o)) {
      throw ConfigError("outlet " + std::to_string(o) + " is not an active cell");
    }
    if (!graph.is_sink(o)) {
      const CellIndex idx = graph.index(o);
      throw ConfigError("outlet (" + std::to_string(idx.row) + "," + std::to_string(idx.col) +
                        ") is not a sink; its accumulation would not be final");
    }
  }
}

TransportState compute_base_flow(const FlowGraph& graph, const CellParams& params,
                                 std::span<const std::uint8_t> afforested,
                                 std::span<const std::int32_t> outlets, DrainMode mode) {
  if (!graph.has_order()) {
    throw ConfigError("compute_base_flow requires a topologically ordered graph");
  }
  if (static_cast<std::int32_t>(afforested.size()) != graph.cell_count()) {
    throw ConfigError("land-state vector does not match the graph");
  }
  params.validate(graph);
  validate_outlets(graph, outlets);

  TransportState st;
  const auto n = static_cast<std::size_t>(graph.cell_count());
  st.sa.assign(n, 0.0);
  st.edge_delivery.assign(static_cast<std::size_t>(graph.edge_count()), 0.0);
  st.sa_before_drain.assign(static_cast<std::size_t>(graph.edge_count()), 0.0);
  if (mode == DrainMode::fixed_outflow) {
    st.cell_outflow.assign(n, 0.0);
  }
  st.afforested.assign(afforested.begin(), afforested.end());
  st.outlets.assign(outlets.begin(), outlets.end());
  st.mode = mode;

  double* sa = st.sa.data();
  const std::span<const FlowEdge> edges = graph.edges();
  for (const std::int32_t cell : graph.order()) {
    const LandState k = st.state(cell);
    double acc = params.production(cell, k);
    for (const std::int32_t e : graph.in_edges(cell)) {
      const FlowEdge& edge = edges[static_cast<std::size_t>(e)];
      const std::int32_t j = edge.from;
      st.sa_before_drain[static_cast<std::size_t>(e)] = sa[j];
      double released;
      if (mode == DrainMode::per_successor) {
        const OutflowParams p = params.outflow_params(j, st.state(j));
        released = outflow_unchecked(sa[j], p.rho, p.sigma, p.gamma);
      } else {
        released = st.cell_outflow[static_cast<std::size_t>(j)];
      }
      const double d = released * edge.fraction;
      sa[j] -= d;
      acc += d;
      st.edge_delivery[static_cast<std::size_t>(e)] = d;
      ++st.edge_visits;
    }
    sa[cell] = acc;
    if (mode == DrainMode::fixed_outflow) {
      const OutflowParams p = params.outflow_params(cell, k);
      st.cell_outflow[static_cast<std::size_t>(cell)] = outflow_unchecked(acc, p.rho, p.sigma, p.gamma);
    }
  }
  st.sy = sediment_yield(graph, st, outlets);
  return st;
}

double full_sweep_sy(const FlowGraph& graph, const CellParams& params,
                     std::span<const std::uint8_t> afforested, std::span<const std::int32_t> outlets,
                     DrainMode mode, std::vector<double>& sa, std::vector<double>& cell_outflow) {
  const auto n = static_cast<std::size_t>(graph.cell_count());
  sa.resize(n);
  cell_outflow.resize(n);
  const std::span<const FlowEdge> edges = graph.edges();
  auto state_of = [&](std::int32_t c) {
    return afforested[static_cast<std::size_t>(c)] ? LandState::afforested : LandState::initial;
  };
  for (const std::int32_t cell : graph.order()) {
    const LandState k = state_of(cell);
    double acc = params.production(cell, k);
    for (const std::int32_t e : graph.in_edges(cell)) {
      const FlowEdge& edge = edges[static_cast<std::size_t>(e)];
      const auto j = static_cast<std::size_t>(edge.from);
      double released;
      if (mode == DrainMode::per_successor) {
        const OutflowParams p = params.outflow_params(edge.from, state_of(edge.from));
        released = outflow_unchecked(sa[j], p.rho, p.sigma, p.gamma);
      } else {
        released = cell_outflow[j];
      }
      const double d = released * edge.fraction;
      sa[j] -= d;
      acc += d;
    }
    sa[static_cast<std::size_t>(cell)] = acc;
    if (mode == DrainMode::fixed_outflow) {
      const OutflowParams p = params.outflow_params(cell, k);
      cell_outflow[static_cast<std::size_t>(cell)] = outflow_unchecked(acc, p.rho, p.sigma, p.gamma);
    }
  }
  double sy = 0.0;
  for (const std::int32_t o : outlets) {
    sy += sa[static_cast<std::size_t>(o)];
  }
  return sy;
}

double sediment_yield(const FlowGraph& graph, const TransportState& state,
                      std::span<const std::int32_t> outlets) {
  validate_outlets(graph, outlets);
  double sy = 0.0;
  for (const std::int32_t o : outlets) {
    sy += state.sa[static_cast<std::size_t>(o)];
  }
  return sy;
}

std::int32_t contributing_cells(const FlowGraph& graph, std::int32_t cell) {
  if (!graph.has_adjacency()) {
    throw ConfigError("contributing_cells requires ancestor lists");
  }
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(graph.cell_count()), 0);
  std::vector<std::int32_t> stack{cell};
  seen[static_cast<std::size_t>(cell)] = 1;
  std::int32_t count = 0;
  while (!stack.empty()) {
    const std::int32_t c = stack.back();
    stack.pop_back();
    ++count;
    for (const std::int32_t e : graph.in_edges(c)) {
      const std::int32_t j = graph.edge(e).from;
      if (!seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = 1;
        stack.push_back(j);
      }
    }
  }
  return count;
}

std::int32_t default_outlet(const FlowGraph& graph) {
  if (graph.sinks().empty()) {
    throw ConfigError("flow graph has no sink to serve as outlet");
  }
  std::int32_t best = -1;
  std::int32_t best_count = -1;
  if (graph.is_single_flow() && graph.has_order()) {
    // Contributions partition the cells; one pass in topological order suffices.
    std::vector<std::int32_t> count(static_cast<std::size_t>(graph.cell_count()), 1);
    for (const std::int32_t c : graph.order()) {
      for (const FlowEdge& e : graph.out_edges(c)) {
        count[static_cast<std::size_t>(e.to)] += count[static_cast<std::size_t>(c)];
      }
    }
    for (const std::int32_t s : graph.sinks()) {
      if (count[static_cast<std::size_t>(s)] > best_count) {
        best = s;
        best_count = count[static_cast<std::size_t>(s)];
      }
    }
    return best;
  }
  for (const std::int32_t s : graph.sinks()) {
    const std::int32_t count = contributing_cells(graph, s);
    if (count > best_count) {
      best = s;
      best_count = count;
    }
  }
  return best;
}

void ReplayScratch::bind(std::int32_t cells) {
  const auto n = static_cast<std::size_t>(cells);
  if (sa_.size() != n) {
    sa_.assign(n, 0.0);
    outflow_.assign(n, 0.0);
    stamp_.assign(n, 0);
    epoch_ = 0;
  }
  if (++epoch_ == 0) {
    std::fill(stamp_.begin(), stamp_.end(), 0U);
    epoch_ = 1;
  }
}

double ReplayScratch::value(const TransportState& base, std::int32_t cell) const {
  if (static_cast<std::size_t>(cell) < stamp_.size() && touched(cell)) {
    return sa_[static_cast<std::size_t>(cell)];
  }
  return base.sa[static_cast<std::size_t>(cell)];
}

namespace {

void check_replay_target(const TransportState& base, const FlowGraph& graph, std::int32_t cell) {
  if (cell < 0 || cell >= graph.cell_count() || !graph.is_active(cell)) {
    throw ConfigError("replay cell " + std::to_string(cell) + " is not in the flow graph");
  }
  if (base.afforested[static_cast<std::size_t>(cell)]) {
    throw DomainError("replay cell " + std::to_string(cell) + " is already afforested in the base state");
  }
}

} // namespace

double replay_suffix(const TransportState& base, const FlowGraph& graph, const CellParams& params,
                     std::int32_t cell, ReplayScratch& scratch, SuffixScope scope) {
  check_replay_target(base, graph, cell);
  scratch.bind(graph.cell_count());
  const std::int32_t start = graph.position(cell);
  const bool fixed = base.mode == DrainMode::fixed_outflow;
  const std::span<const FlowEdge> edges = graph.edges();
  auto state_of = [&](std::int32_t c) { return c == cell ? LandState::afforested : base.state(c); };

  // Accumulates inflow into `s` (whose sorted position is >= start) and records
  // its new value. `recomputed(j)` says whether ancestor j carries replayed state.
  auto process = [&](std::int32_t s, auto&& recomputed) {
    const LandState k = state_of(s);
    double acc = params.production(s, k);
    for (const std::int32_t e : graph.in_edges(s)) {
      const FlowEdge& edge = edges[static_cast<std::size_t>(e)];
      const std::int32_t j = edge.from;
      ++scratch.edge_visits_;
      if (!recomputed(j)) {
        acc += base.edge_delivery[static_cast<std::size_t>(e)];
        continue;
      }
      double& sa_j = scratch.sa_[static_cast<std::size_t>(j)];
      double released;
      if (fixed) {
        released = scratch.outflow_[static_cast<std::size_t>(j)];
      } else {
        const OutflowParams p = params.outflow_params(j, state_of(j));
        released = outflow_unchecked(sa_j, p.rho, p.sigma, p.gamma);
      }
      const double d = released * edge.fraction;
      sa_j -= d;
      acc += d;
    }
    scratch.touch(s, acc);
    if (fixed) {
      const OutflowParams p = params.outflow_params(s, k);
      scratch.outflow_[static_cast<std::size_t>(s)] = outflow_unchecked(acc, p.rho, p.sigma, p.gamma);
    }
  };

  if (scope == SuffixScope::downstream) {
    // Min-heap on sorted position over the downstream cone of `cell`.
    auto& heap = scratch.heap_;
    heap.clear();
    heap.push_back(start);
    scratch.stamp_[static_cast<std::size_t>(cell)] = scratch.epoch_;
    const auto after = std::greater<>{};
    while (!heap.empty()) {
      std::pop_heap(heap.begin(), heap.end(), after);
      const std::int32_t s = graph.order()[static_cast<std::size_t>(heap.back())];
      heap.pop_back();
      // A cell is queued (stamped) exactly when it lies in the cone, and every
      // cone ancestor of s has a smaller position, so it was processed already.
      process(s, [&](std::int32_t j) { return scratch.touched(j); });
      for (const FlowEdge& e : graph.out_edges(s)) {
        if (!scratch.touched(e.to)) {
          scratch.stamp_[static_cast<std::size_t>(e.to)] = scratch.epoch_;
          heap.push_back(graph.position(e.to));
          std::push_heap(heap.begin(), heap.end(), after);
        }
      }
    }
  } else {
    const std::span<const std::int32_t> order = graph.order();
    // Restore each prefix ancestor of the suffix to its value before its first
    // drain at a position >= start. Scanning the suffix in sorted order meets
    // that drain first.
    for (std::size_t q = static_cast<std::size_t>(start); q < order.size(); ++q) {
      for (const std::int32_t e : graph.in_edges(order[q])) {
        const std::int32_t j = edges[static_cast<std::size_t>(e)].from;
        if (graph.position(j) < start && !scratch.touched(j)) {
          scratch.touch(j, base.sa_before_drain[static_cast<std::size_t>(e)]);
          if (fixed) {
            scratch.outflow_[static_cast<std::size_t>(j)] = base.cell_outflow[static_cast<std::size_t>(j)];
          }
        }
      }
    }
    for (std::size_t q = static_cast<std::size_t>(start); q < order.size(); ++q) {
      process(order[q], [](std::int32_t) { return true; });
    }
  }

  double sy = 0.0;
  for (const std::int32_t o : base.outlets) {
    sy += scratch.value(base, o);
  }
  return sy;
}

double replay_sfd_path(const TransportState& base, const FlowGraph& graph, const CellParams& params,
                       std::int32_t cell, ReplayScratch& scratch) {
  check_replay_target(base, graph, cell);
  scratch.bind(graph.cell_count());
  auto state_of = [&](std::int32_t c) { return c == cell ? LandState::afforested : base.state(c); };

  std::int32_t prev_edge = -1;
  double prev_delivery = 0.0;
  std::int32_t s = cell;
  while (true) {
    double acc = params.production(s, state_of(s));
    for (const std::int32_t e : graph.in_edges(s)) {
      acc += e == prev_edge ? prev_delivery : base.edge_delivery[static_cast<std::size_t>(e)];
      ++scratch.edge_visits_;
    }
    const std::int32_t degree = graph.out_degree(s);
    if (degree == 0) {
      scratch.touch(s, acc);
      break;
    }
    const std::int32_t e = graph.first_out_edge(s);
    const FlowEdge& edge = graph.edge(e);
    if (degree > 1 || edge.fraction != 1.0) {
      const CellIndex idx = graph.index(s);
      throw DomainError("single-flow path replay reached cell (" + std::to_string(idx.row) + "," +
                        std::to_string(idx.col) + ") with " + std::to_string(degree) + " successors");
    }
    const OutflowParams p = params.outflow_params(s, state_of(s));
    prev_delivery = outflow_unchecked(acc, p.rho, p.sigma, p.gamma) * edge.fraction;
    prev_edge = e;
    scratch.touch(s, acc - prev_delivery);
    s = edge.to;
  }

  double sy = 0.0;
  for (const std::int32_t o : base.outlets) {
    sy += scratch.value(base, o);
  }
  return sy;
}

RasterGrid sa_raster(const TransportState& state, const RasterGrid& frame) {
  RasterGrid out = frame.like(0.0);
  const double area = frame.cell_area_ha();
  for (std::int32_t i = 0; i < out.size(); ++i) {
    if (out.is_active(i)) {
      out[i] = state.sa[static_cast<std::size_t>(i)] / area;
    }
  }
  return out;
}

void write_deliveries_csv(const FlowGraph& graph, const TransportState& state,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write delivery list '" + path.string() + "'");
  }
  out << "from_row,from_col,to_row,to_col,delivery\n";
  char buf[32];
  for (std::int32_t e = 0; e < graph.edge_count(); ++e) {
    const FlowEdge& edge = graph.edge(e);
    const CellIndex from = graph.index(edge.from);
    const CellIndex to = graph.index(edge.to);
    std::snprintf(buf, sizeof buf, "%.17g", state.edge_delivery[static_cast<std::size_t>(e)]);
    out << from.row << ',' << from.col << ',' << to.row << ',' << to.col << ',' << buf << '\n';
  }
}

} // namespace camf
