#include "camf/transport.hpp"

#include "support/instances.hpp"
#include "support/oracle.hpp"
#include "support/tempdir.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>

using namespace camf;
namespace t = camf::testing;

namespace {

constexpr double kHuge = 1e9;

FlowGraph ordered(std::int32_t rows, std::int32_t cols, std::vector<FlowEdge> edges) {
  return with_topological_order(FlowGraph::from_edges(
      rows, cols, std::vector<std::uint8_t>(static_cast<std::size_t>(rows * cols), 1), std::move(edges)));
}

std::vector<std::uint8_t> none(const FlowGraph& g) { return std::vector<std::uint8_t>(static_cast<std::size_t>(g.cell_count()), 0); }

TransportState flipped(const FlowGraph& g, const CellParams& p, const TransportState& base, std::int32_t cell) {
  std::vector<std::uint8_t> states = base.afforested;
  states[static_cast<std::size_t>(cell)] = 1;
  return compute_base_flow(g, p, states, base.outlets, base.mode);
}

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

} // namespace

TEST_CASE("outflow hand values") {
  const OutflowParams p{1.0, 3.0, 0.5};
  CHECK(outflow(0.5, p) == 0.0);
  CHECK(outflow(2.0, p) == 0.5);
  CHECK(outflow(5.0, p) == 3.0);
  CHECK(outflow(1.0, p) == 0.0);
  CHECK(outflow(3.0, p) == 1.0);
}

TEST_CASE("outflow rejects invalid parameters") {
  CHECK_THROWS_AS((void)outflow(1.0, {2.0, 1.0, 0.5}), DomainError);
  CHECK_THROWS_AS((void)outflow(1.0, {0.0, 1.0, 1.5}), DomainError);
  CHECK_THROWS_AS((void)outflow(1.0, {-1.0, 1.0, 0.5}), DomainError);
  CHECK_THROWS_AS((void)outflow(-1.0, {0.0, 1.0, 0.5}), DomainError);
}

TEST_CASE("outflow matches the reference, is monotone, bounded and continuous") {
  t::Rng rng(1);
  for (int trial = 0; trial < 5000; ++trial) {
    const double rho = t::uniform(rng, 0.0, 10.0);
    const double sigma = rho + t::uniform(rng, 0.0, 10.0);
    const double gamma = t::uniform(rng);
    const OutflowParams p{rho, sigma, gamma};
    const double sa = t::uniform(rng, 0.0, 30.0);
    const double d = outflow(sa, p);
    CHECK(d == oracle::reference_outflow(sa, rho, sigma, gamma));
    CHECK(d <= sa);
    CHECK(d >= 0.0);
    const double more = sa + t::uniform(rng, 0.0, 5.0);
    CHECK(outflow(more, p) >= d);
    for (const double knot : {rho, sigma}) {
      if (knot >= 1e-9) {
        CHECK(std::abs(outflow(knot + 1e-9, p) - outflow(knot - 1e-9, p)) <= 1e-8);
      }
    }
    // Raising either threshold or lowering gamma never increases outflow.
    const double bump = t::uniform(rng, 0.0, 3.0);
    CHECK(outflow(sa, {rho, sigma + bump, gamma}) <= d);
    CHECK(outflow(sa, {std::min(rho + bump, sigma), sigma, gamma}) <= d);
    CHECK(outflow(sa, {rho, sigma, gamma * t::uniform(rng)}) <= d);
  }
}

TEST_CASE("chain with full pass-through delivers everything to the outlet") {
  const FlowGraph g = ordered(1, 3, {{0, 1, 1.0}, {1, 2, 1.0}});
  CellParams p = CellParams::uniform(3, 0.0, 0.0, kHuge, 1.0);
  p.alpha[0] = {2.0, 1.0, 0.0};
  const std::vector<std::int32_t> outlet{2};
  const TransportState st = compute_base_flow(g, p, none(g), outlet);
  CHECK(st.sa == std::vector<double>{0.0, 0.0, 3.0});
  CHECK(st.sy == 3.0);
  CHECK(sediment_yield(g, st, outlet) == 3.0);
  CHECK(sediment_yield(g, st, {}) == 0.0);
  CHECK_THROWS_AS((void)sediment_yield(g, st, std::vector<std::int32_t>{1}), ConfigError);
}

TEST_CASE("gamma zero below saturation means no transport") {
  t::Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    t::Instance in = t::random_instance(rng, 8, 8, trial % 2 ? Routing::mfd : Routing::sfd);
    std::fill(in.params.gamma[0].begin(), in.params.gamma[0].end(), 0.0);
    // Mass above sigma passes regardless of gamma, so keep every cell unsaturated.
    std::fill(in.params.sigma[0].begin(), in.params.sigma[0].end(), kHuge);
    const TransportState st = compute_base_flow(in.graph, in.params, none(in.graph), in.outlets);
    for (std::int32_t c = 0; c < in.graph.cell_count(); ++c) {
      CHECK(st.sa[static_cast<std::size_t>(c)] == in.params.alpha[0][static_cast<std::size_t>(c)]);
    }
  }
}

TEST_CASE("fan-out drains per successor from the decremented accumulation") {
  const FlowGraph g = ordered(1, 3, {{0, 1, 0.5}, {0, 2, 0.5}});
  CellParams p = CellParams::uniform(3, 0.0, 0.0, kHuge, 1.0);
  p.alpha[0][0] = 4.0;
  const std::vector<std::int32_t> outlets{1, 2};

  const TransportState literal = compute_base_flow(g, p, none(g), outlets);
  CHECK(literal.sa == std::vector<double>{1.0, 2.0, 1.0});
  CHECK(literal.sy == 3.0);

  const TransportState fixed = compute_base_flow(g, p, none(g), outlets, DrainMode::fixed_outflow);
  CHECK(fixed.sa == std::vector<double>{0.0, 2.0, 2.0});
}

TEST_CASE("sweep matches the event-list oracle exactly") {
  t::Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Routing routing = trial % 2 ? Routing::mfd : Routing::sfd;
    const t::Instance in = t::random_instance(rng, 6, 6, routing, {.nodata_fraction = 0.1, .quantise = trial % 3 == 0});
    std::vector<std::uint8_t> states = none(in.graph);
    for (auto& s : states) {
      s = t::uniform(rng) < 0.3 ? 1 : 0;
    }
    const TransportState st = compute_base_flow(in.graph, in.params, states, in.outlets);
    const oracle::OracleState ref = oracle::oracle_sa(in.graph, in.params, states, in.outlets);
    CHECK(st.sa == ref.sa);
    CHECK(st.edge_delivery == ref.delivery);
    CHECK(st.sy == ref.sy);
  }
}

TEST_CASE("sweep visits every edge once and conserves mass") {
  t::Rng rng(4);
  for (int trial = 0; trial < 60; ++trial) {
    const t::Instance in = t::random_instance(rng, t::pick(rng, 2, 30), t::pick(rng, 2, 30),
                                              trial % 2 ? Routing::mfd : Routing::sfd, {.nodata_fraction = 0.05});
    for (const DrainMode mode : {DrainMode::per_successor, DrainMode::fixed_outflow}) {
      const TransportState st = compute_base_flow(in.graph, in.params, none(in.graph), in.outlets, mode);
      CHECK(st.edge_visits == in.graph.edge_count());
      CHECK(std::abs(sum(st.sa) - t::total_production(in.graph, in.params, st.afforested)) <= 1e-9);
      for (const double d : st.edge_delivery) {
        CHECK(d >= 0.0);
      }
      // All sinks designated: SY is everything not left behind on non-sink cells.
      double stranded = 0.0;
      for (std::int32_t c = 0; c < in.graph.cell_count(); ++c) {
        if (in.graph.is_active(c) && !in.graph.is_sink(c)) {
          stranded += st.sa[static_cast<std::size_t>(c)];
        }
      }
      CHECK(std::abs(st.sy - (sum(st.sa) - stranded)) <= 1e-9);
    }
  }
}

TEST_CASE("replay equals full recomputation bit for bit") {
  t::Rng rng(5);
  for (int trial = 0; trial < 120; ++trial) {
    const Routing routing = trial % 2 ? Routing::mfd : Routing::sfd;
    const DrainMode mode = trial % 4 < 2 ? DrainMode::per_successor : DrainMode::fixed_outflow;
    const t::Instance in = t::random_instance(rng, t::pick(rng, 2, 14), t::pick(rng, 2, 14), routing,
                                              {.nodata_fraction = 0.05, .quantise = trial % 3 == 0});
    std::vector<std::uint8_t> states = none(in.graph);
    for (auto& s : states) {
      s = t::uniform(rng) < 0.2 ? 1 : 0;
    }
    const TransportState base = compute_base_flow(in.graph, in.params, states, in.outlets, mode);
    ReplayScratch scratch;
    for (const std::int32_t cell : t::active_cells(in.graph)) {
      if (states[static_cast<std::size_t>(cell)]) {
        CHECK_THROWS_AS((void)replay_suffix(base, in.graph, in.params, cell, scratch), DomainError);
        continue;
      }
      const TransportState full = flipped(in.graph, in.params, base, cell);
      for (const SuffixScope scope : {SuffixScope::downstream, SuffixScope::full}) {
        CHECK(replay_suffix(base, in.graph, in.params, cell, scratch, scope) == full.sy);
        double total = 0.0;
        bool same = true;
        for (std::int32_t c = 0; c < in.graph.cell_count(); ++c) {
          same = same && scratch.value(base, c) == full.sa[static_cast<std::size_t>(c)];
          total += in.graph.is_active(c) ? scratch.value(base, c) : 0.0;
        }
        CHECK(same);
        CHECK(std::abs(total - t::total_production(in.graph, in.params, full.afforested)) <= 1e-9);
      }
      if (in.graph.is_single_flow()) {
        CHECK(replay_sfd_path(base, in.graph, in.params, cell, scratch) == full.sy);
      }
    }
  }
}

TEST_CASE("replay boundary cases") {
  t::Rng rng(6);
  const t::Instance in = t::random_instance(rng, 10, 10, Routing::mfd);
  const TransportState base = compute_base_flow(in.graph, in.params, none(in.graph), in.outlets);
  ReplayScratch scratch;

  SUBCASE("no-op afforestation keeps the base yield") {
    CellParams p = in.params;
    for (std::int32_t c = 0; c < p.cell_count(); ++c) {
      p.make_inert(c);
    }
    for (const std::int32_t c : t::active_cells(in.graph)) {
      CHECK(replay_suffix(base, in.graph, p, c, scratch) == base.sy);
      CHECK(replay_suffix(base, in.graph, p, c, scratch, SuffixScope::full) == base.sy);
    }
  }
  SUBCASE("first sorted cell is a full sweep") {
    const std::int32_t first = in.graph.order().front();
    CHECK(replay_suffix(base, in.graph, in.params, first, scratch, SuffixScope::full) ==
          flipped(in.graph, in.params, base, first).sy);
  }
  SUBCASE("cell outside the graph") {
    CHECK_THROWS_AS((void)replay_suffix(base, in.graph, in.params, -1, scratch), ConfigError);
    CHECK_THROWS_AS((void)replay_suffix(base, in.graph, in.params, 100, scratch), ConfigError);
  }
  SUBCASE("path replay refuses multi-successor cells") {
    std::int32_t split = -1;
    for (const std::int32_t c : t::active_cells(in.graph)) {
      if (in.graph.out_degree(c) > 1) {
        split = c;
        break;
      }
    }
    REQUIRE(split >= 0);
    CHECK_THROWS_AS((void)replay_sfd_path(base, in.graph, in.params, split, scratch), DomainError);
  }
  SUBCASE("base state is not modified") {
    const TransportState copy = base;
    for (const std::int32_t c : t::active_cells(in.graph)) {
      (void)replay_suffix(base, in.graph, in.params, c, scratch);
    }
    CHECK(base.sa == copy.sa);
    CHECK(base.edge_delivery == copy.edge_delivery);
    CHECK(base.sy == copy.sy);
  }
}

TEST_CASE("sfd path replay on a five-cell chain and at a sink") {
  const FlowGraph g = ordered(1, 5, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 4, 1.0}});
  CellParams p = CellParams::uniform(5, 3.0, 0.5, 4.0, 0.7);
  for (std::size_t c = 0; c < 5; ++c) {
    p.alpha[1][c] = 1.0;
    p.gamma[1][c] = 0.2;
    p.rho[1][c] = 1.0;
  }
  const std::vector<std::int32_t> outlet{4};
  const TransportState base = compute_base_flow(g, p, none(g), outlet);
  ReplayScratch scratch;
  CHECK(replay_sfd_path(base, g, p, 2, scratch) == flipped(g, p, base, 2).sy);

  const double at_sink = replay_sfd_path(base, g, p, 4, scratch);
  CHECK(at_sink == flipped(g, p, base, 4).sy);
  CHECK(at_sink == base.sy - 2.0);
  for (std::int32_t c = 0; c < 4; ++c) {
    CHECK(scratch.value(base, c) == base.sa[static_cast<std::size_t>(c)]);
  }
}

TEST_CASE("afforesting a single cell never increases the yield") {
  t::Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const RasterGrid dem = t::random_dem(rng, 10, 10, {.nodata_fraction = 0.05});
    const FlowGraph g = build_flow_graph(dem, trial % 2 ? Routing::mfd : Routing::sfd);
    const ParamDerivation d = trial % 3 ? ParamDerivation::tabacay() : ParamDerivation::maarkebeek();
    const CellParams p = t::derived_params(rng, dem, d);
    REQUIRE(p.obeys_afforestation_ordering(g));
    const std::vector<std::int32_t> outlets{default_outlet(g)};
    const TransportState base = compute_base_flow(g, p, none(g), outlets);
    ReplayScratch scratch;
    for (const std::int32_t c : t::active_cells(g)) {
      CHECK(replay_suffix(base, g, p, c, scratch) <= base.sy);
    }
  }
}

TEST_CASE("default outlet is the sink with the largest contributing area") {
  const FlowGraph g = ordered(1, 5, {{0, 1, 1.0}, {1, 2, 1.0}, {3, 4, 1.0}});
  CHECK(contributing_cells(g, 2) == 3);
  CHECK(contributing_cells(g, 4) == 2);
  CHECK(default_outlet(g) == 2);

  t::Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const t::Instance in = t::random_instance(rng, 9, 9, trial % 2 ? Routing::mfd : Routing::sfd);
    const std::int32_t o = default_outlet(in.graph);
    CHECK(in.graph.is_sink(o));
    for (const std::int32_t s : in.graph.sinks()) {
      CHECK(contributing_cells(in.graph, s) <= contributing_cells(in.graph, o));
      if (contributing_cells(in.graph, s) == contributing_cells(in.graph, o)) {
        CHECK(o <= s);
      }
    }
  }
}

TEST_CASE("parameter validation and ordering checks") {
  const FlowGraph g = ordered(1, 2, {{0, 1, 1.0}});
  CellParams p = CellParams::uniform(2, 1.0, 0.5, 1.0, 0.5);
  CHECK_NOTHROW(p.validate(g));
  CHECK(p.obeys_afforestation_ordering(g));
  p.alpha[1][0] = 2.0;
  CHECK_FALSE(p.obeys_afforestation_ordering(g));
  p.sigma[0][1] = 0.1;
  CHECK_THROWS_AS(p.validate(g), DomainError);
  CHECK_THROWS_AS(CellParams::uniform(3, 1, 0, 1, 0).validate(g), ConfigError);
  CHECK_THROWS_AS((void)compute_base_flow(g, CellParams::uniform(2, 1, 0, 1, 0), std::vector<std::uint8_t>{0}, {}),
                  ConfigError);
}

TEST_CASE("per-hectare export and delivery dump") {
  RasterGrid frame(1, 2, 100.0, 0.0);  // 1 ha cells
  frame[1] = frame.nodata_value();
  const FlowGraph g = build_flow_graph(frame, Routing::sfd);
  const CellParams p = CellParams::uniform(2, 4.0, 0.0, 1.0, 0.5);
  const TransportState st = compute_base_flow(g, p, none(g), std::vector<std::int32_t>{0});
  const RasterGrid out = sa_raster(st, frame);
  CHECK(out[0] == 4.0);
  CHECK_FALSE(out.is_active(1));

  t::TempDir dir;
  const FlowGraph chain = ordered(1, 3, {{0, 1, 1.0}, {1, 2, 1.0}});
  CellParams cp = CellParams::uniform(3, 0.0, 0.0, kHuge, 1.0);
  cp.alpha[0] = {2.0, 1.0, 0.0};
  write_deliveries_csv(chain, compute_base_flow(chain, cp, none(chain), std::vector<std::int32_t>{2}),
                       dir / "d.csv");
  std::ifstream in(dir / "d.csv");
  std::string header, a, b;
  std::getline(in, header);
  std::getline(in, a);
  std::getline(in, b);
  CHECK(header == "from_row,from_col,to_row,to_col,delivery");
  CHECK(a == "0,0,0,1,2");
  CHECK(b == "0,1,0,2,3");
}
