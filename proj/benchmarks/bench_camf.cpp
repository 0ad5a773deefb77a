#include "camf/camf.hpp"

#include <benchmark/benchmark.h>

#include <map>

using namespace camf;

namespace {

struct Case {
  SyntheticCase synth;
  FlowGraph graph;
  CellParams params;
  CandidateSet candidates;
  std::vector<std::int32_t> outlets;
  TransportState base;
};

// Built once per (side, routing) and shared by every benchmark using it.
const Case& fixture(std::int32_t side, Routing routing) {
  static std::map<std::pair<std::int32_t, int>, Case> cache;
  const auto key = std::make_pair(side, static_cast<int>(routing));
  auto it = cache.find(key);
  if (it == cache.end()) {
    Case c;
    c.synth = generate(1, side, side, 60.0, 0.1);
    c.graph = build_flow_graph(c.synth.dem, routing);
    c.params = derive_params(c.synth.alpha1, c.synth.gamma1, c.synth.derivation, c.synth.dem.cell_area_ha());
    const std::vector<std::int32_t> codes{kSynthCandidateClass};
    c.candidates = CandidateSet::from_classes(c.synth.landcover, codes);
    c.outlets = {default_outlet(c.graph)};
    const std::vector<std::uint8_t> none(static_cast<std::size_t>(c.graph.cell_count()), 0);
    c.base = compute_base_flow(c.graph, c.params, none, c.outlets);
    it = cache.emplace(key, std::move(c)).first;
  }
  return it->second;
}

void BM_BuildGraph(benchmark::State& state) {
  const auto routing = static_cast<Routing>(state.range(1));
  const Case& c = fixture(static_cast<std::int32_t>(state.range(0)), routing);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_flow_graph(c.synth.dem, routing));
  }
  state.SetItemsProcessed(state.iterations() * c.synth.dem.size());
}

void BM_BaseFlow(benchmark::State& state) {
  const Case& c = fixture(static_cast<std::int32_t>(state.range(0)), static_cast<Routing>(state.range(1)));
  const std::vector<std::uint8_t> none(static_cast<std::size_t>(c.graph.cell_count()), 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_base_flow(c.graph, c.params, none, c.outlets));
  }
  state.counters["edges"] = c.graph.edge_count();
}

// One greedy iteration: every candidate evaluated against the base state.
void BM_Iteration(benchmark::State& state) {
  const Case& c = fixture(static_cast<std::int32_t>(state.range(0)), static_cast<Routing>(state.range(1)));
  const auto engine = static_cast<Engine>(state.range(2));
  std::vector<EvalScratch> workers(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_all(c.base, c.graph, c.params, c.candidates, workers, engine));
  }
  state.counters["candidates"] = static_cast<double>(c.candidates.size());
}

constexpr auto kSfd = static_cast<std::int64_t>(Routing::sfd);
constexpr auto kMfd = static_cast<std::int64_t>(Routing::mfd);

} // namespace

BENCHMARK(BM_BuildGraph)->ArgsProduct({{89, 178}, {kSfd, kMfd}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BaseFlow)->ArgsProduct({{89, 178, 256}, {kSfd, kMfd}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Iteration)
    ->ArgsProduct({{89, 178},
                   {kSfd},
                   {static_cast<std::int64_t>(Engine::suffix), static_cast<std::int64_t>(Engine::sfd_path),
                    static_cast<std::int64_t>(Engine::naive)}})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Iteration)
    ->ArgsProduct({{89, 178},
                   {kMfd},
                   {static_cast<std::int64_t>(Engine::suffix), static_cast<std::int64_t>(Engine::suffix_full),
                    static_cast<std::int64_t>(Engine::naive)}})
    ->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
