#include "camf/selection.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <thread>

namespace camf {

CandidateSet CandidateSet::from_cells(const FlowGraph& graph, std::vector<std::int32_t> cells) {
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  for (const std::int32_t c : cells) {
    if (c < 0 || c >= graph.cell_count() || !graph.is_active(c)) {
      throw ConfigError("candidate cell " + std::to_string(c) + " is not an active cell");
    }
  }
  CandidateSet set;
  set.selected.assign(cells.size(), 0);
  set.cells = std::move(cells);
  return set;
}

CandidateSet CandidateSet::from_classes(const RasterGrid& classes, std::span<const std::int32_t> codes) {
  CandidateSet set;
  for (std::int32_t i = 0; i < classes.size(); ++i) {
    if (!classes.is_active(i)) {
      continue;
    }
    const double v = classes[i];
    if (std::any_of(codes.begin(), codes.end(), [v](std::int32_t code) { return v == code; })) {
      set.cells.push_back(i);
    }
  }
  set.selected.assign(set.cells.size(), 0);
  return set;
}

CandidateSet CandidateSet::from_mask(const RasterGrid& mask) {
  CandidateSet set;
  for (std::int32_t i = 0; i < mask.size(); ++i) {
    if (mask.is_active(i) && mask[i] != 0.0) {
      set.cells.push_back(i);
    }
  }
  set.selected.assign(set.cells.size(), 0);
  return set;
}

std::size_t CandidateSet::remaining() const {
  return static_cast<std::size_t>(std::count(selected.begin(), selected.end(), 0));
}

namespace {

double evaluate_synced(const TransportState& base, const FlowGraph& graph, const CellParams& params,
                       std::int32_t cell, EvalScratch& scratch, Engine engine) {
  double sy = 0.0;
  switch (engine) {
  case Engine::suffix:
  case Engine::suffix_full: {
    const std::int64_t before = scratch.replay.edge_visits();
    sy = replay_suffix(base, graph, params, cell, scratch.replay,
                       engine == Engine::suffix ? SuffixScope::downstream : SuffixScope::full);
    scratch.edge_visits += scratch.replay.edge_visits() - before;
    break;
  }
  case Engine::sfd_path: {
    const std::int64_t before = scratch.replay.edge_visits();
    sy = replay_sfd_path(base, graph, params, cell, scratch.replay);
    scratch.edge_visits += scratch.replay.edge_visits() - before;
    break;
  }
  case Engine::naive: {
    if (base.afforested[static_cast<std::size_t>(cell)]) {
      throw DomainError("candidate " + std::to_string(cell) + " is already afforested");
    }
    scratch.afforested[static_cast<std::size_t>(cell)] = 1;
    sy = full_sweep_sy(graph, params, scratch.afforested, base.outlets, base.mode, scratch.sa,
                       scratch.outflow);
    scratch.afforested[static_cast<std::size_t>(cell)] = 0;
    scratch.edge_visits += graph.edge_count();
    break;
  }
  }
  return base.sy - sy;
}

} // namespace

double evaluate_candidate(const TransportState& base, const FlowGraph& graph, const CellParams& params,
                          std::int32_t cell, EvalScratch& scratch, Engine engine) {
  if (cell < 0 || cell >= graph.cell_count() || !graph.is_active(cell)) {
    throw ConfigError("candidate " + std::to_string(cell) + " is not in the flow graph");
  }
  if (engine == Engine::naive) {
    scratch.afforested = base.afforested;
  }
  return evaluate_synced(base, graph, params, cell, scratch, engine);
}

std::vector<Evaluation> rank_candidates(std::vector<Evaluation> evaluations) {
  std::sort(evaluations.begin(), evaluations.end(), [](const Evaluation& a, const Evaluation& b) {
    if (a.syr != b.syr) {
      return a.syr > b.syr;
    }
    return a.cell < b.cell;
  });
  return evaluations;
}

const char* to_string(StopReason reason) {
  switch (reason) {
  case StopReason::count_reached:
    return "count_reached";
  case StopReason::target_reached:
    return "target_reached";
  case StopReason::zero_gain:
    return "zero_gain";
  case StopReason::exhausted:
    return "exhausted";
  }
  return "unknown";
}

double SelectionResult::percent_syr() const {
  return sy_base == 0.0 ? 0.0 : 100.0 * cumulative_syr() / sy_base;
}

std::vector<Evaluation> evaluate_all(const TransportState& base, const FlowGraph& graph,
                                     const CellParams& params, const CandidateSet& candidates,
                                     std::vector<EvalScratch>& workers, Engine engine) {
  std::vector<std::int32_t> pending;
  pending.reserve(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (!candidates.selected[k]) {
      pending.push_back(candidates.cells[k]);
    }
  }
  std::vector<Evaluation> results(pending.size());
  if (workers.empty()) {
    workers.resize(1);
  }
  if (engine == Engine::naive) {
    for (EvalScratch& w : workers) {
      w.afforested = base.afforested;
    }
  }

  // Each slot is written by exactly one worker, so the output is independent
  // of scheduling.
  constexpr std::size_t kChunk = 64;
  std::atomic<std::size_t> next{0};
  auto run = [&](EvalScratch& scratch) {
    while (true) {
      const std::size_t begin = next.fetch_add(kChunk);
      if (begin >= pending.size()) {
        return;
      }
      const std::size_t end = std::min(pending.size(), begin + kChunk);
      for (std::size_t k = begin; k < end; ++k) {
        results[k] = {pending[k], evaluate_synced(base, graph, params, pending[k], scratch, engine)};
      }
    }
  };

  if (workers.size() == 1 || pending.size() <= kChunk) {
    run(workers.front());
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers.size() - 1);
    for (std::size_t w = 1; w < workers.size(); ++w) {
      threads.emplace_back(run, std::ref(workers[w]));
    }
    run(workers.front());
    for (std::thread& t : threads) {
      t.join();
    }
  }
  return results;
}

SelectionResult select(const FlowGraph& graph, const CellParams& params, const CandidateSet& candidates,
                       const StopCriterion& stop, std::span<const std::int32_t> outlets,
                       const SelectOptions& options) {
  if (!stop.count && !stop.target_syr) {
    throw ConfigError("a stop criterion (cell count or target SYR) is required");
  }
  if (stop.count && *stop.count < 0) {
    throw ConfigError("cell count must be non-negative");
  }
  if (stop.target_syr && !(*stop.target_syr >= 0.0)) {
    throw ConfigError("target SYR must be non-negative");
  }
  if (candidates.cells.empty() && stop.count.value_or(1) > 0) {
    throw ConfigError("candidate set is empty");
  }
  if (options.engine == Engine::sfd_path && !graph.is_single_flow()) {
    throw ConfigError("single-flow path engine requires a single-flow graph");
  }
  for (const std::int32_t c : candidates.cells) {
    if (c < 0 || c >= graph.cell_count() || !graph.is_active(c)) {
      throw ConfigError("candidate cell " + std::to_string(c) + " is not an active cell");
    }
  }

  CandidateSet working = candidates;
  std::vector<std::uint8_t> afforested(static_cast<std::size_t>(graph.cell_count()), 0);
  for (std::size_t k = 0; k < working.size(); ++k) {
    if (working.selected[k]) {
      afforested[static_cast<std::size_t>(working.cells[k])] = 1;
    }
  }
  TransportState state = compute_base_flow(graph, params, afforested, outlets, options.mode);

  SelectionResult result;
  result.sy_base = state.sy;
  result.sy_final = state.sy;
  std::vector<EvalScratch> workers(static_cast<std::size_t>(std::max(1, options.threads)));

  while (true) {
    const auto chosen = static_cast<std::int64_t>(result.selected.size());
    if (stop.count && chosen >= *stop.count) {
      result.stop = StopReason::count_reached;
      break;
    }
    if (stop.target_syr && result.cumulative_syr() >= *stop.target_syr) {
      result.stop = StopReason::target_reached;
      break;
    }
    if (working.remaining() == 0) {
      result.stop = StopReason::exhausted;
      break;
    }

    for (EvalScratch& w : workers) {
      w.edge_visits = 0;
    }
    const std::vector<Evaluation> evaluations =
        evaluate_all(state, graph, params, working, workers, options.engine);
    double best = -std::numeric_limits<double>::infinity();
    for (const Evaluation& e : evaluations) {
      best = std::max(best, e.syr);
    }
    if (!(best > 0.0)) {
      result.stop = StopReason::zero_gain;
      break;
    }

    IterationRecord record;
    record.iteration = static_cast<std::int32_t>(result.iterations.size()) + 1;
    record.evaluations = static_cast<std::int64_t>(evaluations.size());
    for (const EvalScratch& w : workers) {
      record.edge_visits += w.edge_visits;
    }
    record.best_syr_vs_base = result.sy_base - (state.sy - best);

    // Ranked order puts the tie set first, ascending by index.
    std::int64_t room = stop.count ? *stop.count - chosen : std::numeric_limits<std::int64_t>::max();
    for (const Evaluation& e : rank_candidates(evaluations)) {
      if (e.syr != best || room == 0) {
        break;
      }
      record.committed.push_back(e);
      --room;
    }
    for (const Evaluation& e : record.committed) {
      afforested[static_cast<std::size_t>(e.cell)] = 1;
      const auto slot = std::lower_bound(working.cells.begin(), working.cells.end(), e.cell) -
                        working.cells.begin();
      working.selected[static_cast<std::size_t>(slot)] = 1;
      result.selected.push_back(e.cell);
    }

    state = compute_base_flow(graph, params, afforested, outlets, options.mode);
    record.sy = state.sy;
    record.cumulative_syr = result.sy_base - state.sy;
    result.sy_final = state.sy;
    result.iterations.push_back(std::move(record));
  }
  return result;
}

void write_trajectory_csv(const SelectionResult& result, const FlowGraph& graph,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write trajectory '" + path.string() + "'");
  }
  out << "iteration,cell_row,cell_col,marginal_SYR,cumulative_SYR,SY\n";
  char buf[128];
  for (const IterationRecord& it : result.iterations) {
    for (const Evaluation& e : it.committed) {
      const CellIndex idx = graph.index(e.cell);
      std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g,%.17g\n", it.iteration, idx.row, idx.col,
                    e.syr, it.cumulative_syr, it.sy);
      out << buf;
    }
  }
}

RasterGrid selection_raster(const SelectionResult& result, const RasterGrid& frame) {
  RasterGrid out(frame.rows(), frame.cols(), frame.cell_size(), frame.nodata_value(),
                 frame.nodata_value(), frame.origin_x(), frame.origin_y());
  for (const IterationRecord& it : result.iterations) {
    for (const Evaluation& e : it.committed) {
      out[e.cell] = it.iteration;
    }
  }
  return out;
}

} // namespace camf
