#include "camf/synthcase.hpp"

#include "camf/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <queue>
#include <random>
#include <string>
#include <vector>

namespace camf {

std::int32_t SyntheticCase::candidate_count() const {
  std::int32_t n = 0;
  for (std::int32_t i = 0; i < landcover.size(); ++i) {
    n += landcover.is_active(i) && landcover[i] == kSynthCandidateClass;
  }
  return n;
}

namespace {

// mt19937_64 output is fixed by the standard; the distribution objects are
// not, so uniforms are drawn by hand.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double symmetric() { return 2.0 * uniform() - 1.0; }

private:
  std::mt19937_64 engine_;
};

// Diamond-square on a (2^k + 1)^2 lattice, cropped and scaled to [0, 1].
std::vector<double> fractal_field(Rng& rng, std::int32_t rows, std::int32_t cols, double roughness) {
  std::int32_t size = 2;
  while (size + 1 < std::max(rows, cols)) {
    size *= 2;
  }
  const std::int32_t n = size + 1;
  std::vector<double> h(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  auto at = [&](std::int32_t r, std::int32_t c) -> double& {
    return h[static_cast<std::size_t>(r) * static_cast<std::size_t>(n) + static_cast<std::size_t>(c)];
  };
  at(0, 0) = rng.symmetric();
  at(0, size) = rng.symmetric();
  at(size, 0) = rng.symmetric();
  at(size, size) = rng.symmetric();

  double amplitude = 1.0;
  for (std::int32_t step = size; step > 1; step /= 2) {
    const std::int32_t half = step / 2;
    for (std::int32_t r = half; r < n; r += step) {
      for (std::int32_t c = half; c < n; c += step) {
        const double mean = (at(r - half, c - half) + at(r - half, c + half) + at(r + half, c - half) +
                             at(r + half, c + half)) / 4.0;
        at(r, c) = mean + amplitude * rng.symmetric();
      }
    }
    for (std::int32_t r = 0; r < n; r += half) {
      for (std::int32_t c = (r / half) % 2 == 0 ? half : 0; c < n; c += step) {
        double sum = 0.0;
        int count = 0;
        if (r >= half) { sum += at(r - half, c); ++count; }
        if (r + half < n) { sum += at(r + half, c); ++count; }
        if (c >= half) { sum += at(r, c - half); ++count; }
        if (c + half < n) { sum += at(r, c + half); ++count; }
        at(r, c) = sum / count + amplitude * rng.symmetric();
      }
    }
    amplitude *= roughness;
  }

  std::vector<double> out(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  for (std::int32_t r = 0; r < rows; ++r) {
    for (std::int32_t c = 0; c < cols; ++c) {
      out[static_cast<std::size_t>(r * cols + c)] = at(r, c);
    }
  }
  const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
  const double low = *lo;
  const double range = *hi - *lo;
  for (double& v : out) {
    v = range > 0.0 ? (v - low) / range : 0.0;
  }
  return out;
}

// Raises cells just enough that each one has a strictly lower neighbour on a
// path to `outlet` (priority flood with an epsilon step).
void route_to_outlet(RasterGrid& dem, std::int32_t outlet, double epsilon) {
  using Entry = std::pair<double, std::int32_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::vector<std::uint8_t> closed(static_cast<std::size_t>(dem.size()), 0);
  open.emplace(dem[outlet], outlet);
  closed[static_cast<std::size_t>(outlet)] = 1;
  while (!open.empty()) {
    const auto [z, cell] = open.top();
    open.pop();
    const CellIndex idx = CellIndex::from_linear(cell, dem.cols());
    for (std::int32_t d = 0; d < kNeighbourCount; ++d) {
      const std::int32_t nr = idx.row + kNeighbourDRow[d];
      const std::int32_t nc = idx.col + kNeighbourDCol[d];
      if (!dem.in_bounds(nr, nc)) {
        continue;
      }
      const std::int32_t next = nr * dem.cols() + nc;
      if (closed[static_cast<std::size_t>(next)]) {
        continue;
      }
      closed[static_cast<std::size_t>(next)] = 1;
      dem[next] = std::max(dem[next], z + epsilon);
      open.emplace(dem[next], next);
    }
  }
}

} // namespace

SyntheticCase generate(std::uint64_t seed, std::int32_t rows, std::int32_t cols, double relief,
                       double candidate_fraction, const SynthOptions& options) {
  if (rows < 2 || cols < 2) {
    throw ConfigError("synthetic case needs at least 2x2 cells, got " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
  if (!(candidate_fraction > 0.0 && candidate_fraction <= 1.0)) {
    throw ConfigError("candidate fraction must lie in (0, 1]");
  }
  if (!(relief >= 0.0)) {
    throw ConfigError("relief must be non-negative");
  }

  Rng rng(seed);
  SyntheticCase sc;
  sc.seed = seed;
  sc.outlet = {rows - 1, cols - 1};
  sc.derivation = ParamDerivation::tabacay();

  constexpr double kBaseElevation = 100.0;
  sc.dem = RasterGrid(rows, cols, options.cell_size, kBaseElevation);
  const std::vector<double> noise = fractal_field(rng, rows, cols, 0.55);
  if (relief > 0.0) {
    const double span = static_cast<double>(rows - 1 + cols - 1);
    for (std::int32_t r = 0; r < rows; ++r) {
      for (std::int32_t c = 0; c < cols; ++c) {
        const double tilt = static_cast<double>((rows - 1 - r) + (cols - 1 - c)) / span;
        sc.dem.at(r, c) = kBaseElevation + relief * (0.6 * tilt + 0.4 * noise[static_cast<std::size_t>(r * cols + c)]);
      }
    }
    const std::int32_t outlet = sc.outlet.linear(cols);
    // The outlet sits strictly below every other cell.
    double lowest = sc.dem[outlet];
    for (std::int32_t i = 0; i < sc.dem.size(); ++i) {
      lowest = std::min(lowest, sc.dem[i]);
    }
    sc.dem[outlet] = lowest - 1e-3 * relief;
    if (!options.allow_pits) {
      route_to_outlet(sc.dem, outlet, 1e-6 * relief);
    }
  }

  const std::vector<double> production = fractal_field(rng, rows, cols, 0.7);
  sc.alpha1 = RasterGrid(rows, cols, options.cell_size, 0.0);
  sc.landcover = RasterGrid(rows, cols, options.cell_size, kSynthOtherClass);
  for (std::int32_t i = 0; i < sc.alpha1.size(); ++i) {
    sc.alpha1[i] = 5.0 + 95.0 * production[static_cast<std::size_t>(i)];
    if (rng.uniform() < candidate_fraction) {
      sc.landcover[i] = kSynthCandidateClass;
    }
  }
  sc.gamma1 = gamma1_from_dem(sc.dem);
  return sc;
}

void write_case(const SyntheticCase& c, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  }
  write_ascii_grid(c.dem, dir / "dem.asc");
  write_ascii_grid(c.alpha1, dir / "alpha1.asc");
  write_ascii_grid(c.gamma1, dir / "gamma1.asc");
  write_ascii_grid(c.landcover, dir / "landcover.asc");
  c.derivation.save(dir / "derivation.txt");
  std::ofstream cfg(dir / "camf.cfg");
  if (!cfg) {
    throw IoError("cannot write '" + (dir / "camf.cfg").string() + "'");
  }
  cfg << "# synthetic case seed=" << c.seed << "\n"
      << "dem = dem.asc\n"
      << "alpha1 = alpha1.asc\n"
      << "gamma1 = gamma1.asc\n"
      << "landcover = landcover.asc\n"
      << "candidate_classes = " << kSynthCandidateClass << "\n"
      << "derivation = derivation.txt\n"
      << "outlet = " << c.outlet.row << "," << c.outlet.col << "\n";
}

} // namespace camf
