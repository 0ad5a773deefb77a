#pragma once

#include "camf/raster.hpp"
#include "camf/rusle.hpp"

#include <cstdint>
#include <filesystem>

namespace camf {

/// Land-cover codes used by generated cases.
inline constexpr std::int32_t kSynthCandidateClass = 1;  // agriculture
inline constexpr std::int32_t kSynthOtherClass = 2;      // forest

/// A deterministic desk-scale catchment.
struct SyntheticCase {
  std::uint64_t seed = 0;
  RasterGrid dem;
  RasterGrid alpha1;     ///< ton/ha/yr
  RasterGrid gamma1;
  RasterGrid landcover;  ///< kSynthCandidateClass or kSynthOtherClass
  CellIndex outlet;
  ParamDerivation derivation;

  [[nodiscard]] std::int32_t candidate_count() const;
};

struct SynthOptions {
  double cell_size = 30.0;
  /// Keep local depressions instead of routing every cell to the outlet.
  bool allow_pits = false;
};

/// Smooth random terrain tilted toward the south-east corner, which becomes the
/// unique lowest cell. Unless pits are allowed, every other cell has a strictly
/// lower neighbour. A pure function of its arguments.
[[nodiscard]] SyntheticCase generate(std::uint64_t seed, std::int32_t rows, std::int32_t cols,
                                     double relief, double candidate_fraction,
                                     const SynthOptions& options = {});

/// Writes dem.asc, alpha1.asc, gamma1.asc, landcover.asc, derivation.txt and a
/// ready-to-run camf.cfg into `dir`.
void write_case(const SyntheticCase& c, const std::filesystem::path& dir);

} // namespace camf
