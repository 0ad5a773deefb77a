#pragma once

#include "camf/raster.hpp"
#include "camf/transport.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <variant>

namespace camf {

/// Class code to factor value (C per land cover, K per soil type).
struct FactorTable {
  std::map<std::int32_t, double> factors;

  /// "code = value" lines, '#' comments. Codes must be integers, values >= 0.
  static FactorTable load(const std::filesystem::path& path);
};

/// Afforestation parameters as multiples of the initial production (and of gamma1).
struct ParamDerivation {
  double alpha2_of_alpha1 = 0.83;
  double rho1_of_alpha1 = 0.37;
  double rho2_of_alpha1 = 0.61;
  double sigma1_of_alpha1 = 0.96;
  double sigma2_of_alpha1 = 0.98;
  double gamma2_of_gamma1 = 0.75;

  /// Tabacay catchment factors.
  static ParamDerivation tabacay() { return {}; }
  /// Maarkebeek catchment factors.
  static ParamDerivation maarkebeek() { return {0.83, 0.55, 0.73, 1.0, 1.02, 0.75}; }
  /// Keys named after the fields; unspecified keys keep the Tabacay defaults.
  static ParamDerivation load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Throws DomainError naming the first violated factor pair.
  void validate() const;
};

/// A RUSLE factor given either as one value for the whole catchment or per cell.
using Factor = std::variant<double, RasterGrid>;

/// Cellwise E = R * K * LS * C * P in ton/ha/yr; nodata propagates from any raster factor.
[[nodiscard]] RasterGrid rusle_alpha(const Factor& r, const RasterGrid& k, const RasterGrid& ls,
                                     const RasterGrid& c, const Factor& p);

/// Per-cell table lookup. Throws ConfigError naming an unmapped code and its first cell.
[[nodiscard]] RasterGrid classify(const RasterGrid& classes, const FactorTable& table);

/// Builds both parameter states from the initial production (ton/ha/yr) and
/// flow factor rasters, converting production to ton/yr per cell.
[[nodiscard]] CellParams derive_params(const RasterGrid& alpha1, const RasterGrid& gamma1,
                                       const ParamDerivation& derivation, double cell_area_ha);

/// Min-max normalised steepest-descent slope.
[[nodiscard]] RasterGrid gamma1_from_dem(const RasterGrid& dem);

/// Fallback LS factor (Moore-Burch form) from D8 specific catchment area and
/// slope angle: (A_s / 22.13)^0.4 * (sin(beta) / 0.0896)^1.3. Only an
/// approximation; prefer a supplied LS raster.
[[nodiscard]] RasterGrid simple_ls(const RasterGrid& dem);

/// The LS expression itself, for a given specific catchment area and slope angle.
[[nodiscard]] double moore_burch_ls(double specific_area, double slope_angle);

} // namespace camf
