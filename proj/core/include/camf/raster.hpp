#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace camf {

/// Zero-based cell address; `linear = row * cols + col`.
struct CellIndex {
  std::int32_t row = 0;
  std::int32_t col = 0;

  [[nodiscard]] constexpr std::int32_t linear(std::int32_t cols) const { return row * cols + col; }
  [[nodiscard]] static constexpr CellIndex from_linear(std::int32_t index, std::int32_t cols) {
    return {index / cols, index % cols};
  }
  friend constexpr bool operator==(CellIndex, CellIndex) = default;
};

/// Rectangular grid of doubles with an ESRI-style geotransform.
///
/// Row 0 is the northern row. `origin_x`/`origin_y` address the lower-left
/// corner of the lower-left cell, as in the ASCII grid header.
class RasterGrid {
public:
  RasterGrid() = default;
  RasterGrid(std::int32_t rows, std::int32_t cols, double cell_size, double fill = 0.0,
             double nodata_value = -9999.0, double origin_x = 0.0, double origin_y = 0.0);

  [[nodiscard]] std::int32_t rows() const { return rows_; }
  [[nodiscard]] std::int32_t cols() const { return cols_; }
  [[nodiscard]] std::int32_t size() const { return rows_ * cols_; }
  [[nodiscard]] double cell_size() const { return cell_size_; }
  [[nodiscard]] double origin_x() const { return origin_x_; }
  [[nodiscard]] double origin_y() const { return origin_y_; }
  [[nodiscard]] double nodata_value() const { return nodata_; }
  /// Cell area in hectares.
  [[nodiscard]] double cell_area_ha() const { return cell_size_ * cell_size_ / 1.0e4; }

  [[nodiscard]] double operator[](std::int32_t i) const { return values_[static_cast<std::size_t>(i)]; }
  double& operator[](std::int32_t i) { return values_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] double at(std::int32_t row, std::int32_t col) const { return (*this)[row * cols_ + col]; }
  double& at(std::int32_t row, std::int32_t col) { return (*this)[row * cols_ + col]; }

  [[nodiscard]] bool in_bounds(std::int32_t row, std::int32_t col) const {
    return row >= 0 && row < rows_ && col >= 0 && col < cols_;
  }
  [[nodiscard]] bool is_active(std::int32_t i) const { return (*this)[i] != nodata_; }
  [[nodiscard]] bool is_active(std::int32_t row, std::int32_t col) const {
    return in_bounds(row, col) && at(row, col) != nodata_;
  }
  [[nodiscard]] std::int32_t active_count() const;

  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::span<double> values() { return values_; }

  /// Same dimensions, geotransform and nodata sentinel.
  [[nodiscard]] bool same_frame(const RasterGrid& other) const;
  /// Same frame and identical nodata mask.
  [[nodiscard]] bool same_mask(const RasterGrid& other) const;

  /// Blank grid sharing this grid's frame; active cells take `fill`, nodata cells stay nodata.
  [[nodiscard]] RasterGrid like(double fill) const;

  friend bool operator==(const RasterGrid&, const RasterGrid&) = default;

private:
  std::int32_t rows_ = 0;
  std::int32_t cols_ = 0;
  double cell_size_ = 1.0;
  double origin_x_ = 0.0;
  double origin_y_ = 0.0;
  double nodata_ = -9999.0;
  std::vector<double> values_;
};

/// Neighbour offsets in the fixed enumeration E, SE, S, SW, W, NW, N, NE.
inline constexpr std::int32_t kNeighbourCount = 8;
inline constexpr std::int32_t kNeighbourDRow[kNeighbourCount] = {0, 1, 1, 1, 0, -1, -1, -1};
inline constexpr std::int32_t kNeighbourDCol[kNeighbourCount] = {1, 1, 0, -1, -1, -1, 0, 1};
[[nodiscard]] constexpr bool is_diagonal(std::int32_t direction) { return (direction & 1) == 1; }

/// Reads an ESRI ASCII grid. Throws IoError naming the offending line.
[[nodiscard]] RasterGrid read_ascii_grid(const std::filesystem::path& path);
/// Writes an ESRI ASCII grid with 17 significant digits.
void write_ascii_grid(const RasterGrid& grid, const std::filesystem::path& path);

/// Copies a window; the geotransform is shifted so cells keep their map coordinates.
[[nodiscard]] RasterGrid crop(const RasterGrid& grid, std::int32_t row0, std::int32_t col0,
                              std::int32_t rows, std::int32_t cols);

/// Steepest downslope gradient over the active 8-neighbourhood, clamped at 0.
[[nodiscard]] RasterGrid slope(const RasterGrid& dem);

/// Maps active values onto [0, 1]; a constant grid maps to 0.
[[nodiscard]] RasterGrid minmax_normalize(const RasterGrid& grid);

} // namespace camf
