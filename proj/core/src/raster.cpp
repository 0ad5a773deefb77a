#include "camf/raster.hpp"

#include "camf/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>

namespace camf {

RasterGrid::RasterGrid(std::int32_t rows, std::int32_t cols, double cell_size, double fill,
                       double nodata_value, double origin_x, double origin_y)
    : rows_(rows), cols_(cols), cell_size_(cell_size), origin_x_(origin_x), origin_y_(origin_y),
      nodata_(nodata_value) {
  if (rows <= 0 || cols <= 0) {
    throw ConfigError("raster dimensions must be positive, got " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
  if (!(cell_size > 0.0)) {
    throw ConfigError("raster cell size must be positive");
  }
  values_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill);
}

std::int32_t RasterGrid::active_count() const {
  return static_cast<std::int32_t>(
      std::count_if(values_.begin(), values_.end(), [this](double v) { return v != nodata_; }));
}

bool RasterGrid::same_frame(const RasterGrid& other) const {
  return rows_ == other.rows_ && cols_ == other.cols_ && cell_size_ == other.cell_size_ &&
         origin_x_ == other.origin_x_ && origin_y_ == other.origin_y_;
}

bool RasterGrid::same_mask(const RasterGrid& other) const {
  if (!same_frame(other)) {
    return false;
  }
  for (std::int32_t i = 0; i < size(); ++i) {
    if (is_active(i) != other.is_active(i)) {
      return false;
    }
  }
  return true;
}

RasterGrid RasterGrid::like(double fill) const {
  RasterGrid out = *this;
  for (double& v : out.values_) {
    v = v == nodata_ ? nodata_ : fill;
  }
  return out;
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool parse_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') {
    token.remove_prefix(1);
  }
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string located(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  return path.string() + ":" + std::to_string(line) + ": " + what;
}

} // namespace

RasterGrid read_ascii_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open raster '" + path.string() + "'");
  }

  static constexpr std::array<std::string_view, 6> kKeys = {
      "ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"};
  std::array<double, 6> header{};
  std::array<bool, 6> seen{};

  std::string line;
  std::size_t line_no = 0;
  for (std::size_t h = 0; h < kKeys.size(); ++h) {
    if (!std::getline(in, line)) {
      throw IoError(located(path, line_no + 1, "truncated header, expected 6 header lines"));
    }
    ++line_no;
    std::istringstream fields(line);
    std::string key;
    std::string value;
    if (!(fields >> key >> value)) {
      throw IoError(located(path, line_no, "malformed header line '" + line + "'"));
    }
    const auto slot = std::find(kKeys.begin(), kKeys.end(), lower(key));
    if (slot == kKeys.end()) {
      throw IoError(located(path, line_no, "unknown header key '" + key + "'"));
    }
    const auto k = static_cast<std::size_t>(slot - kKeys.begin());
    if (seen[k]) {
      throw IoError(located(path, line_no, "duplicate header key '" + key + "'"));
    }
    if (!parse_double(value, header[k])) {
      throw IoError(located(path, line_no, "non-numeric header value '" + value + "'"));
    }
    seen[k] = true;
  }

  const double ncols = header[0];
  const double nrows = header[1];
  if (ncols < 1 || nrows < 1 || ncols != std::floor(ncols) || nrows != std::floor(nrows)) {
    throw IoError(located(path, 2, "ncols/nrows must be positive integers"));
  }
  if (!(header[4] > 0.0)) {
    throw IoError(located(path, 5, "cellsize must be positive"));
  }

  RasterGrid grid(static_cast<std::int32_t>(nrows), static_cast<std::int32_t>(ncols), header[4],
                  0.0, header[5], header[2], header[3]);
  const auto expected = static_cast<std::size_t>(grid.size());
  std::size_t count = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::string token;
    while (tokens >> token) {
      if (count >= expected) {
        throw IoError(located(path, line_no,
                              "too many values: grid declares " + std::to_string(expected)));
      }
      double v = 0.0;
      if (!parse_double(token, v)) {
        throw IoError(located(path, line_no, "non-numeric token '" + token + "'"));
      }
      grid[static_cast<std::int32_t>(count++)] = v;
    }
  }
  if (count != expected) {
    throw IoError(located(path, line_no,
                          "token count mismatch: expected " + std::to_string(expected) +
                              " values, found " + std::to_string(count) + " (short by " +
                              std::to_string(expected - count) + ")"));
  }
  return grid;
}

void write_ascii_grid(const RasterGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write raster '" + path.string() + "'");
  }
  char buf[64];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string_view(buf);
  };
  out << "ncols " << grid.cols() << '\n' << "nrows " << grid.rows() << '\n';
  out << "xllcorner " << fmt(grid.origin_x()) << '\n';
  out << "yllcorner " << fmt(grid.origin_y()) << '\n';
  out << "cellsize " << fmt(grid.cell_size()) << '\n';
  out << "NODATA_value " << fmt(grid.nodata_value()) << '\n';
  for (std::int32_t r = 0; r < grid.rows(); ++r) {
    for (std::int32_t c = 0; c < grid.cols(); ++c) {
      if (c > 0) {
        out << ' ';
      }
      out << fmt(grid.at(r, c));
    }
    out << '\n';
  }
  if (!out) {
    throw IoError("failed writing raster '" + path.string() + "'");
  }
}

RasterGrid crop(const RasterGrid& grid, std::int32_t row0, std::int32_t col0, std::int32_t rows,
                std::int32_t cols) {
  if (row0 < 0 || col0 < 0 || rows <= 0 || cols <= 0 || row0 + rows > grid.rows() ||
      col0 + cols > grid.cols()) {
    throw ConfigError("crop window (" + std::to_string(row0) + "," + std::to_string(col0) + ") " +
                      std::to_string(rows) + "x" + std::to_string(cols) + " outside " +
                      std::to_string(grid.rows()) + "x" + std::to_string(grid.cols()) + " grid");
  }
  // Lower-left corner moves right by col0 cells and up by the rows dropped below the window.
  const double below = static_cast<double>(grid.rows() - row0 - rows);
  RasterGrid out(rows, cols, grid.cell_size(), 0.0, grid.nodata_value(),
                 grid.origin_x() + col0 * grid.cell_size(),
                 grid.origin_y() + below * grid.cell_size());
  for (std::int32_t r = 0; r < rows; ++r) {
    for (std::int32_t c = 0; c < cols; ++c) {
      out.at(r, c) = grid.at(row0 + r, col0 + c);
    }
  }
  return out;
}

RasterGrid slope(const RasterGrid& dem) {
  RasterGrid out = dem.like(0.0);
  const double diagonal = dem.cell_size() * std::sqrt(2.0);
  for (std::int32_t r = 0; r < dem.rows(); ++r) {
    for (std::int32_t c = 0; c < dem.cols(); ++c) {
      if (!dem.is_active(r, c)) {
        continue;
      }
      const double z = dem.at(r, c);
      double steepest = 0.0;
      for (std::int32_t d = 0; d < kNeighbourCount; ++d) {
        const std::int32_t nr = r + kNeighbourDRow[d];
        const std::int32_t nc = c + kNeighbourDCol[d];
        if (!dem.is_active(nr, nc)) {
          continue;
        }
        const double distance = is_diagonal(d) ? diagonal : dem.cell_size();
        steepest = std::max(steepest, (z - dem.at(nr, nc)) / distance);
      }
      out.at(r, c) = steepest;
    }
  }
  return out;
}

RasterGrid minmax_normalize(const RasterGrid& grid) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::int32_t i = 0; i < grid.size(); ++i) {
    if (grid.is_active(i)) {
      lo = std::min(lo, grid[i]);
      hi = std::max(hi, grid[i]);
    }
  }
  RasterGrid out = grid;
  const double range = hi - lo;
  for (std::int32_t i = 0; i < grid.size(); ++i) {
    if (grid.is_active(i)) {
      out[i] = range > 0.0 ? (grid[i] - lo) / range : 0.0;
    }
  }
  return out;
}

} // namespace camf
