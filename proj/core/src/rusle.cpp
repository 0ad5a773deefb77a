#include "camf/rusle.hpp"

#include "camf/error.hpp"
#include "camf/flowgraph.hpp"
#include "camf/keyvalue.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

namespace camf {

FactorTable FactorTable::load(const std::filesystem::path& path) {
  FactorTable table;
  const std::string origin = path.string();
  for (const KeyValue& kv : read_key_values(path)) {
    const KeyValue code_kv{kv.key, kv.key, kv.line};
    const auto code = parse_integer(code_kv, origin);
    const double value = parse_real(kv, origin);
    if (!(value >= 0.0)) {
      throw IoError(origin + ":" + std::to_string(kv.line) + ": factor must be non-negative");
    }
    if (!table.factors.emplace(static_cast<std::int32_t>(code), value).second) {
      throw IoError(origin + ":" + std::to_string(kv.line) + ": duplicate class code " + kv.key);
    }
  }
  return table;
}

ParamDerivation ParamDerivation::load(const std::filesystem::path& path) {
  ParamDerivation d;
  const std::string origin = path.string();
  for (const KeyValue& kv : read_key_values(path)) {
    double* slot = nullptr;
    if (kv.key == "alpha2_of_alpha1") slot = &d.alpha2_of_alpha1;
    else if (kv.key == "rho1_of_alpha1") slot = &d.rho1_of_alpha1;
    else if (kv.key == "rho2_of_alpha1") slot = &d.rho2_of_alpha1;
    else if (kv.key == "sigma1_of_alpha1") slot = &d.sigma1_of_alpha1;
    else if (kv.key == "sigma2_of_alpha1") slot = &d.sigma2_of_alpha1;
    else if (kv.key == "gamma2_of_gamma1") slot = &d.gamma2_of_gamma1;
    else {
      throw IoError(origin + ":" + std::to_string(kv.line) + ": unknown derivation key '" + kv.key + "'");
    }
    *slot = parse_real(kv, origin);
  }
  d.validate();
  return d;
}

void ParamDerivation::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write '" + path.string() + "'");
  }
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "alpha2_of_alpha1 = %.17g\nrho1_of_alpha1 = %.17g\nrho2_of_alpha1 = %.17g\n"
                "sigma1_of_alpha1 = %.17g\nsigma2_of_alpha1 = %.17g\ngamma2_of_gamma1 = %.17g\n",
                alpha2_of_alpha1, rho1_of_alpha1, rho2_of_alpha1, sigma1_of_alpha1, sigma2_of_alpha1,
                gamma2_of_gamma1);
  out << buf;
}

void ParamDerivation::validate() const {
  auto fail = [](const std::string& what) { throw DomainError("derivation factors: " + what); };
  const double all[] = {alpha2_of_alpha1, rho1_of_alpha1, rho2_of_alpha1,
                        sigma1_of_alpha1, sigma2_of_alpha1, gamma2_of_gamma1};
  for (const double v : all) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      fail("all factors must be finite and non-negative");
    }
  }
  if (rho1_of_alpha1 > sigma1_of_alpha1) fail("rho1_of_alpha1 > sigma1_of_alpha1");
  if (rho2_of_alpha1 > sigma2_of_alpha1) fail("rho2_of_alpha1 > sigma2_of_alpha1");
  if (alpha2_of_alpha1 > 1.0) fail("alpha2_of_alpha1 > 1 (afforestation must not raise production)");
  if (gamma2_of_gamma1 > 1.0) fail("gamma2_of_gamma1 > 1 (afforestation must not raise the flow factor)");
  if (rho2_of_alpha1 < rho1_of_alpha1) fail("rho2_of_alpha1 < rho1_of_alpha1");
  if (sigma2_of_alpha1 < sigma1_of_alpha1) fail("sigma2_of_alpha1 < sigma1_of_alpha1");
}

namespace {

const RasterGrid* raster_of(const Factor& f) { return std::get_if<RasterGrid>(&f); }

double value_at(const Factor& f, std::int32_t i) {
  if (const auto* g = raster_of(f)) {
    return (*g)[i];
  }
  return std::get<double>(f);
}

} // namespace

RasterGrid rusle_alpha(const Factor& r, const RasterGrid& k, const RasterGrid& ls, const RasterGrid& c,
                       const Factor& p) {
  const RasterGrid* grids[] = {&k, &ls, &c, raster_of(r), raster_of(p)};
  for (const RasterGrid* g : grids) {
    if (g && !g->same_frame(k)) {
      throw ConfigError("RUSLE factor rasters differ in dimensions or geotransform");
    }
  }
  RasterGrid out = k;
  for (std::int32_t i = 0; i < out.size(); ++i) {
    bool active = true;
    for (const RasterGrid* g : grids) {
      active = active && (!g || g->is_active(i));
    }
    out[i] = active ? value_at(r, i) * k[i] * ls[i] * c[i] * value_at(p, i) : out.nodata_value();
  }
  return out;
}

RasterGrid classify(const RasterGrid& classes, const FactorTable& table) {
  RasterGrid out = classes;
  for (std::int32_t i = 0; i < classes.size(); ++i) {
    if (!classes.is_active(i)) {
      continue;
    }
    const double v = classes[i];
    const auto code = static_cast<std::int32_t>(std::lround(v));
    const auto hit = table.factors.find(code);
    if (static_cast<double>(code) != v || hit == table.factors.end()) {
      const CellIndex idx = CellIndex::from_linear(i, classes.cols());
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      throw ConfigError("unmapped class code " + std::string(buf) + " first seen at cell (" +
                        std::to_string(idx.row) + "," + std::to_string(idx.col) + ")");
    }
    out[i] = hit->second;
  }
  return out;
}

CellParams derive_params(const RasterGrid& alpha1, const RasterGrid& gamma1,
                         const ParamDerivation& d, double cell_area_ha) {
  d.validate();
  if (!alpha1.same_frame(gamma1)) {
    throw ConfigError("alpha1 and gamma1 rasters are not aligned");
  }
  if (!(cell_area_ha > 0.0)) {
    throw ConfigError("cell area must be positive");
  }
  CellParams p = CellParams::uniform(alpha1.size(), 0.0, 0.0, 0.0, 0.0);
  for (std::int32_t i = 0; i < alpha1.size(); ++i) {
    if (!alpha1.is_active(i)) {
      continue;
    }
    const CellIndex idx = CellIndex::from_linear(i, alpha1.cols());
    const std::string where = " at cell (" + std::to_string(idx.row) + "," + std::to_string(idx.col) + ")";
    if (!gamma1.is_active(i)) {
      throw ConfigError("gamma1 is nodata" + where + " where alpha1 is active");
    }
    const double a = alpha1[i] * cell_area_ha;
    const double g = gamma1[i];
    if (!(a >= 0.0)) {
      throw DomainError("negative sediment production" + where);
    }
    if (!(g >= 0.0 && g <= 1.0)) {
      throw DomainError("gamma1 outside [0, 1]" + where);
    }
    const auto c = static_cast<std::size_t>(i);
    p.alpha[0][c] = a;
    p.alpha[1][c] = d.alpha2_of_alpha1 * a;
    p.rho[0][c] = d.rho1_of_alpha1 * a;
    p.rho[1][c] = d.rho2_of_alpha1 * a;
    p.sigma[0][c] = d.sigma1_of_alpha1 * a;
    p.sigma[1][c] = d.sigma2_of_alpha1 * a;
    p.gamma[0][c] = g;
    p.gamma[1][c] = d.gamma2_of_gamma1 * g;
  }
  return p;
}

RasterGrid gamma1_from_dem(const RasterGrid& dem) { return minmax_normalize(slope(dem)); }

double moore_burch_ls(double specific_area, double slope_angle) {
  return std::pow(specific_area / 22.13, 0.4) * std::pow(std::sin(slope_angle) / 0.0896, 1.3);
}

RasterGrid simple_ls(const RasterGrid& dem) {
  const FlowGraph graph = build_flow_graph(dem, Routing::sfd);
  std::vector<double> upslope(static_cast<std::size_t>(dem.size()), 1.0);
  for (const std::int32_t c : graph.order()) {
    for (const FlowEdge& e : graph.out_edges(c)) {
      upslope[static_cast<std::size_t>(e.to)] += upslope[static_cast<std::size_t>(c)];
    }
  }
  const RasterGrid gradient = slope(dem);
  RasterGrid out = dem.like(0.0);
  const double area = dem.cell_size() * dem.cell_size();
  for (std::int32_t i = 0; i < dem.size(); ++i) {
    if (dem.is_active(i)) {
      const double specific_area = upslope[static_cast<std::size_t>(i)] * area / dem.cell_size();
      out[i] = moore_burch_ls(specific_area, std::atan(gradient[i]));
    }
  }
  return out;
}

} // namespace camf
