#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "hexcav/error.hpp"

namespace hexcav {

using cdouble = std::complex<double>;

/// Periodic nx-by-ny grid covering lx-by-ly (scaled units). Row-major with x
/// fastest: index = iy * nx + ix.
struct GridGeometry {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double lx = 0;
  double ly = 0;

  std::size_t size() const noexcept { return nx * ny; }
  double dx() const noexcept { return lx / static_cast<double>(nx); }
  double dy() const noexcept { return ly / static_cast<double>(ny); }
  double x(std::size_t ix) const noexcept { return dx() * static_cast<double>(ix); }
  double y(std::size_t iy) const noexcept { return dy() * static_cast<double>(iy); }

  // Signed FFT mode numbers and wavenumbers.
  static long mode(std::size_t i, std::size_t n) noexcept {
    const long li = static_cast<long>(i);
    const long ln = static_cast<long>(n);
    return li <= ln / 2 ? li : li - ln;
  }
  double kx(std::size_t ix) const noexcept {
    return 2.0 * std::numbers::pi * static_cast<double>(mode(ix, nx)) / lx;
  }
  double ky(std::size_t iy) const noexcept {
    return 2.0 * std::numbers::pi * static_cast<double>(mode(iy, ny)) / ly;
  }

  bool operator==(const GridGeometry&) const = default;
};

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

struct FieldGrid {
  GridGeometry geom;
  std::vector<cdouble> values;
  double time = 0;

  FieldGrid() = default;
  explicit FieldGrid(GridGeometry g, cdouble fill = {}) : geom(g), values(g.size(), fill) {}

  cdouble& at(std::size_t ix, std::size_t iy) { return values[iy * geom.nx + ix]; }
  const cdouble& at(std::size_t ix, std::size_t iy) const { return values[iy * geom.nx + ix]; }

  std::vector<double> intensity() const {
    std::vector<double> s(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) s[i] = std::norm(values[i]);
    return s;
  }
};

struct DensityGrid {
  GridGeometry geom;
  std::vector<double> values;
  double time = 0;

  DensityGrid() = default;
  explicit DensityGrid(GridGeometry g, double fill = 1.0) : geom(g), values(g.size(), fill) {}

  double& at(std::size_t ix, std::size_t iy) { return values[iy * geom.nx + ix]; }
  const double& at(std::size_t ix, std::size_t iy) const { return values[iy * geom.nx + ix]; }

  double mean() const {
    double sum = 0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
  }
};

inline void require_congruent(const GridGeometry& a, const GridGeometry& b, const char* what) {
  if (!(a == b)) throw ValidationError(std::string(what) + ": grid shapes differ");
  if (a.size() == 0) throw ValidationError(std::string(what) + ": empty grid");
}

}  // namespace hexcav
