#pragma once

// Pattern diagnostics on real 2D grids: dominant transverse wavenumber,
// six-fold order of the dominant spectral ring, bunching contrast and
// field-density correlation.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "hexcav/csv.hpp"
#include "hexcav/error.hpp"
#include "hexcav/fft.hpp"
#include "hexcav/grid.hpp"

namespace hexcav::diagnostics {

enum class Window { none, hann };

struct RealGridView {
  GridGeometry geom;
  std::span<const double> values;
};

inline RealGridView view(const DensityGrid& n) { return {n.geom, n.values}; }

struct Spectrum {
  GridGeometry geom;
  std::vector<double> power;     // |FFT|^2 of the mean-removed (windowed) grid
  double total = 0;              // summed over non-DC modes
  double dk = 0;                 // radial bin width
  std::vector<double> radial;    // mean power per integer radius (units of dk)
  bool flat = false;
};

inline Spectrum power_spectrum(const RealGridView& g, Window window = Window::none) {
  const std::size_t sz = g.geom.size();
  if (sz == 0 || g.values.size() != sz) throw ValidationError("power_spectrum: grid payload mismatch");
  Spectrum out;
  out.geom = g.geom;
  double mean = 0;
  double peak = 0;
  for (double v : g.values) {
    mean += v;
    peak = std::max(peak, std::abs(v));
  }
  mean /= static_cast<double>(sz);
  double var = 0;
  for (double v : g.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(sz);
  out.flat = !(var > 1e-24 * peak * peak) || peak == 0;

  Fft2d fft(g.geom.nx, g.geom.ny);
  auto buf = fft.buffer();
  for (std::size_t iy = 0; iy < g.geom.ny; ++iy)
    for (std::size_t ix = 0; ix < g.geom.nx; ++ix) {
      double w = 1.0;
      if (window == Window::hann) {
        w = 0.25 * (1.0 - std::cos(2.0 * std::numbers::pi * ix / g.geom.nx)) *
            (1.0 - std::cos(2.0 * std::numbers::pi * iy / g.geom.ny));
      }
      const std::size_t i = iy * g.geom.nx + ix;
      buf[i] = w * (g.values[i] - mean);
    }
  fft.forward();
  out.power.resize(sz);
  for (std::size_t i = 0; i < sz; ++i) out.power[i] = std::norm(buf[i]);
  out.power[0] = 0;
  for (std::size_t i = 1; i < sz; ++i) out.total += out.power[i];

  // Radial profile: each mode's power is shared linearly between the two
  // nearest integer radii, which keeps off-grid rings from snapping to a bin.
  out.dk = std::min(2.0 * std::numbers::pi / g.geom.lx, 2.0 * std::numbers::pi / g.geom.ly);
  std::vector<double> weight;
  for (std::size_t iy = 0; iy < g.geom.ny; ++iy)
    for (std::size_t ix = 0; ix < g.geom.nx; ++ix) {
      const std::size_t i = iy * g.geom.nx + ix;
      if (i == 0) continue;
      const double r = std::hypot(g.geom.kx(ix), g.geom.ky(iy)) / out.dk;
      const auto lo = static_cast<std::size_t>(r);
      const double frac = r - static_cast<double>(lo);
      if (lo + 2 > out.radial.size()) {
        out.radial.resize(lo + 2, 0.0);
        weight.resize(lo + 2, 0.0);
      }
      out.radial[lo] += (1.0 - frac) * out.power[i];
      weight[lo] += 1.0 - frac;
      out.radial[lo + 1] += frac * out.power[i];
      weight[lo + 1] += frac;
    }
  for (std::size_t b = 0; b < out.radial.size(); ++b)
    if (weight[b] > 0) out.radial[b] /= weight[b];
  return out;
}

/// Peak of the azimuthally averaged spectrum, refined by a parabola through the
/// neighbouring radial bins. nullopt for a flat grid.
inline std::optional<double> dominant_wavenumber(const Spectrum& sp) {
  if (sp.flat || sp.radial.size() < 2) return std::nullopt;
  std::size_t best = 1;
  for (std::size_t b = 1; b < sp.radial.size(); ++b)
    if (sp.radial[b] > sp.radial[best]) best = b;
  double offset = 0;
  if (best >= 2 && best + 1 < sp.radial.size()) {
    const double pm = sp.radial[best - 1];
    const double p0 = sp.radial[best];
    const double pp = sp.radial[best + 1];
    const double denom = pm - 2.0 * p0 + pp;
    if (denom < 0) offset = std::clamp(0.5 * (pm - pp) / denom, -0.5, 0.5);
  }
  return (static_cast<double>(best) + offset) * sp.dk;
}

inline std::optional<double> dominant_wavenumber(const RealGridView& g, Window w = Window::none) {
  return dominant_wavenumber(power_spectrum(g, w));
}

inline constexpr double kRingHalfWidthBins = 1.5;

struct RingMode {
  double kx, ky, power;
};

inline std::vector<RingMode> ring_modes(const Spectrum& sp, double k_ring) {
  std::vector<RingMode> out;
  const GridGeometry& g = sp.geom;
  for (std::size_t iy = 0; iy < g.ny; ++iy)
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      if (ix == 0 && iy == 0) continue;
      const double kx = g.kx(ix);
      const double ky = g.ky(iy);
      if (std::abs(std::hypot(kx, ky) - k_ring) <= kRingHalfWidthBins * sp.dk)
        out.push_back({kx, ky, sp.power[iy * g.nx + ix]});
    }
  return out;
}

inline double ring_power_fraction(const Spectrum& sp, double k_ring) {
  if (!(sp.total > 0)) return 0.0;
  double ring = 0;
  for (const auto& m : ring_modes(sp, k_ring)) ring += m.power;
  return ring / sp.total;
}

/// Angular autocorrelation of the ring power at 60 degrees. The angular
/// profile is a kernel-smoothed local mean on 2-degree bins. The kernel alone
/// correlates neighbouring angles, so the score is measured against the
/// autocorrelation that independent mode powers would produce on the same ring
/// (modes k and -k carry equal power for real input): that baseline maps to
/// zero, a six-fold ring to one.
inline double ring_hexagonality(const Spectrum& sp, double k_ring) {
  constexpr int bins = 180;
  constexpr int lag = bins / 6;
  const GridGeometry& g = sp.geom;
  struct Mode {
    double angle;
    double power;
    std::size_t grid_index;
  };
  std::vector<Mode> modes;
  for (std::size_t iy = 0; iy < g.ny; ++iy)
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      if (ix == 0 && iy == 0) continue;
      const double kx = g.kx(ix);
      const double ky = g.ky(iy);
      if (std::abs(std::hypot(kx, ky) - k_ring) <= kRingHalfWidthBins * sp.dk)
        modes.push_back({std::atan2(ky, kx), sp.power[iy * g.nx + ix], iy * g.nx + ix});
    }
  if (modes.empty()) return 0.0;
  const std::size_t nm = modes.size();
  // Partner of each mode under k -> -k, or nm when it falls outside the ring.
  std::vector<std::size_t> partner(nm, nm);
  {
    std::vector<std::size_t> slot(g.size(), nm);
    for (std::size_t m = 0; m < nm; ++m) slot[modes[m].grid_index] = m;
    for (std::size_t m = 0; m < nm; ++m) {
      const std::size_t ix = modes[m].grid_index % g.nx;
      const std::size_t iy = modes[m].grid_index / g.nx;
      partner[m] = slot[((g.ny - iy) % g.ny) * g.nx + (g.nx - ix) % g.nx];
    }
  }

  const double pi = std::numbers::pi;
  const double ring_radius_bins = std::max(k_ring / sp.dk, 1.0);
  const double width = std::max(3.0 * pi / 180.0, 0.75 / ring_radius_bins);
  // Row-normalized smoothing weights, centred over angle bins.
  std::vector<double> W(static_cast<std::size_t>(bins) * nm);
  std::vector<double> profile(bins, 0.0);
  for (int b = 0; b < bins; ++b) {
    const double theta = 2.0 * pi * (b + 0.5) / bins;
    double* row = &W[static_cast<std::size_t>(b) * nm];
    double den = 0;
    for (std::size_t m = 0; m < nm; ++m) {
      const double d = std::remainder(modes[m].angle - theta, 2.0 * pi);
      den += (row[m] = std::exp(-0.5 * d * d / (width * width)));
    }
    for (std::size_t m = 0; m < nm; ++m) {
      row[m] /= den;
      profile[b] += row[m] * modes[m].power;
    }
  }
  std::vector<double> col_mean(nm, 0.0);
  for (int b = 0; b < bins; ++b)
    for (std::size_t m = 0; m < nm; ++m) col_mean[m] += W[static_cast<std::size_t>(b) * nm + m] / bins;
  for (int b = 0; b < bins; ++b)
    for (std::size_t m = 0; m < nm; ++m) W[static_cast<std::size_t>(b) * nm + m] -= col_mean[m];

  double mean = 0;
  for (double p : profile) mean += p;
  mean /= bins;
  double c0 = 0, c60 = 0;
  for (int b = 0; b < bins; ++b) {
    const double a = profile[b] - mean;
    c0 += a * a;
    c60 += a * (profile[(b + lag) % bins] - mean);
  }
  if (!(c0 > 0)) return 0.0;

  // Expected c(60)/c(0) for independent powers: cov(P_m, P_n) is the same
  // constant for n = m and n = partner(m), zero otherwise.
  double b0 = 0, b60 = 0;
  for (int b = 0; b < bins; ++b) {
    const double* r0 = &W[static_cast<std::size_t>(b) * nm];
    const double* r1 = &W[static_cast<std::size_t>((b + lag) % bins) * nm];
    for (std::size_t m = 0; m < nm; ++m) {
      const double self0 = r0[m] + (partner[m] < nm && partner[m] != m ? r0[partner[m]] : 0.0);
      const double self1 = r1[m] + (partner[m] < nm && partner[m] != m ? r1[partner[m]] : 0.0);
      b0 += r0[m] * self0;
      b60 += r0[m] * self1;
    }
  }
  const double baseline = b0 > 0 ? b60 / b0 : 0.0;
  if (!(baseline < 1.0)) return 0.0;
  return std::clamp((c60 / c0 - baseline) / (1.0 - baseline), -1.0, 1.0);
}

inline std::optional<double> hexagonality(const RealGridView& g, Window w = Window::none) {
  const Spectrum sp = power_spectrum(g, w);
  const auto k = dominant_wavenumber(sp);
  if (!k) return std::nullopt;
  return ring_hexagonality(sp, *k);
}

/// Local maxima of the spectrum on the ring, strongest first.
inline std::vector<RingMode> ring_peaks(const Spectrum& sp, double k_ring, std::size_t max_peaks = 12) {
  const GridGeometry& g = sp.geom;
  std::vector<RingMode> out;
  for (std::size_t iy = 0; iy < g.ny; ++iy)
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      if (ix == 0 && iy == 0) continue;
      const double kx = g.kx(ix), ky = g.ky(iy);
      if (std::abs(std::hypot(kx, ky) - k_ring) > kRingHalfWidthBins * sp.dk) continue;
      const double p = sp.power[iy * g.nx + ix];
      if (!(p > 0)) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const std::size_t jx = (ix + g.nx + dx) % g.nx;
          const std::size_t jy = (iy + g.ny + dy) % g.ny;
          if (sp.power[jy * g.nx + jx] > p) {
            is_max = false;
            break;
          }
        }
      if (is_max) out.push_back({kx, ky, p});
    }
  std::stable_sort(out.begin(), out.end(), [](const RingMode& a, const RingMode& b) {
    return std::tie(b.power, a.kx, a.ky) < std::tie(a.power, b.kx, b.ky);
  });
  if (out.size() > max_peaks) out.resize(max_peaks);
  return out;
}

inline double bunching_contrast(std::span<const double> n) {
  if (n.empty()) throw ValidationError("bunching_contrast: empty grid");
  double mean = 0;
  for (double v : n) mean += v;
  mean /= static_cast<double>(n.size());
  if (!(mean > 0)) throw ValidationError("bunching_contrast: mean density must be positive");
  double var = 0;
  for (double v : n) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n.size());
  return std::sqrt(var) / mean;
}

inline double bunching_contrast(const DensityGrid& n) { return bunching_contrast(std::span<const double>(n.values)); }

/// Pearson coefficient; nullopt when either input is constant.
inline std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw ValidationError("pearson: size mismatch");
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  const auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (!(saa > 0) || !(sbb > 0) || constant(a) || constant(b)) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

inline std::optional<double> field_density_correlation(const FieldGrid& E, const DensityGrid& n) {
  require_congruent(E.geom, n.geom, "field_density_correlation");
  const auto s = E.intensity();
  return pearson(s, n.values);
}

struct SpectrumReport {
  std::optional<double> k_dominant;
  double ring_power_fraction = 0;
  std::optional<double> hexagonality;
  std::optional<double> bunching;
  std::optional<double> field_density_correlation;
  std::vector<RingMode> peak_list;
};

/// Full report on a real grid (intensity or density). Bunching comes from
/// `density` when given, otherwise from the grid itself when its mean is positive.
inline SpectrumReport analyze(const RealGridView& g, Window w = Window::none,
                              const DensityGrid* density = nullptr,
                              std::span<const double> intensity_for_correlation = {}) {
  SpectrumReport r;
  const Spectrum sp = power_spectrum(g, w);
  r.k_dominant = dominant_wavenumber(sp);
  if (r.k_dominant) {
    r.ring_power_fraction = ring_power_fraction(sp, *r.k_dominant);
    r.hexagonality = ring_hexagonality(sp, *r.k_dominant);
    r.peak_list = ring_peaks(sp, *r.k_dominant);
  }
  std::span<const double> nvals = density ? std::span<const double>(density->values) : g.values;
  double mean = 0;
  for (double v : nvals) mean += v;
  if (mean > 0) r.bunching = bunching_contrast(nvals);
  if (density && !intensity_for_correlation.empty())
    r.field_density_correlation = pearson(intensity_for_correlation, density->values);
  return r;
}

inline SpectrumReport analyze(const FieldGrid& E, const DensityGrid& n, Window w = Window::none) {
  require_congruent(E.geom, n.geom, "analyze");
  const auto s = E.intensity();
  return analyze(RealGridView{E.geom, s}, w, &n, s);
}

inline double value_or_nan(const std::optional<double>& v) {
  return v.value_or(std::numeric_limits<double>::quiet_NaN());
}

inline std::string to_csv(const SpectrumReport& r) {
  csv::Writer w({"k_dominant", "ring_power_fraction", "hexagonality", "bunching", "field_density_correlation"});
  w.num(value_or_nan(r.k_dominant))
      .num(r.ring_power_fraction)
      .num(value_or_nan(r.hexagonality))
      .num(value_or_nan(r.bunching))
      .num(value_or_nan(r.field_density_correlation));
  w.end_row();
  return w.str();
}

inline std::string peaks_to_csv(const SpectrumReport& r) {
  csv::Writer w({"kx", "ky", "power"});
  for (const auto& p : r.peak_list) {
    w.num(p.kx).num(p.ky).num(p.power);
    w.end_row();
  }
  return w.str();
}

}  // namespace hexcav::diagnostics
