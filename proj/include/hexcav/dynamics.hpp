#pragma once

// Coupled cavity-field / atomic-density dynamics on a periodic transverse grid,
// in scaled units (time 1/kappa, length sqrt(a)):
//
//   dE/dt = -(1 + i Theta) E + A(r) + i lap E - C (1 + i Delta) n E / (1 + |E|^2)
//   dn/dt = d div[ sigma n grad ln(1 + |E|^2) + grad n ]
//
// The density equation is in flux form, so the mean density is conserved and
// the stationary state at frozen field is n ~ (1 + |E|^2)^(-sigma).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hexcav/error.hpp"
#include "hexcav/fft.hpp"
#include "hexcav/grid.hpp"
#include "hexcav/lsa.hpp"
#include "hexcav/params.hpp"

namespace hexcav::dynamics {

struct PumpProfile {
  enum class Kind { plane, supergaussian };

  Kind kind = Kind::plane;
  cdouble amplitude{0.0, 0.0};  // A_I / kappa at the beam centre
  double width = 1.0;           // scaled length
  int order = 4;

  static PumpProfile plane(cdouble amplitude) { return {Kind::plane, amplitude, 1.0, 4}; }
  static PumpProfile supergaussian(cdouble amplitude, double width, int order = 4) {
    return {Kind::supergaussian, amplitude, width, order};
  }

  void validate() const {
    ProblemList p;
    p.check(std::isfinite(amplitude.real()) && std::isfinite(amplitude.imag()),
            "pump amplitude must be finite");
    if (kind == Kind::supergaussian) {
      p.check(width > 0, "pump width must be positive");
      p.check(order >= 1, "super-Gaussian order must be a positive integer");
    }
    p.throw_if_any("invalid pump profile");
  }

  // Envelope A exp(-(r/w)^(2m)) about the domain centre; constant for a plane wave.
  std::vector<cdouble> sample(const GridGeometry& g) const {
    std::vector<cdouble> out(g.size(), amplitude);
    if (kind == Kind::plane) return out;
    const double cx = 0.5 * g.lx;
    const double cy = 0.5 * g.ly;
    for (std::size_t iy = 0; iy < g.ny; ++iy)
      for (std::size_t ix = 0; ix < g.nx; ++ix) {
        const double rx = g.x(ix) - cx;
        const double ry = g.y(iy) - cy;
        const double r2 = (rx * rx + ry * ry) / (width * width);
        out[iy * g.nx + ix] = amplitude * std::exp(-std::pow(r2, order));
      }
    return out;
  }
};

enum class FieldMode { dynamic, adiabatic };

struct AdiabaticOptions {
  double tol = 1e-10;
  int max_iter = 1000;
};

struct SimConfig {
  std::size_t nx = 256;
  std::size_t ny = 256;
  double domain_size = 0;  // scaled length, units of sqrt(a)
  double dt = 1e-3;
  double t_end = 2000;
  PumpProfile pump;
  double noise_amplitude = 1e-3;
  std::uint64_t rng_seed = 1;
  FieldMode field_mode = FieldMode::dynamic;
  long long snapshot_stride = 1000;
  AdiabaticOptions adiabatic;

  GridGeometry geometry() const { return {nx, ny, domain_size, domain_size}; }
  long long total_steps() const { return std::llround(t_end / dt); }

  void validate() const {
    ProblemList p;
    p.check(nx >= 16 && is_power_of_two(nx), "nx must be a power of two >= 16");
    p.check(ny >= 16 && is_power_of_two(ny), "ny must be a power of two >= 16");
    p.check(domain_size > 0, "domain size must be positive");
    p.check(dt > 0, "dt must be positive");
    p.check(t_end >= 0, "t_end must be non-negative");
    p.check(noise_amplitude >= 0 && noise_amplitude < 2, "noise amplitude must lie in [0, 2)");
    p.check(snapshot_stride >= 1, "snapshot stride must be >= 1");
    p.check(adiabatic.tol > 0 && adiabatic.max_iter > 0, "adiabatic solver options must be positive");
    p.throw_if_any("invalid simulation config");
    pump.validate();
  }
};

struct SimState {
  FieldGrid field;
  DensityGrid density;
  long long step = 0;
  std::size_t clip_events = 0;  // cells clipped to zero density so far

  double time() const { return field.time; }
};

/// Spectral operators and workspaces for one grid and parameter set.
class Model {
 public:
  Model(const ScaledParams& sp, const GridGeometry& geom, const PumpProfile& pump)
      : sp_(sp), geom_(geom), fft_(geom.nx, geom.ny), rfft_(geom.nx, geom.ny), pump_(pump.sample(geom)) {
    if (geom.size() == 0 || !(geom.lx > 0) || !(geom.ly > 0))
      throw ValidationError("Model: empty or degenerate grid");
    const std::size_t n = geom.size();
    k2_.resize(n);
    mask_.resize(n);
    // Circular 2/3 rule: keep |k| up to a third of the smaller grid extent.
    const double k_cut = std::min(2.0 * std::numbers::pi * static_cast<double>(geom.nx / 3) / geom.lx,
                                  2.0 * std::numbers::pi * static_cast<double>(geom.ny / 3) / geom.ly);
    k_cut2_ = k_cut * k_cut * (1.0 + 1e-12);
    for (std::size_t iy = 0; iy < geom.ny; ++iy)
      for (std::size_t ix = 0; ix < geom.nx; ++ix) {
        const std::size_t i = iy * geom.nx + ix;
        const double kx = geom.kx(ix);
        const double ky = geom.ky(iy);
        k2_[i] = kx * kx + ky * ky;
        mask_[i] = k2_[i] <= k_cut2_ ? 1.0 : 0.0;
      }
    // Half spectrum of the real transforms. Odd derivatives drop the Nyquist modes.
    const std::size_t nh = rfft_.half();
    const std::size_t hs = rfft_.spectrum_size();
    hk2_.resize(hs);
    hkx_.resize(hs);
    hky_.resize(hs);
    hmask_.resize(hs);
    for (std::size_t iy = 0; iy < geom.ny; ++iy)
      for (std::size_t ix = 0; ix < nh; ++ix) {
        const std::size_t i = iy * nh + ix;
        const double kx = geom.kx(ix);
        const double ky = geom.ky(iy);
        hk2_[i] = kx * kx + ky * ky;
        hkx_[i] = (geom.nx % 2 == 0 && ix == geom.nx / 2) ? 0.0 : kx;
        hky_[i] = (geom.ny % 2 == 0 && iy == geom.ny / 2) ? 0.0 : ky;
        hmask_[i] = hk2_[i] <= k_cut2_ ? 1.0 : 0.0;
      }
    pump_hat_ = pump_;
    forward(pump_hat_);
  }

  const ScaledParams& params() const { return sp_; }
  const GridGeometry& geometry() const { return geom_; }
  const std::vector<cdouble>& pump() const { return pump_; }
  const std::vector<cdouble>& pump_spectrum() const { return pump_hat_; }
  const std::vector<double>& k2() const { return k2_; }
  const std::vector<double>& dealias_mask() const { return mask_; }
  double dealias_cutoff2() const { return k_cut2_; }
  double max_k2() const {
    double m = 0;
    for (double v : k2_) m = std::max(m, v);
    return m;
  }

  void forward(std::vector<cdouble>& v) {
    auto buf = fft_.buffer();
    std::copy(v.begin(), v.end(), buf.begin());
    fft_.forward();
    std::copy(buf.begin(), buf.end(), v.begin());
  }
  void backward(std::vector<cdouble>& v) {
    auto buf = fft_.buffer();
    std::copy(v.begin(), v.end(), buf.begin());
    fft_.backward();
    std::copy(buf.begin(), buf.end(), v.begin());
  }

  /// Saturable atomic term -C (1 + i Delta) n E / (1 + |E|^2), pointwise.
  void field_nonlinear(std::span<const cdouble> E, std::span<const double> n,
                       std::span<cdouble> out) const {
    const cdouble g = sp_.C * cdouble(1.0, sp_.Delta);
    for (std::size_t i = 0; i < E.size(); ++i) out[i] = -g * n[i] * E[i] / (1.0 + std::norm(E[i]));
  }

  std::vector<cdouble> rhs_field(std::span<const cdouble> E, std::span<const double> n) {
    const std::size_t sz = geom_.size();
    std::vector<cdouble> lap(E.begin(), E.end());
    forward(lap);
    for (std::size_t i = 0; i < sz; ++i) lap[i] *= -k2_[i];
    backward(lap);
    std::vector<cdouble> out(sz);
    field_nonlinear(E, n, out);
    const cdouble lin = -cdouble(1.0, sp_.Theta);
    const cdouble I(0.0, 1.0);
    for (std::size_t i = 0; i < sz; ++i) out[i] += lin * E[i] + pump_[i] + I * lap[i];
    return out;
  }

  /// Density tendency for intensity s. Drift fluxes are dealiased with the 2/3
  /// rule; diffusion acts on every mode. The k = 0 component is exactly zero.
  void density_tendency(std::span<const double> n, std::span<const double> s, std::span<double> out) {
    const std::size_t sz = geom_.size();
    const std::size_t hs = rfft_.spectrum_size();
    auto real = rfft_.real();
    auto spec = rfft_.spectrum();
    u_hat_.resize(hs);
    n_hat_.resize(hs);
    jx_hat_.resize(hs);
    gx_.resize(sz);
    gy_.resize(sz);

    for (std::size_t i = 0; i < sz; ++i) real[i] = std::log1p(s[i]);
    rfft_.forward();
    std::copy(spec.begin(), spec.end(), u_hat_.begin());
    std::copy(n.begin(), n.end(), real.begin());
    rfft_.forward();
    std::copy(spec.begin(), spec.end(), n_hat_.begin());

    const cdouble I(0.0, 1.0);
    for (std::size_t i = 0; i < hs; ++i) spec[i] = I * hkx_[i] * u_hat_[i];
    rfft_.backward();
    for (std::size_t i = 0; i < sz; ++i) gx_[i] = sp_.sigma * n[i] * real[i];
    for (std::size_t i = 0; i < hs; ++i) spec[i] = I * hky_[i] * u_hat_[i];
    rfft_.backward();
    for (std::size_t i = 0; i < sz; ++i) gy_[i] = sp_.sigma * n[i] * real[i];

    std::copy(gx_.begin(), gx_.end(), real.begin());
    rfft_.forward();
    std::copy(spec.begin(), spec.end(), jx_hat_.begin());
    std::copy(gy_.begin(), gy_.end(), real.begin());
    rfft_.forward();
    for (std::size_t i = 0; i < hs; ++i) {
      const cdouble drift = I * (hkx_[i] * jx_hat_[i] + hky_[i] * spec[i]) * hmask_[i];
      spec[i] = sp_.d * (drift - hk2_[i] * n_hat_[i]);
    }
    spec[0] = 0.0;
    rfft_.backward();
    std::copy(real.begin(), real.end(), out.begin());
  }

  std::vector<double> rhs_density(std::span<const double> n, std::span<const cdouble> E) {
    std::vector<double> s(E.size());
    for (std::size_t i = 0; i < E.size(); ++i) s[i] = std::norm(E[i]);
    std::vector<double> out(n.size());
    density_tendency(n, s, out);
    return out;
  }

 private:
  ScaledParams sp_;
  GridGeometry geom_;
  Fft2d fft_;
  RealFft2d rfft_;
  std::vector<cdouble> pump_;
  std::vector<cdouble> pump_hat_;
  std::vector<double> k2_, mask_;
  double k_cut2_ = 0;
  std::vector<double> hk2_, hkx_, hky_, hmask_;
  std::vector<cdouble> u_hat_, n_hat_, jx_hat_;
  std::vector<double> gx_, gy_;
};

inline void check_congruent(const FieldGrid& E, const DensityGrid& n) {
  require_congruent(E.geom, n.geom, "field/density");
  if (E.values.size() != E.geom.size() || n.values.size() != n.geom.size())
    throw ValidationError("grid payload does not match its geometry");
}

inline void check_non_negative(const DensityGrid& n) {
  for (double v : n.values)
    if (!(v >= 0)) throw ValidationError("density must be non-negative and finite");
}

inline std::vector<cdouble> rhs_field(const FieldGrid& E, const DensityGrid& n, const ScaledParams& sp,
                                      const PumpProfile& pump) {
  check_congruent(E, n);
  Model m(sp, E.geom, pump);
  return m.rhs_field(E.values, n.values);
}

inline std::vector<double> rhs_density(const DensityGrid& n, const FieldGrid& E, const ScaledParams& sp) {
  check_congruent(E, n);
  check_non_negative(n);
  Model m(sp, E.geom, PumpProfile{});
  return m.rhs_density(n.values, E.values);
}

/// n = (1 + s)^(-sigma) normalized to unit mean.
inline DensityGrid density_equilibrium(const FieldGrid& E, const ScaledParams& sp) {
  DensityGrid n(E.geom, 1.0);
  n.time = E.time;
  if (sp.sigma == 0) return n;
  std::vector<double> logn(E.values.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logn.size(); ++i) {
    logn[i] = -sp.sigma * std::log1p(std::norm(E.values[i]));
    top = std::max(top, logn[i]);
  }
  double sum = 0;
  for (std::size_t i = 0; i < logn.size(); ++i) sum += (n.values[i] = std::exp(logn[i] - top));
  const double scale = static_cast<double>(logn.size()) / sum;
  for (double& v : n.values) v *= scale;
  return n;
}

inline double max_abs(std::span<const cdouble> v) {
  double m = 0;
  for (const auto& x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Field steady state at frozen density. Damped Picard iteration on the
/// spectral linear operator shifted by the mean atomic response; exact in one
/// iteration when C = 0.
inline FieldGrid solve_field_adiabatic(Model& model, const DensityGrid& n, const AdiabaticOptions& opt = {},
                                       const FieldGrid* guess = nullptr) {
  const GridGeometry& g = model.geometry();
  require_congruent(g, n.geom, "solve_field_adiabatic");
  check_non_negative(n);
  const ScaledParams& sp = model.params();
  const std::size_t sz = g.size();
  const cdouble atom = sp.C * cdouble(1.0, sp.Delta);
  const auto& k2 = model.k2();
  const auto& A_hat = model.pump_spectrum();

  FieldGrid E(g);
  E.time = n.time;
  if (guess) {
    require_congruent(g, guess->geom, "solve_field_adiabatic guess");
    E.values = guess->values;
  }
  const cdouble shift = atom * n.mean() / (1.0 + [&] {
    double m = 0;
    for (const auto& v : E.values) m += std::norm(v);
    return m / static_cast<double>(sz);
  }());

  std::vector<cdouble> E_hat(E.values), nl(sz), res(sz);
  model.forward(E_hat);
  double omega = 1.0;
  double last = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iter; ++it) {
    model.field_nonlinear(E.values, n.values, nl);
    for (std::size_t i = 0; i < sz; ++i) nl[i] += shift * E.values[i];
    model.forward(nl);
    for (std::size_t i = 0; i < sz; ++i) {
      const cdouble den = cdouble(1.0, sp.Theta) + cdouble(0.0, k2[i]) + shift;
      res[i] = A_hat[i] + nl[i] - den * E_hat[i];
      nl[i] = den;  // reuse as operator storage
    }
    std::vector<cdouble> r_real(res);
    model.backward(r_real);
    const double residual = max_abs(r_real);
    if (residual < opt.tol) return E;
    if (residual > last) omega = std::max(omega * 0.5, 1.0 / 64.0);
    else omega = std::min(1.0, omega * 1.1);
    last = residual;
    for (std::size_t i = 0; i < sz; ++i) E_hat[i] += omega * res[i] / nl[i];
    E.values = E_hat;
    model.backward(E.values);
  }
  std::ostringstream msg;
  msg << "adiabatic field solver did not converge after " << opt.max_iter
      << " iterations (residual " << last << ")";
  throw NumericalError(msg.str());
}

inline FieldGrid solve_field_adiabatic(const DensityGrid& n, const ScaledParams& sp, const PumpProfile& pump,
                                       const AdiabaticOptions& opt = {}) {
  Model model(sp, n.geom, pump);
  return solve_field_adiabatic(model, n, opt);
}

/// Largest time step the split-step scheme accepts. The explicit atomic kick
/// resonates with the exact linear phase rotation when dt |Theta + k^2| nears
/// 2 pi for a retained field mode, so dt |Theta + k^2| is kept below 0.9 * 2 pi
/// over the dealiased disc. Explicit midpoint diffusion of the density needs
/// d k^2 dt <= 2 on every grid mode.
inline double max_stable_dt(const ScaledParams& sp, const GridGeometry& g, FieldMode mode = FieldMode::dynamic) {
  const double pi = std::numbers::pi;
  const double kx_nyq = pi * static_cast<double>(g.nx) / g.lx;
  const double ky_nyq = pi * static_cast<double>(g.ny) / g.ly;
  double bound = std::numeric_limits<double>::infinity();
  if (sp.d > 0) bound = 2.0 / (sp.d * (kx_nyq * kx_nyq + ky_nyq * ky_nyq));
  if (mode == FieldMode::dynamic) {
    const double k_cut = std::min(2.0 * pi * static_cast<double>(g.nx / 3) / g.lx,
                                  2.0 * pi * static_cast<double>(g.ny / 3) / g.ly);
    const double phase = std::max(std::abs(sp.Theta), std::abs(sp.Theta + k_cut * k_cut));
    if (phase > 0) bound = std::min(bound, 0.9 * 2.0 * pi / phase);
  }
  return bound;
}

/// Strang-split integrator: exact half step of the linear field part with the
/// pump folded in, explicit midpoint for the atomic coupling and the density
/// transport, second linear half step.
class Integrator {
 public:
  Integrator(const ScaledParams& sp, const SimConfig& cfg)
      : cfg_(validated(cfg)), model_(sp, cfg.geometry(), cfg.pump) {
    const double bound = max_stable_dt(sp, cfg_.geometry(), cfg_.field_mode);
    if (!(cfg_.dt <= bound)) {
      std::ostringstream msg;
      msg << "dt = " << cfg_.dt << " exceeds the stability bound " << bound << " for this grid and parameters";
      throw ValidationError(msg.str());
    }
    const std::size_t sz = model_.geometry().size();
    prop_.resize(sz);
    pump_step_.resize(sz);
    const double h = 0.5 * cfg_.dt;
    const auto& k2 = model_.k2();
    const auto& mask = model_.dealias_mask();
    const auto& A_hat = model_.pump_spectrum();
    for (std::size_t i = 0; i < sz; ++i) {
      const cdouble L = -cdouble(1.0, sp.Theta) - cdouble(0.0, k2[i]);
      const cdouble e = std::exp(L * h);
      prop_[i] = e * mask[i];
      pump_step_[i] = (e - 1.0) / L * A_hat[i] * mask[i];
    }
  }

  Model& model() { return model_; }
  const SimConfig& config() const { return cfg_; }

  void step(SimState& st) {
    check_congruent(st.field, st.density);
    if (cfg_.field_mode == FieldMode::adiabatic) step_adiabatic(st);
    else step_dynamic(st);
    clip_density(st);
    ++st.step;
    st.field.time = static_cast<double>(st.step) * cfg_.dt;  // no accumulated roundoff
    st.density.time = st.field.time;
    check_finite(st);
  }

  /// Explicit midpoint step of the density alone at frozen intensity.
  void advance_density(DensityGrid& n, std::span<const double> s, double dt) {
    const std::size_t sz = n.values.size();
    std::vector<double> k1(sz), mid(sz);
    model_.density_tendency(n.values, s, k1);
    for (std::size_t i = 0; i < sz; ++i) mid[i] = n.values[i] + 0.5 * dt * k1[i];
    model_.density_tendency(mid, s, k1);
    for (std::size_t i = 0; i < sz; ++i) n.values[i] += dt * k1[i];
    n.time += dt;
  }

 private:
  static const SimConfig& validated(const SimConfig& cfg) {
    cfg.validate();
    return cfg;
  }

  void linear_half(std::vector<cdouble>& E) {
    model_.forward(E);
    for (std::size_t i = 0; i < E.size(); ++i) E[i] = prop_[i] * E[i] + pump_step_[i];
    model_.backward(E);
  }

  void step_dynamic(SimState& st) {
    const double dt = cfg_.dt;
    auto& E = st.field.values;
    auto& n = st.density.values;
    const std::size_t sz = E.size();
    linear_half(E);

    std::vector<cdouble> kE(sz), Em(sz);
    std::vector<double> kn(sz), nm(sz), s(sz);
    model_.field_nonlinear(E, n, kE);
    for (std::size_t i = 0; i < sz; ++i) s[i] = std::norm(E[i]);
    model_.density_tendency(n, s, kn);
    for (std::size_t i = 0; i < sz; ++i) {
      Em[i] = E[i] + 0.5 * dt * kE[i];
      nm[i] = n[i] + 0.5 * dt * kn[i];
      s[i] = std::norm(Em[i]);
    }
    model_.field_nonlinear(Em, nm, kE);
    model_.density_tendency(nm, s, kn);
    for (std::size_t i = 0; i < sz; ++i) {
      E[i] += dt * kE[i];
      n[i] += dt * kn[i];
    }
    linear_half(E);
  }

  void step_adiabatic(SimState& st) {
    const double dt = cfg_.dt;
    const std::size_t sz = st.density.values.size();
    std::vector<double> s(sz), kn(sz);
    auto intensity = [&](const FieldGrid& f) {
      for (std::size_t i = 0; i < sz; ++i) s[i] = std::norm(f.values[i]);
    };
    st.field = solve_field_adiabatic(model_, st.density, cfg_.adiabatic, &st.field);
    intensity(st.field);
    model_.density_tendency(st.density.values, s, kn);
    DensityGrid mid = st.density;
    for (std::size_t i = 0; i < sz; ++i) mid.values[i] += 0.5 * dt * kn[i];
    const FieldGrid Em = solve_field_adiabatic(model_, mid, cfg_.adiabatic, &st.field);
    intensity(Em);
    model_.density_tendency(mid.values, s, kn);
    for (std::size_t i = 0; i < sz; ++i) st.density.values[i] += dt * kn[i];
    const double t = st.field.time;
    st.field = solve_field_adiabatic(model_, st.density, cfg_.adiabatic, &Em);
    st.field.time = t;
  }

  // Pointwise undershoot from spectral ringing is clipped at zero; rescaling
  // restores the pre-clip mean.
  static void clip_density(SimState& st) {
    auto& n = st.density.values;
    double before = 0;
    std::size_t clipped = 0;
    for (double v : n) {
      before += v;
      if (v < 0) ++clipped;
    }
    if (clipped == 0) return;
    double after = 0;
    for (double& v : n) {
      v = std::max(v, 0.0);
      after += v;
    }
    const double scale = before / after;
    for (double& v : n) v *= scale;
    st.clip_events += clipped;
  }

  static void check_finite(const SimState& st) {
    for (std::size_t i = 0; i < st.field.values.size(); ++i) {
      const auto& e = st.field.values[i];
      if (!std::isfinite(e.real()) || !std::isfinite(e.imag()) || !std::isfinite(st.density.values[i])) {
        std::ostringstream msg;
        double m = 0;
        for (const auto& v : st.field.values)
          if (std::isfinite(std::abs(v))) m = std::max(m, std::abs(v));
        msg << "non-finite state at t = " << st.field.time << " (step " << st.step
            << ", max finite |E| = " << m << ")";
        throw NumericalError(msg.str());
      }
    }
  }

  SimConfig cfg_;
  Model model_;
  std::vector<cdouble> prop_, pump_step_;
};

/// Single step with a freshly built integrator. Use Integrator directly in loops.
inline SimState step(const SimState& state, const ScaledParams& sp, const SimConfig& cfg) {
  Integrator integ(sp, cfg);
  SimState next = state;
  integ.step(next);
  return next;
}

/// Portable uniform deviate in [0, 1) from the top 53 bits of the generator.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Homogeneous field for a plane pump of arbitrary phase.
inline cdouble homogeneous_field(const ScaledParams& sp, cdouble pump) {
  const double s0 = lsa::saturation_for_pump(std::norm(pump), sp);
  const auto h = lsa::homogeneous_state(s0, sp);
  if (s0 == 0) return {0.0, 0.0};
  return h.E0 * std::exp(cdouble(0.0, std::arg(pump) - std::arg(h.pump)));
}

inline SimState initial_state(Integrator& integ, const SimConfig& cfg) {
  const GridGeometry g = cfg.geometry();
  SimState st;
  st.density = DensityGrid(g, 1.0);
  if (cfg.pump.kind == PumpProfile::Kind::plane) {
    st.field = FieldGrid(g, homogeneous_field(integ.model().params(), cfg.pump.amplitude));
  } else {
    st.field = solve_field_adiabatic(integ.model(), st.density, cfg.adiabatic);
  }
  if (cfg.noise_amplitude > 0) {
    std::mt19937_64 rng(cfg.rng_seed);
    std::vector<double> u(g.size());
    double mean = 0;
    for (double& v : u) mean += (v = uniform01(rng) - 0.5);
    mean /= static_cast<double>(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) st.density.values[i] = 1.0 + cfg.noise_amplitude * (u[i] - mean);
  }
  st.field.time = st.density.time = 0;
  return st;
}

using Observer = std::function<void(const SimState&)>;

/// Advances `state` to cfg.t_end, calling `observe` at step 0, every
/// snapshot_stride steps and at the final step.
inline SimState run(Integrator& integ, SimState state, const Observer& observe) {
  const SimConfig& cfg = integ.config();
  const long long total = cfg.total_steps();
  if (observe) observe(state);
  for (long long i = 0; i < total; ++i) {
    try {
      integ.step(state);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " [last snapshot before step " +
                           std::to_string(state.step) + "]");
    }
    if (observe && (state.step % cfg.snapshot_stride == 0 || i + 1 == total)) observe(state);
  }
  return state;
}

inline SimState simulate(const SimConfig& cfg, const ScaledParams& sp, const Observer& observe = {}) {
  Integrator integ(sp, cfg);
  return run(integ, initial_state(integ, cfg), observe);
}

using Trajectory = std::vector<SimState>;

inline Trajectory simulate_trajectory(const SimConfig& cfg, const ScaledParams& sp) {
  Trajectory out;
  simulate(cfg, sp, [&](const SimState& s) { out.push_back(s); });
  return out;
}

}  // namespace hexcav::dynamics
