#pragma once

// Linear stability of the homogeneous field/density state against
// transverse perturbations exp(i k x), threshold search and optical-density
// scans.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "hexcav/csv.hpp"
#include "hexcav/error.hpp"
#include "hexcav/params.hpp"

namespace hexcav::lsa {

using cdouble = std::complex<double>;
using Matrix3c = Eigen::Matrix3cd;

struct HomogeneousState {
  double s0 = 0;
  cdouble E0;        // gauge: real, non-negative
  double n0 = 1.0;
  double Y = 0;      // |A_I / kappa|^2
  double theta_eff = 0;
  cdouble pump;      // A_I / kappa that sustains E0
};

inline double effective_detuning(double s0, const ScaledParams& sp) {
  return sp.Theta + sp.C * sp.Delta / (1.0 + s0);
}

inline HomogeneousState homogeneous_state(double s0, const ScaledParams& sp) {
  if (!(s0 >= 0)) throw ValidationError("homogeneous_state: s0 must be non-negative");
  HomogeneousState h;
  h.s0 = s0;
  h.E0 = cdouble(std::sqrt(s0), 0.0);
  h.theta_eff = effective_detuning(s0, sp);
  const double absorb = 1.0 + sp.C / (1.0 + s0);
  h.Y = s0 * (absorb * absorb + h.theta_eff * h.theta_eff);
  h.pump = h.E0 * cdouble(absorb, h.theta_eff);
  return h;
}

/// Smallest s0 whose homogeneous state is sustained by pump intensity Y at
/// fixed bare detuning sp.Theta (lowest branch when the response is bistable).
inline double saturation_for_pump(double Y, const ScaledParams& sp, double s0_cap = 1e6) {
  if (!(Y >= 0)) throw ValidationError("saturation_for_pump: Y must be non-negative");
  if (Y == 0) return 0.0;
  auto f = [&](double s) { return homogeneous_state(s, sp).Y - Y; };
  double lo = 0.0;
  double hi = std::min(Y, s0_cap);  // Y >= s0 * (1 + C/(1+s0))^2 >= s0, so the root is below Y
  // Walk up from zero to the first sign change so the lowest root is bracketed.
  const int n = 2000;
  double prev = lo;
  bool found = false;
  for (int i = 1; i <= n; ++i) {
    const double s = hi * std::pow(static_cast<double>(i) / n, 3.0);
    if (f(s) >= 0) {
      lo = prev;
      hi = s;
      found = true;
      break;
    }
    prev = s;
  }
  if (!found) throw NumericalError("saturation_for_pump: no homogeneous state below cap");
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) >= 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

struct LinearizationMatrix {
  Matrix3c m;
  double k2 = 0;
  double s0 = 0;
};

/// Jacobian of the scaled right-hand side acting on (dE, dE*, dn) at scaled
/// transverse wavenumber squared k2, around the homogeneous state with E0 = sqrt(s0).
inline LinearizationMatrix build_matrix(double k2, double s0, const ScaledParams& sp) {
  if (!(k2 >= 0)) throw ValidationError("build_matrix: k2 must be non-negative");
  if (!(s0 >= 0)) throw ValidationError("build_matrix: s0 must be non-negative");
  const cdouble I(0.0, 1.0);
  const cdouble g = sp.C * cdouble(1.0, sp.Delta);
  const double e0 = std::sqrt(s0);
  const double q = 1.0 + s0;

  const cdouble m11 = -cdouble(1.0, sp.Theta) - I * k2 - g / (q * q);
  const cdouble m12 = g * s0 / (q * q);
  const cdouble m13 = -g * e0 / q;
  const double drift = -sp.d * k2 * sp.sigma * e0 / q;

  LinearizationMatrix out;
  out.k2 = k2;
  out.s0 = s0;
  out.m << m11, m12, m13,
           std::conj(m12), std::conj(m11), std::conj(m13),
           drift, drift, -sp.d * k2;
  return out;
}

inline Eigen::Vector3cd eigenvalues(const Matrix3c& m) {
  Eigen::ComplexEigenSolver<Matrix3c> solver(m, false);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenvalue solver did not converge");
  return solver.eigenvalues();
}

/// Largest real part among the eigenvalues at k2 > 0. The k2 = 0 neutral mass
/// mode is excluded by definition.
inline double growth_rate(double k2, double s0, const ScaledParams& sp) {
  if (!(k2 > 0)) throw ValidationError("growth_rate: k2 must be positive (k2 = 0 is the neutral mode)");
  const auto ev = eigenvalues(build_matrix(k2, s0, sp).m);
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) best = std::max(best, ev[i].real());
  if (!std::isfinite(best)) throw NumericalError("growth_rate: non-finite eigenvalue");
  return best;
}

struct ThresholdOptions {
  double k2_max_factor = 100.0;  // k2_max = factor * |theta_eff|
  double k2_min_ratio = 1e-4;    // k2_min = ratio * k2_max
  int k_grid_points = 400;
  int golden_iterations = 80;
  double s0_min = 1e-6;
  double s0_cap = 1e3;
  double s0_scan_factor = 1.15;
  double rel_tol = 1e-6;
};

struct PeakGrowth {
  double rate = 0;
  double k2 = 0;
};

/// Maximum of the growth rate over k2 in [k2_min, k2_max]: logarithmic grid,
/// then golden-section refinement around the best grid point.
template <class RateFn>
PeakGrowth maximize_over_k(RateFn&& rate, double k2_min, double k2_max, int points, int iterations) {
  const double lmin = std::log(k2_min);
  const double lmax = std::log(k2_max);
  int best_i = 0;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) {
    grid[i] = lmin + (lmax - lmin) * i / (points - 1);
    const double r = rate(std::exp(grid[i]));
    if (r > best) {
      best = r;
      best_i = i;
    }
  }
  double a = grid[std::max(best_i - 1, 0)];
  double b = grid[std::min(best_i + 1, points - 1)];
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - phi * (b - a);
  double x2 = a + phi * (b - a);
  double f1 = rate(std::exp(x1));
  double f2 = rate(std::exp(x2));
  for (int it = 0; it < iterations; ++it) {
    if (f1 > f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = rate(std::exp(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = rate(std::exp(x2));
    }
  }
  PeakGrowth out{best, std::exp(grid[best_i])};
  if (f1 > out.rate) out = {f1, std::exp(x1)};
  if (f2 > out.rate) out = {f2, std::exp(x2)};
  return out;
}

/// Peak growth rate over k at fixed s0, with the bare detuning chosen so the
/// dressed detuning stays at theta_eff.
inline PeakGrowth peak_growth(double s0, double theta_eff, const ScaledParams& sp,
                              const ThresholdOptions& opt = {}) {
  ScaledParams trial = sp;
  trial.Theta = detuning_for_theta_eff(theta_eff, s0, sp);
  const double k2_max = opt.k2_max_factor * std::max(std::abs(theta_eff), 1.0);
  return maximize_over_k([&](double k2) { return growth_rate(k2, s0, trial); },
                         opt.k2_min_ratio * k2_max, k2_max, opt.k_grid_points,
                         opt.golden_iterations);
}

struct ThresholdResult {
  double s0_th = std::numeric_limits<double>::quiet_NaN();
  double k_c = std::numeric_limits<double>::quiet_NaN();
  double pump_Y_th = std::numeric_limits<double>::quiet_NaN();
  double theta_eff = 0;
  double Theta_th = std::numeric_limits<double>::quiet_NaN();  // bare detuning at threshold
  bool converged = false;
  std::string message;
};

inline ThresholdResult threshold_at(const ScaledParams& sp, double theta_eff,
                                    const ThresholdOptions& opt = {}) {
  ThresholdResult res;
  res.theta_eff = theta_eff;
  if (!(opt.s0_min > 0) || !(opt.s0_cap > opt.s0_min) || !(opt.s0_scan_factor > 1))
    throw ValidationError("threshold_at: invalid s0 search range");

  double lo = 0;
  double hi = 0;
  bool bracketed = false;
  double prev = opt.s0_min;
  if (peak_growth(prev, theta_eff, sp, opt).rate > 0) {
    res.message = "unstable at the smallest trial s0";
    return res;
  }
  for (double s = prev * opt.s0_scan_factor; s <= opt.s0_cap * opt.s0_scan_factor;
       s *= opt.s0_scan_factor) {
    const double trial = std::min(s, opt.s0_cap);
    if (peak_growth(trial, theta_eff, sp, opt).rate > 0) {
      lo = prev;
      hi = trial;
      bracketed = true;
      break;
    }
    prev = trial;
    if (trial == opt.s0_cap) break;
  }
  if (!bracketed) {
    res.message = "no instability found up to s0 = " + std::to_string(opt.s0_cap);
    return res;
  }

  while ((hi - lo) > opt.rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (peak_growth(mid, theta_eff, sp, opt).rate > 0 ? hi : lo) = mid;
  }

  res.s0_th = 0.5 * (lo + hi);
  res.k_c = std::sqrt(peak_growth(hi, theta_eff, sp, opt).k2);
  res.Theta_th = detuning_for_theta_eff(theta_eff, res.s0_th, sp);
  ScaledParams at = sp;
  at.Theta = res.Theta_th;
  res.pump_Y_th = homogeneous_state(res.s0_th, at).Y;
  res.converged = true;
  return res;
}

/// Purely optomechanical threshold 1/(C sigma Delta).
inline double analytic_threshold(const ScaledParams& sp) {
  if (sp.Delta == 0 || sp.sigma == 0 || !(sp.b0 > 0) || sp.C == 0)
    throw ValidationError("analytic_threshold: requires Delta != 0, sigma != 0 and b0 > 0");
  return 1.0 / (sp.C * sp.sigma * sp.Delta);
}

/// Intra-cavity to extra-cavity conversion: |E_cav|^2 / |E_in|^2 = T1 / T_loss^2
/// on resonance, so I_ext = I_sat * Y * T_loss^2 / T1.
struct ExtraCavityIntensity {
  double I_ext = 0;   // mW / cm^2
  double buildup = 0; // T1 / T_loss^2
};

inline ExtraCavityIntensity extra_cavity_intensity(double pump_Y, const ScaledParams& sp) {
  if (!(sp.T1 > 0)) throw ValidationError("extra_cavity_intensity: T1 must be positive");
  if (!(sp.T_loss > 0)) throw ValidationError("extra_cavity_intensity: T_loss must be positive");
  ExtraCavityIntensity out;
  out.buildup = sp.T1 / (sp.T_loss * sp.T_loss);
  out.I_ext = sp.I_sat * pump_Y / out.buildup;
  return out;
}

inline ExtraCavityIntensity extra_cavity_intensity(const ThresholdResult& th, const ScaledParams& sp) {
  if (!th.converged) throw ValidationError("extra_cavity_intensity: threshold did not converge");
  return extra_cavity_intensity(th.pump_Y_th, sp);
}

struct ScanRow {
  double b0 = 0;
  double s0_analytic = std::numeric_limits<double>::quiet_NaN();
  std::vector<ThresholdResult> thresholds;  // one per theta_eff, in input order
  std::vector<double> I_ext;                // NaN where not converged
};

struct ScanResult {
  std::vector<double> theta_eff_list;
  std::vector<ScanRow> rows;  // ascending in b0
};

/// Threshold per (b0, theta_eff). Points are spread over worker threads and
/// assembled by index, so the result does not depend on the thread count.
inline ScanResult scan_b0(const ScaledParams& sp_template, std::vector<double> b0_list,
                          const std::vector<double>& theta_eff_list, const ThresholdOptions& opt = {},
                          unsigned threads = 0) {
  if (b0_list.empty()) throw ValidationError("scan_b0: b0 list is empty");
  if (theta_eff_list.empty()) throw ValidationError("scan_b0: theta_eff list is empty");
  for (double b : b0_list)
    if (!(b > 0)) throw ValidationError("scan_b0: optical densities must be positive");
  std::sort(b0_list.begin(), b0_list.end());

  ScanResult out;
  out.theta_eff_list = theta_eff_list;
  out.rows.resize(b0_list.size());
  const std::size_t n_theta = theta_eff_list.size();
  const std::size_t total = b0_list.size() * n_theta;
  for (std::size_t i = 0; i < b0_list.size(); ++i) {
    out.rows[i].b0 = b0_list[i];
    out.rows[i].thresholds.resize(n_theta);
    out.rows[i].I_ext.assign(n_theta, std::numeric_limits<double>::quiet_NaN());
  }

  auto work = [&](std::size_t job) {
    const std::size_t i = job / n_theta;
    const std::size_t j = job % n_theta;
    const ScaledParams sp = sp_template.with_optical_density(b0_list[i]);
    ThresholdResult th;
    try {
      th = threshold_at(sp, theta_eff_list[j], opt);
    } catch (const std::exception& e) {
      th.message = e.what();
    }
    out.rows[i].thresholds[j] = th;
    if (th.converged) out.rows[i].I_ext[j] = extra_cavity_intensity(th, sp).I_ext;
  };

  unsigned n_workers = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
  n_workers = static_cast<unsigned>(std::min<std::size_t>(n_workers, total));
  if (n_workers <= 1) {
    for (std::size_t job = 0; job < total; ++job) work(job);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t job = w; job < total; job += n_workers) work(job);
      });
    for (auto& t : pool) t.join();
  }

  for (auto& row : out.rows) {
    const ScaledParams sp = sp_template.with_optical_density(row.b0);
    if (sp.Delta != 0 && sp.sigma != 0) row.s0_analytic = analytic_threshold(sp);
  }
  return out;
}

/// CSV with columns b0,s0_th,s0_analytic,k_c,I_ext_m1,I_ext_m5,converged. The
/// threshold columns come from theta_eff = -1; both -1 and -5 must be scanned.
inline std::string to_csv(const ScanResult& scan) {
  auto index_of = [&](double theta) -> std::size_t {
    for (std::size_t j = 0; j < scan.theta_eff_list.size(); ++j)
      if (scan.theta_eff_list[j] == theta) return j;
    throw ValidationError("to_csv: scan must include theta_eff = " + csv::number(theta));
  };
  const std::size_t m1 = index_of(-1.0);
  const std::size_t m5 = index_of(-5.0);
  csv::Writer w({"b0", "s0_th", "s0_analytic", "k_c", "I_ext_m1", "I_ext_m5", "converged"});
  for (const auto& row : scan.rows) {
    const auto& th = row.thresholds[m1];
    const bool ok = th.converged && row.thresholds[m5].converged;
    w.num(row.b0).num(th.s0_th).num(row.s0_analytic).num(th.k_c).num(row.I_ext[m1]).num(row.I_ext[m5]).num(ok);
    w.end_row();
  }
  return w.str();
}

}  // namespace hexcav::lsa
