#pragma once

// Physical constants, experiment parameters and their dimensionless model
// counterparts, plus the closed-form length-scale relations for
// diffractively dephased sidebands.

#include <cmath>
#include <numbers>

#include "hexcav/error.hpp"

namespace hexcav {

struct Constants {
  double hbar = 1.054571817e-34;               // J s
  double k_B = 1.380649e-23;                   // J / K
  double c = 299792458.0;                      // m / s
  double Gamma = 2.0 * std::numbers::pi * 6.065e6;  // Rb D2 natural linewidth, rad / s
  double I_sat = 1.6;                          // mW / cm^2

  void validate() const {
    ProblemList p;
    p.check(hbar > 0, "hbar must be positive");
    p.check(k_B > 0, "k_B must be positive");
    p.check(c > 0, "c must be positive");
    p.check(Gamma > 0, "Gamma must be positive");
    p.check(I_sat > 0, "I_sat must be positive");
    p.throw_if_any("invalid constants");
  }
};

/// Experimental parameters in SI units. Detunings are dimensionless: Delta in
/// units of Gamma/2, Theta in units of the cavity linewidth.
struct PhysicalParams {
  double lambda0 = 780e-9;   // m
  double L_cav = 0.1;        // m
  double l_eff = 100e-6;     // m
  double R_eff = std::exp(-0.01);
  double T_loss = 0.01;      // -ln(R_eff)
  double T1 = 0.006;         // incoupling mirror transmission
  double Delta = 50.0;
  double Theta = -2.0;
  double b0 = 1.0;
  double temperature = 150e-6;  // K
  double D_diff = 0.0;       // m^2 / s; 0 selects the default scaled diffusivity

  /// Sets the loss parameter and the reflectivity consistently.
  void set_loss(double loss) {
    T_loss = loss;
    R_eff = std::exp(-loss);
  }

  void validate() const {
    ProblemList p;
    p.check(lambda0 > 0, "wavelength must be positive");
    p.check(L_cav > 0, "cavity length must be positive");
    p.check(l_eff > 0, "effective diffractive length must be positive");
    p.check(l_eff <= L_cav, "effective diffractive length must not exceed the cavity length");
    p.check(R_eff > 0 && R_eff < 1, "effective reflectivity must lie in (0,1)");
    p.check(T_loss > 0, "cavity loss must be positive");
    if (R_eff > 0 && R_eff < 1)
      p.check(std::abs(T_loss + std::log(R_eff)) <= 1e-12 * T_loss,
              "cavity loss must equal -ln(R_eff)");
    p.check(T1 > 0 && T1 < 1, "incoupling transmission must lie in (0,1)");
    p.check(std::isfinite(Delta), "atomic detuning must be finite");
    p.check(std::isfinite(Theta), "cavity detuning must be finite");
    p.check(b0 >= 0, "optical density must be non-negative");
    p.check(temperature > 0, "temperature must be positive");
    p.check(D_diff >= 0, "diffusivity must be non-negative");
    p.throw_if_any("invalid physical parameters");
  }
};

/// Dimensionless model parameters. Time is measured in 1/kappa, transverse
/// length in sqrt(a).
struct ScaledParams {
  double kappa = 0;   // rad / s
  double C = 0;
  double sigma = 0;
  double a = 0;       // m^2
  double d = 0.01;
  double k0 = 0;      // 1 / m
  double Theta = 0;
  double Delta = 0;
  double b0 = 0;
  double T_loss = 0;
  double T1 = 0;
  double I_sat = 1.6;

  static double cooperativity(double b0, double T_loss, double Delta) {
    return b0 / (2.0 * T_loss * (1.0 + Delta * Delta));
  }

  /// Copy with a different optical density; C follows.
  ScaledParams with_optical_density(double new_b0) const {
    ScaledParams out = *this;
    out.b0 = new_b0;
    out.C = cooperativity(new_b0, T_loss, Delta);
    return out;
  }
};

inline constexpr double kDefaultScaledDiffusivity = 0.01;

inline double cavity_linewidth(const PhysicalParams& p, const Constants& k) {
  return k.c * p.T_loss / (2.0 * p.L_cav);
}

inline double diffraction_coefficient(const PhysicalParams& p) {
  const double k0 = 2.0 * std::numbers::pi / p.lambda0;
  return p.l_eff / (k0 * p.T_loss);
}

/// Physical diffusivity that corresponds to a given scaled diffusivity d = D/(kappa a).
inline double diffusivity_for_scaled(double d, const PhysicalParams& p, const Constants& k = {}) {
  return d * cavity_linewidth(p, k) * diffraction_coefficient(p);
}

inline ScaledParams scale_params(const PhysicalParams& p, const Constants& consts = {}) {
  consts.validate();
  p.validate();

  ScaledParams s;
  s.k0 = 2.0 * std::numbers::pi / p.lambda0;
  s.kappa = cavity_linewidth(p, consts);
  s.C = ScaledParams::cooperativity(p.b0, p.T_loss, p.Delta);
  s.sigma = consts.hbar * consts.Gamma * p.Delta / (4.0 * consts.k_B * p.temperature);
  s.a = diffraction_coefficient(p);
  s.d = p.D_diff > 0 ? p.D_diff / (s.kappa * s.a) : kDefaultScaledDiffusivity;
  s.Theta = p.Theta;
  s.Delta = p.Delta;
  s.b0 = p.b0;
  s.T_loss = p.T_loss;
  s.T1 = p.T1;
  s.I_sat = consts.I_sat;
  return s;
}

/// Transverse period of a pattern whose sidebands carry round-trip phase
/// mismatch delta_phi: sqrt(2 pi L lambda / delta_phi).
inline double pattern_period(double L_diffractive, double lambda0, double delta_phi) {
  if (!(L_diffractive > 0) || !(lambda0 > 0))
    throw ValidationError("pattern_period: lengths must be positive");
  if (!(delta_phi > 0)) throw ValidationError("pattern_period: delta_phi must be positive");
  return std::sqrt(2.0 * std::numbers::pi * L_diffractive * lambda0 / delta_phi);
}

/// Small-angle sideband angle sqrt(delta_phi / (k0 L)).
inline double sideband_angle(double delta_phi, double k0, double L_diffractive) {
  if (!(k0 > 0) || !(L_diffractive > 0))
    throw ValidationError("sideband_angle: k0 and L must be positive");
  if (!(delta_phi >= 0)) throw ValidationError("sideband_angle: delta_phi must be non-negative");
  return std::sqrt(delta_phi / (k0 * L_diffractive));
}

/// Bare cavity detuning that keeps the atom-dressed detuning at theta_eff.
inline double detuning_for_theta_eff(double theta_eff, double s0, const ScaledParams& sp) {
  if (!(s0 >= 0)) throw ValidationError("detuning_for_theta_eff: s0 must be non-negative");
  return theta_eff - sp.C * sp.Delta / (1.0 + s0);
}

}  // namespace hexcav
