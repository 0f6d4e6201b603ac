#pragma once

// Run configuration: one JSON document with four blocks (physical, sim, scan,
// output). Units live in the key names. Every key has a default, unknown keys
// are errors, and to_json prints every key so parse and print round-trip.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hexcav/dynamics.hpp"
#include "hexcav/error.hpp"
#include "hexcav/lsa.hpp"
#include "hexcav/params.hpp"

namespace hexcav::config {

using Json = nlohmann::ordered_json;

struct PhysicalBlock {
  double wavelength_m = 780e-9;
  double cavity_length_m = 0.1;
  double diffractive_length_m = 100e-6;
  double cavity_loss = 0.01;  // T = -ln(R_eff)
  double incoupling_transmission = 0.006;
  double atomic_detuning_half_linewidths = 50.0;
  double cavity_detuning_linewidths = -2.0;
  double optical_density_b0 = 1.0;
  double temperature_uK = 150.0;
  std::optional<double> diffusivity_m2_per_s;
  std::optional<double> scaled_diffusivity = kDefaultScaledDiffusivity;
  double linewidth_MHz = 6.065;  // Gamma / 2 pi
  double saturation_intensity_mW_per_cm2 = 1.6;

  bool operator==(const PhysicalBlock&) const = default;
};

struct PumpBlock {
  std::string profile = "supergaussian";  // plane | supergaussian
  std::optional<double> ratio_to_threshold = 1.2;  // Y / Y_th at the beam centre
  std::optional<std::vector<double>> amplitude_scaled;  // [re, im] of A_I / kappa
  double width_fraction = 0.7;  // super-Gaussian width over the domain half-size
  int order = 4;

  bool operator==(const PumpBlock&) const = default;
};

struct SimBlock {
  std::uint64_t grid_nx = 256;
  std::uint64_t grid_ny = 256;
  std::optional<double> domain_periods = 8.0;  // in units of 2 pi / k_c
  std::optional<double> domain_size_scaled;    // units of sqrt(a)
  double theta_eff = -1.0;
  double dt_scaled = 1e-3;
  double t_end_scaled = 2000.0;
  std::string field_mode = "dynamic";  // dynamic | adiabatic
  double noise_amplitude = 1e-3;
  std::uint64_t seed = 1;
  PumpBlock pump;

  bool operator==(const SimBlock&) const = default;
};

struct ScanBlock {
  double b0_min = 0.1;
  double b0_max = 100.0;
  std::uint64_t points = 20;
  std::vector<double> theta_eff_values{-1.0, -5.0};

  bool operator==(const ScanBlock&) const = default;
};

struct OutputBlock {
  std::string directory = "out";
  std::vector<std::string> formats{"cavx", "pgm"};
  std::uint64_t snapshot_every_steps = 1000;

  bool operator==(const OutputBlock&) const = default;
};

struct RunConfig {
  PhysicalBlock physical;
  SimBlock sim;
  ScanBlock scan;
  OutputBlock output;

  bool operator==(const RunConfig&) const = default;

  bool wants(const std::string& format) const {
    for (const auto& f : output.formats)
      if (f == format) return true;
    return false;
  }
};

namespace detail {

// Reads keys from one JSON object, collecting every type error and every
// unknown key.
class Reader {
 public:
  Reader(const Json& obj, std::string path, ProblemList& problems)
      : obj_(obj), path_(std::move(path)), problems_(problems) {}

  void number(const char* key, double& out) {
    if (const Json* v = take(key)) {
      if (v->is_number()) out = v->get<double>();
      else bad(key, "a number");
    }
  }
  void nullable_number(const char* key, std::optional<double>& out) {
    if (const Json* v = take(key)) {
      if (v->is_null()) out.reset();
      else if (v->is_number()) out = v->get<double>();
      else bad(key, "a number or null");
    }
  }
  void integer(const char* key, std::uint64_t& out) {
    if (const Json* v = take(key)) {
      if (v->is_number_unsigned()) out = v->get<std::uint64_t>();
      else bad(key, "a non-negative integer");
    }
  }
  void integer(const char* key, int& out) {
    if (const Json* v = take(key)) {
      if (v->is_number_integer() && v->get<long long>() >= INT32_MIN && v->get<long long>() <= INT32_MAX)
        out = v->get<int>();
      else bad(key, "an integer");
    }
  }
  void string(const char* key, std::string& out) {
    if (const Json* v = take(key)) {
      if (v->is_string()) out = v->get<std::string>();
      else bad(key, "a string");
    }
  }
  void numbers(const char* key, std::vector<double>& out) {
    if (const Json* v = take(key)) {
      if (!read_numbers(*v, out)) bad(key, "an array of numbers");
    }
  }
  void nullable_numbers(const char* key, std::optional<std::vector<double>>& out) {
    if (const Json* v = take(key)) {
      std::vector<double> tmp;
      if (v->is_null()) out.reset();
      else if (read_numbers(*v, tmp)) out = tmp;
      else bad(key, "an array of numbers or null");
    }
  }
  void strings(const char* key, std::vector<std::string>& out) {
    if (const Json* v = take(key)) {
      bool ok = v->is_array();
      std::vector<std::string> tmp;
      if (ok)
        for (const auto& e : *v) {
          if (!e.is_string()) {
            ok = false;
            break;
          }
          tmp.push_back(e.get<std::string>());
        }
      if (ok) out = tmp;
      else bad(key, "an array of strings");
    }
  }
  /// Nested object; returns nullptr (after recording a problem) if not an object.
  const Json* object(const char* key) {
    const Json* v = take(key);
    if (v && !v->is_object()) {
      bad(key, "an object");
      return nullptr;
    }
    return v;
  }
  std::string child(const char* key) const { return path_ + "." + key; }

  void finish() {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) problems_.add("unknown key '" + path_ + "." + it.key() + "'");
  }

 private:
  const Json* take(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }
  static bool read_numbers(const Json& v, std::vector<double>& out) {
    if (!v.is_array()) return false;
    std::vector<double> tmp;
    for (const auto& e : v) {
      if (!e.is_number()) return false;
      tmp.push_back(e.get<double>());
    }
    out = tmp;
    return true;
  }
  void bad(const char* key, const char* expected) {
    problems_.add("key '" + path_ + "." + key + "' must be " + expected);
  }

  const Json& obj_;
  std::string path_;
  ProblemList& problems_;
  std::set<std::string> seen_;
};

inline Json nullable(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace detail

/// Appends every semantic problem of a parsed config to p.
inline void collect_problems(const RunConfig& c, ProblemList& p) {
  const auto& ph = c.physical;
  p.check(ph.wavelength_m > 0, "physical.wavelength_m must be positive");
  p.check(ph.cavity_length_m > 0, "physical.cavity_length_m must be positive");
  p.check(ph.diffractive_length_m > 0, "physical.diffractive_length_m must be positive");
  p.check(ph.diffractive_length_m <= ph.cavity_length_m,
          "physical.diffractive_length_m must not exceed physical.cavity_length_m");
  p.check(ph.cavity_loss > 0, "physical.cavity_loss must be positive");
  p.check(ph.incoupling_transmission > 0 && ph.incoupling_transmission < 1,
          "physical.incoupling_transmission must lie in (0,1)");
  p.check(std::isfinite(ph.atomic_detuning_half_linewidths),
          "physical.atomic_detuning_half_linewidths must be finite");
  p.check(std::isfinite(ph.cavity_detuning_linewidths), "physical.cavity_detuning_linewidths must be finite");
  p.check(ph.optical_density_b0 >= 0, "physical.optical_density_b0 must be non-negative");
  p.check(ph.temperature_uK > 0, "physical.temperature_uK must be positive");
  p.check(ph.diffusivity_m2_per_s.has_value() != ph.scaled_diffusivity.has_value(),
          "exactly one of physical.diffusivity_m2_per_s and physical.scaled_diffusivity must be set");
  if (ph.diffusivity_m2_per_s) p.check(*ph.diffusivity_m2_per_s > 0, "physical.diffusivity_m2_per_s must be positive");
  if (ph.scaled_diffusivity) p.check(*ph.scaled_diffusivity > 0, "physical.scaled_diffusivity must be positive");
  p.check(ph.linewidth_MHz > 0, "physical.linewidth_MHz must be positive");
  p.check(ph.saturation_intensity_mW_per_cm2 > 0, "physical.saturation_intensity_mW_per_cm2 must be positive");

  const auto& s = c.sim;
  p.check(s.grid_nx >= 16 && is_power_of_two(s.grid_nx), "sim.grid_nx must be a power of two >= 16");
  p.check(s.grid_ny >= 16 && is_power_of_two(s.grid_ny), "sim.grid_ny must be a power of two >= 16");
  p.check(s.domain_periods.has_value() != s.domain_size_scaled.has_value(),
          "exactly one of sim.domain_periods and sim.domain_size_scaled must be set");
  if (s.domain_periods) p.check(*s.domain_periods > 0, "sim.domain_periods must be positive");
  if (s.domain_size_scaled) p.check(*s.domain_size_scaled > 0, "sim.domain_size_scaled must be positive");
  p.check(s.theta_eff < 0, "sim.theta_eff must be negative (pattern-forming side)");
  p.check(s.dt_scaled > 0, "sim.dt_scaled must be positive");
  p.check(s.t_end_scaled >= 0, "sim.t_end_scaled must be non-negative");
  p.check(s.field_mode == "dynamic" || s.field_mode == "adiabatic",
          "sim.field_mode must be \"dynamic\" or \"adiabatic\"");
  p.check(s.noise_amplitude >= 0 && s.noise_amplitude < 2, "sim.noise_amplitude must lie in [0, 2)");
  const auto& pu = s.pump;
  p.check(pu.profile == "plane" || pu.profile == "supergaussian",
          "sim.pump.profile must be \"plane\" or \"supergaussian\"");
  p.check(pu.ratio_to_threshold.has_value() != pu.amplitude_scaled.has_value(),
          "exactly one of sim.pump.ratio_to_threshold and sim.pump.amplitude_scaled must be set");
  if (pu.ratio_to_threshold) p.check(*pu.ratio_to_threshold >= 0, "sim.pump.ratio_to_threshold must be non-negative");
  if (pu.amplitude_scaled) p.check(pu.amplitude_scaled->size() == 2, "sim.pump.amplitude_scaled must be [re, im]");
  p.check(pu.width_fraction > 0, "sim.pump.width_fraction must be positive");
  p.check(pu.order >= 1, "sim.pump.order must be a positive integer");

  const auto& sc = c.scan;
  p.check(sc.b0_min > 0, "scan.b0_min must be positive");
  p.check(sc.b0_max >= sc.b0_min, "scan.b0_max must be >= scan.b0_min");
  p.check(sc.points >= 1, "scan.points must be >= 1");
  p.check(!sc.theta_eff_values.empty(), "scan.theta_eff_values must not be empty");

  const auto& o = c.output;
  p.check(!o.directory.empty(), "output.directory must not be empty");
  for (const auto& f : o.formats)
    p.check(f == "cavx" || f == "pgm", "output.formats entries must be \"cavx\" or \"pgm\" (got \"" + f + "\")");
  p.check(o.snapshot_every_steps >= 1, "output.snapshot_every_steps must be >= 1");
}

/// Semantic checks on a parsed config, reported all at once.
inline void validate(const RunConfig& c) {
  ProblemList p;
  collect_problems(c, p);
  p.throw_if_any("invalid config");
}

/// Parses and validates. Type errors, unknown keys and semantic problems are
/// all collected into one ValidationError.
inline RunConfig from_json(const Json& root) {
  RunConfig c;
  ProblemList p;
  if (!root.is_object()) throw ValidationError("invalid config", {"top level must be a JSON object"});
  detail::Reader top(root, "", p);
  // Top-level keys are reported without a leading dot.
  auto key_path = [](const char* k) { return std::string(k); };

  if (const Json* o = top.object("physical")) {
    detail::Reader r(*o, key_path("physical"), p);
    auto& b = c.physical;
    r.number("wavelength_m", b.wavelength_m);
    r.number("cavity_length_m", b.cavity_length_m);
    r.number("diffractive_length_m", b.diffractive_length_m);
    r.number("cavity_loss", b.cavity_loss);
    r.number("incoupling_transmission", b.incoupling_transmission);
    r.number("atomic_detuning_half_linewidths", b.atomic_detuning_half_linewidths);
    r.number("cavity_detuning_linewidths", b.cavity_detuning_linewidths);
    r.number("optical_density_b0", b.optical_density_b0);
    r.number("temperature_uK", b.temperature_uK);
    r.nullable_number("diffusivity_m2_per_s", b.diffusivity_m2_per_s);
    // Giving a physical diffusivity alone clears the scaled default.
    if (o->contains("diffusivity_m2_per_s") && !o->contains("scaled_diffusivity") && b.diffusivity_m2_per_s)
      b.scaled_diffusivity.reset();
    r.nullable_number("scaled_diffusivity", b.scaled_diffusivity);
    r.number("linewidth_MHz", b.linewidth_MHz);
    r.number("saturation_intensity_mW_per_cm2", b.saturation_intensity_mW_per_cm2);
    r.finish();
  }
  if (const Json* o = top.object("sim")) {
    detail::Reader r(*o, key_path("sim"), p);
    auto& b = c.sim;
    r.integer("grid_nx", b.grid_nx);
    r.integer("grid_ny", b.grid_ny);
    r.nullable_number("domain_size_scaled", b.domain_size_scaled);
    if (o->contains("domain_size_scaled") && !o->contains("domain_periods") && b.domain_size_scaled)
      b.domain_periods.reset();
    r.nullable_number("domain_periods", b.domain_periods);
    r.number("theta_eff", b.theta_eff);
    r.number("dt_scaled", b.dt_scaled);
    r.number("t_end_scaled", b.t_end_scaled);
    r.string("field_mode", b.field_mode);
    r.number("noise_amplitude", b.noise_amplitude);
    r.integer("seed", b.seed);
    if (const Json* po = r.object("pump")) {
      detail::Reader q(*po, r.child("pump"), p);
      auto& pb = b.pump;
      q.string("profile", pb.profile);
      q.nullable_numbers("amplitude_scaled", pb.amplitude_scaled);
      if (po->contains("amplitude_scaled") && !po->contains("ratio_to_threshold") && pb.amplitude_scaled)
        pb.ratio_to_threshold.reset();
      q.nullable_number("ratio_to_threshold", pb.ratio_to_threshold);
      q.number("width_fraction", pb.width_fraction);
      q.integer("order", pb.order);
      q.finish();
    }
    r.finish();
  }
  if (const Json* o = top.object("scan")) {
    detail::Reader r(*o, key_path("scan"), p);
    r.number("b0_min", c.scan.b0_min);
    r.number("b0_max", c.scan.b0_max);
    r.integer("points", c.scan.points);
    r.numbers("theta_eff_values", c.scan.theta_eff_values);
    r.finish();
  }
  if (const Json* o = top.object("output")) {
    detail::Reader r(*o, key_path("output"), p);
    r.string("directory", c.output.directory);
    r.strings("formats", c.output.formats);
    r.integer("snapshot_every_steps", c.output.snapshot_every_steps);
    r.finish();
  }
  for (auto it = root.begin(); it != root.end(); ++it) {
    const auto& k = it.key();
    if (k != "physical" && k != "sim" && k != "scan" && k != "output") p.add("unknown key '" + k + "'");
  }
  // Keys that failed to read keep their defaults, so semantic checks still apply.
  collect_problems(c, p);
  p.throw_if_any("invalid config");
  return c;
}

inline Json to_json(const RunConfig& c) {
  const auto& ph = c.physical;
  const auto& s = c.sim;
  const auto& pu = s.pump;
  Json j;
  j["physical"] = {
      {"wavelength_m", ph.wavelength_m},
      {"cavity_length_m", ph.cavity_length_m},
      {"diffractive_length_m", ph.diffractive_length_m},
      {"cavity_loss", ph.cavity_loss},
      {"incoupling_transmission", ph.incoupling_transmission},
      {"atomic_detuning_half_linewidths", ph.atomic_detuning_half_linewidths},
      {"cavity_detuning_linewidths", ph.cavity_detuning_linewidths},
      {"optical_density_b0", ph.optical_density_b0},
      {"temperature_uK", ph.temperature_uK},
      {"diffusivity_m2_per_s", detail::nullable(ph.diffusivity_m2_per_s)},
      {"scaled_diffusivity", detail::nullable(ph.scaled_diffusivity)},
      {"linewidth_MHz", ph.linewidth_MHz},
      {"saturation_intensity_mW_per_cm2", ph.saturation_intensity_mW_per_cm2},
  };
  j["sim"] = {
      {"grid_nx", s.grid_nx},
      {"grid_ny", s.grid_ny},
      {"domain_periods", detail::nullable(s.domain_periods)},
      {"domain_size_scaled", detail::nullable(s.domain_size_scaled)},
      {"theta_eff", s.theta_eff},
      {"dt_scaled", s.dt_scaled},
      {"t_end_scaled", s.t_end_scaled},
      {"field_mode", s.field_mode},
      {"noise_amplitude", s.noise_amplitude},
      {"seed", s.seed},
      {"pump",
       {
           {"profile", pu.profile},
           {"ratio_to_threshold", detail::nullable(pu.ratio_to_threshold)},
           {"amplitude_scaled", pu.amplitude_scaled ? Json(*pu.amplitude_scaled) : Json(nullptr)},
           {"width_fraction", pu.width_fraction},
           {"order", pu.order},
       }},
  };
  j["scan"] = {
      {"b0_min", c.scan.b0_min},
      {"b0_max", c.scan.b0_max},
      {"points", c.scan.points},
      {"theta_eff_values", c.scan.theta_eff_values},
  };
  j["output"] = {
      {"directory", c.output.directory},
      {"formats", c.output.formats},
      {"snapshot_every_steps", c.output.snapshot_every_steps},
  };
  return j;
}

inline std::string print(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

inline Json parse_text(const std::string& text, const std::string& origin = "config") {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(origin + ": malformed JSON: " + e.what());
  }
}

inline RunConfig parse(const std::string& text) { return from_json(parse_text(text)); }

inline RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(parse_text(ss.str(), path.string()));
}

/// Sets a scalar key addressed by a dotted path (e.g. "sim.pump.ratio_to_threshold")
/// and re-validates. The value is parsed as JSON, falling back to a string.
inline RunConfig with_value(const RunConfig& c, const std::string& dotted, const std::string& value) {
  Json j = to_json(c);
  Json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part))
      throw ValidationError("unknown config key '" + dotted + "'");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object() || node->is_array())
    throw ValidationError("config key '" + dotted + "' is not a scalar");
  Json v;
  try {
    v = Json::parse(value);
  } catch (const Json::parse_error&) {
    v = value;
  }
  if (v.is_object() || v.is_array()) throw ValidationError("sweep value for '" + dotted + "' must be a scalar");
  *node = v;
  return from_json(j);
}

/// Parameters derived from the physical block.
inline PhysicalParams physical_params(const RunConfig& c) {
  const auto& b = c.physical;
  PhysicalParams p;
  p.lambda0 = b.wavelength_m;
  p.L_cav = b.cavity_length_m;
  p.l_eff = b.diffractive_length_m;
  p.set_loss(b.cavity_loss);
  p.T1 = b.incoupling_transmission;
  p.Delta = b.atomic_detuning_half_linewidths;
  p.Theta = b.cavity_detuning_linewidths;
  p.b0 = b.optical_density_b0;
  p.temperature = b.temperature_uK * 1e-6;
  p.D_diff = b.diffusivity_m2_per_s.value_or(0.0);
  return p;
}

inline Constants constants(const RunConfig& c) {
  Constants k;
  k.Gamma = 2.0 * std::numbers::pi * c.physical.linewidth_MHz * 1e6;
  k.I_sat = c.physical.saturation_intensity_mW_per_cm2;
  return k;
}

inline ScaledParams scaled_params(const RunConfig& c) {
  ScaledParams sp = scale_params(physical_params(c), constants(c));
  if (!c.physical.diffusivity_m2_per_s) sp.d = *c.physical.scaled_diffusivity;
  return sp;
}

/// Everything needed to run one simulation.
struct SimulationSetup {
  ScaledParams sp;
  dynamics::SimConfig cfg;
  lsa::ThresholdResult threshold;  // at sim.theta_eff
  double pump_Y = 0;               // |A|^2 at the beam centre
};

/// With a threshold ratio the bare detuning is the one that puts the dressed
/// detuning at sim.theta_eff at threshold, and |A|^2 = ratio * Y_th. With an
/// explicit amplitude the physical cavity detuning is used as is.
inline SimulationSetup simulation_setup(const RunConfig& c) {
  SimulationSetup out;
  out.sp = scaled_params(c);
  const auto& s = c.sim;
  const bool need_threshold = s.pump.ratio_to_threshold.has_value() || s.domain_periods.has_value();
  if (need_threshold) {
    out.threshold = lsa::threshold_at(out.sp, s.theta_eff);
    if (!out.threshold.converged)
      throw NumericalError("no instability at theta_eff = " + csv::number(s.theta_eff) + ": " +
                           out.threshold.message);
  }
  cdouble amplitude;
  if (s.pump.ratio_to_threshold) {
    out.sp.Theta = out.threshold.Theta_th;
    out.pump_Y = *s.pump.ratio_to_threshold * out.threshold.pump_Y_th;
    amplitude = std::sqrt(out.pump_Y);
  } else {
    amplitude = {(*s.pump.amplitude_scaled)[0], (*s.pump.amplitude_scaled)[1]};
    out.pump_Y = std::norm(amplitude);
  }

  auto& cfg = out.cfg;
  cfg.nx = s.grid_nx;
  cfg.ny = s.grid_ny;
  cfg.domain_size = s.domain_periods ? *s.domain_periods * 2.0 * std::numbers::pi / out.threshold.k_c
                                     : *s.domain_size_scaled;
  cfg.dt = s.dt_scaled;
  cfg.t_end = s.t_end_scaled;
  cfg.noise_amplitude = s.noise_amplitude;
  cfg.rng_seed = s.seed;
  cfg.field_mode = s.field_mode == "adiabatic" ? dynamics::FieldMode::adiabatic : dynamics::FieldMode::dynamic;
  cfg.snapshot_stride = static_cast<long long>(c.output.snapshot_every_steps);
  cfg.pump = s.pump.profile == "plane"
                 ? dynamics::PumpProfile::plane(amplitude)
                 : dynamics::PumpProfile::supergaussian(amplitude, s.pump.width_fraction * 0.5 * cfg.domain_size,
                                                        s.pump.order);
  cfg.validate();
  return out;
}

}  // namespace hexcav::config
