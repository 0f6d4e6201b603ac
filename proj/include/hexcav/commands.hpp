#pragma once

// The five front-end commands. Each returns a process exit code: 0 success,
// 1 validation or format error, 2 numerical failure. Output goes to the given
// streams so the commands can be driven in-process.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hexcav/cavx.hpp"
#include "hexcav/config.hpp"
#include "hexcav/csv.hpp"
#include "hexcav/diagnostics.hpp"
#include "hexcav/dynamics.hpp"
#include "hexcav/error.hpp"
#include "hexcav/lsa.hpp"
#include "hexcav/params.hpp"
#include "hexcav/pgm.hpp"

namespace hexcav::commands {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kValidation = 1, kNumerical = 2 };

/// Runs `body`, mapping exceptions to exit codes and reporting them on `err`.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
}

// ---------------------------------------------------------------- threshold

struct ThresholdReport {
  double b0 = 0;
  double theta_eff = 0;
  lsa::ThresholdResult th;
  double s0_analytic = std::numeric_limits<double>::quiet_NaN();
  double Lambda_m = 0;  // 2 pi sqrt(a) / k_c
  lsa::ExtraCavityIntensity ext;
};

inline ThresholdReport threshold_report(const config::RunConfig& c, std::optional<double> b0,
                                        std::optional<double> theta_eff) {
  config::RunConfig rc = c;
  if (b0) rc.physical.optical_density_b0 = *b0;
  config::validate(rc);
  ThresholdReport r;
  const ScaledParams sp = config::scaled_params(rc);
  r.b0 = sp.b0;
  r.theta_eff = theta_eff.value_or(rc.sim.theta_eff);
  r.th = lsa::threshold_at(sp, r.theta_eff);
  if (sp.b0 > 0 && sp.Delta != 0 && sp.sigma != 0) r.s0_analytic = lsa::analytic_threshold(sp);
  if (r.th.converged) {
    r.Lambda_m = 2.0 * std::numbers::pi * std::sqrt(sp.a) / r.th.k_c;
    r.ext = lsa::extra_cavity_intensity(r.th, sp);
  }
  return r;
}

inline int cmd_threshold(const config::RunConfig& c, std::optional<double> b0, std::optional<double> theta_eff,
                         std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ThresholdReport r = threshold_report(c, b0, theta_eff);
    if (!r.th.converged) {
      err << "no instability: " << r.th.message << " (b0 = " << csv::number(r.b0)
          << ", theta_eff = " << csv::number(r.theta_eff) << ")\n";
      return static_cast<int>(kNumerical);
    }
    auto line = [&](const char* key, double v) { out << std::left << std::setw(20) << key << csv::number(v) << "\n"; };
    line("b0", r.b0);
    line("theta_eff", r.theta_eff);
    line("s0_th", r.th.s0_th);
    line("s0_analytic", r.s0_analytic);
    line("k_c", r.th.k_c);
    line("Lambda_m", r.Lambda_m);
    line("Y_th", r.th.pump_Y_th);
    line("Theta_th", r.th.Theta_th);
    line("I_ext_mW_per_cm2", r.ext.I_ext);
    line("buildup_T1_per_T2", r.ext.buildup);
    return static_cast<int>(kOk);
  });
}

// ----------------------------------------------------------------- lsa-scan

/// Log-spaced grid from b0_min to b0_max; a single point sits at b0_min.
inline std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0) || !(hi >= lo) || points == 0) throw ValidationError("log_grid: need 0 < min <= max and points >= 1");
  std::vector<double> out(points);
  if (points == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < points; ++i)
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

struct ScanArgs {
  std::optional<double> b0_min, b0_max;
  std::optional<std::size_t> points;
  fs::path out;
  unsigned threads = 0;
};

inline int cmd_lsa_scan(const config::RunConfig& c, const ScanArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    config::RunConfig rc = c;
    if (a.b0_min) rc.scan.b0_min = *a.b0_min;
    if (a.b0_max) rc.scan.b0_max = *a.b0_max;
    if (a.points) rc.scan.points = *a.points;
    config::validate(rc);
    if (a.out.empty()) throw ValidationError("lsa-scan: --out is required");
    const auto b0s = log_grid(rc.scan.b0_min, rc.scan.b0_max, rc.scan.points);
    const auto scan = lsa::scan_b0(config::scaled_params(rc), b0s, rc.scan.theta_eff_values, {}, a.threads);
    const std::string text = lsa::to_csv(scan);
    if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
    cavx::write_file_atomic(a.out, text);
    std::size_t failed = 0;
    for (const auto& row : scan.rows)
      for (const auto& th : row.thresholds)
        if (!th.converged) ++failed;
    out << "wrote " << scan.rows.size() << " rows to " << a.out.string() << "\n";
    if (failed) err << "warning: " << failed << " threshold(s) did not converge\n";
    return static_cast<int>(kOk);
  });
}

// ----------------------------------------------------------------- simulate

struct SimulationResult {
  bool ok = false;
  std::string message;
  double final_time = 0;
  diagnostics::SpectrumReport final_report;
  std::size_t clip_events = 0;
};

inline std::string snapshot_name(const char* what, long long step, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%08lld.%s", what, step, ext);
  return buf;
}

inline csv::Writer summary_writer() {
  return csv::Writer({"step", "time", "k_dominant", "ring_power_fraction", "hexagonality", "bunching",
                      "field_density_correlation", "clip_events", "intensity_min", "intensity_max", "density_min",
                      "density_max"});
}

/// Runs one simulation into `dir`: config.json, summary.csv and per-snapshot
/// CAVX dumps and PGM renders. Numerical failures are returned, not thrown;
/// the summary up to the failure is kept.
inline SimulationResult run_simulation(const config::RunConfig& c, const fs::path& dir) {
  const config::SimulationSetup setup = config::simulation_setup(c);
  fs::create_directories(dir);
  cavx::write_file_atomic(dir / "config.json", config::print(c));

  const auto window = setup.cfg.pump.kind == dynamics::PumpProfile::Kind::supergaussian ? diagnostics::Window::hann
                                                                                        : diagnostics::Window::none;
  const bool want_cavx = c.wants("cavx");
  const bool want_pgm = c.wants("pgm");
  csv::Writer summary = summary_writer();
  SimulationResult res;

  auto observe = [&](const dynamics::SimState& st) {
    const auto s = st.field.intensity();
    const auto rep = diagnostics::analyze(diagnostics::RealGridView{st.field.geom, s}, window, &st.density, s);
    pgm::Scale s_scale, n_scale;
    const std::string s_pgm = pgm::encode(st.field.geom, s, &s_scale);
    const std::string n_pgm = pgm::encode(st.density.geom, st.density.values, &n_scale);
    if (want_cavx) {
      cavx::write(dir / snapshot_name("field", st.step, "cavx"), cavx::from_field(st.field));
      cavx::write(dir / snapshot_name("density", st.step, "cavx"), cavx::from_density(st.density));
    }
    if (want_pgm) {
      cavx::write_file_atomic(dir / snapshot_name("intensity", st.step, "pgm"), s_pgm);
      cavx::write_file_atomic(dir / snapshot_name("density", st.step, "pgm"), n_pgm);
    }
    summary.num(st.step)
        .num(st.time())
        .num(diagnostics::value_or_nan(rep.k_dominant))
        .num(rep.ring_power_fraction)
        .num(diagnostics::value_or_nan(rep.hexagonality))
        .num(diagnostics::value_or_nan(rep.bunching))
        .num(diagnostics::value_or_nan(rep.field_density_correlation))
        .num(static_cast<unsigned long long>(st.clip_events))
        .num(s_scale.min)
        .num(s_scale.max)
        .num(n_scale.min)
        .num(n_scale.max);
    summary.end_row();
    cavx::write_file_atomic(dir / "summary.csv", summary.str());
    res.final_time = st.time();
    res.final_report = rep;
    res.clip_events = st.clip_events;
  };

  try {
    dynamics::simulate(setup.cfg, setup.sp, observe);
    res.ok = true;
  } catch (const NumericalError& e) {
    res.message = e.what();
  }
  return res;
}

inline int cmd_simulate(const config::RunConfig& c, const std::optional<fs::path>& out_dir, std::ostream& out,
                        std::ostream& err) {
  return guarded(err, [&] {
    const fs::path dir = out_dir.value_or(fs::path(c.output.directory));
    const SimulationResult r = run_simulation(c, dir);
    if (!r.ok) {
      err << "numerical failure: " << r.message << "\n";
      return static_cast<int>(kNumerical);
    }
    const auto& rep = r.final_report;
    out << "t = " << csv::number(r.final_time) << ": k_dominant " << csv::number(diagnostics::value_or_nan(rep.k_dominant))
        << ", hexagonality " << csv::number(diagnostics::value_or_nan(rep.hexagonality)) << ", bunching "
        << csv::number(diagnostics::value_or_nan(rep.bunching)) << ", correlation "
        << csv::number(diagnostics::value_or_nan(rep.field_density_correlation)) << "\n";
    out << "wrote " << (dir / "summary.csv").string() << "\n";
    return static_cast<int>(kOk);
  });
}

// ----------------------------------------------------------------- diagnose

struct DiagnoseArgs {
  fs::path in;
  fs::path out;
  std::optional<fs::path> density;  // pairs a field dump with its density
  std::optional<fs::path> peaks;
  bool hann = false;
};

/// Report for a dump (complex dumps are analyzed as |E|^2), optionally paired
/// with a density dump for bunching and correlation.
inline diagnostics::SpectrumReport diagnose_dump(const cavx::GridDump& d, const cavx::GridDump* density,
                                                 diagnostics::Window w) {
  if (d.kind == cavx::Kind::complex_field) {
    const FieldGrid E = cavx::to_field(d);
    if (density) return diagnostics::analyze(E, cavx::to_density(*density), w);
    const auto s = E.intensity();
    return diagnostics::analyze(diagnostics::RealGridView{E.geom, s}, w);
  }
  if (density) throw ValidationError("diagnose: --density pairs with a complex field dump");
  const DensityGrid n = cavx::to_density(d);
  return diagnostics::analyze(diagnostics::view(n), w, &n);
}

inline int cmd_diagnose(const DiagnoseArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (a.in.empty() || a.out.empty()) throw ValidationError("diagnose: --in and --out are required");
    const cavx::GridDump d = cavx::read(a.in);
    std::optional<cavx::GridDump> n;
    if (a.density) n = cavx::read(*a.density);
    const auto rep = diagnose_dump(d, n ? &*n : nullptr, a.hann ? diagnostics::Window::hann : diagnostics::Window::none);
    if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
    cavx::write_file_atomic(a.out, diagnostics::to_csv(rep));
    if (a.peaks) cavx::write_file_atomic(*a.peaks, diagnostics::peaks_to_csv(rep));
    out << "wrote " << a.out.string() << "\n";
    return static_cast<int>(kOk);
  });
}

// -------------------------------------------------------------------- sweep

struct SweepArgs {
  std::string param;
  std::vector<std::string> values;
  unsigned jobs = 1;
  std::optional<fs::path> out_dir;
};

struct SweepJob {
  std::string value;
  std::uint64_t seed = 0;
  std::string directory;
  std::string status = "pending";  // ok | invalid | numerical
  std::string message;
  SimulationResult result;
};

inline std::vector<std::string> split_values(const std::string& list) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(list);
  while (std::getline(in, cur, ','))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::string manifest_csv(const std::string& param, const std::vector<SweepJob>& jobs) {
  csv::Writer w({"index", "param", "value", "seed", "status", "directory", "final_time", "k_dominant",
                 "hexagonality", "bunching", "field_density_correlation", "message"});
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& j = jobs[i];
    const auto& r = j.result.final_report;
    std::string msg = j.message;
    for (char& ch : msg)
      if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
    w.num(static_cast<unsigned long long>(i))
        .field(param)
        .field(j.value)
        .num(static_cast<unsigned long long>(j.seed))
        .field(j.status)
        .field(j.directory)
        .num(j.result.final_time)
        .num(diagnostics::value_or_nan(r.k_dominant))
        .num(diagnostics::value_or_nan(r.hexagonality))
        .num(diagnostics::value_or_nan(r.bunching))
        .num(diagnostics::value_or_nan(r.field_density_correlation))
        .field(msg);
    w.end_row();
  }
  return w.str();
}

/// Independent simulations, one per value, in job_NNN subdirectories. Job i
/// runs with seed base_seed + i unless the sweep is over the seed itself.
/// Failures are recorded in the manifest and do not stop the sweep.
inline int cmd_sweep(const config::RunConfig& c, const SweepArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (a.param.empty()) throw ValidationError("sweep: --param is required");
    if (a.values.empty()) throw ValidationError("sweep: --values must list at least one value");
    if (a.jobs == 0) throw ValidationError("sweep: --jobs must be >= 1");
    config::with_value(c, a.param, a.values.front());  // rejects unknown or non-scalar keys up front
    const fs::path root = a.out_dir.value_or(fs::path(c.output.directory));
    fs::create_directories(root);

    std::vector<SweepJob> jobs(a.values.size());
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "job_%03zu", i);
      jobs[i].value = a.values[i];
      jobs[i].directory = name;
    }
    auto run_one = [&](std::size_t i) {
      SweepJob& job = jobs[i];
      try {
        config::RunConfig jc = config::with_value(c, a.param, job.value);
        if (a.param != "sim.seed") jc.sim.seed = c.sim.seed + i;
        job.seed = jc.sim.seed;
        job.result = run_simulation(jc, root / job.directory);
        job.status = job.result.ok ? "ok" : "numerical";
        job.message = job.result.message;
      } catch (const ValidationError& e) {
        job.status = "invalid";
        job.message = e.what();
      } catch (const NumericalError& e) {
        job.status = "numerical";
        job.message = e.what();
      } catch (const std::exception& e) {
        job.status = "error";
        job.message = e.what();
      }
    };

    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(a.jobs, jobs.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) run_one(i);
    };
    if (workers <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }

    cavx::write_file_atomic(root / "manifest.csv", manifest_csv(a.param, jobs));
    std::size_t failed = 0;
    for (const auto& j : jobs)
      if (j.status != "ok") {
        ++failed;
        err << "job " << j.directory << " (" << a.param << " = " << j.value << "): " << j.status << ": "
            << j.message << "\n";
      }
    out << "wrote " << jobs.size() << " jobs to " << root.string() << " (" << failed << " failed)\n";
    return static_cast<int>(failed == 0 ? kOk : kNumerical);
  });
}

}  // namespace hexcav::commands
