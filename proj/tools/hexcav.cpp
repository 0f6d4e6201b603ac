// hexcav: thresholds, b0 scans, simulations, diagnostics and sweeps for the
// optomechanical cavity pattern model.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hexcav/commands.hpp"
#include "hexcav/config.hpp"

namespace {

using namespace hexcav;

config::RunConfig load_config(const std::string& path) {
  return path.empty() ? config::RunConfig{} : config::load(path);
}

template <class T>
std::optional<T> opt_if(const CLI::Option* o, const T& v) {
  return o->count() ? std::optional<T>(v) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transverse pattern formation of a thermal cloud in a longitudinally pumped cavity"};
  app.require_subcommand(1);
  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "JSON run config (defaults for every key not given)");
  };

  auto* th = app.add_subcommand("threshold", "Instability threshold and critical wavenumber");
  add_config(th);
  double b0 = 0, theta_eff = 0;
  auto* b0_opt = th->add_option("--b0", b0, "On-resonance optical density (overrides physical.optical_density_b0)");
  auto* te_opt = th->add_option("--theta-eff", theta_eff, "Dressed cavity detuning (overrides sim.theta_eff)");

  auto* scan = app.add_subcommand("lsa-scan", "Threshold versus optical density, written as CSV");
  add_config(scan);
  double b0_min = 0, b0_max = 0;
  std::size_t points = 0;
  std::string scan_out;
  auto* min_opt = scan->add_option("--b0-min", b0_min, "Smallest optical density");
  auto* max_opt = scan->add_option("--b0-max", b0_max, "Largest optical density");
  auto* pts_opt = scan->add_option("--points", points, "Number of log-spaced points");
  scan->add_option("--out", scan_out, "Output CSV path")->required();

  auto* sim = app.add_subcommand("simulate", "Integrate the field and density equations");
  add_config(sim);
  std::string sim_out;
  auto* sim_out_opt = sim->add_option("--out-dir", sim_out, "Output directory (overrides output.directory)");

  auto* diag = app.add_subcommand("diagnose", "Pattern diagnostics of a CAVX dump");
  commands::DiagnoseArgs dargs;
  std::string d_in, d_out, d_density, d_peaks;
  diag->add_option("--in", d_in, "CAVX dump")->required();
  diag->add_option("--out", d_out, "Report CSV")->required();
  auto* dens_opt = diag->add_option("--density", d_density, "Density dump paired with a field dump");
  auto* peaks_opt = diag->add_option("--peaks", d_peaks, "Ring peak CSV");
  diag->add_flag("--hann", dargs.hann, "Apply a Hann window before the spectrum");

  auto* sw = app.add_subcommand("sweep", "Independent simulations over one config key");
  add_config(sw);
  commands::SweepArgs sargs;
  std::string values, sw_out;
  sw->add_option("--param", sargs.param, "Dotted scalar config key, e.g. sim.pump.ratio_to_threshold")->required();
  sw->add_option("--values", values, "Comma-separated values")->required();
  sw->add_option("--jobs", sargs.jobs, "Parallel jobs")->default_val(1u);
  auto* sw_out_opt = sw->add_option("--out-dir", sw_out, "Sweep root directory (overrides output.directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : commands::kValidation;
  }

  auto& out = std::cout;
  auto& err = std::cerr;
  std::optional<config::RunConfig> cfg;
  const int loaded = commands::guarded(err, [&] {
    if (!diag->parsed()) cfg = load_config(config_path);
    return 0;
  });
  if (loaded != 0) return loaded;

  if (th->parsed()) return commands::cmd_threshold(*cfg, opt_if(b0_opt, b0), opt_if(te_opt, theta_eff), out, err);
  if (scan->parsed()) {
    commands::ScanArgs a;
    a.b0_min = opt_if(min_opt, b0_min);
    a.b0_max = opt_if(max_opt, b0_max);
    a.points = opt_if(pts_opt, points);
    a.out = scan_out;
    return commands::cmd_lsa_scan(*cfg, a, out, err);
  }
  if (sim->parsed())
    return commands::cmd_simulate(*cfg, opt_if(sim_out_opt, std::filesystem::path(sim_out)), out, err);
  if (diag->parsed()) {
    dargs.in = d_in;
    dargs.out = d_out;
    if (dens_opt->count()) dargs.density = d_density;
    if (peaks_opt->count()) dargs.peaks = d_peaks;
    return commands::cmd_diagnose(dargs, out, err);
  }
  if (sw->parsed()) {
    sargs.values = commands::split_values(values);
    if (sw_out_opt->count()) sargs.out_dir = sw_out;
    return commands::cmd_sweep(*cfg, sargs, out, err);
  }
  return commands::kValidation;
}
