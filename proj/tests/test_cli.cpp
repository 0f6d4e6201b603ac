#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hexcav/cavx.hpp"
#include "hexcav/config.hpp"
#include "hexcav/diagnostics.hpp"
#include "hexcav/params.hpp"

namespace fs = std::filesystem;
using namespace hexcav;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hexcav_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" +
            std::to_string(std::random_device{}()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliRun run(const std::string& args) {
    const fs::path o = dir_ / "stdout.txt";
    const fs::path e = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + HEXCAV_CLI_PATH + "\" " + args + " >\"" + o.string() + "\" 2>\"" +
                            e.string() + "\"";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(o);
    r.err = slurp(e);
    return r;
  }

  fs::path write_config(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

std::map<std::string, double> parse_table(const std::string& text) {
  std::map<std::string, double> out;
  std::istringstream in(text);
  std::string key;
  double v;
  while (in >> key >> v) out[key] = v;
  return out;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string l;
  while (std::getline(in, l)) out.push_back(l);
  return out;
}

const char* kSmallSim = R"({
  "physical": {"scaled_diffusivity": 0.1},
  "sim": {"grid_nx": 32, "grid_ny": 32, "domain_periods": 4, "dt_scaled": 0.05, "t_end_scaled": 20,
          "pump": {"profile": "plane", "ratio_to_threshold": 1.5}},
  "output": {"formats": ["cavx", "pgm"], "snapshot_every_steps": 200}
})";

}  // namespace

TEST_F(CliTest, ThresholdDefaultsNearAnalyticValue) {
  const CliRun r = run("threshold");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = parse_table(r.out);
  ASSERT_TRUE(t.count("s0_th") && t.count("k_c") && t.count("Lambda_m") && t.count("Y_th") &&
              t.count("I_ext_mW_per_cm2"));
  EXPECT_NEAR(t.at("s0_th"), 0.0430503, 1e-6);
  EXPECT_NEAR(t.at("s0_analytic"), 0.04124310724, 1e-9);
  EXPECT_NEAR(t.at("I_ext_mW_per_cm2"), 1.6 * t.at("Y_th") / 60.0, 1e-12);
}

TEST_F(CliTest, ThresholdLengthMatchesPatternPeriodFormula) {
  const CliRun r = run("threshold --b0 3 --theta-eff -2");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = parse_table(r.out);
  EXPECT_EQ(t.at("b0"), 3.0);
  EXPECT_EQ(t.at("theta_eff"), -2.0);
  // Independent path: the sideband at physical wavenumber k_c / sqrt(a) picks up
  // round-trip phase delta_phi = k_perp^2 L / k0 over a diffractive length L.
  const PhysicalParams p;
  const double k0 = 2 * std::numbers::pi / p.lambda0;
  const double a = p.l_eff / (k0 * p.T_loss);
  const double k_perp = t.at("k_c") / std::sqrt(a);
  const double delta_phi = k_perp * k_perp * p.l_eff / k0;
  const double Lambda = pattern_period(p.l_eff, p.lambda0, delta_phi);
  EXPECT_LT(std::abs(Lambda - t.at("Lambda_m")) / Lambda, 0.01);
}

TEST_F(CliTest, ThresholdWithoutMediumIsExplicitNoInstability) {
  const CliRun r = run("threshold --b0 0");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("no instability"), std::string::npos) << r.err;
}

TEST_F(CliTest, InvalidConfigListsEveryBadKey) {
  const auto cfg = write_config("bad.json", R"({"physical": {"temprature_uK": 1, "cavity_loss": -1},
                                                "sim": {"dt": 0.1}})");
  const CliRun r = run("threshold -c \"" + cfg.string() + "\"");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("physical.temprature_uK"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("sim.dt"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("physical.cavity_loss"), std::string::npos) << r.err;
}

TEST_F(CliTest, MissingConfigAndBadFlagsAreValidationErrors) {
  EXPECT_EQ(run("threshold -c /nonexistent.json").code, 1);
  EXPECT_EQ(run("lsa-scan").code, 1);  // --out is required
  EXPECT_EQ(run("no-such-command").code, 1);
  EXPECT_EQ(run("threshold --b0 abc").code, 1);
}

TEST_F(CliTest, LsaScanSinglePoint) {
  const fs::path out = dir_ / "one.csv";
  const CliRun r = run("lsa-scan --b0-min 2 --b0-max 2 --points 1 --out \"" + out.string() + "\"");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(slurp(out));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], "b0,s0_th,s0_analytic,k_c,I_ext_m1,I_ext_m5,converged");
  EXPECT_EQ(rows[1].substr(0, 2), "2,");
  EXPECT_EQ(rows[1].back(), '1');
}

TEST_F(CliTest, LsaScanIsByteIdenticalAndHasUnitSlope) {
  const fs::path a = dir_ / "a.csv";
  const fs::path b = dir_ / "b.csv";
  ASSERT_EQ(run("lsa-scan --b0-min 0.1 --b0-max 100 --points 20 --out \"" + a.string() + "\"").code, 0);
  ASSERT_EQ(run("lsa-scan --b0-min 0.1 --b0-max 100 --points 20 --out \"" + b.string() + "\"").code, 0);
  const std::string text = slurp(a);
  EXPECT_EQ(text, slurp(b));
  EXPECT_EQ(text.find('\r'), std::string::npos);
  const auto rows = lines(text);
  ASSERT_EQ(rows.size(), 21u);
  // Least-squares slope of log s0_th against log b0 over the dilute window
  // 1 <= b0 <= 3. Below b0 ~ 0.16 the medium cannot destabilise the pump at
  // all and the row must be flagged as not converged.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::istringstream in(rows[i]);
    std::vector<std::string> cols;
    for (std::string c; std::getline(in, c, ',');) cols.push_back(c);
    ASSERT_EQ(cols.size(), 7u) << rows[i];
    const double b0 = std::stod(cols[0]);
    const bool converged = cols[6] == "1";
    EXPECT_EQ(converged, b0 > 0.16) << rows[i];
    if (!converged) {
      EXPECT_EQ(cols[1], "nan") << rows[i];
      continue;
    }
    if (b0 < 1.0 || b0 > 3.0) continue;
    const double x = std::log(b0), y = std::log(std::stod(cols[1]));
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++n;
  }
  ASSERT_GE(n, 2);
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_NEAR(slope, -1.0, 0.05);
}

TEST_F(CliTest, SimulateWritesSnapshotsSummaryAndNoTemporaries) {
  const auto cfg = write_config("sim.json", kSmallSim);
  const fs::path out = dir_ / "run";
  const CliRun r = run("simulate -c \"" + cfg.string() + "\" --out-dir \"" + out.string() + "\"");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"config.json", "summary.csv", "field_00000000.cavx", "field_00000400.cavx",
                        "density_00000400.cavx", "intensity_00000400.pgm", "density_00000400.pgm"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  for (const auto& e : fs::directory_iterator(out)) EXPECT_NE(e.path().extension(), ".tmp") << e.path();
  const auto rows = lines(slurp(out / "summary.csv"));
  ASSERT_EQ(rows.size(), 4u);  // header + steps 0, 200, 400
  EXPECT_EQ(rows[3].substr(0, 7), "400,20,");
  EXPECT_EQ(slurp(out / "intensity_00000400.pgm").substr(0, 10), "P5\n32 32\n2");
  // The written config reproduces the run config.
  EXPECT_EQ(config::load(out / "config.json"), config::parse(kSmallSim));
  // Dumps decode and carry the snapshot time.
  const auto d = cavx::read(out / "density_00000400.cavx");
  EXPECT_EQ(d.kind, cavx::Kind::real_density);
  EXPECT_EQ(d.time, 20.0);
}

TEST_F(CliTest, SimulateIsByteDeterministic) {
  const auto cfg = write_config("sim.json", kSmallSim);
  ASSERT_EQ(run("simulate -c \"" + cfg.string() + "\" --out-dir \"" + (dir_ / "a").string() + "\"").code, 0);
  ASSERT_EQ(run("simulate -c \"" + cfg.string() + "\" --out-dir \"" + (dir_ / "b").string() + "\"").code, 0);
  for (const auto& e : fs::directory_iterator(dir_ / "a")) {
    const auto name = e.path().filename();
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "b" / name)) << name;
  }
}

TEST_F(CliTest, SimulateRejectsUnstableTimeStep) {
  const auto cfg = write_config("sim.json", R"({"physical": {"scaled_diffusivity": 0.1},
    "sim": {"grid_nx": 64, "grid_ny": 64, "dt_scaled": 0.5, "t_end_scaled": 1}})");
  const CliRun r = run("simulate -c \"" + cfg.string() + "\" --out-dir \"" + (dir_ / "x").string() + "\"");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("stability bound"), std::string::npos) << r.err;
}

TEST_F(CliTest, DiagnoseMatchesSimulationSummary) {
  const auto cfg = write_config("sim.json", kSmallSim);
  const fs::path out = dir_ / "run";
  ASSERT_EQ(run("simulate -c \"" + cfg.string() + "\" --out-dir \"" + out.string() + "\"").code, 0);
  const fs::path rep = dir_ / "rep.csv";
  const fs::path peaks = dir_ / "peaks.csv";
  const CliRun r = run("diagnose --in \"" + (out / "field_00000400.cavx").string() + "\" --density \"" +
                    (out / "density_00000400.cavx").string() + "\" --out \"" + rep.string() + "\" --peaks \"" +
                    peaks.string() + "\"");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = lines(slurp(rep));
  ASSERT_EQ(report.size(), 2u);
  EXPECT_EQ(report[0], "k_dominant,ring_power_fraction,hexagonality,bunching,field_density_correlation");
  // Same five numbers as the summary row for step 400.
  const auto summary = lines(slurp(out / "summary.csv"));
  const std::string row = summary[3];
  std::vector<std::string> cols;
  std::istringstream in(row);
  for (std::string c; std::getline(in, c, ',');) cols.push_back(c);
  EXPECT_EQ(report[1], cols[2] + "," + cols[3] + "," + cols[4] + "," + cols[5] + "," + cols[6]);
  EXPECT_EQ(lines(slurp(peaks))[0], "kx,ky,power");
}

TEST_F(CliTest, DiagnoseTruncatedFileNamesByteCounts) {
  const DensityGrid n({16, 16, 1.0, 1.0}, 1.0);
  const std::string bytes = cavx::encode(cavx::from_density(n));
  std::ofstream(dir_ / "t.cavx", std::ios::binary) << bytes.substr(0, 100);
  const CliRun r = run("diagnose --in \"" + (dir_ / "t.cavx").string() + "\" --out \"" + (dir_ / "r.csv").string() + "\"");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("expected " + std::to_string(bytes.size()) + " bytes, got 100"), std::string::npos) << r.err;
}

TEST_F(CliTest, DiagnoseBadMagicIsNamed) {
  std::string bytes = cavx::encode(cavx::from_density(DensityGrid({16, 16, 1.0, 1.0}, 1.0)));
  bytes[1] = 'Z';
  std::ofstream(dir_ / "m.cavx", std::ios::binary) << bytes;
  const CliRun r = run("diagnose --in \"" + (dir_ / "m.cavx").string() + "\" --out \"" + (dir_ / "r.csv").string() + "\"");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bad magic"), std::string::npos) << r.err;
}

TEST_F(CliTest, SweepIsIndependentOfJobCount) {
  const auto cfg = write_config("sim.json", kSmallSim);
  const std::string base = "sweep -c \"" + cfg.string() + "\" --param sim.pump.ratio_to_threshold --values 0.8,1.2,1.5 ";
  ASSERT_EQ(run(base + "--jobs 1 --out-dir \"" + (dir_ / "j1").string() + "\"").code, 0);
  ASSERT_EQ(run(base + "--jobs 3 --out-dir \"" + (dir_ / "j3").string() + "\"").code, 0);
  EXPECT_EQ(slurp(dir_ / "j1" / "manifest.csv"), slurp(dir_ / "j3" / "manifest.csv"));
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir_ / "j1")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir_ / "j1");
    EXPECT_EQ(slurp(e.path()), slurp(dir_ / "j3" / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 10u);
  const auto rows = lines(slurp(dir_ / "j1" / "manifest.csv"));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_NE(rows[1].find(",0.8,1,ok,job_000,"), std::string::npos) << rows[1];
  EXPECT_NE(rows[3].find(",1.5,3,ok,job_002,"), std::string::npos) << rows[3];
}

TEST_F(CliTest, SweepRecordsFailedJobsAndContinues) {
  const auto cfg = write_config("sim.json", kSmallSim);
  const CliRun r = run("sweep -c \"" + cfg.string() + "\" --param sim.dt_scaled --values 0.05,-1,0.04 --jobs 2 --out-dir \"" +
                    (dir_ / "s").string() + "\"");
  EXPECT_EQ(r.code, 2);
  const auto rows = lines(slurp(dir_ / "s" / "manifest.csv"));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_NE(rows[1].find(",ok,"), std::string::npos);
  EXPECT_NE(rows[2].find(",invalid,"), std::string::npos);
  EXPECT_NE(rows[3].find(",ok,"), std::string::npos);
}

TEST_F(CliTest, SweepRejectsUnknownParameter) {
  const CliRun r = run("sweep --param sim.nothing --values 1,2");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("sim.nothing"), std::string::npos) << r.err;
}

TEST_F(CliTest, ShippedConfigsParse) {
  for (const auto& e : fs::directory_iterator(fs::path(HEXCAV_SOURCE_DIR) / "configs")) {
    EXPECT_NO_THROW(config::load(e.path())) << e.path();
  }
  EXPECT_EQ(config::load(fs::path(HEXCAV_SOURCE_DIR) / "configs" / "default.json"), config::RunConfig{});
}
