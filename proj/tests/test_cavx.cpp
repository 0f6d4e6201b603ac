#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "hexcav/cavx.hpp"
#include "hexcav/commands.hpp"
#include "hexcav/diagnostics.hpp"

using namespace hexcav;
namespace fs = std::filesystem;

namespace {

FieldGrid random_field(std::size_t nx, std::size_t ny, unsigned seed) {
  FieldGrid E({nx, ny, 3.5, 7.25});
  E.time = 12.5;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  for (auto& v : E.values) v = {g(rng), g(rng)};
  return E;
}

DensityGrid random_density(std::size_t nx, std::size_t ny, unsigned seed) {
  DensityGrid n({nx, ny, 10.0, 10.0});
  n.time = 3.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (double& v : n.values) v = u(rng);
  return n;
}

FormatError::Code code_of(const std::string& bytes) {
  try {
    cavx::decode(bytes);
  } catch (const FormatError& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode accepted a corrupted header";
  return FormatError::Code::io;
}

std::string message_of(const std::string& bytes) {
  try {
    cavx::decode(bytes);
  } catch (const FormatError& e) {
    return e.what();
  }
  return {};
}

void put_u32(std::string& s, std::size_t off, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s[off + i] = static_cast<char>((v >> (8 * i)) & 0xFF);
}
void put_u64(std::string& s, std::size_t off, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) s[off + i] = static_cast<char>((v >> (8 * i)) & 0xFF);
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("hexcav_cavx_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(Cavx, HeaderLayoutIsLittleEndian) {
  cavx::GridDump d = cavx::from_density(DensityGrid({16, 32, 1.0, 2.0}, 1.0));
  d.time = 0.5;
  const std::string b = cavx::encode(d);
  ASSERT_EQ(b.size(), 52u + 16 * 32 * 8);
  EXPECT_EQ(b.substr(0, 4), "CAVX");
  const auto* p = reinterpret_cast<const unsigned char*>(b.data());
  EXPECT_EQ(p[4], 1);
  EXPECT_EQ(p[5] | p[6] | p[7], 0);
  EXPECT_EQ(p[8], 1);  // real density
  EXPECT_EQ(p[12], 16);
  EXPECT_EQ(p[20], 32);
  // dx = 1/16 = 0x3FB0000000000000, stored low byte first.
  EXPECT_EQ(p[35], 0x3F);
  EXPECT_EQ(p[34], 0xB0);
  // Payload value 1.0 = 0x3FF0000000000000.
  EXPECT_EQ(p[52 + 7], 0x3F);
  EXPECT_EQ(p[52 + 6], 0xF0);
  EXPECT_EQ(p[52], 0x00);
}

TEST(Cavx, FieldRoundTripIsBitExact) {
  const FieldGrid E = random_field(16, 32, 1);
  const cavx::GridDump d = cavx::decode(cavx::encode(cavx::from_field(E)));
  EXPECT_EQ(d.kind, cavx::Kind::complex_field);
  EXPECT_EQ(d.payload.size(), 2u * 16 * 32);
  const FieldGrid back = cavx::to_field(d);
  EXPECT_EQ(back.geom.nx, E.geom.nx);
  EXPECT_EQ(back.geom.ny, E.geom.ny);
  EXPECT_EQ(back.time, E.time);
  EXPECT_EQ(std::memcmp(back.values.data(), E.values.data(), E.values.size() * sizeof(cdouble)), 0);
  EXPECT_DOUBLE_EQ(back.geom.lx, E.geom.lx);
  EXPECT_DOUBLE_EQ(back.geom.ly, E.geom.ly);
}

TEST(Cavx, DensityRoundTripIsBitExact) {
  const DensityGrid n = random_density(32, 16, 2);
  const DensityGrid back = cavx::to_density(cavx::decode(cavx::encode(cavx::from_density(n))));
  EXPECT_EQ(back.values, n.values);
  EXPECT_EQ(back.time, n.time);
}

TEST(Cavx, KindMismatchOnConversion) {
  const auto d = cavx::from_density(random_density(16, 16, 3));
  EXPECT_THROW(cavx::to_field(d), ValidationError);
  EXPECT_THROW(cavx::to_density(cavx::from_field(random_field(16, 16, 3))), ValidationError);
}

TEST(Cavx, EachHeaderMutationHasADistinctError) {
  const std::string good = cavx::encode(cavx::from_field(random_field(16, 16, 4)));
  std::string magic = good;
  magic[0] = 'X';
  std::string version = good;
  put_u32(version, 4, 2);
  std::string kind = good;
  put_u32(kind, 8, 7);
  std::string nx = good;
  put_u64(nx, 12, 0);
  std::string ny = good;
  put_u64(ny, 20, 17);
  std::string dx = good;
  put_u64(dx, 28, 0);
  std::string payload = good;
  payload.pop_back();

  EXPECT_EQ(code_of(magic), FormatError::Code::bad_magic);
  EXPECT_EQ(code_of(version), FormatError::Code::bad_version);
  EXPECT_EQ(code_of(kind), FormatError::Code::bad_kind);
  EXPECT_EQ(code_of(nx), FormatError::Code::bad_size);
  EXPECT_EQ(code_of(ny), FormatError::Code::length_mismatch);  // consistent header, wrong payload size
  EXPECT_EQ(code_of(dx), FormatError::Code::bad_spacing);
  EXPECT_EQ(code_of(payload), FormatError::Code::length_mismatch);

  const std::set<std::string> messages{message_of(magic), message_of(version), message_of(kind), message_of(nx),
                                       message_of(ny), message_of(dx)};
  EXPECT_EQ(messages.size(), 6u);
  EXPECT_NE(message_of(magic).find("magic"), std::string::npos);
  EXPECT_NE(message_of(version).find("version 2"), std::string::npos);
  EXPECT_NE(message_of(kind).find("kind 7"), std::string::npos);
}

TEST(Cavx, KindChangeIsDetectedThroughLength) {
  // A complex dump relabelled as density has twice the expected payload.
  std::string b = cavx::encode(cavx::from_field(random_field(16, 16, 5)));
  put_u32(b, 8, 1);
  EXPECT_EQ(code_of(b), FormatError::Code::length_mismatch);
}

TEST(Cavx, TruncationNamesExpectedAndActualBytes) {
  const std::string good = cavx::encode(cavx::from_density(random_density(16, 16, 6)));
  const std::size_t expected = 52 + 16 * 16 * 8;
  ASSERT_EQ(good.size(), expected);
  const std::string cut = good.substr(0, 1000);
  const std::string msg = message_of(cut);
  EXPECT_NE(msg.find("expected " + std::to_string(expected) + " bytes"), std::string::npos) << msg;
  EXPECT_NE(msg.find("got 1000"), std::string::npos) << msg;
  const std::string header_msg = message_of(good.substr(0, 20));
  EXPECT_NE(header_msg.find("got 20"), std::string::npos) << header_msg;
  const std::string longer = message_of(good + "x");
  EXPECT_NE(longer.find("got " + std::to_string(expected + 1)), std::string::npos) << longer;
}

TEST(Cavx, EncodeRejectsInconsistentPayload) {
  cavx::GridDump d = cavx::from_density(random_density(16, 16, 7));
  d.payload.pop_back();
  EXPECT_THROW(cavx::encode(d), ValidationError);
}

TEST(Cavx, AtomicWriteLeavesNoTemporary) {
  TempDir dir;
  const fs::path file = dir.path / "n.cavx";
  const auto d = cavx::from_density(random_density(16, 16, 8));
  cavx::write(file, d);
  cavx::write(file, d);  // overwrite in place
  EXPECT_TRUE(fs::exists(file));
  EXPECT_FALSE(fs::exists(dir.path / "n.cavx.tmp"));
  EXPECT_EQ(fs::file_size(file), 52u + 16 * 16 * 8);
  EXPECT_EQ(cavx::read(file).payload, d.payload);
}

TEST(Cavx, MissingFileIsIoError) {
  try {
    cavx::read("/nonexistent/dir/x.cavx");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.code(), FormatError::Code::io);
  }
}

TEST(Cavx, DiagnoseRoundTripMatchesInMemoryBitForBit) {
  TempDir dir;
  // Hexagonal intensity from three on-grid cosines.
  const GridGeometry g{64, 64, 40.0, 40.0};
  FieldGrid E(g);
  DensityGrid n(g);
  const double q = 2 * std::numbers::pi / g.lx;
  const int kx[3] = {8, 4, -4};
  const int ky[3] = {0, 7, 7};
  for (std::size_t iy = 0; iy < g.ny; ++iy)
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      double s = 0.05;
      for (int m = 0; m < 3; ++m) s += 0.01 * std::cos(q * (kx[m] * g.x(ix) + ky[m] * g.y(iy)));
      E.at(ix, iy) = std::sqrt(s);
      n.at(ix, iy) = std::pow(1 + s, -24.0);
    }
  cavx::write(dir.path / "E.cavx", cavx::from_field(E));
  cavx::write(dir.path / "n.cavx", cavx::from_density(n));

  std::ostringstream out, err;
  commands::DiagnoseArgs a;
  a.in = dir.path / "E.cavx";
  a.out = dir.path / "E.csv";
  a.density = dir.path / "n.cavx";
  ASSERT_EQ(commands::cmd_diagnose(a, out, err), 0) << err.str();
  const std::string expected = diagnostics::to_csv(diagnostics::analyze(E, n));
  EXPECT_EQ(cavx::read_file(a.out), expected);
  const auto rep = diagnostics::analyze(E, n);
  EXPECT_GT(*rep.hexagonality, 0.9);
  EXPECT_LT(*rep.field_density_correlation, -0.9);

  a.in = dir.path / "n.cavx";
  a.out = dir.path / "n.csv";
  a.density.reset();
  ASSERT_EQ(commands::cmd_diagnose(a, out, err), 0) << err.str();
  EXPECT_EQ(cavx::read_file(a.out), diagnostics::to_csv(diagnostics::analyze(diagnostics::view(n), {}, &n)));
}

TEST(Cavx, DiagnoseReportsCorruptionAsValidationExit) {
  TempDir dir;
  const std::string good = cavx::encode(cavx::from_density(random_density(16, 16, 9)));
  cavx::write_file_atomic(dir.path / "bad.cavx", good.substr(0, good.size() - 8));
  std::ostringstream out, err;
  commands::DiagnoseArgs a;
  a.in = dir.path / "bad.cavx";
  a.out = dir.path / "r.csv";
  EXPECT_EQ(commands::cmd_diagnose(a, out, err), 1);
  EXPECT_NE(err.str().find("expected " + std::to_string(good.size()) + " bytes, got " +
                           std::to_string(good.size() - 8)),
            std::string::npos)
      << err.str();
  EXPECT_FALSE(fs::exists(a.out));
}
