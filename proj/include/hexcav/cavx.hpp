#pragma once

// CAVX grid dumps. Layout (all little-endian):
//
//   offset  size  field
//        0     4  magic "CAVX"
//        4     4  version (u32) = 1
//        8     4  kind (u32): 0 complex field, 1 real density
//       12     8  nx (u64)
//       20     8  ny (u64)
//       28     8  dx (f64)
//       36     8  dy (f64)
//       44     8  time (f64)
//       52     *  payload, row-major (x fastest) f64; interleaved re,im for kind 0

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "hexcav/error.hpp"
#include "hexcav/grid.hpp"

namespace hexcav::cavx {

inline constexpr std::array<char, 4> kMagic{'C', 'A', 'V', 'X'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 52;

enum class Kind : std::uint32_t { complex_field = 0, real_density = 1 };

struct GridDump {
  Kind kind = Kind::real_density;
  std::uint64_t nx = 0;
  std::uint64_t ny = 0;
  double dx = 0;
  double dy = 0;
  double time = 0;
  std::vector<double> payload;

  std::size_t values_per_cell() const { return kind == Kind::complex_field ? 2 : 1; }
  GridGeometry geometry() const {
    return {static_cast<std::size_t>(nx), static_cast<std::size_t>(ny), dx * static_cast<double>(nx),
            dy * static_cast<double>(ny)};
  }
};

inline GridDump from_field(const FieldGrid& E) {
  GridDump d;
  d.kind = Kind::complex_field;
  d.nx = E.geom.nx;
  d.ny = E.geom.ny;
  d.dx = E.geom.dx();
  d.dy = E.geom.dy();
  d.time = E.time;
  d.payload.reserve(2 * E.values.size());
  for (const auto& v : E.values) {
    d.payload.push_back(v.real());
    d.payload.push_back(v.imag());
  }
  return d;
}

inline GridDump from_density(const DensityGrid& n) {
  GridDump d;
  d.kind = Kind::real_density;
  d.nx = n.geom.nx;
  d.ny = n.geom.ny;
  d.dx = n.geom.dx();
  d.dy = n.geom.dy();
  d.time = n.time;
  d.payload = n.values;
  return d;
}

inline FieldGrid to_field(const GridDump& d) {
  if (d.kind != Kind::complex_field) throw ValidationError("CAVX dump is not a complex field");
  FieldGrid E(d.geometry());
  E.time = d.time;
  for (std::size_t i = 0; i < E.values.size(); ++i) E.values[i] = {d.payload[2 * i], d.payload[2 * i + 1]};
  return E;
}

inline DensityGrid to_density(const GridDump& d) {
  if (d.kind != Kind::real_density) throw ValidationError("CAVX dump is not a real density");
  DensityGrid n(d.geometry());
  n.time = d.time;
  n.values = d.payload;
  return n;
}

namespace detail {

template <class T>
void put_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

template <class T>
T get_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(p[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace detail

inline std::string encode(const GridDump& d) {
  const std::uint64_t cells = d.nx * d.ny;
  if (d.payload.size() != cells * d.values_per_cell())
    throw ValidationError("CAVX encode: payload size does not match nx*ny");
  std::string out;
  out.reserve(kHeaderBytes + 8 * d.payload.size());
  out.append(kMagic.data(), kMagic.size());
  detail::put_le(out, kVersion);
  detail::put_le(out, static_cast<std::uint32_t>(d.kind));
  detail::put_le(out, d.nx);
  detail::put_le(out, d.ny);
  detail::put_le(out, d.dx);
  detail::put_le(out, d.dy);
  detail::put_le(out, d.time);
  for (double v : d.payload) detail::put_le(out, v);
  return out;
}

inline GridDump decode(std::string_view bytes) {
  using Code = FormatError::Code;
  if (bytes.size() < kHeaderBytes)
    throw FormatError(Code::length_mismatch, "CAVX: truncated header: expected at least " +
                                                 std::to_string(kHeaderBytes) + " bytes, got " +
                                                 std::to_string(bytes.size()));
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (std::memcmp(p, kMagic.data(), 4) != 0) throw FormatError(Code::bad_magic, "CAVX: bad magic (expected \"CAVX\")");
  const auto version = detail::get_le<std::uint32_t>(p + 4);
  if (version != kVersion)
    throw FormatError(Code::bad_version, "CAVX: unsupported version " + std::to_string(version) + " (expected 1)");
  const auto kind = detail::get_le<std::uint32_t>(p + 8);
  if (kind > 1) throw FormatError(Code::bad_kind, "CAVX: unknown kind " + std::to_string(kind));

  GridDump d;
  d.kind = static_cast<Kind>(kind);
  d.nx = detail::get_le<std::uint64_t>(p + 12);
  d.ny = detail::get_le<std::uint64_t>(p + 20);
  d.dx = detail::get_le<double>(p + 28);
  d.dy = detail::get_le<double>(p + 36);
  d.time = detail::get_le<double>(p + 44);

  const std::uint64_t limit = std::uint64_t{1} << 32;
  if (d.nx == 0 || d.ny == 0 || d.nx > limit || d.ny > limit || d.nx * d.ny > (std::uint64_t{1} << 40))
    throw FormatError(Code::bad_size, "CAVX: invalid grid size " + std::to_string(d.nx) + "x" + std::to_string(d.ny));
  if (!(d.dx > 0) || !(d.dy > 0) || !std::isfinite(d.dx) || !std::isfinite(d.dy))
    throw FormatError(Code::bad_spacing, "CAVX: grid spacing must be positive and finite");
  if (!std::isfinite(d.time)) throw FormatError(Code::bad_spacing, "CAVX: time must be finite");

  const std::uint64_t values = d.nx * d.ny * d.values_per_cell();
  const std::uint64_t expected = kHeaderBytes + 8 * values;
  if (bytes.size() != expected)
    throw FormatError(Code::length_mismatch, "CAVX: expected " + std::to_string(expected) + " bytes, got " +
                                                 std::to_string(bytes.size()));
  d.payload.resize(values);
  for (std::uint64_t i = 0; i < values; ++i) d.payload[i] = detail::get_le<double>(p + kHeaderBytes + 8 * i);
  return d;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Code::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes through a sibling temporary and renames, so readers never observe a
/// partially written file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatError::Code::io, "cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw FormatError(FormatError::Code::io, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write(const std::filesystem::path& path, const GridDump& d) { write_file_atomic(path, encode(d)); }
inline GridDump read(const std::filesystem::path& path) { return decode(read_file(path)); }

}  // namespace hexcav::cavx
