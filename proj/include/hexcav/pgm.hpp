#pragma once

// 8-bit binary greymap (P5) renders with linear min-max scaling.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <span>
#include <string>

#include "hexcav/cavx.hpp"
#include "hexcav/grid.hpp"

namespace hexcav::pgm {

struct Scale {
  double min = 0;
  double max = 0;
};

inline std::string encode(const GridGeometry& g, std::span<const double> values, Scale* scale_out = nullptr) {
  Scale sc{values.empty() ? 0.0 : values[0], values.empty() ? 0.0 : values[0]};
  for (double v : values) {
    sc.min = std::min(sc.min, v);
    sc.max = std::max(sc.max, v);
  }
  if (scale_out) *scale_out = sc;
  std::string out = "P5\n" + std::to_string(g.nx) + " " + std::to_string(g.ny) + "\n255\n";
  const double span = sc.max - sc.min;
  for (double v : values) {
    const double t = span > 0 ? (v - sc.min) / span : 0.0;
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * std::clamp(t, 0.0, 1.0)))));
  }
  return out;
}

inline Scale write(const std::filesystem::path& path, const GridGeometry& g, std::span<const double> values) {
  Scale sc;
  cavx::write_file_atomic(path, encode(g, values, &sc));
  return sc;
}

}  // namespace hexcav::pgm
