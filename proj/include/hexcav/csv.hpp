#pragma once

// Locale-independent CSV output. Numbers use the shortest representation that
// round-trips; non-finite values are written as nan/inf.

#include <charconv>
#include <cmath>
#include <initializer_list>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace hexcav::csv {

inline std::string number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

inline std::string number(long long v) { return std::to_string(v); }
inline std::string number(unsigned long long v) { return std::to_string(v); }
inline std::string number(int v) { return std::to_string(v); }
inline std::string number(unsigned long v) { return std::to_string(v); }
inline std::string number(long v) { return std::to_string(v); }
inline std::string number(bool v) { return v ? "1" : "0"; }

class Writer {
 public:
  explicit Writer(std::initializer_list<std::string_view> header) {
    row_.assign(header.begin(), header.end());
    end_row();
  }

  Writer& field(std::string_view s) {
    row_.emplace_back(s);
    return *this;
  }
  template <class T>
  Writer& num(T v) {
    row_.push_back(number(v));
    return *this;
  }

  void end_row() {
    for (std::size_t i = 0; i < row_.size(); ++i) {
      if (i) out_ += ',';
      out_ += row_[i];
    }
    out_ += '\n';
    row_.clear();
  }

  const std::string& str() const { return out_; }

 private:
  std::vector<std::string> row_;
  std::string out_;
};

}  // namespace hexcav::csv
