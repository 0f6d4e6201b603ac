#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hexcav {

// Invalid user input: bad parameters, config keys, preconditions. Maps to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}

  ValidationError(const std::string& context, std::vector<std::string> problems)
      : std::invalid_argument(join(context, problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::string& context, const std::vector<std::string>& problems) {
    std::string out = context;
    for (const auto& p : problems) {
      out += "\n  - ";
      out += p;
    }
    return out;
  }

  std::vector<std::string> problems_;
};

// Solver or integrator failure: non-convergence, NaN blow-up. Maps to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed on-disk data.
class FormatError : public std::runtime_error {
 public:
  enum class Code { io, bad_magic, bad_version, bad_kind, bad_size, bad_spacing, length_mismatch };

  FormatError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

// Collects validation problems so a caller can report all of them at once.
class ProblemList {
 public:
  void check(bool ok, std::string message) {
    if (!ok) problems_.push_back(std::move(message));
  }
  void add(std::string message) { problems_.push_back(std::move(message)); }
  bool empty() const noexcept { return problems_.empty(); }

  void throw_if_any(const std::string& context) const {
    if (!problems_.empty()) throw ValidationError(context, problems_);
  }

 private:
  std::vector<std::string> problems_;
};

}  // namespace hexcav
