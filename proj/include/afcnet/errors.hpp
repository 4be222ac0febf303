#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace afcnet {

/// Configuration rejected; each message is prefixed with the offending field path.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : std::invalid_argument(join(problems)), problems_(std::move(problems)) {}

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s;
    for (const auto& m : p) {
      if (!s.empty()) s += "; ";
      s += m;
    }
    return s;
  }

  std::vector<std::string> problems_;
};

/// g2 cannot be formed because no accidental coincidences were observed.
class UndefinedG2 : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {

inline void check_probability(std::vector<std::string>& out, const std::string& path, double p) {
  if (!(p >= 0.0 && p <= 1.0)) out.push_back(path + ": must lie in [0, 1], got " + std::to_string(p));
}

inline void check_non_negative(std::vector<std::string>& out, const std::string& path, double v) {
  if (!(v >= 0.0)) out.push_back(path + ": must be non-negative, got " + std::to_string(v));
}

inline void throw_if_any(std::vector<std::string> problems) {
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

}  // namespace detail

}  // namespace afcnet
