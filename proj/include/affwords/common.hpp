#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace affwords {

enum class ErrorKind {
  invalid_argument,
  cycle,
  impossible_evidence,
  parse,
  io,
  mismatch,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::cycle: return "cycle";
    case ErrorKind::impossible_evidence: return "impossible evidence";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::io: return "i/o error";
    case ErrorKind::mismatch: return "model mismatch";
  }
  return "error";
}

// All library failures are reported with this exception; the kind lets the
// CLI map them onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

inline double log_sum_exp(std::span<const double> values) {
  double hi = neg_inf;
  for (double v : values) hi = std::max(hi, v);
  if (hi == neg_inf) return neg_inf;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - hi);
  return hi + std::log(sum);
}

inline double log_add(double a, double b) {
  if (a == neg_inf) return b;
  if (b == neg_inf) return a;
  return a > b ? a + std::log1p(std::exp(b - a))
               : b + std::log1p(std::exp(a - b));
}

// splitmix64 step, used to derive independent per-item seeds from one base
// seed.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Fixed-format number rendering for CSV output.
inline std::string format_double(double v, int precision = 10) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

inline std::string join(const std::vector<std::string>& parts,
                        const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace affwords
