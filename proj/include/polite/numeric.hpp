#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace polite {

// Sentinel standing in for log(0) inside softmax sums. Multiplying it by a
// zero weight must yield 0, which true -inf does not.
inline constexpr double kLogZero = -1e10;
// Utilities at or below this are treated as "impossible outcome".
inline constexpr double kLogZeroGuard = -1e8;

inline double log_or_sentinel(double p) { return p > 0.0 ? std::log(p) : kLogZero; }

inline double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  double m = xs[0];
  for (double x : xs)
    if (x > m) m = x;
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// Row-major dense matrix of doubles, sized once.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {v.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {v.data() + r * cols, cols}; }
};

inline double sum(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Shortest round-trip decimal representation; used everywhere a double is
// serialized so that rereading a file reproduces it bit-exactly.
inline std::string format_double(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, p);
}

inline double parse_double(std::string_view s) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size())
    throw std::runtime_error("cannot parse number: '" + std::string(s) + "'");
  return out;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t x) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[x & 0xf];
    x >>= 4;
  }
  return out;
}

}  // namespace polite
