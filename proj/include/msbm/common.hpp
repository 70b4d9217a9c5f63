#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace msbm {

using VertexId = std::int32_t;
using Key = std::int64_t;  // oracle payload key, nonnegative

// Global comparison tolerance for all value inequalities (skip tests,
// dual feasibility, ratio checks). Values are doubles; certificates
// compare sums of at most ~1e4 terms, so 1e-9 absolute is safe.
inline constexpr double kValueTol = 1e-9;

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("parse error at line " + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class DomainError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class TooLargeError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class UnsupportedError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic, platform-independent RNG (splitmix64 core). <random>
// distributions are implementation-defined, so draws are derived from
// raw bits here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform integer in [lo, hi], inclusive
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  bool bernoulli(double p) { return next_double() < p; }

 private:
  std::uint64_t state_;
};

// Per-trial seeds for Monte-Carlo runs, derived splittably from a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  Rng r(master + index * 0x9E3779B97F4A7C15ull);
  return r.next_u64();
}

// Shortest round-trip decimal representation of a double.
inline std::string format_value(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

// Kahan-compensated accumulator; Monte-Carlo aggregation is order-independent
// up to this compensation.
class KahanSum {
 public:
  void add(double x) {
    double y = x - c_;
    double t = sum_ + y;
    c_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

}  // namespace msbm
