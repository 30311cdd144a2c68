#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace treereg {

// Error taxonomy mirrored 1:1 by the C API status codes.
enum class ErrorCode : int {
  InvalidArgument = 1,
  Shape = 2,
  Io = 3,
  UncoveredInput = 4,
  Contract = 5,
  Numeric = 6,
  Internal = 7,
};

class TrgError : public std::runtime_error {
 public:
  TrgError(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw TrgError(code, msg);
}
[[noreturn]] inline void fail_invalid(const std::string& msg) {
  fail(ErrorCode::InvalidArgument, msg);
}
[[noreturn]] inline void fail_shape(const std::string& msg) {
  fail(ErrorCode::Shape, msg);
}
[[noreturn]] inline void fail_contract(const std::string& msg) {
  fail(ErrorCode::Contract, msg);
}
[[noreturn]] inline void fail_io(const std::string& msg) {
  fail(ErrorCode::Io, msg);
}

/// Dense row-major matrix of doubles. Rows are samples throughout the library.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  double* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const {
    return data.data() + static_cast<std::size_t>(i) * cols;
  }
  std::span<const double> row_span(int i) const {
    return {row(i), static_cast<std::size_t>(cols)};
  }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }

  Matrix take_rows(std::span<const int> idx) const {
    Matrix out(static_cast<int>(idx.size()), cols);
    for (std::size_t i = 0; i < idx.size(); ++i)
      std::copy(row(idx[i]), row(idx[i]) + cols, out.row(static_cast<int>(i)));
    return out;
  }
};

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent, reproducible seed streams: same (base, tag, salt) -> same seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                 std::uint64_t salt = 0) {
  std::uint64_t h = 1469598103934665603ULL ^ base;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return mix64(h ^ mix64(salt));
}

/// Deterministic RNG with fixed output mappings, so results do not depend on
/// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x853c49e6748fea9bULL) {}

  std::uint64_t next() {
    // xorshift64* keeps the generator tiny and portable
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dULL;
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double exponential() { return -std::log(1.0 - uniform()); }

  /// Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) fail_invalid("Rng::below: n must be positive");
    std::uint64_t limit = ~0ULL - ~0ULL % n;
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return v % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline std::vector<int> iota_indices(int n) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  return idx;
}

void log_warning(const std::string& msg);

}  // namespace treereg
