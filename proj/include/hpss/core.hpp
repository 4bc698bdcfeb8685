#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace hpss {

using Index = Eigen::Index;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using CVec = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
template <typename Scalar>
using CMat = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

/// Bad run configuration or command-line usage. CLI exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Missing or malformed input data (files, datasets, checkpoints). CLI exit code 3.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical degeneracy or divergence. CLI exit code 4.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename S>
inline constexpr S pi_v = S(3.14159265358979323846264338327950288L);
template <typename S>
inline constexpr S two_pi_v = S(2) * pi_v<S>;

/// Wraps an angle to (-pi, pi].
template <typename S>
S wrap_phase(S phi) {
  S w = std::remainder(phi, two_pi_v<S>);
  if (w == -pi_v<S>) w = pi_v<S>;
  return w;
}

/// Complex argument in (-pi, pi], with arg(0) == 0.
template <typename S>
S arg_convention(const std::complex<S>& z) {
  S a = std::arg(z);
  if (a == -pi_v<S>) a = pi_v<S>;
  return a;
}

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Index into [0, n) by reflecting around both edges without repeating them
/// (period 2n-2). Accepts any integer, including negatives.
inline Index reflect_index(Index i, Index n) {
  if (n == 1) return 0;
  const Index period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

/// Deterministic random source. All variates derive from mt19937_64 through
/// explicit arithmetic so streams are reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Inclusive integer range.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(gen_() % span);
  }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * pi_v<double> * u2;
    spare_ = radius * std::sin(theta);
    has_spare_ = true;
    return radius * std::cos(theta);
  }

  /// Exponential waiting time; rate must be positive.
  double exponential(double rate) {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -std::log(u) / rate;
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace hpss
