// Fractional-order Bessel functions of the first kind, their derivatives and
// real zeros, and the gamma function on the positive half-line.
//
// Evaluation uses the ascending power series (accumulated in long double) for
// x <= 12 and the Hankel amplitude/phase asymptotic expansion above that.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace pwfbm {

/// Argument below which bessel_j uses the ascending series.
inline constexpr double kBesselSeriesSeam = 12.0;

/// Largest order accepted by the evaluator. Public orders live in (-1, 2];
/// derivatives and recurrences need up to two more.
inline constexpr double kMaxInternalOrder = 4.0;

/// Euler's gamma function for x > 0 (Lanczos, g = 7, nine terms).
inline double gamma_fn(double x) {
  if (!(x > 0.0)) {
    throw std::domain_error("gamma_fn: argument must be positive, got " + std::to_string(x));
  }
  static constexpr std::array<double, 9> kCoeff = {
      0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,   12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) {
    return gamma_fn(x + 1.0) / x;
  }
  const double z = x - 1.0;
  double sum = kCoeff[0];
  for (std::size_t i = 1; i < kCoeff.size(); ++i) {
    sum += kCoeff[i] / (z + static_cast<double>(i));
  }
  const double t = z + 7.5;
  return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, z + 0.5) * std::exp(-t) * sum;
}

/// Order of a Bessel function as used by the public API, restricted to (-1, 2].
class BesselOrder {
 public:
  explicit BesselOrder(double nu) : nu_(nu) {
    if (!(nu > -1.0 && nu <= 2.0)) {
      throw std::invalid_argument("BesselOrder: order must lie in (-1, 2], got " +
                                  std::to_string(nu));
    }
  }
  double value() const noexcept { return nu_; }

 private:
  double nu_;
};

namespace detail {

inline void check_order(double nu) {
  if (!(nu > -1.0 && nu <= kMaxInternalOrder)) {
    throw std::domain_error("bessel_j: order out of supported range: " + std::to_string(nu));
  }
}

// sum_k (-1)^k (x/2)^{2k} / (k! Gamma(k+nu+1)), i.e. (x/2)^{-nu} J_nu(x).
inline long double bessel_series_scaled(double nu, double x) {
  const long double q = -0.25L * static_cast<long double>(x) * x;
  long double term = 1.0L / static_cast<long double>(gamma_fn(nu + 1.0));
  long double sum = term;
  for (int k = 1; k <= 60; ++k) {
    term *= q / (static_cast<long double>(k) * (k + static_cast<long double>(nu)));
    sum += term;
    if (std::fabs(term) < 1e-17L * std::fabs(sum)) break;
  }
  return sum;
}

struct HankelPQ {
  double p;
  double q;
};

// P and Q of the large-argument expansion, summed until the terms stop
// decreasing or drop below double resolution.
inline HankelPQ hankel_pq(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  double p = 1.0;
  double q = 0.0;
  double term = 1.0;
  double last = 1.0;
  for (int k = 1; k < 80; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (k * 8.0 * x);
    const double mag = std::fabs(term);
    if (mag > last) break;
    last = mag;
    // k = 1, 2, 3, 4, ... contributes +q, -p, -q, +p, ...
    switch (k % 4) {
      case 1: q += term; break;
      case 2: p -= term; break;
      case 3: q -= term; break;
      default: p += term; break;
    }
    if (mag < 1e-17 * std::fabs(p)) break;
  }
  return {p, q};
}

inline double bessel_asymptotic(double nu, double x) {
  const auto [p, q] = hankel_pq(nu, x);
  const double shift = (0.5 * nu + 0.25) * std::numbers::pi;
  // cos/sin of (x - shift) via angle addition keeps x exact.
  const double cx = std::cos(x), sx = std::sin(x);
  const double cs = std::cos(shift), ss = std::sin(shift);
  const double cos_chi = cx * cs + sx * ss;
  const double sin_chi = sx * cs - cx * ss;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * cos_chi - q * sin_chi);
}

}  // namespace detail

/// J_nu(x) for x >= 0 and -1 < nu <= kMaxInternalOrder.
///
/// At x = 0 the result is 0 for nu > 0 and 1 for nu = 0; nu < 0 diverges
/// there and is rejected, as are negative arguments.
inline double bessel_j(double nu, double x) {
  detail::check_order(nu);
  if (x < 0.0 || std::isnan(x)) {
    throw std::domain_error("bessel_j: negative argument " + std::to_string(x));
  }
  if (x == 0.0) {
    if (nu < 0.0) throw std::domain_error("bessel_j: J_nu(0) diverges for nu < 0");
    return nu == 0.0 ? 1.0 : 0.0;
  }
  if (x <= kBesselSeriesSeam) {
    const long double s = detail::bessel_series_scaled(nu, x);
    return static_cast<double>(s * std::pow(0.5L * x, static_cast<long double>(nu)));
  }
  return detail::bessel_asymptotic(nu, x);
}

inline double bessel_j(BesselOrder nu, double x) { return bessel_j(nu.value(), x); }

/// x^{-nu} J_nu(x), an even entire function of x; finite at x = 0 for every
/// order, where it equals 1 / (2^nu Gamma(nu+1)).
inline double bessel_j_scaled(double nu, double x) {
  detail::check_order(nu);
  const double ax = std::fabs(x);
  if (ax <= kBesselSeriesSeam) {
    const long double s = detail::bessel_series_scaled(nu, ax);
    return static_cast<double>(s * std::pow(0.5L, static_cast<long double>(nu)));
  }
  return detail::bessel_asymptotic(nu, ax) * std::pow(ax, -nu);
}

/// dJ_nu/dx = (nu/x) J_nu(x) - J_{nu+1}(x), for x > 0.
inline double bessel_j_prime(double nu, double x) {
  if (!(x > 0.0)) {
    throw std::domain_error("bessel_j_prime: argument must be positive, got " +
                            std::to_string(x));
  }
  return nu / x * bessel_j(nu, x) - bessel_j(nu + 1.0, x);
}

inline double bessel_j_prime(BesselOrder nu, double x) { return bessel_j_prime(nu.value(), x); }

/// Positive zeros of J_nu for nu >= 0, with the signed view used by the
/// expansion: zero(0) = 0 and zero(-n) = -zero(n).
class ZeroTable {
 public:
  ZeroTable(BesselOrder nu, std::vector<double> zeros) : nu_(nu), zeros_(std::move(zeros)) {
    for (std::size_t k = 1; k < zeros_.size(); ++k) {
      if (!(zeros_[k] > zeros_[k - 1])) {
        throw std::invalid_argument("ZeroTable: zeros must be strictly increasing");
      }
    }
  }

  BesselOrder order() const noexcept { return nu_; }
  std::size_t size() const noexcept { return zeros_.size(); }
  const std::vector<double>& positive() const noexcept { return zeros_; }

  /// k-th positive zero, k >= 1.
  double positive_zero(std::size_t k) const {
    if (k == 0 || k > zeros_.size()) throw std::out_of_range("ZeroTable: index out of range");
    return zeros_[k - 1];
  }

  /// Signed accessor over n in [-size, size].
  double operator()(long n) const {
    if (n == 0) return 0.0;
    const auto k = static_cast<std::size_t>(n > 0 ? n : -n);
    const double z = positive_zero(k);
    return n > 0 ? z : -z;
  }

 private:
  BesselOrder nu_;
  std::vector<double> zeros_;
};

/// McMahon's leading-order estimate of the k-th positive zero of J_nu.
inline double mcmahon_estimate(double nu, std::size_t k) {
  const double beta = (static_cast<double>(k) + 0.5 * nu - 0.25) * std::numbers::pi;
  return beta - (4.0 * nu * nu - 1.0) / (8.0 * beta);
}

namespace detail {

// Safeguarded Newton on a sign-change bracket around the McMahon guess.
inline double refine_zero(double nu, double guess, double lower_limit) {
  double half = 0.5;
  double a = 0.0, b = 0.0, fa = 0.0, fb = 0.0;
  for (;;) {
    a = std::max(guess - half, lower_limit);
    b = guess + half;
    fa = bessel_j(nu, a);
    fb = bessel_j(nu, b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa < 0.0) != (fb < 0.0)) break;
    half += 0.25;
    if (half > 1.5) {
      throw std::runtime_error("bessel_zeros: failed to bracket zero near " + std::to_string(guess));
    }
  }
  double x = std::clamp(guess, a, b);
  for (int it = 0; it < 100; ++it) {
    const double f = bessel_j(nu, x);
    if (f == 0.0) return x;
    if ((f < 0.0) == (fa < 0.0)) {
      a = x;
      fa = f;
    } else {
      b = x;
    }
    const double fp = bessel_j_prime(nu, x);
    double next = x - f / fp;
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    const double step = std::fabs(next - x);
    x = next;
    // Newton converges quadratically; once the step is this small the next
    // one is at rounding level.
    if (step <= 1e-9 * x) {
      const double fp_last = bessel_j_prime(nu, x);
      return x - bessel_j(nu, x) / fp_last;
    }
    if (b - a <= 4e-16 * x) break;
  }
  return x;
}

}  // namespace detail

/// First n_max positive zeros of J_nu, nu >= 0.
inline ZeroTable bessel_zeros(BesselOrder nu, std::size_t n_max) {
  if (nu.value() < 0.0) throw std::invalid_argument("bessel_zeros: order must be >= 0");
  if (n_max < 1) throw std::invalid_argument("bessel_zeros: n_max must be >= 1");
  std::vector<double> zeros;
  zeros.reserve(n_max);
  double previous = 0.0;
  for (std::size_t k = 1; k <= n_max; ++k) {
    const double guess = mcmahon_estimate(nu.value(), k);
    // Keep the bracket clear of the previous zero and of the origin.
    const double z = detail::refine_zero(nu.value(), guess, previous + 0.5);
    zeros.push_back(z);
    previous = z;
  }
  return ZeroTable(nu, std::move(zeros));
}

/// Residual used to validate a stored zero: |J_nu(z)| / max(1, |J_nu'(z)| z).
inline double zero_residual(double nu, double z) {
  return std::fabs(bessel_j(nu, z)) / std::max(1.0, std::fabs(bessel_j_prime(nu, z)) * z);
}

}  // namespace pwfbm
