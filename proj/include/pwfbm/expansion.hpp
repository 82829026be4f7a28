// Paley-Wiener series for fractional Brownian motion on [0, T]:
//   X_t = sum_n (e^{2i omega_n t/T} - 1) / (2i omega_n/T) Z_n,
// with omega_n the signed zeros of J_{1-H} and E|Z_n|^2 = sigma^2(omega_n),
// its real form, exact partial-sum covariances and the truncation study.
#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pwfbm/model.hpp"
#include "pwfbm/random.hpp"
#include "pwfbm/rkhs.hpp"
#include "pwfbm/specfun.hpp"
#include "pwfbm/spectral.hpp"

namespace pwfbm {

/// Term count above which sums run with compensation.
inline constexpr std::size_t kCompensatedTerms = 10'000;

/// Default number of terms of the reference sum in truncation_study.
inline constexpr std::size_t kDefaultReferenceTerms = std::size_t{1} << 16;

struct ExpansionSpec {
  HurstModel model;
  /// N: the series runs over |n| <= N.
  std::size_t n_terms;
  std::shared_ptr<const ZeroTable> zeros;

  ExpansionSpec(HurstModel m, std::size_t n, std::shared_ptr<const ZeroTable> z)
      : model(m), n_terms(n), zeros(std::move(z)) {
    validate();
  }

  /// Builds the zero table for order 1 - H itself.
  ExpansionSpec(HurstModel m, std::size_t n)
      : ExpansionSpec(m, n, std::make_shared<const ZeroTable>(
                                bessel_zeros(BesselOrder(1.0 - m.H()), std::max<std::size_t>(n, 1)))) {}

  void validate() const {
    if (n_terms < 1) throw std::invalid_argument("ExpansionSpec: n_terms must be >= 1");
    if (!zeros) throw std::invalid_argument("ExpansionSpec: missing zero table");
    if (std::fabs(zeros->order().value() - (1.0 - model.H())) > 1e-14) {
      throw std::invalid_argument("ExpansionSpec: zero table order is not 1 - H");
    }
    if (zeros->size() < n_terms) {
      throw std::invalid_argument("ExpansionSpec: zero table holds " + std::to_string(zeros->size()) +
                                  " zeros, need " + std::to_string(n_terms));
    }
  }

  long N() const noexcept { return static_cast<long>(n_terms); }
  BasisIndex index(long n) const { return {n, (*zeros)(n)}; }
};

/// A realized path with its provenance.
struct SamplePath {
  std::vector<double> grid;
  /// Imaginary parts are zero for real paths.
  std::vector<cplx> values;
  bool is_complex = true;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::size_t n_terms = 0;
};

/// Replication count too small for the requested confidence.
class InsufficientReplicationsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConvergenceReport {
  std::vector<std::size_t> n_list;
  /// Monte Carlo mean over replications of sup over the grid of |tail|.
  std::vector<double> errors;
  std::vector<double> stderrs;
  /// Least-squares slope of log(error) against log(N); about -H.
  double slope = 0.0;
  /// Half-width of an approximate 95% interval for slope.
  double slope_ci = 0.0;
  /// Slope of log(error) against log(N^{-H} sqrt(log N)); about 1.
  double log_corrected_slope = 0.0;
  double expected_slope = 0.0;
};

/// sigma^2(omega_n) for n = -N..N, at position n + N.
inline std::vector<double> coefficient_variances(const ExpansionSpec& spec) {
  const long N = spec.N();
  std::vector<double> v(static_cast<std::size_t>(2 * N + 1));
  for (long n = -N; n <= N; ++n) {
    v[static_cast<std::size_t>(n + N)] = sigma_squared(spec.index(n), spec.model);
  }
  return v;
}

namespace detail {

inline void check_grid(const std::vector<double>& grid, const HurstModel& model) {
  if (grid.empty()) throw std::invalid_argument("grid must not be empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= model.T())) {
      throw std::invalid_argument("grid points must lie in [0, T]");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw std::invalid_argument("grid must be strictly increasing");
    }
  }
}

// Neumaier-compensated accumulator.
template <class V>
struct Compensated {
  V sum{};
  V carry{};
  void add(V x) {
    const V t = sum + x;
    carry += component_carry(sum, x, t);
    sum = t;
  }
  V value() const { return sum + carry; }

 private:
  static double component_carry(double s, double x, double t) {
    return std::fabs(s) >= std::fabs(x) ? (s - t) + x : (x - t) + s;
  }
  static cplx component_carry(cplx s, cplx x, cplx t) {
    return {component_carry(s.real(), x.real(), t.real()),
            component_carry(s.imag(), x.imag(), t.imag())};
  }
};

// (e^{i a} - 1) / (i b) for a = b t, written so that small a loses nothing:
// e^{ia} - 1 = 2i sin(a/2) e^{ia/2}.
inline cplx complex_term(double omega_scaled, double t) {
  const double half = 0.5 * omega_scaled * t;
  const double s = 2.0 * std::sin(half) / omega_scaled;
  return {s * std::cos(half), s * std::sin(half)};
}

// Largest basis that is tabulated once rather than recomputed per path.
inline constexpr std::size_t kMaxTabulated = std::size_t{1} << 25;

}  // namespace detail

/// Draws paths of one expansion on one grid; the basis is tabulated when it
/// is small enough.
class PathSampler {
 public:
  PathSampler(ExpansionSpec spec, std::vector<double> grid)
      : spec_(std::move(spec)), grid_(std::move(grid)) {
    detail::check_grid(grid_, spec_.model);
    const long N = spec_.N();
    sd_.resize(static_cast<std::size_t>(N + 1));
    freq_.resize(static_cast<std::size_t>(N + 1));
    for (long n = 0; n <= N; ++n) {
      sd_[static_cast<std::size_t>(n)] = std::sqrt(sigma_squared(spec_.index(n), spec_.model));
      freq_[static_cast<std::size_t>(n)] = 2.0 * spec_.index(n).omega_n / spec_.model.T();
    }
    if (static_cast<std::size_t>(N) * grid_.size() <= detail::kMaxTabulated) {
      table_.resize(static_cast<std::size_t>(N) * grid_.size());
      for (long n = 1; n <= N; ++n) {
        for (std::size_t j = 0; j < grid_.size(); ++j) {
          table_[row(n) + j] = detail::complex_term(freq_[static_cast<std::size_t>(n)], grid_[j]);
        }
      }
    }
  }

  const ExpansionSpec& spec() const noexcept { return spec_; }
  const std::vector<double>& grid() const noexcept { return grid_; }

  /// Standard deviation sigma(omega_n), n >= 0.
  double sigma(long n) const { return sd_[static_cast<std::size_t>(n < 0 ? -n : n)]; }

  /// Complex series; Z_n = sigma(omega_n)/sqrt(2) (g1 + i g2) with (g1, g2)
  /// the normal pair of index n.
  SamplePath sample_complex(std::uint64_t seed, std::uint64_t stream) const {
    const long N = spec_.N();
    std::vector<cplx> z(static_cast<std::size_t>(2 * N + 1));
    for (long n = -N; n <= N; ++n) z[static_cast<std::size_t>(n + N)] = complex_coefficient(seed, stream, n);
    const bool compensated = spec_.n_terms >= kCompensatedTerms;
    SamplePath out = provenance(seed, stream, true);
    for (std::size_t j = 0; j < grid_.size(); ++j) {
      detail::Compensated<cplx> acc;
      cplx plain = 0.0;
      // Largest |n| first.
      for (long n = N; n >= 1; --n) {
        const cplx e = term(n, j);
        // The term at -n is the conjugate of the term at n.
        const cplx x = e * z[static_cast<std::size_t>(n + N)] + std::conj(e) * z[static_cast<std::size_t>(N - n)];
        if (compensated) {
          acc.add(x);
        } else {
          plain += x;
        }
      }
      const cplx x0 = grid_[j] * z[static_cast<std::size_t>(N)];
      out.values[j] = compensated ? (acc.add(x0), acc.value()) : plain + x0;
    }
    return out;
  }

  /// Real series
  ///   t X + sum_{n=1}^N [sin(2w t/T) Y_n + (cos(2w t/T) - 1) Z_n] / (w/T),
  /// Var X = 1/V_T and Var Y_n = Var Z_n = sigma^2(omega_n)/2. X is the first
  /// normal of index 0; Y_n and Z_n are the pair of index n.
  SamplePath sample_real(std::uint64_t seed, std::uint64_t stream) const {
    const long N = spec_.N();
    std::vector<double> y(static_cast<std::size_t>(N + 1)), zc(static_cast<std::size_t>(N + 1));
    const double drift_coeff = sd_[0] * normal_pair(seed, stream, 0).first;
    for (long n = 1; n <= N; ++n) {
      const auto [g1, g2] = normal_pair(seed, stream, n);
      const double s = sd_[static_cast<std::size_t>(n)] * std::numbers::sqrt2 * 0.5;
      y[static_cast<std::size_t>(n)] = s * g1;
      zc[static_cast<std::size_t>(n)] = s * g2;
    }
    const bool compensated = spec_.n_terms >= kCompensatedTerms;
    SamplePath out = provenance(seed, stream, false);
    for (std::size_t j = 0; j < grid_.size(); ++j) {
      detail::Compensated<double> acc;
      double plain = 0.0;
      for (long n = N; n >= 1; --n) {
        // (e^{2iwt/T} - 1)/(2iw/T) = [sin + i(1 - cos)] / (2w/T), so the real
        // basis functions are twice its real part and minus twice its imaginary part.
        const cplx e = term(n, j);
        const double x = 2.0 * e.real() * y[static_cast<std::size_t>(n)] -
                         2.0 * e.imag() * zc[static_cast<std::size_t>(n)];
        if (compensated) {
          acc.add(x);
        } else {
          plain += x;
        }
      }
      const double x0 = grid_[j] * drift_coeff;
      out.values[j] = compensated ? (acc.add(x0), acc.value()) : plain + x0;
    }
    return out;
  }

  /// Z_n of the complex series.
  cplx complex_coefficient(std::uint64_t seed, std::uint64_t stream, long n) const {
    const auto [g1, g2] = normal_pair(seed, stream, n);
    const double s = sigma(n) * std::numbers::sqrt2 * 0.5;
    return {s * g1, s * g2};
  }

  /// E X_{t_i} conj(X_{t_j}) implied by the coefficient laws of sample_complex.
  cplx exact_covariance_complex(std::size_t i, std::size_t j) const {
    const long N = spec_.N();
    // E|Z_n|^2 = 2 (sigma/sqrt 2)^2.
    cplx acc = grid_[i] * grid_[j] * coefficient_second_moment(0);
    for (long n = 1; n <= N; ++n) {
      const cplx a = term(n, i), b = term(n, j);
      acc += coefficient_second_moment(n) * (a * std::conj(b) + std::conj(a) * b);
    }
    return acc;
  }

  /// E X_{t_i} X_{t_j} implied by the coefficient laws of sample_real.
  double exact_covariance_real(std::size_t i, std::size_t j) const {
    const long N = spec_.N();
    double acc = grid_[i] * grid_[j] * sd_[0] * sd_[0];
    for (long n = 1; n <= N; ++n) {
      const double var = std::pow(sd_[static_cast<std::size_t>(n)] * std::numbers::sqrt2 * 0.5, 2);
      const cplx a = term(n, i), b = term(n, j);
      acc += var * 4.0 * (a.real() * b.real() + a.imag() * b.imag());
    }
    return acc;
  }

 private:
  double coefficient_second_moment(long n) const {
    const double s = sigma(n) * std::numbers::sqrt2 * 0.5;
    return 2.0 * s * s;
  }

  std::size_t row(long n) const { return static_cast<std::size_t>(n - 1) * grid_.size(); }

  cplx term(long n, std::size_t j) const {
    if (!table_.empty()) return table_[row(n) + j];
    return detail::complex_term(freq_[static_cast<std::size_t>(n)], grid_[j]);
  }

  SamplePath provenance(std::uint64_t seed, std::uint64_t stream, bool is_complex) const {
    SamplePath p;
    p.grid = grid_;
    p.values.assign(grid_.size(), cplx(0.0));
    p.is_complex = is_complex;
    p.seed = seed;
    p.stream = stream;
    p.n_terms = spec_.n_terms;
    return p;
  }

  ExpansionSpec spec_;
  std::vector<double> grid_;
  std::vector<double> sd_;
  std::vector<double> freq_;
  std::vector<cplx> table_;
};

inline SamplePath sample_complex_path(const ExpansionSpec& spec, const std::vector<double>& grid,
                                      std::uint64_t seed, std::uint64_t stream) {
  return PathSampler(spec, grid).sample_complex(seed, stream);
}

inline SamplePath sample_real_path(const ExpansionSpec& spec, const std::vector<double>& grid,
                                   std::uint64_t seed, std::uint64_t stream) {
  return PathSampler(spec, grid).sample_real(seed, stream);
}

/// sum_{|n| <= N} sigma^2(omega_n) e_s(2 omega_n/T) conj(e_t(2 omega_n/T)).
/// With n_terms_override = 0 only the n = 0 term remains.
inline cplx covariance_partial_sum(double s, double t, const ExpansionSpec& spec,
                                   std::optional<std::size_t> n_terms_override = std::nullopt) {
  const HurstModel& m = spec.model;
  if (s < 0.0 || t < 0.0 || s > m.T() || t > m.T()) {
    throw std::invalid_argument("covariance_partial_sum: times must lie in [0, T]");
  }
  const long N = static_cast<long>(n_terms_override.value_or(spec.n_terms));
  if (N > spec.N()) throw std::invalid_argument("covariance_partial_sum: more terms than the spec holds");
  const bool compensated = static_cast<std::size_t>(N) >= kCompensatedTerms;
  detail::Compensated<cplx> acc;
  cplx plain = 0.0;
  for (long k = N; k >= 1; --k) {
    for (long n : {k, -k}) {
      const double lam = 2.0 * spec.index(n).omega_n / m.T();
      const cplx x = sigma_squared(spec.index(n), m) * e_kernel(s, lam) * std::conj(e_kernel(t, lam));
      if (compensated) {
        acc.add(x);
      } else {
        plain += x;
      }
    }
  }
  const cplx x0 = s * t / m.VT();
  if (compensated) {
    acc.add(x0);
    return acc.value();
  }
  return plain + x0;
}

/// sigma^2(0) s t + 2 sum_{n=1}^N sigma^2(omega_n) [sin_s sin_t + (cos_s - 1)(cos_t - 1)] / (2 omega_n/T)^2,
/// the pairing of the terms at n and -n.
inline double covariance_real_form(double s, double t, const ExpansionSpec& spec) {
  const HurstModel& m = spec.model;
  double acc = s * t / m.VT();
  for (long n = spec.N(); n >= 1; --n) {
    const double lam = 2.0 * spec.index(n).omega_n / m.T();
    const double re = (std::sin(lam * s) * std::sin(lam * t) +
                       (std::cos(lam * s) - 1.0) * (std::cos(lam * t) - 1.0)) /
                      (lam * lam);
    acc += 2.0 * sigma_squared(spec.index(n), m) * re;
  }
  return acc;
}

struct CovarianceEstimate {
  cplx estimate;
  /// Standard error of the sample mean (modulus of the complex deviations).
  double stderr_;
};

/// Sample mean of X_{t_i} conj(X_{t_j}) over independent paths.
inline CovarianceEstimate empirical_covariance(const std::vector<SamplePath>& paths, std::size_t i,
                                               std::size_t j) {
  if (paths.size() < 2) throw std::invalid_argument("empirical_covariance: need at least two paths");
  const auto& grid = paths.front().grid;
  if (i >= grid.size() || j >= grid.size()) throw std::out_of_range("empirical_covariance: index out of range");
  for (const auto& p : paths) {
    if (p.grid != grid) throw std::invalid_argument("empirical_covariance: paths have different grids");
  }
  const double n = static_cast<double>(paths.size());
  cplx mean = 0.0;
  for (const auto& p : paths) mean += p.values[i] * std::conj(p.values[j]);
  mean /= n;
  double ss = 0.0;
  for (const auto& p : paths) ss += std::norm(p.values[i] * std::conj(p.values[j]) - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

namespace detail {

struct FftwPlan {
  fftw_plan plan = nullptr;
  FftwPlan() = default;
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
  ~FftwPlan() {
    if (plan != nullptr) fftw_destroy_plan(plan);
  }
};

template <class T>
struct FftwBuffer {
  T* data = nullptr;
  explicit FftwBuffer(std::size_t n) : data(static_cast<T*>(fftw_malloc(sizeof(T) * n))) {
    if (data == nullptr) throw std::bad_alloc();
  }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  ~FftwBuffer() { fftw_free(data); }
};

// Least-squares slope of y on x and its standard error.
inline std::pair<double, double> ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double b = sxy / sxx;
  double rss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - my - b * (x[i] - mx);
    rss += r * r;
  }
  const double se = x.size() > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
  return {b, se};
}

}  // namespace detail

/// Monte Carlo estimate of E sup_t |sum_{N < |n| <= N_max} term_n(t) Z_n| for
/// each N in n_list, on the uniform grid t_j = j T / grid_intervals.
///
/// Tails are differences from the reference sum with N_max terms, drawn with
/// the same counter-based coefficients as sample_complex_path. The sup over a
/// grid bounds the sup over [0, T] from below.
///
/// Evaluation: with omega_n = n pi + delta + eps_n, delta the limiting phase
/// offset, e^{2i omega_n t/T} = e^{2 pi i n j/M} e^{2i delta t/T} e^{2i eps_n t/T};
/// the last factor is expanded in powers of eps_n and each power summed over n
/// by an FFT of length M = grid_intervals.
inline ConvergenceReport truncation_study(const HurstModel& model, const std::vector<std::size_t>& n_list,
                                          std::size_t reps, std::size_t grid_intervals,
                                          std::uint64_t seed,
                                          std::size_t n_max = kDefaultReferenceTerms,
                                          std::shared_ptr<const ZeroTable> zeros = nullptr) {
  if (n_list.empty()) throw std::invalid_argument("truncation_study: n_list is empty");
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    if (n_list[k] < 2) throw std::invalid_argument("truncation_study: N must be >= 2");
    if (k > 0 && n_list[k] <= n_list[k - 1]) {
      throw std::invalid_argument("truncation_study: n_list must be strictly increasing");
    }
  }
  if (n_list.back() >= n_max) throw std::invalid_argument("truncation_study: N must stay below N_max");
  if (grid_intervals < 1024) throw std::invalid_argument("truncation_study: grid needs >= 1024 intervals");
  if (reps < 100) {
    throw InsufficientReplicationsError("truncation_study: need at least 100 replications, got " +
                                        std::to_string(reps));
  }
  if (!zeros) zeros = std::make_shared<const ZeroTable>(bessel_zeros(BesselOrder(1.0 - model.H()), n_max));
  const ExpansionSpec spec(model, n_max, zeros);

  const std::size_t M = grid_intervals;
  const double T = model.T();
  const double nu = 1.0 - model.H();
  const double delta = (0.5 * nu - 0.25) * std::numbers::pi;
  const std::size_t blocks = n_list.size();

  // Per-block data: coefficients scale c_n = T / (2i omega_n) sigma_n / sqrt 2,
  // offsets eps_n, and the Taylor order that makes (2 eps)^K / K! negligible.
  std::vector<double> eps(n_max + 1, 0.0), scale(n_max + 1, 0.0);
  for (std::size_t n = 1; n <= n_max; ++n) {
    const BasisIndex b = spec.index(static_cast<long>(n));
    eps[n] = b.omega_n - static_cast<double>(n) * std::numbers::pi - delta;
    scale[n] = T / (2.0 * b.omega_n) * std::sqrt(sigma_squared(b, model)) * std::numbers::sqrt2 * 0.5;
  }
  std::vector<int> order(blocks);
  int kmax = 1;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t lo = n_list[b] + 1, hi = b + 1 < blocks ? n_list[b + 1] : n_max;
    double e = 0.0;
    for (std::size_t n = lo; n <= hi; ++n) e = std::max(e, std::fabs(eps[n]));
    int k = 1;
    double bound = 2.0 * e;
    while (bound > 1e-17 && k < 40) {
      ++k;
      bound *= 2.0 * e / k;
    }
    order[b] = k;
    kmax = std::max(kmax, k);
  }

  detail::FftwBuffer<fftw_complex> buf(M * static_cast<std::size_t>(kmax));
  int len = static_cast<int>(M);
  detail::FftwPlan plan_pos, plan_neg;
  // e^{+2 pi i r j/M} for positive n, e^{-2 pi i r j/M} for negative n.
  plan_pos.plan = fftw_plan_many_dft(1, &len, kmax, buf.data, nullptr, 1, len, buf.data, nullptr, 1, len,
                                     FFTW_BACKWARD, FFTW_ESTIMATE);
  plan_neg.plan = fftw_plan_many_dft(1, &len, kmax, buf.data, nullptr, 1, len, buf.data, nullptr, 1, len,
                                     FFTW_FORWARD, FFTW_ESTIMATE);
  if (plan_pos.plan == nullptr || plan_neg.plan == nullptr) {
    throw std::runtime_error("truncation_study: FFT plan creation failed");
  }

  // Powers (2i t_j/T)^k / k! and the phase e^{2i delta t_j/T}, shared by all blocks.
  const std::size_t G = M + 1;
  std::vector<cplx> taylor(static_cast<std::size_t>(kmax) * G);
  std::vector<cplx> phase(G);
  for (std::size_t j = 0; j < G; ++j) {
    const double u = static_cast<double>(j) / static_cast<double>(M);
    phase[j] = std::polar(1.0, 2.0 * delta * u);
    cplx p = 1.0;
    for (int k = 0; k < kmax; ++k) {
      taylor[static_cast<std::size_t>(k) * G + j] = p;
      p *= cplx(0.0, 2.0 * u) / static_cast<double>(k + 1);
    }
  }

  std::vector<std::vector<double>> sups(blocks, std::vector<double>(reps));
  std::vector<cplx> z_pos(n_max + 1), z_neg(n_max + 1);
  std::vector<cplx> block(blocks * G), tail(G);
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t n = n_list.front() + 1; n <= n_max; ++n) {
      const auto [a1, a2] = normal_pair(seed, r, static_cast<long>(n));
      const auto [b1, b2] = normal_pair(seed, r, -static_cast<long>(n));
      // c_n = T/(2i omega_n) Z_n; for -n the frequency changes sign.
      z_pos[n] = cplx(a1, a2) * cplx(0.0, -scale[n]);
      z_neg[n] = cplx(b1, b2) * cplx(0.0, scale[n]);
    }
    for (std::size_t b = 0; b < blocks; ++b) {
      const std::size_t lo = n_list[b] + 1, hi = b + 1 < blocks ? n_list[b + 1] : n_max;
      const int K = order[b];
      cplx constant = 0.0;
      for (std::size_t n = lo; n <= hi; ++n) constant += z_pos[n] + z_neg[n];
      cplx* out = &block[b * G];
      for (std::size_t j = 0; j < G; ++j) out[j] = -constant;
      for (int sign : {1, -1}) {
        std::fill_n(reinterpret_cast<double*>(buf.data), 2 * M * static_cast<std::size_t>(kmax), 0.0);
        for (std::size_t n = lo; n <= hi; ++n) {
          const cplx c = sign > 0 ? z_pos[n] : z_neg[n];
          const std::size_t rr = n % M;
          cplx w = c;
          for (int k = 0; k < K; ++k) {
            buf.data[static_cast<std::size_t>(k) * M + rr][0] += w.real();
            buf.data[static_cast<std::size_t>(k) * M + rr][1] += w.imag();
            w *= eps[n];
          }
        }
        fftw_execute(sign > 0 ? plan_pos.plan : plan_neg.plan);
        for (std::size_t j = 0; j < G; ++j) {
          cplx acc = 0.0;
          const std::size_t jm = j % M;
          for (int k = K - 1; k >= 0; --k) {
            const cplx g(buf.data[static_cast<std::size_t>(k) * M + jm][0],
                         buf.data[static_cast<std::size_t>(k) * M + jm][1]);
            cplx tk = taylor[static_cast<std::size_t>(k) * G + j];
            if (sign < 0 && (k % 2 == 1)) tk = -tk;
            acc += tk * g;
          }
          out[j] += (sign > 0 ? phase[j] : std::conj(phase[j])) * acc;
        }
      }
    }
    std::fill(tail.begin(), tail.end(), cplx(0.0));
    for (std::size_t b = blocks; b-- > 0;) {
      double sup = 0.0;
      for (std::size_t j = 0; j < G; ++j) {
        tail[j] += block[b * G + j];
        sup = std::max(sup, std::abs(tail[j]));
      }
      sups[b][r] = sup;
    }
  }

  ConvergenceReport rep;
  rep.n_list = n_list;
  rep.expected_slope = -model.H();
  const double rn = static_cast<double>(reps);
  for (std::size_t b = 0; b < blocks; ++b) {
    double mean = 0.0;
    for (double v : sups[b]) mean += v;
    mean /= rn;
    double ss = 0.0;
    for (double v : sups[b]) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / (rn - 1.0) / rn);
    if (1.96 * se > 0.25 * mean) {
      throw InsufficientReplicationsError("truncation_study: confidence half-width exceeds 25% of the estimate at N = " +
                                          std::to_string(n_list[b]));
    }
    rep.errors.push_back(mean);
    rep.stderrs.push_back(se);
  }
  std::vector<double> lx, lc, ly;
  for (std::size_t b = 0; b < blocks; ++b) {
    const double n = static_cast<double>(n_list[b]);
    lx.push_back(std::log(n));
    lc.push_back(-model.H() * std::log(n) + 0.5 * std::log(std::log(n)));
    ly.push_back(std::log(rep.errors[b]));
  }
  if (blocks >= 2) {
    const auto [slope, se_fit] = detail::ols_slope(lx, ly);
    rep.slope = slope;
    rep.log_corrected_slope = detail::ols_slope(lc, ly).first;
    // Monte Carlo noise of each log error, propagated through the fit.
    double mx = 0.0;
    for (double v : lx) mx += v;
    mx /= static_cast<double>(blocks);
    double sxx = 0.0;
    for (double v : lx) sxx += (v - mx) * (v - mx);
    double var_mc = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
      const double w = (lx[b] - mx) / sxx;
      const double rel = rep.stderrs[b] / rep.errors[b];
      var_mc += w * w * rel * rel;
    }
    rep.slope_ci = 1.96 * std::sqrt(var_mc + se_fit * se_fit);
  }
  return rep;
}

/// Same, for spec-driven callers; spec.n_terms is ignored.
inline ConvergenceReport truncation_study(const ExpansionSpec& spec_base, const std::vector<std::size_t>& n_list,
                                          std::size_t reps, std::size_t grid_intervals, std::uint64_t seed,
                                          std::size_t n_max = kDefaultReferenceTerms) {
  std::shared_ptr<const ZeroTable> zeros;
  if (spec_base.zeros->size() >= n_max) zeros = spec_base.zeros;
  return truncation_study(spec_base.model, n_list, reps, grid_intervals, seed, n_max, zeros);
}

}  // namespace pwfbm
