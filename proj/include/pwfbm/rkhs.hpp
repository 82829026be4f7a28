// Krein orthogonal functions P and P*, the reproducing kernel S_T of the
// frequency domain, the isometry U between L^2([0,T], V) and that domain, and
// the orthonormal basis built on the zeros of J_{1-H}.
//
// All frequencies are un-doubled: S_T(omega, lambda) is the kernel at omega
// and lambda themselves, so the Bessel functions appear at T omega / 2.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pwfbm/model.hpp"
#include "pwfbm/quad.hpp"
#include "pwfbm/specfun.hpp"
#include "pwfbm/spectral.hpp"

namespace pwfbm {

/// Selects the branch of the closed-form kernel. Below diag_threshold in
/// |T (lambda - omega) / 2| the divided difference is expanded in a series
/// about the midpoint instead of formed directly.
struct KernelEvalPolicy {
  double diag_threshold = 1e-4;

  void validate() const {
    if (!(diag_threshold > 0.0 && diag_threshold <= 1e-2)) {
      throw std::invalid_argument("KernelEvalPolicy: diag_threshold must lie in (0, 1e-2]");
    }
  }
};

/// Signed index into the zeros of J_{1-H}: omega_0 = 0, omega_{-n} = -omega_n.
struct BasisIndex {
  long n = 0;
  double omega_n = 0.0;
};

/// Looks up omega_n in a table of zeros of J_{1-H}.
inline BasisIndex basis_index(const ZeroTable& zeros, long n, const HurstModel& model) {
  if (std::fabs(zeros.order().value() - (1.0 - model.H())) > 1e-14) {
    throw std::invalid_argument("basis_index: zero table order is not 1 - H");
  }
  return {n, zeros(n)};
}

/// P(t, lambda) = phi(t lambda) sqrt(dV/dt).
inline cplx P_fn(double t, double lam, const HurstModel& model) {
  if (!(t > 0.0)) throw std::domain_error("P_fn: t must be > 0");
  return phi(t * lam, model) * std::sqrt(model.dV(t));
}

/// P*(t, lambda) = e^{i lambda t} conj(P(t, lambda)).
inline cplx P_star_fn(double t, double lam, const HurstModel& model) {
  if (!(t > 0.0)) throw std::domain_error("P_star_fn: t must be > 0");
  const double a = lam * t;
  return cplx(std::cos(a), std::sin(a)) * std::conj(P_fn(t, lam, model));
}

/// Magnitudes of the residuals of
///   dP/dt = i lambda P - gamma_t P*,   dP*/dt = -gamma_t P,
/// gamma_t = (H - 1/2)/t, with the t-derivatives taken by central differences.
inline std::pair<double, double> krein_ode_residual(double t, double lam, const HurstModel& model,
                                                    double h) {
  if (!(h > 0.0 && t > h)) throw std::domain_error("krein_ode_residual: need t > h > 0");
  const double gamma = (model.H() - 0.5) / t;
  const cplx p = P_fn(t, lam, model);
  const cplx ps = P_star_fn(t, lam, model);
  const cplx dp = (P_fn(t + h, lam, model) - P_fn(t - h, lam, model)) / (2.0 * h);
  const cplx dps = (P_star_fn(t + h, lam, model) - P_star_fn(t - h, lam, model)) / (2.0 * h);
  const cplx i(0.0, 1.0);
  return {std::abs(dp - (i * lam * p - gamma * ps)), std::abs(dps + gamma * p)};
}

namespace detail {

// A(x) = (x/2)^H J_{-H}(x) (even) and B(x) = (x/2)^H J_{1-H}(x) (odd), with
// B(x)/x kept separately so that it stays finite at 0.
struct KernelFactors {
  double a;
  double b;
  double b_over_x;
};

inline KernelFactors kernel_factors(double hurst, double x) {
  const double s = std::pow(2.0, -hurst);
  const double bx = s * bessel_j_scaled(1.0 - hurst, x);
  return {s * bessel_j_scaled(-hurst, x), bx * x, bx};
}

// B and its first three derivatives. A' = -B and B' = A + (2H-1) B / x.
struct OddFactorJet {
  double a;
  double b;
  double b1;
  double b2;
  double b3;
};

inline OddFactorJet odd_factor_jet(double hurst, double x) {
  const double c = 2.0 * hurst - 1.0;
  if (std::fabs(x) <= 1.0) {
    // Termwise derivatives of A = sum a_k x^{2k}, B = sum b_k x^{2k+1}.
    long double a = 0, b = 0, b1 = 0, b2 = 0, b3 = 0;
    const long double xl = x;
    long double ak = 1.0L / gamma_fn(1.0 - hurst);
    long double bk = 0.5L / gamma_fn(2.0 - hurst);
    long double x2k = 1.0L;  // x^{2k}
    for (int k = 0; k < 30; ++k) {
      const long double n = 2.0L * k + 1.0L;
      a += ak * x2k;
      b += bk * x2k * xl;
      b1 += bk * n * x2k;
      if (k >= 1) {
        b2 += bk * n * (n - 1.0L) * x2k / xl;
        b3 += bk * n * (n - 1.0L) * (n - 2.0L) * x2k / (xl * xl);
      }
      ak *= -0.25L / ((k + 1.0L) * (k + 1.0L - hurst));
      bk *= -0.25L / ((k + 1.0L) * (k + 2.0L - hurst));
      x2k *= xl * xl;
      if (x2k == 0.0L) break;
    }
    if (x == 0.0) {
      // The k = 1 terms of B'' and B''' vanish or reduce to constants at 0.
      const long double b_1 = -0.125L / gamma_fn(3.0 - hurst);
      b2 = 0.0L;
      b3 = 6.0L * b_1;
    }
    return {static_cast<double>(a), static_cast<double>(b), static_cast<double>(b1),
            static_cast<double>(b2), static_cast<double>(b3)};
  }
  const KernelFactors f = kernel_factors(hurst, x);
  const double b1 = f.a + c * f.b_over_x;
  const double b2 = -f.b + c * (b1 / x - f.b_over_x / x);
  const double b3 = -b1 + c * (b2 / x - 2.0 * b1 / (x * x) + 2.0 * f.b_over_x / (x * x));
  return {f.a, f.b, b1, b2, b3};
}

// (A(x) B(y) - B(x) A(y)) / (y - x).
inline double kernel_quotient(double hurst, double x, double y, double threshold) {
  const double d = y - x;
  if (std::fabs(d) >= threshold) {
    const KernelFactors fx = kernel_factors(hurst, x);
    const KernelFactors fy = kernel_factors(hurst, y);
    return (fx.a * fy.b - fx.b * fy.a) / d;
  }
  // Symmetric expansion about the midpoint m with y - x = 2h: the quotient is
  //   (A B' + B^2) + h^2/2 (A B'''/3 + 4 B B''/3 - B'^2) + O(h^4),
  // unchanged under x <-> y.
  const double m = 0.5 * (x + y);
  const double h = 0.5 * d;
  const OddFactorJet j = odd_factor_jet(hurst, m);
  const double lead = j.a * j.b1 + j.b * j.b;
  const double curv = j.a * j.b3 / 3.0 + 4.0 * j.b * j.b2 / 3.0 - j.b1 * j.b1;
  return lead + 0.5 * h * h * curv;
}

}  // namespace detail

/// Reproducing kernel from its closed Bessel form:
///   S_T(omega, lambda) = (2-2H) Gamma(1-H)^2 V_T e^{i(y-x)} (A(x)B(y) - B(x)A(y))/(y-x)
/// with x = T omega / 2, y = T lambda / 2, and the derivative form on the
/// diagonal.
inline cplx S_T_closed(double omega, double lam, const HurstModel& model,
                       const KernelEvalPolicy& policy = {}) {
  policy.validate();
  const double x = 0.5 * model.T() * omega;
  const double y = 0.5 * model.T() * lam;
  const double g = model.gamma_one_minus_h();
  const double c = (2.0 - 2.0 * model.H()) * g * g * model.VT();
  const double q = detail::kernel_quotient(model.H(), x, y, policy.diag_threshold);
  const double d = y - x;
  return c * q * cplx(std::cos(d), std::sin(d));
}

/// S_T(omega, lambda) = int_0^T conj(phi(u omega)) phi(u lambda) dV_u.
inline cplx S_T_quadrature(double omega, double lam, const HurstModel& model,
                           const QuadratureSpec& spec = {}) {
  return integrate_dV([&](double u) { return std::conj(phi(u * omega, model)) * phi(u * lam, model); },
                      0.0, model.T(), model, spec);
}

/// U f(lambda) = int_0^T f(u) phi(u lambda) dV_u. Points where f jumps
/// (for an indicator 1_t, the time t) go in breaks.
template <class F>
cplx U_forward(F&& f, double lam, const HurstModel& model, const QuadratureSpec& spec = {},
               std::vector<double> breaks = {}) {
  auto g = [&](double u) { return cplx(f(u)) * phi(u * lam, model); };
  breaks.push_back(0.0);
  breaks.push_back(model.T());
  std::sort(breaks.begin(), breaks.end());
  cplx total = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = std::max(breaks[k], 0.0);
    const double b = std::min(breaks[k + 1], model.T());
    if (b > a) total += integrate_dV(g, a, b, model, spec);
  }
  return total;
}

/// Report of the integrability heuristic run by U_inverse.
struct InverseDiagnostics {
  bool integrability_warning = false;
  std::string message;
};

namespace detail {

// Rough check that |psi| times the norm envelope of phi(. lambda) decays
// fast enough against mu: the contribution per octave should shrink.
inline InverseDiagnostics envelope_check(const std::function<cplx(double)>& psi,
                                         const HurstModel& model, double start) {
  InverseDiagnostics d;
  const double hurst = model.H();
  std::vector<double> octave;
  for (double lam = start; lam <= 64.0 * start; lam *= 4.0) {
    // Average over one oscillation to avoid sampling a node.
    double peak = 0.0;
    for (int k = 0; k < 16; ++k) {
      const double l = lam * (1.0 + k / 64.0);
      peak = std::max(peak, std::abs(psi(l)) + std::abs(psi(-l)));
    }
    octave.push_back(peak * phi_norm_bound(lam, model) * std::pow(lam, 2.0 - 2.0 * hurst));
  }
  if (octave.back() > 0.0 && octave.back() >= octave.front()) {
    d.integrability_warning = true;
    d.message = "U_inverse: |psi| times the phi norm envelope does not decay against mu";
  }
  return d;
}

}  // namespace detail

/// U^{-1} psi(u) = int psi(lambda) conj(phi(u lambda)) mu(d lambda).
///
/// psi must lie in the class on which this integral converges absolutely;
/// that is not decidable, so a decay heuristic is run and its verdict stored
/// in diagnostics when given. t_char is the oscillation hint passed to
/// integrate_mu; zero means the horizon.
inline cplx U_inverse(const std::function<cplx(double)>& psi, double u, const HurstModel& model,
                      const QuadratureSpec& spec = {}, double t_char = 0.0,
                      InverseDiagnostics* diagnostics = nullptr) {
  if (u < 0.0 || u > model.T()) throw std::invalid_argument("U_inverse: u must lie in [0, T]");
  if (diagnostics != nullptr) *diagnostics = detail::envelope_check(psi, model, spec.tail_cutoff);
  MuIntegrand in{[&](double lam) { return psi(lam) * std::conj(phi(u * lam, model)); }, t_char};
  return integrate_mu(in, model, spec);
}

/// sigma^2(omega_n) = 1 / S_T(2 omega_n / T, 2 omega_n / T):
///   1 / ((2-2H) Gamma(1-H)^2 (omega_n/2)^{2H} J_{-H}(omega_n)^2 V_T), and 1/V_T at n = 0.
inline double sigma_squared(const BasisIndex& index, const HurstModel& model) {
  if (index.n == 0) return 1.0 / model.VT();
  const double hurst = model.H();
  const double w = std::fabs(index.omega_n);
  const double g = model.gamma_one_minus_h();
  const double j = bessel_j(-hurst, w);
  return 1.0 / ((2.0 - 2.0 * hurst) * g * g * std::pow(0.5 * w, 2.0 * hurst) * j * j * model.VT());
}

/// psi_n(lambda) = sigma(omega_n) S_T(2 omega_n / T, lambda); the n = 0
/// element is sigma(0) mhat_T(lambda).
inline cplx psi_n(const BasisIndex& index, double lam, const HurstModel& model,
                  const KernelEvalPolicy& policy = {}) {
  const double s = std::sqrt(sigma_squared(index, model));
  if (index.n == 0) return s * mhat(model.T(), lam, model);
  return s * S_T_closed(2.0 * index.omega_n / model.T(), lam, model, policy);
}

/// S_T at a pair of basis frequencies. J_{1-H} vanishes at every tabulated
/// zero, so distinct indices give 0 exactly and equal ones the diagonal.
inline cplx S_T_basis(const BasisIndex& m, const BasisIndex& n, const HurstModel& model) {
  if (m.n != n.n) return 0.0;
  return 1.0 / sigma_squared(m, model);
}

/// Gram matrix of psi_n, |n| <= n_max, from the closed form; row and column k
/// correspond to n = k - n_max.
inline std::vector<std::vector<double>> basis_gram_closed(const ZeroTable& zeros, long n_max,
                                                          const HurstModel& model) {
  const std::size_t dim = static_cast<std::size_t>(2 * n_max + 1);
  std::vector<std::vector<double>> g(dim, std::vector<double>(dim, 0.0));
  for (long i = -n_max; i <= n_max; ++i) {
    const BasisIndex bi = basis_index(zeros, i, model);
    for (long j = -n_max; j <= n_max; ++j) {
      const BasisIndex bj = basis_index(zeros, j, model);
      const double s = std::sqrt(sigma_squared(bi, model) * sigma_squared(bj, model));
      g[static_cast<std::size_t>(i + n_max)][static_cast<std::size_t>(j + n_max)] =
          s * S_T_basis(bi, bj, model).real();
    }
  }
  return g;
}

/// int psi(lambda) conj(S_T(omega, lambda)) mu(d lambda), which returns
/// psi(omega) for psi in the frequency domain.
inline cplx reproduce(const std::function<cplx(double)>& psi, double omega, const HurstModel& model,
                      const QuadratureSpec& spec = {}, double t_char = 0.0,
                      const KernelEvalPolicy& policy = {}) {
  MuIntegrand in{[&](double lam) { return psi(lam) * std::conj(S_T_closed(omega, lam, model, policy)); },
                 t_char};
  return integrate_mu(in, model, spec);
}

}  // namespace pwfbm
