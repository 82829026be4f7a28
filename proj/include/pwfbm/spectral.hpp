// Deterministic ingredients of fractional Brownian motion: covariance,
// spectral density, the kernels e_t, m_t, x_t, the transform of m_t, and the
// Fourier kernel phi of the isometry between L^2([0,T], V) and the frequency
// domain.
#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "pwfbm/model.hpp"
#include "pwfbm/quad.hpp"
#include "pwfbm/specfun.hpp"

namespace pwfbm {

/// E X_s X_t = (s^{2H} + t^{2H} - |s-t|^{2H}) / 2.
inline double fbm_covariance(double s, double t, const HurstModel& model) {
  if (s < 0.0 || t < 0.0) throw std::invalid_argument("fbm_covariance: times must be >= 0");
  const double e = 2.0 * model.H();
  return 0.5 * (std::pow(s, e) + std::pow(t, e) - std::pow(std::fabs(s - t), e));
}

/// Density of mu: c_H |lambda|^{1-2H}. Singular at the origin for H > 1/2,
/// where a domain error is raised instead of returning infinity.
inline double spectral_density(double lam, const HurstModel& model) {
  if (lam == 0.0) {
    if (model.H() > 0.5) throw std::domain_error("spectral_density: singular at 0 for H > 1/2");
    return model.H() == 0.5 ? model.cH() : 0.0;
  }
  return model.cH() * std::pow(std::fabs(lam), 1.0 - 2.0 * model.H());
}

/// e_t(lambda) = (e^{i lambda t} - 1) / (i lambda), evaluated as
/// t e^{i lambda t / 2} sinc(lambda t / 2) so that it is exact at 0 and
/// Hermitian in lambda.
inline cplx e_kernel(double t, double lam) {
  if (t < 0.0) throw std::invalid_argument("e_kernel: t must be >= 0");
  const double half = 0.5 * lam * t;
  const double sinc = half == 0.0 ? 1.0 : std::sin(half) / half;
  return t * sinc * cplx(std::cos(half), std::sin(half));
}

/// m_t(u) = u^{1/2-H} (t-u)^{1/2-H} / (2H Gamma(H+1/2) Gamma(3/2-H)) on (0, t),
/// zero elsewhere including both endpoints.
inline double m_kernel(double t, double u, const HurstModel& model) {
  if (!(u > 0.0 && u < t)) return 0.0;
  const double hurst = model.H();
  const double c = 2.0 * hurst * gamma_fn(hurst + 0.5) * gamma_fn(1.5 - hurst);
  return std::pow(u * (t - u), 0.5 - hurst) / c;
}

/// Fourier transform of m_t:
///   sqrt(pi)/(2H Gamma(H+1/2)) (t/lambda)^{1-H} e^{i lambda t/2} J_{1-H}(lambda t/2),
/// and d_H^2 t^{2-2H} at lambda = 0. The Bessel factor is evaluated through
/// the even function z^{-nu} J_nu(z), which makes the result Hermitian.
inline cplx mhat(double t, double lam, const HurstModel& model) {
  if (t < 0.0) throw std::invalid_argument("mhat: t must be >= 0");
  if (t == 0.0) return 0.0;
  if (lam == 0.0) return model.dH2() * std::pow(t, 2.0 - 2.0 * model.H());
  const double hurst = model.H();
  const double nu = 1.0 - hurst;
  const double c = std::sqrt(std::numbers::pi) / (2.0 * hurst * gamma_fn(hurst + 0.5));
  const double z = 0.5 * lam * t;
  // (t/lambda)^nu J_nu(z) = t^{2 nu} 2^{-nu} z^{-nu} J_nu(z)
  const double amp = c * std::pow(t, 2.0 * nu) * std::pow(2.0, -nu) * bessel_j_scaled(nu, z);
  return amp * cplx(std::cos(z), std::sin(z));
}

namespace detail {

// (y/2)^H J_{-H}(y) and (y/2)^H J_{1-H}(y) for y >= 0: the even and odd
// entire factors of phi.
struct PhiFactors {
  double even;
  double odd;
};

inline PhiFactors phi_factors(double hurst, double y) {
  if (y == 0.0) return {1.0 / gamma_fn(1.0 - hurst), 0.0};
  const double scale = std::pow(0.5 * y, hurst);
  return {scale * bessel_j(-hurst, y), scale * bessel_j(1.0 - hurst, y)};
}

}  // namespace detail

/// Fourier kernel
///   phi(z) = Gamma(1-H) (z/4)^H e^{iz/2} (J_{-H}(z/2) + i J_{1-H}(z/2)), phi(0) = 1,
/// for z > 0, continued to z < 0 by phi(-z) = conj(phi(z)).
inline cplx phi(double z, const HurstModel& model) {
  if (z == 0.0) return 1.0;
  if (z < 0.0) return std::conj(phi(-z, model));
  const auto f = detail::phi_factors(model.H(), 0.5 * z);
  const double g = model.gamma_one_minus_h();
  return g * cplx(std::cos(0.5 * z), std::sin(0.5 * z)) * cplx(f.even, f.odd);
}

/// phi from its power series in z/4, valid for every real z without any
/// branch choice. Intended for |z| <= 12; used to cross-check phi.
inline cplx phi_entire_series(double z, const HurstModel& model) {
  const long double hurst = model.H();
  const long double q = static_cast<long double>(z) / 4.0L;
  const long double q2 = q * q;
  // even: sum (-1)^k q^{2k} / (k! Gamma(k+1-H)); odd: sum (-1)^k q^{2k+1} / (k! Gamma(k+2-H))
  long double te = 1.0L / gamma_fn(1.0 - model.H());
  long double to = q / gamma_fn(2.0 - model.H());
  long double even = te, odd = to;
  for (int k = 1; k < 80; ++k) {
    te *= -q2 / (k * (k - hurst));
    to *= -q2 / (k * (k + 1.0L - hurst));
    even += te;
    odd += to;
    if (std::fabs(te) + std::fabs(to) < 1e-20L * (std::fabs(even) + std::fabs(odd))) break;
  }
  const double g = model.gamma_one_minus_h();
  return g * cplx(std::cos(0.5 * z), std::sin(0.5 * z)) *
         cplx(static_cast<double>(even), static_cast<double>(odd));
}

/// V_t = d_H^2 t^{2-2H}.
inline double variance_V(double t, const HurstModel& model) {
  if (t < 0.0) throw std::invalid_argument("variance_V: t must be >= 0");
  return model.V(t);
}

/// Growth envelope of ||phi(. lambda)||_V: 1 min |lambda|^{H-1/2} for
/// H <= 1/2, 1 max |lambda|^{H-1/2} otherwise.
inline double phi_norm_bound(double lam, const HurstModel& model) {
  const double hurst = model.H();
  if (lam == 0.0) return 1.0;
  const double r = std::pow(std::fabs(lam), hurst - 0.5);
  return hurst <= 0.5 ? std::min(1.0, r) : std::max(1.0, r);
}

/// Moving-average kernel x_t(u) of X_t = int_0^t x_t(u) dM_u:
///   2H (t^{H-1/2} (t-u)^{H-1/2} - (H-1/2) int_u^t v^{H-3/2} (v-u)^{H-1/2} dv)
/// for 0 < u < t, zero outside.
inline double x_kernel(double t, double u, const HurstModel& model,
                       const QuadratureSpec& spec = {}) {
  if (!(u > 0.0 && u < t)) return 0.0;
  spec.validate();
  const double hurst = model.H();
  const double a = hurst - 0.5;
  double integral = 0.0;
  if (a != 0.0) {
    auto run = [&](auto&& g, double lo, double hi) {
      const QuadResult r =
          detail::adaptive_gk(g, lo, hi, spec.abs_tol, spec.rel_tol, spec.max_segments);
      if (!r.converged) throw QuadratureError("x_kernel: tolerance not reached", r.error);
      return r.value.real();
    };
    // Near v = u, s = (v-u)^{a+1} absorbs the (v-u)^a singularity; further
    // out v = e^r resolves the scale range when u << t.
    const double split = std::min(2.0 * u, t);
    const double inv = 1.0 / (a + 1.0);
    integral = run([&](double s) -> cplx { return std::pow(u + std::pow(s, inv), a - 1.0) * inv; },
                   0.0, std::pow(split - u, a + 1.0));
    if (split < t) {
      integral += run(
          [&](double r) -> cplx {
            const double v = std::exp(r);
            return std::pow(v, a) * std::pow(v - u, a);
          },
          std::log(split), std::log(t));
    }
  }
  return 2.0 * hurst * (std::pow(t, a) * std::pow(t - u, a) - a * integral);
}

/// <x_s, x_t>_V over [0, min(s,t)], which equals the fBm covariance.
///
/// Power substitutions at both ends of [0, m] absorb the algebraic endpoint
/// behaviour of the kernels.
inline double x_kernel_covariance(double s, double t, const HurstModel& model,
                                  const QuadratureSpec& inner = {},
                                  const QuadratureSpec& outer = {}) {
  if (s < 0.0 || t < 0.0) throw std::invalid_argument("x_kernel_covariance: times must be >= 0");
  const double m = std::min(s, t);
  if (m == 0.0) return 0.0;
  const double a = model.H() - 0.5;
  auto product = [&](double u) { return x_kernel(s, u, model, inner) * x_kernel(t, u, model, inner); };
  auto run = [&](auto&& g, double hi) {
    const QuadResult r =
        detail::adaptive_gk(g, 0.0, hi, outer.abs_tol, outer.rel_tol, outer.max_segments);
    if (!r.converged) throw QuadratureError("x_kernel_covariance: tolerance not reached", r.error);
    return r.value.real();
  };
  // Near u = 0 the product times dV/du behaves like u^{-|2H-1|}.
  const double k0 = 1.0 / (1.0 - std::fabs(2.0 * a));
  const double lower = run(
      [&](double r) -> cplx {
        const double u = std::pow(r, k0);
        return product(u) * model.dV(u) * k0 * std::pow(r, k0 - 1.0);
      },
      std::pow(0.5 * m, 1.0 / k0));
  const double e = (s == t ? 2.0 * a : a);
  const double k = 1.0 / (1.0 + e);
  const double upper = run(
      [&](double r) -> cplx {
        const double u = m - std::pow(r, k);
        return product(u) * model.dV(u) * k * std::pow(r, k - 1.0);
      },
      std::pow(0.5 * m, 1.0 / k));
  return lower + upper;
}

}  // namespace pwfbm
