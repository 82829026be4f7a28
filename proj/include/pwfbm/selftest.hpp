// Built-in invariant checks, runnable from the command line.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "pwfbm/expansion.hpp"
#include "pwfbm/model.hpp"
#include "pwfbm/quad.hpp"
#include "pwfbm/rkhs.hpp"
#include "pwfbm/specfun.hpp"
#include "pwfbm/spectral.hpp"

namespace pwfbm {

enum class SelftestLevel { fast, full };

struct SelftestOptions {
  SelftestLevel level = SelftestLevel::fast;
  /// Test hook: perturb one tabulated zero so that zero-dependent checks fail.
  bool corrupt_zero_table = false;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

inline std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

// |J'' + J'/x + (1 - nu^2/x^2) J| / (|J| + |J'| + 1) with the derivatives from
// central differences, one Richardson step each.
inline double bessel_ode_residual(double nu, double x) {
  const double h = 1e-2 * std::min(1.0, x);
  auto d1 = [&](double s) { return (bessel_j(nu, x + s) - bessel_j(nu, x - s)) / (2.0 * s); };
  auto d2 = [&](double s) {
    return (bessel_j(nu, x + s) - 2.0 * bessel_j(nu, x) + bessel_j(nu, x - s)) / (s * s);
  };
  const double j0 = bessel_j(nu, x);
  const double jp = (4.0 * d1(0.5 * h) - d1(h)) / 3.0;
  const double jpp = (4.0 * d2(0.5 * h) - d2(h)) / 3.0;
  return std::fabs(jpp + jp / x + (1.0 - nu * nu / (x * x)) * j0) /
         (std::fabs(j0) + std::fabs(jp) + 1.0);
}

inline std::shared_ptr<const ZeroTable> selftest_zeros(double hurst, std::size_t n, bool corrupt) {
  ZeroTable z = bessel_zeros(BesselOrder(1.0 - hurst), n);
  if (!corrupt) return std::make_shared<const ZeroTable>(std::move(z));
  std::vector<double> v = z.positive();
  v[2] += 1e-6;
  return std::make_shared<const ZeroTable>(z.order(), std::move(v));
}

}  // namespace detail

/// Runs the checks of the requested level; each result records its own time.
inline std::vector<CheckResult> run_selftest(const SelftestOptions& opt) {
  using Check = std::function<std::pair<bool, std::string>()>;
  std::vector<std::pair<std::string, Check>> checks;
  const bool corrupt = opt.corrupt_zero_table;

  checks.emplace_back("bessel_half_integer", [] {
    double worst = 0.0;
    for (double x = 0.1; x <= 100.0; x *= 1.07) {
      const double s = std::sqrt(2.0 / (std::numbers::pi * x));
      worst = std::max(worst, std::fabs(bessel_j(0.5, x) - s * std::sin(x)) / s);
      worst = std::max(worst, std::fabs(bessel_j(-0.5, x) - s * std::cos(x)) / s);
    }
    return std::pair{worst <= 1e-12, detail::fmt("max scaled error %.2e", worst)};
  });

  checks.emplace_back("bessel_ode_residual", [] {
    double worst = 0.0;
    for (double nu : {-0.9, -0.3, 0.2, 0.5, 1.3}) {
      for (double x = 0.1; x <= 100.0; x *= 1.2) {
        worst = std::max(worst, detail::bessel_ode_residual(nu, x));
      }
    }
    return std::pair{worst <= 1e-7, detail::fmt("max scaled residual %.2e", worst)};
  });

  checks.emplace_back("bessel_recurrence", [] {
    double worst = 0.0;
    for (double nu : {-0.7, -0.3, 0.25, 0.6}) {
      for (double x = 0.5; x <= 80.0; x *= 1.3) {
        const double lhs = bessel_j(nu + 2.0, x);
        const double rhs = (2.0 * nu + 2.0) / x * bessel_j(nu + 1.0, x) - bessel_j(nu, x);
        const double scale = std::fabs(bessel_j(nu + 1.0, x)) + std::fabs(bessel_j(nu, x)) + 1e-300;
        worst = std::max(worst, std::fabs(lhs - rhs) / scale);
      }
    }
    return std::pair{worst <= 1e-9, detail::fmt("max relative error %.2e", worst)};
  });

  checks.emplace_back("zero_table", [corrupt] {
    const auto z = detail::selftest_zeros(0.3, 40, corrupt);
    double worst = 0.0;
    for (std::size_t k = 1; k <= z->size(); ++k) {
      worst = std::max(worst, zero_residual(z->order().value(), z->positive_zero(k)));
    }
    return std::pair{worst <= 1e-12, detail::fmt("max zero residual %.2e", worst)};
  });

  checks.emplace_back("dh2_forms", [] {
    double worst = 0.0;
    for (int k = 1; k <= 99; ++k) {
      const double h = k / 100.0;
      worst = std::max(worst, std::fabs(dh2_standard(h) / dh2_duplication(h) - 1.0));
    }
    return std::pair{worst <= 1e-12, detail::fmt("max relative gap %.2e", worst)};
  });

  checks.emplace_back("phi_integral_is_mhat", [] {
    double worst = 0.0;
    for (double h : {0.25, 0.7}) {
      const HurstModel m(h, 1.0);
      const cplx v = integrate_dV([&](double u) { return phi(u * 5.0, m); }, 0.0, 1.0, m);
      worst = std::max(worst, std::abs(v - mhat(1.0, 5.0, m)) / std::abs(mhat(1.0, 5.0, m)));
    }
    return std::pair{worst <= 1e-8, detail::fmt("max relative error %.2e", worst)};
  });

  checks.emplace_back("kernel_closed_vs_quadrature", [] {
    double worst = 0.0;
    for (double h : {0.25, 0.75}) {
      const HurstModel m(h, 2.0);
      for (double w : {-2.0, 0.0, 1.3}) {
        for (double l : {0.7, 4.2}) {
          const cplx a = S_T_closed(w, l, m), b = S_T_quadrature(w, l, m);
          worst = std::max(worst, std::abs(a - b) / std::abs(a));
        }
      }
    }
    return std::pair{worst <= 1e-6, detail::fmt("max relative gap %.2e", worst)};
  });

  checks.emplace_back("christoffel_darboux", [] {
    double worst = 0.0;
    for (double h : {0.2, 0.45, 0.8}) {
      const HurstModel m(h, 1.5);
      for (double w : {-3.0, 0.4, 2.5}) {
        for (double l : {-1.0, 1.7, 9.0}) {
          const cplx lhs = cplx(0.0, l - w) * S_T_closed(w, l, m);
          const cplx rhs = std::conj(P_fn(m.T(), w, m)) * P_fn(m.T(), l, m) -
                           std::conj(P_star_fn(m.T(), w, m)) * P_star_fn(m.T(), l, m);
          worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
        }
      }
    }
    return std::pair{worst <= 1e-9, detail::fmt("max relative gap %.2e", worst)};
  });

  checks.emplace_back("krein_ode", [] {
    double worst = 0.0;
    for (double h : {0.3, 0.7}) {
      const HurstModel m(h, 1.0);
      const auto r = krein_ode_residual(1.0, 3.0, m, 1e-4);
      worst = std::max({worst, r.first, r.second});
    }
    return std::pair{worst <= 1e-6, detail::fmt("max residual %.2e", worst)};
  });

  checks.emplace_back("basis_orthogonality", [corrupt] {
    const HurstModel m(0.3, 1.0);
    const auto z = detail::selftest_zeros(0.3, 5, corrupt);
    double worst = 0.0;
    for (long a = 1; a <= 4; ++a) {
      for (long b = a + 1; b <= 4; ++b) {
        const double wa = 2.0 * (*z)(a) / m.T(), wb = 2.0 * (*z)(b) / m.T();
        const double off = std::abs(S_T_closed(wa, wb, m));
        worst = std::max(worst, off / std::sqrt(S_T_closed(wa, wa, m).real() * S_T_closed(wb, wb, m).real()));
      }
    }
    return std::pair{worst <= 1e-10, detail::fmt("max normalized off-diagonal %.2e", worst)};
  });

  checks.emplace_back("spectral_representation", [] {
    const HurstModel m(0.75, 1.0);
    const cplx v = integrate_mu({[](double l) { return std::norm(e_kernel(1.0, l)); }, 1.0}, m);
    const double err = std::fabs(v.real() - 1.0);
    return std::pair{err <= 1e-5, detail::fmt("|int |e_1|^2 dmu - 1| = %.2e", err)};
  });

  checks.emplace_back("reproducing_property", [] {
    const HurstModel m(0.25, 1.0);
    QuadratureSpec q;
    q.rel_tol = 1e-7;
    q.abs_tol = 1e-10;
    const cplx v = reproduce([&](double l) { return mhat(0.5, l, m); }, 3.0, m, q, 0.5);
    const cplx ex = mhat(0.5, 3.0, m);
    const double err = std::abs(v - ex) / std::abs(ex);
    return std::pair{err <= 1e-4, detail::fmt("relative error %.2e", err)};
  });

  checks.emplace_back("covariance_partial_sum", [corrupt] {
    const HurstModel m(0.5, 1.0);
    const ExpansionSpec spec(m, 1000, detail::selftest_zeros(0.5, 1000, corrupt));
    double worst = 0.0;
    for (double s : {0.2, 0.5, 0.9}) {
      for (double t : {0.3, 0.7}) {
        worst = std::max(worst, std::abs(covariance_partial_sum(s, t, spec) - std::min(s, t)));
      }
    }
    return std::pair{worst <= 1e-3, detail::fmt("max error %.2e", worst)};
  });

  if (opt.level == SelftestLevel::full) {
    checks.emplace_back("monte_carlo_covariance", [corrupt] {
      const HurstModel m(0.7, 1.0);
      const ExpansionSpec spec(m, 1024, detail::selftest_zeros(0.7, 1024, corrupt));
      const std::vector<double> grid = {0.0, 0.25, 0.5, 1.0};
      PathSampler sampler(spec, grid);
      std::vector<SamplePath> paths;
      for (std::uint64_t r = 0; r < 4000; ++r) paths.push_back(sampler.sample_real(2024, r));
      double worst = 0.0;
      for (std::size_t i = 1; i < grid.size(); ++i) {
        for (std::size_t j = i; j < grid.size(); ++j) {
          const auto e = empirical_covariance(paths, i, j);
          worst = std::max(worst, std::fabs(e.estimate.real() - fbm_covariance(grid[i], grid[j], m)) / e.stderr_);
        }
      }
      return std::pair{worst <= 4.0, detail::fmt("max deviation %.2f standard errors", worst)};
    });
    checks.emplace_back("convergence_slope", [] {
      const HurstModel m(0.5, 1.0);
      const auto rep = truncation_study(m, {64, 128, 256, 512, 1024}, 200, 2048, 99);
      const bool ok = std::fabs(rep.slope + 0.5) <= 0.15;
      return std::pair{ok, detail::fmt("slope %.3f (expected %.3f)", rep.slope, -0.5)};
    });
  }

  std::vector<CheckResult> out;
  for (auto& [name, check] : checks) {
    CheckResult r;
    r.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      auto [ok, detail] = check();
      r.passed = ok;
      r.detail = std::move(detail);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace pwfbm
