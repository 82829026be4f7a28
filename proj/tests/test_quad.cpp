#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "pwfbm/quad.hpp"
#include "pwfbm/spectral.hpp"

using namespace pwfbm;

TEST(QuadratureSpec, Validation) {
  QuadratureSpec s;
  EXPECT_NO_THROW(s.validate());
  s.rel_tol = 1e-13;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = {};
  s.abs_tol = 1e-16;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = {};
  s.tail_cutoff = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = {};
  s.max_segments = 7;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(IterAitken, AlternatingHarmonic) {
  std::vector<double> partial;
  double s = 0.0;
  for (int k = 1; k <= 13; ++k) {
    s += (k % 2 ? 1.0 : -1.0) / k;
    partial.push_back(s);
  }
  EXPECT_NEAR(detail::iterated_aitken(partial), std::log(2.0), 1e-8);
  EXPECT_GT(std::fabs(partial.back() - std::log(2.0)), 1e-2);
}

TEST(IntegrateDV, Examples) {
  for (double h : {0.1, 0.3, 0.5, 0.75, 0.95}) {
    const HurstModel m(h, 2.0);
    EXPECT_NEAR(integrate_dV([](double) { return 1.0; }, 0.0, 2.0, m).real(), m.VT(), 1e-12 * m.VT());
    EXPECT_NEAR(integrate_dV([](double) { return 1.0; }, 0.5, 1.5, m).real(), m.V(1.5) - m.V(0.5), 1e-12);
  }
  const HurstModel m5(0.5, 1.0);
  EXPECT_NEAR(integrate_dV([](double u) { return u; }, 0.0, 1.0, m5).real(), 0.5, 1e-14);
  const HurstModel m(0.25, 1.0);
  const cplx v = integrate_dV([&](double u) { return phi(5.0 * u, m); }, 0.0, 1.0, m);
  EXPECT_LE(std::abs(v - mhat(1.0, 5.0, m)), 1e-9 * std::abs(mhat(1.0, 5.0, m)));
}

TEST(IntegrateDV, RejectsBadLimits) {
  const HurstModel m(0.4, 1.0);
  auto f = [](double) { return 1.0; };
  EXPECT_THROW(integrate_dV(f, 0.5, 0.5, m), std::invalid_argument);
  EXPECT_THROW(integrate_dV(f, -0.1, 0.5, m), std::invalid_argument);
  EXPECT_THROW(integrate_dV(f, 0.0, 1.5, m), std::invalid_argument);
}

TEST(IntegrateDV, NonconvergenceCarriesAchievedError) {
  const HurstModel m(0.4, 1.0);
  QuadratureSpec s;
  s.max_segments = 8;
  s.rel_tol = 1e-12;
  s.abs_tol = 1e-15;
  try {
    integrate_dV([](double u) { return std::sin(5000.0 * u); }, 0.0, 1.0, m, s);
    FAIL() << "expected QuadratureError";
  } catch (const QuadratureError& e) {
    EXPECT_GT(e.achieved_error(), 0.0);
    EXPECT_NE(std::string(e.what()).find("achieved"), std::string::npos);
  }
}

TEST(InnerV, IndicatorsGiveV) {
  const HurstModel m(0.7, 1.0);
  auto ind = [](double a) { return [a](double u) { return u <= a ? 1.0 : 0.0; }; };
  // An interior jump limits the attainable accuracy.
  QuadratureSpec s;
  s.rel_tol = 1e-6;
  s.abs_tol = 1e-9;
  EXPECT_NEAR(inner_V(ind(0.4), ind(0.9), m, s).real(), m.V(0.4), 1e-5);
}

TEST(InnerV, ConjugateSymmetryAndCauchySchwarz) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const HurstModel m(0.1 + 0.8 * (trial % 9) / 8.0, 1.0);
    const double a = U(rng), b = U(rng), c = U(rng), w = 4 * U(rng);
    auto f = [&](double u) { return cplx(a + b * u, c * u * u); };
    auto g = [&](double u) { return std::exp(cplx(0.0, w * u)) * (1.0 + c * u); };
    const cplx fg = inner_V(f, g, m), gf = inner_V(g, f, m);
    EXPECT_LE(std::abs(fg - std::conj(gf)), 1e-12 * (1 + std::abs(fg)));
    EXPECT_LE(std::norm(fg), inner_V(f, f, m).real() * inner_V(g, g, m).real() * (1 + 1e-12));
  }
}

TEST(InnerV, MovingAverageKernels) {
  // Horizon 1/2 keeps the kernel jumps of x_{1/2} on the integration limit.
  const HurstModel m(0.7, 0.5);
  const HurstModel full(0.7, 1.0);
  QuadratureSpec s;
  s.rel_tol = 1e-6;
  s.abs_tol = 1e-9;
  const cplx v = inner_V([&](double u) { return x_kernel(0.5, u, full); },
                         [&](double u) { return x_kernel(1.0, u, full); }, m, s);
  EXPECT_LE(std::fabs(v.real() / fbm_covariance(0.5, 1.0, full) - 1.0), 1e-4);
}

TEST(IntegrateMu, UnitVariance) {
  for (double h : {0.5, 0.7, 0.2}) {
    const HurstModel m(h, 1.0);
    const cplx v = integrate_mu({[](double l) { return std::norm(e_kernel(1.0, l)); }, 1.0}, m);
    EXPECT_NEAR(v.real(), 1.0, 1e-6) << h;
  }
}

TEST(IntegrateMu, MartingaleCrossMoment) {
  const HurstModel m(0.3, 1.0);
  const cplx v =
      integrate_mu({[&](double l) { return mhat(0.5, l, m) * std::conj(mhat(1.0, l, m)); }, 0.5}, m);
  EXPECT_NEAR(v.real(), m.dH2() * std::pow(0.5, 1.4), 1e-5 * m.dH2());
}

TEST(IntegrateMu, PositivityAndRealValuedness) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.1, 3.0);
  for (int trial = 0; trial < 10; ++trial) {
    const HurstModel m(0.15 + 0.07 * trial, 1.0);
    const double a = U(rng), b = U(rng);
    // Nonnegative and Hermitian: |a e_1 + b e_2|^2.
    auto f = [&](double l) { return std::norm(a * e_kernel(1.0, l) + b * e_kernel(2.0, l)); };
    const cplx v = integrate_mu({f, 1.0}, m);
    EXPECT_GE(v.real(), 0.0);
    EXPECT_LE(std::fabs(v.imag()), QuadratureSpec{}.abs_tol);
    const double want = a * a + b * b * std::pow(2.0, 2 * m.H()) + 2 * a * b * fbm_covariance(1.0, 2.0, m);
    EXPECT_NEAR(v.real(), want, 1e-5 * want);
  }
}

TEST(IntegrateMu, TighterToleranceIsNoWorse) {
  const HurstModel m(0.35, 1.0);
  auto err = [&](double rel_tol) {
    QuadratureSpec s;
    s.rel_tol = rel_tol;
    s.abs_tol = 1e-14;
    const cplx v = integrate_mu({[](double l) { return std::norm(e_kernel(1.0, l)); }, 1.0}, m, s);
    return std::fabs(v.real() - 1.0);
  };
  double previous = err(1e-4);
  for (double tol : {5e-5, 1e-6, 5e-7, 1e-8}) {
    const double e = err(tol);
    EXPECT_LE(e, previous + 1e-12) << tol;
    previous = e;
  }
}

TEST(IntegrateMu, GrowingIntegrandIsReported) {
  const HurstModel m(0.4, 1.0);
  EXPECT_THROW(integrate_mu({[](double l) { return cplx(std::fabs(l), 0.0); }, 1.0}, m), TailDivergenceError);
}
