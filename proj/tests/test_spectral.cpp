#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "pwfbm/quad.hpp"
#include "pwfbm/spectral.hpp"

using namespace pwfbm;
using std::numbers::pi;

namespace {

double rel(cplx got, cplx want) { return std::abs(got - want) / std::abs(want); }

// d/dt mhat_t(lambda) by central differences with one Richardson step.
cplx mhat_dt(double t, double lam, const HurstModel& m, double h) {
  auto d = [&](double s) { return (mhat(t + s, lam, m) - mhat(t - s, lam, m)) / (2.0 * s); };
  return (4.0 * d(0.5 * h) - d(h)) / 3.0;
}

}  // namespace

TEST(HurstModel, RejectsOutOfRange) {
  EXPECT_THROW(HurstModel(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(HurstModel(1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(HurstModel(0.5, 0.0), std::invalid_argument);
  EXPECT_THROW(HurstModel(0.5, -2.0), std::invalid_argument);
}

TEST(HurstModel, DerivedConstants) {
  for (int k = 1; k <= 99; ++k) {
    const double h = k / 100.0;
    EXPECT_LE(std::fabs(dh2_standard(h) / dh2_duplication(h) - 1.0), 1e-12) << h;
    const HurstModel m(h, 1.0);
    EXPECT_GT(m.cH(), 0.0);
    EXPECT_DOUBLE_EQ(m.dH2(), dh2_standard(h));
  }
  EXPECT_NEAR(dh2_standard(0.5), 1.0, 4e-16);
  EXPECT_NEAR(HurstModel(0.5, 1.0).cH(), 1.0 / (2.0 * pi), 1e-16);
}

TEST(FbmCovariance, Examples) {
  const HurstModel m7(0.7, 3.0), m5(0.5, 3.0);
  EXPECT_NEAR(fbm_covariance(1.0, 2.0, m7), std::pow(2.0, 0.4), 1e-15);
  EXPECT_NEAR(fbm_covariance(1.0, 2.0, m7), 1.319507910772894, 1e-12);
  for (double s : {0.0, 0.3, 1.1, 2.5}) {
    for (double t : {0.0, 0.7, 2.0}) {
      EXPECT_NEAR(fbm_covariance(s, t, m5), std::min(s, t), 1e-15);
      EXPECT_EQ(fbm_covariance(s, t, m7), fbm_covariance(t, s, m7));
    }
    EXPECT_NEAR(fbm_covariance(s, s, m7), std::pow(s, 1.4), 1e-15);
  }
}

TEST(SpectralDensity, Examples) {
  EXPECT_NEAR(spectral_density(3.0, HurstModel(0.5, 1.0)), 1.0 / (2.0 * pi), 1e-16);
  const HurstModel m(0.7, 1.0);
  EXPECT_NEAR(spectral_density(2.0, m), m.cH() * std::pow(2.0, -0.4), 1e-15);
  EXPECT_EQ(spectral_density(-2.0, m), spectral_density(2.0, m));
  EXPECT_THROW(spectral_density(0.0, m), std::domain_error);
}

TEST(EKernel, Examples) {
  EXPECT_EQ(e_kernel(1.7, 0.0), cplx(1.7, 0.0));
  EXPECT_LE(std::abs(e_kernel(1.0, pi) - cplx(0.0, 2.0 / pi)), 1e-15);
  for (double t : {0.2, 1.0, 3.0}) {
    for (double l : {-40.0, -2.0, 0.01, 1.0, 7.0, 300.0}) {
      const cplx e = e_kernel(t, l);
      EXPECT_EQ(e_kernel(t, -l), std::conj(e));
      EXPECT_LE(std::abs(e), std::min(t, 2.0 / std::fabs(l)) * (1 + 1e-14));
      EXPECT_LE(std::abs(e - (std::exp(cplx(0, l * t)) - 1.0) / cplx(0, l)), 1e-13 * t);
    }
  }
}

TEST(MKernel, Examples) {
  const HurstModel m5(0.5, 1.0), m7(0.7, 1.0);
  EXPECT_NEAR(m_kernel(1.0, 0.3, m5), 1.0, 1e-15);
  const double want = std::pow(std::pow(0.5, -0.2), 2) / (1.4 * std::tgamma(1.2) * std::tgamma(0.8));
  EXPECT_NEAR(m_kernel(1.0, 0.5, m7), want, 1e-13);
  EXPECT_EQ(m_kernel(1.0, 0.0, m7), 0.0);
  EXPECT_EQ(m_kernel(1.0, 1.0, m7), 0.0);
  EXPECT_EQ(m_kernel(1.0, 1.5, m7), 0.0);
}

TEST(MKernel, FourierTransformIsMhat) {
  // Independent double-exponential quadrature of int_0^t m_t(u) e^{i lambda u} du.
  boost::math::quadrature::tanh_sinh<double> ts;
  for (double h : {0.3, 0.7}) {
    const HurstModel m(h, 1.0);
    const double t = 1.0, lam = 3.0;
    const double re = ts.integrate([&](double u) { return m_kernel(t, u, m) * std::cos(lam * u); }, 0.0, t);
    const double im = ts.integrate([&](double u) { return m_kernel(t, u, m) * std::sin(lam * u); }, 0.0, t);
    EXPECT_LE(rel(mhat(t, lam, m), cplx(re, im)), 1e-6) << h;
  }
}

TEST(Mhat, ZeroFrequency) {
  for (double h : {0.2, 0.5, 0.8}) {
    const HurstModel m(h, 2.0);
    EXPECT_NEAR(mhat(1.5, 0.0, m).real(), m.dH2() * std::pow(1.5, 2 - 2 * h), 1e-14);
    EXPECT_LE(rel(mhat(1.5, 1e-9, m), mhat(1.5, 0.0, m)), 1e-9);
  }
}

TEST(Mhat, BrownianCaseIsE) {
  const HurstModel m(0.5, 1.0);
  for (double t : {0.3, 1.0}) {
    for (double l : {-9.0, -0.5, 0.7, 4.0, 60.0}) {
      EXPECT_LE(std::abs(mhat(t, l, m) - e_kernel(t, l)), 1e-13);
    }
  }
}

TEST(Mhat, HermitianAndSelfReciprocal) {
  for (double h : {0.25, 0.7}) {
    const HurstModel m(h, 1.0);
    for (double l : {0.3, 2.5, 17.0, 200.0}) {
      EXPECT_EQ(mhat(1.0, -l, m), std::conj(mhat(1.0, l, m)));
    }
  }
  const HurstModel m(0.7, 1.0);
  const cplx v = mhat(1.0, 2.5, m);
  EXPECT_LE(std::abs(std::exp(cplx(0, 2.5)) * std::conj(v) - v), 1e-14);
}

TEST(Phi, Examples) {
  for (double h : {0.1, 0.5, 0.9}) EXPECT_EQ(phi(0.0, HurstModel(h, 1.0)), cplx(1.0, 0.0));
  const HurstModel m5(0.5, 1.0);
  for (double z : {-30.0, -1.0, 0.4, 3.0, 80.0}) {
    EXPECT_LE(std::abs(phi(z, m5) - std::exp(cplx(0, z))), 1e-13);
  }
}

TEST(Phi, ReflectionAndEntireSeries) {
  for (double h : {0.15, 0.3, 0.5, 0.7, 0.85}) {
    const HurstModel m(h, 1.0);
    for (double z = 0.01; z <= 12.0; z *= 1.3) {
      EXPECT_EQ(phi(-z, m), std::conj(phi(z, m)));
      EXPECT_LE(std::abs(phi_entire_series(z, m) - phi(z, m)), 1e-10 * std::abs(phi(z, m)));
      EXPECT_LE(std::abs(phi_entire_series(-z, m) - std::conj(phi_entire_series(z, m))), 1e-10);
    }
  }
}

TEST(Phi, TimeDerivativeOfMhat) {
  const HurstModel m(0.3, 1.0);
  const double t = 1.0, lam = 3.7;
  const double h = 1e-5 * std::max(1.0, t);
  const cplx fd = mhat_dt(t, lam, m, h);
  const cplx fd2 = mhat_dt(t, lam, m, 2.0 * h);
  EXPECT_LE(std::abs(fd - fd2), 1e-7);
  EXPECT_LE(std::abs(phi(lam * t, m) - fd / m.dV(t)), 1e-6);
  const HurstModel m8(0.8, 2.0);
  EXPECT_LE(std::abs(phi(1.5 * 4.0, m8) - mhat_dt(1.5, 4.0, m8, 1e-5) / m8.dV(1.5)), 1e-6);
}

TEST(VarianceV, Examples) {
  EXPECT_NEAR(variance_V(0.7, HurstModel(0.5, 1.0)), 0.7, 1e-15);
  const HurstModel m(0.3, 1.0);
  EXPECT_EQ(variance_V(0.0, m), 0.0);
  EXPECT_EQ(variance_V(1.0, m), m.dH2());
  double prev = 0.0;
  for (double t = 0.01; t < 3.0; t += 0.01) {
    EXPECT_GE(variance_V(t, m), prev);
    prev = variance_V(t, m);
  }
}

TEST(PhiNormBound, Examples) {
  EXPECT_EQ(phi_norm_bound(50.0, HurstModel(0.5, 1.0)), 1.0);
  EXPECT_NEAR(phi_norm_bound(100.0, HurstModel(0.3, 1.0)), std::pow(100.0, -0.2), 1e-15);
  EXPECT_EQ(phi_norm_bound(0.1, HurstModel(0.3, 1.0)), 1.0);
  EXPECT_NEAR(phi_norm_bound(100.0, HurstModel(0.7, 1.0)), std::pow(100.0, 0.2), 1e-13);
}

TEST(PhiNormBound, EnvelopesTheNorm) {
  for (double h : {0.3, 0.7}) {
    const HurstModel m(h, 1.0);
    double lo = INFINITY, hi = 0.0;
    for (double lam = 0.5; lam <= 500.0; lam *= 2.0) {
      const double norm = std::sqrt(inner_V([&](double u) { return phi(u * lam, m); },
                                            [&](double u) { return phi(u * lam, m); }, m)
                                        .real());
      const double ratio = norm / phi_norm_bound(lam, m);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    EXPECT_LE(hi / lo, 3.0) << "H=" << h;
  }
}

TEST(XKernel, BrownianCase) {
  const HurstModel m(0.5, 1.0);
  EXPECT_EQ(x_kernel(1.0, 0.3, m), 1.0);
  EXPECT_EQ(x_kernel(1.0, 1.3, m), 0.0);
}

TEST(XKernel, EndpointBehaviour) {
  const HurstModel m(0.3, 1.0);
  EXPECT_TRUE(std::isfinite(x_kernel(1.0, 0.9, m)));
  // x_t(u) (t-u)^{1/2-H} -> 2H t^{H-1/2} as u -> t.
  for (double eps : {1e-5, 1e-7}) {
    EXPECT_NEAR(x_kernel(1.0, 1.0 - eps, m) * std::pow(eps, 0.2), 0.6, 2e-2) << eps;
  }
}

TEST(XKernel, CovarianceByNestedQuadrature) {
  for (double h : {0.3, 0.7}) {
    const HurstModel m(h, 1.0);
    const double want = fbm_covariance(0.5, 1.0, m);
    EXPECT_LE(std::fabs(x_kernel_covariance(0.5, 1.0, m) / want - 1.0), 1e-4) << h;
    EXPECT_LE(std::fabs(x_kernel_covariance(0.8, 0.8, m) / std::pow(0.8, 2 * h) - 1.0), 1e-4) << h;
  }
}

TEST(SpectralRepresentation, CovarianceGrid) {
  const double times[] = {0.25, 0.5, 0.75, 1.0};
  for (double h : {0.25, 0.5, 0.75}) {
    const HurstModel m(h, 1.0);
    for (double s : times) {
      for (double t : times) {
        if (t < s) continue;
        const cplx v = integrate_mu(
            {[&](double l) { return e_kernel(t, l) * std::conj(e_kernel(s, l)); }, 0.25}, m);
        EXPECT_LE(std::fabs(v.real() / fbm_covariance(s, t, m) - 1.0), 1e-5) << h << " " << s << " " << t;
        EXPECT_LE(std::fabs(v.imag()), 1e-9);
      }
    }
  }
}

TEST(SpectralRepresentation, MartingaleBracket) {
  for (double h : {0.3, 0.7}) {
    const HurstModel m(h, 1.0);
    const cplx v = integrate_mu(
        {[&](double l) { return mhat(0.5, l, m) * std::conj(mhat(1.0, l, m)); }, 0.5}, m);
    const double want = mhat(0.5, 0.0, m).real();
    EXPECT_LE(std::fabs(v.real() / want - 1.0), 1e-5) << h;
  }
}

TEST(SpectralRepresentation, PhiIntegratesToMhat) {
  for (double h : {0.25, 0.5, 0.8}) {
    const HurstModel m(h, 1.0);
    for (double lam : {-3.0, 0.5, 5.0, 40.0}) {
      const cplx v = integrate_dV([&](double u) { return phi(u * lam, m); }, 0.0, 1.0, m);
      EXPECT_LE(rel(v, mhat(1.0, lam, m)), 1e-8) << h << " " << lam;
    }
  }
}
