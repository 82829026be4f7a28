// Independent reference computations shared by the test binaries.
#pragma once

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oracle {

using Big = boost::multiprecision::cpp_bin_float_50;

// Ascending series for J_nu in 50-digit arithmetic, 200 terms. Good to full
// double precision for x up to about 30.
inline Big bessel_j_big(double nu, const Big& x) {
  const Big h = x / 2;
  const Big h2 = h * h;
  Big term = boost::multiprecision::pow(h, Big(nu)) / boost::math::tgamma(Big(nu) + 1);
  Big sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= -h2 / (Big(k) * (Big(k) + Big(nu)));
    sum += term;
  }
  return sum;
}

inline double bessel_j(double nu, double x) { return static_cast<double>(bessel_j_big(nu, Big(x))); }

// (x/2)^{-nu} J_nu(x), finite at 0 for every order.
inline Big bessel_j_scaled_big(double nu, const Big& x) {
  const Big h2 = x * x / 4;
  Big term = 1 / boost::math::tgamma(Big(nu) + 1);
  Big sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= -h2 / (Big(k) * (Big(k) + Big(nu)));
    sum += term;
  }
  return sum;
}

}  // namespace oracle
