// Hurst index and horizon with the derived constants shared by every module.
#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "pwfbm/specfun.hpp"

namespace pwfbm {

/// d_H^2 = Gamma(3/2-H) / (2H Gamma(H+1/2) Gamma(3-2H)).
inline double dh2_standard(double hurst) {
  return gamma_fn(1.5 - hurst) /
         (2.0 * hurst * gamma_fn(hurst + 0.5) * gamma_fn(3.0 - 2.0 * hurst));
}

/// The same constant in the form obtained as the zero-frequency limit of the
/// kernel transform: sqrt(pi) / (2H Gamma(H+1/2) Gamma(2-H) 2^{2-2H}).
inline double dh2_duplication(double hurst) {
  return std::sqrt(std::numbers::pi) /
         (2.0 * hurst * gamma_fn(hurst + 0.5) * gamma_fn(2.0 - hurst) *
          std::pow(2.0, 2.0 - 2.0 * hurst));
}

/// Immutable (H, T) pair. Every other quantity in the library is a function
/// of a HurstModel.
class HurstModel {
 public:
  HurstModel(double hurst, double horizon) : hurst_(hurst), horizon_(horizon) {
    if (!(hurst > 0.0 && hurst < 1.0)) {
      throw std::invalid_argument("HurstModel: hurst must lie in (0, 1), got " +
                                  std::to_string(hurst));
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
      throw std::invalid_argument("HurstModel: horizon must be positive, got " +
                                  std::to_string(horizon));
    }
    dh2_ = dh2_standard(hurst);
    ch_ = std::sin(std::numbers::pi * hurst) * gamma_fn(1.0 + 2.0 * hurst) /
          (2.0 * std::numbers::pi);
    gamma_1mh_ = gamma_fn(1.0 - hurst);
  }

  double H() const noexcept { return hurst_; }
  double T() const noexcept { return horizon_; }
  /// d_H^2, the variance of the fundamental martingale at t = 1.
  double dH2() const noexcept { return dh2_; }
  /// Constant of the spectral density c_H |lambda|^{1-2H}.
  double cH() const noexcept { return ch_; }
  double gamma_one_minus_h() const noexcept { return gamma_1mh_; }

  /// V_t = d_H^2 t^{2-2H}.
  double V(double t) const { return dh2_ * std::pow(t, 2.0 - 2.0 * hurst_); }
  /// dV/dt = (2-2H) d_H^2 t^{1-2H}, t > 0.
  double dV(double t) const { return (2.0 - 2.0 * hurst_) * dh2_ * std::pow(t, 1.0 - 2.0 * hurst_); }
  double VT() const { return V(horizon_); }

 private:
  double hurst_;
  double horizon_;
  double dh2_ = 0.0;
  double ch_ = 0.0;
  double gamma_1mh_ = 0.0;
};

}  // namespace pwfbm
