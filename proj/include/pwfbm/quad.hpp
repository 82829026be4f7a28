// Numerical integration against dV_u on [0, T] and against the spectral
// measure mu(d lambda) = c_H |lambda|^{1-2H} d lambda on the real line.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "pwfbm/model.hpp"

namespace pwfbm {

using cplx = std::complex<double>;

/// Tolerances and truncation policy for the dV- and mu-integrals.
struct QuadratureSpec {
  double rel_tol = 1e-10;
  double abs_tol = 1e-13;
  /// Initial truncation point of mu-integrals; rounded up to a whole number
  /// of oscillation periods.
  double tail_cutoff = 200.0;
  /// Budget of Gauss-Kronrod panels per integral.
  std::size_t max_segments = 4'000'000;
  /// Half-width of the cell around lambda = 0 that is integrated with the
  /// weight singularity factored out.
  double origin_split = 0.5;

  void validate() const {
    if (!(rel_tol >= 1e-12)) throw std::invalid_argument("QuadratureSpec: rel_tol must be >= 1e-12");
    if (!(abs_tol >= 1e-15)) throw std::invalid_argument("QuadratureSpec: abs_tol must be >= 1e-15");
    if (!(tail_cutoff > 0.0)) throw std::invalid_argument("QuadratureSpec: tail_cutoff must be > 0");
    if (max_segments < 8) throw std::invalid_argument("QuadratureSpec: max_segments must be >= 8");
    if (!(origin_split > 0.0)) throw std::invalid_argument("QuadratureSpec: origin_split must be > 0");
  }
};

/// Raised when an integral misses its tolerance; carries what was reached.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved error estimate " + format_error(achieved) + ")"),
        achieved_(achieved) {}
  double achieved_error() const noexcept { return achieved_; }

 private:
  static std::string format_error(double e) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", e);
    return buf;
  }
  double achieved_;
};

/// Raised when successive tail contributions of a mu-integral stop shrinking.
class TailDivergenceError : public QuadratureError {
 public:
  using QuadratureError::QuadratureError;
};

struct QuadResult {
  cplx value;
  double error = 0.0;
  std::size_t panels = 0;
  bool converged = true;
};

namespace detail {

// Kronrod 15-point abscissae (descending, last is the centre) and weights,
// with the embedded 7-point Gauss weights on the odd Kronrod nodes.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a;
  double b;
  cplx value;
  double error;
  int depth;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gk15(F& f, double a, double b, int depth) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  std::array<cplx, 15> fv;
  fv[7] = f(centre);
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    fv[j] = f(centre - dx);
    fv[14 - j] = f(centre + dx);
  }
  cplx kron = fv[7] * kWgk[7];
  cplx gauss = fv[7] * kWg[3];
  for (int j = 0; j < 7; ++j) {
    kron += (fv[j] + fv[14 - j]) * kWgk[j];
    if (j % 2 == 1) gauss += (fv[j] + fv[14 - j]) * kWg[j / 2];
  }
  const cplx mean = 0.5 * kron;
  double resasc = kWgk[7] * std::abs(fv[7] - mean);
  double resabs = kWgk[7] * std::abs(fv[7]);
  for (int j = 0; j < 7; ++j) {
    resasc += kWgk[j] * (std::abs(fv[j] - mean) + std::abs(fv[14 - j] - mean));
    resabs += kWgk[j] * (std::abs(fv[j]) + std::abs(fv[14 - j]));
  }
  resasc *= std::fabs(half);
  resabs *= std::fabs(half);
  double err = std::abs((kron - gauss) * half);
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  err = std::max(err, 50.0 * std::numeric_limits<double>::epsilon() * resabs);
  return {a, b, kron * half, err, depth};
}

inline constexpr int kMaxDepth = 20;

// Globally adaptive Gauss-Kronrod 7/15: bisect the panel with the largest
// error estimate until the total meets max(abs_tol, rel_tol |I|).
template <class F>
QuadResult adaptive_gk(F&& f, double a, double b, double abs_tol, double rel_tol,
                       std::size_t max_panels) {
  std::priority_queue<Panel> work;
  Panel first = gk15(f, a, b, 0);
  cplx total = first.value;
  double err = first.error;
  work.push(first);
  std::size_t panels = 1;
  while (err > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (work.empty() || panels + 2 > max_panels) break;
    Panel worst = work.top();
    if (worst.depth >= kMaxDepth) break;
    work.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    Panel left = gk15(f, worst.a, mid, worst.depth + 1);
    Panel right = gk15(f, mid, worst.b, worst.depth + 1);
    panels += 2;
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    work.push(left);
    work.push(right);
  }
  // Re-sum from the panels to shed the drift of the running updates.
  cplx sum = 0.0;
  double esum = 0.0;
  while (!work.empty()) {
    sum += work.top().value;
    esum += work.top().error;
    work.pop();
  }
  return {sum, esum, panels, esum <= std::max(abs_tol, rel_tol * std::abs(sum))};
}

// Aitken's delta-squared applied componentwise and iterated up to three times.
inline double iterated_aitken(std::vector<double> x) {
  for (int order = 0; order < 3 && x.size() >= 3; ++order) {
    std::vector<double> next;
    next.reserve(x.size() - 2);
    for (std::size_t i = 0; i + 2 < x.size(); ++i) {
      const double d1 = x[i + 1] - x[i];
      const double d2 = x[i + 2] - x[i + 1];
      const double den = d2 - d1;
      if (den == 0.0 || std::fabs(den) <= 1e-14 * std::fabs(x[i + 2]) ||
          std::fabs(d2) <= 1e-15 * std::fabs(x[i + 2])) {
        next.push_back(x[i + 2]);
      } else {
        next.push_back(x[i + 2] - d2 * d2 / den);
      }
    }
    x = std::move(next);
  }
  return x.back();
}

inline cplx iterated_aitken(const std::vector<cplx>& seq) {
  std::vector<double> re(seq.size()), im(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    re[i] = seq[i].real();
    im[i] = seq[i].imag();
  }
  return {iterated_aitken(std::move(re)), iterated_aitken(std::move(im))};
}

}  // namespace detail

/// Integral of f over [a, b] against dV_u = (2-2H) d_H^2 u^{1-2H} du.
///
/// With u = r^{2/(2-2H)} the measure becomes 2 d_H^2 r dr, and a smooth f
/// picks up only powers of r above 2, which the Gauss-Kronrod rule resolves
/// at every H. Jumps of f should be placed on the limits.
template <class F>
cplx integrate_dV(F&& f, double a, double b, const HurstModel& model,
                  const QuadratureSpec& spec = {}) {
  spec.validate();
  if (!(a >= 0.0 && a < b)) throw std::invalid_argument("integrate_dV: need 0 <= a < b");
  if (b > model.T() * (1.0 + 1e-12)) throw std::invalid_argument("integrate_dV: b exceeds horizon");
  const double half_p = 1.0 - model.H();
  const double inv = 1.0 / half_p;
  auto g = [&](double r) -> cplx { return cplx(f(std::pow(r, inv))) * (2.0 * r); };
  const QuadResult res = detail::adaptive_gk(g, std::pow(a, half_p), std::pow(b, half_p),
                                             spec.abs_tol / model.dH2(), spec.rel_tol,
                                             spec.max_segments);
  if (!res.converged) {
    throw QuadratureError("integrate_dV: tolerance not reached", res.error * model.dH2());
  }
  return res.value * model.dH2();
}

/// <f, g>_V on [0, T].
template <class F, class G>
cplx inner_V(F&& f, G&& g, const HurstModel& model, const QuadratureSpec& spec = {}) {
  return integrate_dV([&](double u) { return cplx(f(u)) * std::conj(cplx(g(u))); }, 0.0,
                      model.T(), model, spec);
}

/// Integrand for integrate_mu. The truncation points of the mu-integral are
/// placed at multiples of 2 pi / t_char, so every oscillation frequency of f
/// should be an integer multiple of t_char; zero means the model horizon.
struct MuIntegrand {
  std::function<cplx(double)> f;
  double t_char = 0.0;
};

/// Integral of f over the real line against mu.
///
/// The integrand is folded onto [0, inf) as f(l) + f(-l). Near the origin the
/// value at 0 is integrated exactly against l^{1-2H} and the remainder
/// numerically after w = l^{2-2H}. The tail is summed panel by panel to
/// geometrically growing cutoffs and the partial integrals are extrapolated by
/// iterated Aitken delta-squared.
inline cplx integrate_mu(const MuIntegrand& integrand, const HurstModel& model,
                         const QuadratureSpec& spec = {}) {
  spec.validate();
  const double t_char = integrand.t_char > 0.0 ? integrand.t_char : model.T();
  const double segment = std::numbers::pi / t_char;
  const double period = 2.0 * segment;
  const double hurst = model.H();
  const double p = 2.0 - 2.0 * hurst;
  const double ch = model.cH();
  auto folded = [&](double lam) -> cplx { return integrand.f(lam) + integrand.f(-lam); };
  auto weighted = [&](double lam) -> cplx { return folded(lam) * std::pow(lam, 1.0 - 2.0 * hurst); };

  std::size_t panels = 0;
  // Sum of |panel integrals|. Relative tolerances refer to this scale, so
  // integrals that cancel to near zero do not demand unbounded accuracy.
  double scale = 0.0;
  const double seg_abs = 0.01 * spec.abs_tol;
  const double seg_rel = 0.1 * spec.rel_tol;
  auto piece = [&](auto&& fn, double a, double b) -> cplx {
    const QuadResult r = detail::adaptive_gk(fn, a, b, seg_abs, seg_rel, spec.max_segments);
    panels += r.panels;
    scale += std::abs(r.value);
    if (!r.converged && r.error > 10.0 * std::max(spec.abs_tol, spec.rel_tol * std::abs(r.value))) {
      throw QuadratureError("integrate_mu: panel tolerance not reached", r.error);
    }
    if (panels > spec.max_segments) {
      throw QuadratureError("integrate_mu: panel budget exhausted", r.error);
    }
    return r.value;
  };

  // Origin cell [0, delta]. The folded integrand is even, so a Richardson step
  // on two small samples recovers its value at 0 to O(h^4).
  const double delta = std::min(spec.origin_split, segment);
  const double h = 1e-3 * delta;
  const cplx g0 = (4.0 * folded(h) - folded(2.0 * h)) / 3.0;
  cplx origin = g0 * std::pow(delta, p) / p;
  origin += piece([&](double w) { return (folded(std::pow(w, 1.0 / p)) - g0) / p; }, 0.0,
                  std::pow(delta, p));

  // Body up to the first cutoff, one panel per half period.
  const double first_cut = period * std::max(4.0, std::ceil(spec.tail_cutoff / period));
  cplx body = piece(weighted, delta, segment);
  double left = segment;
  auto advance = [&](double right) {
    cplx acc = 0.0;
    while (left < right - 0.5 * segment) {
      const double b = left + segment;
      acc += piece(weighted, left, b);
      left = b;
    }
    left = right;
    return acc;
  };
  body += advance(first_cut);

  std::vector<cplx> partial{origin + body};
  std::vector<cplx> estimates{partial.back()};
  double last_step = std::numeric_limits<double>::infinity();
  int growing = 0;
  double cut = first_cut;
  constexpr int kMaxLevels = 16;
  for (int level = 1; level <= kMaxLevels; ++level) {
    const cplx add = advance(2.0 * cut);
    cut *= 2.0;
    partial.push_back(partial.back() + add);
    const double step = std::abs(add);
    growing = step >= last_step ? growing + 1 : 0;
    if (growing >= 3) {
      throw TailDivergenceError("integrate_mu: tail contributions do not decrease", step);
    }
    last_step = step;
    estimates.push_back(partial.size() >= 3 ? detail::iterated_aitken(partial) : partial.back());
    if (estimates.size() >= 4) {
      const std::size_t n = estimates.size();
      const double tol = std::max(spec.abs_tol, spec.rel_tol * std::max(std::abs(estimates[n - 1]), scale));
      const double d1 = std::abs(estimates[n - 1] - estimates[n - 2]);
      const double d2 = std::abs(estimates[n - 2] - estimates[n - 3]);
      if (d1 <= tol && d2 <= 10.0 * tol) return ch * estimates.back();
    }
  }
  const std::size_t n = estimates.size();
  throw QuadratureError("integrate_mu: tail extrapolation did not settle",
                        ch * std::abs(estimates[n - 1] - estimates[n - 2]));
}

}  // namespace pwfbm
