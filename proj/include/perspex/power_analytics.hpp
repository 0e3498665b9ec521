// Copyright 2026 The perspex Authors
// SPDX-License-Identifier: Apache-2.0

// Closed forms for f(x) = x^p, p > 1: PL+PR volume, its gradient and
// tridiagonal Hessian, the rescaled stationarity system F and its Jacobian,
// quadratic special cases, the lighter (naive / extended) relaxations, and
// the scalar functions whose signs drive the convexity arguments.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "perspex/errors.hpp"
#include "perspex/pl_core.hpp"

namespace perspex {

/// x^q for x >= 0 with 0^q taken as the continuous limit (0 for q > 0).
inline double powr(double x, double q) {
  if (x == 0.0) {
    if (q > 0.0) return 0.0;
    if (q == 0.0) return 1.0;
    return std::numeric_limits<double>::infinity();
  }
  return std::pow(x, q);
}

/// f(x) = x^p on an interval, p > 1.
class PowerFn {
 public:
  static constexpr double kMinExponentMargin = 1e-9;

  PowerFn(double p, Interval interval) : p_(p), interval_(interval) {
    require(std::isfinite(p) && p >= 1.0 + kMinExponentMargin,
            ErrorKind::DomainError,
            "power exponent must satisfy p > 1, got " + to_text(p));
  }

  [[nodiscard]] double p() const noexcept { return p_; }
  [[nodiscard]] const Interval& interval() const noexcept { return interval_; }
  [[nodiscard]] double operator()(double x) const { return powr(x, p_); }
  [[nodiscard]] double derivative(double x) const {
    return p_ * powr(x, p_ - 1.0);
  }
  [[nodiscard]] bool is_quadratic() const noexcept {
    return std::abs(p_ - 2.0) < 1e-12;
  }

 private:
  double p_;
  Interval interval_;
};

inline ConvexFnOracle make_oracle(const PowerFn& pf) {
  const double p = pf.p();
  return ConvexFnOracle([p](double x) { return powr(x, p); },
                        [p](double x) { return p * powr(x, p - 1.0); },
                        pf.interval());
}

enum class RelaxationKind { NR, PR, PL_PR, E_NR, PL_E_NR };

inline std::string_view to_string(RelaxationKind k) {
  switch (k) {
    case RelaxationKind::NR: return "NR";
    case RelaxationKind::PR: return "PR";
    case RelaxationKind::PL_PR: return "PL+PR";
    case RelaxationKind::E_NR: return "E+NR";
    case RelaxationKind::PL_E_NR: return "PL+E+NR";
  }
  return "?";
}

/// True for the two kinds built on the piecewise-linear under-estimator.
inline bool uses_breakpoints(RelaxationKind k) {
  return k == RelaxationKind::PL_PR || k == RelaxationKind::PL_E_NR;
}

namespace detail {

inline void check_same_interval(const PowerFn& pf, const Breakpoints& bp) {
  require(pf.interval() == bp.interval(), ErrorKind::DomainError,
          "breakpoint interval does not match the power function interval");
}

// Quantities attached to one segment [y, z] = [xi_k, xi_{k+1}], y < z.
//   left  = (y^p + (p-1) z^p - p y z^{p-1}) / (z^{p-1} - y^{p-1})
//   right = (z^p + (p-1) y^p - p z y^{p-1}) / (z^{p-1} - y^{p-1})
// Both are >= 0.  F_i = right_{i-1} - left_i.
struct SegmentTerms {
  double y, z;
  double ypm2, zpm2;  // y^{p-2}, z^{p-2} (y^{p-2} may be +inf at y = 0)
  double ypm1, zpm1;
  double left_num, right_num, denom;
  [[nodiscard]] double left() const { return left_num / denom; }
  [[nodiscard]] double right() const { return right_num / denom; }
};

inline SegmentTerms segment_terms(double p, double y, double z) {
  SegmentTerms s{};
  s.y = y;
  s.z = z;
  s.ypm1 = powr(y, p - 1.0);
  s.zpm1 = powr(z, p - 1.0);
  s.ypm2 = powr(y, p - 2.0);
  s.zpm2 = powr(z, p - 2.0);
  // With r = y/z, q = p-1 and e = (1 - r^q)/q:
  //   left_num  = z^p q (1 - r^p - p r e)
  //   right_num = z^p q (e - r^q (1 - r))
  //   denom     = z^q q e
  // which avoids the O(1) cancellations of the expanded forms as p -> 1.
  const double q = p - 1.0;
  const double r = y / z;
  const double rq = powr(r, q);
  const double e = r == 0.0 ? 1.0 / q : -std::expm1(q * std::log(r)) / q;
  const double zp = z * s.zpm1;
  s.left_num = zp * q * (1.0 - r * rq - p * r * e);
  s.right_num = zp * q * (e - rq * (1.0 - r));
  s.denom = s.zpm1 * q * e;
  return s;
}

inline std::vector<SegmentTerms> all_segments(double p, const Breakpoints& bp) {
  const auto xi = bp.xi();
  std::vector<SegmentTerms> segs;
  segs.reserve(xi.size() - 1);
  for (std::size_t k = 0; k + 1 < xi.size(); ++k) {
    segs.push_back(segment_terms(p, xi[k], xi[k + 1]));
  }
  return segs;
}

// Hessian coupling b_k for segment k; y^{p-2} may be infinite at y = 0.
inline double coupling(double p, const SegmentTerms& s) {
  return (p - 1.0) * (p - 1.0) / (3.0 * p) * s.ypm2 * s.zpm2 * s.left_num *
         s.right_num / (s.denom * s.denom * s.denom);
}

// y * b_k with the powers of y merged, finite at y = 0.
inline double coupling_times_lower(double p, const SegmentTerms& s) {
  return (p - 1.0) * (p - 1.0) / (3.0 * p) * s.ypm1 * s.zpm2 * s.left_num *
         s.right_num / (s.denom * s.denom * s.denom);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Volumes
// ---------------------------------------------------------------------------

/// PL+PR volume for p = 2 in the expanded polynomial form.
inline double volume_quadratic(const Breakpoints& bp) {
  const auto xi = bp.xi();
  const double l = bp.interval().lower();
  const double u = bp.interval().upper();
  double sum = 0.0;
  for (std::size_t i = 1; i < xi.size(); ++i) {
    sum += xi[i] * xi[i - 1] * (xi[i - 1] - xi[i]);
  }
  return (sum + u * u * u - 2.0 * u * u * l + 2.0 * u * l * l - l * l * l) /
         12.0;
}

/// PL+PR volume for x^p in closed form.
inline double volume_power_closed_form(const PowerFn& pf, const Breakpoints& bp) {
  detail::check_same_interval(pf, bp);
  if (pf.is_quadratic()) return volume_quadratic(bp);
  const double p = pf.p();
  const double l = bp.interval().lower();
  const double u = bp.interval().upper();
  const auto xi = bp.xi();
  double sum = 0.0;
  for (std::size_t i = 1; i < xi.size(); ++i) {
    const double a = powr(xi[i - 1], p - 1.0);
    const double b = powr(xi[i], p - 1.0);
    const double h = xi[i] - xi[i - 1];
    sum += a * b * h * h / (b - a);
  }
  return -(p - 1.0) * (p - 1.0) / (6.0 * p) * sum +
         (p - 1.0) / (6.0 * p) * (powr(u, p + 1.0) - powr(l, p + 1.0)) -
         (powr(u, p) * l - u * powr(l, p)) / 6.0;
}

/// Naive relaxation volume for x^2.
inline double volume_naive_quadratic(const Interval& iv) {
  const double w = iv.width();
  const double l = iv.lower();
  const double u = iv.upper();
  return w * w * w / 18.0 + (u * u * u - l * l * l) / 36.0;
}

/// Perspective relaxation volume for x^2 (the n -> infinity PL+PR limit).
inline double volume_perspective_quadratic(const Interval& iv) {
  const double w = iv.width();
  return w * w * w / 18.0;
}

/// Naive relaxation of x^2 after linear extension to the origin.
inline double volume_e_nr_quadratic(const Interval& iv) {
  const double w = iv.width();
  const double l = iv.lower();
  const double u = iv.upper();
  return w * w * (u * u + l * l) / (12.0 * u);
}

/// PL+E+NR for x^2 with n equally spaced segments.
inline double volume_pl_e_nr_quadratic_equal(const Interval& iv, int n) {
  require(n >= 1, ErrorKind::DomainError, "need n >= 1 segments");
  const double w = iv.width();
  const double u = iv.upper();
  return volume_e_nr_quadratic(iv) +
         w * w * w * w / (24.0 * static_cast<double>(n) * n * u);
}

namespace detail {
inline double pl_e_nr_sum(const PLUnderEstimator& est,
                          std::span<const double> slopes) {
  const double l = est.lower();
  const double u = est.upper();
  const double fl = est.gval.front();
  const double fu = est.gval.back();
  double sum = 0.0;
  for (std::size_t i = 0; i < slopes.size(); ++i) {
    const double t0 = est.tau[i];
    const double t1 = est.tau[i + 1];
    sum += ((t1 * t1 - t0 * t0) / 2.0 - (t1 * t1 * t1 - t0 * t0 * t0) / (6.0 * u)) *
           slopes[i];
  }
  return sum - (u + 2.0 * l) / 6.0 * (fu - fl) -
         (u - l) / (6.0 * u) * (u * fu - l * fl);
}
}  // namespace detail

/// Naive relaxation of the linearly extended under-estimator, O(n).
///
/// With lower > 0 the extension x -> (f(l)/l) x on [0, l) keeps g convex
/// only when f'(l) >= f(l)/l; that is checked.  With lower = 0 there is no
/// extension and the result is the naive relaxation of g itself.
inline double volume_pl_e_nr(const ConvexFnOracle& f, const Breakpoints& bp) {
  const double l = bp.interval().lower();
  const double fl = f(l);
  const double dl = f.derivative(l);
  constexpr double kTol = 1e-12;
  require(dl >= -kTol, ErrorKind::HypothesisViolated,
          "f must be increasing on the interval (f'(l) < 0)");
  if (l > 0.0) {
    const double chord = fl / l;
    require(dl >= chord - kTol * std::max(1.0, std::abs(chord)),
            ErrorKind::HypothesisViolated,
            "linear extension requires f'(l) >= f(l)/l");
  }
  const PLUnderEstimator est = build_under_estimator(f, bp);
  const auto xi = bp.xi();
  std::vector<double> slopes(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) slopes[i] = f.derivative(xi[i]);
  return detail::pl_e_nr_sum(est, slopes);
}

/// Same volume from the vertices alone (segment slopes stand in for f').
/// The caller is responsible for the extension hypothesis.
inline double volume_pl_e_nr(const PLUnderEstimator& est) {
  std::vector<double> slopes(est.tau.size() - 1);
  for (std::size_t i = 0; i < slopes.size(); ++i) slopes[i] = est.slope(i);
  return detail::pl_e_nr_sum(est, slopes);
}

inline double volume_pl_e_nr(const PowerFn& pf, const Breakpoints& bp) {
  detail::check_same_interval(pf, bp);
  return volume_pl_e_nr(make_oracle(pf), bp);
}

// ---------------------------------------------------------------------------
// Gradient, stationarity system, Hessian
// ---------------------------------------------------------------------------

/// Everything the optimizer needs at one placement, for the n-1 interior
/// points.  Index j here is interior point xi_{j+1}.
///
/// - `grad[j]`   = d vol / d xi_{j+1}
/// - `F[j]`      = F_{j+1}; grad[j] = scale[j] * F[j] with scale[j] > 0
/// - `diag`, `offdiag`: Hessian is tridiag(-offdiag, diag, -offdiag),
///   exact at every placement (not only at stationary points)
/// - `b0` couples xi_0 and xi_1; +inf when l = 0 and p < 2
/// - `jac_lower/diag/upper`: the (non-symmetric) tridiagonal F'
struct GradientSystem {
  double p = 2.0;
  std::vector<double> F;
  std::vector<double> grad;
  std::vector<double> scale;
  std::vector<double> diag;
  std::vector<double> offdiag;
  double b0 = 0.0;
  std::vector<double> jac_lower;  // dF_i/dxi_{i-1}, entry 0 unused (0)
  std::vector<double> jac_diag;   // dF_i/dxi_i
  std::vector<double> jac_upper;  // dF_i/dxi_{i+1}, last entry unused (0)

  [[nodiscard]] std::size_t size() const noexcept { return F.size(); }

  [[nodiscard]] double residual_inf_norm() const {
    double m = 0.0;
    for (double v : F) m = std::max(m, std::abs(v));
    return m;
  }
  [[nodiscard]] double gradient_inf_norm() const {
    double m = 0.0;
    for (double v : grad) m = std::max(m, std::abs(v));
    return m;
  }

  [[nodiscard]] Eigen::MatrixXd hessian() const {
    const auto m = static_cast<Eigen::Index>(diag.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      h(i, i) = diag[static_cast<std::size_t>(i)];
      if (i + 1 < m) {
        h(i, i + 1) = h(i + 1, i) = -offdiag[static_cast<std::size_t>(i)];
      }
    }
    return h;
  }

  [[nodiscard]] Eigen::MatrixXd jacobian() const {
    const auto m = static_cast<Eigen::Index>(jac_diag.size());
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto k = static_cast<std::size_t>(i);
      j(i, i) = jac_diag[k];
      if (i > 0) j(i, i - 1) = jac_lower[k];
      if (i + 1 < m) j(i, i + 1) = jac_upper[k];
    }
    return j;
  }
};

/// F, gradient, Hessian and Jacobian at bp; requires n >= 2.
inline GradientSystem gradient_volume(const PowerFn& pf, const Breakpoints& bp) {
  detail::check_same_interval(pf, bp);
  require(bp.segments() >= 2, ErrorKind::DomainError,
          "gradient needs at least one interior breakpoint (n >= 2)");
  const double p = pf.p();
  const auto xi = bp.xi();
  const auto segs = detail::all_segments(p, bp);
  const std::size_t m = xi.size() - 2;

  GradientSystem sys;
  sys.p = p;
  sys.F.resize(m);
  sys.grad.resize(m);
  sys.scale.resize(m);
  sys.diag.resize(m);
  sys.offdiag.resize(m > 0 ? m - 1 : 0);
  sys.jac_lower.assign(m, 0.0);
  sys.jac_diag.resize(m);
  sys.jac_upper.assign(m, 0.0);
  sys.b0 = detail::coupling(p, segs[0]);

  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t i = j + 1;  // interior point index
    const auto& lo = segs[i - 1];  // [xi_{i-1}, xi_i]
    const auto& hi = segs[i];      // [xi_i, xi_{i+1}]
    const double left = hi.left();
    const double right = lo.right();
    const double xpm2 = hi.ypm2;   // xi_i^{p-2}
    sys.F[j] = right - left;
    sys.scale[j] = (p - 1.0) * xpm2 / (6.0 * p) * (left + right);
    sys.grad[j] = -(p - 1.0) * xpm2 / (6.0 * p) * (left * left - right * right);

    // Jacobian of F.
    const double dhi = hi.denom * hi.denom;
    const double dlo = lo.denom * lo.denom;
    sys.jac_diag[j] = 2.0 * p - (p - 1.0) * xpm2 *
                                    (hi.left_num / dhi + lo.right_num / dlo);
    if (j > 0) sys.jac_lower[j] = -(p - 1.0) * lo.ypm2 * lo.left_num / dlo;
    if (j + 1 < m) sys.jac_upper[j] = -(p - 1.0) * hi.zpm2 * hi.right_num / dhi;

    // Hessian diagonal a_i = (p/xi_i) dvol_i + (xi_{i-1}/xi_i) b_{i-1}
    //                                        + (xi_{i+1}/xi_i) b_i.
    const double b_hi = detail::coupling(p, hi);
    const double xb_lo = detail::coupling_times_lower(p, lo);
    sys.diag[j] = (p * sys.grad[j] + xb_lo + xi[i + 1] * b_hi) / xi[i];
    if (j + 1 < m) sys.offdiag[j] = b_hi;
  }
  return sys;
}

/// Eigenvalues (ascending) of [[H, g], [g^T, 0]]; n >= 3, g != 0.
inline std::vector<double> bordered_hessian_eigs(const PowerFn& pf,
                                                 const Breakpoints& bp) {
  require(bp.segments() >= 3, ErrorKind::DomainError,
          "bordered Hessian test needs n >= 3");
  const GradientSystem sys = gradient_volume(pf, bp);
  const double p = pf.p();
  const auto segs = detail::all_segments(p, bp);
  double magnitude = 0.0;
  for (std::size_t j = 0; j < sys.size(); ++j) {
    const double l = segs[j + 1].left();
    const double r = segs[j].right();
    magnitude = std::max(
        magnitude, std::abs((p - 1.0) * segs[j + 1].ypm2 / (6.0 * p) * (l * l + r * r)));
  }
  require(sys.gradient_inf_norm() > 1e-12 * magnitude, ErrorKind::DomainError,
          "bordered Hessian test does not apply at a stationary point");

  const auto m = static_cast<Eigen::Index>(sys.size());
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m + 1, m + 1);
  b.topLeftCorner(m, m) = sys.hessian();
  for (Eigen::Index i = 0; i < m; ++i) {
    b(i, m) = b(m, i) = sys.grad[static_cast<std::size_t>(i)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

// ---------------------------------------------------------------------------
// Number of equally spaced points for a phi-approximation (x^2)
// ---------------------------------------------------------------------------

struct PhiThresholds {
  int n1;        // PL+E+NR within phi of E+NR
  int n2;        // PL+PR within phi of PR
  double bound1;
  double bound2;
  double ratio;  // sqrt(3/2 (1 - l/u)), the ratio of the two bounds
};

namespace detail {
// Least integer strictly greater than x (x >= 0).
inline int least_integer_above(double x) {
  const double c = std::floor(x) + 1.0;
  return static_cast<int>(c);
}
}  // namespace detail

inline PhiThresholds phi_thresholds(const Interval& iv, double phi) {
  require(std::isfinite(phi) && phi > 0.0, ErrorKind::DomainError,
          "phi must be positive");
  const double w = iv.width();
  const double u = iv.upper();
  PhiThresholds t{};
  t.bound1 = w * w / std::sqrt(24.0 * u * phi);
  t.bound2 = std::sqrt(w * w * w / phi) / 6.0;
  constexpr double kMaxBound = std::numeric_limits<int>::max() - 1.0;
  require(t.bound1 < kMaxBound && t.bound2 < kMaxBound, ErrorKind::DomainError,
          "phi too small: segment count exceeds the integer range");
  t.n1 = detail::least_integer_above(t.bound1);
  t.n2 = detail::least_integer_above(t.bound2);
  t.ratio = std::sqrt(1.5 * (1.0 - iv.lower() / u));
  return t;
}

// ---------------------------------------------------------------------------
// Scalar functions from the convexity arguments
// ---------------------------------------------------------------------------

struct ConvexityScalars {
  double pos1;   // x^p + (p-1) - p x                 > 0 for x != 1
  double pos2;   // (p-1) x^p + 1 - p x^{p-1}         > 0 for x != 1
  double h;      // (p-2)(x^p - 1) - p (x^{p-1} - x)
  double delta;  // (x^{p-1} - 1)^2 - (p-1)^2 x^{p-2} (x-1)^2
  double phi_l;  // p(p-1)(1-x) x^{p-1} log x + (x^{p-1} - 1)(x^p - 1)  > 0
};

inline ConvexityScalars convexity_scalars(double p, double x) {
  require(p > 1.0 && x > 0.0, ErrorKind::DomainError,
          "convexity scalars need p > 1 and x > 0");
  const double xp = std::pow(x, p);
  const double xpm1 = std::pow(x, p - 1.0);
  const double xpm2 = std::pow(x, p - 2.0);
  ConvexityScalars v{};
  v.pos1 = xp + (p - 1.0) - p * x;
  v.pos2 = (p - 1.0) * xp + 1.0 - p * xpm1;
  v.h = (p - 2.0) * (xp - 1.0) - p * (xpm1 - x);
  v.delta = (xpm1 - 1.0) * (xpm1 - 1.0) -
            (p - 1.0) * (p - 1.0) * xpm2 * (x - 1.0) * (x - 1.0);
  v.phi_l = p * (p - 1.0) * (1.0 - x) * xpm1 * std::log(x) +
            (xpm1 - 1.0) * (xp - 1.0);
  return v;
}

}  // namespace perspex
