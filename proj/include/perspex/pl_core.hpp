// Copyright 2026 The perspex Authors
// SPDX-License-Identifier: Apache-2.0

// Piecewise-linear under-estimation of a convex univariate function from
// tangent lines, and the volume of the perspective relaxation built on it.
//
// Given linearization points l = xi_0 < xi_1 < ... < xi_n = u, adjacent
// tangent lines meet at tau_1..tau_n; together with the endpoints
// P_0 = (l, f(l)) and P_{n+1} = (u, f(u)) they form the vertices of the
// convex piecewise-linear g.  The perspective of g over [l, u] is a pyramid
// with apex at the origin and height one, so its volume is the area of the
// polygon P_0..P_{n+1} (closed by the secant) divided by three.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "perspex/errors.hpp"

namespace perspex {

/// Operating range [lower, upper] with 0 <= lower < upper.
class Interval {
 public:
  Interval(double lower, double upper) : lower_(lower), upper_(upper) {
    require(std::isfinite(lower) && std::isfinite(upper),
            ErrorKind::DomainError, "interval bounds must be finite");
    require(lower >= 0.0, ErrorKind::DomainError,
            "interval lower bound must be >= 0, got " + to_text(lower));
    require(lower < upper, ErrorKind::DomainError,
            "interval requires lower < upper");
  }

  [[nodiscard]] double lower() const noexcept { return lower_; }
  [[nodiscard]] double upper() const noexcept { return upper_; }
  [[nodiscard]] double width() const noexcept { return upper_ - lower_; }

  bool operator==(const Interval&) const = default;

 private:
  double lower_;
  double upper_;
};

/// Linearization points xi_0 = lower < xi_1 < ... < xi_n = upper, n >= 1.
class Breakpoints {
 public:
  Breakpoints(Interval interval, std::vector<double> xi)
      : interval_(interval), xi_(std::move(xi)) {
    require(xi_.size() >= 2, ErrorKind::DomainError,
            "breakpoints need at least the two interval endpoints");
    require(xi_.front() == interval_.lower() && xi_.back() == interval_.upper(),
            ErrorKind::DomainError,
            "first and last breakpoints must equal the interval endpoints");
    for (std::size_t i = 0; i + 1 < xi_.size(); ++i) {
      require(std::isfinite(xi_[i + 1]) && xi_[i] < xi_[i + 1],
              ErrorKind::DomainError,
              "breakpoints must be strictly increasing (index " +
                  std::to_string(i + 1) + ")");
    }
  }

  static Breakpoints equally_spaced(Interval interval, int n) {
    require(n >= 1, ErrorKind::DomainError, "need n >= 1 segments");
    std::vector<double> xi(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i < n; ++i) {
      xi[static_cast<std::size_t>(i)] =
          interval.lower() + interval.width() * i / n;
    }
    xi.back() = interval.upper();
    return {interval, std::move(xi)};
  }

  /// Builds from interior points only; endpoints come from the interval.
  static Breakpoints from_interior(Interval interval,
                                   std::span<const double> interior) {
    std::vector<double> xi;
    xi.reserve(interior.size() + 2);
    xi.push_back(interval.lower());
    xi.insert(xi.end(), interior.begin(), interior.end());
    xi.push_back(interval.upper());
    return {interval, std::move(xi)};
  }

  [[nodiscard]] const Interval& interval() const noexcept { return interval_; }
  [[nodiscard]] std::span<const double> xi() const noexcept { return xi_; }
  [[nodiscard]] std::span<const double> interior() const noexcept {
    return std::span<const double>(xi_).subspan(1, xi_.size() - 2);
  }
  /// Number of segments n (there are n+1 points).
  [[nodiscard]] int segments() const noexcept {
    return static_cast<int>(xi_.size()) - 1;
  }
  [[nodiscard]] double operator[](std::size_t i) const { return xi_[i]; }

 private:
  Interval interval_;
  std::vector<double> xi_;
};

/// Black-box convex f with derivative oracle on [lower, upper].
///
/// Positivity is spot-checked at 64 Chebyshev nodes of the interval (first
/// kind, so the endpoints are not sampled and f(0) = 0 is admissible when
/// lower = 0).  Monotonicity of f' is checked later, pairwise at the
/// breakpoints actually used.
class ConvexFnOracle {
 public:
  using Fn = std::function<double(double)>;

  static constexpr int kPositivitySamples = 64;

  ConvexFnOracle(Fn eval, Fn deriv, Interval domain)
      : eval_(std::move(eval)), deriv_(std::move(deriv)), domain_(domain) {
    require(static_cast<bool>(eval_) && static_cast<bool>(deriv_),
            ErrorKind::DomainError, "function and derivative oracles required");
    const double mid = 0.5 * (domain_.lower() + domain_.upper());
    const double half = 0.5 * domain_.width();
    for (int k = 0; k < kPositivitySamples; ++k) {
      const double x =
          mid + half * std::cos((2.0 * k + 1.0) * std::numbers::pi /
                                (2.0 * kPositivitySamples));
      const double fx = eval_(x);
      require(std::isfinite(fx) && fx > 0.0, ErrorKind::DomainError,
              "f must be positive on the interval (f(" + to_text(x) +
                  ") = " + to_text(fx) + ")");
    }
    positive_on_domain_ = true;
  }

  [[nodiscard]] double operator()(double x) const { return eval_(x); }
  [[nodiscard]] double derivative(double x) const { return deriv_(x); }
  [[nodiscard]] const Interval& domain() const noexcept { return domain_; }
  [[nodiscard]] bool positive_on_domain() const noexcept {
    return positive_on_domain_;
  }

 private:
  Fn eval_;
  Fn deriv_;
  Interval domain_;
  bool positive_on_domain_ = false;
};

/// Vertices P_0..P_{n+1} of the piecewise-linear under-estimator g.
struct PLUnderEstimator {
  std::vector<double> tau;   // tau_0 = l < tau_1 < ... < tau_{n+1} = u
  std::vector<double> gval;  // g(tau_i)

  [[nodiscard]] std::size_t vertex_count() const noexcept { return tau.size(); }
  [[nodiscard]] double lower() const { return tau.front(); }
  [[nodiscard]] double upper() const { return tau.back(); }

  /// Slope of g on [tau_i, tau_{i+1}], i = 0..n.
  [[nodiscard]] double slope(std::size_t i) const {
    return (gval[i + 1] - gval[i]) / (tau[i + 1] - tau[i]);
  }

  /// g(x) for x in [lower, upper]; linear interpolation between vertices.
  [[nodiscard]] double operator()(double x) const {
    auto it = std::upper_bound(tau.begin(), tau.end(), x);
    std::size_t i = it == tau.begin() ? 0
                                      : static_cast<std::size_t>(it - tau.begin()) - 1;
    i = std::min(i, tau.size() - 2);
    return gval[i] + slope(i) * (x - tau[i]);
  }
};

namespace detail {
// Relative guard for coincident tangent slopes.
inline constexpr double kTangentTolerance = 1e-12;
}  // namespace detail

inline PLUnderEstimator build_under_estimator(const ConvexFnOracle& f,
                                              const Breakpoints& bp) {
  require(bp.interval() == f.domain(), ErrorKind::DomainError,
          "breakpoint interval does not match the function domain");
  const auto xi = bp.xi();
  const std::size_t n = xi.size() - 1;

  std::vector<double> fv(n + 1), dv(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    fv[i] = f(xi[i]);
    dv[i] = f.derivative(xi[i]);
    require(std::isfinite(fv[i]) && std::isfinite(dv[i]),
            ErrorKind::DomainError,
            "f or f' not finite at xi_" + std::to_string(i));
  }

  PLUnderEstimator est;
  est.tau.resize(n + 2);
  est.gval.resize(n + 2);
  est.tau[0] = xi[0];
  est.gval[0] = fv[0];
  for (std::size_t i = 1; i <= n; ++i) {
    const double gap = dv[i] - dv[i - 1];
    if (std::abs(gap) <
        detail::kTangentTolerance * std::max(1.0, std::abs(dv[i]))) {
      fail(ErrorKind::DegenerateTangents,
           "tangent slopes at xi_" + std::to_string(i - 1) + " and xi_" +
               std::to_string(i) + " coincide");
    }
    require(gap > 0.0, ErrorKind::DomainError,
            "f' must be increasing across breakpoints (f not convex?)");
    const double icpt_lo = fv[i - 1] - dv[i - 1] * xi[i - 1];
    const double icpt_hi = fv[i] - dv[i] * xi[i];
    const double t = (icpt_hi - icpt_lo) / (dv[i - 1] - dv[i]);
    if (!(t >= xi[i - 1] && t <= xi[i])) {
      fail(ErrorKind::DegenerateTangents,
           "tangent intersection tau_" + std::to_string(i) +
               " falls outside [xi_{i-1}, xi_i]; tangents numerically "
               "indistinguishable");
    }
    est.tau[i] = t;
    est.gval[i] = fv[i] + dv[i] * (t - xi[i]);
  }
  est.tau[n + 1] = xi[n];
  est.gval[n + 1] = fv[n];
  return est;
}

/// Areas of the fan triangles conv{P_0, P_i, P_{i+1}}, i = 1..n.
inline std::vector<double> triangle_areas(const PLUnderEstimator& est) {
  const std::size_t m = est.tau.size();
  std::vector<double> areas;
  areas.reserve(m - 2);
  const double x0 = est.tau[0];
  const double y0 = est.gval[0];
  for (std::size_t i = 1; i + 1 < m; ++i) {
    // First vertex at the origin: better conditioned than the 3x3 form
    // when tau_0 is large relative to the spacing.
    const double det = (est.tau[i] - x0) * (est.gval[i + 1] - y0) -
                       (est.tau[i + 1] - x0) * (est.gval[i] - y0);
    areas.push_back(0.5 * std::abs(det));
  }
  return areas;
}

/// Volume of the perspective relaxation of g; O(n).
inline double volume_pl_perspective(const PLUnderEstimator& est) {
  double sum = 0.0;
  for (double a : triangle_areas(est)) sum += a;
  return sum / 3.0;
}

}  // namespace perspex
