// Copyright 2026 The perspex Authors
// SPDX-License-Identifier: Apache-2.0

// Volume-minimizing placement of linearization points for x^p.
//
// The minimizer is the unique zero of the rescaled gradient F.  From the
// equally spaced start, pure Newton on F converges monotonically: every
// coordinate decreases for 1 < p < 2 and increases for p > 2.  F' is an
// M-matrix along that path.  newton_optimize asserts the monotone behaviour
// instead of damping.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "perspex/errors.hpp"
#include "perspex/pl_core.hpp"
#include "perspex/power_analytics.hpp"
#include "perspex/tridiagonal.hpp"

namespace perspex {

enum class NewtonDirection { Decreasing, Increasing, StationaryAtStart, Mixed };

inline std::string_view to_string(NewtonDirection d) {
  switch (d) {
    case NewtonDirection::Decreasing: return "decreasing";
    case NewtonDirection::Increasing: return "increasing";
    case NewtonDirection::StationaryAtStart: return "stationary-at-start";
    case NewtonDirection::Mixed: return "mixed";
  }
  return "?";
}

struct NewtonTrace {
  std::vector<Breakpoints> iterates;   // iterates[0] is the start
  std::vector<double> residual_norms;  // ||F||_inf at each iterate
  // min_i (a_i - b_{i-1} - b_i) of the Hessian; negative when it is not
  // diagonally dominant.
  std::vector<double> dominance_margin;
  NewtonDirection direction = NewtonDirection::StationaryAtStart;

  /// Number of Newton steps taken.
  [[nodiscard]] int steps() const noexcept {
    return static_cast<int>(iterates.size()) - 1;
  }
};

/// Raised for MaxIterExceeded / MonotonicityViolated; carries the trace.
class NewtonError : public Error {
 public:
  NewtonError(ErrorKind kind, const std::string& what, NewtonTrace trace)
      : Error(kind, what), trace_(std::move(trace)) {}
  [[nodiscard]] const NewtonTrace& trace() const noexcept { return trace_; }

 private:
  NewtonTrace trace_;
};

struct NewtonOptions {
  double tol = 0.0;  // 0 selects 1e-12 * u^{p-1}
  int max_iter = 200;
};

struct NewtonResult {
  Breakpoints xi;
  NewtonTrace trace;
};

inline double default_newton_tolerance(const PowerFn& pf) {
  return 1e-12 * powr(pf.interval().upper(), pf.p() - 1.0);
}

namespace detail {

inline double dominance_margin(const GradientSystem& sys) {
  double margin = std::numeric_limits<double>::infinity();
  const std::size_t m = sys.diag.size();
  for (std::size_t j = 0; j < m; ++j) {
    double off = 0.0;
    if (j > 0) off += sys.offdiag[j - 1];
    if (j + 1 < m) off += sys.offdiag[j];
    margin = std::min(margin, sys.diag[j] - off);
  }
  return margin;
}

inline bool strictly_inside(const Interval& iv, std::span<const double> interior) {
  double prev = iv.lower();
  for (double x : interior) {
    if (!(x > prev)) return false;
    prev = x;
  }
  return prev < iv.upper();
}

enum class StepPolicy { Canonical, Damped };

// Safeguarded step for arbitrary starts.  The Newton step on F is used when
// it points downhill for the volume, halved until the iterate stays ordered
// and ||F|| drops.  Otherwise (F' singular or indefinite, or no halving
// helps) the step follows -F, halved until the volume decreases.
inline std::optional<std::vector<double>> damped_step(const PowerFn& pf,
                                                      std::span<const double> x,
                                                      const GradientSystem& sys) {
  constexpr int kMaxHalvings = 60;
  const Interval& iv = pf.interval();
  std::vector<double> next(x.size());
  auto at = [&](std::span<const double> y) { return Breakpoints::from_interior(iv, y); };

  const double r0 = sys.residual_inf_norm();
  std::vector<double> step;
  try {
    step = solve_F_tridiagonal(sys, sys.F);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::SingularJacobian) throw;
  }
  double slope = 0.0;
  for (std::size_t j = 0; j < step.size(); ++j) slope += sys.grad[j] * step[j];
  if (!(slope > 0.0)) step.clear();
  double t = 1.0;
  for (int h = 0; !step.empty() && h < kMaxHalvings; ++h, t *= 0.5) {
    for (std::size_t j = 0; j < x.size(); ++j) next[j] = x[j] - t * step[j];
    if (strictly_inside(iv, next) &&
        gradient_volume(pf, at(next)).residual_inf_norm() < r0) {
      return next;
    }
  }

  const double v0 = volume_power_closed_form(pf, at(x));
  t = 1.0;
  for (int h = 0; h < kMaxHalvings; ++h, t *= 0.5) {
    for (std::size_t j = 0; j < x.size(); ++j) next[j] = x[j] - t * sys.F[j];
    if (strictly_inside(iv, next) && volume_power_closed_form(pf, at(next)) < v0) {
      return next;
    }
  }
  return std::nullopt;
}

inline NewtonResult run_newton(const PowerFn& pf, Breakpoints start,
                               const NewtonOptions& opts, StepPolicy policy) {
  const Interval& iv = pf.interval();
  const double tol = opts.tol > 0.0 ? opts.tol : default_newton_tolerance(pf);
  require(opts.max_iter >= 0, ErrorKind::DomainError, "max_iter must be >= 0");

  NewtonDirection expected = NewtonDirection::StationaryAtStart;
  if (!pf.is_quadratic()) {
    expected = pf.p() < 2.0 ? NewtonDirection::Decreasing
                            : NewtonDirection::Increasing;
  }
  const double slack = 1e-12 * std::max(1.0, iv.upper());

  NewtonTrace trace;
  trace.direction = NewtonDirection::StationaryAtStart;
  std::vector<double> x(start.interior().begin(), start.interior().end());
  const std::vector<double> x0 = x;
  trace.iterates.push_back(std::move(start));

  for (int k = 0;; ++k) {
    const GradientSystem sys = gradient_volume(pf, trace.iterates.back());
    const double r = sys.residual_inf_norm();
    trace.residual_norms.push_back(r);
    trace.dominance_margin.push_back(dominance_margin(sys));
    if (r <= tol) break;
    if (k >= opts.max_iter) {
      throw NewtonError(ErrorKind::MaxIterExceeded,
                        "Newton did not reach ||F|| <= " + to_text(tol) +
                            " in " + std::to_string(opts.max_iter) +
                            " iterations (last " + to_text(r) + ")",
                        std::move(trace));
    }

    std::vector<double> next;
    if (policy == StepPolicy::Damped) {
      auto damped = damped_step(pf, x, sys);
      if (!damped) {
        throw NewtonError(ErrorKind::MaxIterExceeded,
                          "damped Newton stalled: no step reduces the residual or "
                          "the volume",
                          std::move(trace));
      }
      next = std::move(*damped);
    } else {
      const std::vector<double> step = solve_F_tridiagonal(sys, sys.F);
      next.resize(x.size());
      for (std::size_t j = 0; j < x.size(); ++j) next[j] = x[j] - step[j];
      if (!strictly_inside(iv, next)) {
        throw NewtonError(ErrorKind::MonotonicityViolated,
                          "Newton iterate left the ordered interior of the interval",
                          std::move(trace));
      }
      if (expected != NewtonDirection::StationaryAtStart) {
        for (std::size_t j = 0; j < x.size(); ++j) {
          const double move = next[j] - x[j];
          const bool against = expected == NewtonDirection::Decreasing
                                   ? move > slack
                                   : move < -slack;
          if (against) {
            throw NewtonError(ErrorKind::MonotonicityViolated,
                              "coordinate " + std::to_string(j + 1) +
                                  " moved against the guaranteed direction by " +
                                  to_text(std::abs(move)) + " at step " +
                                  std::to_string(k + 1),
                              std::move(trace));
          }
        }
      }
    }
    x = next;
    trace.iterates.push_back(Breakpoints::from_interior(iv, x));
  }

  if (trace.steps() > 0) {
    bool all_down = true;
    bool all_up = true;
    for (std::size_t j = 0; j < x.size(); ++j) {
      all_down = all_down && x[j] <= x0[j];
      all_up = all_up && x[j] >= x0[j];
    }
    if (policy == StepPolicy::Canonical &&
        expected != NewtonDirection::StationaryAtStart) {
      trace.direction = expected;
    } else if (all_down && !all_up) {
      trace.direction = NewtonDirection::Decreasing;
    } else if (all_up && !all_down) {
      trace.direction = NewtonDirection::Increasing;
    } else {
      trace.direction = NewtonDirection::Mixed;
    }
  }
  Breakpoints result = trace.iterates.back();
  return {std::move(result), std::move(trace)};
}

}  // namespace detail

/// Pure Newton on F from the equally spaced start.
///
/// Throws NewtonError(MaxIterExceeded) when the residual stays above tol and
/// NewtonError(MonotonicityViolated) if any coordinate moves against the
/// direction fixed by p (beyond 1e-12 slack) or an iterate leaves (l, u).
inline NewtonResult newton_optimize(const PowerFn& pf, int n,
                                    const NewtonOptions& opts = {}) {
  require(n >= 2, ErrorKind::DomainError,
          "placement optimization needs n >= 2 segments");
  return detail::run_newton(pf, Breakpoints::equally_spaced(pf.interval(), n),
                            opts, detail::StepPolicy::Canonical);
}

/// Newton from an arbitrary interior start with step halving on ||F|| and a
/// descent fallback (see detail::damped_step).  No monotonicity is asserted:
/// the guarantee only holds from the equally spaced start.
inline NewtonResult newton_from(const PowerFn& pf, Breakpoints start,
                                const NewtonOptions& opts = {}) {
  require(start.interval() == pf.interval(), ErrorKind::DomainError,
          "start interval does not match the power function interval");
  require(start.segments() >= 2, ErrorKind::DomainError,
          "placement optimization needs n >= 2 segments");
  return detail::run_newton(pf, std::move(start), opts,
                            detail::StepPolicy::Damped);
}

/// Equally spaced points are the unique minimizer for x^2.
inline std::pair<Breakpoints, double> optimize_quadratic(const Interval& iv, int n) {
  require(n >= 1, ErrorKind::DomainError, "need n >= 1 segments");
  const double w = iv.width();
  const double nn = static_cast<double>(n) * n;
  return {Breakpoints::equally_spaced(iv, n),
          w * w * w / 18.0 + w * w * w / (36.0 * nn)};
}

// ---------------------------------------------------------------------------
// Single interior point
// ---------------------------------------------------------------------------

struct SinglePointBounds {
  double lower = 0.0;  // min of the two bound formulas
  double upper = 0.0;  // max of the two bound formulas
  double half = 0.0;   // (l + u) / 2
  double power_mean = 0.0;  // ((u^{p-1} + l^{p-1}) / 2)^{1/(p-1)}
  // The two formulas themselves.  tangent_crossing is where the endpoint
  // tangents meet; secant_slope_point is where f' equals the secant slope.
  double tangent_crossing = 0.0;
  double secant_slope_point = 0.0;
};

inline SinglePointBounds single_point_bounds(const PowerFn& pf) {
  const double p = pf.p();
  const double l = pf.interval().lower();
  const double u = pf.interval().upper();
  SinglePointBounds b;
  b.half = 0.5 * (l + u);
  if (pf.is_quadratic()) {
    b.lower = b.upper = b.tangent_crossing = b.secant_slope_point = b.half;
    b.power_mean = b.half;
    return b;
  }
  const double up = powr(u, p), lp = powr(l, p);
  const double upm1 = powr(u, p - 1.0), lpm1 = powr(l, p - 1.0);
  b.tangent_crossing = (p - 1.0) * (up - lp) / (p * (upm1 - lpm1));
  b.secant_slope_point = powr((up - lp) / (p * (u - l)), 1.0 / (p - 1.0));
  b.power_mean = powr(0.5 * (upm1 + lpm1), 1.0 / (p - 1.0));
  b.lower = std::min(b.tangent_crossing, b.secant_slope_point);
  b.upper = std::max(b.tangent_crossing, b.secant_slope_point);
  return b;
}

struct GapFunction {
  double p = 2.0;
  double t = 0.0;
  double value = 0.0;
};

/// Normalized width (secant_slope_point - tangent_crossing) / (u - l) of the
/// single-point bracket, as a function of p and t = l/u.
inline GapFunction gap_delta(double p, double t) {
  require(std::isfinite(p) && p > 1.0, ErrorKind::DomainError, "gap needs p > 1");
  require(t >= 0.0 && t < 1.0, ErrorKind::DomainError, "gap needs t in [0, 1)");
  GapFunction g{p, t, 0.0};
  if (p == 2.0) return g;
  const double q = p - 1.0;
  // log((1 - t^p) / (p (1 - t))) without cancellation as p -> 1.
  const double log_ratio = std::log1p(-powr(t, p)) - std::log1p(-t) - std::log1p(q);
  const double upper = std::exp(log_ratio / q);
  const double one_minus_tq = t == 0.0 ? 1.0 : -std::expm1(q * std::log(t));
  const double lower = q * (1.0 - powr(t, p)) / (p * one_minus_tq);
  g.value = (upper - lower) / (1.0 - t);
  return g;
}

/// Minimizer p0 of the gap at t = 0 and the minimum value.
///
/// Bisection on the sign of -p/(p-1) + p^2 log p / (p-1)^2 - p^{1/(p-1)},
/// which is increasing and changes sign once on [2, 50].
inline std::pair<double, double> find_p0() {
  auto stationarity = [](double p) {
    const double q = p - 1.0;
    return -p / q + p * p * std::log(p) / (q * q) - std::pow(p, 1.0 / q);
  };
  double lo = 2.0;
  double hi = 50.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (stationarity(mid) < 0.0 ? lo : hi) = mid;
  }
  const double p0 = 0.5 * (lo + hi);
  return {p0, gap_delta(p0, 0.0).value};
}

// ---------------------------------------------------------------------------
// Sweeps and the log-concave surrogate
// ---------------------------------------------------------------------------

struct SweepTable {
  int n = 0;
  std::vector<double> p;
  std::vector<std::vector<double>> interior;  // one row per p
};

inline SweepTable sweep_optimal_points(const Interval& iv, int n,
                                       std::span<const double> p_grid,
                                       const NewtonOptions& opts = {}) {
  require(!p_grid.empty(), ErrorKind::DomainError, "empty p grid");
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    require(p_grid[i] > 1.0, ErrorKind::DomainError, "p grid values must be > 1");
    require(i == 0 || p_grid[i] > p_grid[i - 1], ErrorKind::DomainError,
            "p grid must be strictly increasing");
  }
  SweepTable table;
  table.n = n;
  for (double p : p_grid) {
    const NewtonResult res = newton_optimize(PowerFn(p, iv), n, opts);
    table.p.push_back(p);
    const auto in = res.xi.interior();
    table.interior.emplace_back(in.begin(), in.end());
  }
  return table;
}

struct SurrogateValue {
  double h = 0.0;
  double C = 0.0;
};

/// h(xi_1) = C - vol(l, xi_1, u) for p > 2; strictly log-concave in xi_1,
/// vanishing as xi_1 -> l (C is the volume with no interior point).
inline SurrogateValue surrogate_h(const PowerFn& pf, double xi1) {
  require(pf.p() > 2.0, ErrorKind::DomainError,
          "log-concave surrogate is defined for p > 2");
  const double p = pf.p();
  const double l = pf.interval().lower();
  const double u = pf.interval().upper();
  require(xi1 > l && xi1 < u, ErrorKind::DomainError,
          "surrogate needs l < xi_1 < u");
  const double up = powr(u, p), lp = powr(l, p);
  const double upm1 = powr(u, p - 1.0), lpm1 = powr(l, p - 1.0);
  SurrogateValue s;
  s.C = ((p - 1.0) * up + lp - p * upm1 * l) * (up + (p - 1.0) * lp - p * u * lpm1) /
        (6.0 * p * (upm1 - lpm1));
  const double xs[] = {xi1};
  s.h = s.C - volume_power_closed_form(pf, Breakpoints::from_interior(pf.interval(), xs));
  return s;
}

}  // namespace perspex
