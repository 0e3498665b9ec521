// Copyright 2026 The perspex Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "perspex/errors.hpp"
#include "perspex/power_analytics.hpp"

namespace perspex {

/// Solves a tridiagonal system with the Thomas forward/backward sweep.
///
/// Row i reads lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i];
/// lower[0] and upper[m-1] are ignored.  No pivoting: the Newton Jacobians
/// this serves are M-matrices.  A pivot smaller than 1e-14 times its row's
/// largest entry raises SingularJacobian.
inline std::vector<double> thomas_solve(std::span<const double> lower,
                                        std::span<const double> diag,
                                        std::span<const double> upper,
                                        std::span<const double> rhs) {
  const std::size_t m = diag.size();
  require(m > 0 && lower.size() == m && upper.size() == m && rhs.size() == m,
          ErrorKind::DomainError, "tridiagonal system dimensions disagree");

  constexpr double kPivotTol = 1e-14;
  auto row_scale = [&](std::size_t i) {
    double s = std::abs(diag[i]);
    if (i > 0) s = std::max(s, std::abs(lower[i]));
    if (i + 1 < m) s = std::max(s, std::abs(upper[i]));
    return s;
  };

  std::vector<double> c(m, 0.0);
  std::vector<double> x(m);
  double pivot = diag[0];
  for (std::size_t i = 0;; ++i) {
    if (!std::isfinite(pivot) || std::abs(pivot) < kPivotTol * row_scale(i) ||
        pivot == 0.0) {
      fail(ErrorKind::SingularJacobian,
           "tridiagonal pivot " + std::to_string(i) + " is numerically zero");
    }
    const double inv = 1.0 / pivot;
    x[i] = (rhs[i] - (i > 0 ? lower[i] * x[i - 1] : 0.0)) * inv;
    if (i + 1 == m) break;
    c[i] = upper[i] * inv;
    pivot = diag[i + 1] - lower[i + 1] * c[i];
  }
  for (std::size_t i = m - 1; i > 0; --i) {
    x[i - 1] -= c[i - 1] * x[i];
  }
  return x;
}

/// Solves F'(xi) x = rhs for the Jacobian held in `sys`.
inline std::vector<double> solve_F_tridiagonal(const GradientSystem& sys,
                                               std::span<const double> rhs) {
  return thomas_solve(sys.jac_lower, sys.jac_diag, sys.jac_upper, rhs);
}

}  // namespace perspex
