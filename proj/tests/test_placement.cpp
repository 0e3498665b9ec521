// Copyright 2026 The perspex Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "perspex/placement_optimizer.hpp"
#include "support.hpp"

namespace perspex {
namespace {

double volume_one_point(const PowerFn& pf, double x) {
  const double in[] = {x};
  return volume_power_closed_form(pf, Breakpoints::from_interior(pf.interval(), in));
}

TEST(Newton, GoldenRatioRoot) {
  const auto res = newton_optimize(PowerFn(3.0, Interval(0.0, 1.0)), 2);
  EXPECT_NEAR(res.xi[1], (std::sqrt(5.0) - 1.0) / 2.0, 1e-12);
  EXPECT_EQ(res.trace.direction, NewtonDirection::Increasing);
  EXPECT_GT(res.trace.steps(), 0);
}

TEST(Newton, QuadraticStaysEquallySpaced) {
  const Interval iv(0.0, 1.0);
  const auto res = newton_optimize(PowerFn(2.0, iv), 5);
  EXPECT_EQ(res.trace.steps(), 0);
  EXPECT_EQ(res.trace.direction, NewtonDirection::StationaryAtStart);
  const std::vector<double> expected{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(res.xi[i], expected[i], 1e-15);
  const auto [bp, vol] = optimize_quadratic(iv, 5);
  EXPECT_NEAR(vol, volume_quadratic(bp), 1e-15);
  EXPECT_NEAR(vol, 1.0 / 18.0 + 1.0 / 900.0, 1e-15);
}

TEST(Newton, SubQuadraticSinglePointBracket) {
  const PowerFn pf(1.5, Interval(0.0, 1.0));
  const auto res = newton_optimize(pf, 2);
  EXPECT_GT(res.xi[1], 1.0 / 3.0);
  EXPECT_LT(res.xi[1], 4.0 / 9.0);
  EXPECT_EQ(res.trace.direction, NewtonDirection::Decreasing);
  const auto b = single_point_bounds(pf);
  EXPECT_NEAR(b.tangent_crossing, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(b.secant_slope_point, 4.0 / 9.0, 1e-15);
}

TEST(Newton, MonotoneFromEqualSpacing) {
  for (double p : {1.2, 1.5, 1.8, 1.9, 2.5, 3.0, 5.0, 8.0}) {
    for (int n : {2, 3, 5, 10}) {
      for (double ratio : {0.0, 0.25, 0.75}) {
        const double u = 1.7;
        const PowerFn pf(p, Interval(ratio * u, u));
        const auto res = newton_optimize(pf, n);
        const auto& it = res.trace.iterates;
        for (std::size_t k = 1; k < it.size(); ++k) {
          for (std::size_t j = 1; j < static_cast<std::size_t>(n); ++j) {
            if (p < 2.0) {
              EXPECT_LE(it[k][j], it[k - 1][j] + 1e-12);
            } else {
              EXPECT_GE(it[k][j], it[k - 1][j] - 1e-12);
            }
          }
        }
        EXPECT_LE(res.trace.residual_norms.back(), default_newton_tolerance(pf));
        EXPECT_LT(res.trace.steps(), 50);
        const Eigen::MatrixXd h = gradient_volume(pf, res.xi).hessian();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
        EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
      }
    }
  }
}

TEST(Newton, NearLinearExponents) {
  for (int n : {3, 50}) {
    std::vector<double> prev;
    for (double q : {1e-6, 1e-5, 1e-4, 1e-3}) {
      const auto res = newton_optimize(PowerFn(1.0 + q, Interval(0.0, 1.0)), n);
      EXPECT_EQ(res.trace.direction, NewtonDirection::Decreasing);
      const auto in = res.xi.interior();
      if (!prev.empty()) {
        for (std::size_t j = 0; j < in.size(); ++j) EXPECT_NEAR(in[j], prev[j], 1e-3);
      }
      prev.assign(in.begin(), in.end());
    }
  }
}

TEST(Newton, StartResidualSign) {
  for (double p : {1.1, 1.3, 1.7, 1.95, 2.05, 2.5, 4.0, 10.0}) {
    for (int n : {2, 4, 9}) {
      for (double ratio : {0.0, 0.1, 0.5, 0.9}) {
        const Interval iv(ratio * 3.0, 3.0);
        const auto sys = gradient_volume(PowerFn(p, iv), Breakpoints::equally_spaced(iv, n));
        const auto [mn, mx] = std::minmax_element(sys.F.begin(), sys.F.end());
        if (p < 2.0) {
          EXPECT_GT(*mn, 0.0) << "p=" << p << " n=" << n << " t=" << ratio;
        } else {
          EXPECT_LT(*mx, 0.0) << "p=" << p << " n=" << n << " t=" << ratio;
        }
      }
    }
  }
}

TEST(Newton, UniqueFromPerturbedStarts) {
  testing::Gen gen(41);
  for (const auto& [p, n, l] : std::vector<std::tuple<double, int, double>>{
           {1.3, 3, 0.0}, {1.7, 5, 0.4}, {3.0, 4, 0.0}, {6.0, 3, 0.2}}) {
    const PowerFn pf(p, Interval(l, 1.0));
    const auto ref = newton_optimize(pf, n);
    for (int trial = 0; trial < 32; ++trial) {
      const auto res = newton_from(pf, gen.breakpoints(pf.interval(), n, 0.02));
      for (int i = 0; i <= n; ++i) {
        EXPECT_NEAR(res.xi[static_cast<std::size_t>(i)], ref.xi[static_cast<std::size_t>(i)],
                    1e-8)
            << "p=" << p << " trial=" << trial;
      }
    }
  }
}

TEST(Newton, IterationCapRaises) {
  NewtonOptions opts;
  opts.max_iter = 1;
  try {
    newton_optimize(PowerFn(8.0, Interval(0.0, 1.0)), 10, opts);
    FAIL();
  } catch (const NewtonError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MaxIterExceeded);
    EXPECT_EQ(e.trace().steps(), 1);
  }
  EXPECT_THROW(newton_optimize(PowerFn(3.0, Interval(0.0, 1.0)), 1), Error);
}

TEST(SinglePoint, MinimizerInsideBracket) {
  for (double p = 1.05; p <= 12.0; p *= 1.15) {
    for (double ratio : {0.0, 0.1, 0.5, 0.9}) {
      const PowerFn pf(p, Interval(ratio * 2.0, 2.0));
      const double x = newton_optimize(pf, 2).xi[1];
      const auto b = single_point_bounds(pf);
      EXPECT_GT(x, b.lower) << "p=" << p << " t=" << ratio;
      EXPECT_LT(x, b.upper) << "p=" << p << " t=" << ratio;
    }
  }
  const auto b = single_point_bounds(PowerFn(3.0, Interval(0.0, 1.0)));
  EXPECT_NEAR(b.lower, 1.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(b.upper, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(b.power_mean, std::sqrt(0.5), 1e-15);
}

TEST(SinglePoint, UnimodalVolume) {
  for (double p : {2.5, 3.0, 5.0, 9.0}) {
    for (double l : {0.0, 0.3}) {
      const PowerFn pf(p, Interval(l, 1.0));
      std::vector<double> v;
      for (int k = 1; k < 400; ++k) v.push_back(volume_one_point(pf, l + (1.0 - l) * k / 400.0));
      for (std::size_t k = 1; k + 1 < v.size(); ++k) {
        EXPECT_FALSE(v[k] > v[k - 1] && v[k] > v[k + 1]) << "p=" << p << " k=" << k;
      }
    }
  }
}

TEST(SinglePoint, NotConvexNearLowerEnd) {
  const PowerFn pf(3.0, Interval(0.01, 1.0));
  auto second = [&](double x) {
    const double h = 1e-4;
    return (volume_one_point(pf, x + h) - 2.0 * volume_one_point(pf, x) +
            volume_one_point(pf, x - h)) / (h * h);
  };
  EXPECT_LT(second(0.01 + 1e-3), 0.0);
  const double xstar = newton_optimize(pf, 2).xi[1];
  EXPECT_GT(second(xstar + 0.05), 0.0);
}

TEST(Gap, Properties) {
  for (double t : {0.0, 0.2, 0.7}) EXPECT_EQ(gap_delta(2.0, t).value, 0.0);
  EXPECT_NEAR(gap_delta(1.0 + 1e-6, 0.0).value, std::exp(-1.0), 1e-5);
  const auto [p0, d0] = find_p0();
  EXPECT_NEAR(p0, 6.3212, 1e-3);
  EXPECT_NEAR(d0, -0.1347, 1e-3);
  for (double p : {3.0, 5.0, 6.0, 7.0, 10.0}) EXPECT_GE(gap_delta(p, 0.0).value, d0);
  EXPECT_THROW(gap_delta(2.0, 1.0), Error);
  EXPECT_THROW(gap_delta(1.0, 0.5), Error);
}

TEST(Gap, AgreesWithBracketWidth) {
  for (double p : {1.1, 1.5, 3.0, 7.0}) {
    for (double t : {0.0, 0.3, 0.8}) {
      const auto b = single_point_bounds(PowerFn(p, Interval(t, 1.0)));
      EXPECT_NEAR(gap_delta(p, t).value,
                  (b.secant_slope_point - b.tangent_crossing) / (1.0 - t), 1e-12);
    }
  }
}

TEST(Sweep, CoordinatesIncreaseWithP) {
  const std::vector<double> grid{1.2, 1.5, 2.0, 3.0, 5.0, 8.0};
  const auto t = sweep_optimal_points(Interval(0.0, 1.0), 5, grid);
  ASSERT_EQ(t.interior.size(), grid.size());
  for (std::size_t k = 1; k < grid.size(); ++k) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_GT(t.interior[k][j], t.interior[k - 1][j] + 1e-9);
  }
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(t.interior[2][j], 0.2 * (j + 1.0), 1e-15);
  const std::vector<double> bad{3.0, 2.0};
  EXPECT_THROW(sweep_optimal_points(Interval(0.0, 1.0), 5, bad), Error);
}

TEST(Surrogate, ProductFormAndLogConcavity) {
  const PowerFn pf(3.0, Interval(0.5, 1.0));
  const double p = pf.p(), l = 0.5, u = 1.0;
  auto q = [&](double a, double b) {
    return (std::pow(a, p) - std::pow(b, p)) / (std::pow(a, p - 1) - std::pow(b, p - 1));
  };
  std::vector<double> logs;
  double best_x = 0.0, best_h = -1.0;
  for (int k = 1; k < 500; ++k) {
    const double x = l + (u - l) * k / 500.0;
    const auto s = surrogate_h(pf, x);
    const double product = (p - 1) * (p - 1) * (std::pow(u, p - 1) - std::pow(l, p - 1)) /
                           (6 * p) * (q(u, l) - q(x, l)) * (q(x, u) - q(u, l));
    EXPECT_NEAR(s.h, product, 1e-13);
    EXPECT_GT(s.h, 0.0);
    logs.push_back(std::log(s.h));
    if (s.h > best_h) best_h = s.h, best_x = x;
  }
  for (std::size_t k = 1; k + 1 < logs.size(); ++k) {
    EXPECT_LE(logs[k + 1] - 2.0 * logs[k] + logs[k - 1], 1e-12);
  }
  EXPECT_NEAR(best_x, newton_optimize(pf, 2).xi[1], 1.0 / 500.0);
  const double n1 = volume_power_closed_form(pf, Breakpoints::equally_spaced(pf.interval(), 1));
  EXPECT_NEAR(surrogate_h(pf, l + 1e-9).C, n1, 1e-15);
  EXPECT_LT(surrogate_h(pf, l + 1e-9).h, 1e-9);
  EXPECT_THROW(surrogate_h(PowerFn(1.5, Interval(0.0, 1.0)), 0.5), Error);
}

}  // namespace
}  // namespace perspex
