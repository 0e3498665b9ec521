// Copyright 2026 The perspex Authors
// SPDX-License-Identifier: Apache-2.0

#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "perspex/tridiagonal.hpp"
#include "support.hpp"

namespace perspex {
namespace {

Eigen::VectorXd dense_solve(const std::vector<double>& lo, const std::vector<double>& d,
                            const std::vector<double>& up, const std::vector<double>& rhs) {
  const auto m = static_cast<Eigen::Index>(d.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto k = static_cast<std::size_t>(i);
    a(i, i) = d[k];
    if (i > 0) a(i, i - 1) = lo[k];
    if (i + 1 < m) a(i, i + 1) = up[k];
    b(i) = rhs[k];
  }
  return a.fullPivLu().solve(b);
}

TEST(Thomas, MatchesDenseSolve) {
  testing::Gen gen(31);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = gen.integer(1, 40);
    std::vector<double> lo(m), d(m), up(m), rhs(m);
    for (int i = 0; i < m; ++i) {
      lo[i] = i > 0 ? -gen.uniform(0.0, 1.0) : 0.0;
      up[i] = i + 1 < m ? -gen.uniform(0.0, 1.0) : 0.0;
      d[i] = std::abs(lo[i]) + std::abs(up[i]) + gen.uniform(0.01, 2.0);
      rhs[i] = gen.uniform(-1.0, 1.0);
    }
    const auto x = thomas_solve(lo, d, up, rhs);
    const Eigen::VectorXd ref = dense_solve(lo, d, up, rhs);
    const double scale = std::max(1.0, ref.cwiseAbs().maxCoeff());
    for (int i = 0; i < m; ++i) EXPECT_NEAR(x[i], ref(i), 1e-12 * scale);
  }
}

TEST(Thomas, SingleEquation) {
  const std::vector<double> lo{0.0}, d{4.0}, up{0.0}, rhs{2.0};
  const auto x = thomas_solve(lo, d, up, rhs);
  ASSERT_EQ(x.size(), 1u);
  EXPECT_EQ(x[0], 0.5);
}

TEST(Thomas, SingularPivot) {
  const std::vector<double> lo{0.0, 1.0}, d{1.0, 1.0}, up{1.0, 0.0}, rhs{1.0, 1.0};
  try {
    thomas_solve(lo, d, up, rhs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularJacobian);
  }
  const std::vector<double> z{0.0};
  EXPECT_THROW(thomas_solve(z, z, z, std::vector<double>{1.0}), Error);
}

TEST(Thomas, DimensionMismatch) {
  const std::vector<double> a{1.0, 1.0}, b{1.0};
  try {
    thomas_solve(a, a, b, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainError);
  }
}

TEST(Thomas, StationarityJacobian) {
  testing::Gen gen(32);
  for (int trial = 0; trial < 100; ++trial) {
    const double p = gen.uniform(1.1, 8.0);
    const Interval iv(gen.uniform(0.0, 1.0) < 0.3 ? 0.0 : gen.uniform(0.01, 1.0), 2.0);
    const auto bp = gen.breakpoints(iv, gen.integer(2, 12), 0.02);
    const auto sys = gradient_volume(PowerFn(p, iv), bp);
    const auto x = solve_F_tridiagonal(sys, sys.F);
    const Eigen::VectorXd ref =
        sys.jacobian().fullPivLu().solve(Eigen::Map<const Eigen::VectorXd>(
            sys.F.data(), static_cast<Eigen::Index>(sys.F.size())));
    const double scale = std::max(1e-300, ref.cwiseAbs().maxCoeff());
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_NEAR(x[i], ref(static_cast<Eigen::Index>(i)), 1e-12 * scale) << "p=" << p;
    }
  }
}

}  // namespace
}  // namespace perspex
