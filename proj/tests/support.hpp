// Copyright 2026 The perspex Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "perspex/pl_core.hpp"

namespace perspex::testing {

/// Seeded generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  int integer(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  /// n segments on iv; every gap at least min_frac * width.
  Breakpoints breakpoints(const Interval& iv, int n, double min_frac = 1e-2) {
    const double w = iv.width();
    std::vector<double> gaps(static_cast<std::size_t>(n));
    double total = 0.0;
    for (double& g : gaps) {
      g = uniform(0.0, 1.0);
      total += g;
    }
    const double spare = 1.0 - min_frac * n;
    std::vector<double> xi{iv.lower()};
    double acc = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
      acc += min_frac + spare * gaps[static_cast<std::size_t>(i)] / total;
      xi.push_back(iv.lower() + w * acc);
    }
    xi.push_back(iv.upper());
    return {iv, xi};
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace perspex::testing
