// Copyright 2026 The perspex Authors
// SPDX-License-Identifier: Apache-2.0

// Hit-or-miss Monte-Carlo volumes of the relaxation bodies in (x, y, z).
//
// Every body lives in {l z <= x <= u z, 0 <= z <= 1} below the perspective of
// the secant through (l, f(l)) and (u, f(u)), so the box
// [0, u] x [0, f(u)] x [0, 1] contains all of them.  Samples come from a
// counter-based SplitMix64 stream: coordinate k of sample i is a pure
// function of (seed, 3 i + k), so any partition of the index range gives the
// same hit count.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "perspex/errors.hpp"
#include "perspex/pl_core.hpp"
#include "perspex/power_analytics.hpp"

namespace perspex {

/// Counter-based SplitMix64.
struct SplitMix64 {
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  static constexpr double uniform(std::uint64_t seed, std::uint64_t counter) noexcept {
    return static_cast<double>(mix(seed + (counter + 1) * kGamma) >> 11) * 0x1.0p-53;
  }
};

class BodySpec {
 public:
  /// Body for f = x^p.  PL kinds need breakpoints; the others must not get any.
  static BodySpec make(RelaxationKind kind, const PowerFn& pf,
                       const std::optional<Breakpoints>& bp = std::nullopt) {
    BodySpec s(kind, pf.interval());
    s.power_ = pf;
    if (uses_breakpoints(kind)) {
      require(bp.has_value(), ErrorKind::DomainError,
              std::string(to_string(kind)) + " body needs breakpoints");
      require(bp->interval() == pf.interval(), ErrorKind::DomainError,
              "breakpoint interval does not match the power function interval");
      s.estimator_ = build_under_estimator(make_oracle(pf), *bp);
    } else {
      require(!bp.has_value(), ErrorKind::DomainError,
              std::string(to_string(kind)) + " body takes no breakpoints");
    }
    s.finish();
    return s;
  }

  /// PL+PR or PL+E+NR body of an arbitrary under-estimator.
  static BodySpec from_estimator(RelaxationKind kind, PLUnderEstimator est) {
    require(uses_breakpoints(kind), ErrorKind::DomainError,
            "only PL+PR and PL+E+NR bodies are built from an estimator");
    require(est.tau.size() >= 2 && est.tau.size() == est.gval.size(),
            ErrorKind::DomainError, "malformed under-estimator");
    BodySpec s(kind, Interval(est.lower(), est.upper()));
    s.estimator_ = std::move(est);
    s.finish();
    return s;
  }

  [[nodiscard]] RelaxationKind kind() const noexcept { return kind_; }
  [[nodiscard]] const Interval& interval() const noexcept { return interval_; }
  [[nodiscard]] const std::optional<PowerFn>& power() const noexcept { return power_; }
  [[nodiscard]] const std::optional<PLUnderEstimator>& estimator() const noexcept {
    return estimator_;
  }
  [[nodiscard]] double f_upper() const noexcept { return fu_; }
  [[nodiscard]] double box_volume() const noexcept { return interval_.upper() * fu_; }

  /// Upper face: perspective of the secant, (F(l) - s l) z + s x.
  [[nodiscard]] double secant(double x, double z) const noexcept {
    return intercept_ * z + slope_ * x;
  }

  [[nodiscard]] bool contains(double x, double y, double z) const {
    if (!(z > kMinZ && z <= 1.0)) return false;
    const double l = interval_.lower();
    const double u = interval_.upper();
    if (x < l * z || x > u * z) return false;
    if (y > secant(x, z)) return false;
    if (kind_ == RelaxationKind::PR && power_->is_quadratic()) return y * z >= x * x;
    return y >= lower_face(x, z);
  }

  static constexpr double kMinZ = 1e-300;

 private:
  BodySpec(RelaxationKind kind, Interval iv) : kind_(kind), interval_(iv) {}

  void finish() {
    const double l = interval_.lower();
    const double u = interval_.upper();
    double fl = 0.0;
    if (estimator_) {
      const auto& est = *estimator_;
      fl = est.gval.front();
      fu_ = est.gval.back();
      for (std::size_t i = 0; i + 1 < est.tau.size(); ++i) {
        const double s = est.slope(i);
        require(std::isfinite(s) && s >= 0.0, ErrorKind::DomainError,
                "under-estimator must be nondecreasing");
        piece_slope_.push_back(s);
        piece_icpt_.push_back(est.gval[i] - s * est.tau[i]);
      }
      for (double g : est.gval) {
        require(g >= 0.0, ErrorKind::DomainError, "under-estimator must be >= 0");
      }
    } else {
      fl = (*power_)(l);
      fu_ = (*power_)(u);
    }
    slope_ = (fu_ - fl) / (u - l);
    intercept_ = fl - slope_ * l;
    extension_ = l > 0.0 ? fl / l : 0.0;
    if (kind_ == RelaxationKind::PL_E_NR && l > 0.0) {
      require(piece_slope_.front() >= extension_ * (1.0 - 1e-12),
              ErrorKind::HypothesisViolated,
              "linear extension requires the first slope >= g(l)/l");
    }
  }

  [[nodiscard]] double pl_value(double x) const {
    double g = piece_slope_[0] * x + piece_icpt_[0];
    for (std::size_t i = 1; i < piece_slope_.size(); ++i) {
      g = std::max(g, piece_slope_[i] * x + piece_icpt_[i]);
    }
    return g;
  }

  [[nodiscard]] double lower_face(double x, double z) const {
    const double l = interval_.lower();
    switch (kind_) {
      case RelaxationKind::PL_PR: {
        // z g(x/z) = max_i (slope_i x + icpt_i z)
        double g = piece_slope_[0] * x + piece_icpt_[0] * z;
        for (std::size_t i = 1; i < piece_slope_.size(); ++i) {
          g = std::max(g, piece_slope_[i] * x + piece_icpt_[i] * z);
        }
        return g;
      }
      case RelaxationKind::NR:
        return (*power_)(x);
      case RelaxationKind::PR:
        return z * (*power_)(x / z);
      case RelaxationKind::E_NR:
        return x < l ? extension_ * x : (*power_)(x);
      case RelaxationKind::PL_E_NR:
        return x < l ? extension_ * x : pl_value(x);
    }
    return std::numeric_limits<double>::infinity();
  }

  RelaxationKind kind_;
  Interval interval_;
  std::optional<PowerFn> power_;
  std::optional<PLUnderEstimator> estimator_;
  std::vector<double> piece_slope_;
  std::vector<double> piece_icpt_;
  double fu_ = 0.0;
  double slope_ = 0.0;
  double intercept_ = 0.0;
  double extension_ = 0.0;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  std::uint64_t hits = 0;
  double box_volume = 0.0;
};

inline constexpr std::uint64_t kMcBlockSize = std::uint64_t{1} << 16;
inline constexpr std::uint64_t kMcMinSamples = 10000;

/// Worker count: `requested` if positive, else PERSPEX_THREADS if positive,
/// else the hardware concurrency; PERSPEX_THREADS caps either way.
inline unsigned mc_worker_count(unsigned requested = 0) {
  unsigned cap = 0;
  if (const char* env = std::getenv("PERSPEX_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0') cap = static_cast<unsigned>(v);
  }
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  unsigned n = requested > 0 ? requested : (cap > 0 ? cap : hw);
  if (cap > 0) n = std::min(n, cap);
  return std::max(1u, n);
}

inline std::uint64_t mc_count_hits(const BodySpec& spec, std::uint64_t seed,
                                   std::uint64_t first, std::uint64_t last) {
  const double u = spec.interval().upper();
  const double fu = spec.f_upper();
  std::uint64_t hits = 0;
  for (std::uint64_t i = first; i < last; ++i) {
    const double x = u * SplitMix64::uniform(seed, 3 * i);
    const double y = fu * SplitMix64::uniform(seed, 3 * i + 1);
    const double z = SplitMix64::uniform(seed, 3 * i + 2);
    hits += spec.contains(x, y, z) ? 1 : 0;
  }
  return hits;
}

/// Hit-or-miss estimate over the bounding box; bit-identical for a given
/// (seed, samples) whatever the worker count.
inline McEstimate mc_volume(const BodySpec& spec, std::uint64_t samples,
                            std::uint64_t seed, unsigned workers = 0) {
  require(samples >= kMcMinSamples, ErrorKind::DomainError,
          "Monte-Carlo needs at least 10000 samples");
  const double box = spec.box_volume();
  require(std::isfinite(box) && box > 0.0, ErrorKind::DomainError,
          "bounding box must have positive finite volume");

  const std::uint64_t blocks = (samples + kMcBlockSize - 1) / kMcBlockSize;
  const unsigned nw = static_cast<unsigned>(
      std::min<std::uint64_t>(mc_worker_count(workers), blocks));
  std::atomic<std::uint64_t> next{0};
  std::atomic<std::uint64_t> total{0};
  auto work = [&] {
    std::uint64_t local = 0;
    for (std::uint64_t b = next++; b < blocks; b = next++) {
      const std::uint64_t first = b * kMcBlockSize;
      const std::uint64_t last = std::min(samples, first + kMcBlockSize);
      local += mc_count_hits(spec, seed, first, last);
    }
    total += local;
  };
  if (nw <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(nw);
    for (unsigned w = 0; w < nw; ++w) pool.emplace_back(work);
  }

  McEstimate est;
  est.samples = samples;
  est.seed = seed;
  est.hits = total.load();
  est.box_volume = box;
  const double frac = static_cast<double>(est.hits) / static_cast<double>(samples);
  est.mean = box * frac;
  est.std_error = box * std::sqrt(frac * (1.0 - frac) / static_cast<double>(samples));
  return est;
}

/// Closed-form volume of the body when one is available.  PR, NR and E+NR
/// have one only for p = 2.
inline std::optional<double> analytic_reference(const BodySpec& spec) {
  const Interval& iv = spec.interval();
  switch (spec.kind()) {
    case RelaxationKind::PL_PR:
      return volume_pl_perspective(*spec.estimator());
    case RelaxationKind::PL_E_NR:
      return volume_pl_e_nr(*spec.estimator());
    case RelaxationKind::NR:
      if (spec.power()->is_quadratic()) return volume_naive_quadratic(iv);
      return std::nullopt;
    case RelaxationKind::PR:
      if (spec.power()->is_quadratic()) return volume_perspective_quadratic(iv);
      return std::nullopt;
    case RelaxationKind::E_NR:
      if (spec.power()->is_quadratic()) return volume_e_nr_quadratic(iv);
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace perspex
