// Copyright 2026 The perspex Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: volume, optimize, sweep, compare, mc.
//
// Reports are built as ordered JSON objects and rendered either as one JSON
// line or as CSV (header row plus one row per record).  Exit status is 0 on
// success, 2 for bad input and 3 when the solver does not converge; errors
// go to the error stream as {"error": kind, "message": text}.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "perspex/errors.hpp"
#include "perspex/mc_oracle.hpp"
#include "perspex/pl_core.hpp"
#include "perspex/placement_optimizer.hpp"
#include "perspex/power_analytics.hpp"

namespace perspex::cli {

using Json = nlohmann::ordered_json;

enum class Format { Json, Csv };

struct RunConfig {
  std::string subcommand;
  double p = 2.0;
  double l = 0.0;
  double u = 1.0;
  std::vector<double> xi;       // --xi, interior or full list
  std::optional<int> equal;     // --equal n
  std::optional<int> n;         // --n (optimize, sweep, compare)
  std::string relax = "plpr";
  double tol = 0.0;
  int max_iter = 200;
  std::uint64_t seed = 0;
  std::uint64_t samples = 1000000;
  bool samples_given = false;
  bool check = false;
  double phi = 1e-3;
  std::vector<double> grid;
  Format format = Format::Json;
  std::string out;
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MaxIterExceeded:
    case ErrorKind::MonotonicityViolated:
    case ErrorKind::SingularJacobian:
      return 3;
    default:
      return 2;
  }
}

inline RelaxationKind parse_relax(std::string_view s) {
  if (s == "plpr") return RelaxationKind::PL_PR;
  if (s == "nr") return RelaxationKind::NR;
  if (s == "pr") return RelaxationKind::PR;
  if (s == "enr") return RelaxationKind::E_NR;
  if (s == "plenr") return RelaxationKind::PL_E_NR;
  fail(ErrorKind::DomainError, "unknown relaxation '" + std::string(s) + "'");
}

/// Shortest decimal that reads back to the same double.
inline std::string format_double(double v) { return to_text(v); }

/// Whole number given as "100000" or "1e5".
inline std::uint64_t parse_count(std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  require(res.ec == std::errc() && res.ptr == text.data() + text.size() &&
              std::isfinite(v) && v >= 0.0 && v <= 9007199254740992.0 &&
              v == std::floor(v),
          ErrorKind::DomainError,
          "expected a whole number, got '" + std::string(text) + "'");
  return static_cast<std::uint64_t>(v);
}

inline Json to_json(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

/// Breakpoints from --xi (interior points or the full list) or --equal.
inline std::optional<Breakpoints> breakpoints_from(const RunConfig& cfg,
                                                   const Interval& iv) {
  require(cfg.xi.empty() || !cfg.equal, ErrorKind::DomainError,
          "--xi and --equal are mutually exclusive");
  if (cfg.equal) return Breakpoints::equally_spaced(iv, *cfg.equal);
  if (cfg.xi.empty()) return std::nullopt;
  const bool full = cfg.xi.front() == iv.lower() || cfg.xi.back() == iv.upper();
  if (full) {
    require(cfg.xi.size() >= 2 && cfg.xi.front() == iv.lower() &&
                cfg.xi.back() == iv.upper(),
            ErrorKind::DomainError,
            "a full --xi list must start at --l and end at --u exactly");
    return Breakpoints(iv, cfg.xi);
  }
  return Breakpoints::from_interior(iv, cfg.xi);
}

inline Json inputs_json(const RunConfig& cfg) {
  Json j;
  j["p"] = cfg.p;
  j["l"] = cfg.l;
  j["u"] = cfg.u;
  return j;
}

inline Json mc_json(const McEstimate& est, const std::optional<double>& ref,
                    bool check) {
  Json j;
  j["mean"] = est.mean;
  j["stderr"] = est.std_error;
  j["samples"] = est.samples;
  j["seed"] = est.seed;
  j["hits"] = est.hits;
  j["box_volume"] = est.box_volume;
  j["analytic_reference"] = ref.has_value();
  if (ref) {
    j["analytic"] = *ref;
    if (check) j["z_score"] = std::abs(*ref - est.mean) / est.std_error;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Report builders
// ---------------------------------------------------------------------------

inline Json cmd_volume(const RunConfig& cfg) {
  const Interval iv(cfg.l, cfg.u);
  const PowerFn pf(cfg.p, iv);
  const RelaxationKind kind = parse_relax(cfg.relax);
  const auto bp = breakpoints_from(cfg, iv);

  Json r;
  r["command"] = "volume";
  r.update(inputs_json(cfg));
  r["relax"] = to_string(kind);
  if (uses_breakpoints(kind)) {
    require(bp.has_value(), ErrorKind::DomainError,
            std::string(to_string(kind)) + " needs --xi or --equal");
    r["n"] = bp->segments();
    r["xi"] = to_json(bp->xi());
    const PLUnderEstimator est = build_under_estimator(make_oracle(pf), *bp);
    if (kind == RelaxationKind::PL_PR) {
      r["volume"] = volume_pl_perspective(est);
      r["triangle_areas"] = to_json(triangle_areas(est));
      if (bp->segments() >= 2) {
        r["gradient_inf_norm"] = gradient_volume(pf, *bp).gradient_inf_norm();
      }
    } else {
      r["volume"] = volume_pl_e_nr(pf, *bp);
    }
  } else {
    require(!bp.has_value(), ErrorKind::DomainError,
            std::string(to_string(kind)) + " takes no breakpoints");
    require(pf.is_quadratic(), ErrorKind::DomainError,
            std::string(to_string(kind)) + " volume has a closed form only for p = 2");
    const auto ref = analytic_reference(BodySpec::make(kind, pf));
    r["volume"] = *ref;
  }
  if (cfg.samples_given) {
    const BodySpec body = BodySpec::make(kind, pf, bp);
    r["mc"] = mc_json(mc_volume(body, cfg.samples, cfg.seed),
                      r["volume"].get<double>(), true);
  }
  return r;
}

inline Json cmd_optimize(const RunConfig& cfg) {
  const Interval iv(cfg.l, cfg.u);
  const PowerFn pf(cfg.p, iv);
  require(cfg.n.has_value(), ErrorKind::DomainError, "optimize needs --n");
  const int n = *cfg.n;
  require(n >= 1, ErrorKind::DomainError, "--n must be >= 1");

  Json r;
  r["command"] = "optimize";
  r.update(inputs_json(cfg));
  r["n"] = n;
  if (pf.is_quadratic() || n == 1) {
    const Breakpoints bp = Breakpoints::equally_spaced(iv, n);
    r["xi"] = to_json(bp.xi());
    r["volume"] = pf.is_quadratic() ? optimize_quadratic(iv, n).second
                                    : volume_power_closed_form(pf, bp);
    r["iterations"] = 0;
    r["direction"] = to_string(NewtonDirection::StationaryAtStart);
    r["residual_norm"] = 0.0;
    return r;
  }
  NewtonOptions opts;
  opts.tol = cfg.tol;
  opts.max_iter = cfg.max_iter;
  const NewtonResult res = newton_optimize(pf, n, opts);
  r["xi"] = to_json(res.xi.xi());
  r["volume"] = volume_power_closed_form(pf, res.xi);
  r["iterations"] = res.trace.steps();
  r["direction"] = to_string(res.trace.direction);
  r["residual_norm"] = res.trace.residual_norms.back();
  r["residual_history"] = to_json(res.trace.residual_norms);
  r["dominance_margin"] = to_json(res.trace.dominance_margin);
  return r;
}

/// One record per p; each is {"p": p, "xi_1": ..., ..., "xi_{n-1}": ...}.
inline Json cmd_sweep(const RunConfig& cfg) {
  const Interval iv(cfg.l, cfg.u);
  require(cfg.n.has_value() && *cfg.n >= 2, ErrorKind::DomainError,
          "sweep needs --n >= 2");
  require(!cfg.grid.empty(), ErrorKind::DomainError, "sweep needs --grid");
  NewtonOptions opts;
  opts.tol = cfg.tol;
  opts.max_iter = cfg.max_iter;
  const SweepTable t = sweep_optimal_points(iv, *cfg.n, cfg.grid, opts);
  Json rows = Json::array();
  for (std::size_t k = 0; k < t.p.size(); ++k) {
    Json row;
    row["p"] = t.p[k];
    for (std::size_t j = 0; j < t.interior[k].size(); ++j) {
      row["xi_" + std::to_string(j + 1)] = t.interior[k][j];
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json cmd_compare(const RunConfig& cfg) {
  const Interval iv(cfg.l, cfg.u);
  const PhiThresholds th = phi_thresholds(iv, cfg.phi);
  const int n = cfg.n.value_or(2);
  require(n >= 1, ErrorKind::DomainError, "--n must be >= 1");
  const Breakpoints bp = Breakpoints::equally_spaced(iv, n);

  Json r;
  r["command"] = "compare";
  r["l"] = cfg.l;
  r["u"] = cfg.u;
  r["phi"] = cfg.phi;
  r["n1"] = th.n1;
  r["n2"] = th.n2;
  r["bound1"] = th.bound1;
  r["bound2"] = th.bound2;
  r["ratio"] = th.ratio;
  r["n"] = n;
  Json table;
  table["PR"] = volume_perspective_quadratic(iv);
  table["PL+PR"] = volume_quadratic(bp);
  table["NR"] = volume_naive_quadratic(iv);
  table["E+NR"] = volume_e_nr_quadratic(iv);
  table["PL+E+NR"] = volume_pl_e_nr(PowerFn(2.0, iv), bp);
  r["volumes"] = std::move(table);
  return r;
}

inline Json cmd_mc(const RunConfig& cfg) {
  const Interval iv(cfg.l, cfg.u);
  const PowerFn pf(cfg.p, iv);
  const RelaxationKind kind = parse_relax(cfg.relax);
  const auto bp = breakpoints_from(cfg, iv);
  require(uses_breakpoints(kind) || !bp.has_value(), ErrorKind::DomainError,
          std::string(to_string(kind)) + " takes no breakpoints");
  const BodySpec body = BodySpec::make(kind, pf, bp);

  Json r;
  r["command"] = "mc";
  r.update(inputs_json(cfg));
  r["relax"] = to_string(kind);
  if (bp) r["xi"] = to_json(bp->xi());
  r.update(mc_json(mc_volume(body, cfg.samples, cfg.seed),
                   analytic_reference(body), cfg.check));
  return r;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace detail {

inline void flatten(const Json& j, const std::string& prefix,
                    std::vector<std::pair<std::string, std::string>>& cells) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      flatten(v, prefix.empty() ? k : prefix + "." + k, cells);
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      flatten(j[i], prefix + "_" + std::to_string(i), cells);
    }
  } else if (j.is_number_float()) {
    cells.emplace_back(prefix, format_double(j.get<double>()));
  } else if (j.is_string()) {
    cells.emplace_back(prefix, j.get<std::string>());
  } else {
    cells.emplace_back(prefix, j.dump());
  }
}

}  // namespace detail

/// CSV: header from the first record's flattened keys, one row per record.
inline std::string render_csv(const Json& report) {
  std::vector<Json> records;
  if (report.is_array()) {
    records.assign(report.begin(), report.end());
  } else {
    records.push_back(report);
  }
  std::ostringstream os;
  for (std::size_t r = 0; r < records.size(); ++r) {
    std::vector<std::pair<std::string, std::string>> cells;
    detail::flatten(records[r], "", cells);
    if (r == 0) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        os << (c ? "," : "") << cells[c].first;
      }
      os << '\n';
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      os << (c ? "," : "") << cells[c].second;
    }
    os << '\n';
  }
  return os.str();
}

inline std::string render(const Json& report, Format fmt) {
  if (fmt == Format::Csv) return render_csv(report);
  return report.dump() + "\n";
}

inline void print_error(std::ostream& err, std::string_view kind,
                        std::string_view message) {
  Json e;
  e["error"] = kind;
  e["message"] = message;
  err << e.dump() << '\n';
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out,
               std::ostream& err) {
  RunConfig cfg;
  std::string format = "json";
  std::string samples_text;

  CLI::App app("Tightness of perspective relaxations built on piecewise-linear "
               "under-estimators");
  app.require_subcommand(1);

  auto add_function = [&](CLI::App* sub, bool with_p) {
    if (with_p) {
      sub->add_option("--p", cfg.p, "exponent of f(x) = x^p (p > 1)")->required();
    }
    sub->add_option("--l", cfg.l, "interval lower bound (>= 0)");
    sub->add_option("--u", cfg.u, "interval upper bound (> l)");
  };
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("--format", format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--out", cfg.out, "write the report here instead of stdout");
  };
  auto add_breakpoints = [&](CLI::App* sub) {
    auto* xi = sub->add_option("--xi", cfg.xi,
                               "comma-separated breakpoints (interior or full list)")
                   ->delimiter(',');
    auto* eq = sub->add_option("--equal", cfg.equal, "n equally spaced segments");
    xi->excludes(eq);
  };
  auto add_relax = [&](CLI::App* sub) {
    sub->add_option("--relax", cfg.relax, "plpr, nr, pr, enr or plenr")
        ->check(CLI::IsMember({"plpr", "nr", "pr", "enr", "plenr"}));
  };
  auto add_solver = [&](CLI::App* sub) {
    sub->add_option("--tol", cfg.tol, "Newton residual tolerance (0: default)");
    sub->add_option("--max-iter", cfg.max_iter, "Newton iteration cap");
  };
  auto add_mc = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "Monte-Carlo seed");
    sub->add_option("--samples", samples_text, "Monte-Carlo sample count (1e6 style ok)");
  };

  auto* volume = app.add_subcommand("volume", "volume of one relaxation");
  add_function(volume, true);
  add_breakpoints(volume);
  add_relax(volume);
  add_mc(volume);
  add_output(volume);

  auto* optimize = app.add_subcommand("optimize", "volume-minimizing breakpoints");
  add_function(optimize, true);
  optimize->add_option("--n", cfg.n, "number of segments")->required();
  add_solver(optimize);
  add_output(optimize);

  auto* sweep = app.add_subcommand("sweep", "optimal breakpoints across p");
  add_function(sweep, false);
  sweep->add_option("--n", cfg.n, "number of segments")->required();
  sweep->add_option("--grid", cfg.grid, "comma-separated p values")
      ->delimiter(',')
      ->required();
  add_solver(sweep);
  add_output(sweep);

  auto* compare = app.add_subcommand("compare", "x^2 relaxations and phi thresholds");
  compare->add_option("--l", cfg.l, "interval lower bound (>= 0)");
  compare->add_option("--u", cfg.u, "interval upper bound (> l)");
  compare->add_option("--phi", cfg.phi, "target volume gap");
  compare->add_option("--n", cfg.n, "segments for the PL columns (default 2)");
  add_output(compare);

  auto* mc = app.add_subcommand("mc", "Monte-Carlo volume estimate");
  add_function(mc, true);
  add_breakpoints(mc);
  add_relax(mc);
  add_mc(mc);
  mc->add_flag("--check", cfg.check, "report |analytic - mc| / stderr");
  add_output(mc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, "UsageError", e.what());
    return 2;
  }

  cfg.format = format == "csv" ? Format::Csv : Format::Json;
  cfg.samples_given = volume->count("--samples") > 0;
  try {
    if (!samples_text.empty()) cfg.samples = parse_count(samples_text);
    Json report;
    if (*volume) {
      cfg.subcommand = "volume";
      report = cmd_volume(cfg);
    } else if (*optimize) {
      cfg.subcommand = "optimize";
      report = cmd_optimize(cfg);
    } else if (*sweep) {
      cfg.subcommand = "sweep";
      report = cmd_sweep(cfg);
    } else if (*compare) {
      cfg.subcommand = "compare";
      report = cmd_compare(cfg);
    } else {
      cfg.subcommand = "mc";
      report = cmd_mc(cfg);
    }
    const std::string text = render(report, cfg.format);
    if (cfg.out.empty()) {
      out << text;
    } else {
      std::ofstream file(cfg.out, std::ios::binary);
      require(static_cast<bool>(file), ErrorKind::DomainError,
              "cannot open " + cfg.out + " for writing");
      file << text;
      require(static_cast<bool>(file), ErrorKind::DomainError,
              "failed writing " + cfg.out);
    }
    return 0;
  } catch (const Error& e) {
    print_error(err, to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    print_error(err, "DomainError", e.what());
    return 2;
  }
}

}  // namespace perspex::cli
