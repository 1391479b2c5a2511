#pragma once

#include "errors.hpp"
#include "io.hpp"
#include "scenario.hpp"
#include "solver.hpp"
#include "validation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace stfermat {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitParse = 2,
  kExitValidation = 3,
  kExitNoConvergence = 4,
};

struct RunContext {
  std::filesystem::path out_dir = ".";
  bool quiet = false;
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
};

namespace detail {

inline void write_text(const std::filesystem::path& file, const std::string& text)
{
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  out << text;
}

/// Runs the assumption checks and the admissibility gate for every kappa.
inline bool passes_validation(const Scenario& sc, const RunContext& ctx, ValidationReport& report)
{
  report = validate_assumptions(sc.get_model(), sc.validation_region(), sc.samples, sc.solver.rng_seed);
  bool ok = report.ok();
  if (!ok) *ctx.err << "validation: model '" << sc.get_model().name() << "' fails the structural checks\n";
  for (double k : sc.kappas)
    if (!report.admits(k)) {
      *ctx.err << "validation: kappa = " << format_double(k) << " exceeds the admissible bound "
               << format_double(report.kappa_admissible_bound) << '\n';
      ok = false;
    }
  return ok;
}

struct SolveOutcome {
  MultiStartResult result;
  std::vector<std::string> rows;
};

inline SolveOutcome solve_one(const Scenario& sc, double kappa, const ValidationReport& report,
                              const RunContext& ctx, const std::string& prefix)
{
  SolverOptions opts = sc.solver;
  opts.kappa_bound = report.kappa_admissible_bound;
  SolveOutcome o;
  o.result = multi_start(sc.get_model(), sc.p, sc.q, kappa, sc.seeds(), opts);
  for (const auto& f : o.result.failures) *ctx.err << "seed " << f.label << ": " << f.message << '\n';
  for (const auto& r : o.result.unconverged)
    *ctx.err << "seed " << r.seed_label << ": no convergence after " << r.iters
             << " iterations (gradient norm " << format_double(r.gradient_norm) << ")\n";
  for (std::size_t i = 0; i < o.result.records.size(); ++i) {
    const auto& r = o.result.records[i];
    const std::string stem = prefix + "record_" + std::to_string(i);
    write_path_table(ctx.out_dir / (stem + "_path.txt"), r.z_star);
    write_path_table(ctx.out_dir / (stem + "_geodesic.txt"), r.geodesic);
    write_text(ctx.out_dir / (stem + ".json"),
               record_json(r, sc.get_model().name(), kappa, stem + "_path.txt", stem + "_geodesic.txt"));
    o.rows.push_back(summary_row(r, kappa));
  }
  return o;
}

template <class Body>
int guarded(const RunContext& ctx, Body&& body)
{
  try {
    return body();
  } catch (const ParseError& e) {
    *ctx.err << "parse error";
    if (e.line() > 0) *ctx.err << " (line " << e.line() << ")";
    *ctx.err << ": " << e.what() << '\n';
    return kExitParse;
  } catch (const AdmissibilityError& e) {
    *ctx.err << "validation: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    *ctx.err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

} // namespace detail

inline int cmd_validate(const Scenario& sc, const RunContext& ctx)
{
  return detail::guarded(ctx, [&] {
    ValidationReport report;
    const bool ok = detail::passes_validation(sc, ctx, report);
    const std::string text = validation_json(report, sc.get_model().name(), sc.kappas);
    std::filesystem::create_directories(ctx.out_dir);
    detail::write_text(ctx.out_dir / "validation.json", text);
    if (!ctx.quiet) *ctx.out << text;
    return ok ? kExitOk : kExitValidation;
  });
}

inline int cmd_solve(const Scenario& sc, const RunContext& ctx)
{
  return detail::guarded(ctx, [&] {
    if (sc.kappas.size() != 1) throw ParseError("solve takes a single kappa; use sweep for a list");
    ValidationReport report;
    if (!detail::passes_validation(sc, ctx, report)) return static_cast<int>(kExitValidation);
    std::filesystem::create_directories(ctx.out_dir);
    const auto outcome = detail::solve_one(sc, sc.kappas.front(), report, ctx, "");
    std::string csv = std::string(summary_header()) + "\n";
    for (const auto& row : outcome.rows) csv += row + "\n";
    detail::write_text(ctx.out_dir / "summary.csv", csv);
    if (!ctx.quiet) *ctx.out << csv;
    return outcome.rows.empty() ? static_cast<int>(kExitNoConvergence) : static_cast<int>(kExitOk);
  });
}

/// Solves for every kappa and flags winding classes whose arrival time
/// increases with kappa by more than 1e-8.
inline int cmd_sweep(const Scenario& sc, const RunContext& ctx)
{
  return detail::guarded(ctx, [&] {
    ValidationReport report;
    if (!detail::passes_validation(sc, ctx, report)) return static_cast<int>(kExitValidation);
    std::filesystem::create_directories(ctx.out_dir);

    std::vector<double> kappas = sc.kappas;
    std::sort(kappas.begin(), kappas.end());
    kappas.erase(std::unique(kappas.begin(), kappas.end()), kappas.end());

    struct Row {
      double kappa;
      std::vector<long> winding;
      double t;
      std::string text;
    };
    std::vector<Row> rows;
    for (std::size_t j = 0; j < kappas.size(); ++j) {
      const auto outcome = detail::solve_one(sc, kappas[j], report, ctx, "k" + std::to_string(j) + "_");
      for (std::size_t i = 0; i < outcome.rows.size(); ++i)
        rows.push_back({kappas[j], outcome.result.records[i].winding, outcome.result.records[i].arrival_time(),
                        outcome.rows[i]});
    }

    // Best record per (winding, kappa); rows arrive sorted by objective.
    std::map<std::vector<long>, std::vector<const Row*>> classes;
    for (const auto& r : rows) {
      auto& v = classes[r.winding];
      if (v.empty() || v.back()->kappa != r.kappa) v.push_back(&r);
    }
    std::map<const Row*, bool> flagged;
    int violations = 0;
    for (const auto& [w, v] : classes)
      for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i]->t > v[i - 1]->t + 1e-8 * (1.0 + std::abs(v[i - 1]->t))) {
          flagged[v[i]] = true;
          ++violations;
        }

    std::string csv = std::string(summary_header()) + ",monotone_violation\n";
    for (const auto& r : rows) csv += r.text + (flagged.count(&r) ? ",1\n" : ",0\n");
    detail::write_text(ctx.out_dir / "sweep.csv", csv);
    if (!ctx.quiet) *ctx.out << csv;
    if (violations) *ctx.err << "sweep: " << violations << " monotonicity violation(s) in kappa\n";
    return rows.empty() ? static_cast<int>(kExitNoConvergence) : static_cast<int>(kExitOk);
  });
}

/// Dispatches "validate", "solve" or "sweep" on a scenario file.
inline int run_command(const std::string& command, const std::filesystem::path& file, RunContext ctx,
                       std::optional<int> segments = {}, std::optional<std::uint64_t> seed = {},
                       bool out_from_flag = false)
{
  Scenario sc;
  const int parsed = detail::guarded(ctx, [&] {
    sc = load_scenario(file);
    if (segments) {
      sc.solver.segments = *segments;
      try {
        sc.solver.validate();
      } catch (const ArgumentError& e) {
        throw ParseError(e.what());
      }
    }
    if (seed) sc.solver.rng_seed = *seed;
    return static_cast<int>(kExitOk);
  });
  if (parsed != kExitOk) return parsed;
  if (!out_from_flag && !sc.output_dir.empty()) ctx.out_dir = sc.output_dir;
  if (command == "validate") return cmd_validate(sc, ctx);
  if (command == "solve") return cmd_solve(sc, ctx);
  if (command == "sweep") return cmd_sweep(sc, ctx);
  *ctx.err << "unknown command '" << command << "'\n";
  return kExitParse;
}

} // namespace stfermat
