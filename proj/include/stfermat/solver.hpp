#pragma once

#include "arrival.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "path.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace stfermat {

struct SolverOptions {
  int max_iters = 5000;
  double grad_tol = 1e-7;   ///< on the H^1-dual norm of the reduced gradient
  double armijo_c = 1e-4;
  double backtrack_ratio = 0.5;
  double initial_step = 1.0;
  int segments = 200;
  std::uint64_t rng_seed = 0;
  Branch branch = Branch::Plus;
  /// Admissibility bound for kappa (usually from a ValidationReport).
  std::optional<double> kappa_bound;
  /// Number of concurrent multi-start workers; 0 picks the hardware count.
  unsigned workers = 0;

  void validate() const
  {
    if (max_iters < 1) throw ArgumentError("max_iters must be positive");
    if (!(grad_tol > 0.0)) throw ArgumentError("grad_tol must be positive");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw ArgumentError("armijo_c must lie in (0, 1)");
    if (!(backtrack_ratio > 0.0 && backtrack_ratio < 1.0))
      throw ArgumentError("backtrack_ratio must lie in (0, 1)");
    if (!(initial_step > 0.0)) throw ArgumentError("initial_step must be positive");
    if (segments < 2) throw ArgumentError("segments must be at least 2");
  }
};

/// Initial curve prescription: straight lift with `wraps` extra periods per
/// coordinate plus a smooth random perturbation of the interior nodes.
struct SeedSpec {
  std::vector<int> wraps;
  double perturbation = 0.0;
  std::uint64_t stream = 0;
  std::string label = "straight";
};

struct SolutionRecord {
  DiscretePath z_star;
  ArrivalEvaluation arrival;
  DiscretePath geodesic;
  Branch branch = Branch::Plus;
  double objective = 0.0;  ///< t_plus, or -t_minus on the minus branch
  double gradient_norm = 0.0;
  double criticality_residual = 0.0;
  double el_residual = 0.0;
  double energy_dev = 0.0;
  double noether_dev = 0.0;
  std::vector<long> winding;
  int iters = 0;
  bool converged = false;
  std::string seed_label;

  /// Flow time of the selected branch.
  double arrival_time() const { return branch == Branch::Plus ? arrival.t_plus : arrival.t_minus; }
};

/// max over interior nodes of | N (dL/dv|_{i+1} - dL/dv|_i) - dL/dx(y_i, (v_i + v_{i+1}) / 2) |.
inline double el_residual(const StationaryModel& model, const DiscretePath& geodesic)
{
  const int n = geodesic.segments();
  const PathJets pj = compute_jets(model, geodesic);
  double worst = 0.0;
  for (int node = 1; node < n; ++node) {
    const LocalJet& a = pj.jets[node - 1];
    const LocalJet& b = pj.jets[node];
    const TangentVector va = velocity(geodesic, node), vb = velocity(geodesic, node + 1);
    const LocalJet c = model.jet(geodesic.nodes[node].y, 0.5 * (va.nu + vb.nu), 0.5 * (va.tau + vb.tau));
    const Vec ry = n * (b.L_nu - a.L_nu) - c.L_y;
    const double rt = n * (b.L_tau - a.L_tau);
    worst = std::max(worst, std::sqrt(ry.squaredNorm() + rt * rt));
  }
  return worst;
}

struct ConservationReport {
  double energy_dev = 0.0;
  double noether_dev = 0.0;
};

inline ConservationReport conservation_check(const StationaryModel& model, const DiscretePath& geodesic,
                                             double kappa)
{
  ConservationReport r;
  for (int i = 1; i <= geodesic.segments(); ++i)
    r.energy_dev = std::max(r.energy_dev,
                            std::abs(eval_E(model, midpoint(geodesic, i), velocity(geodesic, i)) - kappa));
  r.noether_dev = noether_values(model, geodesic).max_deviation;
  return r;
}

namespace detail {

inline bool same_flow_line(const Point& p, const Point& q, const std::vector<double>& periods)
{
  for (Eigen::Index k = 0; k < p.y.size(); ++k) {
    const double period = static_cast<std::size_t>(k) < periods.size() ? periods[k] : 0.0;
    if (detail::wrap_nearest(q.y[k] - p.y[k], period) != 0.0) return false;
  }
  return true;
}

inline DiscretePath seed_path(const StationaryModel& model, const Point& p, const Point& q,
                              const SeedSpec& seed, const SolverOptions& opts)
{
  DiscretePath path = straight_path(p, q, opts.segments, model.topology().periods, seed.wraps);
  if (seed.perturbation > 0.0) {
    std::seed_seq seq{static_cast<std::uint32_t>(opts.rng_seed), static_cast<std::uint32_t>(opts.rng_seed >> 32),
                      static_cast<std::uint32_t>(seed.stream), static_cast<std::uint32_t>(seed.stream >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> amp(-seed.perturbation, seed.perturbation);
    for (int k = 0; k < model.dim(); ++k)
      for (int mode = 1; mode <= 3; ++mode) {
        const double a = amp(rng) / mode;
        for (int i = 1; i < opts.segments; ++i) {
          const double s = static_cast<double>(i) / opts.segments;
          path.nodes[i].y[k] += a * std::sin(mode * std::numbers::pi * s);
        }
      }
  }
  return path;
}

inline double objective_of(const ArrivalEvaluation& ev, Branch b)
{
  return b == Branch::Plus ? ev.t_plus : -ev.t_minus;
}

} // namespace detail

/// Projected H^1-gradient descent with Armijo backtracking for t_plus (or
/// -t_minus) over the constant-charge paths from p to q.
inline SolutionRecord minimize_arrival(const StationaryModel& model, const Point& p, const Point& q,
                                       double kappa, const std::variant<DiscretePath, SeedSpec>& init,
                                       const SolverOptions& opts)
{
  opts.validate();
  if (p.y.size() != model.dim() || q.y.size() != model.dim())
    throw ArgumentError("endpoint dimension does not match the model");
  if (opts.kappa_bound && kappa > *opts.kappa_bound)
    throw AdmissibilityError("kappa = " + format_double(kappa) + " exceeds the admissible bound " +
                             format_double(*opts.kappa_bound));

  DiscretePath start;
  if (const auto* seed = std::get_if<SeedSpec>(&init)) {
    const bool wraps = std::any_of(seed->wraps.begin(), seed->wraps.end(), [](int w) { return w != 0; });
    if (!wraps && detail::same_flow_line(p, q, model.topology().periods))
      throw ArgumentError("p and q lie on the same flow line of K");
    start = detail::seed_path(model, p, q, *seed, opts);
  } else {
    start = std::get<DiscretePath>(init);
    if (start.segments() < 2) throw ArgumentError("initial path needs at least two segments");
    if (start.start().y != p.y || start.start().t != p.t || start.end().y != q.y || start.end().t != q.t)
      throw ArgumentError("initial path does not join p and q");
    if (winding(start) == std::vector<long>(model.dim(), 0) &&
        detail::same_flow_line(p, q, model.topology().periods))
      throw ArgumentError("p and q lie on the same flow line of K");
  }

  const Branch branch = opts.branch;
  const double sign = branch == Branch::Plus ? 1.0 : -1.0;
  DiscretePath z = project_to_N(model, start);
  const int n = z.segments();

  SolutionRecord rec;
  rec.branch = branch;
  ArrivalEvaluation ev = detail::checked_arrival(model, z, kappa);
  double f = detail::objective_of(ev, branch);
  double alpha = opts.initial_step;
  const double alpha_min = 1e-14 * opts.initial_step;
  const double alpha_max = 1e6 * opts.initial_step;

  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    const PathJets pj = compute_jets(model, z);
    NodalCovector g = arrival_covector(model, z, ev, branch, &pj);
    if (branch == Branch::Minus)
      for (auto& gj : g) gj = -gj;
    const std::vector<Vec> dir = h1_riesz(n, g);
    const double noise = 1e-14 * (1.0 + std::abs(f));
    CompensatedSum g2acc;
    for (int j = 0; j < n - 1; ++j) g2acc.add(g[j].dot(dir[j]));
    const double g2 = std::max(g2acc.value(), 0.0);
    rec.gradient_norm = std::sqrt(g2);
    if (rec.gradient_norm <= opts.grad_tol) {
      rec.converged = true;
      break;
    }

    bool accepted = false;
    while (alpha >= alpha_min) {
      DiscretePath trial = z;
      for (int j = 1; j < n; ++j) trial.nodes[j].y -= alpha * dir[j - 1];
      trial = project_to_N(model, trial);
      try {
        const ArrivalEvaluation tev = arrival_times(model, trial, kappa);
        const double ft = detail::objective_of(tev, branch);
        bool ok = tev.branch_valid && ft <= f - opts.armijo_c * alpha * g2;
        // Near the minimiser the predicted decrease drops below the rounding
        // noise of f; fall back to the approximate Wolfe test on slopes.
        if (!ok && tev.branch_valid && ft <= f + noise) {
          NodalCovector gt = arrival_covector(model, trial, tev, branch);
          CompensatedSum slope;
          for (int j = 0; j < n - 1; ++j) slope.add(-sign * gt[j].dot(dir[j]));
          ok = slope.value() >= -0.9 * g2 && slope.value() <= 0.0;
        }
        if (ok) {
          if (!(ft <= f + noise)) throw std::logic_error("minimize_arrival: accepted step increased the objective");
          z = std::move(trial);
          ev = tev;
          f = ft;
          accepted = true;
        }
      } catch (const AdmissibilityError&) {
      } catch (const PreconditionError&) {
      }
      if (accepted) break;
      alpha *= opts.backtrack_ratio;
    }
    if (!accepted) break;
    alpha = std::min(alpha / opts.backtrack_ratio, alpha_max);
  }

  rec.iters = iter;
  rec.z_star = z;
  rec.arrival = ev;
  rec.objective = f;
  rec.geodesic = apply_flow(z, rec.arrival_time());
  rec.el_residual = el_residual(model, rec.geodesic);
  const ConservationReport cons = conservation_check(model, rec.geodesic, kappa);
  rec.energy_dev = cons.energy_dev;
  rec.noether_dev = cons.noether_dev;
  rec.criticality_residual = criticality(model, z, kappa, branch).residual;
  rec.winding = winding(z);
  if (const auto* seed = std::get_if<SeedSpec>(&init)) rec.seed_label = seed->label;
  else rec.seed_label = "path";
  return rec;
}

struct SeedFailure {
  std::string label;
  std::string message;
};

struct MultiStartResult {
  std::vector<SolutionRecord> records;      ///< converged, deduplicated, sorted by objective
  std::vector<SolutionRecord> unconverged;
  std::vector<SeedFailure> failures;
};

/// One seed per k with k extra wraps on coordinate `coord` (default: the first
/// periodic one).
inline std::vector<SeedSpec> winding_seeds(const StationaryModel& model, const std::vector<int>& ks,
                                           int coord = -1)
{
  const auto& periods = model.topology().periods;
  if (coord < 0) {
    for (int k = 0; k < model.dim(); ++k)
      if (periods[k] != 0.0) {
        coord = k;
        break;
      }
  }
  if (coord < 0 || coord >= model.dim() || periods[coord] == 0.0)
    throw ArgumentError("winding seeds need a periodic coordinate; model '" + model.name() + "' has none");
  std::vector<SeedSpec> seeds;
  for (int k : ks) {
    SeedSpec s;
    s.wraps.assign(model.dim(), 0);
    s.wraps[coord] = k;
    s.label = "wind" + std::to_string(k);
    seeds.push_back(s);
  }
  return seeds;
}

inline std::vector<SeedSpec> random_seeds(int count, double amplitude, std::uint64_t first_stream = 1)
{
  std::vector<SeedSpec> seeds;
  for (int i = 0; i < count; ++i) {
    SeedSpec s;
    s.perturbation = amplitude;
    s.stream = first_stream + static_cast<std::uint64_t>(i);
    s.label = "random" + std::to_string(i);
    seeds.push_back(s);
  }
  return seeds;
}

/// Runs minimize_arrival from every seed (concurrently), then merges converged
/// records with equal winding whose arrival times agree within 1e-5, keeping
/// the one with the smaller Euler-Lagrange residual.
inline MultiStartResult multi_start(const StationaryModel& model, const Point& p, const Point& q,
                                    double kappa, const std::vector<SeedSpec>& seeds,
                                    const SolverOptions& opts)
{
  struct Slot {
    std::optional<SolutionRecord> record;
    std::optional<SeedFailure> failure;
  };
  std::vector<Slot> slots(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        slots[i].record = minimize_arrival(model, p, q, kappa, seeds[i], opts);
      } catch (const std::exception& e) {
        slots[i].failure = SeedFailure{seeds[i].label, e.what()};
      }
    }
  };
  unsigned nworkers = opts.workers ? opts.workers : std::max(1u, std::thread::hardware_concurrency());
  nworkers = std::min<unsigned>(nworkers, static_cast<unsigned>(std::max<std::size_t>(seeds.size(), 1)));
  if (nworkers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < nworkers; ++w) pool.emplace_back(worker);
  }

  MultiStartResult out;
  std::vector<SolutionRecord> converged;
  for (auto& s : slots) {
    if (s.failure) out.failures.push_back(*s.failure);
    else if (s.record->converged) converged.push_back(std::move(*s.record));
    else out.unconverged.push_back(std::move(*s.record));
  }
  auto order = [](const SolutionRecord& a, const SolutionRecord& b) {
    if (a.objective != b.objective) return a.objective < b.objective;
    if (a.el_residual != b.el_residual) return a.el_residual < b.el_residual;
    return a.seed_label < b.seed_label;
  };
  std::sort(converged.begin(), converged.end(), order);
  for (auto& rec : converged) {
    auto same = std::find_if(out.records.begin(), out.records.end(), [&](const SolutionRecord& r) {
      return r.winding == rec.winding && std::abs(r.arrival_time() - rec.arrival_time()) <= 1e-5;
    });
    if (same == out.records.end()) out.records.push_back(std::move(rec));
    else if (rec.el_residual < same->el_residual) *same = std::move(rec);
  }
  std::sort(out.records.begin(), out.records.end(), order);
  return out;
}

} // namespace stfermat
