#pragma once

#include "errors.hpp"
#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>

namespace stfermat {

/// Axis-aligned box in the spatial slice.
struct Box {
  Vec lo, hi;
};

/// Sampled evidence for the structural assumptions on a model.
struct ValidationReport {
  bool qk_check = false;          ///< Q(K) = -1
  double convexity_margin = 0.0;  ///< min sampled monotonicity quotient of dL_c/dv
  bool growth_ok = false;         ///< all growth quotients finite on the samples
  double growth_constant = 0.0;   ///< largest sampled growth quotient (estimate of C)
  double supL0_at_zero = 0.0;     ///< max sampled L(x, 0)
  double kappa_admissible_bound = 0.0;  ///< -supL0_at_zero
  bool energy_bound_ok = false;   ///< E + Q^2/2 >= kappa_admissible_bound on all samples
  bool linearity_ok = false;      ///< omega_y linear in nu on the samples
  bool homogeneity_ok = true;     ///< L0 2-homogeneous on the samples (when flagged)
  std::int64_t cone_samples = 0;  ///< causal-cone consistency tests passed
  std::int64_t samples = 0;

  bool ok() const
  {
    return qk_check && convexity_margin > 0.0 && growth_ok && energy_bound_ok && linearity_ok &&
           homogeneity_ok;
  }

  bool admits(double kappa) const { return kappa <= kappa_admissible_bound; }
};

/// Samples `samples` random triples (y, v1, v2) with y in `region` and the
/// velocity components uniform in [-2, 2].
inline ValidationReport validate_assumptions(const StationaryModel& model, const Box& region,
                                             std::int64_t samples, std::uint64_t rng_seed)
{
  const int m = model.dim();
  if (samples < 1) throw ArgumentError("validate_assumptions: samples must be >= 1");
  if (region.lo.size() != m || region.hi.size() != m)
    throw ArgumentError("validate_assumptions: region dimension does not match the model");
  for (int k = 0; k < m; ++k)
    if (!(region.lo[k] <= region.hi[k]))
      throw ArgumentError("validate_assumptions: empty region");

  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };

  ValidationReport r;
  r.samples = samples;
  r.convexity_margin = std::numeric_limits<double>::infinity();
  r.supL0_at_zero = -std::numeric_limits<double>::infinity();
  r.growth_ok = true;
  r.energy_bound_ok = true;
  r.linearity_ok = true;
  const bool cone_defined = model.homogeneous() && model.linear_charge();

  struct Sample {
    Point x;
    TangentVector v;
  };
  std::vector<Sample> drawn;
  drawn.reserve(static_cast<std::size_t>(samples));

  for (std::int64_t s = 0; s < samples; ++s) {
    Point x{Vec(m), 0.0};
    for (int k = 0; k < m; ++k) x.y[k] = uniform(region.lo[k], region.hi[k]);
    x.t = uniform(-1.0, 1.0);
    TangentVector v1{Vec(m), uniform(-2.0, 2.0)}, v2{Vec(m), uniform(-2.0, 2.0)};
    for (int k = 0; k < m; ++k) {
      v1.nu[k] = uniform(-2.0, 2.0);
      v2.nu[k] = uniform(-2.0, 2.0);
    }

    r.supL0_at_zero = std::max(r.supL0_at_zero, eval_L(model, x, {Vec::Zero(m), 0.0}));

    // Monotonicity of dL_c/dv, with dL_c/dv = dL/dv + 2 Q(v) dQ/dv.
    const LocalJet j1 = model.jet(x.y, v1.nu, v1.tau);
    const LocalJet j2 = model.jet(x.y, v2.nu, v2.tau);
    const Vec dnu = v2.nu - v1.nu;
    const double dtau = v2.tau - v1.tau;
    const Vec p1 = j1.L_nu + 2.0 * j1.Q * j1.w, p2 = j2.L_nu + 2.0 * j2.Q * j2.w;
    const double p1t = j1.L_tau - 2.0 * j1.Q, p2t = j2.L_tau - 2.0 * j2.Q;
    const double dist2 = dnu.squaredNorm() + dtau * dtau;
    if (dist2 > 0.0)
      r.convexity_margin =
          std::min(r.convexity_margin, ((p2 - p1).dot(dnu) + (p2t - p1t) * dtau) / dist2);

    for (const auto* pj : {&j1, &j2}) {
      const auto& j = *pj;
      const TangentVector& v = pj == &j1 ? v1 : v2;
      const double n2 = v.nu.squaredNorm() + v.tau * v.tau;
      const double Lc = j.L + j.Q * j.Q;
      const Vec Lc_x = j.L_y + 2.0 * j.Q * j.omega_y;
      const Vec Lc_nu = j.L_nu + 2.0 * j.Q * j.w;
      const double Lc_tau = j.L_tau - 2.0 * j.Q;
      const double q1 = Lc / (n2 + 1.0);
      const double q2 = Lc_x.norm() / (n2 + 1.0);
      const double q3 = std::sqrt(Lc_nu.squaredNorm() + Lc_tau * Lc_tau) / (std::sqrt(n2) + 1.0);
      if (!std::isfinite(q1) || !std::isfinite(q2) || !std::isfinite(q3)) r.growth_ok = false;
      else r.growth_constant = std::max({r.growth_constant, q1, q2, q3});
    }

    // omega_y(a v1 + b v2) = a omega_y(v1) + b omega_y(v2)
    const double a = uniform(-3.0, 3.0), b = uniform(-3.0, 3.0);
    const double lhs = model.omega(x.y, a * v1.nu + b * v2.nu);
    const double rhs = a * model.omega(x.y, v1.nu) + b * model.omega(x.y, v2.nu);
    if (std::abs(lhs - rhs) > 1e-10 * (1.0 + std::abs(lhs) + std::abs(rhs))) r.linearity_ok = false;

    if (model.homogeneous()) {
      const double lam = uniform(0.1, 5.0);
      const double l1 = model.L0(x.y, v1.nu);
      const double l2 = model.L0(x.y, lam * v1.nu);
      if (std::abs(l2 - lam * lam * l1) > 1e-9 * (1.0 + std::abs(l2))) r.homogeneity_ok = false;
    }

    if (cone_defined) {
      // A vector on or above the cone boundary must be causal, have L <= 0 and Q <= 0.
      TangentVector c{v1.nu, 0.0};
      const double w = model.omega(x.y, c.nu);
      c.tau = w + std::sqrt(std::max(w * w + 2.0 * model.L0(x.y, c.nu), 0.0)) +
              (s % 2 == 0 ? 0.0 : uniform(0.0, 2.0));
      const double scale = 1.0 + c.nu.squaredNorm() + c.tau * c.tau;
      if (is_causal(model, x, c) && eval_L(model, x, c) <= 1e-12 * scale &&
          eval_Q(model, x, c) <= 1e-12 * scale)
        ++r.cone_samples;
    }
    drawn.push_back({x, v1});
    drawn.push_back({x, v2});
  }

  r.kappa_admissible_bound = 0.0 - r.supL0_at_zero;
  for (const auto& [x, v] : drawn) {
    const double q = eval_Q(model, x, v);
    if (eval_E(model, x, v) + 0.5 * q * q < r.kappa_admissible_bound - 1e-12) r.energy_bound_ok = false;
  }
  r.qk_check = eval_Q(model, drawn.front().x, {Vec::Zero(m), 1.0}) == -1.0;
  return r;
}

} // namespace stfermat
