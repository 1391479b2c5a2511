#pragma once

#include "errors.hpp"
#include "model.hpp"
#include "path.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace stfermat {

/// The two flow times carrying a constant-charge path to energy kappa.
struct ArrivalEvaluation {
  double t_plus = 0.0;
  double t_minus = 0.0;
  double S = 0.0;       ///< sqrt(Q_bar^2 + 2 (E_val - kappa))
  double Q_bar = 0.0;   ///< integral of Q(z') (the constant charge when d == 0)
  double E_val = 0.0;   ///< energy functional
  double kappa = 0.0;
  bool branch_valid = false;
};

enum class Branch { Plus, Minus };

inline const char* to_string(Branch b) { return b == Branch::Plus ? "plus" : "minus"; }

/// Integral of the linear charge Q(z') over [0, 1].
inline double Q_functional(const StationaryModel& model, const DiscretePath& path)
{
  CompensatedSum acc;
  for (int i = 1; i <= path.segments(); ++i)
    acc.add(eval_Q(model, midpoint(path, i), velocity(path, i)));
  return acc.value() / path.segments();
}

/// Integral of the affine offset d(z) over [0, 1].
inline double D_functional(const StationaryModel& model, const DiscretePath& path)
{
  CompensatedSum acc;
  for (int i = 1; i <= path.segments(); ++i) acc.add(model.d_offset(midpoint(path, i).y));
  return acc.value() / path.segments();
}

/// t_pm = Q_bar +- sqrt(Q_bar^2 + 2 (E - kappa)) on a constant-charge path.
/// `kappa_bound`, when given, is the admissibility bound -sup L(x, 0).
inline ArrivalEvaluation arrival_times(const StationaryModel& model, const DiscretePath& path,
                                       double kappa, std::optional<double> kappa_bound = {})
{
  check_in_constraint_set(model, path, "arrival_times");
  if (kappa_bound && kappa > *kappa_bound)
    throw AdmissibilityError("kappa = " + format_double(kappa) + " exceeds the admissible bound " +
                             format_double(*kappa_bound));
  ArrivalEvaluation ev;
  ev.kappa = kappa;
  ev.Q_bar = Q_functional(model, path);
  ev.E_val = energy_integral(model, path);
  const double s2 = ev.Q_bar * ev.Q_bar + 2.0 * (ev.E_val - kappa);
  const double eps = 1e-12 * (1.0 + std::abs(ev.E_val));
  if (s2 < -eps)
    throw AdmissibilityError("arrival_times: Q^2 + 2(E - kappa) = " + format_double(s2) +
                             " < 0; kappa too large or path degenerate");
  ev.S = std::sqrt(std::max(s2, 0.0));
  ev.branch_valid = s2 > eps;
  ev.t_plus = ev.Q_bar + ev.S;
  ev.t_minus = ev.Q_bar - ev.S;
  return ev;
}

/// Integral of L(z, z' + t K) by direct quadrature.
inline double H_functional(const StationaryModel& model, const DiscretePath& path, double t)
{
  CompensatedSum acc;
  for (int i = 1; i <= path.segments(); ++i)
    acc.add(eval_L(model, midpoint(path, i), shift_by_flow(velocity(path, i), t)));
  return acc.value() / path.segments();
}

/// The same value through the splitting L(z) + t N_bar - t^2 / 2, with N_bar
/// the mean Noether charge (Q_bar when d == 0).
inline double H_functional_split(const StationaryModel& model, const DiscretePath& path, double t)
{
  return action(model, path) + t * noether_values(model, path).mean - 0.5 * t * t;
}

/// Partials (f_y, f_nu, f_tau) of the integrand of (1/N) sum_i f(mid_i, nu_i, tau_i).
struct SegmentSensitivity {
  std::vector<Vec> f_y, f_nu;
  std::vector<double> f_tau;

  explicit SegmentSensitivity(int segments = 0) : f_y(segments), f_nu(segments), f_tau(segments, 0.0) {}

  SegmentSensitivity& axpy(double a, const SegmentSensitivity& x)
  {
    for (std::size_t i = 0; i < f_tau.size(); ++i) {
      f_y[i] += a * x.f_y[i];
      f_nu[i] += a * x.f_nu[i];
      f_tau[i] += a * x.f_tau[i];
    }
    return *this;
  }
};

/// Covector on the interior spatial nodes (entry j belongs to node j + 1).
using NodalCovector = std::vector<Vec>;

/// Model jets at every segment of a path.
struct PathJets {
  int segments = 0;
  std::vector<LocalJet> jets;
};

inline PathJets compute_jets(const StationaryModel& model, const DiscretePath& path)
{
  PathJets pj;
  pj.segments = path.segments();
  pj.jets.reserve(pj.segments);
  for (int i = 1; i <= pj.segments; ++i) {
    const Point mid = midpoint(path, i);
    const TangentVector v = velocity(path, i);
    pj.jets.push_back(model.jet(mid.y, v.nu, v.tau));
  }
  return pj;
}

namespace sensitivity {

inline SegmentSensitivity energy(const PathJets& pj)
{
  SegmentSensitivity s(pj.segments);
  for (int i = 0; i < pj.segments; ++i) {
    s.f_y[i] = pj.jets[i].E_y;
    s.f_nu[i] = pj.jets[i].E_nu;
    s.f_tau[i] = pj.jets[i].E_tau;
  }
  return s;
}

inline SegmentSensitivity charge(const PathJets& pj)
{
  SegmentSensitivity s(pj.segments);
  for (int i = 0; i < pj.segments; ++i) {
    s.f_y[i] = pj.jets[i].omega_y;
    s.f_nu[i] = pj.jets[i].w;
    s.f_tau[i] = -1.0;
  }
  return s;
}

inline SegmentSensitivity offset(const PathJets& pj)
{
  SegmentSensitivity s(pj.segments);
  for (int i = 0; i < pj.segments; ++i) {
    s.f_y[i] = pj.jets[i].d_y;
    s.f_nu[i] = Vec::Zero(pj.jets[i].w.size());
  }
  return s;
}

/// Integrand E - L = (E0 - L0) - d tau. For homogeneous models with constant
/// offset every partial except the constant f_tau = -d is exactly zero.
inline SegmentSensitivity energy_minus_action(const PathJets& pj)
{
  SegmentSensitivity s(pj.segments);
  for (int i = 0; i < pj.segments; ++i) {
    const LocalJet& j = pj.jets[i];
    const double tau = j.omega - j.Q;
    s.f_y[i] = -j.LmE0_y - j.d_y * tau;
    s.f_nu[i] = -j.LmE0_nu;
    s.f_tau[i] = -j.d;
  }
  return s;
}

} // namespace sensitivity

/// Directional derivative of (1/N) sum_i f along an arbitrary nodal field.
inline double directional_derivative(const DiscretePath& path, const SegmentSensitivity& s,
                                     const TangentField& delta)
{
  const int n = path.segments();
  CompensatedSum acc;
  for (int i = 1; i <= n; ++i) {
    const Vec dmid = 0.5 * (delta.deltas[i - 1].nu + delta.deltas[i].nu);
    const Vec dnu = n * (delta.deltas[i].nu - delta.deltas[i - 1].nu);
    const double dtau = n * (delta.deltas[i].tau - delta.deltas[i - 1].tau);
    acc.add(s.f_y[i - 1].dot(dmid) + s.f_nu[i - 1].dot(dnu) + s.f_tau[i - 1] * dtau);
  }
  return acc.value() / n;
}

/// Gradient with respect to the interior spatial nodes of the functional
/// restricted to the constant-charge set, where tau follows y through the
/// projection tau_i = a_i - mean(a) + (t_N - t_0).
inline NodalCovector reduced_covector(const PathJets& pj, const SegmentSensitivity& s)
{
  const int n = pj.segments;
  // tau-sensitivities enter only through their deviation from the mean. Taking
  // differences against the first entry keeps constant columns exactly zero.
  std::vector<double> dev(n);
  CompensatedSum acc;
  for (int i = 0; i < n; ++i) {
    dev[i] = s.f_tau[i] - s.f_tau[0];
    acc.add(dev[i]);
  }
  const double mean_dev = acc.value() / n;
  std::vector<Vec> fy(n), fnu(n);
  for (int i = 0; i < n; ++i) {
    const double c = dev[i] - mean_dev;
    const LocalJet& j = pj.jets[i];
    if (c == 0.0) {
      fy[i] = s.f_y[i];
      fnu[i] = s.f_nu[i];
    } else {
      fy[i] = s.f_y[i] + c * (j.omega_y + j.d_y);
      fnu[i] = s.f_nu[i] + c * j.w;
    }
  }
  NodalCovector g(std::max(n - 1, 0));
  for (int node = 1; node < n; ++node)
    g[node - 1] = (0.5 / n) * (fy[node - 1] + fy[node]) + fnu[node - 1] - fnu[node];
  return g;
}

/// H^1 Riesz representative and dual norm of a nodal covector.
struct FunctionalGradient {
  TangentField field;
  double norm = 0.0;
};

inline std::vector<Vec> h1_riesz(int segments, const NodalCovector& g)
{
  return solve_h1_gram(segments, g);
}

inline double h1_dual_norm(int segments, const NodalCovector& g)
{
  if (g.empty()) return 0.0;
  const std::vector<Vec> r = h1_riesz(segments, g);
  CompensatedSum acc;
  for (std::size_t j = 0; j < g.size(); ++j) acc.add(g[j].dot(r[j]));
  return std::sqrt(std::max(acc.value(), 0.0));
}

namespace detail {

inline ArrivalEvaluation checked_arrival(const StationaryModel& model, const DiscretePath& path,
                                         double kappa)
{
  const ArrivalEvaluation ev = arrival_times(model, path, kappa);
  if (!ev.branch_valid)
    throw PreconditionError("arrival branch degenerate: Q^2 + 2(E - kappa) is numerically zero");
  return ev;
}

/// Sensitivity of t_pm = Q + sigma S with S = sqrt(Q^2 + 2(E - kappa)):
/// dt = dQ + sigma (Q dQ + dE) / S.
inline SegmentSensitivity arrival_sensitivity(const PathJets& pj, const ArrivalEvaluation& ev,
                                              Branch branch)
{
  const double sigma = branch == Branch::Plus ? 1.0 : -1.0;
  SegmentSensitivity s = sensitivity::charge(pj);
  const SegmentSensitivity q = s;
  s.axpy(sigma * ev.Q_bar / ev.S, q);
  s.axpy(sigma / ev.S, sensitivity::energy(pj));
  return s;
}

inline NodalCovector combine(const NodalCovector& a, double alpha, const NodalCovector& b)
{
  NodalCovector out = a;
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += alpha * b[j];
  return out;
}

inline void check_tangent(const StationaryModel& model, const DiscretePath& path,
                          const TangentField& delta)
{
  if (static_cast<int>(delta.deltas.size()) != path.segments() + 1)
    throw PreconditionError("variation has the wrong number of nodes");
  const std::vector<double> dn = linearized_charge(model, path, delta);
  double lo = dn.front(), hi = dn.front(), scale = 1.0;
  for (double v : dn) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    scale = std::max(scale, 1.0 + std::abs(v));
  }
  for (const auto& d : delta.deltas) scale = std::max(scale, 1.0 + path.segments() * std::abs(d.tau));
  if (hi - lo > 1e-9 * scale)
    throw PreconditionError("variation is not tangent to the constant-charge set (spread " +
                            format_double(hi - lo) + ")");
}

} // namespace detail

/// Directional derivative of t_+ (or t_-) along a tangent field.
inline double dt_arrival(const StationaryModel& model, const DiscretePath& path, double kappa,
                         const TangentField& delta, Branch branch)
{
  const ArrivalEvaluation ev = detail::checked_arrival(model, path, kappa);
  detail::check_tangent(model, path, delta);
  const PathJets pj = compute_jets(model, path);
  return directional_derivative(path, detail::arrival_sensitivity(pj, ev, branch), delta);
}

inline double dt_plus(const StationaryModel& model, const DiscretePath& path, double kappa,
                      const TangentField& delta)
{
  return dt_arrival(model, path, kappa, delta, Branch::Plus);
}

inline double dt_minus(const StationaryModel& model, const DiscretePath& path, double kappa,
                       const TangentField& delta)
{
  return dt_arrival(model, path, kappa, delta, Branch::Minus);
}

/// Reduced gradient of t_pm as a covector on interior spatial nodes.
inline NodalCovector arrival_covector(const StationaryModel& model, const DiscretePath& path,
                                      const ArrivalEvaluation& ev, Branch branch,
                                      const PathJets* jets = nullptr)
{
  const PathJets local = jets ? PathJets{} : compute_jets(model, path);
  const PathJets& pj = jets ? *jets : local;
  return reduced_covector(pj, detail::arrival_sensitivity(pj, ev, branch));
}

/// H^1-preconditioned gradient of t_pm restricted to the constant-charge set.
inline FunctionalGradient arrival_gradient(const StationaryModel& model, const DiscretePath& path,
                                           double kappa, Branch branch = Branch::Plus)
{
  const ArrivalEvaluation ev = detail::checked_arrival(model, path, kappa);
  const NodalCovector g = arrival_covector(model, path, ev, branch);
  const int n = path.segments();
  std::vector<Vec> dy(n + 1, Vec::Zero(path.dim()));
  const std::vector<Vec> r = h1_riesz(n, g);
  for (int j = 1; j < n; ++j) dy[j] = r[j - 1];
  FunctionalGradient out;
  out.field = tangent_lift(model, path, dy);
  out.norm = h1_dual_norm(n, g);
  return out;
}

struct CriticalityReport {
  double residual = 0.0;       ///< H^1-dual norm of dt_pm minus the theorem's right-hand side
  double gradient_norm = 0.0;  ///< H^1-dual norm of dt_pm
};

/// Compares dt_pm with (dE - dL -+ t_pm dD) / S (sign per branch) on the
/// tangent space. Critical points of the connection problem make it vanish.
inline CriticalityReport criticality(const StationaryModel& model, const DiscretePath& path,
                                     double kappa, Branch branch)
{
  const ArrivalEvaluation ev = detail::checked_arrival(model, path, kappa);
  const PathJets pj = compute_jets(model, path);
  const NodalCovector g = arrival_covector(model, path, ev, branch, &pj);
  const NodalCovector diff = reduced_covector(pj, sensitivity::energy_minus_action(pj));
  NodalCovector rhs;
  if (branch == Branch::Plus) {
    rhs = detail::combine(NodalCovector(diff.size(), Vec::Zero(path.dim())), 1.0 / ev.S, diff);
    if (!model.linear_charge())
      rhs = detail::combine(rhs, -ev.t_plus / ev.S, reduced_covector(pj, sensitivity::offset(pj)));
  } else {
    rhs = detail::combine(NodalCovector(diff.size(), Vec::Zero(path.dim())), -1.0 / ev.S, diff);
    if (!model.linear_charge())
      rhs = detail::combine(rhs, ev.t_minus / ev.S, reduced_covector(pj, sensitivity::offset(pj)));
  }
  CriticalityReport rep;
  rep.gradient_norm = h1_dual_norm(path.segments(), g);
  rep.residual = h1_dual_norm(path.segments(), detail::combine(g, -1.0, rhs));
  return rep;
}

inline double criticality_residual(const StationaryModel& model, const DiscretePath& path,
                                   double kappa, Branch branch)
{
  return criticality(model, path, kappa, branch).residual;
}

/// Randers-type optical length of a spatial path:
/// (1/N) sum_i omega(nu_i) + sqrt(omega(nu_i)^2 + 2 L0(mid_i, nu_i)).
inline double randers_arrival(const StationaryModel& model, const std::vector<Vec>& y_nodes)
{
  if (!model.homogeneous() || !model.linear_charge())
    throw UnsupportedOperation("randers_arrival needs a 2-homogeneous model with linear charge; '" +
                               model.name() + "' is not");
  if (y_nodes.size() < 2) throw ArgumentError("randers_arrival: need at least two nodes");
  DiscretePath path;
  path.periods = model.topology().periods;
  for (const auto& y : y_nodes) path.nodes.push_back({y, 0.0});
  CompensatedSum acc;
  for (int i = 1; i <= path.segments(); ++i) {
    const Point mid = midpoint(path, i);
    const TangentVector v = velocity(path, i);
    const double w = model.omega(mid.y, v.nu);
    acc.add(w + std::sqrt(std::max(w * w + 2.0 * model.L0(mid.y, v.nu), 0.0)));
  }
  return acc.value() / path.segments();
}

/// Lifts a spatial path to the lightlike curve (tau on the cone boundary) from
/// time t0 and projects it to the constant-charge set with the same endpoints.
/// The arrival time on the flow line of the end point is
/// (t_N - t_0) + t_plus at kappa = 0.
inline DiscretePath lift_lightlike(const StationaryModel& model, const std::vector<Vec>& y_nodes,
                                   double t0)
{
  if (!model.homogeneous() || !model.linear_charge())
    throw UnsupportedOperation("lift_lightlike needs a 2-homogeneous model with linear charge");
  DiscretePath path;
  path.periods = model.topology().periods;
  for (const auto& y : y_nodes) path.nodes.push_back({y, t0});
  const int n = path.segments();
  for (int i = 1; i <= n; ++i) {
    const Point mid = midpoint(path, i);
    const TangentVector v = velocity(path, i);
    const double w = model.omega(mid.y, v.nu);
    const double tau = w + std::sqrt(std::max(w * w + 2.0 * model.L0(mid.y, v.nu), 0.0));
    path.nodes[i].t = path.nodes[i - 1].t + tau / n;
  }
  return project_to_N(model, path);
}

} // namespace stfermat
