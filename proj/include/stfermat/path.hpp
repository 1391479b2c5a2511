#pragma once

#include "errors.hpp"
#include "model.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace stfermat {

/// Piecewise-linear curve on the uniform grid s_i = i / N with fixed endpoints.
/// `periods` mirrors the model topology (0 = not identified); consecutive
/// nodes are joined through the nearest representative.
struct DiscretePath {
  std::vector<Point> nodes;
  std::vector<double> periods;

  int segments() const { return static_cast<int>(nodes.size()) - 1; }
  int dim() const { return nodes.empty() ? 0 : static_cast<int>(nodes.front().y.size()); }
  const Point& start() const { return nodes.front(); }
  const Point& end() const { return nodes.back(); }
};

/// Nodal variation field; deltas[0] and deltas[N] are zero.
struct TangentField {
  std::vector<TangentVector> deltas;
};

/// Per-segment Noether charges N_i of a path.
struct NoetherProfile {
  std::vector<double> values;
  double mean = 0.0;
  double max_deviation = 0.0;

  /// max |N_i - mean| <= 1e-9 (1 + |mean|).
  bool constant() const { return max_deviation <= 1e-9 * (1.0 + std::abs(mean)); }
};

namespace detail {

inline void check_segment(const DiscretePath& path, int i)
{
  if (i < 1 || i > path.segments())
    throw PreconditionError("segment index " + std::to_string(i) + " outside 1.." +
                            std::to_string(path.segments()));
}

inline double wrap_nearest(double diff, double period)
{
  if (period == 0.0) return diff;
  return diff - period * std::round(diff / period);
}

} // namespace detail

/// y_i - y_{i-1}, periodic coordinates taken to the nearest representative.
inline Vec spatial_difference(const DiscretePath& path, int i)
{
  detail::check_segment(path, i);
  Vec d = path.nodes[i].y - path.nodes[i - 1].y;
  for (Eigen::Index k = 0; k < d.size(); ++k)
    if (static_cast<std::size_t>(k) < path.periods.size())
      d[k] = detail::wrap_nearest(d[k], path.periods[k]);
  return d;
}

inline TangentVector velocity(const DiscretePath& path, int i)
{
  const double n = path.segments();
  return {n * spatial_difference(path, i), n * (path.nodes[i].t - path.nodes[i - 1].t)};
}

inline Point midpoint(const DiscretePath& path, int i)
{
  return {path.nodes[i - 1].y + 0.5 * spatial_difference(path, i),
          0.5 * (path.nodes[i - 1].t + path.nodes[i].t)};
}

/// Straight interpolant from p to q in (y, t). `wraps[k]` extra periods are
/// added to coordinate k of q before interpolating, so the result has winding
/// `wraps`; the last node is q itself.
inline DiscretePath straight_path(const Point& p, const Point& q, int segments,
                                  std::vector<double> periods, const std::vector<int>& wraps = {})
{
  const int m = static_cast<int>(p.y.size());
  if (segments < 1) throw ArgumentError("a path needs at least one segment");
  if (q.y.size() != m) throw ArgumentError("endpoints have different dimensions");
  if (periods.empty()) periods.assign(m, 0.0);
  Vec target = q.y;
  for (std::size_t k = 0; k < wraps.size(); ++k) {
    if (wraps[k] == 0) continue;
    if (k >= periods.size() || periods[k] == 0.0)
      throw ArgumentError("winding requested on a non-periodic coordinate");
    target[static_cast<Eigen::Index>(k)] += wraps[k] * periods[k];
  }
  DiscretePath path;
  path.periods = std::move(periods);
  path.nodes.resize(static_cast<std::size_t>(segments) + 1);
  for (int i = 0; i <= segments; ++i) {
    const double s = static_cast<double>(i) / segments;
    path.nodes[i] = {p.y + s * (target - p.y), p.t + s * (q.t - p.t)};
  }
  path.nodes.front() = p;
  path.nodes.back() = q;
  return path;
}

/// Net number of periods travelled along each identified coordinate.
inline std::vector<long> winding(const DiscretePath& path)
{
  const int m = path.dim();
  std::vector<long> w(m, 0);
  for (int k = 0; k < m; ++k) {
    const double period = static_cast<std::size_t>(k) < path.periods.size() ? path.periods[k] : 0.0;
    if (period == 0.0) continue;
    double total = 0.0;
    for (int i = 1; i <= path.segments(); ++i) total += spatial_difference(path, i)[k];
    const double raw = path.end().y[k] - path.start().y[k];
    w[k] = std::lround((total - raw) / period);
  }
  return w;
}

/// Midpoint-rule quadrature of the Lagrangian.
inline double action(const StationaryModel& model, const DiscretePath& path)
{
  CompensatedSum acc;
  for (int i = 1; i <= path.segments(); ++i)
    acc.add(eval_L(model, midpoint(path, i), velocity(path, i)));
  return acc.value() / path.segments();
}

/// Midpoint-rule quadrature of the energy function.
inline double energy_integral(const StationaryModel& model, const DiscretePath& path)
{
  CompensatedSum acc;
  for (int i = 1; i <= path.segments(); ++i)
    acc.add(eval_E(model, midpoint(path, i), velocity(path, i)));
  return acc.value() / path.segments();
}

inline NoetherProfile noether_values(const StationaryModel& model, const DiscretePath& path)
{
  NoetherProfile prof;
  const int n = path.segments();
  prof.values.resize(n);
  CompensatedSum acc;
  for (int i = 1; i <= n; ++i) {
    prof.values[i - 1] = eval_N(model, midpoint(path, i), velocity(path, i));
    acc.add(prof.values[i - 1]);
  }
  prof.mean = acc.value() / n;
  for (double v : prof.values) prof.max_deviation = std::max(prof.max_deviation, std::abs(v - prof.mean));
  return prof;
}

/// Projection onto the constant-charge set. In adapted coordinates the
/// constraint only couples tau to y: tau_i = omega_i + d_i - c with c fixed by
/// the endpoint times, then t is integrated from t_0. y and both endpoints are
/// returned untouched.
inline DiscretePath project_to_N(const StationaryModel& model, const DiscretePath& path)
{
  const int n = path.segments();
  if (n < 1) throw ArgumentError("project_to_N: empty path");
  std::vector<double> a(n);
  CompensatedSum acc;
  for (int i = 1; i <= n; ++i) {
    const Point mid = midpoint(path, i);
    const Vec nu = n * spatial_difference(path, i);
    a[i - 1] = model.omega(mid.y, nu) + model.d_offset(mid.y);
    acc.add(a[i - 1]);
  }
  const double dt = path.end().t - path.start().t;
  const double c = acc.value() / n - dt;

  DiscretePath out = path;
  for (int i = 1; i < n; ++i) out.nodes[i].t = out.nodes[i - 1].t + (a[i - 1] - c) / n;
  out.nodes.back().t = path.end().t;
  return out;
}

/// Linearised charge variation dN_i of a nodal field; the field is tangent to
/// the constraint set iff dN is constant.
inline std::vector<double> linearized_charge(const StationaryModel& model, const DiscretePath& path,
                                             const TangentField& delta)
{
  const int n = path.segments();
  std::vector<double> dn(n);
  for (int i = 1; i <= n; ++i) {
    const Point mid = midpoint(path, i);
    const Vec nu = n * spatial_difference(path, i);
    const Vec dmid = 0.5 * (delta.deltas[i - 1].nu + delta.deltas[i].nu);
    const Vec dnu = n * (delta.deltas[i].nu - delta.deltas[i - 1].nu);
    const double dtau = n * (delta.deltas[i].tau - delta.deltas[i - 1].tau);
    const double da = (model.domega_dy(mid.y, nu) + model.dd_dy(mid.y)).dot(dmid) +
                      model.omega_coeffs(mid.y).dot(dnu);
    dn[i - 1] = da - dtau;
  }
  return dn;
}

/// Completes a spatial variation dy (zero at the endpoints) with the t
/// variation that keeps the charge constant and the endpoints fixed.
inline TangentField tangent_lift(const StationaryModel& model, const DiscretePath& path,
                                 const std::vector<Vec>& dy)
{
  const int n = path.segments();
  if (static_cast<int>(dy.size()) != n + 1) throw PreconditionError("tangent_lift: wrong field size");
  std::vector<double> da(n);
  CompensatedSum acc;
  for (int i = 1; i <= n; ++i) {
    const Point mid = midpoint(path, i);
    const Vec nu = n * spatial_difference(path, i);
    const Vec dmid = 0.5 * (dy[i - 1] + dy[i]);
    const Vec dnu = n * (dy[i] - dy[i - 1]);
    da[i - 1] = (model.domega_dy(mid.y, nu) + model.dd_dy(mid.y)).dot(dmid) +
                model.omega_coeffs(mid.y).dot(dnu);
    acc.add(da[i - 1]);
  }
  const double dc = acc.value() / n;
  TangentField xi;
  xi.deltas.resize(n + 1);
  xi.deltas[0] = {Vec::Zero(path.dim()), 0.0};
  for (int i = 1; i <= n; ++i) xi.deltas[i] = {dy[i], xi.deltas[i - 1].tau + (da[i - 1] - dc) / n};
  xi.deltas[n] = {Vec::Zero(path.dim()), 0.0};
  return xi;
}

inline void check_in_constraint_set(const StationaryModel& model, const DiscretePath& path,
                                    const char* who)
{
  const NoetherProfile prof = noether_values(model, path);
  if (!prof.constant())
    throw PreconditionError(std::string(who) + ": path is not in the constant-charge set (deviation " +
                            format_double(prof.max_deviation) + ")");
}

struct TangentSplit {
  TangentField xi;         ///< tangent to the constant-charge set
  std::vector<double> mu;  ///< coefficient of K = (0, 1)
};

/// delta = xi + mu K with xi tangent to the constant-charge set.
inline TangentSplit tangent_split(const StationaryModel& model, const DiscretePath& path,
                                  const TangentField& delta)
{
  check_in_constraint_set(model, path, "tangent_split");
  const int n = path.segments();
  if (static_cast<int>(delta.deltas.size()) != n + 1)
    throw PreconditionError("tangent_split: field has the wrong number of nodes");
  const auto is_zero = [](const TangentVector& v) { return v.tau == 0.0 && v.nu.isZero(0.0); };
  if (!is_zero(delta.deltas.front()) || !is_zero(delta.deltas.back()))
    throw PreconditionError("tangent_split: field does not vanish at the endpoints");

  std::vector<Vec> dy(n + 1);
  for (int i = 0; i <= n; ++i) dy[i] = delta.deltas[i].nu;
  TangentSplit out{tangent_lift(model, path, dy), std::vector<double>(n + 1, 0.0)};
  for (int i = 1; i < n; ++i) out.mu[i] = delta.deltas[i].tau - out.xi.deltas[i].tau;
  return out;
}

/// sum_i <d1', d2'> / N with d' the segment difference quotient.
inline double h1_inner(const DiscretePath& path, const TangentField& d1, const TangentField& d2)
{
  const int n = path.segments();
  CompensatedSum acc;
  for (int i = 1; i <= n; ++i) {
    const Vec a = d1.deltas[i].nu - d1.deltas[i - 1].nu;
    const Vec b = d2.deltas[i].nu - d2.deltas[i - 1].nu;
    const double at = d1.deltas[i].tau - d1.deltas[i - 1].tau;
    const double bt = d2.deltas[i].tau - d2.deltas[i - 1].tau;
    acc.add(n * (a.dot(b) + at * bt));
  }
  return acc.value();
}

/// Symmetry flow reparametrised along the curve: t_i += t s_i.
inline DiscretePath apply_flow(const DiscretePath& path, double t)
{
  DiscretePath out = path;
  const int n = path.segments();
  for (int i = 1; i < n; ++i) out.nodes[i].t += t * (static_cast<double>(i) / n);
  out.nodes.back().t += t;
  return out;
}

inline TangentField zero_field(const DiscretePath& path)
{
  TangentField f;
  f.deltas.assign(path.nodes.size(), {Vec::Zero(path.dim()), 0.0});
  return f;
}

/// Solves the H^1 Gram system of interior tent functions,
/// N * tridiag(-1, 2, -1) x = rhs, independently for each coordinate.
/// rhs[j] belongs to interior node j + 1.
inline std::vector<Vec> solve_h1_gram(int segments, const std::vector<Vec>& rhs)
{
  const int n = segments - 1;
  std::vector<Vec> x(rhs.size());
  if (n <= 0) return x;
  std::vector<double> cp(n);
  // Thomas algorithm; the factorisation is shared by all coordinates.
  std::vector<double> denom(n);
  denom[0] = 2.0;
  cp[0] = -1.0 / 2.0;
  for (int i = 1; i < n; ++i) {
    denom[i] = 2.0 + cp[i - 1];
    cp[i] = -1.0 / denom[i];
  }
  std::vector<Vec> dp(n);
  dp[0] = rhs[0] / (segments * denom[0]);
  for (int i = 1; i < n; ++i) dp[i] = (rhs[i] / segments + dp[i - 1]) / denom[i];
  x[n - 1] = dp[n - 1];
  for (int i = n - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
  return x;
}

} // namespace stfermat
