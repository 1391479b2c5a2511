#pragma once

#include "errors.hpp"
#include "types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace stfermat {

/// Coordinate identifications of the spatial slice. periods[k] == 0 means
/// coordinate k is not identified; otherwise y_k ~ y_k + periods[k].
struct Topology {
  std::vector<double> periods;

  static Topology euclidean(int dim) { return {std::vector<double>(dim, 0.0)}; }

  static Topology cylinder(int dim, int coord, double period)
  {
    Topology t = euclidean(dim);
    t.periods.at(coord) = period;
    return t;
  }

  bool any_periodic() const
  {
    for (double p : periods)
      if (p != 0.0) return true;
    return false;
  }

  std::string describe() const
  {
    if (!any_periodic()) return "euclidean";
    std::string s = "cylinder(";
    for (std::size_t k = 0; k < periods.size(); ++k) {
      if (k) s += ",";
      s += format_double(periods[k]);
    }
    return s + ")";
  }
};

/// Raw evaluators of a stationary Lagrangian
///   L = L0(y, nu) + (omega_y(nu) + d(y)) tau - tau^2 / 2
/// in adapted coordinates, K = d/dt. omega_y(nu) = w(y) . nu is stored through
/// its coefficient field w. Optional derivative evaluators fall back to
/// central finite differences.
struct ModelDefinition {
  std::string name;
  int dim = 0;

  std::function<double(const Vec&, const Vec&)> L0;
  std::function<Vec(const Vec&, const Vec&)> dL0_dy;
  std::function<Vec(const Vec&, const Vec&)> dL0_dnu;

  std::function<Vec(const Vec&)> omega_coeffs;
  /// J(i, j) = d w_i / d y_j.
  std::function<Mat(const Vec&)> domega_coeffs_dy;

  /// Empty means d == 0 (linear Noether charge).
  std::function<double(const Vec&)> d_offset;
  std::function<Vec(const Vec&)> dd_dy;
  /// d does not depend on y. Set by constructors that know it.
  bool constant_offset = false;

  /// Fiber energy E0 = dL0/dnu [nu] - L0 and its derivatives. Only consulted
  /// when L0 is not 2-homogeneous; E0 itself defaults to the formula.
  std::function<double(const Vec&, const Vec&)> E0;
  std::function<Vec(const Vec&, const Vec&)> dE0_dy;
  std::function<Vec(const Vec&, const Vec&)> dE0_dnu;

  /// L0(y, s nu) = s^2 L0(y, nu) for s > 0 (Lorentz-Finsler case).
  bool homogeneous = false;

  Topology topology;
};

/// Values and first partials of L, E and the charges at one (y, nu, tau).
struct LocalJet {
  double L0 = 0.0, E0 = 0.0;
  double omega = 0.0, d = 0.0;
  double L = 0.0, E = 0.0, Q = 0.0, N = 0.0;
  Vec w;         ///< omega coefficients at y
  Vec omega_y;   ///< d/dy of omega_y(nu) at fixed nu
  Vec d_y;
  Vec L_y, L_nu;
  double L_tau = 0.0;
  Vec E_y, E_nu;
  double E_tau = 0.0;
  /// Partials of L0 - E0; exactly zero for homogeneous models.
  Vec LmE0_y, LmE0_nu;
};

namespace detail {

inline double fd_step(double x) { return 1e-5 * (1.0 + std::abs(x)); }

template <class F>
Vec central_gradient(F&& f, Vec x)
{
  Vec g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = fd_step(x[k]);
    const double x0 = x[k];
    x[k] = x0 + h;
    const double fp = f(x);
    x[k] = x0 - h;
    const double fm = f(x);
    x[k] = x0;
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

} // namespace detail

/// Immutable evaluator bundle for one stationary Lagrangian. Copies share the
/// underlying definition; all members are safe to call concurrently.
class StationaryModel {
public:
  explicit StationaryModel(ModelDefinition def)
    : def_(std::make_shared<const ModelDefinition>(checked(std::move(def))))
  {}

  const std::string& name() const { return def_->name; }
  int dim() const { return def_->dim; }
  bool homogeneous() const { return def_->homogeneous; }
  bool linear_charge() const { return !def_->d_offset; }
  bool constant_offset() const { return !def_->d_offset || def_->constant_offset; }
  const Topology& topology() const { return def_->topology; }
  const ModelDefinition& definition() const { return *def_; }

  double L0(const Vec& y, const Vec& nu) const { return def_->L0(y, nu); }

  Vec dL0_dy(const Vec& y, const Vec& nu) const
  {
    if (def_->dL0_dy) return def_->dL0_dy(y, nu);
    return detail::central_gradient([&](const Vec& yy) { return def_->L0(yy, nu); }, y);
  }

  Vec dL0_dnu(const Vec& y, const Vec& nu) const
  {
    if (def_->dL0_dnu) return def_->dL0_dnu(y, nu);
    return detail::central_gradient([&](const Vec& vv) { return def_->L0(y, vv); }, nu);
  }

  double E0(const Vec& y, const Vec& nu) const
  {
    if (def_->homogeneous) return def_->L0(y, nu);
    if (def_->E0) return def_->E0(y, nu);
    return dL0_dnu(y, nu).dot(nu) - def_->L0(y, nu);
  }

  Vec dE0_dy(const Vec& y, const Vec& nu) const
  {
    if (def_->homogeneous) return dL0_dy(y, nu);
    if (def_->dE0_dy) return def_->dE0_dy(y, nu);
    return detail::central_gradient([&](const Vec& yy) { return E0(yy, nu); }, y);
  }

  Vec dE0_dnu(const Vec& y, const Vec& nu) const
  {
    if (def_->homogeneous) return dL0_dnu(y, nu);
    if (def_->dE0_dnu) return def_->dE0_dnu(y, nu);
    return detail::central_gradient([&](const Vec& vv) { return E0(y, vv); }, nu);
  }

  Vec omega_coeffs(const Vec& y) const { return def_->omega_coeffs(y); }

  double omega(const Vec& y, const Vec& nu) const { return def_->omega_coeffs(y).dot(nu); }

  /// d/dy of omega_y(nu) with nu held fixed.
  Vec domega_dy(const Vec& y, const Vec& nu) const
  {
    if (def_->domega_coeffs_dy) return def_->domega_coeffs_dy(y).transpose() * nu;
    return detail::central_gradient([&](const Vec& yy) { return omega(yy, nu); }, y);
  }

  double d_offset(const Vec& y) const { return def_->d_offset ? def_->d_offset(y) : 0.0; }

  Vec dd_dy(const Vec& y) const
  {
    if (!def_->d_offset || def_->constant_offset) return Vec::Zero(dim());
    if (def_->dd_dy) return def_->dd_dy(y);
    return detail::central_gradient([&](const Vec& yy) { return def_->d_offset(yy); }, y);
  }

  /// Evaluates everything the path functionals need at one chart vector.
  LocalJet jet(const Vec& y, const Vec& nu, double tau) const
  {
    LocalJet j;
    const int m = dim();
    j.L0 = L0(y, nu);
    j.w = omega_coeffs(y);
    j.omega = j.w.dot(nu);
    j.omega_y = domega_dy(y, nu);
    j.d = d_offset(y);
    j.d_y = dd_dy(y);

    const Vec L0_y = dL0_dy(y, nu);
    const Vec L0_nu = dL0_dnu(y, nu);
    j.L = j.L0 + (j.omega + j.d) * tau - 0.5 * tau * tau;
    j.L_y = L0_y + (j.omega_y + j.d_y) * tau;
    j.L_nu = L0_nu + j.w * tau;
    j.L_tau = j.omega + j.d - tau;

    Vec E0_y, E0_nu;
    if (homogeneous()) {
      j.E0 = j.L0;
      E0_y = L0_y;
      E0_nu = L0_nu;
      j.LmE0_y = Vec::Zero(m);
      j.LmE0_nu = Vec::Zero(m);
    } else {
      j.E0 = E0(y, nu);
      E0_y = dE0_dy(y, nu);
      E0_nu = dE0_dnu(y, nu);
      j.LmE0_y = L0_y - E0_y;
      j.LmE0_nu = L0_nu - E0_nu;
    }
    j.E = j.E0 + j.omega * tau - 0.5 * tau * tau;
    j.E_y = E0_y + j.omega_y * tau;
    j.E_nu = E0_nu + j.w * tau;
    j.E_tau = j.omega - tau;

    j.Q = j.omega - tau;
    j.N = j.Q + j.d;

    if (!std::isfinite(j.L) || !std::isfinite(j.E) || !std::isfinite(j.N) ||
        !all_finite(j.L_y) || !all_finite(j.L_nu) || !all_finite(j.E_y) ||
        !all_finite(j.E_nu)) {
      throw ModelEvaluationError("model '" + name() + "' produced a non-finite value at x=" +
                                 to_string(Point{y, 0.0}) + ", v=" +
                                 to_string(TangentVector{nu, tau}));
    }
    return j;
  }

private:
  static ModelDefinition checked(ModelDefinition def)
  {
    if (def.dim < 1 || def.dim > kMaxDim)
      throw ArgumentError("model dimension must lie in 1.." + std::to_string(kMaxDim));
    if (!def.L0) throw ArgumentError("model '" + def.name + "' has no L0 evaluator");
    if (!def.omega_coeffs) {
      const int m = def.dim;
      def.omega_coeffs = [m](const Vec&) { return Vec(Vec::Zero(m)); };
      def.domega_coeffs_dy = [m](const Vec&) { return Mat(Mat::Zero(m, m)); };
    }
    if (def.topology.periods.empty()) def.topology = Topology::euclidean(def.dim);
    if (static_cast<int>(def.topology.periods.size()) != def.dim)
      throw ArgumentError("topology has the wrong number of coordinates");
    return def;
  }

  std::shared_ptr<const ModelDefinition> def_;
};

namespace detail {

[[noreturn]] inline void throw_non_finite(const StationaryModel& model, const Point& x,
                                          const TangentVector& v)
{
  throw ModelEvaluationError("model '" + model.name() + "' produced a non-finite value at x=" +
                             to_string(x) + ", v=" + to_string(v));
}

inline double checked_value(double value, const StationaryModel& model, const Point& x,
                            const TangentVector& v)
{
  if (!std::isfinite(value)) throw_non_finite(model, x, v);
  return value;
}

} // namespace detail

/// L = L0(y, nu) + (omega_y(nu) + d(y)) tau - tau^2 / 2.
inline double eval_L(const StationaryModel& model, const Point& x, const TangentVector& v)
{
  const double value = model.L0(x.y, v.nu) + (model.omega(x.y, v.nu) + model.d_offset(x.y)) * v.tau -
                       0.5 * v.tau * v.tau;
  return detail::checked_value(value, model, x, v);
}

/// E = E0(y, nu) + omega_y(nu) tau - tau^2 / 2; the offset d never enters.
inline double eval_E(const StationaryModel& model, const Point& x, const TangentVector& v)
{
  const double value = model.E0(x.y, v.nu) + model.omega(x.y, v.nu) * v.tau - 0.5 * v.tau * v.tau;
  return detail::checked_value(value, model, x, v);
}

/// Linear part of the Noether charge, omega_y(nu) - tau.
inline double eval_Q(const StationaryModel& model, const Point& x, const TangentVector& v)
{
  return detail::checked_value(model.omega(x.y, v.nu) - v.tau, model, x, v);
}

/// Full Noether charge dL/dv [K] = Q(v) + d(y).
inline double eval_N(const StationaryModel& model, const Point& x, const TangentVector& v)
{
  return detail::checked_value(eval_Q(model, x, v) + model.d_offset(x.y), model, x, v);
}

inline double eval_Lc(const StationaryModel& model, const Point& x, const TangentVector& v)
{
  const double q = eval_Q(model, x, v);
  return eval_L(model, x, v) + q * q;
}

/// v + t K.
inline TangentVector shift_by_flow(const TangentVector& v, double t)
{
  return {v.nu, v.tau + t};
}

/// Membership in the future causal cone:
/// tau >= omega(nu) + sqrt(omega(nu)^2 + 2 L0(y, nu)).
inline bool is_causal(const StationaryModel& model, const Point& x, const TangentVector& v)
{
  if (!model.homogeneous() || !model.linear_charge())
    throw UnsupportedOperation("causal cone needs a 2-homogeneous model with linear charge; '" +
                               model.name() + "' is not");
  const double w = model.omega(x.y, v.nu);
  const double rad = w * w + 2.0 * model.L0(x.y, v.nu);
  detail::checked_value(rad, model, x, v);
  return v.tau >= w + std::sqrt(std::max(rad, 0.0));
}

} // namespace stfermat
