#pragma once

#include "errors.hpp"
#include "model.hpp"
#include "polynomial.hpp"

#include <cctype>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stfermat {

/// L0 = |nu|^2 / 2, omega = 0.
inline StationaryModel make_flat(int dim = 2)
{
  ModelDefinition def;
  def.name = dim == 2 ? "flat" : "flat(" + std::to_string(dim) + ")";
  def.dim = dim;
  def.L0 = [](const Vec&, const Vec& nu) { return 0.5 * nu.squaredNorm(); };
  def.dL0_dy = [dim](const Vec&, const Vec&) { return Vec(Vec::Zero(dim)); };
  def.dL0_dnu = [](const Vec&, const Vec& nu) { return nu; };
  def.homogeneous = true;
  return StationaryModel(std::move(def));
}

/// Flat fiber part with a constant drift one-form omega(nu) = b . nu.
inline StationaryModel make_randers_const(const Vec& b)
{
  StationaryModel flat = make_flat(static_cast<int>(b.size()));
  ModelDefinition def = flat.definition();
  const int m = static_cast<int>(b.size());
  def.name = "randers-const(";
  for (int k = 0; k < m; ++k) def.name += (k ? "," : "") + format_short(b[k]);
  def.name += ")";
  def.omega_coeffs = [b](const Vec&) { return b; };
  def.domega_coeffs_dy = [m](const Vec&) { return Mat(Mat::Zero(m, m)); };
  return StationaryModel(std::move(def));
}

/// Rotating drift on the plane: omega(nu) = b (-y2 nu1 + y1 nu2).
inline StationaryModel make_randers_rot(double b)
{
  ModelDefinition def = make_flat(2).definition();
  def.name = "randers-rot(" + format_short(b) + ")";
  def.omega_coeffs = [b](const Vec& y) { return make_vec({-b * y[1], b * y[0]}); };
  def.domega_coeffs_dy = [b](const Vec&) {
    Mat j(2, 2);
    j << 0.0, -b, b, 0.0;
    return j;
  };
  return StationaryModel(std::move(def));
}

/// Flat plane with y2 identified modulo 2 pi R.
inline StationaryModel make_cylinder(double radius)
{
  if (!(radius > 0.0)) throw ArgumentError("cylinder radius must be positive");
  ModelDefinition def = make_flat(2).definition();
  def.name = "cylinder(" + format_short(radius) + ")";
  def.topology = Topology::cylinder(2, 1, 2.0 * std::numbers::pi * radius);
  return StationaryModel(std::move(def));
}

/// Adds a constant affine Noether offset d == c0 to a linear-charge model.
inline StationaryModel make_affine(const StationaryModel& base, double c0)
{
  if (!base.linear_charge())
    throw ArgumentError("affine(): base model '" + base.name() + "' already has an offset");
  ModelDefinition def = base.definition();
  def.name = "affine(" + base.name() + "," + format_short(c0) + ")";
  def.d_offset = [c0](const Vec&) { return c0; };
  const int m = base.dim();
  def.dd_dy = [m](const Vec&) { return Vec(Vec::Zero(m)); };
  def.constant_offset = true;
  return StationaryModel(std::move(def));
}

/// Adds a polynomial offset d(y) to a linear-charge model.
inline StationaryModel make_affine_field(const StationaryModel& base, const Polynomial& d)
{
  if (!base.linear_charge())
    throw ArgumentError("affine-field(): base model '" + base.name() + "' already has an offset");
  if (d.depends_on_nu()) throw ArgumentError("affine-field(): d may only depend on y");
  if (d.dim() != base.dim()) throw ArgumentError("affine-field(): dimension mismatch");
  ModelDefinition def = base.definition();
  def.name = "affine-field(" + base.name() + "," + d.to_string() + ")";
  def.d_offset = [d](const Vec& y) { return d.eval(y); };
  std::vector<Polynomial> grad;
  for (int k = 0; k < d.dim(); ++k) grad.push_back(d.derivative(k));
  def.dd_dy = [grad](const Vec& y) {
    Vec g(static_cast<Eigen::Index>(grad.size()));
    for (std::size_t k = 0; k < grad.size(); ++k) g[static_cast<Eigen::Index>(k)] = grad[k].eval(y);
    return g;
  };
  def.constant_offset = !d.depends_on_y();
  return StationaryModel(std::move(def));
}

/// Textual definition of a model with polynomial ingredients.
struct PolynomialModelSpec {
  std::string name = "custom";
  int dim = 2;
  std::string L0;
  std::vector<std::string> omega;  ///< one polynomial in y per coordinate; empty means 0
  std::string d;                   ///< empty means linear charge
  std::vector<double> periods;     ///< empty means euclidean
};

inline StationaryModel make_polynomial_model(const PolynomialModelSpec& spec)
{
  const int m = spec.dim;
  if (m < 1 || m > kMaxDim) throw ArgumentError("custom model: dim must lie in 1.." + std::to_string(kMaxDim));
  if (spec.L0.empty()) throw ArgumentError("custom model: L0 is required");

  const Polynomial L0 = parse_polynomial(spec.L0, m);
  std::vector<Polynomial> L0_y, L0_nu;
  for (int k = 0; k < m; ++k) {
    L0_y.push_back(L0.derivative(k));
    L0_nu.push_back(L0.derivative(m + k));
  }
  auto eval_all = [](const std::vector<Polynomial>& ps, const Vec& y, const Vec& nu) {
    Vec g(static_cast<Eigen::Index>(ps.size()));
    for (std::size_t k = 0; k < ps.size(); ++k) g[static_cast<Eigen::Index>(k)] = ps[k].eval(y, nu);
    return g;
  };

  ModelDefinition def;
  def.name = spec.name;
  def.dim = m;
  def.L0 = [L0](const Vec& y, const Vec& nu) { return L0.eval(y, nu); };
  def.dL0_dy = [L0_y, eval_all](const Vec& y, const Vec& nu) { return eval_all(L0_y, y, nu); };
  def.dL0_dnu = [L0_nu, eval_all](const Vec& y, const Vec& nu) { return eval_all(L0_nu, y, nu); };
  def.homogeneous = L0.is_nu_homogeneous_of_degree2();
  if (!def.homogeneous) {
    const Polynomial E0 = L0.fiber_energy();
    std::vector<Polynomial> E0_y, E0_nu;
    for (int k = 0; k < m; ++k) {
      E0_y.push_back(E0.derivative(k));
      E0_nu.push_back(E0.derivative(m + k));
    }
    def.E0 = [E0](const Vec& y, const Vec& nu) { return E0.eval(y, nu); };
    def.dE0_dy = [E0_y, eval_all](const Vec& y, const Vec& nu) { return eval_all(E0_y, y, nu); };
    def.dE0_dnu = [E0_nu, eval_all](const Vec& y, const Vec& nu) { return eval_all(E0_nu, y, nu); };
  }

  if (!spec.omega.empty()) {
    if (static_cast<int>(spec.omega.size()) != m)
      throw ArgumentError("custom model: omega needs " + std::to_string(m) + " components");
    std::vector<Polynomial> w;
    std::vector<std::vector<Polynomial>> dw(m);
    for (int i = 0; i < m; ++i) {
      w.push_back(parse_polynomial(spec.omega[i], m));
      if (w.back().depends_on_nu()) throw ArgumentError("custom model: omega components may only depend on y");
      for (int j = 0; j < m; ++j) dw[i].push_back(w.back().derivative(j));
    }
    def.omega_coeffs = [w](const Vec& y) {
      Vec c(static_cast<Eigen::Index>(w.size()));
      for (std::size_t i = 0; i < w.size(); ++i) c[static_cast<Eigen::Index>(i)] = w[i].eval(y);
      return c;
    };
    def.domega_coeffs_dy = [dw, m](const Vec& y) {
      Mat j(m, m);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) j(a, b) = dw[a][b].eval(y);
      return j;
    };
  }
  if (!spec.periods.empty()) {
    if (static_cast<int>(spec.periods.size()) != m)
      throw ArgumentError("custom model: periods needs " + std::to_string(m) + " entries");
    def.topology.periods = spec.periods;
  }
  StationaryModel model(std::move(def));
  if (!spec.d.empty()) {
    StationaryModel with_offset = make_affine_field(model, parse_polynomial(spec.d, m));
    ModelDefinition renamed = with_offset.definition();
    renamed.name = spec.name;
    return StationaryModel(std::move(renamed));
  }
  return model;
}

namespace detail {

inline std::string trim(std::string_view s)
{
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

/// Splits "a, f(b, c), d" at top-level commas.
inline std::vector<std::string> split_top_level(std::string_view s)
{
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    else if (s[i] == ')') --depth;
    else if (s[i] == ',' && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(s.substr(start)));
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

inline double parse_number(const std::string& text, const std::string& context)
{
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size())
    throw ParseError(context + ": expected a number, got '" + text + "'");
  return v;
}

} // namespace detail

/// Builds a model from a registry spec such as "flat", "randers-const(0.5,0)",
/// "randers-rot(0.3)", "cylinder(1)", "affine(flat,2)" or
/// "affine-field(randers-rot(0.3), 1 + 0.2*y1)".
inline StationaryModel parse_model_spec(std::string_view text)
{
  const std::string s = detail::trim(text);
  const auto open = s.find('(');
  std::string name = detail::trim(s.substr(0, open));
  std::vector<std::string> args;
  if (open != std::string::npos) {
    if (s.back() != ')') throw ParseError("model spec '" + s + "': missing ')'");
    args = detail::split_top_level(std::string_view(s).substr(open + 1, s.size() - open - 2));
  }
  auto want_args = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi)
      throw ParseError("model spec '" + s + "': wrong number of arguments");
  };
  auto num = [&](std::size_t i) { return detail::parse_number(args[i], "model spec '" + s + "'"); };

  if (name == "flat") {
    want_args(0, 1);
    return make_flat(args.empty() ? 2 : static_cast<int>(num(0)));
  }
  if (name == "randers-const") {
    want_args(1, kMaxDim);
    Vec b(static_cast<Eigen::Index>(args.size()));
    for (std::size_t i = 0; i < args.size(); ++i) b[static_cast<Eigen::Index>(i)] = num(i);
    return make_randers_const(b);
  }
  if (name == "randers-rot") {
    want_args(1, 1);
    return make_randers_rot(num(0));
  }
  if (name == "cylinder") {
    want_args(0, 1);
    return make_cylinder(args.empty() ? 1.0 : num(0));
  }
  if (name == "affine") {
    want_args(2, 2);
    return make_affine(parse_model_spec(args[0]), num(1));
  }
  if (name == "affine-field") {
    want_args(2, 2);
    StationaryModel base = parse_model_spec(args[0]);
    return make_affine_field(base, parse_polynomial(args[1], base.dim()));
  }
  throw ParseError("unknown model '" + name +
                   "' (known: flat, randers-const, randers-rot, cylinder, affine, affine-field)");
}

} // namespace stfermat
