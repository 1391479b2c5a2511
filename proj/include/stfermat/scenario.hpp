#pragma once

#include "errors.hpp"
#include "registry.hpp"
#include "solver.hpp"
#include "validation.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

namespace stfermat {

// Scenario files are INI:
//
//   [model]       spec = cylinder(1)
//                 or name/dim/L0/omega/d/periods for a polynomial model
//   [problem]     p, q (comma lists), p_t, q_t, kappa (one value or a list)
//   [solver]      max_iters grad_tol armijo_c backtrack_ratio initial_step
//                 segments seed branch workers
//   [seeds]       windings (list), coordinate, random, perturbation; without
//                 windings the straight seed is always included
//   [validation]  lo, hi (comma lists), samples
//   [output]      dir
struct Scenario {
  std::optional<StationaryModel> model;
  Point p, q;
  std::vector<double> kappas;
  SolverOptions solver;
  std::vector<int> windings;
  int winding_coordinate = -1;
  int random_seeds = 0;
  double perturbation = 0.1;
  std::optional<Box> region;
  std::int64_t samples = 2000;
  std::string output_dir;

  const StationaryModel& get_model() const { return *model; }

  /// Validation region: the given box, else the endpoints' bounding box grown by 1.
  Box validation_region() const
  {
    if (region) return *region;
    Box b{p.y.cwiseMin(q.y), p.y.cwiseMax(q.y)};
    b.lo.array() -= 1.0;
    b.hi.array() += 1.0;
    return b;
  }

  std::vector<SeedSpec> seeds() const
  {
    std::vector<SeedSpec> out;
    if (windings.empty()) out.push_back(SeedSpec{});
    else out = winding_seeds(*model, windings, winding_coordinate);
    auto extra = stfermat::random_seeds(random_seeds, perturbation);
    out.insert(out.end(), extra.begin(), extra.end());
    return out;
  }
};

namespace detail {

inline std::vector<double> parse_list(const std::string& text, const std::string& key)
{
  std::vector<double> out;
  for (const auto& item : split_top_level(text)) out.push_back(parse_number(item, key));
  return out;
}

inline Vec to_vec(const std::vector<double>& v)
{
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

template <class T>
T get_value(const boost::property_tree::ptree& tree, const std::string& key, T fallback)
{
  const auto text = tree.get_optional<std::string>(key);
  if (!text) return fallback;
  if constexpr (std::is_same_v<T, std::string>) {
    return trim(*text);
  } else {
    const double v = parse_number(trim(*text), key);
    if constexpr (std::is_integral_v<T>) {
      if (v != static_cast<double>(static_cast<T>(v))) throw ParseError(key + ": expected an integer");
    }
    return static_cast<T>(v);
  }
}

} // namespace detail

inline Scenario parse_scenario(std::istream& in)
{
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.message(), static_cast<int>(e.line()));
  }
  using detail::get_value;
  Scenario sc;

  const auto spec = get_value<std::string>(tree, "model.spec", "");
  const auto L0 = get_value<std::string>(tree, "model.L0", "");
  if (!spec.empty() && !L0.empty()) throw ParseError("[model]: give either spec or L0, not both");
  if (!spec.empty()) {
    try {
      sc.model = parse_model_spec(spec);
    } catch (const ArgumentError& e) {
      throw ParseError(e.what());
    }
  } else if (!L0.empty()) {
    PolynomialModelSpec def;
    def.name = get_value<std::string>(tree, "model.name", "custom");
    def.dim = get_value<int>(tree, "model.dim", 2);
    def.L0 = L0;
    const auto omega = get_value<std::string>(tree, "model.omega", "");
    std::stringstream ss(omega);
    for (std::string part; std::getline(ss, part, ';');) def.omega.push_back(detail::trim(part));
    def.d = get_value<std::string>(tree, "model.d", "");
    const auto periods = get_value<std::string>(tree, "model.periods", "");
    if (!periods.empty()) def.periods = detail::parse_list(periods, "model.periods");
    try {
      sc.model = make_polynomial_model(def);
    } catch (const ArgumentError& e) {
      throw ParseError(e.what());
    }
  } else {
    throw ParseError("[model]: missing spec (or L0 for a custom model)");
  }
  const int m = sc.model->dim();

  auto point = [&](const std::string& key) {
    const auto text = get_value<std::string>(tree, key, "");
    if (text.empty()) throw ParseError(key + " is required");
    const auto v = detail::parse_list(text, key);
    if (static_cast<int>(v.size()) != m)
      throw ParseError(key + ": expected " + std::to_string(m) + " coordinates");
    return detail::to_vec(v);
  };
  sc.p = {point("problem.p"), get_value<double>(tree, "problem.p_t", 0.0)};
  sc.q = {point("problem.q"), get_value<double>(tree, "problem.q_t", 0.0)};
  sc.kappas = detail::parse_list(get_value<std::string>(tree, "problem.kappa", "0"), "problem.kappa");
  if (sc.kappas.empty()) throw ParseError("problem.kappa: empty list");

  SolverOptions& o = sc.solver;
  o.max_iters = get_value<int>(tree, "solver.max_iters", o.max_iters);
  o.grad_tol = get_value<double>(tree, "solver.grad_tol", o.grad_tol);
  o.armijo_c = get_value<double>(tree, "solver.armijo_c", o.armijo_c);
  o.backtrack_ratio = get_value<double>(tree, "solver.backtrack_ratio", o.backtrack_ratio);
  o.initial_step = get_value<double>(tree, "solver.initial_step", o.initial_step);
  o.segments = get_value<int>(tree, "solver.segments", o.segments);
  o.rng_seed = get_value<std::uint64_t>(tree, "solver.seed", o.rng_seed);
  o.workers = get_value<unsigned>(tree, "solver.workers", o.workers);
  const auto branch = get_value<std::string>(tree, "solver.branch", "plus");
  if (branch == "plus") o.branch = Branch::Plus;
  else if (branch == "minus") o.branch = Branch::Minus;
  else throw ParseError("solver.branch: expected plus or minus");
  try {
    o.validate();
  } catch (const ArgumentError& e) {
    throw ParseError(std::string("[solver]: ") + e.what());
  }

  for (double k : detail::parse_list(get_value<std::string>(tree, "seeds.windings", ""), "seeds.windings")) {
    if (k != static_cast<double>(static_cast<int>(k))) throw ParseError("seeds.windings: expected integers");
    sc.windings.push_back(static_cast<int>(k));
  }
  sc.winding_coordinate = get_value<int>(tree, "seeds.coordinate", 0) - 1;
  sc.random_seeds = get_value<int>(tree, "seeds.random", 0);
  sc.perturbation = get_value<double>(tree, "seeds.perturbation", sc.perturbation);
  if (sc.random_seeds < 0 || sc.perturbation < 0.0) throw ParseError("[seeds]: negative count or amplitude");
  if (!sc.windings.empty()) {
    try {
      (void)winding_seeds(*sc.model, sc.windings, sc.winding_coordinate);
    } catch (const ArgumentError& e) {
      throw ParseError(std::string("[seeds]: ") + e.what());
    }
  }

  const auto lo = get_value<std::string>(tree, "validation.lo", "");
  const auto hi = get_value<std::string>(tree, "validation.hi", "");
  if (!lo.empty() || !hi.empty()) {
    const auto l = detail::parse_list(lo, "validation.lo"), h = detail::parse_list(hi, "validation.hi");
    if (static_cast<int>(l.size()) != m || static_cast<int>(h.size()) != m)
      throw ParseError("[validation]: lo and hi need " + std::to_string(m) + " coordinates each");
    sc.region = Box{detail::to_vec(l), detail::to_vec(h)};
  }
  sc.samples = get_value<std::int64_t>(tree, "validation.samples", sc.samples);
  if (sc.samples < 1) throw ParseError("validation.samples must be positive");
  sc.output_dir = get_value<std::string>(tree, "output.dir", "");
  return sc;
}

inline Scenario parse_scenario_text(const std::string& text)
{
  std::istringstream in(text);
  return parse_scenario(in);
}

inline Scenario load_scenario(const std::filesystem::path& file)
{
  std::ifstream in(file);
  if (!in) throw ParseError("cannot open scenario file " + file.string());
  return parse_scenario(in);
}

} // namespace stfermat
