#pragma once

#include "errors.hpp"
#include "solver.hpp"
#include "validation.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace stfermat {

namespace fs = std::filesystem;

/// Path table: comment header, then one row "s y1 .. ym t" per node.
inline void write_path_table(std::ostream& out, const DiscretePath& path)
{
  const int m = path.dim();
  out << "# s";
  for (int k = 1; k <= m; ++k) out << " y" << k;
  out << " t\n# periods";
  for (int k = 0; k < m; ++k)
    out << ' ' << format_double(static_cast<std::size_t>(k) < path.periods.size() ? path.periods[k] : 0.0);
  out << '\n';
  const int n = path.segments();
  for (int i = 0; i <= n; ++i) {
    out << format_double(static_cast<double>(i) / n);
    for (int k = 0; k < m; ++k) out << ' ' << format_double(path.nodes[i].y[k]);
    out << ' ' << format_double(path.nodes[i].t) << '\n';
  }
}

inline void write_path_table(const fs::path& file, const DiscretePath& path)
{
  std::ofstream out(file);
  if (!out) throw Error("cannot write " + file.string());
  write_path_table(out, path);
}

inline DiscretePath read_path_table(std::istream& in)
{
  DiscretePath path;
  std::string line;
  int columns = -1;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    if (line[0] == '#') {
      std::string tag;
      ss >> tag >> tag;
      if (tag == "periods") {
        double v;
        while (ss >> v) path.periods.push_back(v);
      }
      continue;
    }
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError("path table: bad number '" + tok + "'", lineno);
      }
    }
    if (columns < 0) columns = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != columns || columns < 3)
      throw ParseError("path table: inconsistent column count", lineno);
    Point x{Vec(columns - 2), row.back()};
    for (int k = 0; k < columns - 2; ++k) x.y[k] = row[k + 1];
    path.nodes.push_back(x);
  }
  if (path.nodes.size() < 2) throw ParseError("path table: fewer than two nodes");
  if (path.periods.empty()) path.periods.assign(path.dim(), 0.0);
  if (path.periods.size() != static_cast<std::size_t>(path.dim()))
    throw ParseError("path table: periods do not match the dimension");
  return path;
}

inline DiscretePath read_path_table(const fs::path& file)
{
  std::ifstream in(file);
  if (!in) throw Error("cannot read " + file.string());
  return read_path_table(in);
}

namespace detail {

inline std::string winding_string(const std::vector<long>& w)
{
  std::string s;
  for (std::size_t k = 0; k < w.size(); ++k) s += (k ? ";" : "") + std::to_string(w[k]);
  return s;
}

} // namespace detail

inline std::string record_json(const SolutionRecord& r, const std::string& model_name, double kappa,
                               const std::string& path_file, const std::string& geodesic_file)
{
  nlohmann::ordered_json j;
  j["model"] = model_name;
  j["seed"] = r.seed_label;
  j["branch"] = to_string(r.branch);
  j["kappa"] = kappa;
  j["t_plus"] = r.arrival.t_plus;
  j["t_minus"] = r.arrival.t_minus;
  j["S"] = r.arrival.S;
  j["Q_bar"] = r.arrival.Q_bar;
  j["E"] = r.arrival.E_val;
  j["winding"] = r.winding;
  j["converged"] = r.converged;
  j["iters"] = r.iters;
  j["gradient_norm"] = r.gradient_norm;
  j["criticality_residual"] = r.criticality_residual;
  j["el_residual"] = r.el_residual;
  j["energy_dev"] = r.energy_dev;
  j["noether_dev"] = r.noether_dev;
  j["segments"] = r.z_star.segments();
  j["path_file"] = path_file;
  j["geodesic_file"] = geodesic_file;
  // dump() re-serializes doubles with shortest round-trip digits; splice the
  // 17-digit literals back in instead.
  std::string out = "{\n";
  bool first = true;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!first) out += ",\n";
    first = false;
    out += "  " + nlohmann::json(it.key()).dump() + ": ";
    if (it->is_number_float()) out += format_double(it->get<double>());
    else out += it->dump();
  }
  return out + "\n}\n";
}

inline std::string validation_json(const ValidationReport& r, const std::string& model_name,
                                   const std::vector<double>& kappas)
{
  std::ostringstream o;
  o << "{\n  \"model\": " << nlohmann::json(model_name).dump() << ",\n"
    << "  \"qk_check\": " << (r.qk_check ? "true" : "false") << ",\n"
    << "  \"convexity_margin\": " << format_double(r.convexity_margin) << ",\n"
    << "  \"growth_ok\": " << (r.growth_ok ? "true" : "false") << ",\n"
    << "  \"growth_constant\": " << format_double(r.growth_constant) << ",\n"
    << "  \"supL0_at_zero\": " << format_double(r.supL0_at_zero) << ",\n"
    << "  \"kappa_admissible_bound\": " << format_double(r.kappa_admissible_bound) << ",\n"
    << "  \"energy_bound_ok\": " << (r.energy_bound_ok ? "true" : "false") << ",\n"
    << "  \"linearity_ok\": " << (r.linearity_ok ? "true" : "false") << ",\n"
    << "  \"homogeneity_ok\": " << (r.homogeneity_ok ? "true" : "false") << ",\n"
    << "  \"cone_samples\": " << r.cone_samples << ",\n"
    << "  \"samples\": " << r.samples << ",\n  \"kappa\": [";
  for (std::size_t i = 0; i < kappas.size(); ++i) o << (i ? ", " : "") << format_double(kappas[i]);
  o << "],\n  \"admissible\": [";
  for (std::size_t i = 0; i < kappas.size(); ++i) o << (i ? ", " : "") << (r.admits(kappas[i]) ? "true" : "false");
  o << "]\n}\n";
  return o.str();
}

inline const char* summary_header()
{
  return "kappa,branch,t_plus,t_minus,winding,el_residual,energy_dev,noether_dev,criticality_residual,iters,seed";
}

inline std::string summary_row(const SolutionRecord& r, double kappa)
{
  std::ostringstream o;
  o << format_double(kappa) << ',' << to_string(r.branch) << ',' << format_double(r.arrival.t_plus) << ','
    << format_double(r.arrival.t_minus) << ',' << detail::winding_string(r.winding) << ','
    << format_double(r.el_residual) << ',' << format_double(r.energy_dev) << ','
    << format_double(r.noether_dev) << ',' << format_double(r.criticality_residual) << ',' << r.iters << ','
    << r.seed_label;
  return o.str();
}

} // namespace stfermat
