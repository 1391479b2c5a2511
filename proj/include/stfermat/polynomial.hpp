#pragma once

#include "errors.hpp"
#include "types.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace stfermat {

/// Polynomial in the chart variables (y_1..y_m, nu_1..nu_m) of one model.
/// Variable index k < m is y_{k+1}; index m + k is nu_{k+1}.
class Polynomial {
public:
  struct Term {
    double coef = 0.0;
    std::vector<int> powers;
  };

  Polynomial() = default;
  explicit Polynomial(int dim) : dim_(dim) {}

  static Polynomial constant(int dim, double c)
  {
    Polynomial p(dim);
    if (c != 0.0) p.terms_.push_back({c, std::vector<int>(2 * dim, 0)});
    return p;
  }

  static Polynomial variable(int dim, int index)
  {
    Polynomial p(dim);
    std::vector<int> pw(2 * dim, 0);
    pw[index] = 1;
    p.terms_.push_back({1.0, std::move(pw)});
    return p;
  }

  int dim() const { return dim_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  double eval(const Vec& y, const Vec& nu) const
  {
    double acc = 0.0;
    for (const auto& t : terms_) {
      double v = t.coef;
      for (int k = 0; k < dim_; ++k) v *= ipow(y[k], t.powers[k]);
      for (int k = 0; k < dim_; ++k) v *= ipow(nu[k], t.powers[dim_ + k]);
      acc += v;
    }
    return acc;
  }

  /// Evaluates a polynomial that only involves y.
  double eval(const Vec& y) const
  {
    Vec zero = Vec::Zero(dim_);
    return eval(y, zero);
  }

  Polynomial derivative(int index) const
  {
    Polynomial out(dim_);
    for (const auto& t : terms_) {
      if (t.powers[index] == 0) continue;
      Term d = t;
      d.coef *= t.powers[index];
      d.powers[index] -= 1;
      out.terms_.push_back(std::move(d));
    }
    out.normalize();
    return out;
  }

  int nu_degree(const Term& t) const
  {
    int deg = 0;
    for (int k = 0; k < dim_; ++k) deg += t.powers[dim_ + k];
    return deg;
  }

  bool depends_on_nu() const
  {
    return std::any_of(terms_.begin(), terms_.end(),
                       [&](const Term& t) { return nu_degree(t) > 0; });
  }

  bool depends_on_y() const
  {
    for (const auto& t : terms_)
      for (int k = 0; k < dim_; ++k)
        if (t.powers[k] > 0) return true;
    return false;
  }

  /// True when every term has total nu-degree exactly 2.
  bool is_nu_homogeneous_of_degree2() const
  {
    return std::all_of(terms_.begin(), terms_.end(),
                       [&](const Term& t) { return nu_degree(t) == 2; });
  }

  /// Fiber energy of the polynomial seen as a Lagrangian:
  /// sum_j nu_j dP/dnu_j - P, i.e. each term scaled by (nu-degree - 1).
  Polynomial fiber_energy() const
  {
    Polynomial out(dim_);
    for (const auto& t : terms_) {
      Term e = t;
      e.coef *= nu_degree(t) - 1;
      out.terms_.push_back(std::move(e));
    }
    out.normalize();
    return out;
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b)
  {
    Polynomial out(a.dim_);
    out.terms_ = a.terms_;
    out.terms_.insert(out.terms_.end(), b.terms_.begin(), b.terms_.end());
    out.normalize();
    return out;
  }

  friend Polynomial operator*(double s, const Polynomial& a)
  {
    Polynomial out = a;
    for (auto& t : out.terms_) t.coef *= s;
    out.normalize();
    return out;
  }

  friend Polynomial operator-(const Polynomial& a, const Polynomial& b)
  {
    return a + (-1.0) * b;
  }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b)
  {
    Polynomial out(a.dim_);
    for (const auto& ta : a.terms_)
      for (const auto& tb : b.terms_) {
        Term t{ta.coef * tb.coef, ta.powers};
        for (std::size_t k = 0; k < t.powers.size(); ++k) t.powers[k] += tb.powers[k];
        out.terms_.push_back(std::move(t));
      }
    out.normalize();
    return out;
  }

  Polynomial pow(int n) const
  {
    Polynomial out = constant(dim_, 1.0);
    for (int i = 0; i < n; ++i) out = out * *this;
    return out;
  }

  std::string to_string() const
  {
    if (terms_.empty()) return "0";
    std::string s;
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      const auto& t = terms_[i];
      if (i) s += " + ";
      s += format_short(t.coef);
      for (int k = 0; k < 2 * dim_; ++k) {
        if (t.powers[k] == 0) continue;
        s += k < dim_ ? "*y" + std::to_string(k + 1) : "*nu" + std::to_string(k - dim_ + 1);
        if (t.powers[k] > 1) s += "^" + std::to_string(t.powers[k]);
      }
    }
    return s;
  }

private:
  static double ipow(double x, int n)
  {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
  }

  // Merges like terms and drops zero coefficients; term order is canonical.
  void normalize()
  {
    std::map<std::vector<int>, double> merged;
    for (const auto& t : terms_) merged[t.powers] += t.coef;
    terms_.clear();
    for (auto& [pw, c] : merged)
      if (c != 0.0) terms_.push_back({c, pw});
  }

  int dim_ = 0;
  std::vector<Term> terms_;
};

namespace detail {

class PolynomialParser {
public:
  PolynomialParser(std::string_view text, int dim) : s_(text), dim_(dim) {}

  Polynomial parse()
  {
    Polynomial p = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return p;
  }

private:
  Polynomial expr()
  {
    skip_ws();
    double sign = 1.0;
    if (accept('-')) sign = -1.0;
    else accept('+');
    Polynomial acc = sign * term();
    for (;;) {
      skip_ws();
      if (accept('+')) acc = acc + term();
      else if (accept('-')) acc = acc - term();
      else return acc;
    }
  }

  Polynomial term()
  {
    Polynomial acc = power();
    for (;;) {
      skip_ws();
      if (!accept('*')) return acc;
      acc = acc * power();
    }
  }

  Polynomial power()
  {
    Polynomial base = factor();
    skip_ws();
    if (accept('^')) {
      skip_ws();
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) fail("expected integer exponent");
      base = base.pow(std::stoi(std::string(s_.substr(start, pos_ - start))));
    }
    return base;
  }

  Polynomial factor()
  {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (accept('(')) {
      Polynomial inner = expr();
      skip_ws();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (accept('-')) return -1.0 * factor();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return variable();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Polynomial number()
  {
    const std::string rest(s_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str()) fail("bad number");
    pos_ += static_cast<std::size_t>(end - rest.c_str());
    return Polynomial::constant(dim_, v);
  }

  Polynomial variable()
  {
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    const std::string name(s_.substr(start, pos_ - start));
    std::size_t dstart = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (dstart == pos_) fail("variable '" + name + "' needs an index, e.g. " + name + "1");
    const int idx = std::stoi(std::string(s_.substr(dstart, pos_ - dstart)));
    if (idx < 1 || idx > dim_)
      fail("variable index " + std::to_string(idx) + " outside 1.." + std::to_string(dim_));
    if (name == "y") return Polynomial::variable(dim_, idx - 1);
    if (name == "nu") return Polynomial::variable(dim_, dim_ + idx - 1);
    fail("unknown variable '" + name + "' (expected y<k> or nu<k>)");
  }

  void skip_ws()
  {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c)
  {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const
  {
    throw ParseError("polynomial '" + std::string(s_) + "' at column " +
                     std::to_string(pos_ + 1) + ": " + msg);
  }

  std::string_view s_;
  int dim_;
  std::size_t pos_ = 0;
};

} // namespace detail

/// Parses expressions such as "0.5*nu1^2 + 0.5*nu2^2 - 0.1*y2*(nu1 + 1)".
inline Polynomial parse_polynomial(std::string_view text, int dim)
{
  if (dim < 1 || dim > kMaxDim)
    throw ArgumentError("polynomial dimension must lie in 1.." + std::to_string(kMaxDim));
  return detail::PolynomialParser(text, dim).parse();
}

} // namespace stfermat
