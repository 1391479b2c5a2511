#pragma once

#include <Eigen/Core>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

namespace stfermat {

/// Largest supported dimension of the spatial slice. Vectors of this size live
/// on the stack, so evaluating a model never allocates.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Point of the adapted chart S x R: spatial position y and symmetry time t.
struct Point {
  Vec y;
  double t = 0.0;
};

/// Tangent vector (nu, tau) in the adapted chart; K = (0, 1).
struct TangentVector {
  Vec nu;
  double tau = 0.0;
};

inline Point make_point(std::initializer_list<double> y, double t)
{
  Point p;
  p.y.resize(static_cast<Eigen::Index>(y.size()));
  Eigen::Index i = 0;
  for (double v : y) p.y[i++] = v;
  p.t = t;
  return p;
}

inline TangentVector make_vector(std::initializer_list<double> nu, double tau)
{
  TangentVector v;
  v.nu.resize(static_cast<Eigen::Index>(nu.size()));
  Eigen::Index i = 0;
  for (double x : nu) v.nu[i++] = x;
  v.tau = tau;
  return v;
}

inline Vec make_vec(std::initializer_list<double> values)
{
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

inline bool all_finite(const Vec& v)
{
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i])) return false;
  return true;
}

/// Decimal text with 17 significant digits; parses back to the same double.
inline std::string format_double(double x)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_short(double x)
{
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string to_string(const Point& x)
{
  std::string s = "(y=[";
  for (Eigen::Index i = 0; i < x.y.size(); ++i) {
    if (i) s += ", ";
    s += format_double(x.y[i]);
  }
  return s + "], t=" + format_double(x.t) + ")";
}

inline std::string to_string(const TangentVector& v)
{
  std::string s = "(nu=[";
  for (Eigen::Index i = 0; i < v.nu.size(); ++i) {
    if (i) s += ", ";
    s += format_double(v.nu[i]);
  }
  return s + "], tau=" + format_double(v.tau) + ")";
}

/// Neumaier-compensated running sum. Quadratures over thousands of segments
/// feed the line search, which compares values differing by ~1e-14.
class CompensatedSum {
public:
  void add(double x)
  {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

} // namespace stfermat
