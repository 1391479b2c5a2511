#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace stfermat;
using stfermat::testkit::builtin_models;
using stfermat::testkit::random_smooth_path;

namespace {

DiscretePath flat_straight(int n, double dt = 0.0)
{
  return straight_path(make_point({0, 0}, 0), make_point({3, 4}, dt), n, {});
}

/// y straight from (0,0) to (3,4), t(s) = s^2.
DiscretePath parabolic_time(int n)
{
  DiscretePath p = flat_straight(n, 1.0);
  for (int i = 0; i <= n; ++i) {
    const double s = static_cast<double>(i) / n;
    p.nodes[i].t = s * s;
  }
  return p;
}

/// Circle of radius r about the origin from angle 0 to angle a.
DiscretePath arc(int n, double r, double a)
{
  DiscretePath p;
  p.periods = {0.0, 0.0};
  for (int i = 0; i <= n; ++i) {
    const double th = a * i / n;
    p.nodes.push_back(make_point({r * std::cos(th), r * std::sin(th)}, 0.0));
  }
  return p;
}

} // namespace

TEST(SpatialDifference, NearestRepresentativeOnCylinder)
{
  DiscretePath p;
  p.periods = {0.0, 2 * std::numbers::pi};
  p.nodes = {make_point({0, 6.2}, 0), make_point({0, 0.1}, 0)};
  EXPECT_NEAR(spatial_difference(p, 1)[1], 0.1 + 2 * std::numbers::pi - 6.2, 1e-15);
  EXPECT_NEAR(spatial_difference(p, 1)[1], 0.183, 1e-3);
}

TEST(SpatialDifference, IndexOutOfRange)
{
  const DiscretePath p = flat_straight(4);
  EXPECT_THROW(spatial_difference(p, 0), PreconditionError);
  EXPECT_THROW(spatial_difference(p, 5), PreconditionError);
}

TEST(Action, FlatStraightPathIsExactForAllN)
{
  for (int n : {1, 2, 7, 200}) {
    EXPECT_NEAR(action(make_flat(), flat_straight(n)), 12.5, 1e-12) << n;
    EXPECT_NEAR(energy_integral(make_flat(), flat_straight(n)), 12.5, 1e-12) << n;
  }
}

TEST(Action, MidpointRuleConvergesAtOrderTwo)
{
  // Arc of the unit circle in the flat model: L0 = r^2 a^2 / 2 exactly, but
  // the chord quadrature sees (2 N sin(a / 2N))^2 / 2.
  const double exact = 0.5 * 1.5 * 1.5;
  const double e100 = std::abs(action(make_flat(), arc(100, 1.0, 1.5)) - exact);
  const double e200 = std::abs(action(make_flat(), arc(200, 1.0, 1.5)) - exact);
  EXPECT_GE(std::log2(e100 / e200), 1.9);
}

TEST(Noether, StraightFlatPathHasZeroCharge)
{
  const NoetherProfile prof = noether_values(make_flat(), flat_straight(10));
  for (double v : prof.values) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(prof.max_deviation, 0.0);
  EXPECT_TRUE(prof.constant());
}

TEST(Noether, ParabolicTimeGivesLinearCharge)
{
  const int n = 10;
  const NoetherProfile prof = noether_values(make_flat(), parabolic_time(n));
  for (int i = 1; i <= n; ++i) EXPECT_NEAR(prof.values[i - 1], -2.0 * (i - 0.5) / n, 1e-13);
  EXPECT_FALSE(prof.constant());
}

TEST(ProjectToN, ParabolicTimeBecomesLinear)
{
  const int n = 16;
  const DiscretePath z = project_to_N(make_flat(), parabolic_time(n));
  for (int i = 0; i <= n; ++i) EXPECT_NEAR(z.nodes[i].t, static_cast<double>(i) / n, 1e-14);
  const NoetherProfile prof = noether_values(make_flat(), z);
  EXPECT_NEAR(prof.mean, -1.0, 1e-14);
  EXPECT_TRUE(prof.constant());
}

TEST(ProjectToN, CircularPathForRotatingDrift)
{
  const StationaryModel m = make_randers_rot(0.3);
  const DiscretePath c = arc(64, 1.3, 2.0);
  const DiscretePath z = project_to_N(m, c);
  EXPECT_LT(noether_values(m, z).max_deviation, 1e-12);
  for (std::size_t i = 0; i < c.nodes.size(); ++i) EXPECT_EQ(z.nodes[i].y, c.nodes[i].y);
}

TEST(ProjectToN, PathAlreadyInN)
{
  const DiscretePath z = flat_straight(8, 2.0);
  const DiscretePath w = project_to_N(make_flat(), z);
  for (std::size_t i = 0; i < z.nodes.size(); ++i) EXPECT_NEAR(w.nodes[i].t, z.nodes[i].t, 1e-14);
}

TEST(TangentSplit, PureSymmetryField)
{
  const StationaryModel m = make_flat();
  const DiscretePath z = flat_straight(6);
  TangentField d = zero_field(z);
  for (int i = 1; i < 6; ++i) d.deltas[i].tau = std::sin(i * 0.7);
  const TangentSplit sp = tangent_split(m, z, d);
  for (int i = 0; i <= 6; ++i) {
    EXPECT_EQ(sp.xi.deltas[i].tau, 0.0);
    EXPECT_EQ(sp.xi.deltas[i].nu, Vec::Zero(2));
    EXPECT_EQ(sp.mu[i], d.deltas[i].tau);
  }
}

TEST(TangentSplit, TangentFieldHasZeroMu)
{
  std::mt19937_64 rng(3);
  const StationaryModel m = make_randers_rot(0.3);
  const DiscretePath z = random_smooth_path(m, rng, 40);
  const TangentField xi = tangent_lift(m, z, testkit::random_variation(2, 40, rng));
  const TangentSplit sp = tangent_split(m, z, xi);
  for (double mu : sp.mu) EXPECT_NEAR(mu, 0.0, 1e-15);
}

TEST(TangentSplit, RecombinationIsExact)
{
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  const StationaryModel m = make_flat();
  const DiscretePath z = random_smooth_path(m, rng, 30);
  for (int trial = 0; trial < 20; ++trial) {
    TangentField d = zero_field(z);
    for (int i = 1; i < 30; ++i) d.deltas[i] = make_vector({u(rng), u(rng)}, u(rng));
    const TangentSplit sp = tangent_split(m, z, d);
    double err = 0.0;
    for (int i = 0; i <= 30; ++i) {
      err = std::max(err, (sp.xi.deltas[i].nu - d.deltas[i].nu).norm());
      err = std::max(err, std::abs(sp.xi.deltas[i].tau + sp.mu[i] - d.deltas[i].tau));
    }
    EXPECT_LT(err, 1e-12);
    const std::vector<double> dn = linearized_charge(m, z, sp.xi);
    for (double v : dn) EXPECT_NEAR(v, dn.front(), 1e-12);
  }
}

TEST(TangentSplit, Preconditions)
{
  const StationaryModel m = make_flat();
  TangentField d = zero_field(flat_straight(4));
  EXPECT_THROW(tangent_split(m, parabolic_time(4), d), PreconditionError);
  d.deltas.back().tau = 1.0;
  EXPECT_THROW(tangent_split(m, flat_straight(4), d), PreconditionError);
}

TEST(H1Inner, Examples)
{
  const DiscretePath z = flat_straight(2);
  const TangentField zero = zero_field(z);
  EXPECT_EQ(h1_inner(z, zero, zero), 0.0);
  TangentField tent = zero_field(z);
  tent.deltas[1].tau = 1.0;
  EXPECT_DOUBLE_EQ(h1_inner(z, tent, tent), 4.0);
}

TEST(H1Inner, GramSolveInvertsInnerProduct)
{
  // <r, phi_j>_{H1} = g_j for the tent basis phi_j.
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1, 1);
  const int n = 9;
  std::vector<Vec> g(n - 1);
  for (auto& gj : g) gj = make_vec({u(rng), u(rng)});
  const std::vector<Vec> r = solve_h1_gram(n, g);
  const DiscretePath z = flat_straight(n);
  TangentField rf = zero_field(z);
  for (int j = 1; j < n; ++j) rf.deltas[j].nu = r[j - 1];
  for (int j = 1; j < n; ++j)
    for (int k = 0; k < 2; ++k) {
      TangentField phi = zero_field(z);
      phi.deltas[j].nu[k] = 1.0;
      EXPECT_NEAR(h1_inner(z, rf, phi), g[j - 1][k], 1e-12);
    }
}

TEST(ApplyFlow, Examples)
{
  const DiscretePath z = flat_straight(10);
  const DiscretePath same = apply_flow(z, 0.0);
  for (std::size_t i = 0; i < z.nodes.size(); ++i) EXPECT_EQ(same.nodes[i].t, z.nodes[i].t);
  const DiscretePath moved = apply_flow(z, 5.0);
  EXPECT_EQ(moved.end().t, 5.0);
  const NoetherProfile prof = noether_values(make_flat(), moved);
  EXPECT_NEAR(prof.mean, -5.0, 1e-13);
  EXPECT_TRUE(prof.constant());
}

TEST(Winding, CountsExtraPeriods)
{
  const StationaryModel cyl = make_cylinder(1.0);
  for (int k = -2; k <= 2; ++k) {
    const DiscretePath z =
        straight_path(make_point({0, 0}, 0), make_point({1, 1}, 0), 200, cyl.topology().periods, {0, k});
    EXPECT_EQ(winding(z), (std::vector<long>{0, k}));
    EXPECT_EQ(z.end().y, make_vec({1, 1}));
  }
  EXPECT_THROW(straight_path(make_point({0, 0}, 0), make_point({1, 1}, 0), 10, {}, {1, 0}), ArgumentError);
}

// Properties over random paths.

TEST(PathProperties, ProjectionIsIdempotentAndKeepsYAndEndpoints)
{
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (const auto& m : builtin_models())
    for (int trial = 0; trial < 20; ++trial) {
      DiscretePath raw = random_smooth_path(m, rng, 50);
      for (std::size_t i = 1; i + 1 < raw.nodes.size(); ++i) raw.nodes[i].t += u(rng);
      const DiscretePath once = project_to_N(m, raw);
      const DiscretePath twice = project_to_N(m, once);
      for (std::size_t i = 0; i < raw.nodes.size(); ++i) {
        EXPECT_EQ(once.nodes[i].y, raw.nodes[i].y);
        EXPECT_EQ(twice.nodes[i].t, once.nodes[i].t) << m.name();
      }
      EXPECT_EQ(once.start().t, raw.start().t);
      EXPECT_EQ(once.end().t, raw.end().t);
      EXPECT_TRUE(noether_values(m, once).constant()) << m.name();
    }
}

TEST(PathProperties, FlowComposes)
{
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-3, 3);
  for (const auto& m : builtin_models()) {
    const DiscretePath z = random_smooth_path(m, rng, 40);
    const double a = u(rng), b = u(rng);
    const DiscretePath ab = apply_flow(apply_flow(z, a), b), c = apply_flow(z, a + b);
    for (std::size_t i = 0; i < z.nodes.size(); ++i) EXPECT_NEAR(ab.nodes[i].t, c.nodes[i].t, 1e-13);
  }
}

TEST(PathProperties, DiscreteShiftLaws)
{
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-3, 3);
  for (const auto& m : builtin_models())
    for (int trial = 0; trial < 20; ++trial) {
      const DiscretePath z = random_smooth_path(m, rng, 60);
      const double t = u(rng);
      const DiscretePath f = apply_flow(z, t);
      const double E = energy_integral(m, z), Q = Q_functional(m, z);
      EXPECT_LT(std::abs(energy_integral(m, f) - E - t * Q + t * t / 2), 1e-9 * (1 + std::abs(E))) << m.name();
      EXPECT_NEAR(Q_functional(m, f), Q - t, 1e-12 * (1 + std::abs(Q))) << m.name();
      const double L = action(m, z), N = noether_values(m, z).mean;
      EXPECT_NEAR(H_functional(m, z, t), L + t * N - t * t / 2, 1e-9 * (1 + std::abs(L))) << m.name();
      EXPECT_NEAR(H_functional(m, z, t), H_functional_split(m, z, t), 1e-9 * (1 + std::abs(L))) << m.name();
    }
}

TEST(PathProperties, TangentLiftIsTangent)
{
  std::mt19937_64 rng(24);
  for (const auto& m : builtin_models())
    for (int trial = 0; trial < 10; ++trial) {
      const DiscretePath z = random_smooth_path(m, rng, 40);
      const TangentField xi = tangent_lift(m, z, testkit::random_variation(2, 40, rng));
      const std::vector<double> dn = linearized_charge(m, z, xi);
      for (double v : dn) EXPECT_NEAR(v, dn.front(), 1e-11) << m.name();
      EXPECT_EQ(xi.deltas.front().tau, 0.0);
      EXPECT_EQ(xi.deltas.back().tau, 0.0);
    }
}
