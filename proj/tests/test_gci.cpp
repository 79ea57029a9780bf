#include <gtest/gtest.h>

#include "bodyflock/gci.hpp"
#include "bodyflock/grid.hpp"

using namespace bodyflock;

namespace {

EquilibriumParams params(double d, NuSpec nu = NuSpec::constant(1.0)) {
  EquilibriumParams p;
  p.d = d;
  p.nu = std::move(nu);
  return p;
}

}  // namespace

TEST(Psi0, NegativeInterior) {
  for (double d : {0.1, 0.5, 2.0}) {
    for (const auto& nu : {NuSpec::constant(1.0), NuSpec::polynomial({1.0, 0.4})}) {
      const GciSolution sol = solve_psi0(params(d, nu));
      for (std::size_t i = 1; i + 1 < sol.size(); ++i) ASSERT_LT(sol.values()[i], 0.0) << "d=" << d << " i=" << i;
      EXPECT_TRUE(std::isfinite(sol.weighted_norm2()));
    }
  }
}

TEST(Psi0, RefinementIsSecondOrder) {
  const EquilibriumParams p = params(0.5);
  const GciSolution a = solve_psi0(p, 129), b = solve_psi0(p, 257), c = solve_psi0(p, 513);
  const double e1 = energy_norm_difference(a, b), e2 = energy_norm_difference(b, c);
  EXPECT_GE(e1 / e2, 3.0);
}

TEST(Psi0, GalerkinOrthogonality) {
  EXPECT_LT(galerkin_residual(solve_psi0(params(0.5))), 1e-12);
}

TEST(Psi0, TooFewNodes) { EXPECT_THROW(solve_psi0(params(0.5), 16), DomainError); }

TEST(Coefficients, ConstantNuIdentities) {
  for (double d : {0.1, 0.5, 2.0, 10.0}) {
    const CoeffSet c = compute_coefficients(params(d));
    EXPECT_NEAR(c.c3, d, 1e-12 * d);
    EXPECT_GT(c.c4, 0.0);
    EXPECT_GT(c.c1, 0.0);
    EXPECT_LT(c.c1, 1.0);
    EXPECT_NEAR(c.c2, c.c2_unreduced, 1e-12);
    EXPECT_NEAR(c.c4, c.c4_unreduced, 1e-12);
  }
}

TEST(Coefficients, VariableNuPositive) {
  const CoeffSet c = compute_coefficients(params(0.5, NuSpec::polynomial({1.0, 0.5})));
  EXPECT_GT(c.c3, 0.0);
  EXPECT_GT(c.c4, 0.0);
  EXPECT_NEAR(c.c2, c.c2_unreduced, 1e-12);
}

// frozen regression values (adaptive quadrature + 1024-node profile)
TEST(Coefficients, RegressionValues) {
  const CoeffSet a = compute_coefficients(params(0.5));
  EXPECT_NEAR(a.c1, 0.436263124355, 1e-10);
  EXPECT_NEAR(a.c2, 0.449644646228, 1e-8);
  EXPECT_NEAR(a.c4, 0.183451784591, 1e-8);
  const CoeffSet b = compute_coefficients(params(2.0));
  EXPECT_NEAR(b.c1, 0.0935084507032, 1e-10);
  EXPECT_NEAR(b.c2, 0.297998631221, 1e-8);
  EXPECT_NEAR(b.c4, 0.234000456260, 1e-8);
}

TEST(GciEvaluate, ZeroAtCenterAndOddInAxis) {
  const GciSolution sol = solve_psi0(params(0.5));
  Rng g(61);
  const Rotation lam = haar_sample(g);
  const Vec3 pv(0.3, -1.0, 0.4);
  EXPECT_EQ(gci_evaluate(sol, lam, pv, lam), 0.0);
  for (int t = 0; t < 100; ++t) {
    const double th = 0.05 + 3.0 * g.uniform();
    const Vec3 n = uniform_sphere(g);
    const double plus = gci_evaluate(sol, lam, pv, lam * from_axis_angle({th, n}));
    const double minus = gci_evaluate(sol, lam, pv, lam * from_axis_angle({th, -n}));
    EXPECT_NEAR(plus, -minus, 1e-13);
    const double expect = std::sin(th) * sol(th) * pv.dot(n);
    EXPECT_NEAR(plus, expect, 1e-10 * std::max(std::abs(expect), 1e-300) + 1e-15);
  }
}

TEST(GciResidual, ConvergedAndSensitive) {
  const EquilibriumParams p = params(0.5);
  const GciSolution sol = solve_psi0(p);
  Rng g(63);
  const Rotation lam = haar_sample(g);
  const Vec3 pv = Vec3(1.0, 0.5, -0.2).normalized();
  const AxisAngleGrid grid(128, 64, 128, lam);
  const double r0 = gci_residual(sol, lam, pv, grid).relative;
  EXPECT_LT(r0, 1e-3);
  std::vector<double> shifted = sol.values();
  for (double& v : shifted) v += 0.1;
  const double r1 = gci_residual(GciSolution(p, shifted), lam, pv, grid).relative;
  EXPECT_GE(r1, 10.0 * r0);
}

TEST(GciResidual, DecaysUnderRefinement) {
  const GciSolution sol = solve_psi0(params(0.5));
  Rng g(65);
  const Rotation lam = haar_sample(g);
  const Vec3 pv(0.0, 0.0, 1.0);
  const double a = gci_residual(sol, lam, pv, AxisAngleGrid(16, 8, 16, lam)).relative;
  const double b = gci_residual(sol, lam, pv, AxisAngleGrid(32, 16, 32, lam)).relative;
  EXPECT_GE(a / b, 3.0);
}

TEST(SphereMoment, ClosedForms) {
  Rng g(67);
  const SphereMoment id = sphere_moment_identity(Mat3::Identity(), 100000, g);
  EXPECT_TRUE(id.closed_form.isApprox(Mat3::Identity() / 3.0));
  // with L = Id the integrand is n n^T exactly
  EXPECT_LT((id.monte_carlo - Mat3::Identity() / 3.0).cwiseAbs().maxCoeff(), 5 * id.standard_error.maxCoeff() + 1e-3);
  Mat3 l = Mat3::Zero();
  l(0, 1) = 1.0;
  const SphereMoment e12 = sphere_moment_identity(l, 1000000, g);
  Mat3 expect = Mat3::Zero();
  expect(0, 1) = expect(1, 0) = 1.0 / 15.0;
  EXPECT_TRUE(e12.closed_form.isApprox(expect));
  for (int i = 0; i < 9; ++i) EXPECT_LT(std::abs(e12.monte_carlo(i) - expect(i)), 4 * e12.standard_error(i) + 1e-15);
}

TEST(SphereMoment, FourthMoments) {
  Rng g(69);
  const std::size_t n = 1000000;
  double s4 = 0.0, s4sq = 0.0, s22 = 0.0, s22sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 v = uniform_sphere(g);
    const double a = std::pow(v[0], 4), b = v[0] * v[0] * v[1] * v[1];
    s4 += a;
    s4sq += a * a;
    s22 += b;
    s22sq += b * b;
  }
  const auto check = [&](double s, double sq, double expect) {
    const double m = s / n, se = std::sqrt((sq / n - m * m) / n);
    EXPECT_LT(std::abs(m - expect), 3 * se);
  };
  check(s4, s4sq, 1.0 / 5.0);
  check(s22, s22sq, 1.0 / 15.0);
}
