#include <gtest/gtest.h>

#include "bodyflock/equilibria.hpp"
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

TEST(NuSpec, PositivityAndAntiderivative) {
  EXPECT_THROW(NuSpec::polynomial({0.5, 1.0}), DomainError);  // negative at mu = -1.5
  EXPECT_THROW(NuSpec::constant(-1.0), DomainError);
  const NuSpec nu = NuSpec::polynomial({1.0, 0.5, 0.1});
  for (double mu : {-1.5, -0.3, 0.0, 0.7, 1.5}) {
    const double h = 1e-5;
    EXPECT_NEAR((nu.sigma(mu + h) - nu.sigma(mu - h)) / (2 * h), nu(mu), 1e-9);
  }
  EXPECT_EQ(nu.sigma(0.0), 0.0);
}

TEST(Normalizer, UniformLimits) {
  EXPECT_NEAR(normalizer_Z(params(1e6)), 1.0, 1e-5);
  EXPECT_LT(std::abs(normalizer_Z(params(1e3)) - 1.0), 2e-3);
}

TEST(Normalizer, MonteCarlo) {
  // Z = int exp(sigma(1/2 + cos theta) / d) dA with sigma(mu) = mu, d = 0.5
  const double z = normalizer_Z(params(0.5));
  Rng g(41);
  const std::size_t n = 10000000;
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::exp(2.0 * (0.5 + std::cos(rotation_angle(haar_sample(g).matrix()))));
    s += v;
    s2 += v * v;
  }
  const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_LT(std::abs(mean - z), 3 * se);
}

TEST(Density, InvarianceAndNormalization) {
  const VonMises vm(params(0.5));
  Rng g(43);
  for (int t = 0; t < 100; ++t) {
    const Rotation lam = haar_sample(g), a = haar_sample(g);
    EXPECT_NEAR(vm.density(lam, a), vm.density(Rotation(), lam.transpose() * a), 1e-13 * vm.density(lam, a));
    EXPECT_LE(vm.density(lam, a), vm.density(lam, lam));
  }
  const Rotation lam = haar_sample(g);
  const So3Quadrature q;
  EXPECT_NEAR(q.integrate([&](const Rotation& a) { return vm.density(lam, a); }), 1.0, 1e-8);
}

TEST(Sampler, MeanInnerProductAndIsotropy) {
  const VonMises vm(params(0.5));
  const VonMisesSampler sampler(vm);
  Rng g(45);
  const Rotation lam = haar_sample(g);
  const std::size_t n = 1000000;
  double s = 0.0, s2 = 0.0;
  Vec3 axis = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Rotation a = sampler(lam, g);
    const double x = inner(a.matrix(), lam.matrix());
    s += x;
    s2 += x * x;
    axis += to_axis_angle(lam.transpose() * a).axis;
  }
  const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
  const double expect = vm.theta_average([](double t) { return 0.5 + std::cos(t); });
  EXPECT_LT(std::abs(mean - expect), 3 * se);
  // each axis component has variance 1/3
  EXPECT_LT((axis / double(n)).cwiseAbs().maxCoeff(), 3 * std::sqrt(1.0 / 3.0 / n));
}

TEST(Sampler, RejectionAgreesWithInverseCdf) {
  const VonMises vm(params(1.0));
  const VonMisesSampler inv(vm), rej(vm, SamplerMode::rejection);
  Rng g(47);
  const std::size_t n = 200000;
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    a += std::cos(inv.sample_theta(g));
    b += std::cos(rej.sample_theta(g));
  }
  EXPECT_LT(std::abs(a - b) / n, 5 * std::sqrt(2.0 / n));
}

TEST(Sampler, ConcentratesForSmallNoise) {
  const VonMises vm(params(1e-3));
  const ThetaDensityTable table(vm);
  EXPECT_GT(table.mass(0.0, 0.2), 0.99);
  const VonMisesSampler sampler(vm);
  Rng g(49);
  int below = 0;
  for (int i = 0; i < 100000; ++i) below += sampler.sample_theta(g) < 0.2;
  EXPECT_GT(below, 99000);
}

TEST(FluxConstant, Limits) {
  EXPECT_GT(flux_constant_c1(params(1e-4)), 0.99);
  EXPECT_LT(flux_constant_c1(params(100.0)), 0.01);
  const double c1 = flux_constant_c1(params(0.5));
  EXPECT_GT(c1, 0.0);
  EXPECT_LT(c1, 1.0);
}

TEST(FluxConstant, ThreeDimensionalQuadrature) {
  const VonMises vm(params(0.5));
  const So3Quadrature q;
  const Mat3 mean = matrix_mean([&](const Rotation& a) { return vm.density(Rotation(), a); }, q);
  EXPECT_NEAR(inner(mean, Mat3::Identity()) / 1.5, vm.c1(), 1e-8 * vm.c1());
}

TEST(MatrixMean, ConsistencyRelation) {
  const VonMises vm(params(0.5));
  Rng g(51);
  const Rotation lam = haar_sample(g);
  const So3Quadrature q = So3Quadrature().centered(lam);
  const Mat3 mean = matrix_mean([&](const Rotation& a) { return vm.density(lam, a); }, q);
  EXPECT_LT((mean - vm.c1() * lam.matrix()).cwiseAbs().maxCoeff(), 1e-8);
  const Mat3 scaled = matrix_mean([&](const Rotation& a) { return 2.5 * vm.density(lam, a); }, q);
  EXPECT_LT((scaled - 2.5 * vm.c1() * lam.matrix()).cwiseAbs().maxCoeff(), 1e-8);
  const Mat3 uniform = matrix_mean([](const Rotation&) { return 1.0; });
  EXPECT_LT(uniform.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Grid, VolumesAndAntipodes) {
  const AxisAngleGrid grid(8, 4, 8);
  double v = 0.0;
  for (double x : grid.volumes()) v += x;
  EXPECT_NEAR(v, 1.0, 1e-14);
  EXPECT_THROW(AxisAngleGrid(8, 4, 7), DomainError);
  // the glued theta = pi face: n and -n give the same half turn
  for (std::size_t j = 0; j < 4; ++j) {
    for (std::size_t k = 0; k < 8; ++k) {
      const std::size_t c = grid.antipode(j, k);
      const double jj = static_cast<double>((c / 8) % 4), kk = static_cast<double>(c % 8);
      EXPECT_LT((grid.rotation_at(8.0 - 0.5, static_cast<double>(j), static_cast<double>(k)).matrix() -
                 grid.rotation_at(8.0 - 0.5, jj, kk).matrix()).norm(), 1e-12);
    }
  }
}

TEST(Collision, EquilibriumIsStationary) {
  const VonMises vm(params(0.5));
  Rng g(53);
  const Rotation lam = haar_sample(g);
  const Vec3 pv(0.4, -0.2, 0.9);
  for (std::size_t n : {8, 16, 32}) {
    const AxisAngleGrid grid(n, n / 2, n, lam);
    const auto sup = [&](const std::function<double(const Rotation&)>& fn) {
      double m = 0.0;
      for (double x : collision_operator_Q(grid, grid.sample(fn), vm).q) m = std::max(m, std::abs(x));
      return m;
    };
    const double eq = sup([&](const Rotation& a) { return 1.7 * vm.density(lam, a); });
    const double off = sup([&](const Rotation& a) {
      return 1.7 * vm.density(lam, a) * (1.0 + 0.1 * inner(lam.matrix() * hat(pv), a.matrix()));
    });
    EXPECT_LT(eq, 1e-6 * off) << "n=" << n;
  }
}

TEST(Collision, EntropyAndMass) {
  const VonMises vm(params(0.5));
  Rng g(55);
  const Rotation lam = haar_sample(g);
  const AxisAngleGrid grid(16, 8, 16, lam);
  for (int t = 0; t < 20; ++t) {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r(i) = g.normal();
    const auto f = grid.sample([&](const Rotation& a) { return vm.density(lam, a) * std::exp(0.4 * inner(r, a.matrix()) / 3.0); });
    const auto q = collision_operator_Q(grid, f, vm);
    EXPECT_LE(entropy_dissipation(grid, f, q), 0.0);
    double mass = 0.0, scale = 0.0;
    for (std::size_t c = 0; c < grid.size(); ++c) {
      mass += grid.volume(c) * q.q[c];
      scale += grid.volume(c) * std::abs(q.q[c]);
    }
    EXPECT_LT(std::abs(mass), 1e-12 * scale);
  }
}
