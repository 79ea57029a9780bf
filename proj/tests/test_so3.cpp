#include <gtest/gtest.h>

#include "bodyflock/calculus.hpp"
#include "bodyflock/quadrature.hpp"
#include "bodyflock/rng.hpp"

using namespace bodyflock;

namespace {

Mat3 series_exp(const Mat3& x, int terms = 30) {
  Mat3 sum = Mat3::Identity(), term = Mat3::Identity();
  for (int k = 1; k < terms; ++k) {
    term = term * x / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

Mat3 random_matrix(Rng& g) {
  Mat3 m;
  for (int i = 0; i < 9; ++i) m(i) = g.normal();
  return m;
}

}  // namespace

TEST(Hat, CanonicalBasis) {
  EXPECT_TRUE((hat(Vec3::UnitX()) * Vec3::UnitY()).isApprox(Vec3::UnitZ()));
  EXPECT_TRUE(hat(Vec3::Zero()).isZero(0.0));
}

TEST(Hat, MatchesCrossProduct) {
  Rng g(3);
  const Vec3 u(1, 2, 3);
  for (int t = 0; t < 10; ++t) {
    const Vec3 v(g.normal(), g.normal(), g.normal());
    const Vec3 cross(u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]);
    EXPECT_LT((hat(u) * v - cross).norm(), 1e-14);
  }
}

TEST(Vee, RoundTripAndErrors) {
  const Vec3 u(0.3, -1.2, 2.5);
  EXPECT_LT((vee(hat(u)) - u).norm(), 1e-15);
  EXPECT_TRUE(vee(Mat3::Zero()).isZero(0.0));
  Mat3 s;
  s << 1, 2, 3, 2, 4, 5, 3, 5, 6;
  EXPECT_THROW(vee(s), NotAntisymmetric);
}

TEST(AxisAngle, FromAxisAngle) {
  EXPECT_TRUE(from_axis_angle({0.0, Vec3(0, 0.6, 0.8)}).matrix().isApprox(Mat3::Identity()));
  const Mat3 q = from_axis_angle({kPi / 2, Vec3::UnitZ()}).matrix();
  EXPECT_LT((q * Vec3::UnitX() - Vec3::UnitY()).norm(), 1e-15);
  EXPECT_LT((q * Vec3::UnitY() + Vec3::UnitX()).norm(), 1e-15);
  EXPECT_LT((q * Vec3::UnitZ() - Vec3::UnitZ()).norm(), 1e-15);
  Rng g(5);
  for (int t = 0; t < 20; ++t) {
    const double th = kPi * g.uniform();
    const Vec3 n = uniform_sphere(g);
    const Mat3 r = from_axis_angle({th, n}).matrix();
    EXPECT_LT((r - series_exp(th * hat(n))).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((exp_so3(th * n).matrix() - r).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT(orthogonality_defect(r), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
  }
}

TEST(AxisAngle, ToAxisAngle) {
  EXPECT_EQ(to_axis_angle(Rotation()).theta, 0.0);
  const auto q = to_axis_angle(from_axis_angle({kPi / 2, Vec3::UnitZ()}));
  EXPECT_NEAR(q.theta, kPi / 2, 1e-15);
  EXPECT_LT((q.axis - Vec3::UnitZ()).norm(), 1e-15);
  const Mat3 flip = Vec3(1, -1, -1).asDiagonal();
  const auto p = to_axis_angle(Rotation::from_matrix(flip));
  EXPECT_NEAR(p.theta, kPi, 1e-15);
  EXPECT_NEAR(std::abs(p.axis.dot(Vec3::UnitX())), 1.0, 1e-12);
  Rng g(7);
  for (int t = 0; t < 200; ++t) {
    const double th = t < 100 ? kPi * g.uniform() : kPi - 1e-6 * g.uniform();
    const Vec3 n = uniform_sphere(g);
    const auto back = to_axis_angle(from_axis_angle({th, n}));
    EXPECT_NEAR(back.theta, th, 1e-9);
    EXPECT_NEAR(back.axis.norm(), 1.0, 1e-12);
    EXPECT_TRUE(from_axis_angle(back).matrix().isApprox(from_axis_angle({th, n}).matrix(), 1e-9));
  }
}

TEST(Inner, Identities) {
  EXPECT_DOUBLE_EQ(inner(Mat3::Identity(), Mat3::Identity()), 1.5);
  const Vec3 u(1, 2, -1), v(0.5, -3, 2);
  EXPECT_NEAR(inner(hat(u), hat(v)), u.dot(v), 1e-14);
  Rng g(9);
  const Rotation a = haar_sample(g);
  EXPECT_NEAR(inner(a.matrix(), a.matrix()), 1.5, 1e-14);
}

TEST(ProjectTangent, Orthogonality) {
  Mat3 s = Mat3::Random();
  s = s + s.transpose().eval();
  EXPECT_LT(project_tangent(Rotation(), s).norm(), 1e-15);
  const Mat3 p = hat(Vec3(0.3, 0.1, -2));
  EXPECT_LT((project_tangent(Rotation(), p) - p).norm(), 1e-15);
  Rng g(11);
  const Rotation a = haar_sample(g);
  const Mat3 m = random_matrix(g);
  const Mat3 t = project_tangent(a, m);
  for (int k = 0; k < 10; ++k) {
    Mat3 sym = random_matrix(g);
    sym = sym + sym.transpose().eval();
    EXPECT_NEAR(inner(t, a.matrix() * sym), 0.0, 1e-13);
  }
}

TEST(Polar, GeodesicMidpoint) {
  Rng g(13);
  for (int t = 0; t < 10; ++t) {
    const Rotation a2 = haar_sample(g);
    const double th = 3.0 * g.uniform();
    const Vec3 n = uniform_sphere(g);
    const Rotation a1 = from_axis_angle({th, n}) * a2;  // a1 a2^T = exp(th [n])
    const Mat3 expect = a2.matrix() * from_axis_angle({0.5 * th, a2.matrix().transpose() * n}).matrix();
    const Rotation mid = polar_rotation(0.5 * (a1.matrix() + a2.matrix()));
    EXPECT_LT((mid.matrix() - expect).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Polar, ThreeMatrixAverageAndDilation) {
  // three half turns about the coordinate axes average to -Id/3
  const Mat3 m = (Mat3(Vec3(1, -1, -1).asDiagonal()) + Mat3(Vec3(-1, 1, -1).asDiagonal()) +
                  Mat3(Vec3(-1, -1, 1).asDiagonal())) / 3.0;
  EXPECT_TRUE(m.isApprox(-Mat3::Identity() / 3.0));
  EXPECT_THROW(polar_rotation(m), NegativeDeterminant);
  EXPECT_THROW(polar_rotation(Mat3::Zero()), SingularMatrix);
  Rng g(15);
  const Rotation r = haar_sample(g);
  EXPECT_LT((polar_rotation(2.5 * r.matrix()).matrix() - r.matrix()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Haar, Weight) {
  EXPECT_EQ(haar_weight(0.0), 0.0);
  EXPECT_NEAR(haar_weight(kPi), 2.0 / kPi, 1e-15);
  const int n = 4096;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = kPi * i / (n - 1), b = kPi * (i + 1) / (n - 1);
    if (i + 1 < n) s += 0.5 * (b - a) * (haar_weight(a) + haar_weight(b));
  }
  EXPECT_NEAR(s, 1.0, 1e-10);
}

TEST(Quadrature, Normalization) {
  const So3Quadrature q;
  EXPECT_NEAR(q.integrate([](const Rotation&) { return 1.0; }), 1.0, 1e-10);
  const Mat3 mean = q.integrate([](const Rotation& a) { return a.matrix(); });
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Quadrature, SquaredTraceAgainstMonteCarlo) {
  const So3Quadrature q;
  const auto f = [](const Rotation& a) { return std::pow(inner(a.matrix(), Mat3::Identity()), 2); };
  const double exact = q.integrate(f);
  Rng g(17);
  const std::size_t n = 10000000;
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = f(haar_sample(g));
    s += v;
    s2 += v * v;
  }
  const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_LT(std::abs(mean - exact), 3 * se);
}

TEST(Quadrature, CenteredRuleIsLeftTranslated) {
  Rng g(19);
  const Rotation c = haar_sample(g);
  const So3Quadrature q = So3Quadrature().centered(c);
  EXPECT_NEAR(q.integrate([](const Rotation&) { return 1.0; }), 1.0, 1e-10);
}

TEST(HaarSample, Moments) {
  Rng g(21);
  const std::size_t n = 1000000;
  double tr = 0.0, tr2 = 0.0;
  std::size_t below = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Rotation a = haar_sample(g);
    const double t = a.matrix().trace();
    tr += t;
    tr2 += t * t;
    below += rotation_angle(a.matrix()) < kPi / 2;
  }
  const double mean = tr / n, se = std::sqrt((tr2 / n - mean * mean) / n);
  EXPECT_LT(std::abs(mean), 3 * se);
  const double p = haar_cdf(kPi / 2);
  EXPECT_NEAR(p, (kPi - 2) / (2 * kPi), 1e-15);
  EXPECT_LT(std::abs(below / double(n) - p), 3 * std::sqrt(p * (1 - p) / n));
}

TEST(HaarSample, Deterministic) {
  Rng a(23), b(23);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(haar_sample(a).matrix(), haar_sample(b).matrix());
}

TEST(CounterRng, KeyedByStepAndAgent) {
  const CounterRng r(42);
  EXPECT_EQ(r.normal3(3, 7), r.normal3(3, 7));
  EXPECT_NE(r.normal3(3, 7), r.normal3(3, 8));
  EXPECT_NE(r.normal3(4, 7), r.normal3(3, 7));
}

TEST(Calculus, GradientOfLinearFunction) {
  Rng g(25);
  const Mat3 b = random_matrix(g);
  const AxisAngleFunction f = [&](double th, const Vec3& n) { return inner(from_axis_angle({th, n}).matrix(), b); };
  for (int t = 0; t < 5; ++t) {
    const AxisAngle p{0.2 + 2.7 * g.uniform(), uniform_sphere(g)};
    const Mat3 grad = grad_axis_angle(f, p).matrix();
    EXPECT_LT((grad - project_tangent(from_axis_angle(p), b)).cwiseAbs().maxCoeff(), 1e-8);
  }
  const AxisAngleFunction one = [](double, const Vec3&) { return 1.0; };
  EXPECT_LT(grad_axis_angle(one, {1.0, Vec3::UnitY()}).body.norm(), 1e-12);
  EXPECT_NEAR(laplacian_axis_angle(one, {1.0, Vec3::UnitY()}), 0.0, 1e-8);
}

TEST(Calculus, GradientMatchesCurveDerivative) {
  Rng g(27);
  const Mat3 b = random_matrix(g), c = random_matrix(g);
  const auto fa = [&](const Mat3& a) { return std::exp(0.3 * inner(a, b)) + std::pow(inner(a, c), 2); };
  const AxisAngleFunction f = [&](double th, const Vec3& n) { return fa(from_axis_angle({th, n}).matrix()); };
  for (int t = 0; t < 5; ++t) {
    const AxisAngle p{0.3 + 2.5 * g.uniform(), uniform_sphere(g)};
    const Mat3 a = from_axis_angle(p).matrix();
    const Vec3 w(g.normal(), g.normal(), g.normal());
    const double h = 1e-6;
    const double fd = (fa(a * exp_so3(h * w).matrix()) - fa(a * exp_so3(-h * w).matrix())) / (2 * h);
    const double an = inner(grad_axis_angle(f, p).matrix(), a * hat(w));
    EXPECT_NEAR(an, fd, 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST(Calculus, LaplacianOfAxisProjection) {
  const Vec3 pv(0.3, -0.4, 1.1);
  const AxisAngleFunction f = [&](double, const Vec3& n) { return pv.dot(n); };
  Rng g(29);
  for (int t = 0; t < 5; ++t) {
    const AxisAngle p{0.3 + 2.5 * g.uniform(), uniform_sphere(g)};
    const double expect = -pv.dot(p.axis) / (2 * std::pow(std::sin(0.5 * p.theta), 2));
    EXPECT_NEAR(laplacian_axis_angle(f, p), expect, 1e-5 * std::max(1.0, std::abs(expect)));
  }
}

TEST(Calculus, GreenIdentity) {
  // int f Lap g = - int grad f . grad g for smooth f, g on the group
  Rng g(31);
  const Mat3 b = random_matrix(g), c = random_matrix(g);
  const AxisAngleFunction f = [&](double th, const Vec3& n) { return std::exp(0.2 * inner(from_axis_angle({th, n}).matrix(), b)); };
  const AxisAngleFunction h = [&](double th, const Vec3& n) { return std::sin(0.3 * inner(from_axis_angle({th, n}).matrix(), c)); };
  const So3Quadrature q(48, 110);
  double lhs = 0.0, rhs = 0.0;
  q.for_each([&](double w, double th, const Vec3& n, const Rotation&) {
    const AxisAngle p{th, n};
    lhs += w * f(p.theta, p.axis) * laplacian_axis_angle(h, p);
    rhs -= w * inner(grad_axis_angle(f, p).matrix(), grad_axis_angle(h, p).matrix());
  });
  EXPECT_NEAR(lhs, rhs, 1e-4 * std::abs(rhs));
}

TEST(Geodesic, FixedPoints) {
  Rng g(33);
  const Rotation b = haar_sample(g);
  const auto nu = [](double) { return 1.0; };
  for (const auto& a : geodesic_relax(b, b, nu, 1.0, 1e-2)) EXPECT_LT((a.matrix() - b.matrix()).norm(), 1e-14);
  const Rotation a0 = b * from_axis_angle({kPi, Vec3::UnitZ()});
  for (const auto& a : geodesic_relax(a0, b, nu, 1.0, 1e-2)) EXPECT_LT((a.matrix() - a0.matrix()).norm(), 1e-12);
}

TEST(Geodesic, AxisFixedAndDecayBounded) {
  Rng g(35);
  const Rotation b = haar_sample(g);
  const Vec3 n0 = uniform_sphere(g);
  const auto traj = geodesic_relax(b * from_axis_angle({2.0, n0}), b, [](double) { return 1.0; }, 8.0, 1e-3);
  double prev = 10.0, worst = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto p = to_axis_angle(b.transpose() * traj[k]);
    EXPECT_LT((p.axis - n0).norm(), 1e-8);
    EXPECT_LT(p.theta, prev);
    prev = p.theta;
    worst = std::max(worst, p.theta * std::exp(1e-3 * static_cast<double>(k)));  // nu(3/2) = 1
  }
  EXPECT_LT(worst, 50.0);
}
