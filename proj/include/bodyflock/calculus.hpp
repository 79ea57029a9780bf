#pragma once

// Differential operators on SO(3) in Euler axis-angle coordinates (theta, n).
//
// The metric in these coordinates is diagonal, ds^2 = dtheta^2 + 4 sin^2(theta/2) |dn|^2,
// so for a tangent vector A[w]_x the squared norm (under the half-trace inner
// product) is |w|^2.

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "bodyflock/so3.hpp"

namespace bodyflock {

/// Scalar function of axis-angle coordinates.
using AxisAngleFunction = std::function<double(double theta, const Vec3& n)>;

/// Optional analytic derivatives: d/dtheta and the sphere gradient (tangent to n).
struct AxisAngleDerivatives {
  std::function<double(double, const Vec3&)> d_theta;
  std::function<Vec3(double, const Vec3&)> grad_n;
};

inline constexpr double kThetaMargin = 1e-6;
inline constexpr double kFirstDerivativeStep = 1e-5;
inline constexpr double kSecondDerivativeStep = 1e-4;

namespace detail {

inline void check_theta(double theta) {
  if (!(theta > kThetaMargin && theta < kPi - kThetaMargin)) {
    throw DomainError("axis-angle operator: theta outside (1e-6, pi - 1e-6)");
  }
}

/// Orthonormal basis (t1, t2) of the plane orthogonal to unit n.
inline std::pair<Vec3, Vec3> tangent_basis(const Vec3& n) {
  const Vec3 seed = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 t1 = (seed - seed.dot(n) * n).normalized();
  return {t1, n.cross(t1)};
}

/// Point reached from n along the great circle with initial direction t.
inline Vec3 sphere_geodesic(const Vec3& n, const Vec3& t, double s) {
  return std::cos(s) * n + std::sin(s) * t;
}

}  // namespace detail

/// Sphere gradient by central differences along two orthogonal great circles.
inline Vec3 sphere_gradient(const AxisAngleFunction& f, double theta, const Vec3& n,
                            double h = kFirstDerivativeStep) {
  const auto [t1, t2] = detail::tangent_basis(n);
  const double d1 = (f(theta, detail::sphere_geodesic(n, t1, h)) - f(theta, detail::sphere_geodesic(n, t1, -h))) / (2 * h);
  const double d2 = (f(theta, detail::sphere_geodesic(n, t2, h)) - f(theta, detail::sphere_geodesic(n, t2, -h))) / (2 * h);
  return d1 * t1 + d2 * t2;
}

/// Sphere Laplace-Beltrami: sum of second derivatives along two orthogonal geodesics.
inline double sphere_laplacian(const AxisAngleFunction& f, double theta, const Vec3& n,
                               double h = kSecondDerivativeStep) {
  const auto [t1, t2] = detail::tangent_basis(n);
  const double f0 = f(theta, n);
  double acc = 0.0;
  for (const Vec3& t : {t1, t2}) {
    acc += f(theta, detail::sphere_geodesic(n, t, h)) - 2 * f0 + f(theta, detail::sphere_geodesic(n, t, -h));
  }
  return acc / (h * h);
}

/// Body-frame representation w of grad f at A(theta, n), i.e. grad f = A [w]_x:
///   w = d_theta f n + (cos(theta/2) grad_n f - sin(theta/2) n x grad_n f) / (2 sin(theta/2)).
inline TangentVector grad_axis_angle(const AxisAngleFunction& f, const AxisAngle& p,
                                     const std::optional<AxisAngleDerivatives>& analytic = std::nullopt) {
  detail::check_theta(p.theta);
  const double th = p.theta;
  const Vec3& n = p.axis;
  double d_theta;
  Vec3 g_n;
  if (analytic && analytic->d_theta && analytic->grad_n) {
    d_theta = analytic->d_theta(th, n);
    g_n = analytic->grad_n(th, n);
  } else {
    const double h = kFirstDerivativeStep;
    d_theta = (f(th + h, n) - f(th - h, n)) / (2 * h);
    g_n = sphere_gradient(f, th, n);
  }
  const double s = std::sin(0.5 * th);
  const double c = std::cos(0.5 * th);
  TangentVector out{from_axis_angle(p), d_theta * n + (c * g_n - s * n.cross(g_n)) / (2 * s)};
  return out;
}

/// Laplace-Beltrami operator:
///   (1/sin^2(theta/2)) d_theta(sin^2(theta/2) d_theta f) + Delta_n f / (4 sin^2(theta/2)).
inline double laplacian_axis_angle(const AxisAngleFunction& f, const AxisAngle& p) {
  detail::check_theta(p.theta);
  const double th = p.theta;
  const Vec3& n = p.axis;
  const double h = kSecondDerivativeStep;
  const auto s2 = [](double t) {
    const double s = std::sin(0.5 * t);
    return s * s;
  };
  const double f0 = f(th, n);
  const double radial =
      (s2(th + 0.5 * h) * (f(th + h, n) - f0) - s2(th - 0.5 * h) * (f0 - f(th - h, n))) / (h * h);
  return (radial + 0.25 * sphere_laplacian(f, th, n)) / s2(th);
}

/// Integrates dA/dt = nu(A.B) P_{T_A}(B) with classical RK4 and polar
/// re-projection after each step. The solution stays on the geodesic
/// B exp(theta(t) [n]_x) through A0.
template <class Nu>
std::vector<Rotation> geodesic_relax(const Rotation& a0, const Rotation& b, Nu&& nu, double t_end,
                                     double dt) {
  if (!(dt > 0.0)) throw DomainError("geodesic_relax: dt must be positive");
  const auto rhs = [&](const Mat3& a) {
    const Rotation ar = Rotation::unchecked(a);
    return Mat3(nu(inner(a, b.matrix())) * project_tangent(ar, b.matrix()));
  };
  std::vector<Rotation> traj{a0};
  const auto steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  Mat3 a = a0.matrix();
  for (long k = 0; k < steps; ++k) {
    const double h = std::min(dt, t_end - static_cast<double>(k) * dt);
    const Mat3 k1 = rhs(a);
    const Mat3 k2 = rhs(a + 0.5 * h * k1);
    const Mat3 k3 = rhs(a + 0.5 * h * k2);
    const Mat3 k4 = rhs(a + h * k3);
    a = reproject(a + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)).matrix();
    traj.push_back(Rotation::unchecked(a));
  }
  return traj;
}

}  // namespace bodyflock
