#pragma once

// Rotation-group geometry on 3x3 matrices.
//
// The inner product on matrices is A.B = tr(A^T B) / 2, so that
// hat(u).hat(v) = u.v and the geodesic distance from Id to a rotation of
// angle theta is theta. All constants downstream (noise scale, Haar density)
// assume this normalization.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "bodyflock/errors.hpp"

namespace bodyflock {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

/// [u]_x, the antisymmetric matrix with hat(u) * v = u x v.
inline Mat3 hat(const Vec3& u) {
  Mat3 m;
  m << 0.0, -u.z(), u.y(),
       u.z(), 0.0, -u.x(),
       -u.y(), u.x(), 0.0;
  return m;
}

/// Inverse of hat on antisymmetric matrices. Reads the antisymmetric part.
inline Vec3 vee_unchecked(const Mat3& m) {
  return 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

inline Vec3 vee(const Mat3& m) {
  const double sym = (m + m.transpose()).norm();
  if (sym > 1e-10 * m.norm()) {
    throw NotAntisymmetric("vee: matrix is not antisymmetric (|M+M^T| = " +
                           std::to_string(sym) + ")");
  }
  return vee_unchecked(m);
}

/// Half-trace inner product tr(A^T B) / 2.
inline double inner(const Mat3& a, const Mat3& b) { return 0.5 * a.cwiseProduct(b).sum(); }

/// Largest entrywise deviation of m^T m from the identity.
inline double orthogonality_defect(const Mat3& m) {
  return (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
}

/// An element of SO(3). Construction through `from_matrix` validates the
/// invariants; `unchecked` is for values produced by this library's own
/// geometric updates.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation identity() { return Rotation(); }

  static Rotation from_matrix(const Mat3& m, double tol = 1e-10) {
    if (!m.allFinite() || orthogonality_defect(m) > tol || std::abs(m.determinant() - 1.0) > tol) {
      throw DomainError("matrix is not a rotation");
    }
    return Rotation(m);
  }

  static Rotation unchecked(const Mat3& m) { return Rotation(m); }

  const Mat3& matrix() const noexcept { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  Rotation transpose() const { return Rotation(m_.transpose()); }
  Rotation inverse() const { return transpose(); }

  Vec3 col(int j) const { return m_.col(j); }

  friend Rotation operator*(const Rotation& a, const Rotation& b) { return Rotation(a.m_ * b.m_); }
  friend Vec3 operator*(const Rotation& a, const Vec3& v) { return a.m_ * v; }

  bool is_valid(double tol = 1e-10) const {
    return m_.allFinite() && orthogonality_defect(m_) <= tol &&
           std::abs(m_.determinant() - 1.0) <= tol;
  }

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// Euler axis-angle pair. theta in [0, pi], unit axis.
struct AxisAngle {
  double theta = 0.0;
  Vec3 axis = Vec3::UnitX();
};

/// Rodrigues: Id + sin(theta) [n]_x + (1 - cos(theta)) [n]_x^2.
inline Rotation from_axis_angle(const AxisAngle& p) {
  const Mat3 k = hat(p.axis);
  return Rotation::unchecked(Mat3::Identity() + std::sin(p.theta) * k +
                             (1.0 - std::cos(p.theta)) * k * k);
}

/// exp([w]_x) for an arbitrary rotation vector w (Rodrigues, expanded entrywise).
inline Rotation exp_so3(const Vec3& w) {
  const double t2 = w.squaredNorm();
  double a;
  double b;
  if (t2 < 1e-8) {
    a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  } else {
    const double t = std::sqrt(t2);
    a = std::sin(t) / t;
    b = (1.0 - std::cos(t)) / t2;
  }
  // Id + a [w]_x + b [w]_x^2, with [w]_x^2 = w w^T - |w|^2 Id
  const double x = w.x(), y = w.y(), z = w.z();
  Mat3 m;
  m(0, 0) = 1.0 - b * (y * y + z * z);
  m(0, 1) = b * x * y - a * z;
  m(0, 2) = b * x * z + a * y;
  m(1, 0) = b * x * y + a * z;
  m(1, 1) = 1.0 - b * (x * x + z * z);
  m(1, 2) = b * y * z - a * x;
  m(2, 0) = b * x * z - a * y;
  m(2, 1) = b * y * z + a * x;
  m(2, 2) = 1.0 - b * (x * x + y * y);
  return Rotation::unchecked(m);
}

/// Rotation angle in [0, pi], computed with atan2 so it stays accurate near 0 and pi.
inline double rotation_angle(const Mat3& a) {
  const double s = vee_unchecked(a).norm();  // sin(theta)
  const double c = 0.5 * (a.trace() - 1.0);  // cos(theta)
  return std::atan2(s, c);
}

/// Inverse of Rodrigues' formula. The axis is canonical (e1) at theta = 0; near
/// theta = pi it is read from the symmetric part, since the antisymmetric part
/// vanishes there.
inline AxisAngle to_axis_angle(const Rotation& r) {
  const Mat3& a = r.matrix();
  const Vec3 w = vee_unchecked(a);  // sin(theta) n
  const double s = w.norm();
  const double c = 0.5 * (a.trace() - 1.0);
  const double theta = std::atan2(s, c);
  AxisAngle out;
  out.theta = theta;
  if (s == 0.0 && c > 0.0) return out;
  if (theta < kPi - 1e-4) {
    out.axis = w / s;
    return out;
  }
  // n n^T = (S - cos(theta) Id) / (1 - cos(theta)), S the symmetric part.
  const Mat3 nn = (0.5 * (a + a.transpose()) - c * Mat3::Identity()) / (1.0 - c);
  int j = 0;
  nn.diagonal().maxCoeff(&j);
  Vec3 n = nn.col(j);
  n.normalize();
  if (n.dot(w) < 0.0) n = -n;
  out.axis = n;
  return out;
}

/// Orthogonal projection onto the tangent space at A: (M - A M^T A) / 2.
inline Mat3 project_tangent(const Rotation& a, const Mat3& m) {
  return 0.5 * (m - a.matrix() * m.transpose() * a.matrix());
}

/// Default singularity threshold for polar_rotation: 1e-9 |M|^3.
inline double default_det_threshold(const Mat3& m) {
  const double n = m.norm();
  return 1e-9 * n * n * n;
}

namespace detail {

/// One Newton step of the polar iteration X <- (X + X^{-T}) / 2.
inline Mat3 polar_newton_step(const Mat3& x) {
  Mat3 cof;
  cof.col(0) = x.col(1).cross(x.col(2));
  cof.col(1) = x.col(2).cross(x.col(0));
  cof.col(2) = x.col(0).cross(x.col(1));
  const double det = x.col(0).dot(cof.col(0));
  return 0.5 * (x + cof / det);
}

}  // namespace detail

/// Rotation factor of the polar decomposition M = A S, A = M (M^T M)^{-1/2},
/// via a symmetric eigendecomposition of M^T M. A maximizes inner(A, M) over
/// SO(3) when det M > 0.
inline Rotation polar_rotation(const Mat3& m, std::optional<double> det_threshold = std::nullopt) {
  if (!m.allFinite()) throw SingularMatrix("polar_rotation: non-finite matrix");
  const double det = m.determinant();
  const double eps = det_threshold.value_or(default_det_threshold(m));
  if (std::abs(det) <= eps) {
    throw SingularMatrix("polar_rotation: |det M| = " + std::to_string(std::abs(det)) +
                         " below threshold");
  }
  if (det < 0.0) throw NegativeDeterminant("polar_rotation: det M < 0");
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(m.transpose() * m);
  const Eigen::Vector3d inv_sqrt = eig.eigenvalues().cwiseSqrt().cwiseInverse();
  Mat3 a = m * eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
  a = detail::polar_newton_step(a);
  return Rotation::unchecked(a);
}

/// Polar re-projection for a matrix already close to SO(3) (accumulated
/// rounding after an exponential update). Newton polar iteration.
inline Rotation reproject(const Mat3& m) {
  Mat3 x = m;
  for (int it = 0; it < 4; ++it) {
    const Mat3 next = detail::polar_newton_step(x);
    const double change = (next - x).cwiseAbs().maxCoeff();
    x = next;
    if (change < 1e-15) break;
  }
  return Rotation::unchecked(x);
}

/// A tangent vector base * [body]_x at `base`.
struct TangentVector {
  Rotation base;
  Vec3 body = Vec3::Zero();

  Mat3 matrix() const { return base.matrix() * hat(body); }
};

}  // namespace bodyflock
