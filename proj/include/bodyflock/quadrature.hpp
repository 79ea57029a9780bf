#pragma once

// Integration over SO(3) in axis-angle coordinates. The Haar measure splits as
// W(theta) d(theta) x dn, with W(theta) = (2/pi) sin^2(theta/2) and dn the
// normalized surface measure on S^2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include <boost/math/special_functions/fpclassify.hpp>  // pchip.hpp uses isnan unqualified
#include <boost/math/interpolators/pchip.hpp>

#include "bodyflock/rng.hpp"
#include "bodyflock/so3.hpp"

namespace bodyflock {

/// Haar density of the rotation angle.
inline double haar_weight(double theta) {
  const double s = std::sin(0.5 * theta);
  return (2.0 / kPi) * s * s;
}

/// Haar cumulative distribution of the rotation angle, (theta - sin theta) / pi.
inline double haar_cdf(double theta) { return (theta - std::sin(theta)) / kPi; }

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

/// n-point Gauss-Legendre rule on [a, b] (Newton iteration on P_n).
inline QuadratureRule gauss_legendre(std::size_t n, double a = -1.0, double b = 1.0) {
  if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  const auto m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    double x = std::cos(kPi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = mid - half * x;
    rule.nodes[n - 1 - i] = mid + half * x;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  return rule;
}

/// Composite Gauss-Legendre: `panels` equal panels of `order` nodes each.
inline QuadratureRule composite_gauss_legendre(std::size_t panels, std::size_t order, double a,
                                               double b) {
  const QuadratureRule ref = gauss_legendre(order);
  QuadratureRule rule;
  const double h = (b - a) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + h * static_cast<double>(p);
    for (std::size_t i = 0; i < order; ++i) {
      rule.nodes.push_back(lo + 0.5 * h * (ref.nodes[i] + 1.0));
      rule.weights.push_back(0.5 * h * ref.weights[i]);
    }
  }
  return rule;
}

/// Product rule on S^2: Gauss-Legendre in z = cos(polar angle) times the
/// trapezoid rule in azimuth. Exact for spherical harmonics of degree
/// < min(2 n_z, n_az). Weights sum to 1.
struct SphereRule {
  std::vector<Vec3> points;
  std::vector<double> weights;

  static SphereRule product(std::size_t n_z, std::size_t n_az = 0) {
    if (n_az == 0) n_az = 2 * n_z;
    const QuadratureRule gz = gauss_legendre(n_z);
    SphereRule s;
    for (std::size_t i = 0; i < n_z; ++i) {
      const double z = gz.nodes[i];
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      for (std::size_t k = 0; k < n_az; ++k) {
        const double phi = 2.0 * kPi * (static_cast<double>(k) + 0.5) / static_cast<double>(n_az);
        s.points.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
        s.weights.push_back(0.5 * gz.weights[i] / static_cast<double>(n_az));
      }
    }
    return s;
  }

  /// Product rule with roughly `n_points` nodes.
  static SphereRule with_points(std::size_t n_points) {
    const auto n_z = static_cast<std::size_t>(
        std::max(2.0, std::round(std::sqrt(static_cast<double>(n_points) / 2.0))));
    return product(n_z);
  }

  std::size_t size() const { return points.size(); }
};

/// Product quadrature for the Haar measure on SO(3): Gauss-Legendre in theta
/// (weighted by W) times a sphere rule for the axis.
class So3Quadrature {
 public:
  static constexpr std::size_t kDefaultTheta = 256;
  static constexpr std::size_t kDefaultSphere = 302;

  explicit So3Quadrature(std::size_t n_theta = kDefaultTheta, std::size_t n_sphere = kDefaultSphere)
      : theta_(gauss_legendre(n_theta, 0.0, kPi)), sphere_(SphereRule::with_points(n_sphere)) {
    for (std::size_t i = 0; i < theta_.size(); ++i) theta_.weights[i] *= haar_weight(theta_.nodes[i]);
  }

  So3Quadrature(QuadratureRule theta_rule, SphereRule sphere) : theta_(std::move(theta_rule)), sphere_(std::move(sphere)) {
    for (std::size_t i = 0; i < theta_.size(); ++i) theta_.weights[i] *= haar_weight(theta_.nodes[i]);
  }

  /// Same rule with nodes left-translated by `c` (still a Haar rule, by
  /// invariance); useful when the integrand is peaked at c.
  So3Quadrature centered(const Rotation& c) const {
    So3Quadrature q = *this;
    q.center_ = c;
    q.centered_ = true;
    return q;
  }

  const QuadratureRule& theta_rule() const { return theta_; }
  const SphereRule& sphere_rule() const { return sphere_; }
  std::size_t size() const { return theta_.size() * sphere_.size(); }

  /// Visit every node: fn(weight, theta, axis, rotation).
  template <class Fn>
  void for_each(Fn&& fn, std::size_t theta_begin = 0, std::size_t theta_end = SIZE_MAX) const {
    theta_end = std::min(theta_end, theta_.size());
    for (std::size_t i = theta_begin; i < theta_end; ++i) {
      const double th = theta_.nodes[i];
      const double st = std::sin(th);
      const double omc = 1.0 - std::cos(th);
      for (std::size_t k = 0; k < sphere_.size(); ++k) {
        const Vec3& n = sphere_.points[k];
        const Mat3 kx = hat(n);
        Mat3 m = Mat3::Identity() + st * kx + omc * kx * kx;
        if (centered_) m = center_.matrix() * m;
        const Rotation a = Rotation::unchecked(m);
        fn(theta_.weights[i] * sphere_.weights[k], th, n, a);
      }
    }
  }

  /// Integral of f over SO(3); f may return double or Mat3. The theta range
  /// allows caller-partitioned map-reduce.
  template <class F>
  auto integrate(F&& f, std::size_t theta_begin = 0, std::size_t theta_end = SIZE_MAX) const {
    using R = std::decay_t<decltype(f(Rotation{}))>;
    R acc = zero_like<R>();
    for_each([&](double w, double, const Vec3&, const Rotation& a) { acc += w * f(a); }, theta_begin,
             theta_end);
    return acc;
  }

 private:
  template <class R>
  static R zero_like() {
    if constexpr (std::is_arithmetic_v<R>) {
      return R{0};
    } else {
      return R::Zero();
    }
  }

  QuadratureRule theta_;
  SphereRule sphere_;
  Rotation center_;
  bool centered_ = false;
};

/// Inverse-CDF sampler for a density on [0, pi] tabulated on a uniform grid.
/// The cumulative is integrated per interval with 4-point Gauss, and the
/// inverse is a monotone cubic (PCHIP) through the strictly increasing part.
class InverseCdfTable {
 public:
  InverseCdfTable() = default;

  /// `density` need not be normalized.
  InverseCdfTable(const std::function<double(double)>& density, std::size_t n_nodes = 4096) {
    if (n_nodes < 4) throw std::invalid_argument("InverseCdfTable: need at least 4 nodes");
    const QuadratureRule g4 = gauss_legendre(4);
    const double h = kPi / static_cast<double>(n_nodes - 1);
    std::vector<double> cdf(n_nodes, 0.0);
    nodes_.resize(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) nodes_[i] = h * static_cast<double>(i);
    for (std::size_t i = 1; i < n_nodes; ++i) {
      const double lo = nodes_[i - 1];
      double acc = 0.0;
      for (std::size_t q = 0; q < 4; ++q) acc += g4.weights[q] * density(lo + 0.5 * h * (g4.nodes[q] + 1.0));
      cdf[i] = cdf[i - 1] + 0.5 * h * acc;
    }
    total_ = cdf.back();
    if (!(total_ > 0.0) || !std::isfinite(total_)) throw DomainError("InverseCdfTable: density has no mass");
    for (double& c : cdf) c /= total_;
    cdf_ = cdf;

    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < n_nodes; ++i) {
      if (xs.empty() || cdf[i] > xs.back() + 1e-15) {
        xs.push_back(cdf[i]);
        ys.push_back(nodes_[i]);
      }
    }
    if (xs.back() < 1.0) {
      xs.push_back(1.0);
      ys.push_back(kPi);
    }
    while (xs.size() < 4) {  // degenerate (point-mass-like) tables
      xs.push_back(xs.back() + 1e-12);
      ys.push_back(ys.back());
    }
    using boost::math::interpolators::pchip;
    inverse_ = std::make_shared<pchip<std::vector<double>>>(std::move(xs), std::move(ys));
  }

  /// theta with CDF(theta) = u.
  double quantile(double u) const {
    const double t = (*inverse_)(std::clamp(u, 0.0, 1.0));
    return std::clamp(t, 0.0, kPi);
  }

  template <class G>
  double sample(G& g) const {
    return quantile(g.uniform());
  }

  /// Tabulated CDF at theta (linear between nodes).
  double cdf(double theta) const {
    theta = std::clamp(theta, 0.0, kPi);
    const double h = nodes_[1] - nodes_[0];
    const auto i = std::min(static_cast<std::size_t>(theta / h), nodes_.size() - 2);
    const double t = (theta - nodes_[i]) / h;
    return (1.0 - t) * cdf_[i] + t * cdf_[i + 1];
  }

  /// Integral of the unnormalized density over [0, pi].
  double total_mass() const { return total_; }

 private:
  std::vector<double> nodes_;
  std::vector<double> cdf_;
  double total_ = 0.0;
  std::shared_ptr<boost::math::interpolators::pchip<std::vector<double>>> inverse_;
};

/// Haar-distributed rotations: angle by inverse CDF of W, axis uniform.
class HaarSampler {
 public:
  explicit HaarSampler(std::size_t n_nodes = 4096) : table_(haar_weight, n_nodes) {}

  template <class G>
  Rotation operator()(G& g) const {
    const double theta = table_.sample(g);
    return from_axis_angle({theta, uniform_sphere(g)});
  }

  const InverseCdfTable& table() const { return table_; }

 private:
  InverseCdfTable table_;
};

template <class G>
Rotation haar_sample(G& g) {
  static const HaarSampler sampler;
  return sampler(g);
}

}  // namespace bodyflock
