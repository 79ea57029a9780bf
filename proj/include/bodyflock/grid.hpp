#pragma once

// Finite-volume discretization of SO(3) in axis-angle coordinates.
//
// A rotation is C exp(theta [n]_x) with n = (sin phi cos alpha, sin phi sin alpha, cos phi),
// C an optional grid center. Cells are uniform boxes in (theta, phi, alpha) on
// [0, pi] x [0, pi] x [0, 2 pi). Volumes are exact Haar measures, so sum V = 1.
//
// The weighted Laplacian div(M grad g) is a two-point flux scheme with the
// metric dtheta^2 + 4 sin^2(theta/2)(dphi^2 + sin^2 phi dalpha^2). Faces at
// theta = 0 and phi = 0, pi carry no flux (they are coordinate points), alpha is
// periodic, and the face at theta = pi is glued to the antipodal cell, since
// (pi, n) and (pi, -n) are the same rotation. The scheme is symmetric under the
// V-weighted inner product and conserves mass exactly.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "bodyflock/equilibria.hpp"
#include "bodyflock/quadrature.hpp"
#include "bodyflock/so3.hpp"

namespace bodyflock {

class AxisAngleGrid {
 public:
  AxisAngleGrid(std::size_t n_theta, std::size_t n_phi, std::size_t n_alpha, Rotation center = Rotation())
      : nt_(n_theta), np_(n_phi), na_(n_alpha), center_(std::move(center)) {
    if (nt_ < 2 || np_ < 2 || na_ < 2 || na_ % 2 != 0) {
      throw DomainError("AxisAngleGrid: need n_theta, n_phi >= 2 and even n_alpha >= 2");
    }
    dt_ = kPi / static_cast<double>(nt_);
    dp_ = kPi / static_cast<double>(np_);
    da_ = 2.0 * kPi / static_cast<double>(na_);
    volume_.resize(size());
    for (std::size_t i = 0; i < nt_; ++i) {
      const double vt = haar_cdf(dt_ * (i + 1.0)) - haar_cdf(dt_ * i);
      for (std::size_t j = 0; j < np_; ++j) {
        const double vp = (std::cos(dp_ * j) - std::cos(dp_ * (j + 1.0))) * da_ / (4.0 * kPi);
        for (std::size_t k = 0; k < na_; ++k) volume_[index(i, j, k)] = vt * vp;
      }
    }
  }

  std::size_t n_theta() const { return nt_; }
  std::size_t n_phi() const { return np_; }
  std::size_t n_alpha() const { return na_; }
  std::size_t size() const { return nt_ * np_ * na_; }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (i * np_ + j) * na_ + k; }
  const Rotation& center() const { return center_; }

  double d_theta() const { return dt_; }
  double d_phi() const { return dp_; }
  double d_alpha() const { return da_; }

  double theta(double i) const { return dt_ * (i + 0.5); }
  double phi(double j) const { return dp_ * (j + 0.5); }
  double alpha(double k) const { return da_ * (k + 0.5); }

  static Vec3 axis_at(double phi, double alpha) {
    return {std::sin(phi) * std::cos(alpha), std::sin(phi) * std::sin(alpha), std::cos(phi)};
  }

  /// Rotation at fractional cell coordinates (i, j, k); i = -0.5 is theta = 0, etc.
  Rotation rotation_at(double i, double j, double k) const {
    return center_ * from_axis_angle({theta(i), axis_at(phi(j), alpha(k))});
  }
  Rotation rotation(std::size_t c) const {
    const std::size_t k = c % na_;
    const std::size_t j = (c / na_) % np_;
    const std::size_t i = c / (na_ * np_);
    return rotation_at(static_cast<double>(i), static_cast<double>(j), static_cast<double>(k));
  }

  double volume(std::size_t c) const { return volume_[c]; }
  const std::vector<double>& volumes() const { return volume_; }

  /// Cell index glued to (nt-1, j, k) across theta = pi.
  std::size_t antipode(std::size_t j, std::size_t k) const {
    return index(nt_ - 1, np_ - 1 - j, (k + na_ / 2) % na_);
  }

  /// sum V_c g_c.
  double integrate(const std::vector<double>& g) const {
    double acc = 0.0;
    for (std::size_t c = 0; c < size(); ++c) acc += volume_[c] * g[c];
    return acc;
  }

  /// sum V_c g_c A_c (midpoint rule for the matrix mean).
  Mat3 matrix_mean(const std::vector<double>& g) const {
    Mat3 acc = Mat3::Zero();
    for (std::size_t c = 0; c < size(); ++c) acc += volume_[c] * g[c] * rotation(c).matrix();
    return acc;
  }

  /// Values of fn at cell centers.
  std::vector<double> sample(const std::function<double(const Rotation&)>& fn) const {
    std::vector<double> out(size());
    for (std::size_t c = 0; c < size(); ++c) out[c] = fn(rotation(c));
    return out;
  }

  /// Haar cell averages of fn by a q^3-point Gauss rule in each cell.
  std::vector<double> cell_average(const std::function<double(const Rotation&)>& fn, std::size_t q = 3) const {
    const QuadratureRule g = gauss_legendre(q);
    std::vector<double> out(size(), 0.0);
    for (std::size_t i = 0; i < nt_; ++i) {
      for (std::size_t j = 0; j < np_; ++j) {
        for (std::size_t k = 0; k < na_; ++k) {
          double acc = 0.0;
          double wsum = 0.0;
          for (std::size_t a = 0; a < q; ++a) {
            const double ti = i + 0.5 * g.nodes[a];
            const double th = theta(ti);
            const double st = std::sin(0.5 * th);
            for (std::size_t b = 0; b < q; ++b) {
              const double pj = j + 0.5 * g.nodes[b];
              const double sp = std::sin(phi(pj));
              for (std::size_t e = 0; e < q; ++e) {
                const double w = g.weights[a] * g.weights[b] * g.weights[e] * st * st * sp;
                acc += w * fn(rotation_at(ti, pj, k + 0.5 * g.nodes[e]));
                wsum += w;
              }
            }
          }
          out[index(i, j, k)] = acc / wsum;
        }
      }
    }
    return out;
  }

 private:
  std::size_t nt_, np_, na_;
  Rotation center_;
  double dt_ = 0.0, dp_ = 0.0, da_ = 0.0;
  std::vector<double> volume_;
};

/// Two-point flux discretization of g -> div(M grad g) for a fixed positive
/// coefficient M, evaluated at face centers.
class WeightedLaplacian {
 public:
  WeightedLaplacian(const AxisAngleGrid& grid, const std::function<double(const Rotation&)>& coef)
      : grid_(&grid) {
    const std::size_t nt = grid.n_theta(), np = grid.n_phi(), na = grid.n_alpha();
    const double dt = grid.d_theta(), dp = grid.d_phi(), da = grid.d_alpha();
    wt_.assign(grid.size(), 0.0);
    wp_.assign(grid.size(), 0.0);
    wa_.assign(grid.size(), 0.0);
    for (std::size_t i = 0; i < nt; ++i) {
      const double tf = dt * (i + 1.0);
      const double st = std::sin(0.5 * tf);
      for (std::size_t j = 0; j < np; ++j) {
        const double area = (std::cos(dp * j) - std::cos(dp * (j + 1.0))) * da / (4.0 * kPi);
        for (std::size_t k = 0; k < na; ++k) {
          const std::size_t c = grid.index(i, j, k);
          // theta face at i + 1/2 (the last one is glued across theta = pi)
          if (i + 1 < nt || grid.antipode(j, k) > c) {
            wt_[c] = (2.0 / kPi) * st * st * area / dt * coef(grid.rotation_at(i + 0.5, j, k));
          }
          // phi face at j + 1/2
          if (j + 1 < np) {
            wp_[c] = (dt / (2.0 * kPi)) * std::sin(dp * (j + 1.0)) * da / (4.0 * kPi * dp) *
                     coef(grid.rotation_at(i, j + 0.5, k));
          }
          // alpha face at k + 1/2 (periodic)
          wa_[c] = (dt / (2.0 * kPi)) * (dp / std::sin(grid.phi(j))) / (4.0 * kPi * da) *
                   coef(grid.rotation_at(i, j, k + 0.5));
        }
      }
    }
  }

  const AxisAngleGrid& grid() const { return *grid_; }

  /// V_c^{-1} sum_faces w_f (g_nb - g_c).
  std::vector<double> apply(const std::vector<double>& g) const {
    const AxisAngleGrid& gr = *grid_;
    const std::size_t nt = gr.n_theta(), np = gr.n_phi(), na = gr.n_alpha();
    std::vector<double> flux(gr.size(), 0.0);
    const auto exchange = [&](std::size_t a, std::size_t b, double w) {
      const double f = w * (g[b] - g[a]);
      flux[a] += f;
      flux[b] -= f;
    };
    for (std::size_t i = 0; i < nt; ++i) {
      for (std::size_t j = 0; j < np; ++j) {
        for (std::size_t k = 0; k < na; ++k) {
          const std::size_t c = gr.index(i, j, k);
          if (wt_[c] != 0.0) exchange(c, i + 1 < nt ? gr.index(i + 1, j, k) : gr.antipode(j, k), wt_[c]);
          if (j + 1 < np) exchange(c, gr.index(i, j + 1, k), wp_[c]);
          exchange(c, gr.index(i, j, (k + 1) % na), wa_[c]);
        }
      }
    }
    for (std::size_t c = 0; c < gr.size(); ++c) flux[c] /= gr.volume(c);
    return flux;
  }

 private:
  const AxisAngleGrid* grid_;
  std::vector<double> wt_, wp_, wa_;
};

/// Result of evaluating the kinetic operator on a grid function.
struct CollisionResult {
  std::vector<double> q;        // Q(f) at cell centers
  std::vector<double> m;        // M_{Lambda[f]} at cell centers
  Rotation lambda;              // Lambda[f]
  Mat3 mean = Mat3::Zero();     // lambda[f]
};

/// Q(f) = d div(M_{Lambda[f]} grad(f / M_{Lambda[f]})), Lambda[f] = PD(lambda[f]).
inline CollisionResult collision_operator_Q(const AxisAngleGrid& grid, const std::vector<double>& f,
                                            const VonMises& vm) {
  CollisionResult out;
  out.mean = grid.matrix_mean(f);
  out.lambda = polar_rotation(out.mean);
  const Rotation lam = out.lambda;
  const auto dens = [&](const Rotation& a) { return vm.density(lam, a); };
  out.m = grid.sample(dens);
  std::vector<double> ratio(f.size());
  for (std::size_t c = 0; c < f.size(); ++c) ratio[c] = f[c] / out.m[c];
  const WeightedLaplacian lap(grid, dens);
  out.q = lap.apply(ratio);
  for (double& v : out.q) v *= vm.d();
  return out;
}

/// H(f) = integral of Q(f) f / M_{Lambda[f]}; nonpositive.
inline double entropy_dissipation(const AxisAngleGrid& grid, const std::vector<double>& f,
                                  const CollisionResult& r) {
  double acc = 0.0;
  for (std::size_t c = 0; c < grid.size(); ++c) acc += grid.volume(c) * r.q[c] * f[c] / r.m[c];
  return acc;
}

}  // namespace bodyflock
