#pragma once

// Generalized collision invariants and the macroscopic coefficients.
//
// The non-constant GCI associated with Lambda and an antisymmetric P = [p]_x is
//   psi(A) = (P . Lambda^T A) psibar0(A . Lambda),
// and writing B = Lambda^T A = exp(theta [n]_x) it reads sin(theta) psi0(theta) (p . n).
// The profile psi0 solves the degenerate ODE
//   (1/s^2) (s^2 m (sin(theta) psi0)')' - m sin(theta) psi0 / (2 s^2) = sin(theta) m,  s = sin(theta/2),
// which is solved here in weak form with P1 elements:
//   a(psi, phi) = -int m [s^2 (sin psi)' (sin phi)' + sin^2(theta) psi phi / 2] dtheta
//   b(phi)      =  int sin^2(theta) s^2 m phi dtheta.
// m may carry any positive constant factor (both sides are linear in it), so the
// shifted m_hat is used throughout.

#include <cmath>
#include <memory>
#include <vector>

#include <boost/math/special_functions/fpclassify.hpp>  // pchip.hpp uses isnan unqualified
#include <boost/math/interpolators/pchip.hpp>

#include "bodyflock/equilibria.hpp"
#include "bodyflock/grid.hpp"
#include "bodyflock/quadrature.hpp"
#include "bodyflock/so3.hpp"

namespace bodyflock {

inline constexpr std::size_t kDefaultGciNodes = 1024;

class GciSolution {
 public:
  GciSolution() = default;
  GciSolution(EquilibriumParams p, std::vector<double> psi0) : params_(std::move(p)), psi0_(std::move(psi0)) {
    if (psi0_.size() < 4) throw DomainError("GciSolution: need at least 4 nodes");
    h_ = kPi / static_cast<double>(psi0_.size() - 1);
    std::vector<double> xs(psi0_.size());
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = theta(i);
    std::vector<double> ys = psi0_;
    interp_ = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(std::move(xs), std::move(ys));
  }

  const EquilibriumParams& params() const { return params_; }
  const std::vector<double>& values() const { return psi0_; }
  std::size_t size() const { return psi0_.size(); }
  double step() const { return h_; }
  double theta(std::size_t i) const { return i + 1 == psi0_.size() ? kPi : h_ * static_cast<double>(i); }

  /// Monotone cubic interpolant of psi0; theta clamped to [0, pi].
  double operator()(double th) const { return (*interp_)(std::clamp(th, 0.0, kPi)); }

  /// Piecewise-linear (finite element) value.
  double linear(double th) const {
    th = std::clamp(th, 0.0, kPi);
    const auto e = std::min(static_cast<std::size_t>(th / h_), psi0_.size() - 2);
    const double t = (th - theta(e)) / h_;
    return (1.0 - t) * psi0_[e] + t * psi0_[e + 1];
  }

  /// sum psi0^2 sin^2(theta) h.
  double weighted_norm2() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < psi0_.size(); ++i) acc += psi0_[i] * psi0_[i] * std::pow(std::sin(theta(i)), 2) * h_;
    return acc;
  }

 private:
  EquilibriumParams params_;
  std::vector<double> psi0_;
  double h_ = 0.0;
  std::shared_ptr<boost::math::interpolators::pchip<std::vector<double>>> interp_;
};

namespace detail {

/// Tridiagonal system: sub[i] couples row i to i-1, sup[i] to i+1.
struct Tridiagonal {
  std::vector<double> sub, diag, sup;
  explicit Tridiagonal(std::size_t n) : sub(n, 0.0), diag(n, 0.0), sup(n, 0.0) {}
  std::size_t size() const { return diag.size(); }

  std::vector<double> multiply(const std::vector<double>& x) const {
    std::vector<double> y(size());
    for (std::size_t i = 0; i < size(); ++i) {
      y[i] = diag[i] * x[i];
      if (i > 0) y[i] += sub[i] * x[i - 1];
      if (i + 1 < size()) y[i] += sup[i] * x[i + 1];
    }
    return y;
  }

  /// Thomas algorithm; the systems here are symmetric definite.
  std::vector<double> solve(std::vector<double> rhs) const {
    const std::size_t n = size();
    std::vector<double> c(n), d(n);
    double beta = diag[0];
    if (!(std::abs(beta) > 0.0)) throw SolveFailure("tridiagonal solve: zero pivot");
    c[0] = sup[0] / beta;
    d[0] = rhs[0] / beta;
    for (std::size_t i = 1; i < n; ++i) {
      beta = diag[i] - sub[i] * c[i - 1];
      if (!(std::abs(beta) > 0.0) || !std::isfinite(beta)) throw SolveFailure("tridiagonal solve: zero pivot");
      c[i] = i + 1 < n ? sup[i] / beta : 0.0;
      d[i] = (rhs[i] - sub[i] * d[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
    return d;
  }
};

struct GalerkinSystem {
  Tridiagonal k;
  std::vector<double> b;
};

/// Assembles a(phi_j, phi_i) and b(phi_i) on N+1 uniform nodes with q-point Gauss per element.
inline GalerkinSystem assemble_gci(const VonMises& vm, std::size_t n_nodes, std::size_t q = 4) {
  const std::size_t ne = n_nodes - 1;
  const double h = kPi / static_cast<double>(ne);
  const QuadratureRule g = gauss_legendre(q);
  GalerkinSystem sys{Tridiagonal(n_nodes), std::vector<double>(n_nodes, 0.0)};
  for (std::size_t e = 0; e < ne; ++e) {
    const double lo = h * static_cast<double>(e);
    double k00 = 0.0, k01 = 0.0, k11 = 0.0, b0 = 0.0, b1 = 0.0;
    for (std::size_t a = 0; a < q; ++a) {
      const double t = 0.5 * (g.nodes[a] + 1.0);
      const double th = lo + h * t;
      const double w = 0.5 * h * g.weights[a];
      const double m = vm.m_hat(th);
      const double s = std::sin(0.5 * th);
      const double sn = std::sin(th);
      const double cs = std::cos(th);
      // local shape functions and derivatives of sin(theta) * phi
      const double p0 = 1.0 - t, p1 = t;
      const double g0 = cs * p0 - sn / h, g1 = cs * p1 + sn / h;
      const double s2m = s * s * m;
      const double z = 0.5 * sn * sn * m;
      k00 -= w * (s2m * g0 * g0 + z * p0 * p0);
      k01 -= w * (s2m * g0 * g1 + z * p0 * p1);
      k11 -= w * (s2m * g1 * g1 + z * p1 * p1);
      const double f = sn * sn * s2m;
      b0 += w * f * p0;
      b1 += w * f * p1;
    }
    sys.k.diag[e] += k00;
    sys.k.diag[e + 1] += k11;
    sys.k.sup[e] += k01;
    sys.k.sub[e + 1] += k01;
    sys.b[e] += b0;
    sys.b[e + 1] += b1;
  }
  return sys;
}

}  // namespace detail

/// Galerkin P1 solve for psi0 on n_nodes uniform nodes (natural endpoint conditions).
inline GciSolution solve_psi0(const EquilibriumParams& p, std::size_t n_nodes = kDefaultGciNodes) {
  if (n_nodes < 64) throw DomainError("solve_psi0: n_nodes must be at least 64");
  const VonMises vm(p);
  const auto sys = detail::assemble_gci(vm, n_nodes);
  std::vector<double> psi = sys.k.solve(sys.b);
  for (double v : psi) {
    if (!std::isfinite(v)) throw SolveFailure("solve_psi0: non-finite solution");
  }
  return GciSolution(p, std::move(psi));
}

/// Componentwise backward error max_i |K psi - b|_i / (|K| |psi| + |b|)_i.
inline double galerkin_residual(const GciSolution& sol) {
  const VonMises vm(sol.params());
  const auto sys = detail::assemble_gci(vm, sol.size());
  const auto& x = sol.values();
  const auto kx = sys.k.multiply(x);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double scale = std::abs(sys.k.diag[i] * x[i]) + std::abs(sys.b[i]);
    if (i > 0) scale += std::abs(sys.k.sub[i] * x[i - 1]);
    if (i + 1 < x.size()) scale += std::abs(sys.k.sup[i] * x[i + 1]);
    if (scale > 0.0) worst = std::max(worst, std::abs(kx[i] - sys.b[i]) / scale);
  }
  return worst;
}

/// Energy norm sqrt(-a(e, e)) of the P1 function on the coarse grid whose nodal
/// values are coarse - fine (fine sampled at the coarse nodes). Requires
/// fine.size() - 1 to be a multiple of coarse.size() - 1.
inline double energy_norm_difference(const GciSolution& coarse, const GciSolution& fine) {
  const std::size_t ratio = (fine.size() - 1) / (coarse.size() - 1);
  if (ratio * (coarse.size() - 1) != fine.size() - 1) throw DomainError("energy_norm_difference: grids not nested");
  std::vector<double> e(coarse.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = coarse.values()[i] - fine.values()[i * ratio];
  const VonMises vm(coarse.params());
  const auto sys = detail::assemble_gci(vm, coarse.size());
  const auto ke = sys.k.multiply(e);
  double acc = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) acc -= e[i] * ke[i];
  return std::sqrt(std::max(acc, 0.0));
}

/// Weighted L2 norm (weight sin^2 theta, scaled by m_hat) of coarse - fine at coarse nodes.
inline double weighted_l2_difference(const GciSolution& coarse, const GciSolution& fine) {
  const std::size_t ratio = (fine.size() - 1) / (coarse.size() - 1);
  const VonMises vm(coarse.params());
  double acc = 0.0;
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    const double th = coarse.theta(i);
    const double e = coarse.values()[i] - fine.values()[i * ratio];
    acc += e * e * std::pow(std::sin(th), 2) * vm.m_hat(th) * coarse.step();
  }
  return std::sqrt(acc);
}

/// Strong-form residual of the profile ODE at interior nodes (second differences),
/// scaled by s^2; index i corresponds to node i + 1.
inline std::vector<double> strong_residual(const GciSolution& sol) {
  const VonMises vm(sol.params());
  const double h = sol.step();
  const auto& y = sol.values();
  std::vector<double> out;
  const auto g = [&](std::size_t i) { return std::sin(sol.theta(i)) * y[i]; };
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    const double th = sol.theta(i);
    const double tp = th + 0.5 * h, tm = th - 0.5 * h;
    const double cp = std::pow(std::sin(0.5 * tp), 2) * vm.m_hat(tp);
    const double cm = std::pow(std::sin(0.5 * tm), 2) * vm.m_hat(tm);
    const double lhs = (cp * (g(i + 1) - g(i)) - cm * (g(i) - g(i - 1))) / (h * h) - 0.5 * vm.m_hat(th) * g(i);
    const double s2 = std::pow(std::sin(0.5 * th), 2);
    out.push_back(lhs - s2 * std::sin(th) * vm.m_hat(th));
  }
  return out;
}

struct CoeffSet {
  EquilibriumParams params;
  double log_Z = 0.0;
  double Z = 0.0;
  double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
  // the same constants through the unreduced integrals C2, C4, C5
  double c2_unreduced = 0.0, c4_unreduced = 0.0;
  GciSolution gci;
  std::size_t fem_nodes = 0;
  std::size_t gauss_points = 0;
  double galerkin_residual = 0.0;
};

/// c2 = <2 + 3 cos>/5, c3 = d <1/nu(1/2 + cos)>, c4 = <1 - cos>/5 with weight
/// mtilde(theta) sin^2(theta/2), mtilde = nu(1/2 + cos) sin^2(theta) m psi0.
inline CoeffSet coefficients(const EquilibriumParams& p, const GciSolution& sol, std::size_t q = 4) {
  const VonMises vm(p);
  const QuadratureRule g = gauss_legendre(q);
  const double h = sol.step();
  double w0 = 0.0, w2 = 0.0, w3 = 0.0, w4 = 0.0, u4 = 0.0;
  for (std::size_t e = 0; e + 1 < sol.size(); ++e) {
    const double lo = h * static_cast<double>(e);
    for (std::size_t a = 0; a < q; ++a) {
      const double t = 0.5 * (g.nodes[a] + 1.0);
      const double th = lo + h * t;
      const double w = 0.5 * h * g.weights[a];
      const double psi = (1.0 - t) * sol.values()[e] + t * sol.values()[e + 1];
      const double sn = std::sin(th);
      const double cs = std::cos(th);
      const double s = std::sin(0.5 * th);
      const double nu = p.nu(0.5 + cs);
      const double base = sn * sn * vm.m_hat(th) * psi * s * s;  // mtilde sin^2(theta/2) / nu
      const double wt = w * nu * base;
      w0 += wt;
      w2 += wt * (2.0 + 3.0 * cs);
      w3 += w * base;
      w4 += wt * (1.0 - cs);
      u4 += wt * (1.0 + 4.0 * cs);
    }
  }
  if (!(std::abs(w0) > 1e-14)) throw DegenerateWeight("coefficients: weight integral vanishes");
  CoeffSet out;
  out.params = p;
  out.log_Z = vm.log_Z();
  out.Z = vm.Z();
  out.c1 = vm.c1();
  out.c2 = w2 / (5.0 * w0);
  out.c3 = p.d * w3 / w0;
  out.c4 = w4 / (5.0 * w0);
  // C2 = 4/(3 pi Z d) int mtilde s^2, C4 = 4/(15 pi Z d) int mtilde s^2 (1 + 4 cos),
  // C5 = 4/(15 pi Z d) int mtilde s^2 (1 - cos); c2 = (C4 + C5)/C2, c4 = C5/C2.
  const double pref = 4.0 / (kPi * p.d) * std::exp(vm.log_m_shift() - vm.log_Z());
  const double C2 = pref / 3.0 * w0;
  const double C4 = pref / 15.0 * u4;
  const double C5 = pref / 15.0 * w4;
  out.c2_unreduced = (C4 + C5) / C2;
  out.c4_unreduced = C5 / C2;
  out.gci = sol;
  out.fem_nodes = sol.size();
  out.gauss_points = q;
  out.galerkin_residual = galerkin_residual(sol);
  return out;
}

inline CoeffSet compute_coefficients(const EquilibriumParams& p, std::size_t n_nodes = kDefaultGciNodes) {
  return coefficients(p, solve_psi0(p, n_nodes));
}

/// psi(A) = (P . Lambda^T A) psibar0(A . Lambda); the profile is read at the
/// rotation angle of Lambda^T A (1/2 tr = 1/2 + cos theta).
inline double gci_evaluate(const GciSolution& sol, const Rotation& lambda, const Vec3& p, const Rotation& a) {
  const Mat3 b = lambda.matrix().transpose() * a.matrix();
  return inner(hat(p), b) * sol(rotation_angle(b));
}

struct GciResidual {
  double absolute = 0.0;  // sqrt(sum V r^2)
  double relative = 0.0;  // absolute / sqrt(sum V rhs^2)
};

/// Weighted L2 norm of div(M_Lambda grad psi) - (Lambda P) . A M_Lambda on an
/// axis-angle grid centered at Lambda. The operator is the finite-volume
/// Laplacian applied to point values of psi; the right side is cell-averaged.
inline GciResidual gci_residual(const GciSolution& sol, const Rotation& lambda, const Vec3& p,
                                const AxisAngleGrid& grid) {
  const VonMises vm(sol.params());
  const auto dens = [&](const Rotation& a) { return vm.density(lambda, a); };
  const WeightedLaplacian lap(grid, dens);
  const auto psi = grid.sample([&](const Rotation& a) { return gci_evaluate(sol, lambda, p, a); });
  const Mat3 lp = lambda.matrix() * hat(p);
  const auto rhs = grid.cell_average([&](const Rotation& a) { return inner(lp, a.matrix()) * dens(a); });
  const auto lhs = lap.apply(psi);
  double r2 = 0.0, f2 = 0.0;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    r2 += grid.volume(c) * std::pow(lhs[c] - rhs[c], 2);
    f2 += grid.volume(c) * rhs[c] * rhs[c];
  }
  return {std::sqrt(r2), std::sqrt(r2 / f2)};
}

/// Monte-Carlo estimate of int (n . L n)(n n^T) dn and its closed form
/// (L + L^T + tr(L) Id) / 15.
struct SphereMoment {
  Mat3 monte_carlo = Mat3::Zero();
  Mat3 standard_error = Mat3::Zero();
  Mat3 closed_form = Mat3::Zero();
};

template <class G>
SphereMoment sphere_moment_identity(const Mat3& l, std::size_t n_mc, G& g) {
  SphereMoment out;
  Mat3 sum2 = Mat3::Zero();
  for (std::size_t s = 0; s < n_mc; ++s) {
    const Vec3 n = uniform_sphere(g);
    const Mat3 x = n.dot(l * n) * (n * n.transpose());
    out.monte_carlo += x;
    sum2 += x.cwiseProduct(x);
  }
  const double nn = static_cast<double>(n_mc);
  out.monte_carlo /= nn;
  const Mat3 var = (sum2 / nn - out.monte_carlo.cwiseProduct(out.monte_carlo)).cwiseMax(0.0);
  out.standard_error = (var / nn).cwiseSqrt();
  out.closed_form = (l + l.transpose() + l.trace() * Mat3::Identity()) / 15.0;
  return out;
}

}  // namespace bodyflock
