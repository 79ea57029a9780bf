#pragma once

// Macroscopic body-attitude hydrodynamics on a periodic lattice, evolved in
// frame form (Omega, u, v) = (Lambda e1, Lambda e2, Lambda e3):
//
//   d_t rho + c1 div(rho Omega) = 0
//   rho D_t Omega + P_{Omega^perp}(c3 grad rho + c4 rho r) = 0
//   rho D_t u - [u . (c3 grad rho + c4 rho r)] Omega + c4 rho delta v = 0
//   rho D_t v - [v . (c3 grad rho + c4 rho r)] Omega - c4 rho delta u = 0
//
// with D_t = d_t + c2 (Omega . grad) and
//   delta = [(Omega . grad) u] . v + [(u . grad) v] . Omega + [(v . grad) Omega] . u
//   r     = (div Omega) Omega + (div u) u + (div v) v.
//
// Density flux: upwind on face velocities c1 * mean(Omega_a); conservative.
// Frame convection: upwind per axis on the sign of Omega_a; other gradients
// central. Midpoint (RK2) in time, then per-cell polar re-orthonormalization.

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "bodyflock/gci.hpp"
#include "bodyflock/parallel.hpp"
#include "bodyflock/so3.hpp"

namespace bodyflock {

/// Transport coefficients used by the PDE (a subset of CoeffSet, so that
/// synthetic values can be supplied for probes).
struct PdeCoefficients {
  double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;

  static PdeCoefficients from(const CoeffSet& c) { return {c.c1, c.c2, c.c3, c.c4}; }
};

enum class Orthonormalization { polar, gram_schmidt };

struct SohbParams {
  PdeCoefficients coeffs;
  double cfl = 0.4;
  double dt = 0.0;  // 0: set from the CFL condition
  double t_end = 0.0;
  double rho_floor_factor = 1e-8;
  Orthonormalization reortho = Orthonormalization::polar;
  unsigned threads = 1;
};

class FrameField {
 public:
  FrameField(std::array<std::size_t, 3> n, double dx) : n_(n), dx_(dx) {
    for (auto v : n_) {
      if (v == 0) throw DomainError("FrameField: zero grid dimension");
    }
    if (!(dx > 0.0)) throw DomainError("FrameField: dx must be positive");
    rho_.assign(size(), 1.0);
    frame_.assign(size(), Mat3::Identity());
  }

  static FrameField line(std::size_t n, double dx) { return FrameField({n, 1, 1}, dx); }

  std::size_t size() const { return n_[0] * n_[1] * n_[2]; }
  const std::array<std::size_t, 3>& shape() const { return n_; }
  int dimension() const { return (n_[0] > 1) + (n_[1] > 1) + (n_[2] > 1); }
  double dx() const { return dx_; }
  double cell_volume() const { return std::pow(dx_, dimension()); }

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (i * n_[1] + j) * n_[2] + k; }
  std::array<std::size_t, 3> coords(std::size_t c) const {
    return {c / (n_[1] * n_[2]), (c / n_[2]) % n_[1], c % n_[2]};
  }
  /// Cell center (x, y, z) with cell (0,0,0) centered at dx/2.
  Vec3 position(std::size_t c) const {
    const auto ijk = coords(c);
    return {(ijk[0] + 0.5) * dx_, (ijk[1] + 0.5) * dx_, (ijk[2] + 0.5) * dx_};
  }
  /// Periodic neighbor of c shifted by s (+1 or -1) along axis a.
  std::size_t neighbor(std::size_t c, int a, int s) const {
    auto ijk = coords(c);
    const auto n = static_cast<long>(n_[a]);
    ijk[a] = static_cast<std::size_t>((static_cast<long>(ijk[a]) + s + n) % n);
    return index(ijk[0], ijk[1], ijk[2]);
  }

  std::vector<double>& rho() { return rho_; }
  const std::vector<double>& rho() const { return rho_; }
  /// Columns (Omega, u, v).
  std::vector<Mat3>& frames() { return frame_; }
  const std::vector<Mat3>& frames() const { return frame_; }
  Vec3 omega(std::size_t c) const { return frame_[c].col(0); }
  Vec3 u(std::size_t c) const { return frame_[c].col(1); }
  Vec3 v(std::size_t c) const { return frame_[c].col(2); }

  double total_mass() const {
    double acc = 0.0;
    for (double r : rho_) acc += r;
    return acc * cell_volume();
  }

  /// Largest entrywise |F^T F - Id| over cells.
  double orthonormality_defect() const {
    double worst = 0.0;
    for (const Mat3& f : frame_) worst = std::max(worst, bodyflock::orthogonality_defect(f));
    return worst;
  }

  /// Smallest Omega . (u x v).
  double min_handedness() const {
    double worst = 1e300;
    for (const Mat3& f : frame_) worst = std::min(worst, f.col(0).dot(f.col(1).cross(f.col(2))));
    return worst;
  }

 private:
  std::array<std::size_t, 3> n_;
  double dx_;
  std::vector<double> rho_;
  std::vector<Mat3> frame_;
};

struct FrameDerivatives {
  double delta = 0.0;
  Vec3 r = Vec3::Zero();
};

namespace detail {

/// Central difference of column `col` along axis a (zero along trivial axes).
inline Vec3 central(const FrameField& f, std::size_t c, int a, int col) {
  if (f.shape()[a] < 2) return Vec3::Zero();
  return (f.frames()[f.neighbor(c, a, +1)].col(col) - f.frames()[f.neighbor(c, a, -1)].col(col)) / (2.0 * f.dx());
}

inline double central_rho(const FrameField& f, std::size_t c, int a) {
  if (f.shape()[a] < 2) return 0.0;
  return (f.rho()[f.neighbor(c, a, +1)] - f.rho()[f.neighbor(c, a, -1)]) / (2.0 * f.dx());
}

}  // namespace detail

/// delta and r at one cell by second-order central differences.
inline FrameDerivatives frame_derivatives(const FrameField& f, std::size_t c) {
  // jac[col][a] = d_a of column col
  std::array<std::array<Vec3, 3>, 3> jac;
  for (int col = 0; col < 3; ++col)
    for (int a = 0; a < 3; ++a) jac[col][a] = detail::central(f, c, a, col);
  const Mat3& fr = f.frames()[c];
  const auto directional = [&](const Vec3& w, int col) {
    return Vec3(w[0] * jac[col][0] + w[1] * jac[col][1] + w[2] * jac[col][2]);
  };
  const Vec3 om = fr.col(0), u = fr.col(1), v = fr.col(2);
  FrameDerivatives out;
  out.delta = directional(om, 1).dot(v) + directional(u, 2).dot(om) + directional(v, 0).dot(u);
  for (int col = 0; col < 3; ++col) {
    const double div = jac[col][0][0] + jac[col][1][1] + jac[col][2][2];
    out.r += div * fr.col(col);
  }
  return out;
}

/// Time derivative of the state, plus the number of frozen (vacuum) cells.
struct SohbRate {
  std::vector<double> rho;
  std::vector<Mat3> frame;
  std::size_t vacuum_cells = 0;
};

inline SohbRate sohb_rate(const FrameField& f, const SohbParams& p) {
  const auto& cf = p.coeffs;
  const std::size_t n = f.size();
  const double dx = f.dx();
  SohbRate out;
  out.rho.assign(n, 0.0);
  out.frame.assign(n, Mat3::Zero());

  // density: conservative upwind fluxes through the + faces
  for (int a = 0; a < 3; ++a) {
    if (f.shape()[a] < 2) continue;
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t e = f.neighbor(c, a, +1);
      const double vel = cf.c1 * 0.5 * (f.frames()[c](a, 0) + f.frames()[e](a, 0));
      const double flux = vel > 0.0 ? vel * f.rho()[c] : vel * f.rho()[e];
      out.rho[c] -= flux / dx;
      out.rho[e] += flux / dx;
    }
  }

  double mean_rho = 0.0;
  for (double r : f.rho()) mean_rho += r;
  mean_rho /= static_cast<double>(n);
  const double floor = p.rho_floor_factor * mean_rho;

  std::vector<std::uint8_t> vacuum(n, 0);
  parallel_for(n, p.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t c = lo; c < hi; ++c) {
      const double rho = f.rho()[c];
      if (!(rho >= floor) || rho <= 0.0) {
        vacuum[c] = 1;
        continue;
      }
      const Mat3& fr = f.frames()[c];
      const Vec3 om = fr.col(0);
      // upwind convection -c2 (Omega . grad) X for each column
      Mat3 conv = Mat3::Zero();
      for (int a = 0; a < 3; ++a) {
        if (f.shape()[a] < 2) continue;
        const double w = om[a];
        const Mat3 diff = w > 0.0 ? Mat3(fr - f.frames()[f.neighbor(c, a, -1)])
                                  : Mat3(f.frames()[f.neighbor(c, a, +1)] - fr);
        conv += (w / dx) * diff;
      }
      const FrameDerivatives dr = frame_derivatives(f, c);
      const Vec3 grad_rho(detail::central_rho(f, c, 0), detail::central_rho(f, c, 1), detail::central_rho(f, c, 2));
      const Vec3 g = cf.c3 * grad_rho + cf.c4 * rho * dr.r;
      Mat3 rate = -cf.c2 * conv;
      rate.col(0) -= (g - g.dot(om) * om) / rho;
      rate.col(1) += (fr.col(1).dot(g) / rho) * om - cf.c4 * dr.delta * fr.col(2);
      rate.col(2) += (fr.col(2).dot(g) / rho) * om + cf.c4 * dr.delta * fr.col(1);
      out.frame[c] = rate;
    }
  });
  for (auto v : vacuum) out.vacuum_cells += v;
  return out;
}

/// Gram-Schmidt on (Omega, u), v = Omega x u.
inline Mat3 gram_schmidt_frame(const Mat3& m) {
  Mat3 out;
  const Vec3 om = m.col(0).normalized();
  const Vec3 u = (m.col(1) - m.col(1).dot(om) * om).normalized();
  out.col(0) = om;
  out.col(1) = u;
  out.col(2) = om.cross(u);
  return out;
}

struct StepReport {
  std::size_t vacuum_cells = 0;
  double orthonormality_defect = 0.0;
};

/// Largest stable step dt = cfl dx / max(c1, c2).
inline double cfl_step(const FrameField& f, const SohbParams& p) {
  const double speed = std::max({std::abs(p.coeffs.c1), std::abs(p.coeffs.c2), 1e-300});
  return p.cfl * f.dx() / speed;
}

/// One midpoint step of size dt.
inline StepReport sohb_step(FrameField& f, const SohbParams& p, double dt) {
  StepReport rep;
  const SohbRate k1 = sohb_rate(f, p);
  FrameField half = f;
  for (std::size_t c = 0; c < f.size(); ++c) {
    half.rho()[c] += 0.5 * dt * k1.rho[c];
    half.frames()[c] += 0.5 * dt * k1.frame[c];
  }
  const SohbRate k2 = sohb_rate(half, p);
  rep.vacuum_cells = k2.vacuum_cells;
  for (std::size_t c = 0; c < f.size(); ++c) {
    f.rho()[c] += dt * k2.rho[c];
    if (k2.frame[c].isZero(0.0)) continue;  // frozen or exactly stationary
    const Mat3 m = f.frames()[c] + dt * k2.frame[c];
    f.frames()[c] = p.reortho == Orthonormalization::polar ? polar_rotation(m).matrix() : gram_schmidt_frame(m);
  }
  rep.orthonormality_defect = f.orthonormality_defect();
  return rep;
}

struct PdeSample {
  double t = 0.0;
  double mass = 0.0;
  double orthonormality_defect = 0.0;
  double min_rho = 0.0;
  std::size_t vacuum_cells = 0;
};

struct PdeRunOptions {
  std::size_t sample_every = 1;
  std::size_t snapshot_every = 0;  // 0: initial and final only
  std::function<void(const FrameField&, double)> on_snapshot;
};

/// Integrates to p.t_end with fixed steps (the last one shortened).
inline std::vector<PdeSample> sohb_run(FrameField& f, const SohbParams& p, const PdeRunOptions& opt = {}) {
  const double dt = p.dt > 0.0 ? p.dt : cfl_step(f, p);
  if (dt > cfl_step(f, p) * (1.0 + 1e-12)) throw ConfigError("pde.dt", "dt exceeds the CFL limit");
  std::vector<PdeSample> out;
  const auto record = [&](double t, std::size_t vac) {
    double mn = 1e300;
    for (double r : f.rho()) mn = std::min(mn, r);
    out.push_back({t, f.total_mass(), f.orthonormality_defect(), mn, vac});
  };
  record(0.0, 0);
  if (opt.on_snapshot) opt.on_snapshot(f, 0.0);
  double t = 0.0;
  std::size_t s = 0;
  while (t < p.t_end - 1e-12 * std::max(1.0, p.t_end)) {
    const double h = std::min(dt, p.t_end - t);
    const auto rep = sohb_step(f, p, h);
    t += h;
    ++s;
    const bool last = !(t < p.t_end - 1e-12 * std::max(1.0, p.t_end));
    if (s % std::max<std::size_t>(opt.sample_every, 1) == 0 || last) record(t, rep.vacuum_cells);
    if (opt.on_snapshot && ((opt.snapshot_every && s % opt.snapshot_every == 0) || last)) opt.on_snapshot(f, t);
  }
  return out;
}

/// Frame field Lambda(x) = exp([b(x)]_x) Lambda0 with density rho(x).
inline FrameField frame_from_log(std::array<std::size_t, 3> n, double dx, const std::function<Vec3(const Vec3&)>& b,
                                 const Rotation& lambda0, const std::function<double(const Vec3&)>& rho = nullptr) {
  FrameField f(n, dx);
  for (std::size_t c = 0; c < f.size(); ++c) {
    const Vec3 x = f.position(c);
    f.frames()[c] = exp_so3(b(x)).matrix() * lambda0.matrix();
    f.rho()[c] = rho ? rho(x) : 1.0;
  }
  return f;
}

}  // namespace bodyflock
