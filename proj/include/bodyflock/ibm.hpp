#pragma once

// Individual-based model: N agents with positions in a periodic cube and body
// attitudes in SO(3).
//
//   dX_k = v0 A_k e1 dt
//   dA_k = P_{T_{A_k}} o [nu(A_k . Lbar_k) Lbar_k dt + 2 sqrt(D) dB_t]   (Stratonovich)
//   Lbar_k = PD(M_k),  M_k = (1/N) sum_i K(|X_i - X_k|) A_i
//
// Discretized as a geometric Euler-Maruyama step in the Lie algebra:
//   A_k <- A_k exp([dt w_k + sqrt(2 D dt) xi_k]_x),  w_k = nu vee((A_k^T Lbar - Lbar^T A_k)/2).
// With the half-trace metric the body-frame noise of variance 2 D dt per
// component generates D Delta_A. All agents move from the pre-step state.

#include <array>
#include <cmath>
#include <limits>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bodyflock/equilibria.hpp"
#include "bodyflock/nu.hpp"
#include "bodyflock/parallel.hpp"
#include "bodyflock/rng.hpp"
#include "bodyflock/so3.hpp"

namespace bodyflock {

struct KernelSpec {
  enum class Kind { global, tophat, gaussian };
  Kind kind = Kind::global;
  double radius = 0.0;  // tophat radius
  double sigma = 0.0;   // gaussian width

  static KernelSpec global() { return {}; }
  static KernelSpec tophat(double r) { return {Kind::tophat, r, 0.0}; }
  static KernelSpec gaussian(double s) { return {Kind::gaussian, 0.0, s}; }

  std::string name() const {
    switch (kind) {
      case Kind::global: return "global";
      case Kind::tophat: return "tophat";
      case Kind::gaussian: return "gaussian";
    }
    return "?";
  }
};

/// A kernel bound to a box: K(r) normalized so its integral over the box is 1.
class Kernel {
 public:
  Kernel() = default;
  Kernel(const KernelSpec& spec, double box) : spec_(spec), box_(box) {
    switch (spec.kind) {
      case KernelSpec::Kind::global:
        support_ = std::numeric_limits<double>::infinity();
        norm_ = 1.0 / (box * box * box);
        break;
      case KernelSpec::Kind::tophat:
        if (!(spec.radius > 0.0) || spec.radius > 0.5 * box) {
          throw ConfigError("ibm.kernel_radius", "tophat radius must be in (0, L/2]");
        }
        support_ = spec.radius;
        norm_ = 1.0 / (4.0 / 3.0 * kPi * std::pow(spec.radius, 3));
        break;
      case KernelSpec::Kind::gaussian: {
        if (!(spec.sigma > 0.0)) throw ConfigError("ibm.kernel_sigma", "gaussian width must be positive");
        support_ = std::min(0.5 * box, 6.0 * spec.sigma);
        const double s = spec.sigma;
        const double mass = detail::integrate_1d(
            [s](double r) { return 4.0 * kPi * r * r * std::exp(-0.5 * r * r / (s * s)); }, 0.0, support_);
        norm_ = 1.0 / mass;
        break;
      }
    }
  }

  const KernelSpec& spec() const { return spec_; }
  double support() const { return support_; }
  bool compact() const { return std::isfinite(support_); }

  double operator()(double r) const {
    switch (spec_.kind) {
      case KernelSpec::Kind::global:
        return norm_;
      case KernelSpec::Kind::tophat:
        return r <= support_ ? norm_ : 0.0;
      case KernelSpec::Kind::gaussian:
        return r <= support_ ? norm_ * std::exp(-0.5 * r * r / (spec_.sigma * spec_.sigma)) : 0.0;
    }
    return 0.0;
  }

  /// Integral of K over the box by a midpoint lattice (diagnostic).
  double box_integral(int n = 64) const {
    const double h = box_ / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const Vec3 x((i + 0.5) * h - 0.5 * box_, (j + 0.5) * h - 0.5 * box_, (k + 0.5) * h - 0.5 * box_);
          acc += (*this)(x.norm());
        }
    return acc * h * h * h;
  }

 private:
  KernelSpec spec_;
  double box_ = 1.0;
  double support_ = 0.0;
  double norm_ = 1.0;
};

enum class DetFallback { skip_drift, keep_previous };
enum class TargetMode { polar, matrix_mean };

struct IbmParams {
  std::size_t n_agents = 1000;
  double box_length = 1.0;
  double v0 = 1.0;
  NuSpec nu = NuSpec::constant(1.0);
  double D = 0.2;
  double dt = 1e-2;
  std::uint64_t seed = 1;
  KernelSpec kernel;
  DetFallback det_fallback = DetFallback::skip_drift;
  TargetMode target = TargetMode::polar;
  unsigned threads = 1;

  void validate() const {
    if (n_agents == 0) throw ConfigError("ibm.n_agents", "must be positive");
    if (!(box_length > 0.0)) throw ConfigError("ibm.box_length", "must be positive");
    if (!(D >= 0.0) || !std::isfinite(D)) throw ConfigError("ibm.D", "must be nonnegative");
    if (!(dt > 0.0)) throw ConfigError("ibm.dt", "must be positive");
    if (dt * nu.max_on_range() > 0.2) throw ConfigError("ibm.dt", "dt * max nu exceeds 0.2");
    if (!std::isfinite(v0)) throw ConfigError("ibm.v0", "must be finite");
  }
};

struct ParticleEnsemble {
  std::vector<Vec3> positions;
  std::vector<Mat3> attitudes;
  double time = 0.0;
  std::uint64_t step = 0;

  std::size_t size() const { return attitudes.size(); }
  Rotation attitude(std::size_t k) const { return Rotation::unchecked(attitudes[k]); }
};

inline double wrap_coordinate(double x, double box) {
  x = std::fmod(x, box);
  if (x < 0.0) x += box;
  if (x >= box) x = 0.0;
  return x;
}

inline Vec3 minimum_image(Vec3 d, double box) {
  for (int a = 0; a < 3; ++a) d[a] -= box * std::round(d[a] / box);
  return d;
}

/// Cell-list neighbor structure for compact kernels.
class CellList {
 public:
  CellList(const std::vector<Vec3>& pos, double box, double cutoff) : box_(box) {
    nc_ = std::max(1, static_cast<int>(std::floor(box / cutoff)));
    head_.assign(static_cast<std::size_t>(nc_) * nc_ * nc_, -1);
    next_.assign(pos.size(), -1);
    for (std::size_t i = 0; i < pos.size(); ++i) {
      const std::size_t c = cell_of(pos[i]);
      next_[i] = head_[c];
      head_[c] = static_cast<long>(i);
    }
  }

  /// Usable when each cell is at least the cutoff and there are >= 3 per side.
  bool effective() const { return nc_ >= 3; }

  template <class Fn>
  void for_neighbors(const Vec3& x, Fn&& fn) const {
    const auto ci = coords(x);
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          const int a = (ci[0] + dx + nc_) % nc_, b = (ci[1] + dy + nc_) % nc_, c = (ci[2] + dz + nc_) % nc_;
          for (long i = head_[(static_cast<std::size_t>(a) * nc_ + b) * nc_ + c]; i >= 0; i = next_[i]) fn(static_cast<std::size_t>(i));
        }
  }

 private:
  std::array<int, 3> coords(const Vec3& x) const {
    std::array<int, 3> c{};
    for (int a = 0; a < 3; ++a) c[a] = std::min(nc_ - 1, static_cast<int>(x[a] / box_ * nc_));
    return c;
  }
  std::size_t cell_of(const Vec3& x) const {
    const auto c = coords(x);
    return (static_cast<std::size_t>(c[0]) * nc_ + c[1]) * nc_ + c[2];
  }

  double box_;
  int nc_ = 1;
  std::vector<long> head_;
  std::vector<long> next_;
};

/// M_k = (1/N) sum_i K(|X_i - X_k|) A_i (minimum image), dense sum.
inline Mat3 local_average(const ParticleEnsemble& ens, std::size_t k, const Kernel& kernel, double box) {
  Mat3 acc = Mat3::Zero();
  if (kernel.spec().kind == KernelSpec::Kind::global) {
    for (const Mat3& a : ens.attitudes) acc += a;
    return acc * (kernel(0.0) / static_cast<double>(ens.size()));
  }
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const double r = minimum_image(ens.positions[i] - ens.positions[k], box).norm();
    const double w = kernel(r);
    if (w != 0.0) acc += w * ens.attitudes[i];
  }
  return acc / static_cast<double>(ens.size());
}

struct OrderParameters {
  Mat3 mean = Mat3::Zero();     // lambda_hat
  Rotation target;              // Lambda_hat
  double c1_hat = 0.0;
  Vec3 omega = Vec3::UnitX();   // Lambda_hat e1
  bool disordered = false;
};

inline OrderParameters order_parameters(const ParticleEnsemble& ens) {
  OrderParameters out;
  for (const Mat3& a : ens.attitudes) out.mean += a;
  out.mean /= static_cast<double>(ens.size());
  try {
    out.target = polar_rotation(out.mean);
    out.c1_hat = inner(out.mean, out.target.matrix()) / 1.5;
    out.omega = out.target.col(0);
  } catch (const NumericalError&) {
    out.disordered = true;
    out.c1_hat = 0.0;
  }
  return out;
}

/// Stateful stepper: owns the kernel, the noise stream and per-agent fallback memory.
class IbmSimulator {
 public:
  explicit IbmSimulator(IbmParams p) : p_(std::move(p)), noise_(p_.seed) {
    p_.validate();
    kernel_ = Kernel(p_.kernel, p_.box_length);
  }

  const IbmParams& params() const { return p_; }
  const Kernel& kernel() const { return kernel_; }
  std::uint64_t det_fallbacks() const { return fallbacks_; }
  std::uint64_t last_step_fallbacks() const { return last_fallbacks_; }

  /// Local averages for every agent (cell lists when the kernel is compact).
  std::vector<Mat3> local_averages(const ParticleEnsemble& ens) const {
    const std::size_t n = ens.size();
    std::vector<Mat3> out(n);
    if (kernel_.spec().kind == KernelSpec::Kind::global) {
      const Mat3 m = local_average(ens, 0, kernel_, p_.box_length);
      std::fill(out.begin(), out.end(), m);
      return out;
    }
    const CellList cells(ens.positions, p_.box_length, kernel_.support());
    parallel_for(n, p_.threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t k = lo; k < hi; ++k) {
        if (!cells.effective()) {
          out[k] = local_average(ens, k, kernel_, p_.box_length);
          continue;
        }
        Mat3 acc = Mat3::Zero();
        cells.for_neighbors(ens.positions[k], [&](std::size_t i) {
          const double w = kernel_(minimum_image(ens.positions[i] - ens.positions[k], p_.box_length).norm());
          if (w != 0.0) acc += w * ens.attitudes[i];
        });
        out[k] = acc / static_cast<double>(n);
      }
    });
    return out;
  }

  /// One synchronous step.
  void step(ParticleEnsemble& ens) {
    const std::size_t n = ens.size();
    const bool drift = !p_.nu.is_zero();
    std::vector<Mat3> targets;
    std::vector<std::uint8_t> have_target;
    std::vector<Mat3> means;
    if (drift) {
      means = local_averages(ens);
      targets.resize(n);
      have_target.assign(n, 0);
      const bool shared = kernel_.spec().kind == KernelSpec::Kind::global;
      std::optional<Rotation> shared_target;
      if (shared) {
        try {
          shared_target = polar_rotation(means[0]);
        } catch (const NumericalError&) {
        }
      }
      for (std::size_t k = 0; k < n; ++k) {
        std::optional<Rotation> t = shared_target;
        if (!shared) {
          try {
            t = polar_rotation(means[k]);
          } catch (const NumericalError&) {
          }
        }
        if (t) {
          targets[k] = t->matrix();
          have_target[k] = 1;
        } else if (p_.det_fallback == DetFallback::keep_previous && previous_.size() == n && has_previous_[k]) {
          targets[k] = previous_[k];
          have_target[k] = 2;
        }
      }
    }
    std::uint64_t fb = 0;
    if (drift) {
      for (std::size_t k = 0; k < n; ++k) fb += have_target[k] != 1;
    }

    const double sd = std::sqrt(2.0 * p_.D * p_.dt);
    const double dt = p_.dt;
    const double move = dt * p_.v0;
    const double box = p_.box_length;
    const std::uint64_t step = ens.step;
    parallel_for(n, p_.threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t k = lo; k < hi; ++k) {
        const Mat3& a = ens.attitudes[k];
        Vec3& x = ens.positions[k];
        if (move != 0.0) {
          for (int c = 0; c < 3; ++c) x[c] = wrap_coordinate(x[c] + move * a(c, 0), box);
        }
        Vec3 w = Vec3::Zero();
        if (drift && have_target[k]) {
          const Mat3& t = targets[k];
          const double nu = p_.nu(inner(t, a));
          const Mat3& pull = p_.target == TargetMode::polar ? t : means[k];
          w = nu * vee_unchecked(a.transpose() * pull);
        }
        if (sd != 0.0) w = dt * w + sd * noise_.normal3(step, k);
        else w *= dt;
        ens.attitudes[k] = detail::polar_newton_step(a * exp_so3(w).matrix());
      }
    });
    if (drift && p_.det_fallback == DetFallback::keep_previous) {
      previous_ = std::move(targets);
      has_previous_ = std::move(have_target);
    }
    last_fallbacks_ = fb;
    fallbacks_ += fb;
    ens.step += 1;
    ens.time = static_cast<double>(ens.step) * dt;
  }

 private:
  IbmParams p_;
  Kernel kernel_;
  CounterRng noise_;
  std::vector<Mat3> previous_;
  std::vector<std::uint8_t> has_previous_;
  std::uint64_t fallbacks_ = 0;
  std::uint64_t last_fallbacks_ = 0;
};

enum class InitKind { aligned, haar, custom };

/// Initial ensemble: positions uniform in the box; attitudes all equal to
/// `frame` (aligned) or Haar-distributed. Seeded independently of the noise.
inline ParticleEnsemble initial_ensemble(const IbmParams& p, InitKind kind, const Rotation& frame = Rotation()) {
  if (kind == InitKind::custom) throw ConfigError("ibm.init", "custom init requires an ensemble file");
  Rng g(p.seed ^ 0x9E3779B97F4A7C15ull);
  ParticleEnsemble ens;
  ens.positions.resize(p.n_agents);
  ens.attitudes.resize(p.n_agents);
  for (std::size_t k = 0; k < p.n_agents; ++k) {
    for (int a = 0; a < 3; ++a) ens.positions[k][a] = p.box_length * g.uniform();
    ens.attitudes[k] = kind == InitKind::aligned ? frame.matrix() : haar_sample(g).matrix();
  }
  return ens;
}

struct TimeSample {
  double t = 0.0;
  double c1_hat = 0.0;
  Vec3 omega = Vec3::Zero();
  std::uint64_t det_fallbacks = 0;
  bool disordered = false;
};

struct RunOptions {
  double t_end = 0.0;
  std::uint64_t sample_every = 1;    // steps between time-series samples
  std::uint64_t snapshot_every = 0;  // 0: initial and final only
  std::function<void(const ParticleEnsemble&)> on_snapshot;
};

/// Runs to t_end (rounded to whole steps). Returns the order-parameter series.
inline std::vector<TimeSample> run(IbmSimulator& sim, ParticleEnsemble& ens, const RunOptions& opt) {
  std::vector<TimeSample> series;
  const auto record = [&] {
    const auto op = order_parameters(ens);
    series.push_back({ens.time, op.c1_hat, op.omega, sim.det_fallbacks(), op.disordered});
  };
  const auto steps = static_cast<std::uint64_t>(std::llround(opt.t_end / sim.params().dt));
  record();
  if (opt.on_snapshot) opt.on_snapshot(ens);
  for (std::uint64_t s = 1; s <= steps; ++s) {
    sim.step(ens);
    if (s % std::max<std::uint64_t>(opt.sample_every, 1) == 0 || s == steps) record();
    if (opt.on_snapshot && ((opt.snapshot_every && s % opt.snapshot_every == 0) || s == steps)) opt.on_snapshot(ens);
  }
  return series;
}

/// Rotation angles of Lambda^T A_k.
inline std::vector<double> relative_angles(const ParticleEnsemble& ens, const Rotation& lambda) {
  std::vector<double> out(ens.size());
  for (std::size_t k = 0; k < ens.size(); ++k) out[k] = rotation_angle(lambda.matrix().transpose() * ens.attitudes[k]);
  return out;
}

}  // namespace bodyflock
