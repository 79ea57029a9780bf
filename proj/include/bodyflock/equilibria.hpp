#pragma once

// Generalized von Mises equilibria on SO(3):
//   M_Lambda(A) = exp(sigma(A . Lambda) / d) / Z.
// With A = Lambda exp(theta [n]_x) one has A . Lambda = 1/2 + cos(theta), so
// every quantity reduces to one-dimensional integrals in theta against
// m(theta) = exp(sigma(1/2 + cos theta) / d).
//
// m is always evaluated shifted by its maximum sigma(3/2)/d (sigma is
// increasing), so Z itself may overflow but log Z and every ratio stay finite.

#include <cmath>
#include <limits>
#include <memory>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bodyflock/nu.hpp"
#include "bodyflock/quadrature.hpp"
#include "bodyflock/so3.hpp"

namespace bodyflock {

struct EquilibriumParams {
  NuSpec nu = NuSpec::constant(1.0);
  double d = 1.0;

  void validate() const {
    if (!(d > 0.0) || !std::isfinite(d)) throw DomainError("EquilibriumParams: d must be positive and finite");
  }
};

namespace detail {

/// Adaptive integral over [a, b] to near machine precision. The Kronrod error
/// estimate bottoms out at about 1e-14 relative from rounding, so a tighter
/// tolerance only forces useless bisection to full depth.
template <class F>
double integrate_1d(F&& f, double a, double b) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-12, &err);
}

/// Integral over [0, pi] split at the bulk of a peak of width ~sqrt(d) at 0.
template <class F>
double integrate_theta(F&& f, double d) {
  const double w = std::min(1.0, 8.0 * std::sqrt(d));
  if (w >= 1.0) return integrate_1d(f, 0.0, kPi);
  return integrate_1d(f, 0.0, w) + integrate_1d(f, w, kPi);
}

}  // namespace detail

/// Von Mises family for fixed (nu, d). Immutable after construction.
class VonMises {
 public:
  explicit VonMises(EquilibriumParams p) : p_(std::move(p)) {
    p_.validate();
    shift_ = p_.nu.sigma(1.5) / p_.d;
    const double zhat = detail::integrate_theta([&](double t) { return haar_weight(t) * m_hat(t); }, p_.d);
    log_z_ = shift_ + std::log(zhat);
  }

  const EquilibriumParams& params() const { return p_; }
  double d() const { return p_.d; }
  const NuSpec& nu() const { return p_.nu; }

  /// log m(theta) - sigma(3/2)/d; zero at theta = 0.
  double log_m_hat(double theta) const {
    return (p_.nu.sigma(0.5 + std::cos(theta)) - p_.nu.sigma(1.5)) / p_.d;
  }
  double m_hat(double theta) const { return std::exp(log_m_hat(theta)); }
  double log_m_shift() const { return shift_; }

  /// m(theta) = exp(sigma(1/2 + cos theta) / d); may overflow for tiny d.
  double m(double theta) const { return std::exp(log_m_hat(theta) + shift_); }

  double log_Z() const { return log_z_; }
  /// Z, or +inf when it does not fit in a double.
  double Z() const { return std::exp(log_z_); }

  /// M_Lambda(A).
  double density(const Rotation& lambda, const Rotation& a) const {
    return density_from_inner(inner(a.matrix(), lambda.matrix()));
  }
  /// M as a function of mu = A . Lambda.
  double density_from_inner(double mu) const { return std::exp(p_.nu.sigma(mu) / p_.d - log_z_); }

  /// Unnormalized theta marginal sin^2(theta/2) m_hat(theta).
  double theta_weight(double theta) const {
    const double s = std::sin(0.5 * theta);
    return s * s * m_hat(theta);
  }

  /// <g>_{m sin^2(theta/2)}.
  template <class G>
  double theta_average(G&& g) const {
    const double num = detail::integrate_theta([&](double t) { return g(t) * theta_weight(t); }, p_.d);
    const double den = detail::integrate_theta([&](double t) { return theta_weight(t); }, p_.d);
    return num / den;
  }

  /// Flux constant c1 = (2/3) <1/2 + cos theta>, so that lambda[M_Lambda] = c1 Lambda.
  double c1() const {
    if (!c1_) c1_ = std::make_shared<double>((2.0 / 3.0) * theta_average([](double t) { return 0.5 + std::cos(t); }));
    return *c1_;
  }

 private:
  EquilibriumParams p_;
  double shift_ = 0.0;
  double log_z_ = 0.0;
  mutable std::shared_ptr<double> c1_;
};

inline double normalizer_Z(const EquilibriumParams& p) { return VonMises(p).Z(); }
inline double log_normalizer_Z(const EquilibriumParams& p) { return VonMises(p).log_Z(); }
inline double flux_constant_c1(const EquilibriumParams& p) { return VonMises(p).c1(); }

/// Tabulated theta marginal w(theta) ∝ sin^2(theta/2) m(theta) with its inverse CDF.
class ThetaDensityTable {
 public:
  static constexpr std::size_t kDefaultNodes = 4096;

  explicit ThetaDensityTable(const VonMises& vm, std::size_t n_nodes = kDefaultNodes)
      : vm_(std::make_shared<VonMises>(vm)),
        table_([v = vm_](double t) { return v->theta_weight(t); }, n_nodes),
        norm_(detail::integrate_theta([v = vm_](double t) { return v->theta_weight(t); }, vm.d())) {}

  /// Normalized marginal density on [0, pi].
  double w(double theta) const { return vm_->theta_weight(theta) / norm_; }
  double cdf(double theta) const { return table_.cdf(theta); }
  double quantile(double u) const { return table_.quantile(u); }
  const VonMises& von_mises() const { return *vm_; }

  /// Probability of [a, b] under w (adaptive quadrature, not the table).
  double mass(double a, double b) const {
    return detail::integrate_1d([&](double t) { return w(t); }, a, b);
  }

 private:
  std::shared_ptr<VonMises> vm_;
  InverseCdfTable table_;
  double norm_;
};

enum class SamplerMode { inverse_cdf, rejection };

/// Draws from M_Lambda: theta from the marginal, axis uniform, A = Lambda exp(theta [n]_x).
/// The rejection mode proposes theta from the Haar marginal and accepts with
/// probability m_hat(theta) <= 1; it is exact but slow for small d.
class VonMisesSampler {
 public:
  explicit VonMisesSampler(const VonMises& vm, SamplerMode mode = SamplerMode::inverse_cdf)
      : table_(std::make_shared<ThetaDensityTable>(vm)), mode_(mode) {}

  template <class G>
  double sample_theta(G& g) const {
    if (mode_ == SamplerMode::inverse_cdf) return table_->quantile(g.uniform());
    static const HaarSampler haar;
    for (;;) {
      const double t = haar.table().sample(g);
      if (g.uniform() < table_->von_mises().m_hat(t)) return t;
    }
  }

  template <class G>
  Rotation operator()(const Rotation& lambda, G& g) const {
    const double t = sample_theta(g);
    return lambda * from_axis_angle({t, uniform_sphere(g)});
  }

  const ThetaDensityTable& table() const { return *table_; }

 private:
  std::shared_ptr<ThetaDensityTable> table_;
  SamplerMode mode_;
};

/// lambda[f] = integral of A f(A) over SO(3).
template <class F>
Mat3 matrix_mean(F&& f, const So3Quadrature& quad = So3Quadrature()) {
  return quad.integrate([&](const Rotation& a) -> Mat3 { return f(a) * a.matrix(); });
}

}  // namespace bodyflock
