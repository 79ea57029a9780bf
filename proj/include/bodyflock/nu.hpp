#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "bodyflock/errors.hpp"

namespace bodyflock {

/// Coordination frequency nu(mu), mu = A . Lambda in [-3/2, 3/2], together with
/// its antiderivative sigma (sigma(0) = 0). Polynomials carry an exact sigma;
/// custom callables must supply their own.
class NuSpec {
 public:
  enum class Kind { zero, polynomial, custom };

  /// nu == 0: no coordination (pure noise). Only valid where a vanishing
  /// frequency is meaningful (uniform equilibrium, noise-only particles).
  static NuSpec zero() { return NuSpec(Kind::zero, {}); }

  static NuSpec constant(double c) { return polynomial({c}); }

  /// nu(mu) = sum_i coeffs[i] mu^i; must be positive on [-3/2, 3/2].
  static NuSpec polynomial(std::vector<double> coeffs) {
    if (coeffs.empty()) throw DomainError("NuSpec: empty coefficient list");
    NuSpec s(Kind::polynomial, std::move(coeffs));
    s.check_positive();
    return s;
  }

  static NuSpec custom(std::function<double(double)> nu, std::function<double(double)> sigma) {
    NuSpec s(Kind::custom, {});
    s.nu_fn_ = std::move(nu);
    s.sigma_fn_ = std::move(sigma);
    s.check_positive();
    return s;
  }

  Kind kind() const { return kind_; }
  bool is_zero() const { return kind_ == Kind::zero; }
  bool is_constant() const { return kind_ == Kind::polynomial && coeffs_.size() == 1; }
  const std::vector<double>& coefficients() const { return coeffs_; }

  double operator()(double mu) const { return nu(mu); }

  double nu(double mu) const {
    switch (kind_) {
      case Kind::zero:
        return 0.0;
      case Kind::polynomial: {
        double acc = 0.0;
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * mu + *it;
        return acc;
      }
      case Kind::custom:
        return nu_fn_(mu);
    }
    return 0.0;
  }

  double sigma(double mu) const {
    switch (kind_) {
      case Kind::zero:
        return 0.0;
      case Kind::polynomial: {
        double acc = 0.0;
        for (std::size_t i = coeffs_.size(); i-- > 0;) acc = acc * mu + coeffs_[i] / static_cast<double>(i + 1);
        return acc * mu;
      }
      case Kind::custom:
        return sigma_fn_(mu);
    }
    return 0.0;
  }

  /// Largest value of nu on [-3/2, 3/2] (grid estimate).
  double max_on_range() const {
    double m = 0.0;
    for (int i = 0; i <= 1000; ++i) m = std::max(m, nu(-1.5 + 3.0 * i / 1000.0));
    return m;
  }

  /// "zero", "poly:a0;a1;..." or "custom"; separators avoid commas so the
  /// label can sit in a CSV cell.
  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
      case Kind::zero:
        os << "zero";
        break;
      case Kind::polynomial:
        os << "poly:";
        for (std::size_t i = 0; i < coeffs_.size(); ++i) os << (i ? ";" : "") << coeffs_[i];
        break;
      case Kind::custom:
        os << "custom";
        break;
    }
    return os.str();
  }

 private:
  NuSpec(Kind k, std::vector<double> c) : kind_(k), coeffs_(std::move(c)) {}

  void check_positive() const {
    for (int i = 0; i <= 1000; ++i) {
      const double mu = -1.5 + 3.0 * i / 1000.0;
      const double v = nu(mu);
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw DomainError("NuSpec: nu must be positive on [-3/2, 3/2] (nu(" + std::to_string(mu) +
                          ") = " + std::to_string(v) + ")");
      }
    }
  }

  Kind kind_;
  std::vector<double> coeffs_;
  std::function<double(double)> nu_fn_;
  std::function<double(double)> sigma_fn_;
};

}  // namespace bodyflock
