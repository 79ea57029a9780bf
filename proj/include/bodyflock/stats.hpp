#pragma once

// Histograms and chi-square tests used by the equilibrium checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "bodyflock/quadrature.hpp"

namespace bodyflock {

inline std::vector<double> theta_histogram(const std::vector<double>& angles, std::size_t bins) {
  std::vector<double> h(bins, 0.0);
  for (double t : angles) {
    const auto b = std::min(static_cast<std::size_t>(std::clamp(t, 0.0, kPi) / kPi * static_cast<double>(bins)), bins - 1);
    h[b] += 1.0;
  }
  return h;
}

struct ChiSquare {
  double statistic = 0.0;
  std::size_t dof = 0;
  std::size_t merged_bins = 0;  // bins remaining after merging
  double critical = 0.0;        // upper quantile at the test level
  double p_value = 0.0;
  bool passed = false;
};

namespace detail {

/// Merges adjacent bins left to right until each group's weight reaches
/// min_weight; a light tail group is folded into its predecessor.
inline std::vector<std::pair<std::size_t, std::size_t>> merge_groups(const std::vector<double>& weight, double min_weight) {
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  std::size_t start = 0;
  double acc = 0.0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    acc += weight[i];
    if (acc >= min_weight) {
      groups.emplace_back(start, i + 1);
      start = i + 1;
      acc = 0.0;
    }
  }
  if (start < weight.size()) {
    if (groups.empty()) groups.emplace_back(start, weight.size());
    else groups.back().second = weight.size();
  }
  return groups;
}

inline double group_sum(const std::vector<double>& v, std::pair<std::size_t, std::size_t> g) {
  double s = 0.0;
  for (std::size_t i = g.first; i < g.second; ++i) s += v[i];
  return s;
}

inline ChiSquare finish(double stat, std::size_t groups, std::size_t fitted, double level) {
  ChiSquare out;
  out.statistic = stat;
  out.merged_bins = groups;
  out.dof = groups > fitted + 1 ? groups - 1 - fitted : 1;
  const boost::math::chi_squared dist(static_cast<double>(out.dof));
  out.critical = boost::math::quantile(boost::math::complement(dist, level));
  out.p_value = boost::math::cdf(boost::math::complement(dist, stat));
  out.passed = stat <= out.critical;
  return out;
}

}  // namespace detail

/// Goodness of fit of observed counts against expected counts (same total).
/// Bins with expected count below min_expected are merged with neighbors.
inline ChiSquare chi_square_gof(const std::vector<double>& observed, const std::vector<double>& expected,
                                double level = 0.01, double min_expected = 5.0) {
  const auto groups = detail::merge_groups(expected, min_expected);
  double stat = 0.0;
  for (const auto& g : groups) {
    const double o = detail::group_sum(observed, g), e = detail::group_sum(expected, g);
    stat += (o - e) * (o - e) / e;
  }
  return detail::finish(stat, groups.size(), 0, level);
}

/// Two-sample homogeneity test for histograms with equal totals:
/// sum (n - m)^2 / (n + m). Bins with combined count below min_count are merged.
inline ChiSquare chi_square_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                                       double level = 0.01, double min_count = 10.0) {
  std::vector<double> both(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) both[i] = a[i] + b[i];
  const auto groups = detail::merge_groups(both, min_count);
  double stat = 0.0;
  for (const auto& g : groups) {
    const double n = detail::group_sum(a, g), m = detail::group_sum(b, g);
    if (n + m > 0.0) stat += (n - m) * (n - m) / (n + m);
  }
  return detail::finish(stat, groups.size(), 0, level);
}

/// Expected bin counts for n draws from a theta law; mass(a, b) is the
/// probability of [a, b].
inline std::vector<double> expected_counts(const std::function<double(double, double)>& mass, std::size_t bins,
                                           double n) {
  std::vector<double> e(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const double lo = kPi * static_cast<double>(b) / static_cast<double>(bins);
    const double hi = kPi * static_cast<double>(b + 1) / static_cast<double>(bins);
    e[b] = n * mass(lo, hi);
  }
  return e;
}

}  // namespace bodyflock
