#pragma once

// Small-sample statistics used to summarize seeded replicates.

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "warmstart/error.hpp"

namespace warmstart::stats {

inline double mean(std::span<const double> x) {
  if (x.empty()) throw InputError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
inline double stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

inline double median(std::vector<double> x) {
  if (x.empty()) throw InputError("median of an empty sample");
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 == 1 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

/// Standard error of the difference of two sample means.
inline double pooled_standard_error(std::span<const double> a, std::span<const double> b) {
  const double sa = stddev(a), sb = stddev(b);
  return std::sqrt(sa * sa / static_cast<double>(a.size()) + sb * sb / static_cast<double>(b.size()));
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("pearson: samples differ in length");
  if (a.size() < 2) throw InputError("pearson: need at least two points");
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw InputError("correlation undefined: zero variance");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Ranks starting at 1; ties share their average rank.
inline std::vector<double> ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  std::vector<double> r(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
    i = j + 1;
  }
  return r;
}

inline double spearman(std::span<const double> a, std::span<const double> b) {
  const auto ra = ranks(a), rb = ranks(b);
  return pearson(ra, rb);
}

/// One-sided p-value for H1: rho < 0, via the t approximation with n - 2 dof.
inline double spearman_p_negative(double rho, std::size_t n) {
  if (n < 3) return 1.0;
  if (rho <= -1.0) return 0.0;
  if (rho >= 1.0) return 1.0;
  const double dof = static_cast<double>(n - 2);
  const double t = rho * std::sqrt(dof / (1.0 - rho * rho));
  return boost::math::cdf(boost::math::students_t(dof), t);
}

struct TTest {
  double mean_difference = 0.0;
  double t = 0.0;
  double p_greater = 1.0;  // one-sided p for H1: mean(a - b) > 0
};

inline TTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw InputError("paired t-test needs two equal samples of size >= 2");
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  TTest r;
  r.mean_difference = mean(diff);
  const double se = stddev(diff) / std::sqrt(static_cast<double>(diff.size()));
  if (se == 0.0) {
    r.t = r.mean_difference > 0 ? std::numeric_limits<double>::infinity()
                                : (r.mean_difference < 0 ? -std::numeric_limits<double>::infinity() : 0.0);
    r.p_greater = r.mean_difference > 0 ? 0.0 : 1.0;
    return r;
  }
  r.t = r.mean_difference / se;
  r.p_greater = boost::math::cdf(boost::math::complement(
      boost::math::students_t(static_cast<double>(diff.size() - 1)), r.t));
  return r;
}

}  // namespace warmstart::stats
