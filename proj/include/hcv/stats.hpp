#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hcv/parallel.hpp"

namespace hcv::stats {

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;

  [[nodiscard]] double ci_low(double z = 1.959963984540054) const { return mean - z * std_error; }
  [[nodiscard]] double ci_high(double z = 1.959963984540054) const { return mean + z * std_error; }
};

[[nodiscard]] inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty sample");
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

/// Unbiased covariance (divisor n - 1).
[[nodiscard]] inline double covariance(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("covariance needs two equal samples of size >= 2");
  const double mx = mean(xs);
  const double my = mean(ys);
  std::vector<double> prod(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) prod[i] = (xs[i] - mx) * (ys[i] - my);
  return pairwise_sum(prod) / static_cast<double>(xs.size() - 1);
}

[[nodiscard]] inline double variance(std::span<const double> xs) { return covariance(xs, xs); }

/// Sample mean with the iid standard error.
[[nodiscard]] inline MeanEstimate estimate_mean(std::span<const double> xs) {
  MeanEstimate e;
  e.n = xs.size();
  e.mean = mean(xs);
  e.std_error = xs.size() > 1 ? std::sqrt(variance(xs) / static_cast<double>(xs.size())) : 0.0;
  return e;
}

/// Mean of a correlated series with a batch-means standard error.
[[nodiscard]] inline MeanEstimate batch_means(std::span<const double> xs, std::size_t batches = 50) {
  if (xs.empty()) throw std::invalid_argument("batch_means of empty sample");
  batches = std::clamp<std::size_t>(batches, 1, xs.size());
  const std::size_t len = xs.size() / batches;
  std::vector<double> bm(batches);
  for (std::size_t b = 0; b < batches; ++b) bm[b] = mean(xs.subspan(b * len, len));
  MeanEstimate e;
  e.n = xs.size();
  e.mean = mean(xs);
  e.std_error = batches > 1 ? std::sqrt(variance(bm) / static_cast<double>(batches)) : 0.0;
  return e;
}

/// Linear-interpolation quantile (R type 7) of an unsorted sample.
[[nodiscard]] inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

struct Moments {
  double skewness = 0.0;
  double kurtosis = 0.0;  // plain (not excess): 3 for a Gaussian
  double skewness_se = 0.0;
  double kurtosis_se = 0.0;
};

[[nodiscard]] inline Moments shape_moments(std::span<const double> xs) {
  const double m = mean(xs);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - m;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  const auto n = static_cast<double>(xs.size());
  m2 /= n;
  m3 /= n;
  m4 /= n;
  Moments out;
  out.skewness = m3 / std::pow(m2, 1.5);
  out.kurtosis = m4 / (m2 * m2);
  out.skewness_se = std::sqrt(6.0 / n);
  out.kurtosis_se = std::sqrt(24.0 / n);
  return out;
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Asymptotic Kolmogorov tail P(K > x) = 2 sum (-1)^(k-1) exp(-2 k^2 x^2).
[[nodiscard]] inline double kolmogorov_tail(double x) {
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF. The p-value
/// uses Stephens' finite-n correction of the asymptotic distribution.
[[nodiscard]] inline KsResult ks_test(std::vector<double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw std::invalid_argument("ks_test of empty sample");
  std::sort(xs.begin(), xs.end());
  const auto n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d)};
}

}  // namespace hcv::stats
