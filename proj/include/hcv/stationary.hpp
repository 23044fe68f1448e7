#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "hcv/errors.hpp"
#include "hcv/io.hpp"
#include "hcv/meanfield.hpp"
#include "hcv/model.hpp"
#include "hcv/odesys.hpp"
#include "hcv/parallel.hpp"
#include "hcv/random.hpp"
#include "hcv/ssa.hpp"
#include "hcv/stats.hpp"

namespace hcv {

/// Time-average summary of one long path in the stationary regime. Means
/// are of Y = X / N.
struct StationaryEstimate {
  std::int64_t N = 0;
  double mean_y1 = 0.0;
  double mean_y2 = 0.0;
  double prevalence = 0.0;    // time average of n1 / (n1 + n2)
  double prevalence_se = 0.0; // batch means
  std::size_t n_samples = 0;
  double burn_in = 0.0;
  double horizon = 0.0;
  std::vector<State> samples;
};

namespace detail {

[[nodiscard]] inline double stationary_scale(const ModelParams& p) { return std::min(p.mu1, p.mu2); }

}  // namespace detail

/// States at n_samples equally spaced times in (burn_in, horizon] along one
/// path of the chain with parameters p (already scaled) started from x0.
[[nodiscard]] inline std::vector<State> stationary_samples(const ModelParams& p, const State& x0, double burn_in,
                                                           double horizon, std::size_t n_samples, std::uint64_t seed) {
  if (!(burn_in >= 0.0)) throw std::invalid_argument("stationary: burn_in >= 0 required");
  if (!(horizon > burn_in)) throw std::invalid_argument("stationary: horizon > burn_in required");
  if (n_samples < 1) throw std::invalid_argument("stationary: n_samples >= 1 required");
  std::vector<double> times(n_samples);
  const double span = horizon - burn_in;
  for (std::size_t k = 0; k < n_samples; ++k)
    times[k] = burn_in + span * static_cast<double>(k + 1) / static_cast<double>(n_samples);
  times.back() = horizon;
  return sample_states(p, x0, times, seed);
}

/// Summary statistics of already drawn stationary samples.
[[nodiscard]] inline StationaryEstimate summarize_stationary(std::vector<State> samples, std::int64_t N, double burn_in,
                                                             double horizon) {
  if (samples.empty()) throw std::invalid_argument("stationary: empty sample");
  const auto n = static_cast<double>(N);
  std::vector<double> y1(samples.size()), y2(samples.size()), prev(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    y1[i] = static_cast<double>(samples[i].n1) / n;
    y2[i] = static_cast<double>(samples[i].n2) / n;
    prev[i] = infected_fraction(samples[i]);
  }
  StationaryEstimate est;
  est.N = N;
  est.mean_y1 = stats::mean(y1);
  est.mean_y2 = stats::mean(y2);
  const auto pe = stats::batch_means(prev);
  est.prevalence = pe.mean;
  est.prevalence_se = pe.std_error;
  est.n_samples = samples.size();
  est.burn_in = burn_in;
  est.horizon = horizon;
  est.samples = std::move(samples);
  return est;
}

/// Default sampling window: burn-in 10 / min(mu1, mu2) and one sample every
/// 1 / min(mu1, mu2) after it.
[[nodiscard]] inline double default_burn_in(const ModelParams& p) { return 10.0 / detail::stationary_scale(p); }
[[nodiscard]] inline double default_spacing(const ModelParams& p) { return 1.0 / detail::stationary_scale(p); }

/// Long-path estimate of the stationary law of Y^N = X^N / N under
/// scale(p, N), started from round(N x0).
[[nodiscard]] inline StationaryEstimate estimate_stationary(const ModelParams& p, std::int64_t N, const PsiState& x0,
                                                            double burn_in, double horizon, std::size_t n_samples,
                                                            std::uint64_t seed) {
  validate(p);
  validate(x0);
  const ModelParams scaled = scale(p, N);
  auto samples = stationary_samples(scaled, discretize(x0, N), burn_in, horizon, n_samples, seed);
  return summarize_stationary(std::move(samples), N, burn_in, horizon);
}

namespace detail {

/// (Q e^{-|.|})(x) * e^{|x|}.
[[nodiscard]] inline double exp_norm_factor(const ModelParams& p, const State& x) {
  const auto n1 = static_cast<double>(x.n1);
  const auto n2 = static_cast<double>(x.n2);
  const double e = std::exp(1.0);
  return (p.r + p.lambda) * (1.0 / e - 1.0) + (p.mu1 * n1 + p.mu2 * n2) * (e - 1.0);
}

}  // namespace detail

/// Q e^{-|x|} at x, with |x| = n1 + n2:
///   e^{-|x|} [(r + lambda)(e^{-1} - 1) + (mu1 n1 + mu2 n2)(e - 1)].
[[nodiscard]] inline double generator_of_exp_norm(const ModelParams& p, const State& x) {
  return std::exp(-static_cast<double>(x.total())) * detail::exp_norm_factor(p, x);
}

/// Sample mean of Q e^{-|.|}; zero in expectation under the stationary law.
[[nodiscard]] inline double moment_identity_residual(std::span<const State> samples, const ModelParams& p) {
  if (samples.empty()) throw std::invalid_argument("moment_identity_residual: empty sample list");
  std::vector<double> v(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) v[i] = generator_of_exp_norm(p, samples[i]);
  return stats::mean(v);
}

/// Same mean with a batch-means standard error for correlated samples.
/// Terms are computed relative to e^{-min |x|} so the variance does not underflow.
[[nodiscard]] inline stats::MeanEstimate moment_identity_estimate(std::span<const State> samples, const ModelParams& p,
                                                                  std::size_t batches = 50) {
  if (samples.empty()) throw std::invalid_argument("moment_identity_estimate: empty sample list");
  std::int64_t m = samples[0].total();
  for (const State& x : samples) m = std::min(m, x.total());
  std::vector<double> v(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    v[i] = std::exp(-static_cast<double>(samples[i].total() - m)) * detail::exp_norm_factor(p, samples[i]);
  stats::MeanEstimate est = stats::batch_means(v, batches);
  const double scale = std::exp(-static_cast<double>(m));
  est.mean *= scale;
  est.std_error *= scale;
  return est;
}

/// Exact stationary distribution of the chain truncated to n1 + n2 <= K.
struct TruncatedSolve {
  std::int64_t K = 0;
  std::vector<double> prob;  // indexed by simplex_index
  double residual = 0.0;     // |pi Q_K|_inf
  double mass_bound = 1.0;   // tail_bound(p, 1, K): upper bound on the mass beyond K

  /// Position of (n1, n2) in the order (n1 + n2, n1).
  [[nodiscard]] static std::size_t simplex_index(std::int64_t n1, std::int64_t n2) {
    const auto m = static_cast<std::size_t>(n1 + n2);
    return m * (m + 1) / 2 + static_cast<std::size_t>(n1);
  }
  [[nodiscard]] static std::size_t simplex_size(std::int64_t K) {
    const auto k = static_cast<std::size_t>(K);
    return (k + 1) * (k + 2) / 2;
  }
  [[nodiscard]] double at(std::int64_t n1, std::int64_t n2) const {
    if (n1 < 0 || n2 < 0 || n1 + n2 > K) return 0.0;
    return prob[simplex_index(n1, n2)];
  }
  /// Calls fn(State, probability) for every state in enumeration order.
  template <class Fn>
  void for_each(Fn&& fn) const {
    for (std::int64_t m = 0; m <= K; ++m)
      for (std::int64_t n1 = 0; n1 <= m; ++n1) fn(State{n1, m - n1}, prob[simplex_index(n1, m - n1)]);
  }
};

/// Chernoff bound on P(|Y^N(inf)| > K): exp(-N (K ln(K / zeta) - K + zeta)),
/// zeta = (r + lambda p_I) / min(mu1, mu2), for unscaled p.
[[nodiscard]] inline double tail_bound(const ModelParams& p, std::int64_t N, double K) {
  if (N < 1) throw std::invalid_argument("tail_bound: N >= 1 required");
  const double zeta = (p.r + p.lambda * p.p_I) / std::min(p.mu1, p.mu2);
  if (!(K > zeta)) throw std::invalid_argument("tail_bound: K > zeta required (bound is vacuous otherwise)");
  return std::exp(-static_cast<double>(N) * (K * std::log(K / zeta) - K + zeta));
}

[[nodiscard]] inline double tail_zeta(const ModelParams& p) { return (p.r + p.lambda * p.p_I) / std::min(p.mu1, p.mu2); }

/// Solves pi Q_K = 0, sum pi = 1 on {n1 + n2 <= K}, where Q_K drops the
/// arrival transitions (q1, q4) out of the boundary n1 + n2 = K.
[[nodiscard]] inline TruncatedSolve truncated_solve(const ModelParams& p, std::int64_t K) {
  validate(p);
  if (K < 1) throw std::invalid_argument("truncated_solve: K >= 1 required");
  const std::size_t n = TruncatedSolve::simplex_size(K);
  using SpMat = Eigen::SparseMatrix<double>;
  std::vector<Eigen::Triplet<double>> qt;  // transpose of Q_K
  qt.reserve(6 * n);
  std::vector<double> out_rate(n, 0.0);
  for (std::int64_t m = 0; m <= K; ++m) {
    for (std::int64_t n1 = 0; n1 <= m; ++n1) {
      const State x{n1, m - n1};
      const std::size_t i = TruncatedSolve::simplex_index(x.n1, x.n2);
      const Rates q = rates(p, x);
      for (JumpType k : kAllJumps) {
        const double rate = q[static_cast<std::size_t>(k)];
        if (rate <= 0.0) continue;
        const State y = apply(x, k);
        if (y.total() > K) continue;
        const std::size_t j = TruncatedSolve::simplex_index(y.n1, y.n2);
        if (j == i) continue;
        qt.emplace_back(static_cast<int>(j), static_cast<int>(i), rate);
        out_rate[i] += rate;
      }
    }
  }
  const auto last = static_cast<int>(n - 1);
  std::vector<Eigen::Triplet<double>> a;
  a.reserve(qt.size() + 2 * n);
  for (const auto& t : qt)
    if (t.row() != last) a.push_back(t);
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<int>(i) != last) a.emplace_back(static_cast<int>(i), static_cast<int>(i), -out_rate[i]);
    a.emplace_back(last, static_cast<int>(i), 1.0);
  }
  SpMat A(static_cast<int>(n), static_cast<int>(n));
  A.setFromTriplets(a.begin(), a.end());
  A.makeCompressed();
  Eigen::SparseLU<SpMat> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw NumericalError("truncated_solve: singular balance system (disconnected truncation)");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<int>(n));
  rhs[last] = 1.0;
  Eigen::VectorXd pi = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !pi.allFinite()) throw NumericalError("truncated_solve: linear solve failed");

  TruncatedSolve out;
  out.K = K;
  out.prob.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.prob[i] = std::max(0.0, pi[static_cast<int>(i)]);
  const double total = pairwise_sum(out.prob);
  for (double& v : out.prob) v /= total;

  SpMat Qt(static_cast<int>(n), static_cast<int>(n));
  std::vector<Eigen::Triplet<double>> full = qt;
  for (std::size_t i = 0; i < n; ++i) full.emplace_back(static_cast<int>(i), static_cast<int>(i), -out_rate[i]);
  Qt.setFromTriplets(full.begin(), full.end());
  const Eigen::Map<const Eigen::VectorXd> pv(out.prob.data(), static_cast<int>(n));
  out.residual = (Qt * pv).cwiseAbs().maxCoeff();
  const double zeta = tail_zeta(p);
  out.mass_bound = static_cast<double>(K) > zeta ? tail_bound(p, 1, static_cast<double>(K)) : 1.0;
  return out;
}

/// Exact stationary expectation of Q e^{-|.|} under the truncated solution.
[[nodiscard]] inline double moment_identity_exact(const TruncatedSolve& ts, const ModelParams& p) {
  std::vector<double> terms;
  terms.reserve(ts.prob.size());
  ts.for_each([&](const State& x, double w) { terms.push_back(w * generator_of_exp_norm(p, x)); });
  return pairwise_sum(terms);
}

/// Total-variation distance between the empirical law of samples and the
/// truncated solution; sample mass beyond K counts fully.
[[nodiscard]] inline double total_variation(std::span<const State> samples, const TruncatedSolve& ts) {
  if (samples.empty()) throw std::invalid_argument("total_variation: empty sample");
  std::vector<double> emp(ts.prob.size(), 0.0);
  double outside = 0.0;
  const double w = 1.0 / static_cast<double>(samples.size());
  for (const State& s : samples) {
    if (s.total() > ts.K) {
      outside += w;
    } else {
      emp[TruncatedSolve::simplex_index(s.n1, s.n2)] += w;
    }
  }
  std::vector<double> diff(emp.size());
  for (std::size_t i = 0; i < emp.size(); ++i) diff[i] = std::abs(emp[i] - ts.prob[i]);
  return 0.5 * (pairwise_sum(diff) + outside);
}

/// Fraction of samples with |X| / N > K.
[[nodiscard]] inline double exceedance_frequency(std::span<const State> samples, std::int64_t N, double K) {
  if (samples.empty()) throw std::invalid_argument("exceedance_frequency: empty sample");
  const double threshold = K * static_cast<double>(N);
  const auto hits = std::count_if(samples.begin(), samples.end(),
                                  [&](const State& s) { return static_cast<double>(s.total()) > threshold; });
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

/// Ensemble mean of the terminal prevalence n1 / (n1 + n2) at T over
/// independent paths of scale(p, N) from x0.
[[nodiscard]] inline stats::MeanEstimate ensemble_prevalence(const ModelParams& p, std::int64_t N, const State& x0,
                                                             double T, std::size_t n_paths, std::uint64_t seed,
                                                             unsigned threads = 0) {
  if (n_paths < 1) throw std::invalid_argument("ensemble_prevalence: n_paths >= 1 required");
  const ModelParams scaled = scale(p, N);
  check_inputs(scaled, x0, T);
  const auto prev = parallel_map(n_paths, threads, [&](std::size_t i) {
    return infected_fraction(simulate_terminal(scaled, x0, T, derive_seed(seed, i)));
  });
  return stats::estimate_mean(prev);
}

/// CSV `n1,n2,prob` in enumeration order.
inline void write_csv(std::ostream& os, const TruncatedSolve& ts) {
  os << "n1,n2,prob\n";
  ts.for_each([&](const State& x, double w) { os << x.n1 << ',' << x.n2 << ',' << io::fmt(w) << '\n'; });
}

}  // namespace hcv
