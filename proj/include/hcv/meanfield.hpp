#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hcv/model.hpp"
#include "hcv/odesys.hpp"
#include "hcv/parallel.hpp"
#include "hcv/quadrature.hpp"
#include "hcv/random.hpp"
#include "hcv/ssa.hpp"
#include "hcv/stats.hpp"

namespace hcv {

/// L1 norm.
[[nodiscard]] inline double l1(double a, double b) { return std::abs(a) + std::abs(b); }

/// Integer start state round(N * x0).
[[nodiscard]] inline State discretize(const PsiState& x0, std::int64_t N) {
  const auto n = static_cast<double>(N);
  return {std::llround(n * x0.psi1), std::llround(n * x0.psi2)};
}

struct LLNReport {
  std::int64_t N = 0;
  double T = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  double sup_err_sq_mean = 0.0;     // MC mean of sup_t |X^N(t)/N - psi(t)|^2
  double sup_err_sq_se = 0.0;
  double bound = 0.0;               // error_bound for the same inputs
  std::vector<double> sup_errors;   // per path, not squared

  [[nodiscard]] bool bound_respected() const { return sup_err_sq_mean <= bound; }
  [[nodiscard]] double sup_error_quantile(double q) const { return stats::quantile(sup_errors, q); }
};

/// Deviation bound for E sup_{t<=T} |X^N/N - psi|:
///   (|x0N/N - x0|^2 + (T + T^2 |x0N| / N) / N) * exp(T int_0^T (1 + 1/|psi(s)|)^2 ds)
/// with the integral by composite Simpson on the dense ODE output.
[[nodiscard]] inline double error_bound(const ModelParams& p, const PsiState& x0, const State& x0N, std::int64_t N,
                                        double T, std::size_t panels = 1000, double tol = 1e-9) {
  if (N < 1) throw std::invalid_argument("error_bound: N >= 1 required");
  validate(x0N);
  const auto n = static_cast<double>(N);
  const PsiPath psi = integrate(p, x0, T, tol);
  const double integral = quad::simpson(
      [&](double s) {
        const PsiState y = psi.at(s);
        const double g = 1.0 + 1.0 / l1(y.psi1, y.psi2);
        return g * g;
      },
      0.0, T, panels);
  const double d0 = l1(static_cast<double>(x0N.n1) / n - x0.psi1, static_cast<double>(x0N.n2) / n - x0.psi2);
  const double initial = d0 * d0 + (T + T * T * static_cast<double>(x0N.total()) / n) / n;
  return initial * std::exp(T * integral);
}

/// Sup over [0, T] of |X(t)/N - psi(t)| for one simulated path. The jump
/// path is compared at every event (both one-sided limits) and on a uniform
/// grid of `grid` interior points.
[[nodiscard]] inline double path_sup_deviation(const ModelParams& scaled, const PsiPath& psi, const State& start,
                                               std::int64_t N, double T, std::uint64_t seed, std::size_t grid = 1000) {
  const auto n = static_cast<double>(N);
  auto dev = [&](const State& s, double t) {
    const PsiState y = psi.at(t);
    return l1(static_cast<double>(s.n1) / n - y.psi1, static_cast<double>(s.n2) / n - y.psi2);
  };
  double sup = dev(start, 0.0);
  std::size_t next_grid = 1;
  auto grid_time = [&](std::size_t j) { return T * static_cast<double>(j) / static_cast<double>(grid + 1); };

  Engine eng(seed);
  const State last = run_ssa(scaled, start, T, eng, [&](double t, JumpType, const State& before, const State& after) {
    while (next_grid <= grid && grid_time(next_grid) < t) sup = std::max(sup, dev(before, grid_time(next_grid++)));
    sup = std::max({sup, dev(before, t), dev(after, t)});
  });
  while (next_grid <= grid) sup = std::max(sup, dev(last, grid_time(next_grid++)));
  return std::max(sup, dev(last, T));
}

/// Monte-Carlo estimate of E sup_{t<=T} |X^N(t)/N - psi(x0, t)|^2 under
/// scale(p, N) from round(N x0), with the matching error_bound.
[[nodiscard]] inline LLNReport lln_experiment(const ModelParams& p, const PsiState& x0, std::int64_t N, double T,
                                              std::size_t n_paths, std::uint64_t seed, unsigned threads = 0) {
  if (N < 1) throw std::invalid_argument("lln_experiment: N >= 1 required");
  if (n_paths < 1) throw std::invalid_argument("lln_experiment: n_paths >= 1 required");
  validate(p);
  const ModelParams scaled = scale(p, N);
  const State start = discretize(x0, N);
  const PsiPath psi = integrate(p, x0, T);

  LLNReport rep;
  rep.N = N;
  rep.T = T;
  rep.n_paths = n_paths;
  rep.seed = seed;
  rep.sup_errors = parallel_map(n_paths, threads, [&](std::size_t i) {
    return path_sup_deviation(scaled, psi, start, N, T, derive_seed(seed, i));
  });
  std::vector<double> sq(n_paths);
  std::transform(rep.sup_errors.begin(), rep.sup_errors.end(), sq.begin(), [](double e) { return e * e; });
  const auto est = stats::estimate_mean(sq);
  rep.sup_err_sq_mean = est.mean;
  rep.sup_err_sq_se = est.std_error;
  rep.bound = error_bound(p, x0, start, N, T);
  return rep;
}

}  // namespace hcv
