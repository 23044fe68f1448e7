#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "hcv/meanfield.hpp"
#include "hcv/model.hpp"
#include "hcv/odesys.hpp"
#include "hcv/parallel.hpp"
#include "hcv/quadrature.hpp"
#include "hcv/random.hpp"
#include "hcv/ssa.hpp"
#include "hcv/stats.hpp"

namespace hcv {

/// Symmetric 2x2 matrix stored as its upper triangle.
struct CovMatrix {
  double g11 = 0.0;
  double g12 = 0.0;
  double g22 = 0.0;

  [[nodiscard]] double det() const { return g11 * g22 - g12 * g12; }
  [[nodiscard]] bool is_psd() const { return g11 >= 0.0 && g22 >= 0.0 && det() >= -1e-12 * (g11 * g22); }

  friend bool operator==(const CovMatrix&, const CovMatrix&) = default;
};

/// M(t) = X(t) - X(0) - int_0^t (q1 + q3 - q2, q4 - q3 - q5) ds along the path.
[[nodiscard]] inline std::array<double, 2> martingale_residual(const Trajectory& traj, const ModelParams& p, double t) {
  const auto I = integrated_rates(traj, p, t);
  const State x = state_at(traj, t);
  const State& x0 = traj.initial_state;
  return {static_cast<double>(x.n1 - x0.n1) - (I[0] + I[2] - I[1]),
          static_cast<double>(x.n2 - x0.n2) - (I[3] - I[2] - I[4])};
}

/// Predictable bracket of M at t: [[int q1+q2+q3, -int q3], [-int q3, int q3+q4+q5]].
[[nodiscard]] inline CovMatrix bracket(const Trajectory& traj, const ModelParams& p, double t) {
  const auto I = integrated_rates(traj, p, t);
  return {I[0] + I[1] + I[2], -I[2], I[2] + I[3] + I[4]};
}

namespace detail {

/// Integrands of Gamma at a mean-field point: (q1+q2+q3, -q3, q3+q4+q5).
[[nodiscard]] inline std::array<double, 3> gamma_integrands(const ModelParams& p, const PsiState& y) {
  const double s = y.total();
  const double frac = s > 0.0 ? y.psi1 / s : 0.0;
  const double contact = s > 0.0 ? y.psi1 * y.psi2 / s : 0.0;
  const double q3 = p.infection_rate() * contact;
  return {p.r + p.lambda * p.p_I * frac + p.mu1 * y.psi1 + q3, -q3,
          p.lambda * (1.0 - p.p_I * frac) + p.mu2 * y.psi2 + q3};
}

}  // namespace detail

/// Gamma(t) by Simpson quadrature along an already integrated path.
[[nodiscard]] inline CovMatrix gamma_along(const ModelParams& p, const PsiPath& psi, double t,
                                           std::size_t panels = 1000) {
  if (t == 0.0) return {};
  auto entry = [&](std::size_t k) {
    return quad::simpson([&](double s) { return detail::gamma_integrands(p, psi.at(s))[k]; }, 0.0, t, panels);
  };
  return {entry(0), entry(1), entry(2)};
}

/// Limiting covariance Gamma(t) of the fluctuation process as the integral
/// of the bracket intensity along the mean-field solution from x0.
[[nodiscard]] inline CovMatrix gamma(const ModelParams& p, const PsiState& x0, double t, double tol = 1e-9) {
  validate(x0);
  if (!(t >= 0.0)) throw std::invalid_argument("gamma: t >= 0 required");
  if (t == 0.0) return {};
  return gamma_along(p, integrate(p, x0, t, tol), t);
}

struct CltReport {
  std::int64_t N = 0;
  double t = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  CovMatrix empirical;
  CovMatrix theoretical;
  std::array<double, 3> rel_err{};  // (emp - theory) / |theory| for g11, g12, g22
  std::array<double, 2> mean_w{};
  std::array<double, 2> mean_w_se{};
  std::array<stats::Moments, 2> moments{};
  std::vector<std::array<double, 2>> samples;  // W per path
};

/// Samples W = sqrt(N) (X^N(t)/N - psi(x0, t)) over n_paths and compares
/// their unbiased covariance with gamma(t).
[[nodiscard]] inline CltReport clt_experiment(const ModelParams& p, const PsiState& x0, std::int64_t N, double t,
                                              std::size_t n_paths, std::uint64_t seed, unsigned threads = 0,
                                              double tol = 1e-9) {
  if (N < 1) throw std::invalid_argument("clt_experiment: N >= 1 required");
  if (n_paths < 2) throw std::invalid_argument("clt_experiment: n_paths >= 2 required");
  if (!(t > 0.0)) throw std::invalid_argument("clt_experiment: t > 0 required");
  validate(p);
  const State start = discretize(x0, N);
  if (start.total() == 0) throw std::invalid_argument("clt_experiment: round(N x0) is empty; increase N");
  const ModelParams scaled = scale(p, N);
  const PsiPath psi = integrate(p, x0, t, tol);
  const PsiState yt = psi.at(t);
  const auto n = static_cast<double>(N);
  const double root_n = std::sqrt(n);

  CltReport rep;
  rep.N = N;
  rep.t = t;
  rep.n_paths = n_paths;
  rep.seed = seed;
  rep.samples = parallel_map(n_paths, threads, [&](std::size_t i) {
    const State x = simulate_terminal(scaled, start, t, derive_seed(seed, i));
    return std::array<double, 2>{root_n * (static_cast<double>(x.n1) / n - yt.psi1),
                                 root_n * (static_cast<double>(x.n2) / n - yt.psi2)};
  });
  std::vector<double> w1(n_paths), w2(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) {
    w1[i] = rep.samples[i][0];
    w2[i] = rep.samples[i][1];
  }
  rep.empirical = {stats::variance(w1), stats::covariance(w1, w2), stats::variance(w2)};
  rep.theoretical = gamma_along(p, psi, t);
  auto rel = [](double e, double th) { return th != 0.0 ? (e - th) / std::abs(th) : e; };
  rep.rel_err = {rel(rep.empirical.g11, rep.theoretical.g11), rel(rep.empirical.g12, rep.theoretical.g12),
                 rel(rep.empirical.g22, rep.theoretical.g22)};
  const auto m1 = stats::estimate_mean(w1);
  const auto m2 = stats::estimate_mean(w2);
  rep.mean_w = {m1.mean, m2.mean};
  rep.mean_w_se = {m1.std_error, m2.std_error};
  rep.moments = {stats::shape_moments(w1), stats::shape_moments(w2)};
  return rep;
}

/// Path average of N^{-1} <<M^N>>_t under scale(p, N); tends to gamma(t).
[[nodiscard]] inline CovMatrix mean_scaled_bracket(const ModelParams& p, const PsiState& x0, std::int64_t N, double t,
                                                   std::size_t n_paths, std::uint64_t seed, unsigned threads = 0) {
  if (n_paths < 1) throw std::invalid_argument("mean_scaled_bracket: n_paths >= 1 required");
  const ModelParams scaled = scale(p, N);
  const State start = discretize(x0, N);
  const auto per_path = parallel_map(n_paths, threads, [&](std::size_t i) {
    const Trajectory traj = simulate(scaled, start, t, derive_seed(seed, i));
    return bracket(traj, scaled, t);
  });
  std::vector<double> a(n_paths), b(n_paths), c(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) {
    a[i] = per_path[i].g11;
    b[i] = per_path[i].g12;
    c[i] = per_path[i].g22;
  }
  const auto n = static_cast<double>(N);
  return {stats::mean(a) / n, stats::mean(b) / n, stats::mean(c) / n};
}

/// CSV `w1,w2`, one row per path.
inline void write_csv(std::ostream& os, const CltReport& rep) {
  os << "w1,w2\n";
  for (const auto& w : rep.samples) os << io::fmt(w[0]) << ',' << io::fmt(w[1]) << '\n';
}

}  // namespace hcv
