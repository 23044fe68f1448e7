#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcv/errors.hpp"
#include "hcv/model.hpp"
#include "hcv/odesys.hpp"
#include "hcv/parallel.hpp"
#include "hcv/random.hpp"
#include "hcv/ssa.hpp"
#include "hcv/stats.hpp"

namespace hcv {

/// Number of infection jumps on [0, T] minus the integral of q3.
[[nodiscard]] inline double score(const Trajectory& traj, const ModelParams& p) {
  const double T = traj.horizon;
  return static_cast<double>(count_jumps(traj, JumpType::Infection, T)) - integrated_rate(traj, p, 3, T);
}

/// Path functional F evaluated on a full trajectory.
struct PathFunctional {
  std::string tag;
  std::function<double(const Trajectory&)> eval;
};

[[nodiscard]] inline PathFunctional terminal_prevalence() {
  return {"terminal_prevalence", [](const Trajectory& t) { return infected_fraction(t.final_state()); }};
}

/// Unbounded; not covered by the score identity.
[[nodiscard]] inline PathFunctional terminal_infected() {
  return {"terminal_n1", [](const Trajectory& t) { return static_cast<double>(t.final_state().n1); }};
}

/// (2 / T) * integral over [T/2, T] of the prevalence.
[[nodiscard]] inline PathFunctional time_averaged_prevalence() {
  return {"time_averaged_prevalence", [](const Trajectory& traj) {
            const double T = traj.horizon;
            const double a = 0.5 * T;
            State s = traj.initial_state;
            double last = 0.0;
            double acc = 0.0;
            for (const auto& e : traj.events) {
              if (e.time > a) acc += infected_fraction(s) * (e.time - std::max(last, a));
              last = e.time;
              s = e.state;
            }
            acc += infected_fraction(s) * (T - std::max(last, a));
            return acc / (T - a);
          }};
}

[[nodiscard]] inline PathFunctional functional_by_name(const std::string& name) {
  if (name == "terminal_prevalence") return terminal_prevalence();
  if (name == "terminal_n1") return terminal_infected();
  if (name == "time_averaged_prevalence") return time_averaged_prevalence();
  throw std::invalid_argument("unknown functional '" + name +
                              "' (terminal_prevalence, terminal_n1, time_averaged_prevalence)");
}

enum class GreekForm { Product, Covariance };

[[nodiscard]] inline std::string to_string(GreekForm f) { return f == GreekForm::Product ? "product" : "covariance"; }

[[nodiscard]] inline GreekForm greek_form_from_string(const std::string& s) {
  if (s == "product") return GreekForm::Product;
  if (s == "covariance") return GreekForm::Covariance;
  throw std::invalid_argument("unknown greek form '" + s + "' (product, covariance)");
}

struct GreekEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::string functional;
  std::string form;
  std::uint64_t seed = 0;
  double functional_mean = 0.0;

  [[nodiscard]] double ci_low(double z = 1.959963984540054) const { return estimate - z * std_error; }
  [[nodiscard]] double ci_high(double z = 1.959963984540054) const { return estimate + z * std_error; }
  [[nodiscard]] bool covers(double v, double z = 1.959963984540054) const { return ci_low(z) <= v && v <= ci_high(z); }
};

/// Per-path (F, score) pairs for the chain p from x0 on [0, T].
struct ScoreSample {
  std::vector<double> f;
  std::vector<double> s;
};

[[nodiscard]] inline ScoreSample score_samples(const ModelParams& p, const State& x0, const PathFunctional& F, double T,
                                               std::size_t n_paths, std::uint64_t seed, unsigned threads = 0) {
  check_inputs(p, x0, T);
  const auto pairs = parallel_map(n_paths, threads, [&](std::size_t i) {
    const Trajectory traj = simulate(p, x0, T, derive_seed(seed, i));
    return std::array<double, 2>{F.eval(traj), score(traj, p)};
  });
  ScoreSample out;
  out.f.resize(n_paths);
  out.s.resize(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) {
    out.f[i] = pairs[i][0];
    out.s[i] = pairs[i][1];
  }
  return out;
}

/// Likelihood-ratio estimate of d/dp E_p[F] from precomputed samples.
///   product:    (1/p) mean(F * score)
///   covariance: (1/p) cov(F, score)
[[nodiscard]] inline GreekEstimate greek_from_samples(const ScoreSample& xs, double p, GreekForm form) {
  const std::size_t n = xs.f.size();
  if (n < 2) throw std::invalid_argument("greek: n_paths >= 2 required");
  std::vector<double> terms(n);
  if (form == GreekForm::Product) {
    for (std::size_t i = 0; i < n; ++i) terms[i] = xs.f[i] * xs.s[i];
  } else {
    const double mf = stats::mean(xs.f);
    const double ms = stats::mean(xs.s);
    for (std::size_t i = 0; i < n; ++i) terms[i] = (xs.f[i] - mf) * (xs.s[i] - ms);
  }
  const auto e = stats::estimate_mean(terms);
  GreekEstimate g;
  const double bessel = form == GreekForm::Covariance ? static_cast<double>(n) / static_cast<double>(n - 1) : 1.0;
  g.estimate = e.mean * bessel / p;
  g.std_error = e.std_error * bessel / p;
  g.n_paths = n;
  g.form = to_string(form);
  g.functional_mean = stats::mean(xs.f);
  return g;
}

[[nodiscard]] inline GreekEstimate greek(const ModelParams& p, const State& x0, const PathFunctional& F, double T,
                                         std::size_t n_paths, std::uint64_t seed, GreekForm form = GreekForm::Covariance,
                                         unsigned threads = 0) {
  if (!(p.p > 0.0)) throw std::invalid_argument("greek: p > 0 required");
  GreekEstimate g = greek_from_samples(score_samples(p, x0, F, T, n_paths, seed, threads), p.p, form);
  g.functional = F.tag;
  g.seed = seed;
  return g;
}

/// Central Monte-Carlo difference (E_{p+eps}[F] - E_{p-eps}[F]) / (2 eps)
/// with eps = eps_frac * p and an independent seed stream per side.
[[nodiscard]] inline GreekEstimate fd_greek_mc(const ModelParams& p, const State& x0, const PathFunctional& F, double T,
                                               std::size_t n_paths, std::uint64_t seed, double eps_frac = 0.1,
                                               unsigned threads = 0) {
  if (!(p.p > 0.0)) throw std::invalid_argument("fd_greek_mc: p > 0 required");
  if (!(eps_frac > 0.0 && eps_frac < 1.0)) throw std::invalid_argument("fd_greek_mc: 0 < eps_frac < 1 required");
  if (n_paths < 2) throw std::invalid_argument("fd_greek_mc: n_paths >= 2 required");
  const double eps = eps_frac * p.p;
  auto side = [&](double pp, std::uint64_t stream) {
    const ModelParams q = with_infection_probability(p, pp);
    check_inputs(q, x0, T);
    const std::uint64_t s = stream_seed(seed, stream);
    const auto vals = parallel_map(n_paths, threads, [&](std::size_t i) {
      return F.eval(simulate(q, x0, T, derive_seed(s, i)));
    });
    return stats::estimate_mean(vals);
  };
  const auto hi = side(p.p + eps, 1);
  const auto lo = side(p.p - eps, 2);
  GreekEstimate g;
  g.estimate = (hi.mean - lo.mean) / (2.0 * eps);
  g.std_error = std::hypot(hi.std_error, lo.std_error) / (2.0 * eps);
  g.n_paths = 2 * n_paths;
  g.functional = F.tag;
  g.form = "finite_difference";
  g.seed = seed;
  g.functional_mean = 0.5 * (hi.mean + lo.mean);
  return g;
}

/// Central difference in p of the equilibrium prevalence of the ODE.
[[nodiscard]] inline double deterministic_greek(const ModelParams& p, double step = 1e-5) {
  validate(p);
  if (!(step > 0.0 && step < p.p)) throw std::invalid_argument("deterministic_greek: 0 < step < p required");
  const auto hi = equilibrium(with_infection_probability(p, p.p + step));
  const auto lo = equilibrium(with_infection_probability(p, p.p - step));
  if (hi.branch != lo.branch)
    throw NumericalError("deterministic_greek: equilibrium branch changes across p +- step (non-differentiable point)");
  return (prevalence(hi) - prevalence(lo)) / (2.0 * step);
}

}  // namespace hcv
