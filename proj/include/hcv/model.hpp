#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hcv {

/// Epidemiological rate constants of the two-compartment IDU model.
///
/// Rates are per unit time; p_I and p are probabilities. The pair
/// (alpha, p) only ever enters the dynamics through the product alpha * p.
struct ModelParams {
  double r = 0.0;       // exogenous antibody-positive arrivals
  double lambda = 0.0;  // susceptible arrivals
  double p_I = 0.0;     // infection probability at initiation
  double alpha = 0.0;   // injection rate
  double p = 0.0;       // infection probability per injection
  double mu1 = 1.0;     // exit rate, antibody-positive
  double mu2 = 1.0;     // exit rate, antibody-negative

  [[nodiscard]] double infection_rate() const { return alpha * p; }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Integer population: n1 antibody-positive, n2 antibody-negative.
struct State {
  std::int64_t n1 = 0;
  std::int64_t n2 = 0;

  [[nodiscard]] std::int64_t total() const { return n1 + n2; }

  friend bool operator==(const State&, const State&) = default;
};

using Rates = std::array<double, 5>;

/// Throws std::invalid_argument naming the first violated constraint.
inline void validate(const ModelParams& p) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid parameters: " + what); };
  if (!(p.r >= 0.0)) fail("r >= 0 violated");
  if (!(p.lambda >= 0.0)) fail("lambda >= 0 violated");
  if (!(p.alpha >= 0.0)) fail("alpha >= 0 violated");
  if (!(p.mu1 > 0.0)) fail("mu1 > 0 violated");
  if (!(p.mu2 > 0.0)) fail("mu2 > 0 violated");
  if (!(p.p_I >= 0.0 && p.p_I <= 1.0)) fail("0 <= p_I <= 1 violated");
  if (!(p.p >= 0.0 && p.p <= 1.0)) fail("0 <= p <= 1 violated");
}

inline void validate(const State& s) {
  if (s.n1 < 0 || s.n2 < 0) throw std::invalid_argument("invalid state: n1 >= 0 and n2 >= 0 required");
}

/// n1 / (n1 + n2), with the empty population mapped to 0.
[[nodiscard]] inline double infected_fraction(const State& s) {
  const auto total = s.total();
  if (total == 0) return 0.0;
  return static_cast<double>(s.n1) / static_cast<double>(total);
}

/// Transition intensities (q1..q5) out of state s, in jump-type order.
[[nodiscard]] inline Rates rates(const ModelParams& p, const State& s) {
  const double f = infected_fraction(s);
  const auto n1 = static_cast<double>(s.n1);
  const auto n2 = static_cast<double>(s.n2);
  return {
      p.r + p.lambda * p.p_I * f,
      p.mu1 * n1,
      p.infection_rate() * n2 * f,
      p.lambda * (1.0 - p.p_I * f),
      p.mu2 * n2,
  };
}

/// Population-size scaling: arrival rates grow linearly with N.
[[nodiscard]] inline ModelParams scale(ModelParams p, std::int64_t N) {
  if (N < 1) throw std::invalid_argument("scale: N >= 1 required");
  p.r *= static_cast<double>(N);
  p.lambda *= static_cast<double>(N);
  return p;
}

/// Arrival rate per head, (r + lambda) / (n1 + n2).
[[nodiscard]] inline double incidence(const ModelParams& p, const State& x0) {
  if (x0.total() <= 0) throw std::invalid_argument("incidence: population must be non-empty");
  return (p.r + p.lambda) / static_cast<double>(x0.total());
}

/// Same law with per-injection probability p_new. Values above 1 are folded
/// into alpha so the product alpha * p (the only place p enters) is exact.
[[nodiscard]] inline ModelParams with_infection_probability(ModelParams p, double p_new) {
  if (!(p_new >= 0.0)) throw std::invalid_argument("with_infection_probability: p >= 0 required");
  if (p_new <= 1.0) {
    p.p = p_new;
  } else {
    p.alpha *= p_new;
    p.p = 1.0;
  }
  return p;
}

}  // namespace hcv
