#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hcv/io.hpp"
#include "hcv/model.hpp"
#include "hcv/random.hpp"

namespace hcv {

/// The five jump types, ordered like the rates q1..q5.
enum class JumpType : std::uint8_t {
  ExogenousInfectedArrival = 0,  // l1 = (+1,  0)
  InfectedExit = 1,              // l2 = (-1,  0)
  Infection = 2,                 // l3 = (+1, -1)
  SusceptibleArrival = 3,        // l4 = ( 0, +1)
  SusceptibleExit = 4,           // l5 = ( 0, -1)
};

inline constexpr std::array<JumpType, 5> kAllJumps = {
    JumpType::ExogenousInfectedArrival, JumpType::InfectedExit, JumpType::Infection,
    JumpType::SusceptibleArrival, JumpType::SusceptibleExit};

/// 1-based index matching the rate q_i of this jump.
[[nodiscard]] constexpr int rate_index(JumpType k) { return static_cast<int>(k) + 1; }

[[nodiscard]] constexpr std::pair<int, int> displacement(JumpType k) {
  constexpr std::array<std::pair<int, int>, 5> table = {{{1, 0}, {-1, 0}, {1, -1}, {0, 1}, {0, -1}}};
  return table[static_cast<std::size_t>(k)];
}

[[nodiscard]] constexpr State apply(State s, JumpType k) {
  const auto [d1, d2] = displacement(k);
  return {s.n1 + d1, s.n2 + d2};
}

struct Event {
  double time = 0.0;
  JumpType jump = JumpType::ExogenousInfectedArrival;
  State state;  // state right after the jump
};

/// Full jump log of one path on [0, horizon].
struct Trajectory {
  State initial_state;
  std::vector<Event> events;
  double horizon = 0.0;
  std::uint64_t seed = 0;

  [[nodiscard]] State final_state() const { return events.empty() ? initial_state : events.back().state; }
};

namespace detail {

[[nodiscard]] inline JumpType select_jump(const Rates& q, double u) {
  double acc = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    acc += q[k];
    if (u < acc) return static_cast<JumpType>(k);
  }
  // u landed on the rounding slack above the cumulative sum.
  for (std::size_t k = q.size(); k-- > 0;)
    if (q[k] > 0.0) return static_cast<JumpType>(k);
  return JumpType::SusceptibleExit;
}

}  // namespace detail

/// Direct-method simulation of the chain from x on [0, horizon]. Calls
/// on_jump(time, jump, before, after) for every event and returns the state
/// at the horizon. Stops early if the chain is absorbed (all rates zero).
template <class Observer>
State run_ssa(const ModelParams& p, State x, double horizon, Engine& eng, Observer&& on_jump) {
  double t = 0.0;
  for (;;) {
    const Rates q = rates(p, x);
    const double total = q[0] + q[1] + q[2] + q[3] + q[4];
    if (!(total > 0.0)) break;
    // event times must stay strictly increasing even when dt is below one ulp of t
    t = std::max(t + exponential(eng, total), std::nextafter(t, std::numeric_limits<double>::infinity()));
    if (t > horizon) break;
    const JumpType k = detail::select_jump(q, uniform_open(eng) * total);
    const State next = apply(x, k);
    on_jump(t, k, x, next);
    x = next;
  }
  return x;
}

inline void check_inputs(const ModelParams& p, const State& x0, double horizon) {
  validate(p);
  validate(x0);
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("simulate: horizon T > 0 required");
}

/// Exact path with its full jump log; deterministic in (p, x0, T, seed).
[[nodiscard]] inline Trajectory simulate(const ModelParams& p, const State& x0, double horizon, std::uint64_t seed) {
  check_inputs(p, x0, horizon);
  Trajectory traj{x0, {}, horizon, seed};
  Engine eng(seed);
  run_ssa(p, x0, horizon, eng, [&](double t, JumpType k, const State&, const State& after) {
    traj.events.push_back({t, k, after});
  });
  return traj;
}

/// Same path as simulate(p, x0, T, seed) but only its terminal state.
[[nodiscard]] inline State simulate_terminal(const ModelParams& p, const State& x0, double horizon, std::uint64_t seed) {
  check_inputs(p, x0, horizon);
  Engine eng(seed);
  return run_ssa(p, x0, horizon, eng, [](double, JumpType, const State&, const State&) {});
}

/// States of one path at sorted times in [0, horizon], without storing the
/// jump log. Used for long stationary runs.
[[nodiscard]] inline std::vector<State> sample_states(const ModelParams& p, const State& x0, std::span<const double> times,
                                                      std::uint64_t seed) {
  if (times.empty()) return {};
  if (!std::is_sorted(times.begin(), times.end()) || times.front() < 0.0)
    throw std::invalid_argument("sample_states: times must be sorted and non-negative");
  check_inputs(p, x0, std::max(times.back(), std::numeric_limits<double>::min()));
  std::vector<State> out;
  out.reserve(times.size());
  Engine eng(seed);
  const State last = run_ssa(p, x0, times.back(), eng, [&](double t, JumpType, const State& before, const State&) {
    while (out.size() < times.size() && times[out.size()] < t) out.push_back(before);
  });
  while (out.size() < times.size()) out.push_back(last);
  return out;
}

/// Right-continuous state of the path at time t.
[[nodiscard]] inline State state_at(const Trajectory& traj, double t) {
  if (!(t >= 0.0 && t <= traj.horizon)) throw std::invalid_argument("state_at: t outside [0, T]");
  const auto it = std::upper_bound(traj.events.begin(), traj.events.end(), t,
                                   [](double value, const Event& e) { return value < e.time; });
  return it == traj.events.begin() ? traj.initial_state : std::prev(it)->state;
}

/// Number of type-k events in [0, t].
[[nodiscard]] inline std::int64_t count_jumps(const Trajectory& traj, JumpType k, double t) {
  std::int64_t n = 0;
  for (const auto& e : traj.events) {
    if (e.time > t) break;
    if (e.jump == k) ++n;
  }
  return n;
}

/// Counts of all five jump types in [0, t].
[[nodiscard]] inline std::array<std::int64_t, 5> count_all_jumps(const Trajectory& traj, double t) {
  std::array<std::int64_t, 5> n{};
  for (const auto& e : traj.events) {
    if (e.time > t) break;
    ++n[static_cast<std::size_t>(e.jump)];
  }
  return n;
}

/// Exact integrals of q1..q5 along the piecewise-constant path over [0, t].
[[nodiscard]] inline std::array<double, 5> integrated_rates(const Trajectory& traj, const ModelParams& p, double t) {
  if (!(t >= 0.0 && t <= traj.horizon)) throw std::invalid_argument("integrated_rate: t outside [0, T]");
  std::array<double, 5> sum{};
  std::array<double, 5> comp{};  // Neumaier compensation
  auto add = [&](const State& s, double dt) {
    const Rates q = rates(p, s);
    for (std::size_t i = 0; i < 5; ++i) {
      const double v = q[i] * dt;
      const double tsum = sum[i] + v;
      comp[i] += std::abs(sum[i]) >= std::abs(v) ? (sum[i] - tsum) + v : (v - tsum) + sum[i];
      sum[i] = tsum;
    }
  };
  State s = traj.initial_state;
  double last = 0.0;
  for (const auto& e : traj.events) {
    if (e.time > t) break;
    add(s, e.time - last);
    last = e.time;
    s = e.state;
  }
  add(s, t - last);
  for (std::size_t i = 0; i < 5; ++i) sum[i] += comp[i];
  return sum;
}

/// Integral of q_i, i in 1..5, over [0, t].
[[nodiscard]] inline double integrated_rate(const Trajectory& traj, const ModelParams& p, int i, double t) {
  if (i < 1 || i > 5) throw std::invalid_argument("integrated_rate: rate index must be in 1..5");
  return integrated_rates(traj, p, t)[static_cast<std::size_t>(i - 1)];
}

/// CSV `time,jump_type,n1,n2`, one row per event; jump_type is the rate index 1..5.
inline void write_csv(std::ostream& os, const Trajectory& traj) {
  os << "time,jump_type,n1,n2\n";
  for (const auto& e : traj.events)
    os << io::fmt(e.time) << ',' << rate_index(e.jump) << ',' << e.state.n1 << ',' << e.state.n2 << '\n';
}

}  // namespace hcv
