#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hcv/errors.hpp"
#include "hcv/io.hpp"
#include "hcv/model.hpp"

namespace hcv {

/// Population densities of the deterministic limit.
struct PsiState {
  double psi1 = 0.0;
  double psi2 = 0.0;

  [[nodiscard]] double total() const { return psi1 + psi2; }

  friend bool operator==(const PsiState&, const PsiState&) = default;
};

inline void validate(const PsiState& s) {
  if (!(s.psi1 >= 0.0 && s.psi2 >= 0.0)) throw std::invalid_argument("invalid density: psi1, psi2 >= 0 required");
  if (!(s.total() > 0.0)) throw std::invalid_argument("invalid density: psi1 + psi2 > 0 required");
}

namespace detail {

/// Mean-field drift without argument checks (used at integrator stages).
[[nodiscard]] inline std::array<double, 2> drift(const ModelParams& p, double y1, double y2) {
  const double s = y1 + y2;
  const double frac = s > 0.0 ? y1 / s : 0.0;
  const double contact = s > 0.0 ? y1 * y2 / s : 0.0;
  const double infection = p.infection_rate() * contact;
  return {p.r + p.lambda * p.p_I * frac - p.mu1 * y1 + infection,
          p.lambda * (1.0 - p.p_I * frac) - p.mu2 * y2 - infection};
}

}  // namespace detail

/// Right-hand side (f1, f2) of the mean-field system at s.
[[nodiscard]] inline std::array<double, 2> rhs(const ModelParams& p, const PsiState& s) {
  if (!(s.total() > 0.0)) throw std::invalid_argument("rhs: psi1 + psi2 > 0 required");
  return detail::drift(p, s.psi1, s.psi2);
}

/// Dense solution of the mean-field system on [0, t_end]: Dormand-Prince
/// steps with their fourth-order continuous extension.
class PsiPath {
 public:
  struct Segment {
    double t0 = 0.0;
    double h = 0.0;
    std::array<std::array<double, 2>, 5> coef{};
  };

  PsiPath(PsiState start, std::vector<Segment> segments) : start_(start), segments_(std::move(segments)) {}

  [[nodiscard]] double t_end() const { return segments_.empty() ? 0.0 : segments_.back().t0 + segments_.back().h; }
  [[nodiscard]] const PsiState& start() const { return start_; }
  [[nodiscard]] std::size_t steps() const { return segments_.size(); }
  [[nodiscard]] std::span<const Segment> segments() const { return segments_; }

  [[nodiscard]] PsiState at(double t) const {
    if (!(t >= 0.0 && t <= t_end())) throw std::invalid_argument("PsiPath::at: t outside [0, T]");
    if (segments_.empty() || t == 0.0) return start_;
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                               [](double v, const Segment& s) { return v < s.t0; });
    const Segment& seg = *std::prev(it);
    const double theta = std::min(1.0, (t - seg.t0) / seg.h);
    const double theta1 = 1.0 - theta;
    std::array<double, 2> y{};
    for (std::size_t i = 0; i < 2; ++i) {
      const auto& c = seg.coef;
      y[i] = c[0][i] + theta * (c[1][i] + theta1 * (c[2][i] + theta * (c[3][i] + theta1 * c[4][i])));
    }
    return {std::max(0.0, y[0]), std::max(0.0, y[1])};
  }

 private:
  PsiState start_;
  std::vector<Segment> segments_;
};

/// Adaptive integration of the mean-field system from x0 to T with mixed
/// absolute/relative tolerance tol. When r = 0 and psi1(0) = 0 the solution
/// is pinned to the invariant axis psi1 = 0.
[[nodiscard]] inline PsiPath integrate(const ModelParams& p, const PsiState& x0, double T, double tol = 1e-9) {
  validate(p);
  validate(x0);
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("integrate: T > 0 required");
  if (!(tol > 0.0)) throw std::invalid_argument("integrate: tol > 0 required");

  // Dormand-Prince 5(4) tableau and dense-output weights; the system is
  // autonomous so the stage nodes c_i are not needed.
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                   d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                   d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

  const bool on_axis = p.r == 0.0 && x0.psi1 == 0.0;
  using Vec = std::array<double, 2>;
  auto f = [&](const Vec& y) {
    Vec d = detail::drift(p, y[0], y[1]);
    if (on_axis) d[0] = 0.0;
    return d;
  };
  auto norm = [&](const Vec& err, const Vec& ya, const Vec& yb) {
    double s = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      const double sk = tol + tol * std::max(std::abs(ya[i]), std::abs(yb[i]));
      s += (err[i] / sk) * (err[i] / sk);
    }
    return std::sqrt(s / 2.0);
  };

  Vec y{x0.psi1, x0.psi2};
  Vec k1 = f(y);

  // initial step guess
  double h;
  {
    const double df0 = norm(k1, y, y);
    const double ynorm = norm(y, y, y);
    double h0 = (ynorm < 1e-5 || df0 < 1e-5) ? 1e-6 : 0.01 * ynorm / df0;
    h0 = std::min(h0, T);
    Vec y1{y[0] + h0 * k1[0], y[1] + h0 * k1[1]};
    const Vec k1b = f(y1);
    const double d2 = norm(Vec{k1b[0] - k1[0], k1b[1] - k1[1]}, y, y) / h0;
    const double dmax = std::max(df0, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
    h = std::min({100.0 * h0, h1, T});
  }

  std::vector<PsiPath::Segment> segments;
  double t = 0.0;
  bool last_rejected = false;
  constexpr std::size_t kMaxSteps = 50'000'000;
  while (t < T) {
    if (segments.size() > kMaxSteps) throw IntegrationError("integrate: step budget exhausted");
    if (h < 1e-14 * std::max(1.0, std::abs(t)) || !std::isfinite(h))
      throw IntegrationError("integrate: step size underflow at t = " + io::fmt(t));
    const bool final_step = t + h >= T;
    if (final_step) h = T - t;

    Vec tmp;
    auto stage = [&](std::initializer_list<std::pair<double, const Vec*>> terms) {
      Vec out = y;
      for (const auto& [coef, k] : terms)
        for (std::size_t i = 0; i < 2; ++i) out[i] += h * coef * (*k)[i];
      return out;
    };
    tmp = stage({{a21, &k1}});
    const Vec k2 = f(tmp);
    tmp = stage({{a31, &k1}, {a32, &k2}});
    const Vec k3 = f(tmp);
    tmp = stage({{a41, &k1}, {a42, &k2}, {a43, &k3}});
    const Vec k4 = f(tmp);
    tmp = stage({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
    const Vec k5 = f(tmp);
    tmp = stage({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
    const Vec k6 = f(tmp);
    Vec ynew = stage({{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
    const Vec k7 = f(ynew);

    Vec err;
    for (std::size_t i = 0; i < 2; ++i)
      err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    const double en = norm(err, y, ynew);

    if (en <= 1.0) {
      ynew[0] = on_axis ? 0.0 : std::max(0.0, ynew[0]);
      ynew[1] = std::max(0.0, ynew[1]);
      PsiPath::Segment seg;
      seg.t0 = t;
      seg.h = h;
      for (std::size_t i = 0; i < 2; ++i) {
        const double ydiff = ynew[i] - y[i];
        const double bspl = h * k1[i] - ydiff;
        seg.coef[0][i] = y[i];
        seg.coef[1][i] = ydiff;
        seg.coef[2][i] = bspl;
        seg.coef[3][i] = ydiff - h * k7[i] - bspl;
        seg.coef[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      segments.push_back(seg);
      t = final_step ? T : t + h;
      y = ynew;
      k1 = f(y);
      double fac = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0;
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
      h *= fac;
      last_rejected = false;
    } else {
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      last_rejected = true;
    }
  }
  return PsiPath(x0, std::move(segments));
}

enum class EquilibriumBranch { Interior, R0Endemic, R0DiseaseFree };

[[nodiscard]] inline std::string to_string(EquilibriumBranch b) {
  switch (b) {
    case EquilibriumBranch::Interior: return "interior";
    case EquilibriumBranch::R0Endemic: return "r0_endemic";
    case EquilibriumBranch::R0DiseaseFree: return "r0_disease_free";
  }
  return "unknown";
}

/// Fixed point of the mean-field system with the intermediates of its
/// closed form.
struct EquilibriumPoint {
  double xi1 = 0.0;
  double xi2 = 0.0;
  EquilibriumBranch branch = EquilibriumBranch::Interior;
  double a = 0.0;    // alpha p - mu1 + mu2
  double b = 0.0;    // r + lambda
  double c = 0.0;    // r mu1 + lambda (1 - p_I) mu2
  double rho = 0.0;  // alpha p + mu2 p_I - mu1

  [[nodiscard]] PsiState point() const { return {xi1, xi2}; }
};

/// Closed-form equilibrium. For r > 0 it is the unique root of
///   a mu1 xi1^2 + (c - a b) xi1 - b r = 0
/// with 0 <= xi1 <= (r + lambda) / mu1, and xi2 = (r + lambda - mu1 xi1) / mu2.
/// For r = 0 the endemic point exists iff rho > 0; otherwise (0, lambda/mu2).
[[nodiscard]] inline EquilibriumPoint equilibrium(const ModelParams& p) {
  validate(p);
  EquilibriumPoint e;
  e.a = p.infection_rate() - p.mu1 + p.mu2;
  e.b = p.r + p.lambda;
  e.c = p.r * p.mu1 + p.lambda * (1.0 - p.p_I) * p.mu2;
  e.rho = p.infection_rate() + p.mu2 * p.p_I - p.mu1;

  if (p.r > 0.0) {
    e.branch = EquilibriumBranch::Interior;
    const double A = e.a * p.mu1;
    const double B = e.c - e.a * e.b;
    const double C = -e.b * p.r;
    const double upper = e.b / p.mu1;
    double x;
    if (A == 0.0) {
      x = -C / B;  // linear case: c xi1 = b r
    } else {
      const double disc = std::max(0.0, B * B - 4.0 * A * C);
      const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
      const double r1 = q / A;
      const double r2 = q != 0.0 ? C / q : r1;
      // exactly one root lies in [0, upper]: the quadratic is -br < 0 at 0 and
      // b lambda (1 - p_I) mu2 / mu1 >= 0 at upper
      auto dist = [&](double v) { return v < 0.0 ? -v : (v > upper ? v - upper : 0.0); };
      x = dist(r1) <= dist(r2) ? r1 : r2;
    }
    // one Newton polish on the quadratic
    const double g = (A * x + B) * x + C;
    const double dg = 2.0 * A * x + B;
    if (dg != 0.0 && std::isfinite(g / dg)) x -= g / dg;
    e.xi1 = std::clamp(x, 0.0, upper);
    e.xi2 = std::max(0.0, (e.b - p.mu1 * e.xi1) / p.mu2);
  } else if (e.rho > 0.0 && p.lambda > 0.0) {
    e.branch = EquilibriumBranch::R0Endemic;
    // rho > 0 forces a = rho + mu2 (1 - p_I) > 0
    e.xi1 = p.lambda * e.rho / (e.a * p.mu1);
    e.xi2 = p.lambda * (1.0 - p.p_I) / e.a;
  } else {
    e.branch = EquilibriumBranch::R0DiseaseFree;
    e.xi1 = 0.0;
    e.xi2 = p.lambda / p.mu2;
  }

  if (e.xi1 + e.xi2 > 0.0) {
    const auto f = detail::drift(p, e.xi1, e.xi2);
    const double scale = e.b + 1.0;
    if (std::abs(f[0]) > 1e-8 * scale || std::abs(f[1]) > 1e-8 * scale)
      throw NumericalError("equilibrium: residual check failed");
  }
  return e;
}

/// Point the mean-field solution started at x0 converges to.
[[nodiscard]] inline EquilibriumPoint limit_point(const ModelParams& p, const PsiState& x0) {
  EquilibriumPoint e = equilibrium(p);
  if (p.r == 0.0 && x0.psi1 == 0.0 && e.branch == EquilibriumBranch::R0Endemic) {
    e.branch = EquilibriumBranch::R0DiseaseFree;
    e.xi1 = 0.0;
    e.xi2 = p.lambda / p.mu2;
  }
  return e;
}

/// Antibody-positive fraction xi1 / (xi1 + xi2).
[[nodiscard]] inline double prevalence(const EquilibriumPoint& e) {
  if (!(e.xi1 + e.xi2 > 0.0)) throw std::invalid_argument("prevalence: degenerate zero population");
  return e.xi1 / (e.xi1 + e.xi2);
}

/// CSV `t,psi1,psi2` at the given sample times.
inline void write_csv(std::ostream& os, const PsiPath& path, std::span<const double> times) {
  os << "t,psi1,psi2\n";
  for (double t : times) {
    const PsiState s = path.at(t);
    os << io::fmt(t) << ',' << io::fmt(s.psi1) << ',' << io::fmt(s.psi2) << '\n';
  }
}

}  // namespace hcv
