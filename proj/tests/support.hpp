#pragma once

#include <cstdint>
#include <random>

#include "hcv/model.hpp"

namespace hcv::testing {

inline ModelParams baseline(double p = 0.5) { return {1.0, 5.0, 0.8, 1.0, p, 0.1, 0.2}; }

/// Random valid parameter sets for property tests.
class ParamGen {
 public:
  explicit ParamGen(std::uint64_t seed) : eng_(seed) {}

  ModelParams params() {
    ModelParams p;
    p.r = coin(0.15) ? 0.0 : uni(0.0, 3.0);
    p.lambda = uni(0.0, 8.0);
    p.p_I = uni(0.0, 1.0);
    p.alpha = uni(0.0, 3.0);
    p.p = uni(0.0, 1.0);
    p.mu1 = uni(0.05, 2.0);
    p.mu2 = uni(0.05, 2.0);
    return p;
  }

  State state(std::int64_t max = 60) {
    std::uniform_int_distribution<std::int64_t> d(0, max);
    return {d(eng_), d(eng_)};
  }

  double uni(double a, double b) { return std::uniform_real_distribution<double>(a, b)(eng_); }
  bool coin(double prob) { return uni(0.0, 1.0) < prob; }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace hcv::testing
