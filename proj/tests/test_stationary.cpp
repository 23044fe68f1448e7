#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "hcv/stationary.hpp"
#include "support.hpp"

using namespace hcv;
using hcv::testing::baseline;

namespace {

ModelParams small_instance() { return {0.2, 0.5, 0.5, 0.3, 1.0, 1.0, 1.0}; }

double poisson_pmf(double mean, std::int64_t k) {
  return std::exp(-mean + static_cast<double>(k) * std::log(mean) - std::lgamma(static_cast<double>(k) + 1.0));
}

}  // namespace

TEST(EstimateStationary, AbsorbedChainDegenerates) {
  ModelParams p = baseline();
  p.r = p.lambda = 0.0;
  const StationaryEstimate est = estimate_stationary(p, 1, {2.0, 3.0}, 200.0, 300.0, 50, 4);
  EXPECT_EQ(est.mean_y1, 0.0);
  EXPECT_EQ(est.mean_y2, 0.0);
  EXPECT_EQ(est.prevalence, 0.0);
  EXPECT_EQ(moment_identity_residual(est.samples, p), 0.0);
}

TEST(EstimateStationary, RejectsBadWindow) {
  EXPECT_THROW((void)estimate_stationary(baseline(), 10, {0.5, 0.5}, 10.0, 5.0, 10, 1), std::invalid_argument);
  EXPECT_THROW((void)estimate_stationary(baseline(), 10, {0.5, 0.5}, 1.0, 5.0, 0, 1), std::invalid_argument);
}

TEST(EstimateStationary, PrevalenceNearEquilibriumAtN100) {
  const ModelParams p = baseline(0.5);
  const double burn = default_burn_in(p);
  const std::size_t n = 3000;
  const StationaryEstimate est =
      estimate_stationary(p, 100, {0.5, 0.5}, burn, burn + n * default_spacing(p), n, 12);
  EXPECT_NEAR(est.prevalence, prevalence(equilibrium(p)), 0.02);
  EXPECT_GE(est.prevalence, 0.0);
  EXPECT_LE(est.prevalence, 1.0);
  EXPECT_EQ(est.n_samples, n);
}

TEST(EstimateStationary, MeanApproachesLimitWithN) {
  // root-mean-square distance over independent replicas of the fast-mixing instance
  const ModelParams p = small_instance();
  const EquilibriumPoint e = equilibrium(p);
  auto rms_distance = [&](std::int64_t N, std::uint64_t seed) {
    const std::size_t replicas = 12, n = 3000;
    const double burn = default_burn_in(p);
    const auto d = parallel_map(replicas, 0, [&](std::size_t i) {
      const StationaryEstimate est =
          estimate_stationary(p, N, e.point(), burn, burn + n * default_spacing(p), n, stream_seed(seed, i));
      const double v = l1(est.mean_y1 - e.xi1, est.mean_y2 - e.xi2);
      return v * v;
    });
    return std::sqrt(stats::mean(d));
  };
  EXPECT_LT(rms_distance(1000, 2), 0.5 * rms_distance(100, 1));
}

TEST(MomentIdentity, FormulaMatchesGeneratorDefinition) {
  hcv::testing::ParamGen gen(51);
  for (int trial = 0; trial < 500; ++trial) {
    const ModelParams p = gen.params();
    const State x = gen.state(8);
    const Rates q = rates(p, x);
    double direct = 0.0;
    for (JumpType k : kAllJumps) {
      const State y = apply(x, k);
      direct += q[static_cast<std::size_t>(k)] * (std::exp(-double(y.total())) - std::exp(-double(x.total())));
    }
    EXPECT_NEAR(generator_of_exp_norm(p, x), direct, 1e-12 * (1.0 + std::abs(direct)));
  }
}

TEST(MomentIdentity, RejectsEmpty) {
  std::vector<State> none;
  EXPECT_THROW((void)moment_identity_residual(none, baseline()), std::invalid_argument);
}

TEST(MomentIdentity, ExactUnderTruncatedLaw) {
  const ModelParams p = small_instance();
  const TruncatedSolve ts = truncated_solve(p, 30);
  EXPECT_LT(std::abs(moment_identity_exact(ts, p)), 1e-10);
}

TEST(MomentIdentity, StationarySimulationSmallInstance) {
  const ModelParams p = small_instance();
  const auto samples = stationary_samples(p, {0, 0}, 10.0, 10.0 + 50000.0, 50000, 8);
  const auto est = moment_identity_estimate(samples, p);
  EXPECT_LT(std::abs(est.mean), 3.0 * est.std_error);
}

TEST(TruncatedSolve, NormalizedNonNegativeBalanced) {
  const TruncatedSolve ts = truncated_solve(small_instance(), 30);
  EXPECT_EQ(ts.prob.size(), TruncatedSolve::simplex_size(30));
  double sum = 0.0;
  for (double v : ts.prob) {
    EXPECT_GE(v, 0.0);
    sum += v;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_LT(ts.residual, 1e-10);
  EXPECT_LT(ts.mass_bound, 1e-20);
}

TEST(TruncatedSolve, EnumerationOrder) {
  EXPECT_EQ(TruncatedSolve::simplex_index(0, 0), 0u);
  EXPECT_EQ(TruncatedSolve::simplex_index(0, 1), 1u);
  EXPECT_EQ(TruncatedSolve::simplex_index(1, 0), 2u);
  EXPECT_EQ(TruncatedSolve::simplex_index(0, 2), 3u);
  EXPECT_EQ(TruncatedSolve::simplex_index(2, 0), 5u);
  const TruncatedSolve ts = truncated_solve(small_instance(), 2);
  std::ostringstream os;
  write_csv(os, ts);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "n1,n2,prob");
  std::getline(is, line);
  EXPECT_EQ(line.substr(0, 4), "0,0,");
  std::getline(is, line);
  EXPECT_EQ(line.substr(0, 4), "0,1,");
  std::getline(is, line);
  EXPECT_EQ(line.substr(0, 4), "1,0,");
}

TEST(TruncatedSolve, DiseaseFreePoissonLaw) {
  // r = 0: infection cannot start, the n2 axis is an M/M/inf queue
  ModelParams p{0.0, 4.0, 0.5, 1.0, 0.3, 2.0, 1.0};
  const TruncatedSolve ts = truncated_solve(p, 40);
  const double mean = p.lambda / p.mu2;
  double near = 0.0;
  for (std::int64_t k = 0; k <= 40; ++k) {
    EXPECT_NEAR(ts.at(0, k), poisson_pmf(mean, k), 1e-10) << k;
    if (std::abs(double(k) - mean) <= 3.0 * std::sqrt(mean)) near += ts.at(0, k);
  }
  EXPECT_GT(near, 0.95);
  EXPECT_NEAR(ts.at(1, 0), 0.0, 1e-14);
}

TEST(TruncatedSolve, RejectsBadLevel) { EXPECT_THROW((void)truncated_solve(small_instance(), 0), std::invalid_argument); }

TEST(TruncatedSolve, SimulationAgreesInTotalVariation) {
  const ModelParams p = small_instance();
  const TruncatedSolve ts = truncated_solve(p, 30);
  const auto samples = stationary_samples(p, {0, 0}, 10.0, 10.0 + 100000.0, 100000, 5);
  EXPECT_LT(total_variation(samples, ts), 0.02);
}

TEST(TotalVariation, ExactDrawIsClose) {
  const ModelParams p = small_instance();
  const TruncatedSolve ts = truncated_solve(p, 30);
  std::discrete_distribution<std::size_t> draw(ts.prob.begin(), ts.prob.end());
  std::mt19937_64 eng(3);
  std::vector<State> states;
  ts.for_each([&](const State& x, double) { states.push_back(x); });
  std::vector<State> samples;
  for (int i = 0; i < 200000; ++i) samples.push_back(states[draw(eng)]);
  EXPECT_LT(total_variation(samples, ts), 0.01);
  samples.assign(10, State{40, 0});
  EXPECT_DOUBLE_EQ(total_variation(samples, ts), 1.0);
}

TEST(TailBound, OptimizedChernoffForm) {
  const ModelParams p = baseline(0.5);
  const double zeta = tail_zeta(p);
  EXPECT_DOUBLE_EQ(zeta, 50.0);
  EXPECT_NEAR(tail_bound(p, 1, zeta * std::exp(1.0)), std::exp(-zeta), 1e-12 * std::exp(-zeta));
  EXPECT_NEAR(tail_bound(p, 3, zeta * std::exp(1.0)), std::exp(-3 * zeta), 1e-12 * std::exp(-3 * zeta));
  EXPECT_GT(tail_bound(p, 1, 60.0), tail_bound(p, 1, 70.0));
  EXPECT_GT(tail_bound(p, 1, 60.0), tail_bound(p, 2, 60.0));
  EXPECT_THROW((void)tail_bound(p, 1, zeta), std::invalid_argument);
  EXPECT_THROW((void)tail_bound(p, 1, 10.0), std::invalid_argument);
}

TEST(TailBound, NeverExceededOnSmallInstance) {
  const ModelParams p = small_instance();
  const double K = 3.0 * tail_zeta(p);
  const auto samples = stationary_samples(p, {0, 0}, 10.0, 10.0 + 20000.0, 20000, 6);
  EXPECT_LE(exceedance_frequency(samples, 1, K), tail_bound(p, 1, K));
}

TEST(ExceedanceFrequency, Counts) {
  const std::vector<State> xs = {{1, 1}, {5, 5}, {10, 0}, {0, 0}};
  EXPECT_DOUBLE_EQ(exceedance_frequency(xs, 1, 2.0), 0.5);
  EXPECT_DOUBLE_EQ(exceedance_frequency(xs, 2, 2.0), 0.5);
  EXPECT_DOUBLE_EQ(exceedance_frequency(xs, 10, 2.0), 0.0);
}

TEST(EnsemblePrevalence, Reproducible) {
  const ModelParams p = baseline(0.5);
  const auto a = ensemble_prevalence(p, 10, {5, 5}, 5.0, 50, 3, 1);
  const auto b = ensemble_prevalence(p, 10, {5, 5}, 5.0, 50, 3, 4);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std_error, b.std_error);
}
