#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hcv/odesys.hpp"
#include "support.hpp"

using namespace hcv;
using hcv::testing::baseline;

namespace {

double norm1(const std::array<double, 2>& v) { return std::abs(v[0]) + std::abs(v[1]); }

}  // namespace

TEST(Rhs, HandEvaluation) {
  const auto f = rhs(baseline(0.5), {1.0, 1.0});
  EXPECT_NEAR(f[0], 3.15, 1e-14);
  EXPECT_NEAR(f[1], 2.55, 1e-14);
}

TEST(Rhs, DiseaseFreePointIsFixedWhenNoExogenousInfection) {
  ModelParams p = baseline(0.7);
  p.r = 0.0;
  const auto f = rhs(p, {0.0, p.lambda / p.mu2});
  EXPECT_EQ(f[0], 0.0);
  EXPECT_NEAR(f[1], 0.0, 1e-14);
}

TEST(Rhs, RejectsOrigin) { EXPECT_THROW((void)rhs(baseline(), {0.0, 0.0}), std::invalid_argument); }

TEST(RhsProperty, TotalPopulationEquation) {
  hcv::testing::ParamGen gen(31);
  for (int trial = 0; trial < 2000; ++trial) {
    const ModelParams p = gen.params();
    const PsiState s{gen.uni(0.0, 100.0), gen.uni(1e-3, 100.0)};
    const auto f = rhs(p, s);
    const double want = p.r + p.lambda - p.mu1 * s.psi1 - p.mu2 * s.psi2;
    EXPECT_NEAR(f[0] + f[1], want, 1e-12 * (1.0 + std::abs(want) + p.mu1 * s.psi1 + p.mu2 * s.psi2 + p.lambda));
  }
}

TEST(Integrate, EqualExitRatesClosedForm) {
  ModelParams p = baseline(0.5);
  p.mu1 = p.mu2 = 0.3;
  const PsiState x0{2.0, 7.0};
  const double T = 40.0;
  const PsiPath path = integrate(p, x0, T, 1e-10);
  for (int k = 0; k <= 100; ++k) {
    const double t = T * k / 100.0;
    const PsiState y = path.at(t);
    const double e = std::exp(-p.mu1 * t);
    const double want = x0.total() * e + (p.r + p.lambda) / p.mu1 * (1.0 - e);
    EXPECT_NEAR(y.total(), want, 1e-8) << t;
  }
}

TEST(Integrate, InvariantAxisIsExact) {
  ModelParams p = baseline(0.9);
  p.r = 0.0;
  const PsiPath path = integrate(p, {0.0, 1.0}, 300.0);
  for (int k = 0; k <= 300; ++k) EXPECT_EQ(path.at(k).psi1, 0.0);
  EXPECT_NEAR(path.at(300.0).psi2, p.lambda / p.mu2, 1e-6);
}

TEST(Integrate, ConvergesToEquilibrium) {
  const ModelParams p = baseline(0.5);
  const PsiPath path = integrate(p, {1.0, 1.0}, 200.0);
  const EquilibriumPoint e = equilibrium(p);
  // slowest eigenvalue is about -0.0995, so at T = 200 the transient is ~1e-8
  const PsiState y = path.at(200.0);
  EXPECT_LT(std::abs(y.psi1 - e.xi1) + std::abs(y.psi2 - e.xi2), 1e-6);
}

TEST(Integrate, DenseOutputSatisfiesTotalEquation) {
  const ModelParams p = baseline(0.3);
  const PsiPath path = integrate(p, {5.0, 20.0}, 50.0, 1e-10);
  const double h = 1e-4;
  for (double t = 1.0; t < 49.0; t += 2.3) {
    const double deriv = (path.at(t + h).total() - path.at(t - h).total()) / (2 * h);
    const PsiState y = path.at(t);
    EXPECT_NEAR(deriv, p.r + p.lambda - p.mu1 * y.psi1 - p.mu2 * y.psi2, 1e-5) << t;
  }
}

TEST(Integrate, StaysNonNegativeAndRejectsBadInput) {
  hcv::testing::ParamGen gen(32);
  for (int trial = 0; trial < 50; ++trial) {
    const ModelParams p = gen.params();
    const PsiState x0{gen.uni(0.0, 50.0), gen.uni(0.01, 50.0)};
    const PsiPath path = integrate(p, x0, 30.0);
    for (int k = 0; k <= 60; ++k) {
      const PsiState y = path.at(0.5 * k);
      EXPECT_GE(y.psi1, 0.0);
      EXPECT_GE(y.psi2, 0.0);
    }
    EXPECT_THROW((void)path.at(30.5), std::invalid_argument);
  }
  EXPECT_THROW((void)integrate(baseline(), {0, 0}, 1.0), std::invalid_argument);
  EXPECT_THROW((void)integrate(baseline(), {1, 1}, -1.0), std::invalid_argument);
  EXPECT_THROW((void)integrate(baseline(), {1, 1}, 1.0, 0.0), std::invalid_argument);
}

TEST(Equilibrium, BaselineValues) {
  const EquilibriumPoint e = equilibrium(baseline(0.5));
  EXPECT_EQ(e.branch, EquilibriumBranch::Interior);
  EXPECT_NEAR(e.a, 0.6, 1e-15);
  EXPECT_NEAR(e.b, 6.0, 1e-15);
  EXPECT_NEAR(e.c, 0.3, 1e-15);
  EXPECT_NEAR(e.xi1, (3.3 + std::sqrt(12.33)) / 0.12, 1e-11);
  EXPECT_NEAR(e.xi1, 56.76174977679907, 1e-10);
  EXPECT_NEAR(e.xi2, 1.6191251116004635, 1e-11);
  EXPECT_NEAR(prevalence(e), 0.9722661725317483, 1e-12);
  EXPECT_NEAR(0.1 * e.xi1 + 0.2 * e.xi2, 6.0, 1e-12);
  // the long-run ODE lands on the same point
  const PsiState y = integrate(baseline(0.5), {1.0, 1.0}, 500.0).at(500.0);
  EXPECT_NEAR(y.psi1, e.xi1, 1e-6);
  EXPECT_NEAR(y.psi2, e.xi2, 1e-6);
}

TEST(Equilibrium, NegativeQuadraticLeadingCoefficient) {
  // a = alpha p - mu1 + mu2 < 0: the admissible root is the one in [0, b / mu1]
  ModelParams p = baseline(0.3);
  p.mu1 = 2.0;
  const EquilibriumPoint e = equilibrium(p);
  EXPECT_LT(e.a, 0.0);
  EXPECT_NEAR(e.xi1, 0.6483, 1e-4);
  EXPECT_NEAR(e.xi2, 23.517, 1e-3);
  EXPECT_LT(norm1(rhs(p, e.point())), 1e-10 * (p.r + p.lambda + 1));
}

TEST(Equilibrium, DegenerateLinearCase) {
  ModelParams p = baseline(0.5);
  p.mu1 = 0.7;  // a = 0.5 - 0.7 + 0.2 = 0
  const EquilibriumPoint e = equilibrium(p);
  EXPECT_NEAR(e.a, 0.0, 1e-15);
  EXPECT_NEAR(e.xi1, e.b * p.r / e.c, 1e-9);
  EXPECT_LT(norm1(rhs(p, e.point())), 1e-10 * (p.r + p.lambda + 1));
}

TEST(Equilibrium, NoExogenousInfectionBranches) {
  ModelParams p = baseline(0.5);
  p.r = 0.0;
  const EquilibriumPoint endemic = equilibrium(p);
  EXPECT_EQ(endemic.branch, EquilibriumBranch::R0Endemic);
  EXPECT_GT(endemic.rho, 0.0);
  EXPECT_NEAR(endemic.xi1, p.lambda * endemic.rho / (endemic.a * p.mu1), 1e-12);
  EXPECT_LT(norm1(rhs(p, endemic.point())), 1e-10 * (p.lambda + 1));

  p.mu1 = 5.0;  // rho = 0.5 + 0.16 - 5 < 0
  const EquilibriumPoint free = equilibrium(p);
  EXPECT_EQ(free.branch, EquilibriumBranch::R0DiseaseFree);
  EXPECT_EQ(free.xi1, 0.0);
  EXPECT_DOUBLE_EQ(free.xi2, p.lambda / p.mu2);
  EXPECT_EQ(prevalence(free), 0.0);
}

TEST(Equilibrium, LimitPointOnAxis) {
  ModelParams p = baseline(0.5);
  p.r = 0.0;
  const EquilibriumPoint off = limit_point(p, {1.0, 1.0});
  const EquilibriumPoint on = limit_point(p, {0.0, 1.0});
  EXPECT_EQ(off.branch, EquilibriumBranch::R0Endemic);
  EXPECT_EQ(on.branch, EquilibriumBranch::R0DiseaseFree);
  const PsiState y = integrate(p, {0.0, 1.0}, 400.0).at(400.0);
  EXPECT_EQ(y.psi1, 0.0);
  EXPECT_NEAR(y.psi2, on.xi2, 1e-6);
}

TEST(EquilibriumProperty, ResidualAndConsistencyOverRandomParams) {
  hcv::testing::ParamGen gen(33);
  for (int trial = 0; trial < 5000; ++trial) {
    const ModelParams p = gen.params();
    if (p.r + p.lambda == 0.0) continue;
    const EquilibriumPoint e = equilibrium(p);
    EXPECT_GE(e.xi1, 0.0);
    EXPECT_GE(e.xi2, 0.0);
    if (e.xi1 + e.xi2 > 0.0) {
      EXPECT_LT(norm1(rhs(p, e.point())), 1e-10 * (p.r + p.lambda + 1)) << trial;
      const double prev = prevalence(e);
      EXPECT_GE(prev, 0.0);
      EXPECT_LE(prev, 1.0);
    }
    if (e.branch == EquilibriumBranch::Interior) {
      EXPECT_NEAR(p.mu1 * e.xi1 + p.mu2 * e.xi2, p.r + p.lambda, 1e-10 * (p.r + p.lambda + 1));
    }
  }
}

TEST(Prevalence, ScaleInvariantAndRejectsEmpty) {
  EquilibriumPoint e;
  e.xi1 = 3.0;
  e.xi2 = 1.0;
  EquilibriumPoint f = e;
  f.xi1 *= 7.5;
  f.xi2 *= 7.5;
  EXPECT_DOUBLE_EQ(prevalence(e), prevalence(f));
  EXPECT_THROW((void)prevalence(EquilibriumPoint{}), std::invalid_argument);
}

TEST(Csv, PathExport) {
  const PsiPath path = integrate(baseline(), {1.0, 1.0}, 1.0);
  const double ts[] = {0.0};
  std::ostringstream os;
  write_csv(os, path, ts);
  EXPECT_EQ(os.str(), "t,psi1,psi2\n0,1,1\n");
}

TEST(BranchNames, Strings) {
  EXPECT_EQ(to_string(EquilibriumBranch::Interior), "interior");
  EXPECT_EQ(to_string(EquilibriumBranch::R0Endemic), "r0_endemic");
  EXPECT_EQ(to_string(EquilibriumBranch::R0DiseaseFree), "r0_disease_free");
}
