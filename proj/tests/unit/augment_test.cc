// Copyright 2026 The Saute Decoding Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "saute/augment.h"
#include "saute/errors.h"
#include "saute/toy_models.h"

namespace saute {
namespace {

const Vocabulary kVocab(4, 3);

CmdpSpec Spec(double gamma, double d, int T = 16) {
  CmdpSpec s;
  s.gamma = gamma;
  s.budget_d = d;
  s.max_len_T = T;
  return s;
}

// Independent recomputation: d - sum_{k<t} gamma^k c_k.
double Slack(const std::vector<double>& costs, std::size_t t, double gamma,
             double d) {
  double s = 0, g = 1;
  for (std::size_t k = 0; k < t; ++k) {
    s += g * costs[k];
    g *= gamma;
  }
  return d - s;
}

TEST(InitBudgetTest, StartsAtBudget) {
  EXPECT_EQ(InitBudget(Spec(0.999, 10)).z, 10.0);
  EXPECT_EQ(InitBudget(Spec(0.999, 10)).step, 0);
  EXPECT_EQ(InitBudget(Spec(0.999, 0)).z, 0.0);
}

TEST(InitBudgetTest, ZeroBudgetStaysUnsafeUnderPositiveCost) {
  SafetyState s = InitBudget(Spec(0.9, 0));
  s = AdvanceSafetyState(s, 0.1, 0.9);
  EXPECT_LE(s.z, 0.0);
}

TEST(InitBudgetTest, DefaultBudgetIsTen) {
  CmdpSpec spec;
  EXPECT_EQ(spec.budget_d, 10.0);
  EXPECT_EQ(spec.gamma, 0.999);
}

TEST(AdvanceTest, Examples) {
  SafetyState s{10.0, 0};
  SafetyState n = AdvanceSafetyState(s, 0.0, 0.999);
  EXPECT_DOUBLE_EQ(n.z, 10.0 / 0.999);
  EXPECT_EQ(n.step, 1);
  EXPECT_EQ(AdvanceSafetyState({5.0, 0}, 5.0, 0.5).z, 0.0);
  EXPECT_NEAR(AdvanceSafetyState({-1.0, 0}, 0.0, 0.9).z, -1.0 / 0.9, 1e-15);
}

TEST(AdvanceTest, Errors) {
  EXPECT_THROW(AdvanceSafetyState({1.0, 0}, -0.1, 0.9), InvariantViolation);
  EXPECT_THROW(AdvanceSafetyState({1.0, 0}, 0.1, 0.0), ContractViolation);
  EXPECT_THROW(AdvanceSafetyState({1.0, 0}, 0.1, 1.0), ContractViolation);
}

TEST(AugmentedTransitionTest, ZeroCostStreamDoublesUnderHalfDiscount) {
  LexiconSafetyCost zero({0, 0, 0, 0}, false);
  const CmdpSpec spec = Spec(0.5, 10);
  AugmentedState a = InitAugmented({}, spec);
  for (int i = 0; i < 3; ++i) a = AugmentedTransition(a, 0, zero, kVocab, spec);
  EXPECT_EQ(a.safety.z, 80.0);
  EXPECT_EQ(a.safety.step, 3);
  EXPECT_EQ(a.step_costs.size(), 3u);
}

TEST(AugmentedTransitionTest, DepletionIsAbsorbing) {
  LexiconSafetyCost lex({10, 0, 0, 0}, false);
  const CmdpSpec spec = Spec(0.9, 10);
  AugmentedState a = InitAugmented({}, spec);
  a = AugmentedTransition(a, 0, lex, kVocab, spec);
  EXPECT_EQ(a.safety.z, 0.0);
  for (int i = 0; i < 5; ++i) {
    a = AugmentedTransition(a, 1, lex, kVocab, spec);
    EXPECT_LE(a.safety.z, 0.0);
  }
}

TEST(AugmentedTransitionTest, TerminatedStateRejected) {
  LexiconSafetyCost lex({0, 0, 0, 0}, false);
  const CmdpSpec spec = Spec(0.9, 10);
  AugmentedState a = InitAugmented({}, spec);
  a = AugmentedTransition(a, kVocab.eos(), lex, kVocab, spec);
  EXPECT_THROW(AugmentedTransition(a, 0, lex, kVocab, spec), ContractViolation);
}

TEST(AugmentedTransitionTest, SignIdentityOnRandomRollouts) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> w(0.0, 2.0);
  std::uniform_real_distribution<double> g(0.5, 0.99);
  std::uniform_int_distribution<TokenId> tok(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    LexiconSafetyCost lex({w(rng), w(rng), w(rng), 0}, trial % 2 == 0);
    const CmdpSpec spec = Spec(g(rng), w(rng) * 2, 5);
    AugmentedState a = InitAugmented({1}, spec);
    for (int t = 1; t <= 5 && !a.seq.terminated; ++t) {
      a = AugmentedTransition(a, tok(rng), lex, kVocab, spec);
      const double slack = Slack(a.step_costs, a.step_costs.size(), spec.gamma,
                                 spec.budget_d);
      // z_t gamma^t equals the slack, so signs agree whenever the slack is
      // not a rounding-level zero.
      const double scaled = a.safety.z * std::pow(spec.gamma, t);
      EXPECT_NEAR(scaled, slack, 1e-9 * std::max(1.0, spec.budget_d));
      if (std::abs(slack) > 1e-9) {
        EXPECT_EQ(a.safety.z > 0, slack > 0);
      }
    }
  }
}

TEST(ReshapedCostTest, Branches) {
  TargetTaskCost task({0}, 6.15, 0.0, 16);
  const CmdpSpec spec = Spec(0.9, 10);
  AugmentedState a = InitAugmented({}, spec);
  a.seq.generated = {0, kVocab.eos()};
  a.seq.terminated = true;
  const ReshapedCostParams params;
  EXPECT_EQ(params.n, 1e4);
  a.safety.z = 2.0;
  EXPECT_DOUBLE_EQ(ReshapedTaskCost(a, params, task), -6.15);
  a.safety.z = -0.3;
  EXPECT_EQ(ReshapedTaskCost(a, params, task), 1e4);
  a.safety.z = 0.0;
  EXPECT_EQ(ReshapedTaskCost(a, params, task), 1e4);
  a.safety.z = 2.0;
  EXPECT_DOUBLE_EQ(DiscountedReshapedCost(a, params, task, 0.9), 0.81 * -6.15);
}

TEST(ReshapedCostTest, RequiresTerminated) {
  TargetTaskCost task({0}, 1.0, 0.0, 16);
  AugmentedState a = InitAugmented({}, Spec(0.9, 10));
  EXPECT_THROW(ReshapedTaskCost(a, {}, task), ContractViolation);
}

TEST(ReshapedCostTest, PenaltyMustDominateTaskBound) {
  EXPECT_THROW(ReshapedCostParams{5.0}.ValidateAgainst(10.0), ConfigError);
  EXPECT_NO_THROW(ReshapedCostParams{1e4}.ValidateAgainst(10.0));
}

TEST(ConstraintTest, Examples) {
  EXPECT_TRUE(TrajectorySatisfiesConstraint(std::vector<double>{0, 0, 0},
                                            Spec(0.999, 10)));
  EXPECT_FALSE(TrajectorySatisfiesConstraint(std::vector<double>{11},
                                             Spec(0.999, 10)));
  // Equality is safe for the metric convention.
  EXPECT_TRUE(TrajectorySatisfiesConstraint(std::vector<double>{10},
                                            Spec(0.999, 10)));
}

TEST(ConstraintTest, AgreesWithTrackerOnRandomCosts) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> c(0.0, 3.0);
  std::uniform_int_distribution<int> len(0, 8);
  for (int trial = 0; trial < 100; ++trial) {
    const CmdpSpec spec = Spec(0.8, 5.0);
    std::vector<double> costs(static_cast<std::size_t>(len(rng)));
    for (double& x : costs) x = c(rng);
    if (trial % 10 == 0 && !costs.empty()) {
      // Hit the budget exactly on the final step.
      const double before = spec.budget_d - Slack(costs, costs.size() - 1,
                                                  spec.gamma, spec.budget_d);
      costs.back() = (spec.budget_d - before) /
                     std::pow(spec.gamma, costs.size() - 1.0);
      if (costs.back() < 0) costs.back() = 0;
    }
    SafetyState s = InitBudget(spec);
    for (double x : costs) s = AdvanceSafetyState(s, x, spec.gamma);
    const double total = spec.budget_d - Slack(costs, costs.size(), spec.gamma,
                                               spec.budget_d);
    const bool by_sum = total <= spec.budget_d;
    EXPECT_EQ(TrajectorySatisfiesConstraint(costs, spec), by_sum);
    if (std::abs(total - spec.budget_d) > 1e-9) {
      EXPECT_EQ(s.z > 0, by_sum);
    }
  }
}

TEST(DiscountedSumTest, Direct) {
  EXPECT_DOUBLE_EQ(DiscountedSum(std::vector<double>{1, 2, 4}, 0.5),
                   1 + 0.5 * 2 + 0.25 * 4);
  EXPECT_EQ(DiscountedSum(std::vector<double>{}, 0.5), 0.0);
}

}  // namespace
}  // namespace saute
