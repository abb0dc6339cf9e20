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


#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "saute/augment.h"
#include "saute/baselines.h"
#include "saute/errors.h"
#include "saute/search.h"
#include "saute/toy_models.h"

namespace saute {
namespace {

struct Toy {
  NGramModel model;
  LexiconSafetyCost safety;
  TargetTaskCost task;
  CmdpSpec spec;
  DecodeContext ctx() const { return DecodeContext{model, safety, task, spec}; }
};

// V = 5, eos = 4. Token 1 is the target but also costly; token 2 is cheap.
Toy MakeToy(std::uint64_t seed = 1, double d = 1.0, int T = 8) {
  const Vocabulary vocab(5, 4);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> table(6 * 5);
  for (double& t : table) t = g(rng);
  CmdpSpec spec;
  spec.gamma = 0.95;
  spec.budget_d = d;
  spec.max_len_T = T;
  return Toy{NGramModel(2, vocab, table), LexiconSafetyCost({0, 1.2, 0, 0.4, 0}, false),
             TargetTaskCost({1}, 5.0, 0.05, T), spec};
}

TEST(SelectorTest, LagrangianScore) {
  const Toy toy = MakeToy();
  AugmentedState aug = InitAugmented({0}, toy.spec);
  for (TokenId y : {1, 3, 4}) {
    aug = AugmentedTransition(aug, y, toy.safety, toy.model.vocab(), toy.spec);
  }
  // c_task = -5 + 0.15; safety = 1.2 + 0.95 * 0.4.
  const double want = -5.0 + 0.15 + 2.0 * (1.2 + 0.95 * 0.4);
  EXPECT_NEAR(LagrangianScore(aug, toy.task, 2.0, 0.95), want, 1e-12);
  EXPECT_NEAR(SelectorScore(LagrangianSelector{2.0}, aug, toy.task, 1e4, 0.95), want,
              1e-12);
  // Budget d = 1 is exhausted by the first token.
  EXPECT_DOUBLE_EQ(SelectorScore(AugmentedSelector{}, aug, toy.task, 1e4, 0.95), 1e4);
  EXPECT_DOUBLE_EQ(LagrangianSelector{}.lambda, 5.0);
}

TEST(SelectorTest, PoolTiesGoToLowestIndex) {
  const Toy toy = MakeToy();
  AugmentedState a = InitAugmented({0}, toy.spec);
  a = AugmentedTransition(a, 4, toy.safety, toy.model.vocab(), toy.spec);
  const std::vector<AugmentedState> pool = {a, a, a};
  EXPECT_EQ(SelectFromPool(pool, AugmentedSelector{}, toy.task, 1e4, 0.95), 0u);
}

TEST(SelectorTest, LambdaMonotoneOnFixedPool) {
  // Raising lambda never increases the chosen sample's discounted safety cost.
  const Toy toy = MakeToy(3, 1.0, 8);
  std::vector<AugmentedState> pool;
  for (std::uint64_t i = 0; i < 64; ++i) {
    pool.push_back(SampleRollout(std::vector<TokenId>{0}, toy.ctx(), 1.0, i));
  }
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {0.0, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0}) {
    const std::size_t k =
        SelectFromPool(pool, LagrangianSelector{lambda}, toy.task, 1e4, 0.95);
    const double c = DiscountedSum(pool[k].step_costs, 0.95);
    EXPECT_LE(c, prev + 1e-12) << lambda;
    prev = c;
  }
}

TEST(BestOfNTest, SingleSampleIsThatRollout) {
  const Toy toy = MakeToy();
  BonConfig cfg;
  cfg.num_samples = 1;
  cfg.seed = 12;
  const auto r = BestOfN(std::vector<TokenId>{0}, cfg, AugmentedSelector{}, toy.ctx());
  ASSERT_EQ(r.candidates.size(), 1u);
  EXPECT_EQ(r.index, 0u);
  EXPECT_EQ(r.best, r.candidates[0]);
  EXPECT_TRUE(r.best.seq.terminated);
}

TEST(BestOfNTest, AugmentedPicksSafeWhenAvailable) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Toy toy = MakeToy(seed, 1.0, 8);
    BonConfig cfg;
    cfg.num_samples = 16;
    cfg.seed = seed;
    const auto r = BestOfN(std::vector<TokenId>{0}, cfg, AugmentedSelector{}, toy.ctx());
    const bool any = std::any_of(r.candidates.begin(), r.candidates.end(),
                                 [&](const AugmentedState& a) {
                                   return TrajectorySatisfiesConstraint(a.step_costs, toy.spec);
                                 });
    EXPECT_EQ(r.safe, any) << seed;
    // Best-of-N returns the argmin of the selector over its own pool.
    for (const auto& c : r.candidates) {
      EXPECT_LE(r.score, SelectorScore(AugmentedSelector{}, c, toy.task, 1e4, 0.95));
    }
  }
}

TEST(BestOfNTest, DeterministicAndValidated) {
  const Toy toy = MakeToy();
  BonConfig cfg;
  cfg.num_samples = 8;
  const auto a = BestOfN(std::vector<TokenId>{0}, cfg, LagrangianSelector{}, toy.ctx());
  const auto b = BestOfN(std::vector<TokenId>{0}, cfg, LagrangianSelector{}, toy.ctx());
  EXPECT_EQ(a.candidates, b.candidates);
  EXPECT_EQ(a.index, b.index);
  EXPECT_EQ(BonConfig{}.num_samples, 128);
  EXPECT_DOUBLE_EQ(BonConfig{}.temperature, 1.0);
  cfg.num_samples = 0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
}

TEST(BeamBaselineTest, AugmentedEqualsSingleRoundGuard) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Toy toy = MakeToy(seed, 1.0, 10);
    SearchConfig cfg;
    cfg.num_beams = 8;
    cfg.top_k = 2;
    cfg.block_len = 3;
    cfg.max_depth = 10;
    cfg.max_retry = 1;
    cfg.seed = seed;
    const auto ig = InferenceGuard(std::vector<TokenId>{0}, cfg, toy.ctx());
    cfg.max_retry = 2;  // ignored by the baseline
    const auto beam = BeamSearchBaseline(std::vector<TokenId>{0}, cfg, AugmentedSelector{},
                                         toy.ctx());
    EXPECT_EQ(ig.best, beam.best);
    EXPECT_EQ(ig.score, beam.score);
    for (int k : beam.rounds_per_block) EXPECT_EQ(k, 1);
  }
}

TEST(BeamBaselineTest, ZeroLambdaIsTaskOnlyBeam) {
  const Toy toy = MakeToy(4, 1.0, 8);
  SearchConfig cfg;
  cfg.num_beams = 8;
  cfg.top_k = 2;
  cfg.block_len = 2;
  cfg.max_depth = 8;
  const auto lag = BeamSearchBaseline(std::vector<TokenId>{0}, cfg, LagrangianSelector{0.0},
                                      toy.ctx());
  // Task-only scorer through the shared loop.
  const auto task_only = RunBlockSearch(
      std::vector<TokenId>{0}, cfg, toy.ctx(),
      [&](const Beam& b) {
        return b.aug.seq.terminated ? toy.task.Terminal(b.aug.seq) : toy.task.Partial(b.aug.seq);
      },
      BlockSearchOptions{1, false});
  EXPECT_EQ(lag.best, task_only.best);
}

// Reference greedy decode, written independently.
std::vector<TokenId> GreedyByProbability(const Toy& toy) {
  std::vector<TokenId> out;
  TokenSequence seq = MakeSequence({0});
  LatentState h = toy.model.Init(seq.prompt);
  while (!seq.terminated) {
    const auto logits = toy.model.Logits(h);
    const TokenId y = static_cast<TokenId>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
    seq = Transition(seq, y, toy.model.vocab(), toy.spec);
    h = toy.model.Step(h, y);
    out.push_back(y);
  }
  return out;
}

TEST(ArgsTest, HugeOmegaIsGreedy) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Toy toy = MakeToy(seed);
    ArgsConfig cfg;
    cfg.omega = 1e9;
    const auto r = ArgsDecode(std::vector<TokenId>{0}, cfg, toy.ctx());
    EXPECT_EQ(r.best.seq.generated, GreedyByProbability(toy)) << seed;
  }
}

TEST(ArgsTest, NoRewardNoPenaltyPicksLowestId) {
  // omega = lambda = 0: non-eos tokens all score 0, eos scores c_task.
  const Toy toy = MakeToy(2, 1.0, 5);
  ArgsConfig cfg;
  cfg.omega = 0.0;
  cfg.lambda = 0.0;
  const auto r = ArgsDecode(std::vector<TokenId>{0}, cfg, toy.ctx());
  // Before the horizon eos costs 0.05 * len > 0, so token 0 wins the tie.
  // At the horizon every token terminates and the target (-5 + 0.25) wins.
  EXPECT_EQ(r.best.seq.generated, (std::vector<TokenId>{0, 0, 0, 0, 1}));
}

TEST(ArgsTest, WidthLimitsCandidates) {
  const Toy toy = MakeToy(5);
  ArgsConfig cfg;
  cfg.width = 1;
  cfg.lambda = 1e6;  // would avoid costly tokens if it could
  const auto r = ArgsDecode(std::vector<TokenId>{0}, cfg, toy.ctx());
  EXPECT_EQ(r.best.seq.generated, GreedyByProbability(toy));
  const ArgsConfig defaults;
  EXPECT_DOUBLE_EQ(defaults.omega, 2.5);
  EXPECT_DOUBLE_EQ(defaults.lambda, 5.0);
  EXPECT_EQ(defaults.width, 10);
  cfg.width = 0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
}

TEST(ArgsTest, LargeLambdaAvoidsCostlyTokens) {
  const Toy toy = MakeToy(6, 1.0, 6);
  ArgsConfig cfg;
  cfg.lambda = 1e3;
  const auto r = ArgsDecode(std::vector<TokenId>{0}, cfg, toy.ctx());
  EXPECT_DOUBLE_EQ(DiscountedSum(r.best.step_costs, 0.95), 0.0);
  EXPECT_TRUE(r.safe);
}

}  // namespace
}  // namespace saute
