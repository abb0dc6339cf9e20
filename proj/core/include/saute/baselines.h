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

// Comparison decoders: Best-of-N and beam search with Lagrangian or
// safety-augmented selection, and ARGS-style token-wise scoring.

#ifndef SAUTE_BASELINES_H_
#define SAUTE_BASELINES_H_

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "saute/augment.h"
#include "saute/search.h"

namespace saute {

/// c_task + lambda * sum_t gamma^t c_safe(t), with a fixed multiplier.
struct LagrangianSelector {
  double lambda = 5.0;
};

/// Reshaped score: gamma^L c_task when z > 0, otherwise the penalty n.
struct AugmentedSelector {};

using Selector = std::variant<LagrangianSelector, AugmentedSelector>;

/// Task cost (terminal if finished, otherwise the intermediate evaluation)
/// plus lambda times the discounted safety sum.
double LagrangianScore(const AugmentedState& aug, const TaskCostModel& task,
                       double lambda, double gamma);

double SelectorScore(const Selector& selector, const AugmentedState& aug,
                     const TaskCostModel& task, double penalty_n,
                     double gamma);

struct BonConfig {
  int num_samples = 128;
  double temperature = 1.0;
  double penalty_n = 1e4;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct BonResult {
  AugmentedState best;
  double score = 0.0;
  std::size_t index = 0;
  bool safe = false;
  std::vector<AugmentedState> candidates;
};

/// Full rollout from the reference policy; rollout i uses its own stream.
AugmentedState SampleRollout(std::span<const TokenId> prompt,
                             const DecodeContext& ctx, double temperature,
                             std::uint64_t seed);

/// Index of the lowest-scoring candidate; ties go to the lowest index.
std::size_t SelectFromPool(std::span<const AugmentedState> pool,
                           const Selector& selector, const TaskCostModel& task,
                           double penalty_n, double gamma);

BonResult BestOfN(std::span<const TokenId> prompt, const BonConfig& config,
                  const Selector& selector, const DecodeContext& ctx);

/// The guarded block loop with a single round, no frequency penalty and the
/// selector as scoring function.
SearchResult BeamSearchBaseline(std::span<const TokenId> prompt,
                                const SearchConfig& config,
                                const Selector& selector,
                                const DecodeContext& ctx);

struct ArgsConfig {
  double omega = 2.5;
  double lambda = 5.0;
  int width = 10;

  void Validate() const;
};

struct ArgsResult {
  AugmentedState best;
  bool safe = false;
};

/// Greedy decoding: at each step, among the `width` most probable tokens,
/// take the argmin of -omega p(y) + c_task (terminal only) + lambda times
/// the discounted safety sum of the extended prefix. Ties go to the lowest id.
ArgsResult ArgsDecode(std::span<const TokenId> prompt, const ArgsConfig& config,
                      const DecodeContext& ctx);

}  // namespace saute

#endif  // SAUTE_BASELINES_H_
