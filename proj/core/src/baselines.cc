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

#include "saute/baselines.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "saute/errors.h"
#include "saute/rng.h"

namespace saute {

namespace {

constexpr std::uint64_t kBonStream = 0xB0B0;

double AugmentedScore(const AugmentedState& aug, const TaskCostModel& task,
                      double penalty_n, double gamma) {
  if (!(aug.safety.z > 0.0)) return penalty_n;
  const TokenSequence& seq = aug.seq;
  const double c = seq.terminated ? task.Terminal(seq) : task.Partial(seq);
  return std::pow(gamma, static_cast<double>(seq.length())) * c;
}

}  // namespace

double LagrangianScore(const AugmentedState& aug, const TaskCostModel& task,
                       double lambda, double gamma) {
  const TokenSequence& seq = aug.seq;
  const double c = seq.terminated ? task.Terminal(seq) : task.Partial(seq);
  return c + lambda * DiscountedSum(aug.step_costs, gamma);
}

double SelectorScore(const Selector& selector, const AugmentedState& aug,
                     const TaskCostModel& task, double penalty_n,
                     double gamma) {
  if (const auto* lag = std::get_if<LagrangianSelector>(&selector)) {
    return LagrangianScore(aug, task, lag->lambda, gamma);
  }
  return AugmentedScore(aug, task, penalty_n, gamma);
}

void BonConfig::Validate() const {
  if (num_samples < 1) throw ConfigError("best-of-n needs at least one sample");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
}

AugmentedState SampleRollout(std::span<const TokenId> prompt,
                             const DecodeContext& ctx, double temperature,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  AugmentedState aug =
      InitAugmented(std::vector<TokenId>(prompt.begin(), prompt.end()), ctx.spec);
  auto [latent, logits] = ModelInit(ctx.model, prompt);
  while (!aug.seq.terminated) {
    const TokenId y = SampleToken(logits, temperature, rng);
    aug = AugmentedTransition(aug, y, ctx.safety, ctx.model.vocab(), ctx.spec);
    std::tie(latent, logits) = ModelStep(ctx.model, latent, y);
  }
  return aug;
}

std::size_t SelectFromPool(std::span<const AugmentedState> pool,
                           const Selector& selector, const TaskCostModel& task,
                           double penalty_n, double gamma) {
  if (pool.empty()) throw ContractViolation("empty candidate pool");
  std::size_t best = 0;
  double best_score = SelectorScore(selector, pool[0], task, penalty_n, gamma);
  for (std::size_t i = 1; i < pool.size(); ++i) {
    const double s = SelectorScore(selector, pool[i], task, penalty_n, gamma);
    if (s < best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

BonResult BestOfN(std::span<const TokenId> prompt, const BonConfig& config,
                  const Selector& selector, const DecodeContext& ctx) {
  config.Validate();
  ctx.spec.Validate();
  BonResult result;
  result.candidates.reserve(static_cast<std::size_t>(config.num_samples));
  for (int i = 0; i < config.num_samples; ++i) {
    result.candidates.push_back(SampleRollout(
        prompt, ctx, config.temperature,
        StreamSeed({config.seed, kBonStream, static_cast<std::uint64_t>(i)})));
  }
  result.index = SelectFromPool(result.candidates, selector, ctx.task,
                                config.penalty_n, ctx.spec.gamma);
  result.best = result.candidates[result.index];
  result.score = SelectorScore(selector, result.best, ctx.task,
                               config.penalty_n, ctx.spec.gamma);
  result.safe = TrajectorySatisfiesConstraint(result.best.step_costs, ctx.spec);
  return result;
}

SearchResult BeamSearchBaseline(std::span<const TokenId> prompt,
                                const SearchConfig& config,
                                const Selector& selector,
                                const DecodeContext& ctx) {
  const double n = config.penalty_n;
  const double gamma = ctx.spec.gamma;
  return RunBlockSearch(
      prompt, config, ctx,
      [&](const Beam& beam) {
        return SelectorScore(selector, beam.aug, ctx.task, n, gamma);
      },
      BlockSearchOptions{1, false});
}

void ArgsConfig::Validate() const {
  if (width < 1) throw ConfigError("args width must be >= 1");
  if (!std::isfinite(omega) || !std::isfinite(lambda)) {
    throw ConfigError("args weights must be finite");
  }
}

ArgsResult ArgsDecode(std::span<const TokenId> prompt, const ArgsConfig& config,
                      const DecodeContext& ctx) {
  config.Validate();
  ctx.spec.Validate();
  const int vocab = ctx.model.vocab().size();
  AugmentedState aug =
      InitAugmented(std::vector<TokenId>(prompt.begin(), prompt.end()), ctx.spec);
  auto [latent, logits] = ModelInit(ctx.model, prompt);
  std::vector<TokenId> order(static_cast<std::size_t>(vocab));
  while (!aug.seq.terminated) {
    const std::vector<double> probs = Softmax(logits, 1.0);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
      return probs[a] > probs[b];
    });
    const int width = std::min(config.width, vocab);
    std::sort(order.begin(), order.begin() + width);

    TokenId best = -1;
    double best_score = 0.0;
    AugmentedState best_aug;
    for (int i = 0; i < width; ++i) {
      const TokenId y = order[i];
      AugmentedState next =
          AugmentedTransition(aug, y, ctx.safety, ctx.model.vocab(), ctx.spec);
      double score = -config.omega * probs[y] +
                     config.lambda * DiscountedSum(next.step_costs, ctx.spec.gamma);
      if (next.seq.terminated) score += ctx.task.Terminal(next.seq);
      if (best < 0 || score < best_score) {
        best = y;
        best_score = score;
        best_aug = std::move(next);
      }
    }
    aug = std::move(best_aug);
    std::tie(latent, logits) = ModelStep(ctx.model, latent, best);
  }
  ArgsResult result;
  result.best = std::move(aug);
  result.safe = TrajectorySatisfiesConstraint(result.best.step_costs, ctx.spec);
  return result;
}

}  // namespace saute
