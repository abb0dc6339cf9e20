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

#include "saute/instance.h"

#include <algorithm>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "saute/errors.h"
#include "saute/toy_models.h"

namespace saute {

using nlohmann::json;

std::uint64_t FiniteAugmentedMDP::TrajectoryBound() const {
  const std::uint64_t v = static_cast<std::uint64_t>(vocab().size());
  std::uint64_t total = 1;
  for (int t = 0; t < spec.max_len_T; ++t) {
    if (total > std::numeric_limits<std::uint64_t>::max() / v) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    total *= v;
  }
  return total;
}

void FiniteAugmentedMDP::Validate() const {
  if (!model || !safety || !task) {
    throw ConfigError("instance is missing a model");
  }
  spec.Validate();
  params.ValidateAgainst(task->Bound());
  if (TrajectoryBound() > enumeration_cap) {
    throw SizeError("V^T = " + std::to_string(TrajectoryBound()) +
                    " exceeds the enumeration cap " +
                    std::to_string(enumeration_cap));
  }
}

FiniteAugmentedMDP MakeInstance(std::uint64_t seed,
                                const InstanceSizeParams& size) {
  std::mt19937_64 rng(seed);
  auto uniform_int = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto coin = [&](double p) { return uniform(0.0, 1.0) < p; };

  const int v = uniform_int(size.vocab_min, size.vocab_max);
  const Vocabulary vocab(v, v - 1);
  int horizon = uniform_int(size.horizon_min, size.horizon_max);

  FiniteAugmentedMDP mdp;
  mdp.generator_seed = seed;
  mdp.enumeration_cap = size.enumeration_cap;
  mdp.spec.gamma = uniform(0.5, 0.99);
  mdp.spec.budget_d = uniform(1.0, 8.0);
  mdp.spec.max_len_T = horizon;
  while (mdp.spec.max_len_T > 1) {
    std::uint64_t count = 1;
    for (int t = 0; t < mdp.spec.max_len_T; ++t) count *= v;
    if (count <= size.enumeration_cap) break;
    --mdp.spec.max_len_T;
  }
  horizon = mdp.spec.max_len_T;
  mdp.params.n = size.penalty_n;

  const std::size_t contexts = [&] {
    std::size_t c = 1;
    for (int i = 0; i < size.ngram_order - 1; ++i) c *= v + 1;
    return c;
  }();
  std::normal_distribution<double> normal(0.0, 1.5);
  std::vector<double> table(contexts * v);
  for (double& x : table) x = normal(rng);
  mdp.model = std::make_shared<NGramModel>(size.ngram_order, vocab,
                                           std::move(table));

  std::vector<double> weights(v, 0.0);
  for (int t = 0; t < v - 1; ++t) {
    if (coin(0.5)) weights[t] = uniform(0.5, 4.0);
  }
  if (coin(size.eos_cost_prob)) weights[v - 1] = uniform(0.5, 10.0);
  const bool multiplier = coin(0.5);
  mdp.safety = std::make_shared<LexiconSafetyCost>(std::move(weights),
                                                   multiplier);

  std::vector<TokenId> targets;
  const int num_targets = uniform_int(1, 2);
  for (int i = 0; i < num_targets; ++i) targets.push_back(uniform_int(0, v - 2));
  mdp.task = std::make_shared<TargetTaskCost>(
      std::move(targets), uniform(1.0, 10.0), uniform(0.0, 0.5), horizon);

  const int prompt_len = uniform_int(0, 2);
  for (int i = 0; i < prompt_len; ++i) mdp.prompt.push_back(uniform_int(0, v - 2));
  return mdp;
}

namespace {

bool FeasibleFrom(const FiniteAugmentedMDP& mdp, const AugmentedState& aug) {
  if (!(aug.safety.z > 0.0)) return false;
  if (aug.seq.terminated) return true;
  for (TokenId y = 0; y < mdp.vocab().size(); ++y) {
    if (FeasibleFrom(mdp, AugmentedTransition(aug, y, *mdp.safety, mdp.vocab(),
                                              mdp.spec))) {
      return true;
    }
  }
  return false;
}

}  // namespace

bool ProbeFeasible(const FiniteAugmentedMDP& mdp) {
  return FeasibleFrom(mdp, InitAugmented(mdp.prompt, mdp.spec));
}

json InstanceToJson(const FiniteAugmentedMDP& mdp) {
  json j;
  j["version"] = 1;
  j["generator_seed"] = mdp.generator_seed;
  j["enumeration_cap"] = mdp.enumeration_cap;
  j["spec"] = {{"gamma", mdp.spec.gamma},
               {"budget_d", mdp.spec.budget_d},
               {"max_len_T", mdp.spec.max_len_T}};
  j["penalty_n"] = mdp.params.n;
  j["prompt"] = mdp.prompt;
  if (auto ng = std::dynamic_pointer_cast<const NGramModel>(mdp.model)) {
    j["model"] = ng->ToJson();
  } else if (auto rnn = std::dynamic_pointer_cast<const TinyRecurrentModel>(
                 mdp.model)) {
    j["model"] = rnn->ToJson();
  } else {
    throw ConfigError("only toy generative models can be serialized");
  }
  auto lex = std::dynamic_pointer_cast<const LexiconSafetyCost>(mdp.safety);
  auto target = std::dynamic_pointer_cast<const TargetTaskCost>(mdp.task);
  if (!lex || !target) {
    throw ConfigError("only toy cost models can be serialized");
  }
  j["safety"] = lex->ToJson();
  j["task"] = target->ToJson();
  return j;
}

FiniteAugmentedMDP InstanceFromJson(const json& j) {
  if (j.at("version").get<int>() != 1) {
    throw ConfigError("unsupported instance version");
  }
  FiniteAugmentedMDP mdp;
  mdp.generator_seed = j.at("generator_seed").get<std::uint64_t>();
  mdp.enumeration_cap = j.at("enumeration_cap").get<std::uint64_t>();
  const json& spec = j.at("spec");
  mdp.spec.gamma = spec.at("gamma").get<double>();
  mdp.spec.budget_d = spec.at("budget_d").get<double>();
  mdp.spec.max_len_T = spec.at("max_len_T").get<int>();
  mdp.params.n = j.at("penalty_n").get<double>();
  mdp.prompt = j.at("prompt").get<std::vector<TokenId>>();
  const json& model = j.at("model");
  const std::string kind = model.at("kind").get<std::string>();
  if (kind == "ngram") {
    mdp.model = std::make_shared<NGramModel>(NGramModel::FromJson(model));
  } else if (kind == "recurrent") {
    mdp.model = std::make_shared<TinyRecurrentModel>(
        TinyRecurrentModel::FromJson(model));
  } else {
    throw ConfigError("unknown model kind '" + kind + "'");
  }
  mdp.safety = std::make_shared<LexiconSafetyCost>(
      LexiconSafetyCost::FromJson(j.at("safety")));
  mdp.task = std::make_shared<TargetTaskCost>(
      TargetTaskCost::FromJson(j.at("task")));
  return mdp;
}

std::string InstanceToString(const FiniteAugmentedMDP& mdp) {
  return InstanceToJson(mdp).dump(2);
}

}  // namespace saute
