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

// Finite augmented MDP instances: a toy model, cost models, a CMDP spec and a
// prompt, plus the seeded generator used by the oracle and search suites.

#ifndef SAUTE_INSTANCE_H_
#define SAUTE_INSTANCE_H_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "saute/augment.h"
#include "saute/mdp.h"

namespace saute {

struct FiniteAugmentedMDP {
  CmdpSpec spec;
  ReshapedCostParams params;
  std::vector<TokenId> prompt;
  std::shared_ptr<const GenerativeModel> model;
  std::shared_ptr<const SafetyCostModel> safety;
  std::shared_ptr<const TaskCostModel> task;
  std::uint64_t enumeration_cap = 1'000'000;
  std::uint64_t generator_seed = 0;

  const Vocabulary& vocab() const { return model->vocab(); }
  int horizon() const { return spec.max_len_T; }

  /// V^T, saturating at UINT64_MAX.
  std::uint64_t TrajectoryBound() const;

  /// Checks the CMDP parameters, the penalty dominance and the enumeration cap.
  void Validate() const;
};

struct InstanceSizeParams {
  int vocab_min = 3;
  int vocab_max = 6;
  int horizon_min = 2;
  int horizon_max = 8;
  int ngram_order = 2;
  /// Probability that eos itself carries a safety cost; this is what makes
  /// some generated instances infeasible.
  double eos_cost_prob = 0.3;
  double penalty_n = 1e4;
  std::uint64_t enumeration_cap = 1'000'000;
};

/// Deterministic in (seed, size). Horizon is shrunk until V^T fits the cap.
FiniteAugmentedMDP MakeInstance(std::uint64_t seed,
                                const InstanceSizeParams& size = {});

/// True iff some trajectory ends with z_T > 0. Depth-first search that
/// prunes histories whose budget is already exhausted.
bool ProbeFeasible(const FiniteAugmentedMDP& mdp);

/// Serialization for replaying failing cases. Only toy model and cost types
/// are supported; anything else throws ConfigError.
nlohmann::json InstanceToJson(const FiniteAugmentedMDP& mdp);
FiniteAugmentedMDP InstanceFromJson(const nlohmann::json& j);
std::string InstanceToString(const FiniteAugmentedMDP& mdp);

}  // namespace saute

#endif  // SAUTE_INSTANCE_H_
