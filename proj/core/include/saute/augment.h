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

// Safety-state augmentation: the budget tracker z and the reshaped task cost
// that turn the constrained decoding problem into an unconstrained one.

#ifndef SAUTE_AUGMENT_H_
#define SAUTE_AUGMENT_H_

#include <span>
#include <vector>

#include "saute/mdp.h"

namespace saute {

/// z_t is the remaining budget scaled by gamma^-t, so that
/// z_t > 0  <=>  sum_{k<t} gamma^k c_k < d.
struct SafetyState {
  double z = 0.0;
  int step = 0;

  bool operator==(const SafetyState&) const = default;
};

struct AugmentedState {
  TokenSequence seq;
  SafetyState safety;
  /// Safety cost paid at each step; size() == safety.step.
  std::vector<double> step_costs;

  bool operator==(const AugmentedState&) const = default;
};

struct ReshapedCostParams {
  /// Finite stand-in for the +inf penalty on exhausted budgets.
  double n = 1e4;

  /// Throws ConfigError unless n > task_bound (the largest attainable
  /// |gamma^T c_task|).
  void ValidateAgainst(double task_bound) const;
};

SafetyState InitBudget(const CmdpSpec& spec);

/// z' = (z - cost) / gamma. Throws InvariantViolation on negative cost and
/// ContractViolation unless 0 < gamma < 1.
SafetyState AdvanceSafetyState(const SafetyState& s, double cost, double gamma);

AugmentedState InitAugmented(std::vector<TokenId> prompt, const CmdpSpec& spec);

AugmentedState AugmentedTransition(const AugmentedState& aug, TokenId token,
                                   const SafetyCostModel& safety_model,
                                   const Vocabulary& vocab,
                                   const CmdpSpec& spec);

/// c_task if z_T > 0, otherwise n. Requires a terminated sequence.
double ReshapedTaskCost(const AugmentedState& aug,
                        const ReshapedCostParams& params,
                        const TaskCostModel& task_model);

/// gamma^L c_task if z_L > 0, otherwise n, with L the realized length. This is
/// the per-trajectory objective minimized by the oracle and the searches.
double DiscountedReshapedCost(const AugmentedState& aug,
                              const ReshapedCostParams& params,
                              const TaskCostModel& task_model, double gamma);

/// sum_k gamma^k c_k.
double DiscountedSum(std::span<const double> costs, double gamma);

/// True iff every discounted prefix sum of costs is <= d.
bool TrajectorySatisfiesConstraint(std::span<const double> costs,
                                   const CmdpSpec& spec);

}  // namespace saute

#endif  // SAUTE_AUGMENT_H_
