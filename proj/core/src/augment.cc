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

#include "saute/augment.h"

#include <cmath>
#include <string>

#include "saute/errors.h"

namespace saute {

void ReshapedCostParams::ValidateAgainst(double task_bound) const {
  if (!(n > task_bound)) {
    throw ConfigError("penalty n = " + std::to_string(n) +
                      " does not dominate the task-cost bound " +
                      std::to_string(task_bound));
  }
}

SafetyState InitBudget(const CmdpSpec& spec) {
  return SafetyState{spec.budget_d, 0};
}

SafetyState AdvanceSafetyState(const SafetyState& s, double cost,
                               double gamma) {
  if (!(cost >= 0.0)) {
    throw InvariantViolation("safety cost must be nonnegative, got " +
                             std::to_string(cost));
  }
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw ContractViolation("advancing z requires 0 < gamma < 1");
  }
  return SafetyState{(s.z - cost) / gamma, s.step + 1};
}

AugmentedState InitAugmented(std::vector<TokenId> prompt,
                             const CmdpSpec& spec) {
  AugmentedState aug;
  aug.seq = MakeSequence(std::move(prompt));
  aug.safety = InitBudget(spec);
  return aug;
}

AugmentedState AugmentedTransition(const AugmentedState& aug, TokenId token,
                                   const SafetyCostModel& safety_model,
                                   const Vocabulary& vocab,
                                   const CmdpSpec& spec) {
  if (aug.seq.terminated) {
    throw ContractViolation("cannot extend a terminated augmented state");
  }
  const double cost = EvalSafetyCost(safety_model, aug.seq, token);
  AugmentedState next;
  next.seq = Transition(aug.seq, token, vocab, spec);
  next.safety = AdvanceSafetyState(aug.safety, cost, spec.gamma);
  next.step_costs = aug.step_costs;
  next.step_costs.push_back(cost);
  return next;
}

double ReshapedTaskCost(const AugmentedState& aug,
                        const ReshapedCostParams& params,
                        const TaskCostModel& task_model) {
  const double c = EvalTaskCost(task_model, aug.seq);
  return aug.safety.z > 0.0 ? c : params.n;
}

double DiscountedReshapedCost(const AugmentedState& aug,
                              const ReshapedCostParams& params,
                              const TaskCostModel& task_model, double gamma) {
  const double c = EvalTaskCost(task_model, aug.seq);
  if (!(aug.safety.z > 0.0)) return params.n;
  return std::pow(gamma, static_cast<double>(aug.seq.length())) * c;
}

double DiscountedSum(std::span<const double> costs, double gamma) {
  double total = 0.0;
  double discount = 1.0;
  for (double c : costs) {
    total += discount * c;
    discount *= gamma;
  }
  return total;
}

bool TrajectorySatisfiesConstraint(std::span<const double> costs,
                                   const CmdpSpec& spec) {
  double total = 0.0;
  double discount = 1.0;
  for (double c : costs) {
    total += discount * c;
    if (total > spec.budget_d) return false;
    discount *= spec.gamma;
  }
  return true;
}

}  // namespace saute
