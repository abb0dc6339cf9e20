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

// Exact solver for small finite augmented MDPs.
//
// Token transitions are deterministic, so the augmented MDP is a prefix tree
// over generated tokens; the safety tracker z is a function of the prefix.
// Values use the discounted Bellman form
//
//   V(s) = min_y [ C(s, y) + gamma * V(s + y) ],   V(terminal) = 0,
//
// with the stage cost paid on arrival at a terminal child:
//
//   C(s, y) = gamma * c_task(s + y)      if z(s + y) > 0
//           = n / gamma^depth(s)          if z(s + y) <= 0
//           = 0                           if s + y is not terminal.
//
// The gamma^-depth scaling mirrors the scaling of z itself, so the value of a
// trajectory seen from the root is gamma^L c_task when safe and exactly n when
// its budget is exhausted.

#ifndef SAUTE_ORACLE_H_
#define SAUTE_ORACLE_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saute/augment.h"
#include "saute/instance.h"
#include "saute/mdp.h"

namespace saute {

/// Stochastic policy over the vocabulary, evaluated at a history node.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::vector<double> Distribution(
      const AugmentedState& aug, std::span<const double> logits) const = 0;
};

/// SoftMax(logits / temperature) of the generative model.
class ReferencePolicy final : public Policy {
 public:
  explicit ReferencePolicy(double temperature = 1.0)
      : temperature_(temperature) {}
  std::vector<double> Distribution(
      const AugmentedState& aug, std::span<const double> logits) const override;

 private:
  double temperature_;
};

class UniformPolicy final : public Policy {
 public:
  std::vector<double> Distribution(
      const AugmentedState& aug, std::span<const double> logits) const override;
};

struct TrajectoryRecord {
  std::vector<TokenId> tokens;
  double probability = 0.0;
  double discounted_task_cost = 0.0;    // gamma^L c_task
  double discounted_safety_cost = 0.0;  // sum_k gamma^k c_k
  double reshaped_cost = 0.0;           // gamma^L c_task if z_L > 0, else n
  double final_z = 0.0;
  bool safe = false;                    // every prefix sum <= d
};

/// Every positive-probability trajectory under `policy`, with exact
/// probabilities. Throws SizeError when V^T exceeds the instance cap.
std::vector<TrajectoryRecord> EnumerateTrajectories(
    const FiniteAugmentedMDP& mdp, const Policy& policy);

struct ValueNode {
  std::int64_t parent = -1;
  TokenId token = -1;
  int depth = 0;
  double z = 0.0;
  bool terminal = false;
  /// Children occupy [first_child, first_child + V), indexed by token.
  std::int64_t first_child = -1;
  /// Stage cost paid on the edge from the parent into this node.
  double arrival_cost = 0.0;
  double value = 0.0;
};

class ValueTable {
 public:
  ValueTable(std::vector<ValueNode> nodes, int vocab_size, double gamma);

  double root_value() const { return nodes_.front().value; }
  const std::vector<ValueNode>& nodes() const { return nodes_; }
  std::vector<ValueNode>& mutable_nodes() { return nodes_; }
  int vocab_size() const { return vocab_size_; }
  double gamma() const { return gamma_; }

  /// Node index of a generated-token prefix, if it is in the tree.
  std::optional<std::size_t> Find(std::span<const TokenId> prefix) const;
  std::vector<TokenId> Prefix(std::size_t index) const;
  std::optional<double> Value(std::span<const TokenId> prefix) const;

  /// Q(s, y) = C(s, y) + gamma V(s + y) for every token at a nonterminal node.
  std::vector<double> QValues(std::size_t index) const;

  /// max over nonterminal nodes of |V(s) - min_y Q(s, y)|.
  double BellmanResidual() const;

  double bellman_residual = 0.0;
  int sweeps = 0;

 private:
  std::vector<ValueNode> nodes_;
  int vocab_size_;
  double gamma_;
};

/// Builds the full history tree and runs synchronous value-iteration sweeps
/// from V = 0 until the largest update is <= tol.
ValueTable SolveValueIteration(const FiniteAugmentedMDP& mdp,
                               double tol = 1e-9);

enum class TieMode {
  /// Lowest token id among the minimizers.
  kLowestId,
  /// Uniform over all minimizers.
  kUniformOverTies,
};

/// Greedy policy w.r.t. a solved value table.
class GreedyPolicy final : public Policy {
 public:
  GreedyPolicy(std::shared_ptr<const ValueTable> table, TieMode mode);

  std::vector<double> Distribution(
      const AugmentedState& aug, std::span<const double> logits) const override;

  /// Minimizing tokens at a node, ascending.
  std::vector<TokenId> Minimizers(std::size_t index) const;
  TokenId Action(std::span<const TokenId> prefix) const;

 private:
  std::shared_ptr<const ValueTable> table_;
  TieMode mode_;
};

/// Relative tolerance used to decide that two Q values tie.
inline constexpr double kTieTolerance = 1e-12;

std::vector<TokenId> ArgminWithTies(std::span<const double> q);

std::shared_ptr<GreedyPolicy> OptimalPolicy(
    std::shared_ptr<const ValueTable> values,
    TieMode mode = TieMode::kLowestId);

/// Value of `policy` from the root: expected reshaped discounted cost.
double PolicyValue(const FiniteAugmentedMDP& mdp, const Policy& policy);

struct MonotoneReport {
  bool ok = true;
  /// root_values[i][k] = V*_{n_k}(root) on instance i.
  std::vector<std::vector<double>> root_values;
  std::string failure;
  std::string offending_instance;
};

/// Checks that V*_n(root) is nondecreasing along n_sequence and constant once
/// n exceeds the task-cost bound on instances that admit a safe trajectory.
MonotoneReport VerifyMonotoneConvergence(
    const std::vector<FiniteAugmentedMDP>& family,
    const std::vector<double>& n_sequence);

struct SafetyVerdict {
  bool all_safe = false;
  double value = 0.0;
  /// value < n  =>  all_safe.
  bool implication_holds = false;
  std::size_t num_trajectories = 0;
};

SafetyVerdict VerifyAlmostSureSafety(const FiniteAugmentedMDP& mdp,
                                     const Policy& policy);

/// Embedding of a token history into latent coordinates.
using LatentMap = std::function<LatentState(const TokenSequence&)>;

/// phi(seq) = model replay of the whole sequence.
LatentMap ReplayMap(std::shared_ptr<const GenerativeModel> model);

struct LatentEquivalenceReport {
  bool ok = false;
  std::size_t histories = 0;
  std::size_t latent_states = 0;
  std::string counterexample;
};

/// Checks that costs and transitions are well defined as functions of
/// (h, o, z, step) and that the greedy policy computed over latent
/// coordinates matches the token-space greedy policy at every node.
LatentEquivalenceReport VerifyLatentEquivalence(const FiniteAugmentedMDP& mdp,
                                                const LatentMap& phi);

}  // namespace saute

#endif  // SAUTE_ORACLE_H_
