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

#include "saute/oracle.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "saute/errors.h"

namespace saute {

std::vector<double> ReferencePolicy::Distribution(
    const AugmentedState& /*aug*/, std::span<const double> logits) const {
  return Softmax(logits, temperature_);
}

std::vector<double> UniformPolicy::Distribution(
    const AugmentedState& /*aug*/, std::span<const double> logits) const {
  return std::vector<double>(logits.size(), 1.0 / logits.size());
}

namespace {

std::string FormatTokens(std::span<const TokenId> tokens) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out << ",";
    out << tokens[i];
  }
  out << "]";
  return out.str();
}

void CheckEnumerable(const FiniteAugmentedMDP& mdp) {
  mdp.spec.Validate();
  if (mdp.TrajectoryBound() > mdp.enumeration_cap) {
    throw SizeError("V^T = " + std::to_string(mdp.TrajectoryBound()) +
                    " exceeds the enumeration cap " +
                    std::to_string(mdp.enumeration_cap));
  }
}

/// Stage cost on the edge parent -> child, see the header comment.
double ArrivalCost(const FiniteAugmentedMDP& mdp, const AugmentedState& child,
                   int parent_depth) {
  if (!child.seq.terminated) return 0.0;
  if (child.safety.z > 0.0) {
    return mdp.spec.gamma * EvalTaskCost(*mdp.task, child.seq);
  }
  return mdp.params.n / std::pow(mdp.spec.gamma, parent_depth);
}

struct Enumerator {
  const FiniteAugmentedMDP& mdp;
  const Policy& policy;
  std::vector<TrajectoryRecord> out;

  void Visit(const AugmentedState& aug, const std::vector<double>& logits,
             const LatentState& latent, double prob) {
    if (aug.seq.terminated) {
      TrajectoryRecord rec;
      rec.tokens = aug.seq.generated;
      rec.probability = prob;
      rec.discounted_task_cost =
          std::pow(mdp.spec.gamma, static_cast<double>(aug.seq.length())) *
          EvalTaskCost(*mdp.task, aug.seq);
      rec.discounted_safety_cost = DiscountedSum(aug.step_costs, mdp.spec.gamma);
      rec.reshaped_cost = DiscountedReshapedCost(aug, mdp.params, *mdp.task,
                                                 mdp.spec.gamma);
      rec.final_z = aug.safety.z;
      rec.safe = TrajectorySatisfiesConstraint(aug.step_costs, mdp.spec);
      out.push_back(std::move(rec));
      return;
    }
    const std::vector<double> dist = policy.Distribution(aug, logits);
    if (static_cast<int>(dist.size()) != mdp.vocab().size()) {
      throw ContractViolation("policy distribution has the wrong size");
    }
    for (TokenId y = 0; y < mdp.vocab().size(); ++y) {
      const double p = dist[static_cast<std::size_t>(y)];
      if (!(p > 0.0)) continue;
      AugmentedState child =
          AugmentedTransition(aug, y, *mdp.safety, mdp.vocab(), mdp.spec);
      if (child.seq.terminated) {
        Visit(child, {}, latent, prob * p);
      } else {
        auto [next_latent, next_logits] = ModelStep(*mdp.model, latent, y);
        Visit(child, next_logits, next_latent, prob * p);
      }
    }
  }
};

struct TreeBuilder {
  const FiniteAugmentedMDP& mdp;
  std::vector<ValueNode> nodes;

  void Expand(std::size_t index, const AugmentedState& aug) {
    const int v = mdp.vocab().size();
    const std::int64_t first = static_cast<std::int64_t>(nodes.size());
    nodes[index].first_child = first;
    const int depth = nodes[index].depth;
    std::vector<AugmentedState> children;
    children.reserve(static_cast<std::size_t>(v));
    for (TokenId y = 0; y < v; ++y) {
      AugmentedState child =
          AugmentedTransition(aug, y, *mdp.safety, mdp.vocab(), mdp.spec);
      ValueNode node;
      node.parent = static_cast<std::int64_t>(index);
      node.token = y;
      node.depth = depth + 1;
      node.z = child.safety.z;
      node.terminal = child.seq.terminated;
      node.arrival_cost = ArrivalCost(mdp, child, depth);
      nodes.push_back(node);
      children.push_back(std::move(child));
    }
    for (TokenId y = 0; y < v; ++y) {
      const std::size_t ci = static_cast<std::size_t>(first + y);
      if (!nodes[ci].terminal) Expand(ci, children[static_cast<std::size_t>(y)]);
    }
  }
};

}  // namespace

std::vector<TrajectoryRecord> EnumerateTrajectories(
    const FiniteAugmentedMDP& mdp, const Policy& policy) {
  CheckEnumerable(mdp);
  Enumerator e{mdp, policy, {}};
  AugmentedState root = InitAugmented(mdp.prompt, mdp.spec);
  auto [latent, logits] = ModelInit(*mdp.model, mdp.prompt);
  e.Visit(root, logits, latent, 1.0);
  return std::move(e.out);
}

// ---------------------------------------------------------------------------
// ValueTable

ValueTable::ValueTable(std::vector<ValueNode> nodes, int vocab_size,
                       double gamma)
    : nodes_(std::move(nodes)), vocab_size_(vocab_size), gamma_(gamma) {}

std::optional<std::size_t> ValueTable::Find(
    std::span<const TokenId> prefix) const {
  std::size_t index = 0;
  for (TokenId t : prefix) {
    const ValueNode& node = nodes_[index];
    if (node.terminal || t < 0 || t >= vocab_size_) return std::nullopt;
    index = static_cast<std::size_t>(node.first_child + t);
  }
  return index;
}

std::vector<TokenId> ValueTable::Prefix(std::size_t index) const {
  std::vector<TokenId> out;
  while (nodes_[index].parent >= 0) {
    out.push_back(nodes_[index].token);
    index = static_cast<std::size_t>(nodes_[index].parent);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::optional<double> ValueTable::Value(std::span<const TokenId> prefix) const {
  auto index = Find(prefix);
  if (!index) return std::nullopt;
  return nodes_[*index].value;
}

std::vector<double> ValueTable::QValues(std::size_t index) const {
  const ValueNode& node = nodes_[index];
  if (node.terminal) {
    throw ContractViolation("terminal nodes have no actions");
  }
  std::vector<double> q(static_cast<std::size_t>(vocab_size_));
  for (int y = 0; y < vocab_size_; ++y) {
    const ValueNode& child = nodes_[static_cast<std::size_t>(node.first_child + y)];
    q[static_cast<std::size_t>(y)] = child.arrival_cost + gamma_ * child.value;
  }
  return q;
}

double ValueTable::BellmanResidual() const {
  double residual = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].terminal) {
      residual = std::max(residual, std::abs(nodes_[i].value));
      continue;
    }
    const std::vector<double> q = QValues(i);
    const double best = *std::min_element(q.begin(), q.end());
    residual = std::max(residual, std::abs(nodes_[i].value - best));
  }
  return residual;
}

ValueTable SolveValueIteration(const FiniteAugmentedMDP& mdp, double tol) {
  CheckEnumerable(mdp);
  TreeBuilder builder{mdp, {}};
  builder.nodes.emplace_back();
  AugmentedState root = InitAugmented(mdp.prompt, mdp.spec);
  builder.nodes[0].z = root.safety.z;
  builder.Expand(0, root);

  ValueTable table(std::move(builder.nodes), mdp.vocab().size(),
                   mdp.spec.gamma);
  std::vector<ValueNode>& nodes = table.mutable_nodes();
  const double gamma = mdp.spec.gamma;
  const int v = mdp.vocab().size();
  std::vector<double> next(nodes.size(), 0.0);
  for (auto& n : nodes) n.value = 0.0;

  // Finite tree: synchronous sweeps reach the fixed point after depth + 1
  // sweeps; the cap only guards against a pathological tol.
  const int max_sweeps = mdp.spec.max_len_T + 64;
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    double delta = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].terminal) {
        next[i] = 0.0;
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      for (int y = 0; y < v; ++y) {
        const ValueNode& child =
            nodes[static_cast<std::size_t>(nodes[i].first_child + y)];
        best = std::min(best, child.arrival_cost + gamma * child.value);
      }
      next[i] = best;
      delta = std::max(delta, std::abs(best - nodes[i].value));
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i].value = next[i];
    table.sweeps = sweep;
    if (delta <= tol) break;
  }
  table.bellman_residual = table.BellmanResidual();
  return table;
}

// ---------------------------------------------------------------------------
// Policies derived from a table

std::vector<TokenId> ArgminWithTies(std::span<const double> q) {
  const double best = *std::min_element(q.begin(), q.end());
  const double slack = kTieTolerance * std::max(1.0, std::abs(best));
  std::vector<TokenId> out;
  for (std::size_t y = 0; y < q.size(); ++y) {
    if (q[y] - best <= slack) out.push_back(static_cast<TokenId>(y));
  }
  return out;
}

GreedyPolicy::GreedyPolicy(std::shared_ptr<const ValueTable> table,
                           TieMode mode)
    : table_(std::move(table)), mode_(mode) {}

std::vector<TokenId> GreedyPolicy::Minimizers(std::size_t index) const {
  return ArgminWithTies(table_->QValues(index));
}

TokenId GreedyPolicy::Action(std::span<const TokenId> prefix) const {
  auto index = table_->Find(prefix);
  if (!index || table_->nodes()[*index].terminal) {
    throw ContractViolation("greedy policy queried off the history tree at " +
                            FormatTokens(prefix));
  }
  return Minimizers(*index).front();
}

std::vector<double> GreedyPolicy::Distribution(
    const AugmentedState& aug, std::span<const double> /*logits*/) const {
  auto index = table_->Find(aug.seq.generated);
  if (!index || table_->nodes()[*index].terminal) {
    throw ContractViolation("greedy policy queried off the history tree at " +
                            FormatTokens(aug.seq.generated));
  }
  std::vector<double> dist(static_cast<std::size_t>(table_->vocab_size()), 0.0);
  const std::vector<TokenId> argmin = Minimizers(*index);
  if (mode_ == TieMode::kLowestId) {
    dist[static_cast<std::size_t>(argmin.front())] = 1.0;
  } else {
    for (TokenId y : argmin) {
      dist[static_cast<std::size_t>(y)] = 1.0 / argmin.size();
    }
  }
  return dist;
}

std::shared_ptr<GreedyPolicy> OptimalPolicy(
    std::shared_ptr<const ValueTable> values, TieMode mode) {
  return std::make_shared<GreedyPolicy>(std::move(values), mode);
}

double PolicyValue(const FiniteAugmentedMDP& mdp, const Policy& policy) {
  double value = 0.0;
  for (const auto& rec : EnumerateTrajectories(mdp, policy)) {
    value += rec.probability * rec.reshaped_cost;
  }
  return value;
}

// ---------------------------------------------------------------------------
// Property checks

MonotoneReport VerifyMonotoneConvergence(
    const std::vector<FiniteAugmentedMDP>& family,
    const std::vector<double>& n_sequence) {
  for (std::size_t k = 1; k < n_sequence.size(); ++k) {
    if (!(n_sequence[k] > n_sequence[k - 1])) {
      throw ContractViolation("n_sequence must be strictly increasing");
    }
  }
  MonotoneReport report;
  for (const FiniteAugmentedMDP& base : family) {
    std::vector<double> roots;
    for (double n : n_sequence) {
      FiniteAugmentedMDP mdp = base;
      mdp.params.n = n;
      roots.push_back(SolveValueIteration(mdp).root_value());
    }
    report.root_values.push_back(roots);
    if (!report.ok) continue;

    std::ostringstream why;
    for (std::size_t k = 1; k < roots.size(); ++k) {
      const double slack = 1e-12 * std::max(1.0, std::abs(roots[k - 1]));
      if (roots[k] < roots[k - 1] - slack) {
        why << "V*_n decreased from " << roots[k - 1] << " (n=" << n_sequence[k - 1]
            << ") to " << roots[k] << " (n=" << n_sequence[k] << ")";
        break;
      }
    }
    if (why.str().empty() && ProbeFeasible(base)) {
      const double bound = base.task->Bound();
      std::optional<double> settled;
      for (std::size_t k = 0; k < roots.size(); ++k) {
        if (!(n_sequence[k] > bound)) continue;
        if (!settled) {
          settled = roots[k];
        } else if (std::abs(roots[k] - *settled) >
                   1e-12 * std::max(1.0, std::abs(*settled))) {
          why << "V*_n not constant beyond the dominance threshold: "
              << *settled << " vs " << roots[k] << " at n=" << n_sequence[k];
          break;
        }
      }
    }
    if (!why.str().empty()) {
      report.ok = false;
      report.failure = why.str();
      report.offending_instance = InstanceToString(base);
    }
  }
  return report;
}

SafetyVerdict VerifyAlmostSureSafety(const FiniteAugmentedMDP& mdp,
                                     const Policy& policy) {
  SafetyVerdict verdict;
  verdict.all_safe = true;
  for (const auto& rec : EnumerateTrajectories(mdp, policy)) {
    verdict.value += rec.probability * rec.reshaped_cost;
    verdict.all_safe = verdict.all_safe && rec.safe;
    ++verdict.num_trajectories;
  }
  verdict.implication_holds = !(verdict.value < mdp.params.n) || verdict.all_safe;
  return verdict;
}

LatentMap ReplayMap(std::shared_ptr<const GenerativeModel> model) {
  return [model = std::move(model)](const TokenSequence& seq) {
    return ReplayLatent(*model, seq);
  };
}

namespace {

struct LatentRow {
  std::vector<double> arrival;
  std::vector<int> child;  // latent id, -1 for terminal children
};

struct LatentChecker {
  const FiniteAugmentedMDP& mdp;
  const LatentMap& phi;
  const ValueTable& table;
  std::map<std::vector<double>, int> ids;
  std::vector<LatentRow> rows;
  std::vector<int> node_key;  // latent id of each nonterminal tree node
  std::size_t histories = 0;
  std::string counterexample;

  int Visit(std::size_t index, const AugmentedState& aug) {
    ++histories;
    const LatentState latent = phi(aug.seq);
    std::vector<double> key;
    key.reserve(latent.h.size() + latent.o.size() + 3);
    key.push_back(static_cast<double>(latent.h.size()));
    key.insert(key.end(), latent.h.begin(), latent.h.end());
    key.insert(key.end(), latent.o.begin(), latent.o.end());
    key.push_back(aug.safety.z);
    key.push_back(static_cast<double>(aug.safety.step));

    const int v = mdp.vocab().size();
    const ValueNode& node = table.nodes()[index];
    LatentRow row;
    for (TokenId y = 0; y < v; ++y) {
      const std::size_t ci = static_cast<std::size_t>(node.first_child + y);
      const ValueNode& child = table.nodes()[ci];
      row.arrival.push_back(child.arrival_cost);
      if (child.terminal) {
        row.child.push_back(-1);
      } else {
        AugmentedState next =
            AugmentedTransition(aug, y, *mdp.safety, mdp.vocab(), mdp.spec);
        row.child.push_back(Visit(ci, next));
        if (!counterexample.empty()) return -1;
      }
    }
    auto [it, inserted] = ids.emplace(std::move(key), static_cast<int>(rows.size()));
    if (inserted) {
      rows.push_back(std::move(row));
    } else {
      const LatentRow& seen = rows[static_cast<std::size_t>(it->second)];
      if (seen.arrival != row.arrival || seen.child != row.child) {
        counterexample =
            "history " + FormatTokens(aug.seq.generated) +
            " maps to a latent state already reached by another history with "
            "different " +
            (seen.arrival != row.arrival ? "costs" : "transitions");
        return -1;
      }
    }
    node_key[index] = it->second;
    return it->second;
  }
};

}  // namespace

LatentEquivalenceReport VerifyLatentEquivalence(const FiniteAugmentedMDP& mdp,
                                                const LatentMap& phi) {
  LatentEquivalenceReport report;
  const ValueTable table = SolveValueIteration(mdp);
  LatentChecker checker{mdp, phi, table, {}, {}, {}, 0, {}};
  checker.node_key.assign(table.nodes().size(), -1);
  checker.Visit(0, InitAugmented(mdp.prompt, mdp.spec));
  report.histories = checker.histories;
  report.latent_states = checker.rows.size();
  if (!checker.counterexample.empty()) {
    report.counterexample = checker.counterexample;
    return report;
  }

  // Latent values by memoized recursion over the latent DAG.
  const double gamma = mdp.spec.gamma;
  std::vector<std::optional<double>> memo(checker.rows.size());
  std::function<double(int)> value = [&](int id) -> double {
    auto& slot = memo[static_cast<std::size_t>(id)];
    if (slot) return *slot;
    const LatentRow& row = checker.rows[static_cast<std::size_t>(id)];
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < row.arrival.size(); ++y) {
      const double next = row.child[y] < 0 ? 0.0 : value(row.child[y]);
      best = std::min(best, row.arrival[y] + gamma * next);
    }
    slot = best;
    return best;
  };

  for (std::size_t i = 0; i < table.nodes().size(); ++i) {
    if (table.nodes()[i].terminal) continue;
    const LatentRow& row =
        checker.rows[static_cast<std::size_t>(checker.node_key[i])];
    std::vector<double> q(row.arrival.size());
    for (std::size_t y = 0; y < q.size(); ++y) {
      q[y] = row.arrival[y] + gamma * (row.child[y] < 0 ? 0.0 : value(row.child[y]));
    }
    const TokenId latent_action = ArgminWithTies(q).front();
    const TokenId token_action = ArgminWithTies(table.QValues(i)).front();
    if (latent_action != token_action) {
      report.counterexample = "greedy actions differ at history " +
                              FormatTokens(table.Prefix(i)) + ": latent " +
                              std::to_string(latent_action) + ", token " +
                              std::to_string(token_action);
      return report;
    }
  }
  report.ok = true;
  return report;
}

}  // namespace saute
