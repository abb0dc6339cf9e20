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

// Token-level MDP: vocabulary, sequences, the generative-model interface with
// an explicit latent state, and the task/safety cost contracts.

#ifndef SAUTE_MDP_H_
#define SAUTE_MDP_H_

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace saute {

using TokenId = std::int32_t;

class Vocabulary {
 public:
  /// Dense ids 0..size-1. Throws ConfigError unless size >= 2 and eos is
  /// one of them.
  Vocabulary(int size, TokenId eos);

  int size() const { return size_; }
  TokenId eos() const { return eos_; }
  bool Contains(TokenId token) const { return token >= 0 && token < size_; }

  bool operator==(const Vocabulary&) const = default;

 private:
  int size_;
  TokenId eos_;
};

struct CmdpSpec {
  double gamma = 0.999;
  double budget_d = 10.0;
  int max_len_T = 128;

  /// Throws ConfigError on gamma outside [0,1), negative budget or T < 1.
  void Validate() const;
};

/// s_t = {x, y_<t}. Immutable in practice: Transition returns a new value.
struct TokenSequence {
  std::vector<TokenId> prompt;
  std::vector<TokenId> generated;
  bool terminated = false;

  std::size_t length() const { return generated.size(); }
  /// Most recent token of prompt ++ generated, or -1 when both are empty.
  TokenId LastToken() const;

  bool operator==(const TokenSequence&) const = default;
};

TokenSequence MakeSequence(std::vector<TokenId> prompt);

/// s_{t+1} = s_t + token. Terminates on eos or when the generated length
/// reaches spec.max_len_T.
TokenSequence Transition(const TokenSequence& state, TokenId token,
                         const Vocabulary& vocab, const CmdpSpec& spec);

/// (h, o): model memory and pre-projection output.
struct LatentState {
  std::vector<double> h;
  std::vector<double> o;

  bool operator==(const LatentState&) const = default;
};

bool AllFinite(std::span<const double> values);

/// Deterministic generative model y_t ~ SoftMax(W o_t). Implementations must
/// be safe to share read-only across threads.
class GenerativeModel {
 public:
  virtual ~GenerativeModel() = default;

  virtual const Vocabulary& vocab() const = 0;
  virtual LatentState Init(std::span<const TokenId> prompt) const = 0;
  virtual LatentState Step(const LatentState& latent, TokenId token) const = 0;
  virtual std::vector<double> Logits(const LatentState& latent) const = 0;
};

/// Validated step: advances the latent and returns the next-token logits.
/// Throws ConfigError if the token is outside the model vocabulary and
/// InvariantViolation if the model produces non-finite values.
std::pair<LatentState, std::vector<double>> ModelStep(
    const GenerativeModel& model, const LatentState& latent, TokenId token);

/// Validated init plus first logits.
std::pair<LatentState, std::vector<double>> ModelInit(
    const GenerativeModel& model, std::span<const TokenId> prompt);

/// Replays the whole sequence through the model (the embedding phi).
LatentState ReplayLatent(const GenerativeModel& model,
                         const TokenSequence& seq);

std::vector<double> Softmax(std::span<const double> logits,
                            double temperature = 1.0);

/// Draws a token from SoftMax(logits / temperature).
TokenId SampleToken(std::span<const double> logits, double temperature,
                    std::mt19937_64& rng);

/// Terminal task cost c_task. Lower is better.
class TaskCostModel {
 public:
  virtual ~TaskCostModel() = default;

  /// c_task([x, y_<=T]) for a terminated sequence.
  virtual double Terminal(const TokenSequence& seq) const = 0;
  /// Intermediate evaluation of a partial answer, used by scoring functions
  /// when the cost model supports it.
  virtual double Partial(const TokenSequence& seq) const = 0;
  /// Upper bound on |c_task| over every sequence.
  virtual double Bound() const = 0;
};

/// Per-step safety cost C_safety(s, y). Must be nonnegative.
class SafetyCostModel {
 public:
  virtual ~SafetyCostModel() = default;
  virtual double Cost(const TokenSequence& state, TokenId token) const = 0;
};

/// Throws ContractViolation when seq is not terminated.
double EvalTaskCost(const TaskCostModel& model, const TokenSequence& seq);

/// Throws InvariantViolation on a negative or non-finite cost.
double EvalSafetyCost(const SafetyCostModel& model, const TokenSequence& state,
                      TokenId token);

}  // namespace saute

#endif  // SAUTE_MDP_H_
