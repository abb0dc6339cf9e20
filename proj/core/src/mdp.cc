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

#include "saute/mdp.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "saute/errors.h"

namespace saute {

Vocabulary::Vocabulary(int size, TokenId eos) : size_(size), eos_(eos) {
  if (size < 2) {
    throw ConfigError("vocabulary needs at least 2 tokens, got " +
                      std::to_string(size));
  }
  if (eos < 0 || eos >= size) {
    throw ConfigError("eos id " + std::to_string(eos) +
                      " is outside the vocabulary");
  }
}

void CmdpSpec::Validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ConfigError("gamma must lie in [0, 1), got " + std::to_string(gamma));
  }
  if (!(budget_d >= 0.0) || !std::isfinite(budget_d)) {
    throw ConfigError("budget_d must be a finite nonnegative number");
  }
  if (max_len_T < 1) {
    throw ConfigError("max_len_T must be positive");
  }
}

TokenId TokenSequence::LastToken() const {
  if (!generated.empty()) return generated.back();
  if (!prompt.empty()) return prompt.back();
  return -1;
}

TokenSequence MakeSequence(std::vector<TokenId> prompt) {
  TokenSequence seq;
  seq.prompt = std::move(prompt);
  return seq;
}

TokenSequence Transition(const TokenSequence& state, TokenId token,
                         const Vocabulary& vocab, const CmdpSpec& spec) {
  if (state.terminated) {
    throw ContractViolation("cannot append to a terminated sequence");
  }
  if (!vocab.Contains(token)) {
    throw ContractViolation("token " + std::to_string(token) +
                            " is not in the vocabulary");
  }
  TokenSequence next = state;
  next.generated.push_back(token);
  next.terminated =
      token == vocab.eos() ||
      static_cast<int>(next.generated.size()) >= spec.max_len_T;
  return next;
}

bool AllFinite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

namespace {

void CheckLatent(const LatentState& latent) {
  if (!AllFinite(latent.h) || !AllFinite(latent.o)) {
    throw InvariantViolation("model produced a non-finite latent state");
  }
}

std::vector<double> CheckedLogits(const GenerativeModel& model,
                                  const LatentState& latent) {
  std::vector<double> logits = model.Logits(latent);
  if (static_cast<int>(logits.size()) != model.vocab().size()) {
    throw ConfigError("model returned " + std::to_string(logits.size()) +
                      " logits for a vocabulary of " +
                      std::to_string(model.vocab().size()));
  }
  if (!AllFinite(logits)) {
    throw InvariantViolation("model produced non-finite logits");
  }
  return logits;
}

}  // namespace

std::pair<LatentState, std::vector<double>> ModelStep(
    const GenerativeModel& model, const LatentState& latent, TokenId token) {
  if (!model.vocab().Contains(token)) {
    throw ConfigError("token " + std::to_string(token) +
                      " does not belong to the model vocabulary");
  }
  LatentState next = model.Step(latent, token);
  CheckLatent(next);
  std::vector<double> logits = CheckedLogits(model, next);
  return {std::move(next), std::move(logits)};
}

std::pair<LatentState, std::vector<double>> ModelInit(
    const GenerativeModel& model, std::span<const TokenId> prompt) {
  for (TokenId t : prompt) {
    if (!model.vocab().Contains(t)) {
      throw ConfigError("prompt token " + std::to_string(t) +
                        " does not belong to the model vocabulary");
    }
  }
  LatentState latent = model.Init(prompt);
  CheckLatent(latent);
  std::vector<double> logits = CheckedLogits(model, latent);
  return {std::move(latent), std::move(logits)};
}

LatentState ReplayLatent(const GenerativeModel& model,
                         const TokenSequence& seq) {
  LatentState latent = model.Init(seq.prompt);
  for (TokenId t : seq.generated) latent = model.Step(latent, t);
  return latent;
}

std::vector<double> Softmax(std::span<const double> logits,
                            double temperature) {
  std::vector<double> probs(logits.size(), 0.0);
  double max_logit = -std::numeric_limits<double>::infinity();
  for (double l : logits) max_logit = std::max(max_logit, l / temperature);
  if (!std::isfinite(max_logit)) return probs;
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] / temperature - max_logit);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

TokenId SampleToken(std::span<const double> logits, double temperature,
                    std::mt19937_64& rng) {
  if (!(temperature > 0.0)) {
    throw ContractViolation("temperature must be positive");
  }
  for (double l : logits) {
    if (std::isnan(l) || l == std::numeric_limits<double>::infinity()) {
      throw ContractViolation("logits must be finite or -inf");
    }
  }
  std::vector<double> probs = Softmax(logits, temperature);
  double total = 0.0;
  for (double p : probs) total += p;
  if (!(total > 0.0)) {
    throw NoValidTokenError("every logit is -inf; no token can be sampled");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng) * total;
  TokenId last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = static_cast<TokenId>(i);
    if (u < probs[i]) return last_positive;
    u -= probs[i];
  }
  return last_positive;
}

double EvalTaskCost(const TaskCostModel& model, const TokenSequence& seq) {
  if (!seq.terminated) {
    throw ContractViolation("task cost is only defined on terminated sequences");
  }
  return model.Terminal(seq);
}

double EvalSafetyCost(const SafetyCostModel& model, const TokenSequence& state,
                      TokenId token) {
  const double cost = model.Cost(state, token);
  if (!std::isfinite(cost) || cost < 0.0) {
    throw InvariantViolation("safety cost model returned " +
                             std::to_string(cost) +
                             "; costs must be finite and nonnegative");
  }
  return cost;
}

}  // namespace saute
