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

// Small fully-inspectable generative and cost models. They realize the
// dynamical-system view of a language model with explicit (h, o) states, so
// every property of the decoder can be checked exhaustively.

#ifndef SAUTE_TOY_MODELS_H_
#define SAUTE_TOY_MODELS_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "saute/mdp.h"

namespace saute {

/// k-gram model over a dense vocabulary.
///
/// The latent state is
///   h = [one-hot of the last k-1 tokens (pad symbol = V) ; histogram of the
///        generated tokens],
///   o = the conditional logit row of the current context,
/// and the projection W is the identity, so Logits(latent) == latent.o.
/// The histogram makes h a sufficient statistic for the toy cost models as
/// well as for the next-token distribution.
class NGramModel final : public GenerativeModel {
 public:
  /// table holds (V+1)^(order-1) rows of V logits, context slots encoded
  /// least-significant first with the oldest token in slot 0.
  NGramModel(int order, Vocabulary vocab, std::vector<double> table);

  const Vocabulary& vocab() const override { return vocab_; }
  LatentState Init(std::span<const TokenId> prompt) const override;
  LatentState Step(const LatentState& latent, TokenId token) const override;
  std::vector<double> Logits(const LatentState& latent) const override;

  int order() const { return order_; }
  std::size_t num_contexts() const { return num_contexts_; }
  std::span<const double> Row(std::size_t context_index) const;
  /// Row index of the context formed by the given (<= order-1) most recent
  /// tokens; missing leading slots are padded.
  std::size_t ContextIndex(std::span<const TokenId> recent) const;

  nlohmann::json ToJson() const;
  static NGramModel FromJson(const nlohmann::json& j);

 private:
  std::vector<TokenId> ContextFromLatent(const LatentState& latent) const;
  LatentState MakeLatent(std::span<const TokenId> context,
                         std::vector<double> histogram) const;

  int order_;
  Vocabulary vocab_;
  std::size_t num_contexts_;
  std::vector<double> table_;
};

/// Add-one smoothed k-gram estimate in log space. Every sequence is read with
/// order-1 pad symbols in front.
NGramModel BuildNGram(const std::vector<std::vector<TokenId>>& corpus,
                      int order, const Vocabulary& vocab);

/// Elman-style recurrent model:
///   h' = tanh(U h + E[y] + b_h),  o' = tanh(A h' + b_o),  logits = W o + b_w.
class TinyRecurrentModel final : public GenerativeModel {
 public:
  struct Weights {
    std::vector<double> embedding;  // V x width, row-major
    std::vector<double> recurrent;  // width x width
    std::vector<double> bias_h;     // width
    std::vector<double> readout;    // width x width (A)
    std::vector<double> bias_o;     // width
    std::vector<double> output;     // V x width (W)
    std::vector<double> bias_out;   // V
  };

  TinyRecurrentModel(Vocabulary vocab, int width, Weights weights);

  /// Gaussian weights scaled by `scale / sqrt(width)`.
  static TinyRecurrentModel Random(Vocabulary vocab, int width,
                                   std::uint64_t seed, double scale = 1.5);

  const Vocabulary& vocab() const override { return vocab_; }
  LatentState Init(std::span<const TokenId> prompt) const override;
  LatentState Step(const LatentState& latent, TokenId token) const override;
  std::vector<double> Logits(const LatentState& latent) const override;

  int width() const { return width_; }
  const Weights& weights() const { return w_; }

  nlohmann::json ToJson() const;
  static TinyRecurrentModel FromJson(const nlohmann::json& j);

 private:
  std::vector<double> Readout(std::span<const double> h) const;

  Vocabulary vocab_;
  int width_;
  Weights w_;
};

/// Per-token weights; with the context multiplier a forbidden token costs
/// twice its weight when the previous token is forbidden too.
class LexiconSafetyCost final : public SafetyCostModel {
 public:
  LexiconSafetyCost(std::vector<double> weights, bool context_multiplier);

  double Cost(const TokenSequence& state, TokenId token) const override;

  const std::vector<double>& weights() const { return weights_; }
  bool context_multiplier() const { return context_multiplier_; }
  double MaxStepCost() const;

  nlohmann::json ToJson() const;
  static LexiconSafetyCost FromJson(const nlohmann::json& j);

 private:
  std::vector<double> weights_;
  bool context_multiplier_;
};

/// c_task = -reward * [a target token was generated] + length_penalty * |y|.
class TargetTaskCost final : public TaskCostModel {
 public:
  TargetTaskCost(std::vector<TokenId> targets, double reward,
                 double length_penalty, int max_len);

  double Terminal(const TokenSequence& seq) const override;
  double Partial(const TokenSequence& seq) const override;
  double Bound() const override;

  const std::vector<TokenId>& targets() const { return targets_; }
  double reward() const { return reward_; }
  double length_penalty() const { return length_penalty_; }

  nlohmann::json ToJson() const;
  static TargetTaskCost FromJson(const nlohmann::json& j);

 private:
  std::vector<TokenId> targets_;
  double reward_;
  double length_penalty_;
  int max_len_;
};

/// Splits on whitespace. A piece that parses as an in-range integer is used as
/// the token id; any other piece is hashed (FNV-1a) onto the non-eos ids.
class WhitespaceTokenizer {
 public:
  explicit WhitespaceTokenizer(Vocabulary vocab) : vocab_(vocab) {}
  std::vector<TokenId> Encode(std::string_view text) const;

 private:
  Vocabulary vocab_;
};

}  // namespace saute

#endif  // SAUTE_TOY_MODELS_H_
