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

#include "saute/toy_models.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "saute/errors.h"

namespace saute {

using nlohmann::json;

namespace {

std::size_t IntPow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

Vocabulary VocabFromJson(const json& j) {
  return Vocabulary(j.at("vocab_size").get<int>(), j.at("eos").get<TokenId>());
}

}  // namespace

// ---------------------------------------------------------------------------
// NGramModel

NGramModel::NGramModel(int order, Vocabulary vocab, std::vector<double> table)
    : order_(order), vocab_(vocab), table_(std::move(table)) {
  if (order < 1) throw ConfigError("n-gram order must be >= 1");
  num_contexts_ = IntPow(static_cast<std::size_t>(vocab_.size()) + 1,
                         order_ - 1);
  if (table_.size() != num_contexts_ * vocab_.size()) {
    throw ConfigError("n-gram table has " + std::to_string(table_.size()) +
                      " entries, expected " +
                      std::to_string(num_contexts_ * vocab_.size()));
  }
  if (!AllFinite(table_)) throw ConfigError("n-gram table must be finite");
}

std::span<const double> NGramModel::Row(std::size_t context_index) const {
  return std::span<const double>(table_).subspan(
      context_index * vocab_.size(), vocab_.size());
}

std::size_t NGramModel::ContextIndex(std::span<const TokenId> recent) const {
  const int slots = order_ - 1;
  const std::size_t radix = static_cast<std::size_t>(vocab_.size()) + 1;
  const TokenId pad = vocab_.size();
  std::size_t index = 0;
  std::size_t scale = 1;
  const int have = static_cast<int>(recent.size());
  for (int s = 0; s < slots; ++s) {
    // Slot s holds the token that is (slots - s) positions back.
    const int pos = have - (slots - s);
    const TokenId tok = pos >= 0 ? recent[pos] : pad;
    index += static_cast<std::size_t>(tok) * scale;
    scale *= radix;
  }
  return index;
}

LatentState NGramModel::MakeLatent(std::span<const TokenId> context,
                                   std::vector<double> histogram) const {
  const int slots = order_ - 1;
  const int radix = vocab_.size() + 1;
  LatentState latent;
  latent.h.assign(static_cast<std::size_t>(slots * radix), 0.0);
  const int have = static_cast<int>(context.size());
  for (int s = 0; s < slots; ++s) {
    const int pos = have - (slots - s);
    const TokenId tok = pos >= 0 ? context[pos] : vocab_.size();
    latent.h[static_cast<std::size_t>(s * radix + tok)] = 1.0;
  }
  latent.h.insert(latent.h.end(), histogram.begin(), histogram.end());
  const auto row = Row(ContextIndex(context));
  latent.o.assign(row.begin(), row.end());
  return latent;
}

std::vector<TokenId> NGramModel::ContextFromLatent(
    const LatentState& latent) const {
  const int slots = order_ - 1;
  const int radix = vocab_.size() + 1;
  std::vector<TokenId> context;
  for (int s = 0; s < slots; ++s) {
    for (int t = 0; t < radix; ++t) {
      if (latent.h[static_cast<std::size_t>(s * radix + t)] != 0.0) {
        if (t != vocab_.size()) context.push_back(t);
        break;
      }
    }
  }
  return context;
}

LatentState NGramModel::Init(std::span<const TokenId> prompt) const {
  const std::size_t keep =
      std::min<std::size_t>(prompt.size(), static_cast<std::size_t>(order_ - 1));
  return MakeLatent(prompt.subspan(prompt.size() - keep),
                    std::vector<double>(vocab_.size(), 0.0));
}

LatentState NGramModel::Step(const LatentState& latent, TokenId token) const {
  std::vector<TokenId> context = ContextFromLatent(latent);
  context.push_back(token);
  if (static_cast<int>(context.size()) > order_ - 1) {
    context.erase(context.begin());
  }
  const std::size_t hist_offset =
      static_cast<std::size_t>((order_ - 1) * (vocab_.size() + 1));
  std::vector<double> histogram(latent.h.begin() + hist_offset, latent.h.end());
  histogram[static_cast<std::size_t>(token)] += 1.0;
  return MakeLatent(context, std::move(histogram));
}

std::vector<double> NGramModel::Logits(const LatentState& latent) const {
  return latent.o;
}

json NGramModel::ToJson() const {
  return json{{"kind", "ngram"},
              {"order", order_},
              {"vocab_size", vocab_.size()},
              {"eos", vocab_.eos()},
              {"table", table_}};
}

NGramModel NGramModel::FromJson(const json& j) {
  return NGramModel(j.at("order").get<int>(), VocabFromJson(j),
                    j.at("table").get<std::vector<double>>());
}

NGramModel BuildNGram(const std::vector<std::vector<TokenId>>& corpus,
                      int order, const Vocabulary& vocab) {
  if (order < 1) throw ConfigError("n-gram order must be >= 1");
  if (corpus.empty()) throw ConfigError("n-gram corpus is empty");
  const std::size_t contexts =
      IntPow(static_cast<std::size_t>(vocab.size()) + 1, order - 1);
  const std::size_t v = static_cast<std::size_t>(vocab.size());
  // Placeholder table so ContextIndex is usable while counting.
  NGramModel indexer(order, vocab, std::vector<double>(contexts * v, 0.0));
  std::vector<double> counts(contexts * v, 0.0);
  for (const auto& sentence : corpus) {
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      const TokenId tok = sentence[i];
      if (!vocab.Contains(tok)) {
        throw ConfigError("corpus token " + std::to_string(tok) +
                          " is outside the vocabulary");
      }
      const std::size_t ctx = indexer.ContextIndex(
          std::span<const TokenId>(sentence.data(), i));
      counts[ctx * v + static_cast<std::size_t>(tok)] += 1.0;
    }
  }
  std::vector<double> table(contexts * v);
  for (std::size_t c = 0; c < contexts; ++c) {
    double total = 0.0;
    for (std::size_t t = 0; t < v; ++t) total += counts[c * v + t];
    for (std::size_t t = 0; t < v; ++t) {
      table[c * v + t] =
          std::log((counts[c * v + t] + 1.0) / (total + static_cast<double>(v)));
    }
  }
  return NGramModel(order, vocab, std::move(table));
}

// ---------------------------------------------------------------------------
// TinyRecurrentModel

TinyRecurrentModel::TinyRecurrentModel(Vocabulary vocab, int width,
                                       Weights weights)
    : vocab_(vocab), width_(width), w_(std::move(weights)) {
  const std::size_t v = static_cast<std::size_t>(vocab_.size());
  const std::size_t w = static_cast<std::size_t>(width_);
  if (width_ < 1) throw ConfigError("recurrent width must be positive");
  if (w_.embedding.size() != v * w || w_.recurrent.size() != w * w ||
      w_.bias_h.size() != w || w_.readout.size() != w * w ||
      w_.bias_o.size() != w || w_.output.size() != v * w ||
      w_.bias_out.size() != v) {
    throw ConfigError("recurrent model weight shapes are inconsistent");
  }
}

TinyRecurrentModel TinyRecurrentModel::Random(Vocabulary vocab, int width,
                                              std::uint64_t seed,
                                              double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale / std::sqrt(width));
  const std::size_t v = static_cast<std::size_t>(vocab.size());
  const std::size_t w = static_cast<std::size_t>(width);
  auto draw = [&](std::size_t count) {
    std::vector<double> out(count);
    for (double& x : out) x = normal(rng);
    return out;
  };
  Weights weights;
  weights.embedding = draw(v * w);
  weights.recurrent = draw(w * w);
  weights.bias_h = draw(w);
  weights.readout = draw(w * w);
  weights.bias_o = draw(w);
  weights.output = draw(v * w);
  weights.bias_out = draw(v);
  // Output layer gets a larger gain so next-token distributions are peaked.
  for (double& x : weights.output) x *= std::sqrt(static_cast<double>(width));
  return TinyRecurrentModel(vocab, width, std::move(weights));
}

std::vector<double> TinyRecurrentModel::Readout(
    std::span<const double> h) const {
  const std::size_t w = static_cast<std::size_t>(width_);
  std::vector<double> o(w);
  for (std::size_t i = 0; i < w; ++i) {
    double acc = w_.bias_o[i];
    for (std::size_t j = 0; j < w; ++j) acc += w_.readout[i * w + j] * h[j];
    o[i] = std::tanh(acc);
  }
  return o;
}

LatentState TinyRecurrentModel::Init(std::span<const TokenId> prompt) const {
  LatentState latent;
  latent.h.assign(static_cast<std::size_t>(width_), 0.0);
  latent.o = Readout(latent.h);
  for (TokenId t : prompt) latent = Step(latent, t);
  return latent;
}

LatentState TinyRecurrentModel::Step(const LatentState& latent,
                                     TokenId token) const {
  const std::size_t w = static_cast<std::size_t>(width_);
  const std::size_t tok = static_cast<std::size_t>(token);
  LatentState next;
  next.h.resize(w);
  for (std::size_t i = 0; i < w; ++i) {
    double acc = w_.bias_h[i] + w_.embedding[tok * w + i];
    for (std::size_t j = 0; j < w; ++j) {
      acc += w_.recurrent[i * w + j] * latent.h[j];
    }
    next.h[i] = std::tanh(acc);
  }
  next.o = Readout(next.h);
  return next;
}

std::vector<double> TinyRecurrentModel::Logits(
    const LatentState& latent) const {
  const std::size_t v = static_cast<std::size_t>(vocab_.size());
  const std::size_t w = static_cast<std::size_t>(width_);
  std::vector<double> logits(v);
  for (std::size_t k = 0; k < v; ++k) {
    double acc = w_.bias_out[k];
    for (std::size_t i = 0; i < w; ++i) acc += w_.output[k * w + i] * latent.o[i];
    logits[k] = acc;
  }
  return logits;
}

json TinyRecurrentModel::ToJson() const {
  return json{{"kind", "recurrent"},
              {"vocab_size", vocab_.size()},
              {"eos", vocab_.eos()},
              {"width", width_},
              {"embedding", w_.embedding},
              {"recurrent", w_.recurrent},
              {"bias_h", w_.bias_h},
              {"readout", w_.readout},
              {"bias_o", w_.bias_o},
              {"output", w_.output},
              {"bias_out", w_.bias_out}};
}

TinyRecurrentModel TinyRecurrentModel::FromJson(const json& j) {
  Weights w;
  w.embedding = j.at("embedding").get<std::vector<double>>();
  w.recurrent = j.at("recurrent").get<std::vector<double>>();
  w.bias_h = j.at("bias_h").get<std::vector<double>>();
  w.readout = j.at("readout").get<std::vector<double>>();
  w.bias_o = j.at("bias_o").get<std::vector<double>>();
  w.output = j.at("output").get<std::vector<double>>();
  w.bias_out = j.at("bias_out").get<std::vector<double>>();
  return TinyRecurrentModel(VocabFromJson(j), j.at("width").get<int>(),
                            std::move(w));
}

// ---------------------------------------------------------------------------
// Cost models

LexiconSafetyCost::LexiconSafetyCost(std::vector<double> weights,
                                     bool context_multiplier)
    : weights_(std::move(weights)), context_multiplier_(context_multiplier) {
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError("lexicon weights must be finite and nonnegative");
    }
  }
}

double LexiconSafetyCost::Cost(const TokenSequence& state,
                               TokenId token) const {
  if (token < 0 || static_cast<std::size_t>(token) >= weights_.size()) {
    throw ContractViolation("token " + std::to_string(token) +
                            " has no lexicon weight");
  }
  const double w = weights_[static_cast<std::size_t>(token)];
  if (w == 0.0 || !context_multiplier_) return w;
  const TokenId prev = state.LastToken();
  const bool prev_forbidden =
      prev >= 0 && static_cast<std::size_t>(prev) < weights_.size() &&
      weights_[static_cast<std::size_t>(prev)] > 0.0;
  return prev_forbidden ? 2.0 * w : w;
}

double LexiconSafetyCost::MaxStepCost() const {
  const double m = weights_.empty()
                       ? 0.0
                       : *std::max_element(weights_.begin(), weights_.end());
  return context_multiplier_ ? 2.0 * m : m;
}

json LexiconSafetyCost::ToJson() const {
  return json{{"kind", "lexicon"},
              {"weights", weights_},
              {"context_multiplier", context_multiplier_}};
}

LexiconSafetyCost LexiconSafetyCost::FromJson(const json& j) {
  return LexiconSafetyCost(j.at("weights").get<std::vector<double>>(),
                           j.at("context_multiplier").get<bool>());
}

TargetTaskCost::TargetTaskCost(std::vector<TokenId> targets, double reward,
                               double length_penalty, int max_len)
    : targets_(std::move(targets)),
      reward_(reward),
      length_penalty_(length_penalty),
      max_len_(max_len) {
  std::sort(targets_.begin(), targets_.end());
  targets_.erase(std::unique(targets_.begin(), targets_.end()), targets_.end());
  if (!std::isfinite(reward_) || !std::isfinite(length_penalty_)) {
    throw ConfigError("task cost parameters must be finite");
  }
}

double TargetTaskCost::Partial(const TokenSequence& seq) const {
  const bool hit = std::any_of(seq.generated.begin(), seq.generated.end(),
                               [&](TokenId t) {
                                 return std::binary_search(targets_.begin(),
                                                           targets_.end(), t);
                               });
  return (hit ? -reward_ : 0.0) +
         length_penalty_ * static_cast<double>(seq.generated.size());
}

double TargetTaskCost::Terminal(const TokenSequence& seq) const {
  return Partial(seq);
}

double TargetTaskCost::Bound() const {
  return std::abs(reward_) + std::abs(length_penalty_) * max_len_;
}

json TargetTaskCost::ToJson() const {
  return json{{"kind", "target"},
              {"targets", targets_},
              {"reward", reward_},
              {"length_penalty", length_penalty_},
              {"max_len", max_len_}};
}

TargetTaskCost TargetTaskCost::FromJson(const json& j) {
  return TargetTaskCost(j.at("targets").get<std::vector<TokenId>>(),
                        j.at("reward").get<double>(),
                        j.at("length_penalty").get<double>(),
                        j.at("max_len").get<int>());
}

// ---------------------------------------------------------------------------

std::vector<TokenId> WhitespaceTokenizer::Encode(std::string_view text) const {
  std::vector<TokenId> out;
  std::istringstream in{std::string(text)};
  std::string piece;
  const std::uint32_t slots = static_cast<std::uint32_t>(vocab_.size() - 1);
  while (in >> piece) {
    int value = 0;
    const auto [ptr, ec] =
        std::from_chars(piece.data(), piece.data() + piece.size(), value);
    if (ec == std::errc() && ptr == piece.data() + piece.size() &&
        vocab_.Contains(value)) {
      out.push_back(value);
      continue;
    }
    std::uint32_t hash = 2166136261u;
    for (unsigned char c : piece) {
      hash ^= c;
      hash *= 16777619u;
    }
    TokenId id = static_cast<TokenId>(hash % slots);
    if (id >= vocab_.eos()) ++id;
    out.push_back(id);
  }
  return out;
}

}  // namespace saute
