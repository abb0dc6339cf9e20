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

#include "saute/search.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include "saute/errors.h"
#include "saute/rng.h"

namespace saute {

ScoreKind ParseScoreKind(const std::string& name) {
  if (name == "inter") return ScoreKind::kInter;
  if (name == "critic") return ScoreKind::kCritic;
  if (name == "mix") return ScoreKind::kMix;
  throw ConfigError("unknown score kind '" + name + "'");
}

std::string ToString(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::kInter:
      return "inter";
    case ScoreKind::kCritic:
      return "critic";
    case ScoreKind::kMix:
      return "mix";
  }
  return "inter";
}

void SearchConfig::Validate() const {
  if (num_beams < 1) throw ConfigError("num_beams must be >= 1");
  if (block_len < 1) throw ConfigError("block_len must be >= 1");
  if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (top_k < 1 || top_k > num_beams) {
    throw ConfigError("top_k must lie in [1, num_beams]");
  }
  if (max_retry < 1) throw ConfigError("max_retry must be >= 1");
  if (!(diversity_n2 > 0.0)) throw ConfigError("diversity_n2 must be positive");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (!std::isfinite(penalty_n)) throw ConfigError("penalty_n must be finite");
  if (num_threads < 1) throw ConfigError("num_threads must be >= 1");
}

Beam RootBeam(std::span<const TokenId> prompt, const DecodeContext& ctx) {
  Beam root;
  root.aug = InitAugmented(std::vector<TokenId>(prompt.begin(), prompt.end()),
                           ctx.spec);
  std::tie(root.latent, root.logits) = ModelInit(ctx.model, prompt);
  return root;
}

// ---------------------------------------------------------------------------

FrequencyMatrix::FrequencyMatrix(int block_len, int vocab_size)
    : block_len_(block_len),
      vocab_size_(vocab_size),
      counts_(static_cast<std::size_t>(block_len) * vocab_size, 0) {}

long long FrequencyMatrix::At(int pos, TokenId token) const {
  if (pos < 1 || pos > block_len_ || token < 0 || token >= vocab_size_) {
    throw ContractViolation("frequency matrix index out of range");
  }
  return counts_[static_cast<std::size_t>((pos - 1) * vocab_size_ + token)];
}

void FrequencyMatrix::Increment(int pos, TokenId token) {
  if (pos < 1 || pos > block_len_ || token < 0 || token >= vocab_size_) {
    throw ContractViolation("frequency matrix index out of range");
  }
  ++counts_[static_cast<std::size_t>((pos - 1) * vocab_size_ + token)];
}

long long FrequencyMatrix::Total() const {
  long long total = 0;
  for (long long c : counts_) total += c;
  return total;
}

void FrequencyMatrix::Reset() { std::fill(counts_.begin(), counts_.end(), 0); }

void UpdateFrequency(FrequencyMatrix& freq,
                     const std::vector<std::vector<TokenId>>& blocks) {
  for (const auto& block : blocks) {
    if (static_cast<int>(block.size()) > freq.block_len()) {
      throw ContractViolation("block longer than the frequency matrix");
    }
    for (std::size_t i = 0; i < block.size(); ++i) {
      freq.Increment(static_cast<int>(i) + 1, block[i]);
    }
  }
}

std::vector<double> PenalizedLogits(std::span<const double> logits,
                                    const FrequencyMatrix& freq, int pos,
                                    double n2) {
  std::vector<double> out(logits.begin(), logits.end());
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (freq.At(pos, static_cast<TokenId>(j)) > 0) out[j] -= n2;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scoring

namespace {

double DiscountedTask(const Beam& beam, const ScoringContext& ctx) {
  const TokenSequence& seq = beam.aug.seq;
  const double c = seq.terminated ? ctx.task.Terminal(seq) : ctx.task.Partial(seq);
  return std::pow(ctx.gamma, static_cast<double>(seq.length())) * c;
}

const CriticNet& RequireCritic(const ScoringContext& ctx) {
  if (ctx.critic == nullptr) {
    throw ConfigError("critic-based scoring needs a trained critic");
  }
  return *ctx.critic;
}

}  // namespace

double ScoreInter(const Beam& beam, const ScoringContext& ctx) {
  if (!(beam.aug.safety.z > 0.0)) return ctx.penalty_n;
  return DiscountedTask(beam, ctx);
}

double ScoreCritic(const Beam& beam, const ScoringContext& ctx) {
  if (beam.aug.seq.terminated) {
    return beam.aug.safety.z > 0.0 ? DiscountedTask(beam, ctx) : ctx.penalty_n;
  }
  const CriticOutput out = RequireCritic(ctx).Forward(
      beam.latent.h, beam.latent.o, beam.aug.safety.z);
  return out.p_safe > 0.5 ? out.cost : ctx.penalty_n;
}

double ScoreMix(const Beam& beam, const ScoringContext& ctx) {
  if (beam.aug.seq.terminated) {
    return beam.aug.safety.z > 0.0 ? DiscountedTask(beam, ctx) : ctx.penalty_n;
  }
  const CriticOutput out = RequireCritic(ctx).Forward(
      beam.latent.h, beam.latent.o, beam.aug.safety.z);
  if (out.p_safe > 0.5 && beam.aug.safety.z > 0.0) {
    return DiscountedTask(beam, ctx) + ctx.eta * out.cost;
  }
  return ctx.penalty_n;
}

double Score(ScoreKind kind, const Beam& beam, const ScoringContext& ctx) {
  switch (kind) {
    case ScoreKind::kInter:
      return ScoreInter(beam, ctx);
    case ScoreKind::kCritic:
      return ScoreCritic(beam, ctx);
    case ScoreKind::kMix:
      return ScoreMix(beam, ctx);
  }
  return ScoreInter(beam, ctx);
}

// ---------------------------------------------------------------------------
// Expansion

namespace {

Beam ExtendBeam(const Beam& beam, TokenId y, const DecodeContext& ctx) {
  Beam next;
  next.aug = AugmentedTransition(beam.aug, y, ctx.safety, ctx.model.vocab(),
                                 ctx.spec);
  std::tie(next.latent, next.logits) = ModelStep(ctx.model, beam.latent, y);
  next.block = beam.block;
  next.block.push_back(y);
  next.complete = next.aug.seq.terminated;
  return next;
}

Beam SampleContinuation(const Beam& parent, const DecodeContext& ctx,
                        const SearchConfig& config, int block_len,
                        const FrequencyMatrix* penalty, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Beam beam = parent;
  beam.block.clear();
  for (int i = 1; i <= block_len && !beam.complete; ++i) {
    TokenId y;
    if (penalty != nullptr) {
      const std::vector<double> logits =
          PenalizedLogits(beam.logits, *penalty, i, config.diversity_n2);
      y = SampleToken(logits, config.temperature, rng);
    } else {
      y = SampleToken(beam.logits, config.temperature, rng);
    }
    beam = ExtendBeam(beam, y, ctx);
  }
  return beam;
}

void Enumerate(const Beam& beam, int remaining, const DecodeContext& ctx,
               std::vector<Beam>& out) {
  for (TokenId y = 0; y < ctx.model.vocab().size(); ++y) {
    Beam next = ExtendBeam(beam, y, ctx);
    if (next.complete || remaining == 1) {
      out.push_back(std::move(next));
    } else {
      Enumerate(next, remaining - 1, ctx, out);
    }
  }
}

}  // namespace

std::vector<Beam> ExpandBeams(const std::vector<Beam>& parents,
                              const DecodeContext& ctx,
                              const SearchConfig& config, int block_len,
                              const FrequencyMatrix* penalty,
                              std::uint64_t block, std::uint64_t round,
                              std::vector<std::string>* warnings) {
  std::vector<const Beam*> open;
  for (const Beam& b : parents) {
    if (!b.complete) open.push_back(&b);
  }
  if (open.empty()) {
    if (warnings) warnings->push_back("expand_beams: every parent is complete");
    return {};
  }
  std::vector<Beam> out;
  if (config.exhaustive) {
    for (const Beam* p : open) {
      Beam start = *p;
      start.block.clear();
      Enumerate(start, block_len, ctx, out);
    }
    return out;
  }

  const std::size_t n = static_cast<std::size_t>(config.num_beams);
  out.resize(n);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const Beam& parent = *open[j % open.size()];
      out[j] = SampleContinuation(parent, ctx, config, block_len, penalty,
                                  StreamSeed({config.seed, block, round, j}));
    }
  };
  const std::size_t threads =
      std::min<std::size_t>(static_cast<std::size_t>(config.num_threads), n);
  if (threads <= 1) {
    work(0, n);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          work(t * chunk, std::min(n, (t + 1) * chunk));
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

void SortBeams(std::vector<Beam>& beams) {
  std::stable_sort(beams.begin(), beams.end(), [](const Beam& a, const Beam& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.aug.seq.generated < b.aug.seq.generated;
  });
}

std::vector<double> ZTrace(const AugmentedState& aug, const CmdpSpec& spec) {
  std::vector<double> trace;
  SafetyState s = InitBudget(spec);
  trace.push_back(s.z);
  for (double c : aug.step_costs) {
    s = AdvanceSafetyState(s, c, spec.gamma);
    trace.push_back(s.z);
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Block loop

SearchResult RunBlockSearch(std::span<const TokenId> prompt,
                            const SearchConfig& config,
                            const DecodeContext& ctx, const BeamScorer& scorer,
                            const BlockSearchOptions& options) {
  config.Validate();
  ctx.spec.Validate();
  SearchResult result;
  std::vector<Beam> beams{RootBeam(prompt, ctx)};
  beams.front().score = scorer(beams.front());
  beams.front().complete = beams.front().aug.seq.terminated;

  FrequencyMatrix freq(config.block_len, ctx.model.vocab().size());
  const int num_blocks = (config.max_depth + config.block_len - 1) / config.block_len;
  for (int b = 0; b < num_blocks; ++b) {
    if (std::all_of(beams.begin(), beams.end(),
                    [](const Beam& x) { return x.complete; })) {
      break;
    }
    const int len = std::min(config.block_len, config.max_depth - b * config.block_len);
    std::vector<Beam> pool;
    for (const Beam& x : beams) {
      if (x.complete) pool.push_back(x);
    }
    freq.Reset();
    std::vector<Beam> candidates;
    int rounds = 0;
    for (int r = 0; r < options.max_retry; ++r) {
      ++rounds;
      const FrequencyMatrix* penalty =
          options.diversity && r > 0 ? &freq : nullptr;
      candidates = ExpandBeams(beams, ctx, config, len, penalty,
                               static_cast<std::uint64_t>(b),
                               static_cast<std::uint64_t>(r), &result.warnings);
      bool any_safe = false;
      for (Beam& c : candidates) {
        c.score = scorer(c);
        any_safe = any_safe || c.score < config.penalty_n;
      }
      if (any_safe || r + 1 == options.max_retry) break;
      std::vector<std::vector<TokenId>> blocks;
      blocks.reserve(candidates.size());
      for (const Beam& c : candidates) blocks.push_back(c.block);
      UpdateFrequency(freq, blocks);
    }
    for (const Beam& c : candidates) {
      if (!(c.score < config.penalty_n)) ++result.beams_penalized;
    }
    result.rounds_per_block.push_back(rounds);
    result.rounds_used += rounds;
    pool.insert(pool.end(), std::make_move_iterator(candidates.begin()),
                std::make_move_iterator(candidates.end()));
    SortBeams(pool);
    if (static_cast<int>(pool.size()) > config.top_k) pool.resize(config.top_k);
    beams = std::move(pool);
  }

  SortBeams(beams);
  auto best = std::find_if(beams.begin(), beams.end(),
                           [](const Beam& x) { return x.complete; });
  if (best == beams.end()) {
    best = beams.begin();
    result.unterminated = true;
  }
  result.best = best->aug;
  result.score = best->score;
  result.safe = TrajectorySatisfiesConstraint(result.best.step_costs, ctx.spec);
  result.z_trace = ZTrace(result.best, ctx.spec);
  result.final_z = result.best.safety.z;
  result.final_beams = std::move(beams);
  return result;
}

SearchResult InferenceGuard(std::span<const TokenId> prompt,
                            const SearchConfig& config,
                            const DecodeContext& ctx, const CriticNet* critic) {
  if (config.score_kind != ScoreKind::kInter && critic == nullptr) {
    throw ConfigError("score kind '" + ToString(config.score_kind) +
                      "' requires a critic");
  }
  const ScoringContext scoring{ctx.task, config.penalty_n, ctx.spec.gamma,
                               critic, config.eta};
  const ScoreKind kind = config.score_kind;
  return RunBlockSearch(
      prompt, config, ctx,
      [&](const Beam& beam) { return Score(kind, beam, scoring); },
      BlockSearchOptions{config.max_retry, true});
}

}  // namespace saute
