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

// Blockwise lookahead search with safety-augmented scoring, retry rounds and
// frequency-penalized resampling (InferenceGuard).
//
// Scores follow cost semantics: lower is better and the penalty n marks a
// candidate whose budget is (predicted to be) exhausted.

#ifndef SAUTE_SEARCH_H_
#define SAUTE_SEARCH_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "saute/augment.h"
#include "saute/critic.h"
#include "saute/mdp.h"

namespace saute {

enum class ScoreKind { kInter, kCritic, kMix };

ScoreKind ParseScoreKind(const std::string& name);
std::string ToString(ScoreKind kind);

struct SearchConfig {
  int num_beams = 128;  // N
  int block_len = 32;   // tokens sampled per block
  int max_depth = 128;  // D
  int top_k = 32;       // K
  int max_retry = 2;    // M
  double penalty_n = 1e4;
  double diversity_n2 = 1e3;
  double eta = 1.0;
  ScoreKind score_kind = ScoreKind::kInter;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  /// Enumerate every continuation of each block instead of sampling
  /// num_beams of them. Only sensible for tiny vocabularies.
  bool exhaustive = false;
  int num_threads = 1;

  void Validate() const;
};

/// Everything the decoders need besides their own knobs. Models are shared
/// read-only.
struct DecodeContext {
  const GenerativeModel& model;
  const SafetyCostModel& safety;
  const TaskCostModel& task;
  CmdpSpec spec;
};

struct Beam {
  AugmentedState aug;
  LatentState latent;
  /// Next-token logits at the frontier.
  std::vector<double> logits;
  double score = 0.0;
  bool complete = false;
  /// Tokens appended during the most recent block.
  std::vector<TokenId> block;
};

Beam RootBeam(std::span<const TokenId> prompt, const DecodeContext& ctx);

/// Token counts per in-block position, positions numbered 1..block_len.
class FrequencyMatrix {
 public:
  FrequencyMatrix(int block_len, int vocab_size);

  int block_len() const { return block_len_; }
  int vocab_size() const { return vocab_size_; }
  long long At(int pos, TokenId token) const;
  void Increment(int pos, TokenId token);
  long long Total() const;
  void Reset();

 private:
  int block_len_;
  int vocab_size_;
  std::vector<long long> counts_;
};

/// F[i][j] += 1 for every token j at in-block position i of every block.
void UpdateFrequency(FrequencyMatrix& freq,
                     const std::vector<std::vector<TokenId>>& blocks);

/// logits - n2 * [F[pos] > 0].
std::vector<double> PenalizedLogits(std::span<const double> logits,
                                    const FrequencyMatrix& freq, int pos,
                                    double n2);

struct ScoringContext {
  const TaskCostModel& task;
  double penalty_n;
  double gamma;
  const CriticNet* critic = nullptr;
  double eta = 1.0;
};

/// gamma^t c_task(prefix) when z > 0, otherwise n. Uses the intermediate
/// task evaluation on unfinished beams.
double ScoreInter(const Beam& beam, const ScoringContext& ctx);
/// Terminal beams are scored exactly; unfinished ones through the critic:
/// f2 if f1 > 0.5, otherwise n.
double ScoreCritic(const Beam& beam, const ScoringContext& ctx);
/// Like ScoreCritic but unfinished safe beams get
/// gamma^t c_task(prefix) + eta f2 when f1 > 0.5 and z > 0.
double ScoreMix(const Beam& beam, const ScoringContext& ctx);

double Score(ScoreKind kind, const Beam& beam, const ScoringContext& ctx);

/// Generates config.num_beams continuations of up to `block_len` tokens from
/// the unfinished parents (assigned round-robin, parents taken in order), or
/// every continuation when config.exhaustive is set. Candidate j draws from
/// its own stream StreamSeed(seed, block, round, j). When `penalty` is
/// non-null, position i samples from PenalizedLogits(., penalty, i, n2).
/// Returned beams are unscored. If no parent is unfinished, returns an empty
/// vector and appends a warning.
std::vector<Beam> ExpandBeams(const std::vector<Beam>& parents,
                              const DecodeContext& ctx,
                              const SearchConfig& config, int block_len,
                              const FrequencyMatrix* penalty,
                              std::uint64_t block, std::uint64_t round,
                              std::vector<std::string>* warnings = nullptr);

/// Stable order: score ascending, then generated tokens lexicographically.
void SortBeams(std::vector<Beam>& beams);

struct SearchResult {
  AugmentedState best;
  double score = 0.0;
  /// No completed trajectory was found within the depth budget.
  bool unterminated = false;
  /// Discounted safety cost of the returned trajectory is within budget.
  bool safe = false;
  std::vector<double> z_trace;
  std::vector<int> rounds_per_block;
  int rounds_used = 0;
  int beams_penalized = 0;
  double final_z = 0.0;
  std::vector<Beam> final_beams;
  std::vector<std::string> warnings;
};

using BeamScorer = std::function<double(const Beam&)>;

struct BlockSearchOptions {
  int max_retry = 1;
  bool diversity = false;
};

/// Shared block loop used by InferenceGuard and the beam-search baselines.
SearchResult RunBlockSearch(std::span<const TokenId> prompt,
                            const SearchConfig& config,
                            const DecodeContext& ctx, const BeamScorer& scorer,
                            const BlockSearchOptions& options);

/// Throws ConfigError when score_kind needs a critic and none is given.
SearchResult InferenceGuard(std::span<const TokenId> prompt,
                            const SearchConfig& config,
                            const DecodeContext& ctx,
                            const CriticNet* critic = nullptr);

/// z_0 = d, z_{t+1} = (z_t - c_t) / gamma over the recorded step costs.
std::vector<double> ZTrace(const AugmentedState& aug, const CmdpSpec& spec);

}  // namespace saute

#endif  // SAUTE_SEARCH_H_
