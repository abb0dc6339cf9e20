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

// Experiment driver: run configuration, synthetic benchmark worlds, per-prompt
// decoding, metrics and report files.

#ifndef SAUTE_HARNESS_H_
#define SAUTE_HARNESS_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "saute/baselines.h"
#include "saute/critic.h"
#include "saute/mdp.h"
#include "saute/prompts.h"
#include "saute/search.h"

namespace saute {

enum class Method {
  kInferenceGuard,
  kBonLagrangian,
  kBonAugmented,
  kBeamLagrangian,
  kBeamAugmented,
  kArgs,
};

Method ParseMethod(const std::string& name);
std::string ToString(Method method);

/// Parameters of the generated benchmark world. Forbidden tokens carry a
/// safety cost; target tokens earn the reward and, with target_overlap, are
/// drawn from the forbidden set so that reward and safety conflict.
struct SyntheticWorldParams {
  std::uint64_t seed = 0;
  int vocab_size = 8;
  std::string model_kind = "ngram";  // "ngram" or "recurrent"
  int ngram_order = 2;
  int recurrent_width = 16;
  double logit_scale = 1.0;
  double eos_bias = -1.0;
  int num_forbidden = 2;
  double forbidden_weight = 1.0;
  bool context_multiplier = false;
  int num_targets = 1;
  bool target_overlap = true;
  double reward = 10.0;
  double length_penalty = 0.05;
  int num_prompts = 200;
  int prompt_len_min = 1;
  int prompt_len_max = 3;

  nlohmann::json ToJson() const;
  static SyntheticWorldParams FromJson(const nlohmann::json& j);
};

/// Model, cost models and (optionally) prompts that a run decodes against.
struct World {
  std::shared_ptr<const GenerativeModel> model;
  std::shared_ptr<const SafetyCostModel> safety;
  std::shared_ptr<const TaskCostModel> task;
  std::vector<Prompt> prompts;
};

std::shared_ptr<const GenerativeModel> GenerativeModelFromJson(
    const nlohmann::json& j);
nlohmann::json GenerativeModelToJson(const GenerativeModel& model);

World MakeSyntheticWorld(const SyntheticWorldParams& params,
                         const CmdpSpec& spec);

/// True iff the prompt admits a trajectory that ends with z > 0. Depth-first
/// with pruning on exhausted budgets, cheapest tokens first.
bool PromptFeasible(std::span<const TokenId> prompt, const World& world,
                    const CmdpSpec& spec);

inline constexpr int kRunConfigSchemaVersion = 1;

/// One run. Serialized as a versioned JSON document; see README for the
/// schema. World is either {"kind": "synthetic", ...SyntheticWorldParams} or
/// {"kind": "files", "model": path, "safety": path, "task": path}.
struct RunConfig {
  Method method = Method::kInferenceGuard;
  CmdpSpec spec;
  SearchConfig search;
  BonConfig bon;
  double lagrangian_lambda = 5.0;
  ArgsConfig args;
  nlohmann::json world = {{"kind", "synthetic"}};
  std::string prompts_path;
  std::string critic_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int num_workers = 1;

  void Validate() const;
  nlohmann::json ToJson() const;
  static RunConfig FromJson(const nlohmann::json& j);
};

/// Reads a config file and applies the SAUTE_SEED override.
RunConfig LoadRunConfig(const std::filesystem::path& path);
/// Replaces config.seed with SAUTE_SEED when that variable is set.
void ApplySeedOverride(RunConfig& config);

/// Resolves config.world; prompts come from prompts_path when set.
World LoadWorld(const RunConfig& config);

struct PromptResult {
  std::string id;
  std::vector<TokenId> prompt;
  std::vector<TokenId> tokens;
  double score = 0.0;
  std::vector<double> z_trace;
  int rounds_used = 0;
  int beams_penalized = 0;
  bool unterminated = false;
  double task_cost = 0.0;
  double discounted_safety_cost = 0.0;
  double raw_safety_cost = 0.0;
  double wall_time_s = 0.0;

  /// Wall time is not serialized.
  nlohmann::json ToJson() const;
  static PromptResult FromJson(const nlohmann::json& j);
};

/// Decodes every prompt of `world` with the configured method. Each prompt
/// gets its own seed derived from (config.seed, prompt id), so the output is
/// independent of num_workers. Rows are sorted by prompt id.
std::vector<PromptResult> RunExperiment(const RunConfig& config,
                                        const World& world,
                                        const CriticNet* critic = nullptr);

/// Loads the world and critic named by the config, then runs it.
std::vector<PromptResult> RunExperiment(const RunConfig& config);

struct MetricsReport {
  std::string method;
  double lambda = 0.0;
  double budget = 0.0;
  int num_beams = 0;
  std::size_t num_prompts = 0;
  double avg_reward = 0.0;
  double avg_cost_discounted = 0.0;
  double avg_cost_raw_sum = 0.0;
  double safety_rate = 0.0;
  double mean_wall_time_s = 0.0;

  /// Everything except wall-clock time, so the document is reproducible.
  nlohmann::json ToJson() const;
};

/// Safety rate counts rows whose discounted safety cost is <= budget_d.
MetricsReport ComputeMetrics(const std::vector<PromptResult>& results,
                             const CmdpSpec& spec);

/// Metrics labelled with the config's method, lambda, budget and beam count.
MetricsReport ComputeMetrics(const std::vector<PromptResult>& results,
                             const RunConfig& config);

/// Writes metrics.json, rows.csv, results.jsonl, pareto.csv (one point) and
/// timing.json into out_dir. Only timing.json depends on the clock.
void EmitReport(const MetricsReport& report,
                const std::vector<PromptResult>& results,
                const std::filesystem::path& out_dir);

struct SweepEntry {
  RunConfig config;
  std::optional<MetricsReport> report;
  std::string error;
};

/// {"base": RunConfig, "grid": {"method": [...], "lambda": [...],
/// "budget": [...], "num_beams": [...]}} or {"configs": [RunConfig...]}.
std::vector<RunConfig> ExpandSweep(const nlohmann::json& j);

/// Runs every config; a failing config is recorded and the sweep continues.
std::vector<SweepEntry> Sweep(const std::vector<RunConfig>& configs);

void WritePareto(const std::vector<SweepEntry>& entries,
                 const std::filesystem::path& path);
/// sweep.json with one record per config plus pareto.csv.
void EmitSweep(const std::vector<SweepEntry>& entries,
               const std::filesystem::path& out_dir);

}  // namespace saute

#endif  // SAUTE_HARNESS_H_
