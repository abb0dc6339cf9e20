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

#include "saute/harness.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "saute/errors.h"
#include "saute/rng.h"
#include "saute/toy_models.h"

namespace saute {

using json = nlohmann::json;

namespace {

const std::pair<Method, const char*> kMethodNames[] = {
    {Method::kInferenceGuard, "inference_guard"},
    {Method::kBonLagrangian, "bon_lagrangian"},
    {Method::kBonAugmented, "bon_augmented"},
    {Method::kBeamLagrangian, "beam_lagrangian"},
    {Method::kBeamAugmented, "beam_augmented"},
    {Method::kArgs, "args"},
};

void CheckKeys(const json& j, std::initializer_list<const char*> allowed,
               const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw ConfigError("unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
void Read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string FormatDouble(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string JoinTokens(const std::vector<TokenId>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(tokens[i]);
  }
  return out;
}

std::ofstream OpenForWrite(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void CloseChecked(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void EnsureDir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  }
}

json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("'" + path.string() + "': " + e.what());
  }
}

}  // namespace

Method ParseMethod(const std::string& name) {
  for (const auto& [m, n] : kMethodNames) {
    if (name == n) return m;
  }
  throw ConfigError("unknown method '" + name + "'");
}

std::string ToString(Method method) {
  for (const auto& [m, n] : kMethodNames) {
    if (m == method) return n;
  }
  return "inference_guard";
}

// ---------------------------------------------------------------------------
// Worlds

json SyntheticWorldParams::ToJson() const {
  return {{"kind", "synthetic"},
          {"seed", seed},
          {"vocab_size", vocab_size},
          {"model_kind", model_kind},
          {"ngram_order", ngram_order},
          {"recurrent_width", recurrent_width},
          {"logit_scale", logit_scale},
          {"eos_bias", eos_bias},
          {"num_forbidden", num_forbidden},
          {"forbidden_weight", forbidden_weight},
          {"context_multiplier", context_multiplier},
          {"num_targets", num_targets},
          {"target_overlap", target_overlap},
          {"reward", reward},
          {"length_penalty", length_penalty},
          {"num_prompts", num_prompts},
          {"prompt_len_min", prompt_len_min},
          {"prompt_len_max", prompt_len_max}};
}

SyntheticWorldParams SyntheticWorldParams::FromJson(const json& j) {
  CheckKeys(j,
            {"kind", "seed", "vocab_size", "model_kind", "ngram_order",
             "recurrent_width", "logit_scale", "eos_bias", "num_forbidden",
             "forbidden_weight", "context_multiplier", "num_targets",
             "target_overlap", "reward", "length_penalty", "num_prompts",
             "prompt_len_min", "prompt_len_max"},
            "world");
  SyntheticWorldParams p;
  Read(j, "seed", p.seed);
  Read(j, "vocab_size", p.vocab_size);
  Read(j, "model_kind", p.model_kind);
  Read(j, "ngram_order", p.ngram_order);
  Read(j, "recurrent_width", p.recurrent_width);
  Read(j, "logit_scale", p.logit_scale);
  Read(j, "eos_bias", p.eos_bias);
  Read(j, "num_forbidden", p.num_forbidden);
  Read(j, "forbidden_weight", p.forbidden_weight);
  Read(j, "context_multiplier", p.context_multiplier);
  Read(j, "num_targets", p.num_targets);
  Read(j, "target_overlap", p.target_overlap);
  Read(j, "reward", p.reward);
  Read(j, "length_penalty", p.length_penalty);
  Read(j, "num_prompts", p.num_prompts);
  Read(j, "prompt_len_min", p.prompt_len_min);
  Read(j, "prompt_len_max", p.prompt_len_max);
  return p;
}

std::shared_ptr<const GenerativeModel> GenerativeModelFromJson(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ngram") return std::make_shared<NGramModel>(NGramModel::FromJson(j));
  if (kind == "recurrent") {
    return std::make_shared<TinyRecurrentModel>(TinyRecurrentModel::FromJson(j));
  }
  throw ConfigError("unknown model kind '" + kind + "'");
}

json GenerativeModelToJson(const GenerativeModel& model) {
  if (const auto* ng = dynamic_cast<const NGramModel*>(&model)) return ng->ToJson();
  if (const auto* rnn = dynamic_cast<const TinyRecurrentModel*>(&model)) {
    return rnn->ToJson();
  }
  throw ConfigError("only toy generative models can be serialized");
}

World MakeSyntheticWorld(const SyntheticWorldParams& p, const CmdpSpec& spec) {
  spec.Validate();
  if (p.vocab_size < 3) throw ConfigError("synthetic vocab_size must be >= 3");
  const int v = p.vocab_size;
  const TokenId eos = v - 1;
  if (p.num_forbidden < 0 || p.num_forbidden > v - 2) {
    throw ConfigError("num_forbidden must leave at least one free non-eos token");
  }
  if (p.num_targets < 0 || p.prompt_len_min < 0 ||
      p.prompt_len_max < p.prompt_len_min || p.num_prompts < 0) {
    throw ConfigError("invalid synthetic world sizes");
  }
  const Vocabulary vocab(v, eos);
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> normal(0.0, p.logit_scale);

  World world;
  if (p.model_kind == "ngram") {
    if (p.ngram_order < 1) throw ConfigError("ngram_order must be >= 1");
    std::size_t rows = 1;
    for (int i = 1; i < p.ngram_order; ++i) rows *= static_cast<std::size_t>(v + 1);
    std::vector<double> table(rows * static_cast<std::size_t>(v));
    for (std::size_t r = 0; r < rows; ++r) {
      for (int c = 0; c < v; ++c) {
        table[r * v + c] = normal(rng) + (c == eos ? p.eos_bias : 0.0);
      }
    }
    world.model = std::make_shared<NGramModel>(p.ngram_order, vocab, std::move(table));
  } else if (p.model_kind == "recurrent") {
    TinyRecurrentModel base =
        TinyRecurrentModel::Random(vocab, p.recurrent_width, rng(), p.logit_scale);
    TinyRecurrentModel::Weights w = base.weights();
    w.bias_out[eos] += p.eos_bias;
    world.model = std::make_shared<TinyRecurrentModel>(vocab, p.recurrent_width,
                                                       std::move(w));
  } else {
    throw ConfigError("unknown model_kind '" + p.model_kind + "'");
  }

  std::vector<TokenId> ids(static_cast<std::size_t>(v - 1));
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<double> weights(static_cast<std::size_t>(v), 0.0);
  for (int i = 0; i < p.num_forbidden; ++i) weights[ids[i]] = p.forbidden_weight;
  world.safety = std::make_shared<LexiconSafetyCost>(weights, p.context_multiplier);

  std::vector<TokenId> targets;
  const int first = p.target_overlap ? 0 : p.num_forbidden;
  for (int i = 0; i < p.num_targets && first + i < v - 1; ++i) {
    targets.push_back(ids[first + i]);
  }
  std::sort(targets.begin(), targets.end());
  world.task = std::make_shared<TargetTaskCost>(targets, p.reward,
                                                p.length_penalty, spec.max_len_T);

  std::uniform_int_distribution<int> len(p.prompt_len_min, p.prompt_len_max);
  std::uniform_int_distribution<TokenId> tok(0, v - 2);
  for (int i = 0; i < p.num_prompts; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "p%04d", i);
    Prompt prompt{id, {}};
    const int n = len(rng);
    for (int k = 0; k < n; ++k) prompt.tokens.push_back(tok(rng));
    world.prompts.push_back(std::move(prompt));
  }
  return world;
}

namespace {

bool FeasibleFrom(const AugmentedState& aug, const World& world,
                  const CmdpSpec& spec, long long& budget) {
  if (!(aug.safety.z > 0.0)) return false;
  if (aug.seq.terminated) return true;
  if (--budget < 0) return false;
  const Vocabulary& vocab = world.model->vocab();
  std::vector<std::pair<double, TokenId>> order;
  for (TokenId y = 0; y < vocab.size(); ++y) {
    order.emplace_back(world.safety->Cost(aug.seq, y), y);
  }
  std::sort(order.begin(), order.end());
  for (const auto& [cost, y] : order) {
    if (FeasibleFrom(AugmentedTransition(aug, y, *world.safety, vocab, spec),
                     world, spec, budget)) {
      return true;
    }
  }
  return false;
}

}  // namespace

bool PromptFeasible(std::span<const TokenId> prompt, const World& world,
                    const CmdpSpec& spec) {
  long long budget = 1'000'000;
  return FeasibleFrom(
      InitAugmented(std::vector<TokenId>(prompt.begin(), prompt.end()), spec),
      world, spec, budget);
}

// ---------------------------------------------------------------------------
// Run configuration

void RunConfig::Validate() const {
  spec.Validate();
  if (method == Method::kInferenceGuard || method == Method::kBeamLagrangian ||
      method == Method::kBeamAugmented) {
    search.Validate();
  }
  if (method == Method::kBonLagrangian || method == Method::kBonAugmented) {
    bon.Validate();
  }
  if (method == Method::kArgs) args.Validate();
  if (!(lagrangian_lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (num_workers < 1) throw ConfigError("num_workers must be >= 1");
  if (!world.is_object() || !world.contains("kind")) {
    throw ConfigError("world needs a kind");
  }
}

json RunConfig::ToJson() const {
  return {{"schema_version", kRunConfigSchemaVersion},
          {"method", ToString(method)},
          {"seed", seed},
          {"spec",
           {{"gamma", spec.gamma},
            {"budget_d", spec.budget_d},
            {"max_len_T", spec.max_len_T}}},
          {"search",
           {{"num_beams", search.num_beams},
            {"block_len", search.block_len},
            {"max_depth", search.max_depth},
            {"top_k", search.top_k},
            {"max_retry", search.max_retry},
            {"penalty_n", search.penalty_n},
            {"diversity_n2", search.diversity_n2},
            {"eta", search.eta},
            {"score_kind", ToString(search.score_kind)},
            {"temperature", search.temperature},
            {"exhaustive", search.exhaustive},
            {"num_threads", search.num_threads}}},
          {"bon",
           {{"num_samples", bon.num_samples},
            {"temperature", bon.temperature},
            {"penalty_n", bon.penalty_n}}},
          {"lagrangian_lambda", lagrangian_lambda},
          {"args",
           {{"omega", args.omega}, {"lambda", args.lambda}, {"width", args.width}}},
          {"world", world},
          {"prompts", prompts_path},
          {"critic", critic_path},
          {"out_dir", out_dir},
          {"num_workers", num_workers}};
}

RunConfig RunConfig::FromJson(const json& j) {
  CheckKeys(j,
            {"schema_version", "method", "seed", "spec", "search", "bon",
             "lagrangian_lambda", "args", "world", "prompts", "critic",
             "out_dir", "num_workers"},
            "run config");
  const int version = j.value("schema_version", 0);
  if (version != kRunConfigSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(version));
  }
  RunConfig c;
  try {
    if (j.contains("method")) c.method = ParseMethod(j.at("method").get<std::string>());
    Read(j, "seed", c.seed);
    if (j.contains("spec")) {
      const json& s = j.at("spec");
      CheckKeys(s, {"gamma", "budget_d", "max_len_T"}, "spec");
      Read(s, "gamma", c.spec.gamma);
      Read(s, "budget_d", c.spec.budget_d);
      Read(s, "max_len_T", c.spec.max_len_T);
    }
    if (j.contains("search")) {
      const json& s = j.at("search");
      CheckKeys(s,
                {"num_beams", "block_len", "max_depth", "top_k", "max_retry",
                 "penalty_n", "diversity_n2", "eta", "score_kind", "temperature",
                 "exhaustive", "num_threads"},
                "search");
      Read(s, "num_beams", c.search.num_beams);
      Read(s, "block_len", c.search.block_len);
      Read(s, "max_depth", c.search.max_depth);
      Read(s, "top_k", c.search.top_k);
      Read(s, "max_retry", c.search.max_retry);
      Read(s, "penalty_n", c.search.penalty_n);
      Read(s, "diversity_n2", c.search.diversity_n2);
      Read(s, "eta", c.search.eta);
      if (s.contains("score_kind")) {
        c.search.score_kind = ParseScoreKind(s.at("score_kind").get<std::string>());
      }
      Read(s, "temperature", c.search.temperature);
      Read(s, "exhaustive", c.search.exhaustive);
      Read(s, "num_threads", c.search.num_threads);
    }
    if (j.contains("bon")) {
      const json& s = j.at("bon");
      CheckKeys(s, {"num_samples", "temperature", "penalty_n"}, "bon");
      Read(s, "num_samples", c.bon.num_samples);
      Read(s, "temperature", c.bon.temperature);
      Read(s, "penalty_n", c.bon.penalty_n);
    }
    Read(j, "lagrangian_lambda", c.lagrangian_lambda);
    if (j.contains("args")) {
      const json& s = j.at("args");
      CheckKeys(s, {"omega", "lambda", "width"}, "args");
      Read(s, "omega", c.args.omega);
      Read(s, "lambda", c.args.lambda);
      Read(s, "width", c.args.width);
    }
    if (j.contains("world")) c.world = j.at("world");
    Read(j, "prompts", c.prompts_path);
    Read(j, "critic", c.critic_path);
    Read(j, "out_dir", c.out_dir);
    Read(j, "num_workers", c.num_workers);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  c.Validate();
  return c;
}

void ApplySeedOverride(RunConfig& config) {
  const char* env = std::getenv("SAUTE_SEED");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') {
    throw ConfigError(std::string("SAUTE_SEED is not an integer: ") + env);
  }
  config.seed = v;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  RunConfig c = RunConfig::FromJson(ReadJsonFile(path));
  ApplySeedOverride(c);
  return c;
}

World LoadWorld(const RunConfig& config) {
  const std::string kind = config.world.at("kind").get<std::string>();
  World world;
  if (kind == "synthetic") {
    world = MakeSyntheticWorld(SyntheticWorldParams::FromJson(config.world),
                               config.spec);
  } else if (kind == "files") {
    CheckKeys(config.world, {"kind", "model", "safety", "task"}, "world");
    world.model = GenerativeModelFromJson(
        ReadJsonFile(config.world.at("model").get<std::string>()));
    world.safety = std::make_shared<LexiconSafetyCost>(LexiconSafetyCost::FromJson(
        ReadJsonFile(config.world.at("safety").get<std::string>())));
    world.task = std::make_shared<TargetTaskCost>(TargetTaskCost::FromJson(
        ReadJsonFile(config.world.at("task").get<std::string>())));
  } else {
    throw ConfigError("unknown world kind '" + kind + "'");
  }
  if (!config.prompts_path.empty()) {
    world.prompts = ReadPromptsJsonl(config.prompts_path, world.model->vocab());
  } else if (kind != "synthetic") {
    throw ConfigError("a prompts file is required for file-based worlds");
  }
  return world;
}

// ---------------------------------------------------------------------------
// Running

json PromptResult::ToJson() const {
  return {{"id", id},
          {"prompt", prompt},
          {"tokens", tokens},
          {"score", score},
          {"z_trace", z_trace},
          {"rounds_used", rounds_used},
          {"beams_penalized", beams_penalized},
          {"unterminated", unterminated},
          {"task_cost", task_cost},
          {"discounted_safety_cost", discounted_safety_cost},
          {"raw_safety_cost", raw_safety_cost}};
}

PromptResult PromptResult::FromJson(const json& j) {
  PromptResult r;
  try {
    r.id = j.at("id").get<std::string>();
    r.prompt = j.at("prompt").get<std::vector<TokenId>>();
    r.tokens = j.at("tokens").get<std::vector<TokenId>>();
    r.score = j.at("score").get<double>();
    r.z_trace = j.at("z_trace").get<std::vector<double>>();
    r.rounds_used = j.at("rounds_used").get<int>();
    r.beams_penalized = j.at("beams_penalized").get<int>();
    r.unterminated = j.at("unterminated").get<bool>();
    r.task_cost = j.at("task_cost").get<double>();
    r.discounted_safety_cost = j.at("discounted_safety_cost").get<double>();
    r.raw_safety_cost = j.at("raw_safety_cost").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("result row: ") + e.what());
  }
  return r;
}

namespace {

PromptResult DecodeOne(const RunConfig& config, const World& world,
                       const CriticNet* critic, const Prompt& prompt) {
  const DecodeContext ctx{*world.model, *world.safety, *world.task, config.spec};
  const std::uint64_t seed = StreamSeed({config.seed, Fnv1a64(prompt.id)});
  PromptResult r;
  r.id = prompt.id;
  r.prompt = prompt.tokens;
  const auto start = std::chrono::steady_clock::now();
  AugmentedState best;
  auto take_search = [&](SearchResult s) {
    best = std::move(s.best);
    r.score = s.score;
    r.rounds_used = s.rounds_used;
    r.beams_penalized = s.beams_penalized;
    r.unterminated = s.unterminated;
  };
  SearchConfig search = config.search;
  search.seed = seed;
  BonConfig bon = config.bon;
  bon.seed = seed;
  const LagrangianSelector lag{config.lagrangian_lambda};
  switch (config.method) {
    case Method::kInferenceGuard:
      take_search(InferenceGuard(prompt.tokens, search, ctx, critic));
      break;
    case Method::kBeamLagrangian:
      take_search(BeamSearchBaseline(prompt.tokens, search, lag, ctx));
      break;
    case Method::kBeamAugmented:
      take_search(BeamSearchBaseline(prompt.tokens, search, AugmentedSelector{}, ctx));
      break;
    case Method::kBonLagrangian:
    case Method::kBonAugmented: {
      const Selector sel = config.method == Method::kBonLagrangian
                               ? Selector(lag)
                               : Selector(AugmentedSelector{});
      BonResult b = BestOfN(prompt.tokens, bon, sel, ctx);
      best = std::move(b.best);
      r.score = b.score;
      r.rounds_used = 1;
      break;
    }
    case Method::kArgs: {
      ArgsResult a = ArgsDecode(prompt.tokens, config.args, ctx);
      best = std::move(a.best);
      r.score = LagrangianScore(best, *world.task, config.args.lambda,
                                config.spec.gamma);
      break;
    }
  }
  const auto stop = std::chrono::steady_clock::now();
  r.wall_time_s = std::chrono::duration<double>(stop - start).count();
  r.tokens = best.seq.generated;
  r.task_cost = best.seq.terminated ? world.task->Terminal(best.seq)
                                    : world.task->Partial(best.seq);
  r.discounted_safety_cost = DiscountedSum(best.step_costs, config.spec.gamma);
  r.raw_safety_cost = std::accumulate(best.step_costs.begin(),
                                      best.step_costs.end(), 0.0);
  r.z_trace = ZTrace(best, config.spec);
  return r;
}

}  // namespace

std::vector<PromptResult> RunExperiment(const RunConfig& config,
                                        const World& world,
                                        const CriticNet* critic) {
  config.Validate();
  if (!world.model || !world.safety || !world.task) {
    throw ConfigError("world is incomplete");
  }
  const bool augmented = config.method == Method::kInferenceGuard ||
                         config.method == Method::kBeamAugmented ||
                         config.method == Method::kBonAugmented;
  if (augmented) {
    const double n = config.method == Method::kBonAugmented
                         ? config.bon.penalty_n
                         : config.search.penalty_n;
    ReshapedCostParams{n}.ValidateAgainst(world.task->Bound());
  }
  if (config.method == Method::kInferenceGuard &&
      config.search.score_kind != ScoreKind::kInter && critic == nullptr) {
    throw ConfigError("score kind '" + ToString(config.search.score_kind) +
                      "' requires a critic");
  }
  const std::size_t n = world.prompts.size();
  std::vector<PromptResult> results(n);
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(config.num_workers),
                            std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      results[i] = DecodeOne(config, world, critic, world.prompts[i]);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t i = next++; i < n; i = next++) {
              results[i] = DecodeOne(config, world, critic, world.prompts[i]);
            }
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  std::stable_sort(results.begin(), results.end(),
                   [](const PromptResult& a, const PromptResult& b) {
                     return a.id < b.id;
                   });
  return results;
}

std::vector<PromptResult> RunExperiment(const RunConfig& config) {
  const World world = LoadWorld(config);
  std::optional<CriticNet> critic;
  if (!config.critic_path.empty()) critic = LoadCheckpoint(config.critic_path);
  return RunExperiment(config, world, critic ? &*critic : nullptr);
}

// ---------------------------------------------------------------------------
// Metrics and reports

json MetricsReport::ToJson() const {
  return {{"method", method},
          {"lambda", lambda},
          {"budget", budget},
          {"num_beams", num_beams},
          {"num_prompts", num_prompts},
          {"avg_reward", avg_reward},
          {"avg_cost_discounted", avg_cost_discounted},
          {"avg_cost_raw_sum", avg_cost_raw_sum},
          {"safety_rate", safety_rate}};
}

MetricsReport ComputeMetrics(const std::vector<PromptResult>& results,
                             const CmdpSpec& spec) {
  if (results.empty()) throw ContractViolation("no results to summarize");
  MetricsReport m;
  m.budget = spec.budget_d;
  m.num_prompts = results.size();
  std::size_t safe = 0;
  for (const PromptResult& r : results) {
    m.avg_reward += -r.task_cost;
    m.avg_cost_discounted += r.discounted_safety_cost;
    m.avg_cost_raw_sum += r.raw_safety_cost;
    m.mean_wall_time_s += r.wall_time_s;
    if (r.discounted_safety_cost <= spec.budget_d) ++safe;
  }
  const double count = static_cast<double>(results.size());
  m.avg_reward /= count;
  m.avg_cost_discounted /= count;
  m.avg_cost_raw_sum /= count;
  m.mean_wall_time_s /= count;
  m.safety_rate = static_cast<double>(safe) / count;
  return m;
}

MetricsReport ComputeMetrics(const std::vector<PromptResult>& results,
                             const RunConfig& config) {
  MetricsReport m = ComputeMetrics(results, config.spec);
  m.method = ToString(config.method);
  switch (config.method) {
    case Method::kBonLagrangian:
    case Method::kBeamLagrangian:
      m.lambda = config.lagrangian_lambda;
      break;
    case Method::kArgs:
      m.lambda = config.args.lambda;
      break;
    default:
      m.lambda = 0.0;
  }
  switch (config.method) {
    case Method::kBonLagrangian:
    case Method::kBonAugmented:
      m.num_beams = config.bon.num_samples;
      break;
    case Method::kArgs:
      m.num_beams = config.args.width;
      break;
    default:
      m.num_beams = config.search.num_beams;
  }
  return m;
}

namespace {

constexpr const char* kParetoHeader =
    "method,lambda,budget,num_beams,avg_reward,safety_rate,"
    "avg_cost_discounted,avg_cost_raw_sum\n";

std::string ParetoLine(const MetricsReport& m) {
  return m.method + "," + FormatDouble(m.lambda) + "," + FormatDouble(m.budget) +
         "," + std::to_string(m.num_beams) + "," + FormatDouble(m.avg_reward) +
         "," + FormatDouble(m.safety_rate) + "," +
         FormatDouble(m.avg_cost_discounted) + "," +
         FormatDouble(m.avg_cost_raw_sum) + "\n";
}

}  // namespace

void EmitReport(const MetricsReport& report,
                const std::vector<PromptResult>& results,
                const std::filesystem::path& out_dir) {
  EnsureDir(out_dir);
  {
    const auto path = out_dir / "metrics.json";
    auto out = OpenForWrite(path);
    out << report.ToJson().dump(2) << "\n";
    CloseChecked(out, path);
  }
  {
    const auto path = out_dir / "rows.csv";
    auto out = OpenForWrite(path);
    out << "id,tokens,score,task_cost,reward,discounted_safety_cost,"
           "raw_safety_cost,safe,unterminated,rounds_used,beams_penalized,"
           "final_z\n";
    for (const PromptResult& r : results) {
      const bool safe = r.discounted_safety_cost <= report.budget;
      out << r.id << "," << JoinTokens(r.tokens) << "," << FormatDouble(r.score)
          << "," << FormatDouble(r.task_cost) << ","
          << FormatDouble(-r.task_cost) << ","
          << FormatDouble(r.discounted_safety_cost) << ","
          << FormatDouble(r.raw_safety_cost) << "," << (safe ? 1 : 0) << ","
          << (r.unterminated ? 1 : 0) << "," << r.rounds_used << ","
          << r.beams_penalized << ","
          << FormatDouble(r.z_trace.empty() ? 0.0 : r.z_trace.back()) << "\n";
    }
    CloseChecked(out, path);
  }
  {
    const auto path = out_dir / "results.jsonl";
    auto out = OpenForWrite(path);
    for (const PromptResult& r : results) out << r.ToJson().dump() << "\n";
    CloseChecked(out, path);
  }
  {
    const auto path = out_dir / "pareto.csv";
    auto out = OpenForWrite(path);
    out << kParetoHeader << ParetoLine(report);
    CloseChecked(out, path);
  }
  {
    const auto path = out_dir / "timing.json";
    auto out = OpenForWrite(path);
    json rows = json::object();
    for (const PromptResult& r : results) rows[r.id] = r.wall_time_s;
    out << json{{"mean_wall_time_s", report.mean_wall_time_s},
                {"wall_time_s", rows}}
               .dump(2)
        << "\n";
    CloseChecked(out, path);
  }
}

// ---------------------------------------------------------------------------
// Sweeps

std::vector<RunConfig> ExpandSweep(const json& j) {
  std::vector<RunConfig> configs;
  if (j.contains("configs")) {
    CheckKeys(j, {"configs"}, "sweep");
    for (const json& c : j.at("configs")) configs.push_back(RunConfig::FromJson(c));
    return configs;
  }
  CheckKeys(j, {"base", "grid"}, "sweep");
  const RunConfig base = RunConfig::FromJson(j.at("base"));
  const json grid = j.value("grid", json::object());
  CheckKeys(grid, {"method", "lambda", "budget", "num_beams"}, "grid");
  auto axis = [&](const char* key, json fallback) {
    std::vector<json> values;
    if (grid.contains(key)) {
      for (const json& v : grid.at(key)) values.push_back(v);
    }
    if (values.empty()) values.push_back(std::move(fallback));
    return values;
  };
  const auto methods = axis("method", ToString(base.method));
  const auto lambdas = axis("lambda", base.lagrangian_lambda);
  const auto budgets = axis("budget", base.spec.budget_d);
  const auto beams = axis("num_beams", nullptr);
  for (const json& m : methods) {
    for (const json& l : lambdas) {
      for (const json& b : budgets) {
        for (const json& n : beams) {
          RunConfig c = base;
          c.method = ParseMethod(m.get<std::string>());
          c.lagrangian_lambda = l.get<double>();
          c.args.lambda = l.get<double>();
          c.spec.budget_d = b.get<double>();
          if (!n.is_null()) {
            const int nb = n.get<int>();
            c.search.num_beams = nb;
            c.search.top_k = std::max(1, nb / 4);
            c.bon.num_samples = nb;
          }
          c.Validate();
          configs.push_back(std::move(c));
        }
      }
    }
  }
  return configs;
}

std::vector<SweepEntry> Sweep(const std::vector<RunConfig>& configs) {
  std::vector<SweepEntry> entries;
  for (const RunConfig& c : configs) {
    SweepEntry e{c, std::nullopt, ""};
    try {
      e.report = ComputeMetrics(RunExperiment(c), c);
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void WritePareto(const std::vector<SweepEntry>& entries,
                 const std::filesystem::path& path) {
  auto out = OpenForWrite(path);
  out << kParetoHeader;
  for (const SweepEntry& e : entries) {
    if (e.report) out << ParetoLine(*e.report);
  }
  CloseChecked(out, path);
}

void EmitSweep(const std::vector<SweepEntry>& entries,
               const std::filesystem::path& out_dir) {
  EnsureDir(out_dir);
  json records = json::array();
  for (const SweepEntry& e : entries) {
    json r = {{"method", ToString(e.config.method)},
              {"lambda", e.config.lagrangian_lambda},
              {"budget", e.config.spec.budget_d},
              {"num_beams", e.config.search.num_beams}};
    if (e.report) {
      r["metrics"] = e.report->ToJson();
    } else {
      r["error"] = e.error;
    }
    records.push_back(std::move(r));
  }
  const auto path = out_dir / "sweep.json";
  auto out = OpenForWrite(path);
  out << records.dump(2) << "\n";
  CloseChecked(out, path);
  WritePareto(entries, out_dir / "pareto.csv");
}

}  // namespace saute
