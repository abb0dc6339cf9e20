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


#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "saute/errors.h"
#include "saute/harness.h"
#include "saute/prompts.h"

namespace saute {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kData = SAUTE_TEST_DATA_DIR;

fs::path Scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "saute_harness_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig SmallConfig() {
  std::ifstream in(kData / "small_config.json");
  return RunConfig::FromJson(json::parse(in));
}

PromptResult Row(const std::string& id, double task, double disc, double raw) {
  PromptResult r;
  r.id = id;
  r.prompt = {0};
  r.tokens = {1, 2};
  r.task_cost = task;
  r.discounted_safety_cost = disc;
  r.raw_safety_cost = raw;
  r.z_trace = {10.0, 5.0};
  return r;
}

TEST(MethodTest, NamesRoundTrip) {
  for (const char* name : {"inference_guard", "bon_lagrangian", "bon_augmented",
                           "beam_lagrangian", "beam_augmented", "args"}) {
    EXPECT_EQ(ToString(ParseMethod(name)), name);
  }
  EXPECT_THROW(ParseMethod("greedy"), ConfigError);
}

TEST(MetricsTest, AllSafe) {
  CmdpSpec spec;
  const auto m = ComputeMetrics({Row("a", -4, 1, 1), Row("b", -2, 9.5, 10)}, spec);
  EXPECT_DOUBLE_EQ(m.safety_rate, 1.0);
  EXPECT_DOUBLE_EQ(m.avg_reward, 3.0);
  EXPECT_DOUBLE_EQ(m.avg_cost_discounted, 5.25);
  EXPECT_DOUBLE_EQ(m.avg_cost_raw_sum, 5.5);
}

TEST(MetricsTest, ThreeOfFourSafe) {
  CmdpSpec spec;  // d = 10
  const auto m = ComputeMetrics(
      {Row("a", 0, 2, 2), Row("b", 0, 10, 10), Row("c", 0, 11, 11), Row("d", 0, 0, 0)}, spec);
  EXPECT_DOUBLE_EQ(m.safety_rate, 0.75);
  EXPECT_THROW(ComputeMetrics({}, spec), ContractViolation);
}

TEST(RunConfigTest, JsonRoundTrip) {
  RunConfig c = SmallConfig();
  c.method = Method::kArgs;
  c.args.omega = 1.25;
  c.search.eta = 0.5;
  const json j = c.ToJson();
  EXPECT_EQ(RunConfig::FromJson(j).ToJson(), j);
  json bad = j;
  bad["surprise"] = 1;
  EXPECT_THROW(RunConfig::FromJson(bad), ConfigError);
  bad = j;
  bad["schema_version"] = 2;
  EXPECT_THROW(RunConfig::FromJson(bad), ConfigError);
}

TEST(RunConfigTest, SeedOverride) {
  const fs::path dir = Scratch("seed");
  std::ofstream(dir / "c.json") << SmallConfig().ToJson().dump();
  ::setenv("SAUTE_SEED", "4242", 1);
  const RunConfig c = LoadRunConfig(dir / "c.json");
  ::unsetenv("SAUTE_SEED");
  EXPECT_EQ(c.seed, 4242u);
  EXPECT_EQ(LoadRunConfig(dir / "c.json").seed, 3u);
}

TEST(PromptsTest, ParsesIdsTokensAndText) {
  const auto prompts = ReadPromptsJsonl(kData / "prompts.jsonl", Vocabulary(8, 7));
  ASSERT_EQ(prompts.size(), 4u);
  EXPECT_EQ(prompts[0].id, "q03");
  EXPECT_EQ(prompts[0].tokens, (std::vector<TokenId>{2, 5}));
  EXPECT_EQ(prompts[2].tokens.size(), 2u);
  std::istringstream bad("{\"id\": \"x\"}\n");
  EXPECT_THROW(ParsePromptsJsonl(bad, Vocabulary(8, 7)), IoError);
  std::istringstream oov("{\"id\": \"x\", \"prompt\": [9]}\n");
  EXPECT_THROW(ParsePromptsJsonl(oov, Vocabulary(8, 7)), ConfigError);
}

TEST(ExperimentTest, TenPromptsTenRowsDeterministic) {
  const RunConfig c = SmallConfig();
  const auto a = RunExperiment(c);
  ASSERT_EQ(a.size(), 10u);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LT(a[i - 1].id, a[i].id);
  for (const auto& r : a) EXPECT_GT(r.wall_time_s, 0.0);
  RunConfig par = c;
  par.num_workers = 3;
  const auto b = RunExperiment(par);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].ToJson(), b[i].ToJson());
}

TEST(ExperimentTest, EveryMethodRuns) {
  for (const char* name : {"inference_guard", "bon_lagrangian", "bon_augmented",
                           "beam_lagrangian", "beam_augmented", "args"}) {
    RunConfig c = SmallConfig();
    c.method = ParseMethod(name);
    const auto rows = RunExperiment(c);
    EXPECT_EQ(rows.size(), 10u) << name;
    for (const auto& r : rows) {
      EXPECT_EQ(r.z_trace.front(), c.spec.budget_d);
      EXPECT_EQ(r.z_trace.size(), r.tokens.size() + 1);
    }
  }
}

TEST(ExperimentTest, PromptFileAndErrors) {
  RunConfig c = SmallConfig();
  c.prompts_path = (kData / "prompts.jsonl").string();
  EXPECT_EQ(RunExperiment(c).size(), 4u);
  c.prompts_path = (kData / "missing.jsonl").string();
  EXPECT_THROW(RunExperiment(c), IoError);
  RunConfig weak = SmallConfig();
  weak.search.penalty_n = 1.0;  // does not dominate the task cost
  EXPECT_THROW(RunExperiment(weak), ConfigError);
  RunConfig critic = SmallConfig();
  critic.search.score_kind = ScoreKind::kCritic;
  EXPECT_THROW(RunExperiment(critic), ConfigError);
}

TEST(ReportTest, FilesAndRecomputation) {
  const RunConfig c = SmallConfig();
  const auto rows = RunExperiment(c);
  const auto m = ComputeMetrics(rows, c);
  const fs::path dir = Scratch("report");
  EmitReport(m, rows, dir);
  for (const char* f : {"metrics.json", "rows.csv", "results.jsonl", "pareto.csv", "timing.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  // rows.csv: header plus one line per prompt.
  std::ifstream csv(dir / "rows.csv");
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 11);

  // Metrics recomputed from results.jsonl match metrics.json.
  std::vector<PromptResult> back;
  std::ifstream jl(dir / "results.jsonl");
  while (std::getline(jl, line)) back.push_back(PromptResult::FromJson(json::parse(line)));
  ASSERT_EQ(back.size(), rows.size());
  const auto again = ComputeMetrics(back, c);
  EXPECT_EQ(again.ToJson(), json::parse(Slurp(dir / "metrics.json")));
  double safe = 0;
  for (const auto& r : back) safe += r.discounted_safety_cost <= c.spec.budget_d;
  EXPECT_DOUBLE_EQ(m.safety_rate, safe / back.size());
}

TEST(ReportTest, ByteStableAcrossRuns) {
  const RunConfig c = SmallConfig();
  const fs::path a = Scratch("stable_a"), b = Scratch("stable_b");
  auto rows = RunExperiment(c);
  EmitReport(ComputeMetrics(rows, c), rows, a);
  rows = RunExperiment(c);
  EmitReport(ComputeMetrics(rows, c), rows, b);
  for (const char* f : {"metrics.json", "rows.csv", "results.jsonl", "pareto.csv"}) {
    EXPECT_EQ(Slurp(a / f), Slurp(b / f)) << f;
  }
}

TEST(SweepTest, EmptySweepWritesHeaderOnly) {
  const fs::path dir = Scratch("empty");
  WritePareto({}, dir / "pareto.csv");
  EXPECT_EQ(Slurp(dir / "pareto.csv"),
            "method,lambda,budget,num_beams,avg_reward,safety_rate,avg_cost_discounted,"
            "avg_cost_raw_sum\n");
}

TEST(SweepTest, GridExpansion) {
  const json j = {{"base", SmallConfig().ToJson()},
                  {"grid",
                   {{"method", {"bon_lagrangian", "args"}},
                    {"lambda", {0.0, 1.0, 10.0}},
                    {"num_beams", {8, 16}}}}};
  const auto configs = ExpandSweep(j);
  ASSERT_EQ(configs.size(), 12u);
  EXPECT_EQ(configs[1].search.num_beams, 16);
  EXPECT_EQ(configs[1].search.top_k, 4);
  EXPECT_EQ(configs[1].bon.num_samples, 16);
  EXPECT_DOUBLE_EQ(configs[2].lagrangian_lambda, 1.0);
  EXPECT_DOUBLE_EQ(configs[2].args.lambda, 1.0);
}

TEST(SweepTest, LambdaSweepIsMonotone) {
  // Pools are identical across lambda, so the selected cost cannot rise.
  json grid = {{"method", {"bon_lagrangian"}}, {"lambda", {0.0, 0.5, 2.0, 5.0, 50.0}}};
  const auto entries = Sweep(ExpandSweep({{"base", SmallConfig().ToJson()}, {"grid", grid}}));
  ASSERT_EQ(entries.size(), 5u);
  for (std::size_t i = 1; i < entries.size(); ++i) {
    ASSERT_TRUE(entries[i].report.has_value()) << entries[i].error;
    EXPECT_GE(entries[i].report->safety_rate, entries[i - 1].report->safety_rate);
    EXPECT_LE(entries[i].report->avg_cost_discounted,
              entries[i - 1].report->avg_cost_discounted + 1e-12);
  }
}

TEST(SweepTest, SingleConfigMatchesDirectRun) {
  const RunConfig c = SmallConfig();
  const auto entries = Sweep(ExpandSweep({{"configs", {c.ToJson()}}}));
  ASSERT_EQ(entries.size(), 1u);
  ASSERT_TRUE(entries[0].report.has_value());
  EXPECT_EQ(entries[0].report->ToJson(), ComputeMetrics(RunExperiment(c), c).ToJson());
}

TEST(SweepTest, FailuresAreRecorded) {
  RunConfig bad = SmallConfig();
  bad.prompts_path = "/nonexistent/prompts.jsonl";
  const auto entries = Sweep({bad, SmallConfig()});
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_FALSE(entries[0].report.has_value());
  EXPECT_FALSE(entries[0].error.empty());
  EXPECT_TRUE(entries[1].report.has_value());
  const fs::path dir = Scratch("sweep");
  EmitSweep(entries, dir);
  EXPECT_TRUE(fs::exists(dir / "sweep.json"));
  std::ifstream csv(dir / "pareto.csv");
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 2);
}

TEST(WorldTest, SyntheticWorldIsDeterministic) {
  SyntheticWorldParams p;
  p.num_prompts = 20;
  CmdpSpec spec;
  spec.max_len_T = 8;
  const World a = MakeSyntheticWorld(p, spec);
  const World b = MakeSyntheticWorld(p, spec);
  EXPECT_EQ(a.prompts, b.prompts);
  EXPECT_EQ(GenerativeModelToJson(*a.model), GenerativeModelToJson(*b.model));
  EXPECT_EQ(a.prompts.size(), 20u);
  EXPECT_EQ(SyntheticWorldParams::FromJson(p.ToJson()).ToJson(), p.ToJson());
  p.model_kind = "recurrent";
  const World r = MakeSyntheticWorld(p, spec);
  EXPECT_EQ(GenerativeModelToJson(*GenerativeModelFromJson(GenerativeModelToJson(*r.model))),
            GenerativeModelToJson(*r.model));
}

TEST(WorldTest, FeasibilityProbe) {
  SyntheticWorldParams p;
  p.num_prompts = 5;
  CmdpSpec spec;
  spec.budget_d = 0.5;
  spec.max_len_T = 6;
  const World w = MakeSyntheticWorld(p, spec);
  // eos is free, so every prompt can stop safely at once.
  for (const auto& pr : w.prompts) EXPECT_TRUE(PromptFeasible(pr.tokens, w, spec));
}

}  // namespace
}  // namespace saute
