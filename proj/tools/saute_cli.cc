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

// saute: command-line driver.
//
//   saute decode --config run.json --prompts prompts.jsonl --out out/
//   saute gen-dataset --config run.json --out data.jsonl
//   saute train-critic --dataset data.jsonl --out critic.json
//   saute solve-oracle --seed 7
//   saute verify-theorems --instances 200
//   saute sweep --config sweep.json --out sweep/
//   saute report --config run.json --results out/results.jsonl --out report/

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "saute/critic.h"
#include "saute/errors.h"
#include "saute/harness.h"
#include "saute/instance.h"
#include "saute/oracle.h"
#include "saute/toy_models.h"

namespace {

using json = nlohmann::json;
using namespace saute;

json ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return json::parse(in);
}

int Decode(const std::string& config_path, const std::string& prompts,
           const std::string& out, const std::string& method,
           const std::string& critic) {
  RunConfig config = LoadRunConfig(config_path);
  if (!prompts.empty()) config.prompts_path = prompts;
  if (!out.empty()) config.out_dir = out;
  if (!method.empty()) config.method = ParseMethod(method);
  if (!critic.empty()) config.critic_path = critic;
  if (config.out_dir.empty()) throw ConfigError("no output directory given");
  config.Validate();
  const std::vector<PromptResult> results = RunExperiment(config);
  const MetricsReport report = ComputeMetrics(results, config);
  EmitReport(report, results, config.out_dir);
  std::cout << report.ToJson().dump(2) << "\n";
  return 0;
}

int GenDataset(const std::string& config_path, const std::string& out,
               int rollouts, const std::string& discount) {
  const RunConfig config = LoadRunConfig(config_path);
  const World world = LoadWorld(config);
  McConfig mc;
  mc.rollouts_per_prompt = rollouts;
  mc.seed = config.seed;
  if (discount == "horizon") {
    mc.discount = TerminalDiscount::kHorizon;
  } else if (discount != "realized") {
    throw ConfigError("--discount must be realized or horizon");
  }
  const McDataset data = GenerateMcDataset(*world.model, *world.safety,
                                           *world.task, world.prompts, mc,
                                           config.spec);
  WriteDatasetJsonl(out, data.samples);
  std::size_t safe = 0;
  for (const auto& s : data.samples) safe += s.label_safe ? 1 : 0;
  std::cout << "wrote " << data.samples.size() << " samples from "
            << data.rollouts.size() << " rollouts (" << safe
            << " labelled safe) to " << out << "\n";
  return 0;
}

int TrainCriticCmd(const std::string& dataset, const std::string& out,
                   TrainConfig tc, int hidden) {
  const std::vector<TrainingSample> samples = ReadDatasetJsonl(dataset);
  if (samples.empty()) throw ConfigError("dataset '" + dataset + "' is empty");
  const LatentState example{samples.front().h, samples.front().o};
  CriticNet net = CriticNet::ForLatent(example, hidden, tc.seed);
  const TrainResult result = TrainCritic(std::move(net), samples, tc);
  SaveCheckpoint(out, result.net, tc);
  std::size_t correct = 0;
  for (const auto& s : samples) {
    const bool pred = result.net.Forward(s.h, s.o, s.z).p_safe > 0.5;
    correct += pred == s.label_safe ? 1 : 0;
  }
  std::cout << "final loss "
            << (result.loss_curve.empty() ? 0.0 : result.loss_curve.back())
            << ", train sign accuracy "
            << static_cast<double>(correct) / samples.size() << ", config "
            << tc.Hash() << "\n";
  return 0;
}

int SolveOracle(std::optional<std::uint64_t> seed, const std::string& instance,
                const std::string& dump, double tol) {
  FiniteAugmentedMDP mdp;
  if (!instance.empty()) {
    mdp = InstanceFromJson(ReadJson(instance));
  } else {
    mdp = MakeInstance(seed.value_or(0));
  }
  if (!dump.empty()) {
    std::ofstream out(dump);
    if (!out) throw IoError("cannot open '" + dump + "' for writing");
    out << InstanceToString(mdp) << "\n";
  }
  auto table = std::make_shared<ValueTable>(SolveValueIteration(mdp, tol));
  const auto policy = OptimalPolicy(table);
  std::vector<TokenId> path;
  while (!table->nodes()[*table->Find(path)].terminal) {
    path.push_back(policy->Action(path));
  }
  AugmentedState aug = InitAugmented(mdp.prompt, mdp.spec);
  for (TokenId y : path) {
    aug = AugmentedTransition(aug, y, *mdp.safety, mdp.vocab(), mdp.spec);
  }
  const json report = {
      {"vocab_size", mdp.vocab().size()},
      {"horizon", mdp.horizon()},
      {"gamma", mdp.spec.gamma},
      {"budget_d", mdp.spec.budget_d},
      {"penalty_n", mdp.params.n},
      {"feasible", ProbeFeasible(mdp)},
      {"nodes", table->nodes().size()},
      {"sweeps", table->sweeps},
      {"bellman_residual", table->bellman_residual},
      {"root_value", table->root_value()},
      {"greedy_trajectory", path},
      {"greedy_safe", TrajectorySatisfiesConstraint(aug.step_costs, mdp.spec)}};
  std::cout << report.dump(2) << "\n";
  return 0;
}

int VerifyTheorems(int count, std::uint64_t seed) {
  InstanceSizeParams size;
  size.vocab_max = 5;
  size.horizon_max = 6;
  std::vector<FiniteAugmentedMDP> family;
  int safety_fail = 0, residual_fail = 0, latent_fail = 0, checked = 0;
  for (std::uint64_t s = seed; checked < count; ++s) {
    FiniteAugmentedMDP mdp = MakeInstance(s, size);
    if (!ProbeFeasible(mdp)) continue;
    ++checked;
    auto table = std::make_shared<ValueTable>(SolveValueIteration(mdp));
    if (table->BellmanResidual() > 1e-9) ++residual_fail;
    const SafetyVerdict v =
        VerifyAlmostSureSafety(mdp, *OptimalPolicy(table, TieMode::kUniformOverTies));
    if (!v.implication_holds) {
      ++safety_fail;
      std::cerr << "almost-sure safety violated on seed " << s << "\n";
    }
    if (!VerifyLatentEquivalence(mdp, ReplayMap(mdp.model)).ok) ++latent_fail;
    family.push_back(std::move(mdp));
  }
  const MonotoneReport mono =
      VerifyMonotoneConvergence(family, {1.0, 10.0, 1e2, 1e3, 1e4});
  std::cout << "instances           " << checked << "\n"
            << "almost-sure safety  " << (safety_fail ? "FAIL" : "ok") << "\n"
            << "bellman residual    " << (residual_fail ? "FAIL" : "ok") << "\n"
            << "monotone in n       " << (mono.ok ? "ok" : "FAIL " + mono.failure)
            << "\n"
            << "latent equivalence  " << (latent_fail ? "FAIL" : "ok") << "\n";
  return safety_fail || residual_fail || latent_fail || !mono.ok ? 1 : 0;
}

int SweepCmd(const std::string& config_path, const std::string& out) {
  json j = ReadJson(config_path);
  std::vector<RunConfig> configs = ExpandSweep(j);
  for (RunConfig& c : configs) ApplySeedOverride(c);
  const std::vector<SweepEntry> entries = Sweep(configs);
  EmitSweep(entries, out);
  int failed = 0;
  for (const auto& e : entries) {
    if (!e.report) {
      ++failed;
      std::cerr << ToString(e.config.method) << ": " << e.error << "\n";
    }
  }
  std::cout << entries.size() - failed << " of " << entries.size()
            << " configs completed; results in " << out << "\n";
  return 0;
}

int Report(const std::string& config_path, const std::string& results_path,
           const std::string& out) {
  const RunConfig config = LoadRunConfig(config_path);
  std::ifstream in(results_path);
  if (!in) throw IoError("cannot open '" + results_path + "'");
  std::vector<PromptResult> results;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    results.push_back(PromptResult::FromJson(json::parse(line)));
  }
  const MetricsReport report = ComputeMetrics(results, config);
  EmitReport(report, results, out);
  std::cout << report.ToJson().dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safety-augmented constrained decoding toolkit"};
  app.require_subcommand(1);

  std::string config, prompts, out, method, critic;
  auto* decode = app.add_subcommand("decode", "Decode a prompt set and write reports");
  decode->add_option("--config", config, "Run config (JSON)")->required();
  decode->add_option("--prompts", prompts, "Prompt file (JSON lines)");
  decode->add_option("--out", out, "Output directory");
  decode->add_option("--method", method, "Decoder")
      ->check(CLI::IsMember({"inference_guard", "bon_lagrangian", "bon_augmented",
                             "beam_lagrangian", "beam_augmented", "args"}));
  decode->add_option("--critic", critic, "Critic checkpoint");

  int rollouts = 5;
  std::string discount = "realized";
  auto* gen = app.add_subcommand("gen-dataset", "Monte-Carlo critic training data");
  gen->add_option("--config", config, "Run config (JSON)")->required();
  gen->add_option("--out", out, "Dataset file (JSON lines)")->required();
  gen->add_option("--rollouts", rollouts, "Rollouts per prompt");
  gen->add_option("--discount", discount, "realized or horizon");

  std::string dataset;
  TrainConfig tc;
  int hidden = 64;
  auto* train = app.add_subcommand("train-critic", "Fit the two-head critic");
  train->add_option("--dataset", dataset, "Dataset file")->required();
  train->add_option("--out", out, "Checkpoint path")->required();
  train->add_option("--lr", tc.learning_rate, "Learning rate");
  train->add_option("--epochs", tc.epochs, "Epochs");
  train->add_option("--batch", tc.batch_size, "Batch size");
  train->add_option("--gamma", tc.gamma, "Discount");
  train->add_option("--hidden", hidden, "Trunk width");
  train->add_option("--seed", tc.seed, "Seed");

  std::optional<std::uint64_t> seed;
  std::string instance, dump;
  double tol = 1e-9;
  auto* solve = app.add_subcommand("solve-oracle", "Solve a toy instance exactly");
  solve->add_option("--seed", seed, "Generator seed");
  solve->add_option("--instance", instance, "Instance file (JSON)");
  solve->add_option("--dump", dump, "Write the instance to this file");
  solve->add_option("--tol", tol, "Value-iteration tolerance");

  int count = 200;
  std::uint64_t first_seed = 0;
  auto* verify = app.add_subcommand("verify-theorems", "Oracle checks on generated instances");
  verify->add_option("--instances", count, "Feasible instances to check");
  verify->add_option("--seed", first_seed, "First generator seed");

  auto* sweep = app.add_subcommand("sweep", "Run a grid of configs");
  sweep->add_option("--config", config, "Sweep file (JSON)")->required();
  sweep->add_option("--out", out, "Output directory")->required();

  std::string results;
  auto* report = app.add_subcommand("report", "Recompute metrics from result rows");
  report->add_option("--config", config, "Run config (JSON)")->required();
  report->add_option("--results", results, "results.jsonl")->required();
  report->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*decode) return Decode(config, prompts, out, method, critic);
    if (*gen) return GenDataset(config, out, rollouts, discount);
    if (*train) return TrainCriticCmd(dataset, out, tc, hidden);
    if (*solve) return SolveOracle(seed, instance, dump, tol);
    if (*verify) return VerifyTheorems(count, first_seed);
    if (*sweep) return SweepCmd(config, out);
    if (*report) return Report(config, results, out);
  } catch (const std::exception& e) {
    std::cerr << "saute: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
