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


// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "saute/augment.h"
#include "saute/baselines.h"
#include "saute/critic.h"
#include "saute/harness.h"
#include "saute/instance.h"
#include "saute/oracle.h"
#include "saute/rng.h"
#include "saute/search.h"
#include "saute/toy_models.h"

namespace saute {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c, d);
  return buf;
}

InstanceSizeParams SmallSizes() {
  InstanceSizeParams size;
  size.vocab_max = 5;
  size.horizon_max = 6;
  return size;
}

// Feasible generated instances, in seed order.
std::vector<FiniteAugmentedMDP> FeasibleFamily(std::size_t count,
                                               const InstanceSizeParams& size) {
  std::vector<FiniteAugmentedMDP> out;
  for (std::uint64_t s = 0; out.size() < count; ++s) {
    FiniteAugmentedMDP m = MakeInstance(s, size);
    if (ProbeFeasible(m)) out.push_back(std::move(m));
  }
  return out;
}

// 1. Optimal augmented policy is almost surely safe when its value is < n.
Outcome AlmostSureSafety() {
  const auto start = Clock::now();
  const auto family = FeasibleFamily(200, SmallSizes());
  int exceptions = 0, below_n = 0;
  for (const auto& m : family) {
    auto table = std::make_shared<ValueTable>(SolveValueIteration(m));
    // Uniform over ties covers every optimal action, not just one of them.
    const SafetyVerdict v =
        VerifyAlmostSureSafety(m, *OptimalPolicy(table, TieMode::kUniformOverTies));
    if (v.value < m.params.n) {
      ++below_n;
      if (!v.all_safe) ++exceptions;
    }
    if (!v.implication_holds) ++exceptions;
  }
  const double secs = Seconds(start);
  return {exceptions == 0 && below_n == 200 && secs < 120.0,
          Fmt("%.0f feasible instances, %.0f with value < n, %.0f exceptions, %.1f s",
              static_cast<double>(family.size()), below_n, exceptions, secs)};
}

// 2. Bellman residual and monotone convergence in n.
Outcome ResidualAndMonotone() {
  const auto start = Clock::now();
  std::vector<FiniteAugmentedMDP> family;
  for (std::uint64_t s = 0; family.size() < 100; ++s) {
    family.push_back(MakeInstance(s, SmallSizes()));
  }
  double worst = 0.0;
  for (const auto& m : family) worst = std::max(worst, SolveValueIteration(m).BellmanResidual());
  const MonotoneReport mono = VerifyMonotoneConvergence(family, {1.0, 10.0, 1e2, 1e3, 1e4});
  const double secs = Seconds(start);
  return {worst <= 1e-9 && mono.ok && secs < 120.0,
          Fmt("100 instances, max residual %.2e, monotone ", worst) +
              (mono.ok ? "yes" : "no: " + mono.failure) + Fmt(", %.1f s", secs)};
}

// 3. Latent greedy policy equals token greedy policy; lossy map is caught.
Outcome LatentEquivalence() {
  const auto family = FeasibleFamily(50, SmallSizes());
  int ok = 0;
  std::size_t nodes = 0;
  for (const auto& m : family) {
    const auto r = VerifyLatentEquivalence(m, ReplayMap(m.model));
    ok += r.ok;
    nodes += r.histories;
  }
  int lossy_caught = 0;
  for (const auto& m : family) {
    const auto model = m.model;
    const LatentMap lossy = [model](const TokenSequence& seq) {
      TokenSequence cut = seq;
      if (!cut.generated.empty()) cut.generated.pop_back();
      cut.terminated = false;
      return ReplayLatent(*model, cut);
    };
    const auto r = VerifyLatentEquivalence(m, lossy);
    if (!r.ok && !r.counterexample.empty()) ++lossy_caught;
  }
  return {ok == 50 && lossy_caught > 0,
          Fmt("%.0f/50 instances match over %.0f histories; lossy map rejected on %.0f",
              ok, static_cast<double>(nodes), lossy_caught)};
}

// 4. Exhaustive search reaches the oracle root value.
Outcome ExhaustiveSearch() {
  InstanceSizeParams size;
  size.vocab_max = 4;
  size.horizon_max = 5;
  const auto family = FeasibleFamily(50, size);
  int match = 0;
  double worst = 0.0;
  for (const auto& m : family) {
    const double root = SolveValueIteration(m).root_value();
    SearchConfig cfg;
    cfg.exhaustive = true;
    cfg.block_len = m.horizon();
    cfg.max_depth = m.horizon();
    cfg.num_beams = 1;
    cfg.top_k = 1;
    cfg.max_retry = 1;
    cfg.penalty_n = m.params.n;
    const DecodeContext ctx{*m.model, *m.safety, *m.task, m.spec};
    const SearchResult r = InferenceGuard(m.prompt, cfg, ctx);
    const double cost = DiscountedReshapedCost(r.best, m.params, *m.task, m.spec.gamma);
    const double err = std::abs(cost - root);
    worst = std::max(worst, err);
    match += err <= 1e-9 && !r.unterminated;
  }
  return {match == 50, Fmt("%.0f/50 feasible instances, max |cost - root| %.2e", match, worst)};
}

RunConfig BenchmarkConfig() {
  return LoadRunConfig(fs::path(SAUTE_SOURCE_DIR) / "configs" / "benchmark.json");
}

// 5. Safety-rate ordering on the frozen benchmark.
Outcome MethodOrdering() {
  RunConfig base = BenchmarkConfig();
  base.seed = 0;
  const World world = LoadWorld(base);
  std::size_t feasible = 0;
  for (const auto& p : world.prompts) feasible += PromptFeasible(p.tokens, world, base.spec);
  const double feas = static_cast<double>(feasible) / static_cast<double>(world.prompts.size());
  auto rate = [&](Method m) {
    RunConfig c = base;
    c.method = m;
    return ComputeMetrics(RunExperiment(c, world), c).safety_rate;
  };
  const double ig = rate(Method::kInferenceGuard);
  const double aug = rate(Method::kBeamAugmented);
  const double lag = rate(Method::kBeamLagrangian);
  const bool pass = world.prompts.size() == 200 && feas >= 0.95 && ig >= aug &&
                    aug >= lag && ig >= 0.95;
  return {pass, Fmt("feasible %.3f; safety IG %.3f >= beam_aug %.3f >= beam_lag(5) %.3f",
                    feas, ig, aug, lag)};
}

// 6. Critic gradients, separable accuracy and label soundness.
Outcome CriticSuite() {
  std::mt19937_64 rng(0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> zd(-2.0, 2.0);
  auto separable = [&](std::size_t n) {
    std::vector<TrainingSample> out;
    for (std::size_t i = 0; i < n; ++i) {
      TrainingSample s;
      s.h = {g(rng), g(rng)};
      s.o = {g(rng)};
      s.z = zd(rng);
      if (std::abs(s.z) < 0.1) s.z = s.z < 0 ? -0.1 : 0.1;
      s.label_safe = s.z > 0;
      s.label_cost = 0.5;
      out.push_back(std::move(s));
    }
    return out;
  };
  const auto batch = separable(8);
  const GradCheckResult grad = GradCheck(CriticNet(4, 16, 1), batch, 1e-5, 200, 0);

  const auto train = separable(400);
  const auto held = separable(400);
  TrainConfig tc;
  tc.learning_rate = 0.05;
  tc.epochs = 60;
  const CriticNet net = TrainCritic(CriticNet(4, 16, 7), train, tc).net;
  int correct = 0;
  for (const auto& s : held) correct += (net.Forward(s.h, s.o, s.z).p_safe > 0.5) == s.label_safe;
  const double acc = correct / static_cast<double>(held.size());

  // Label soundness: replay every rollout and compare labels exactly.
  RunConfig base = BenchmarkConfig();
  const World world = LoadWorld(base);
  McConfig mc;
  mc.rollouts_per_prompt = 20;
  const McDataset data =
      GenerateMcDataset(*world.model, *world.safety, *world.task, world.prompts, mc, base.spec);
  std::size_t checked = 0, wrong = 0;
  for (const auto& s : data.samples) {
    if (checked == 10000) break;
    ++checked;
    const AugmentedState& roll = data.rollouts[s.rollout];
    TokenSequence seq = MakeSequence(roll.seq.prompt);
    SafetyState z = InitBudget(base.spec), z_at_step = z;
    for (std::size_t k = 0; k < roll.seq.generated.size(); ++k) {
      const TokenId y = roll.seq.generated[k];
      z = AdvanceSafetyState(z, world.safety->Cost(seq, y), base.spec.gamma);
      seq = Transition(seq, y, world.model->vocab(), base.spec);
      if (static_cast<int>(k) + 1 == s.step) z_at_step = z;
    }
    const double cost = std::pow(base.spec.gamma, static_cast<double>(seq.length())) *
                        world.task->Terminal(seq);
    if (s.label_safe != (z.z > 0.0) || s.label_cost != cost || s.z != z_at_step.z ||
        !(seq == roll.seq)) {
      ++wrong;
    }
  }
  const bool pass = grad.max_relative_error < 1e-4 && acc >= 0.95 && checked == 10000 &&
                    wrong == 0;
  return {pass, Fmt("grad rel err %.2e; held-out accuracy %.3f; labels %.0f/%.0f exact",
                    grad.max_relative_error, acc, static_cast<double>(checked - wrong),
                    static_cast<double>(checked))};
}

// 7. Penalized (position, token) pairs are essentially never resampled.
Outcome DiversityPenalty() {
  constexpr int kV = 5, kBlock = 4, kDraws = 100000;
  FrequencyMatrix freq(kBlock, kV);
  std::mt19937_64 rng(7);
  // Two penalized tokens per position, chosen at random.
  for (int pos = 1; pos <= kBlock; ++pos) {
    std::vector<TokenId> ids = {0, 1, 2, 3, 4};
    std::shuffle(ids.begin(), ids.end(), rng);
    freq.Increment(pos, ids[0]);
    freq.Increment(pos, ids[1]);
    freq.Increment(pos, ids[1]);
  }
  std::normal_distribution<double> g(0.0, 2.0);
  int hits = 0;
  for (int i = 0; i < kDraws; ++i) {
    const int pos = 1 + i % kBlock;
    std::vector<double> logits(kV);
    for (double& l : logits) l = g(rng);
    const TokenId y = SampleToken(PenalizedLogits(logits, freq, pos, 1e3), 1.0, rng);
    hits += freq.At(pos, y) > 0;
  }
  const double rate = hits / static_cast<double>(kDraws);
  return {rate < 1e-4, Fmt("%.0f of %.0f draws hit a penalized pair (rate %.1e)", hits,
                           static_cast<double>(kDraws), rate)};
}

// 8. Augmented beam baseline equals single-round guarded search.
Outcome BeamEquivalence() {
  RunConfig base = BenchmarkConfig();
  const World world = LoadWorld(base);
  const DecodeContext ctx{*world.model, *world.safety, *world.task, base.spec};
  int same = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    SearchConfig cfg = base.search;
    cfg.seed = StreamSeed({base.seed, Fnv1a64(world.prompts[i].id)});
    cfg.max_retry = 1;
    cfg.score_kind = ScoreKind::kInter;
    const auto ig = InferenceGuard(world.prompts[i].tokens, cfg, ctx);
    const auto beam = BeamSearchBaseline(world.prompts[i].tokens, cfg, AugmentedSelector{}, ctx);
    same += ig.best.seq == beam.best.seq;
  }
  return {same == 50, Fmt("%.0f/50 prompts token-for-token identical", same)};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 9. Safety-rate fixture and byte-stable reports.
Outcome MetricsFidelity() {
  CmdpSpec spec;  // d = 10
  std::vector<PromptResult> rows(4);
  const double costs[] = {0.0, 10.0, 11.0, 3.5};
  for (int i = 0; i < 4; ++i) {
    rows[i].id = "r" + std::to_string(i);
    rows[i].discounted_safety_cost = costs[i];
    rows[i].raw_safety_cost = costs[i];
  }
  const double fixture = ComputeMetrics(rows, spec).safety_rate;

  const RunConfig c = BenchmarkConfig();
  const fs::path root = fs::temp_directory_path() / "saute_acceptance";
  fs::remove_all(root);
  for (const char* d : {"a", "b"}) {
    const auto res = RunExperiment(c);
    EmitReport(ComputeMetrics(res, c), res, root / d);
  }
  bool stable = true;
  for (const char* f : {"metrics.json", "rows.csv", "results.jsonl", "pareto.csv"}) {
    const std::string a = Slurp(root / "a" / f);
    stable = stable && !a.empty() && a == Slurp(root / "b" / f);
  }
  return {fixture == 0.75 && stable,
          Fmt("fixture rate %.2f (want 0.75); reports byte-stable: ", fixture) +
              (stable ? "yes" : "no")};
}

}  // namespace
}  // namespace saute

int main() {
  using saute::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"almost-sure safety of the optimal augmented policy", saute::AlmostSureSafety},
      {"Bellman residual and monotone convergence in n", saute::ResidualAndMonotone},
      {"latent-space greedy equals token-space greedy", saute::LatentEquivalence},
      {"exhaustive guarded search matches the oracle", saute::ExhaustiveSearch},
      {"safety-rate ordering on the synthetic benchmark", saute::MethodOrdering},
      {"critic gradients, accuracy and label soundness", saute::CriticSuite},
      {"diversity penalty suppresses resampling", saute::DiversityPenalty},
      {"augmented beam search equals single-round guard", saute::BeamEquivalence},
      {"safety-rate fixture and byte-stable reports", saute::MetricsFidelity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %zu: %s (%s)\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
