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

// Two-head latent critic.
//
// Input is [h, o, z] (z enters through an identity embedding). A two-layer
// tanh trunk feeds
//   f1 = sigmoid(u . a2 + c)  probability that the budget survives (z_T > 0)
//   f2 = v . a2 + e           estimate of gamma^T c_task at termination.
// Targets come from Monte-Carlo rollouts of the reference policy, so the
// penalty n never enters training and can be changed at decode time.

#ifndef SAUTE_CRITIC_H_
#define SAUTE_CRITIC_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "saute/augment.h"
#include "saute/mdp.h"
#include "saute/prompts.h"

namespace saute {

struct TrainingSample {
  std::vector<double> h;
  std::vector<double> o;
  double z = 0.0;
  bool label_safe = false;
  double label_cost = 0.0;
  /// Index into McDataset::rollouts and the step t (tokens generated).
  std::size_t rollout = 0;
  int step = 0;
};

struct CriticOutput {
  double p_safe = 0.5;
  double cost = 0.0;
};

class CriticNet {
 public:
  CriticNet(int input_dim, int hidden, std::uint64_t seed);

  static CriticNet ForLatent(const LatentState& example, int hidden,
                             std::uint64_t seed);

  int input_dim() const { return input_dim_; }
  int hidden() const { return hidden_; }
  std::size_t num_params() const { return theta_.size(); }
  std::span<double> params() { return theta_; }
  std::span<const double> params() const { return theta_; }

  /// Sets both output heads to zero so f1 = 0.5 and f2 = 0 everywhere.
  void ZeroHeads();

  /// Throws ContractViolation on non-finite input or a dimension mismatch.
  CriticOutput Forward(std::span<const double> h, std::span<const double> o,
                       double z) const;

  /// Mean over the batch of BCE(f1, label_safe) + (f2 - label_cost)^2.
  double Loss(std::span<const TrainingSample> batch) const;
  /// Same loss; writes dLoss/dtheta into grad (resized to num_params()).
  double LossAndGradient(std::span<const TrainingSample> batch,
                         std::vector<double>& grad) const;

  nlohmann::json ToJson() const;
  static CriticNet FromJson(const nlohmann::json& j);

  bool operator==(const CriticNet&) const = default;

 private:
  struct Activations;
  void Run(std::span<const double> x, Activations& act) const;
  std::vector<double> Input(std::span<const double> h,
                            std::span<const double> o, double z) const;

  int input_dim_;
  int hidden_;
  std::vector<double> theta_;
};

double SampleLoss(const CriticOutput& out, const TrainingSample& sample);

enum class TerminalDiscount {
  /// gamma^L with L the realized termination step.
  kRealized,
  /// gamma^T with T = max_len_T.
  kHorizon,
};

struct McConfig {
  int rollouts_per_prompt = 5;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  TerminalDiscount discount = TerminalDiscount::kRealized;
};

struct McDataset {
  std::vector<TrainingSample> samples;
  /// Final augmented state of every rollout.
  std::vector<AugmentedState> rollouts;
};

/// Rolls out the reference policy from every prompt and emits one sample per
/// generated step t in [1, L], with the terminal labels broadcast back.
McDataset GenerateMcDataset(const GenerativeModel& model,
                            const SafetyCostModel& safety,
                            const TaskCostModel& task,
                            const std::vector<Prompt>& prompts,
                            const McConfig& mc, const CmdpSpec& spec);

struct TrainConfig {
  double learning_rate = 1e-5;
  int epochs = 50;
  int batch_size = 8;
  double gamma = 0.999;
  std::uint64_t seed = 0;

  nlohmann::json ToJson() const;
  std::string Hash() const;
};

struct TrainResult {
  CriticNet net;
  /// Mean full-dataset loss after each epoch.
  std::vector<double> loss_curve;
};

/// Minibatch SGD. Throws TrainingError with diagnostics if the loss becomes
/// non-finite.
TrainResult TrainCritic(CriticNet net, std::span<const TrainingSample> dataset,
                        const TrainConfig& config);

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t components = 0;
};

/// Denominator floor of the relative error |a - f| / max(|a| + |f|, floor).
inline constexpr double kGradCheckFloor = 1e-6;

/// Compares `analytic` with central differences on a random subset of at
/// least min_components parameters (all of them if the net is smaller).
GradCheckResult GradCheckAgainst(const CriticNet& net,
                                 std::span<const TrainingSample> batch,
                                 std::span<const double> analytic, double eps,
                                 std::size_t min_components = 200,
                                 std::uint64_t seed = 0);

GradCheckResult GradCheck(const CriticNet& net,
                          std::span<const TrainingSample> batch, double eps,
                          std::size_t min_components = 200,
                          std::uint64_t seed = 0);

void SaveCheckpoint(const std::filesystem::path& path, const CriticNet& net,
                    const TrainConfig& config);
CriticNet LoadCheckpoint(const std::filesystem::path& path);

void WriteDatasetJsonl(const std::filesystem::path& path,
                       std::span<const TrainingSample> samples);
std::vector<TrainingSample> ReadDatasetJsonl(const std::filesystem::path& path);

}  // namespace saute

#endif  // SAUTE_CRITIC_H_
