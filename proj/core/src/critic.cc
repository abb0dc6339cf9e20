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

#include "saute/critic.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "saute/errors.h"
#include "saute/rng.h"

namespace saute {

using nlohmann::json;

namespace {

constexpr double kProbFloor = 1e-15;

struct Layout {
  std::size_t w1, b1, w2, b2, u, c, v, e, total;

  Layout(int input, int hidden) {
    const std::size_t i = static_cast<std::size_t>(input);
    const std::size_t h = static_cast<std::size_t>(hidden);
    w1 = 0;
    b1 = w1 + h * i;
    w2 = b1 + h;
    b2 = w2 + h * h;
    u = b2 + h;
    c = u + h;
    v = c + 1;
    e = v + h;
    total = e + 1;
  }
};

double Sigmoid(double s) {
  if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
  const double es = std::exp(s);
  return es / (1.0 + es);
}

// log(1 + exp(s)) without overflow.
double Softplus(double s) {
  return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

}  // namespace

struct CriticNet::Activations {
  std::vector<double> a1;
  std::vector<double> a2;
  double logit = 0.0;
  double cost = 0.0;
};

CriticNet::CriticNet(int input_dim, int hidden, std::uint64_t seed)
    : input_dim_(input_dim), hidden_(hidden) {
  if (input_dim < 1 || hidden < 1) {
    throw ConfigError("critic dimensions must be positive");
  }
  const Layout L(input_dim, hidden);
  theta_.assign(L.total, 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> in_scale(0.0, 1.0 / std::sqrt(input_dim));
  std::normal_distribution<double> hid_scale(0.0, 1.0 / std::sqrt(hidden));
  for (std::size_t k = L.w1; k < L.b1; ++k) theta_[k] = in_scale(rng);
  for (std::size_t k = L.w2; k < L.b2; ++k) theta_[k] = hid_scale(rng);
  for (std::size_t k = L.u; k < L.c; ++k) theta_[k] = hid_scale(rng);
  for (std::size_t k = L.v; k < L.e; ++k) theta_[k] = hid_scale(rng);
}

CriticNet CriticNet::ForLatent(const LatentState& example, int hidden,
                               std::uint64_t seed) {
  return CriticNet(static_cast<int>(example.h.size() + example.o.size() + 1),
                   hidden, seed);
}

void CriticNet::ZeroHeads() {
  const Layout L(input_dim_, hidden_);
  std::fill(theta_.begin() + static_cast<std::ptrdiff_t>(L.u), theta_.end(), 0.0);
}

std::vector<double> CriticNet::Input(std::span<const double> h,
                                     std::span<const double> o,
                                     double z) const {
  if (static_cast<int>(h.size() + o.size() + 1) != input_dim_) {
    throw ContractViolation("critic expects " + std::to_string(input_dim_) +
                            " inputs, got " +
                            std::to_string(h.size() + o.size() + 1));
  }
  if (!AllFinite(h) || !AllFinite(o) || !std::isfinite(z)) {
    throw ContractViolation("critic input must be finite");
  }
  std::vector<double> x;
  x.reserve(static_cast<std::size_t>(input_dim_));
  x.insert(x.end(), h.begin(), h.end());
  x.insert(x.end(), o.begin(), o.end());
  x.push_back(z);
  return x;
}

void CriticNet::Run(std::span<const double> x, Activations& act) const {
  const Layout L(input_dim_, hidden_);
  const std::size_t in = static_cast<std::size_t>(input_dim_);
  const std::size_t hid = static_cast<std::size_t>(hidden_);
  act.a1.resize(hid);
  act.a2.resize(hid);
  for (std::size_t r = 0; r < hid; ++r) {
    double acc = theta_[L.b1 + r];
    const double* row = &theta_[L.w1 + r * in];
    for (std::size_t k = 0; k < in; ++k) acc += row[k] * x[k];
    act.a1[r] = std::tanh(acc);
  }
  for (std::size_t r = 0; r < hid; ++r) {
    double acc = theta_[L.b2 + r];
    const double* row = &theta_[L.w2 + r * hid];
    for (std::size_t k = 0; k < hid; ++k) acc += row[k] * act.a1[k];
    act.a2[r] = std::tanh(acc);
  }
  act.logit = theta_[L.c];
  act.cost = theta_[L.e];
  for (std::size_t k = 0; k < hid; ++k) {
    act.logit += theta_[L.u + k] * act.a2[k];
    act.cost += theta_[L.v + k] * act.a2[k];
  }
}

CriticOutput CriticNet::Forward(std::span<const double> h,
                                std::span<const double> o, double z) const {
  const std::vector<double> x = Input(h, o, z);
  Activations act;
  Run(x, act);
  const double p = std::clamp(Sigmoid(act.logit), kProbFloor, 1.0 - kProbFloor);
  return CriticOutput{p, act.cost};
}

double SampleLoss(const CriticOutput& out, const TrainingSample& sample) {
  const double y = sample.label_safe ? 1.0 : 0.0;
  const double bce = -(y * std::log(out.p_safe) + (1.0 - y) * std::log1p(-out.p_safe));
  const double diff = out.cost - sample.label_cost;
  return bce + diff * diff;
}

double CriticNet::Loss(std::span<const TrainingSample> batch) const {
  if (batch.empty()) throw ContractViolation("loss of an empty batch");
  double total = 0.0;
  Activations act;
  for (const auto& s : batch) {
    Run(Input(s.h, s.o, s.z), act);
    const double y = s.label_safe ? 1.0 : 0.0;
    const double diff = act.cost - s.label_cost;
    total += Softplus(act.logit) - y * act.logit + diff * diff;
  }
  return total / static_cast<double>(batch.size());
}

double CriticNet::LossAndGradient(std::span<const TrainingSample> batch,
                                  std::vector<double>& grad) const {
  if (batch.empty()) throw ContractViolation("loss of an empty batch");
  const Layout L(input_dim_, hidden_);
  const std::size_t in = static_cast<std::size_t>(input_dim_);
  const std::size_t hid = static_cast<std::size_t>(hidden_);
  grad.assign(theta_.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  Activations act;
  std::vector<double> d2(hid), d1(hid);
  for (const auto& s : batch) {
    const std::vector<double> x = Input(s.h, s.o, s.z);
    Run(x, act);
    const double y = s.label_safe ? 1.0 : 0.0;
    const double diff = act.cost - s.label_cost;
    total += Softplus(act.logit) - y * act.logit + diff * diff;

    const double d_logit = (Sigmoid(act.logit) - y) * scale;
    const double d_cost = 2.0 * diff * scale;
    grad[L.c] += d_logit;
    grad[L.e] += d_cost;
    for (std::size_t k = 0; k < hid; ++k) {
      grad[L.u + k] += d_logit * act.a2[k];
      grad[L.v + k] += d_cost * act.a2[k];
      const double da2 = d_logit * theta_[L.u + k] + d_cost * theta_[L.v + k];
      d2[k] = da2 * (1.0 - act.a2[k] * act.a2[k]);
    }
    std::fill(d1.begin(), d1.end(), 0.0);
    for (std::size_t r = 0; r < hid; ++r) {
      grad[L.b2 + r] += d2[r];
      double* grow = &grad[L.w2 + r * hid];
      const double* trow = &theta_[L.w2 + r * hid];
      for (std::size_t k = 0; k < hid; ++k) {
        grow[k] += d2[r] * act.a1[k];
        d1[k] += trow[k] * d2[r];
      }
    }
    for (std::size_t r = 0; r < hid; ++r) {
      const double da1 = d1[r] * (1.0 - act.a1[r] * act.a1[r]);
      grad[L.b1 + r] += da1;
      double* grow = &grad[L.w1 + r * in];
      for (std::size_t k = 0; k < in; ++k) grow[k] += da1 * x[k];
    }
  }
  return total * scale;
}

json CriticNet::ToJson() const {
  return json{{"input_dim", input_dim_}, {"hidden", hidden_}, {"theta", theta_}};
}

CriticNet CriticNet::FromJson(const json& j) {
  CriticNet net(j.at("input_dim").get<int>(), j.at("hidden").get<int>(), 0);
  auto theta = j.at("theta").get<std::vector<double>>();
  if (theta.size() != net.theta_.size()) {
    throw ConfigError("critic parameter vector has the wrong length");
  }
  net.theta_ = std::move(theta);
  return net;
}

// ---------------------------------------------------------------------------
// Monte-Carlo targets

McDataset GenerateMcDataset(const GenerativeModel& model,
                            const SafetyCostModel& safety,
                            const TaskCostModel& task,
                            const std::vector<Prompt>& prompts,
                            const McConfig& mc, const CmdpSpec& spec) {
  if (mc.rollouts_per_prompt < 1) {
    throw ContractViolation("rollouts_per_prompt must be >= 1");
  }
  spec.Validate();
  McDataset data;
  for (std::size_t p = 0; p < prompts.size(); ++p) {
    for (int r = 0; r < mc.rollouts_per_prompt; ++r) {
      std::mt19937_64 rng(StreamSeed({mc.seed, p, static_cast<std::uint64_t>(r)}));
      AugmentedState aug = InitAugmented(prompts[p].tokens, spec);
      auto [latent, logits] = ModelInit(model, prompts[p].tokens);
      const std::size_t first = data.samples.size();
      const std::size_t rollout = data.rollouts.size();
      while (!aug.seq.terminated) {
        const TokenId y = SampleToken(logits, mc.temperature, rng);
        aug = AugmentedTransition(aug, y, safety, model.vocab(), spec);
        std::tie(latent, logits) = ModelStep(model, latent, y);
        TrainingSample s;
        s.h = latent.h;
        s.o = latent.o;
        s.z = aug.safety.z;
        s.rollout = rollout;
        s.step = aug.safety.step;
        data.samples.push_back(std::move(s));
      }
      const double horizon =
          mc.discount == TerminalDiscount::kRealized
              ? static_cast<double>(aug.seq.length())
              : static_cast<double>(spec.max_len_T);
      const double label_cost =
          std::pow(spec.gamma, horizon) * EvalTaskCost(task, aug.seq);
      const bool label_safe = aug.safety.z > 0.0;
      for (std::size_t k = first; k < data.samples.size(); ++k) {
        data.samples[k].label_safe = label_safe;
        data.samples[k].label_cost = label_cost;
      }
      data.rollouts.push_back(std::move(aug));
    }
  }
  return data;
}

// ---------------------------------------------------------------------------
// Training

json TrainConfig::ToJson() const {
  return json{{"learning_rate", learning_rate},
              {"epochs", epochs},
              {"batch_size", batch_size},
              {"gamma", gamma},
              {"seed", seed}};
}

std::string TrainConfig::Hash() const {
  const std::string text = ToJson().dump();
  std::ostringstream out;
  out << std::hex << Fnv1a64(text);
  return out.str();
}

TrainResult TrainCritic(CriticNet net, std::span<const TrainingSample> dataset,
                        const TrainConfig& config) {
  if (dataset.empty()) throw ContractViolation("training dataset is empty");
  if (!(config.learning_rate > 0.0) || config.epochs < 0 ||
      config.batch_size < 1) {
    throw ConfigError("invalid training configuration");
  }
  TrainResult result{std::move(net), {}};
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);
  std::vector<double> grad;
  std::vector<TrainingSample> batch;
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      batch.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + bs); ++k) {
        batch.push_back(dataset[order[k]]);
      }
      const double loss = result.net.LossAndGradient(batch, grad);
      if (!std::isfinite(loss)) {
        throw TrainingError("critic loss diverged at epoch " +
                            std::to_string(epoch) + ", batch starting at " +
                            std::to_string(start) + " (lr=" +
                            std::to_string(config.learning_rate) + ")");
      }
      auto theta = result.net.params();
      for (std::size_t k = 0; k < theta.size(); ++k) {
        theta[k] -= config.learning_rate * grad[k];
      }
    }
    const double epoch_loss = result.net.Loss(dataset);
    if (!std::isfinite(epoch_loss)) {
      throw TrainingError("critic loss is not finite after epoch " +
                          std::to_string(epoch));
    }
    result.loss_curve.push_back(epoch_loss);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Gradient check

GradCheckResult GradCheckAgainst(const CriticNet& net,
                                 std::span<const TrainingSample> batch,
                                 std::span<const double> analytic, double eps,
                                 std::size_t min_components,
                                 std::uint64_t seed) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw ContractViolation("finite-difference step must lie in [1e-7, 1e-3]");
  }
  if (analytic.size() != net.num_params()) {
    throw ContractViolation("analytic gradient has the wrong length");
  }
  std::vector<std::size_t> indices(net.num_params());
  std::iota(indices.begin(), indices.end(), 0);
  if (indices.size() > min_components) {
    std::mt19937_64 rng(seed);
    std::shuffle(indices.begin(), indices.end(), rng);
    indices.resize(min_components);
    std::sort(indices.begin(), indices.end());
  }
  CriticNet probe = net;
  GradCheckResult result;
  for (std::size_t k : indices) {
    const double saved = probe.params()[k];
    probe.params()[k] = saved + eps;
    const double up = probe.Loss(batch);
    probe.params()[k] = saved - eps;
    const double down = probe.Loss(batch);
    probe.params()[k] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double abs_err = std::abs(numeric - analytic[k]);
    const double denom =
        std::max(std::abs(numeric) + std::abs(analytic[k]), kGradCheckFloor);
    result.max_absolute_error = std::max(result.max_absolute_error, abs_err);
    result.max_relative_error = std::max(result.max_relative_error, abs_err / denom);
    ++result.components;
  }
  return result;
}

GradCheckResult GradCheck(const CriticNet& net,
                          std::span<const TrainingSample> batch, double eps,
                          std::size_t min_components, std::uint64_t seed) {
  std::vector<double> grad;
  net.LossAndGradient(batch, grad);
  return GradCheckAgainst(net, batch, grad, eps, min_components, seed);
}

// ---------------------------------------------------------------------------
// Files

void SaveCheckpoint(const std::filesystem::path& path, const CriticNet& net,
                    const TrainConfig& config) {
  json j = net.ToJson();
  j["version"] = 1;
  j["train_config"] = config.ToJson();
  j["config_hash"] = config.Hash();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << j.dump(2) << "\n";
}

CriticNet LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const json j = json::parse(in);
  if (j.value("version", 0) != 1) {
    throw ConfigError("unsupported checkpoint version in " + path.string());
  }
  return CriticNet::FromJson(j);
}

void WriteDatasetJsonl(const std::filesystem::path& path,
                       std::span<const TrainingSample> samples) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset " + path.string());
  for (const auto& s : samples) {
    out << json{{"h", s.h},
                {"o", s.o},
                {"z", s.z},
                {"label_safe", s.label_safe},
                {"label_cost", s.label_cost},
                {"rollout", s.rollout},
                {"step", s.step}}
               .dump()
        << "\n";
  }
}

std::vector<TrainingSample> ReadDatasetJsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  std::vector<TrainingSample> samples;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    TrainingSample s;
    s.h = j.at("h").get<std::vector<double>>();
    s.o = j.at("o").get<std::vector<double>>();
    s.z = j.at("z").get<double>();
    s.label_safe = j.at("label_safe").get<bool>();
    s.label_cost = j.at("label_cost").get<double>();
    s.rollout = j.value("rollout", std::size_t{0});
    s.step = j.value("step", 0);
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace saute
