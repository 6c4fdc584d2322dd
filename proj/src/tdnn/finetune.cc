// tdnn/finetune.cc

// Copyright 2026  affectkit authors

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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "affect/tdnn.h"

namespace affect {

void FinetuneConfig::Validate() const {
  if (!(lr_initial > 0.0) || !(lr_final > 0.0) || lr_final > lr_initial)
    Fail("finetune: need 0 < lr_final <= lr_initial, got ", lr_final, " and ", lr_initial);
  if (batch_size < 1) Fail("finetune: batch_size must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) Fail("finetune: dropout must be in [0, 1)");
  if (epochs < 1) Fail("finetune: epochs must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) Fail("finetune: momentum must be in [0, 1)");
  if (!(first_six_lr_multiplier >= 0.0)) Fail("finetune: first_six_lr_multiplier must be >= 0");
}

double FinetuneConfig::LearningRate(std::int64_t step, std::int64_t num_steps) const {
  if (num_steps <= 1) return lr_initial;
  const double frac = static_cast<double>(step) / static_cast<double>(num_steps - 1);
  if (step == num_steps - 1) return lr_final;
  return lr_initial * std::pow(lr_final / lr_initial, frac);
}

double FinetuneConfig::LayerLearningRate(double lr, int layer_number) const {
  if (layer_number < 1 || layer_number > 6) return lr;
  return first_six_lr >= 0.0 ? first_six_lr : lr * first_six_lr_multiplier;
}

nlohmann::json FinetuneConfig::ToJson() const {
  return {{"lr_initial", lr_initial},
          {"lr_final", lr_final},
          {"batch_size", batch_size},
          {"dropout", dropout},
          {"epochs", epochs},
          {"momentum", momentum},
          {"first_six_lr_multiplier", first_six_lr_multiplier},
          {"first_six_lr", first_six_lr},
          {"add_layer8", add_layer8},
          {"noise_aug", noise_aug},
          {"seed", seed}};
}

FinetuneConfig FinetuneConfig::FromJson(const nlohmann::json &j) {
  FinetuneConfig c;
  if (!j.is_object()) Fail("finetune config must be a JSON object");
  for (const auto &[key, value] : j.items()) {
    try {
      if (key == "lr_initial") c.lr_initial = value.get<double>();
      else if (key == "lr_final") c.lr_final = value.get<double>();
      else if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "dropout") c.dropout = value.get<double>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "momentum") c.momentum = value.get<double>();
      else if (key == "first_six_lr_multiplier") c.first_six_lr_multiplier = value.get<double>();
      else if (key == "first_six_lr") c.first_six_lr = value.get<double>();
      else if (key == "add_layer8") c.add_layer8 = value.get<bool>();
      else if (key == "noise_aug") c.noise_aug = value.get<bool>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else Fail("finetune: unknown config key '", key, "'");
    } catch (const nlohmann::json::exception &e) {
      Fail("finetune: bad value for '", key, "': ", e.what());
    }
  }
  c.Validate();
  return c;
}

nlohmann::json TrainingLog::ToJson() const {
  nlohmann::json ep = nlohmann::json::array();
  for (const Epoch &e : epochs)
    ep.push_back({{"epoch", e.epoch},
                  {"mean_loss", e.mean_loss},
                  {"lr_first", e.lr_first},
                  {"lr_last", e.lr_last},
                  {"steps", e.steps}});
  return {{"epochs", ep},
          {"num_steps", step_lr.size()},
          {"final_lr", step_lr.empty() ? 0.0 : step_lr.back()},
          {"skipped_short", skipped_short}};
}

TdnnModel Finetune(const TdnnModel &model, const std::vector<TrainingExample> &data,
                   const FinetuneConfig &cfg, TrainingLog *log, int threads) {
  cfg.Validate();
  if (data.empty()) Fail("finetune: empty dataset");
  TrainingLog local;
  TrainingLog &out_log = log ? *log : local;
  out_log = TrainingLog{};

  std::vector<TdnnModel::Sample> samples;
  samples.reserve(data.size());
  for (const TrainingExample &ex : data) {
    if (ex.label < 0 || ex.label >= model.NumClasses())
      Fail("finetune: utterance '", ex.feats.id, "' has label ", ex.label, " but the head has ",
           model.NumClasses(), " classes");
    if (ex.feats.Dim() != model.InputDim())
      Fail("finetune: utterance '", ex.feats.id, "' has dim ", ex.feats.Dim(), ", model expects ",
           model.InputDim());
    if (ex.feats.NumFrames() < model.ReceptiveField()) {
      ++out_log.skipped_short;
      continue;
    }
    samples.push_back({ToFrames<float>(ex.feats), ex.label});
  }
  if (samples.empty())
    Fail("finetune: every utterance is shorter than the receptive field (",
         model.ReceptiveField(), " frames)");

  TdnnModel net = model;
  const std::int64_t n = static_cast<std::int64_t>(samples.size());
  const std::int64_t per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::int64_t num_steps = per_epoch * cfg.epochs;
  GradientSet velocity = net.ZeroGradients();
  std::vector<int> layer_number(net.NumLayers());
  for (int i = 0; i < net.NumLayers(); ++i) layer_number[i] = net.LayerNumber(i);

  std::vector<std::int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(DeriveSeed(cfg.seed, "shuffle"));
  std::int64_t step = 0;
  std::vector<TdnnModel::Sample> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    TrainingLog::Epoch ep;
    ep.epoch = epoch + 1;
    double loss_sum = 0.0;
    for (std::int64_t start = 0; start < n; start += cfg.batch_size, ++step) {
      batch.clear();
      for (std::int64_t k = start; k < std::min(n, start + cfg.batch_size); ++k)
        batch.push_back(samples[order[k]]);
      float loss = 0.0f;
      const GradientSet grads =
          net.ComputeGradients(batch, cfg.dropout, DeriveSeed(cfg.seed, StrCat("step:", step)),
                               &loss, threads);
      if (!std::isfinite(loss) || !grads.AllFinite())
        Fail<NumericalError>("finetune: non-finite loss at epoch ", epoch + 1, ", step ", step,
                             " (loss ", loss, ")");
      const double lr = cfg.LearningRate(step, num_steps);
      out_log.step_lr.push_back(lr);
      if (ep.steps == 0) ep.lr_first = lr;
      ep.lr_last = lr;
      ++ep.steps;
      loss_sum += static_cast<double>(loss) * batch.size();

      const float mu = static_cast<float>(cfg.momentum);
      for (int i = 0; i < net.NumLayers(); ++i) {
        if (!net.spec(i).HasParams()) continue;
        velocity.dW[i] = mu * velocity.dW[i] + grads.dW[i];
        velocity.db[i] = mu * velocity.db[i] + grads.db[i];
        const double layer_lr = cfg.LayerLearningRate(lr, layer_number[i]);
        if (layer_lr == 0.0) continue;
        net.W(i) -= static_cast<float>(layer_lr) * velocity.dW[i];
        net.b(i) -= static_cast<float>(layer_lr) * velocity.db[i];
      }
    }
    ep.mean_loss = loss_sum / n;
    out_log.epochs.push_back(ep);
  }
  if (!net.AllFinite()) Fail<NumericalError>("finetune: parameters became non-finite");
  net.metadata()["finetune"] = cfg.ToJson();
  return net;
}

}  // namespace affect
