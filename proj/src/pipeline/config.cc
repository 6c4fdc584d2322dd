// pipeline/config.cc

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
#include <set>

#include "affect/pipeline.h"

namespace affect {

namespace {

using nlohmann::json;

// Runs `assign(key, value)` for each entry, turning json type errors and
// unknown keys into InvalidArgument that names the section and key.
template <typename Fn>
void ForEachKey(const json &j, const char *section, Fn assign) {
  if (!j.is_object()) Fail(section, ": expected a JSON object");
  for (const auto &[key, value] : j.items()) {
    bool known = true;
    try {
      known = assign(key, value);
    } catch (const json::exception &e) {
      Fail(section, ": bad value for '", key, "': ", e.what());
    }
    if (!known) Fail(section, ": unknown config key '", key, "'");
  }
}

const char *WindowName(WindowType w) {
  switch (w) {
    case WindowType::kPovey: return "povey";
    case WindowType::kHamming: return "hamming";
    case WindowType::kHanning: return "hanning";
    case WindowType::kRectangular: return "rectangular";
  }
  return "povey";
}

WindowType ParseWindow(const std::string &s) {
  for (WindowType w : {WindowType::kPovey, WindowType::kHamming, WindowType::kHanning,
                       WindowType::kRectangular})
    if (s == WindowName(w)) return w;
  Fail("features: unknown window '", s, "'");
}

}  // namespace

json FeatureConfigToJson(const FeatureConfig &c) {
  const MfccConfig &m = c.mfcc;
  const PitchConfig &p = c.pitch;
  return {{"frame_length_ms", m.frame.frame_length_ms},
          {"frame_hop_ms", m.frame.frame_hop_ms},
          {"use_pitch", c.use_pitch},
          {"mfcc",
           {{"num_ceps", m.num_ceps},
            {"num_mel_bins", m.num_mel_bins},
            {"fft_size", m.fft_size},
            {"preemph", m.preemph},
            {"window", WindowName(m.window)},
            {"remove_dc", m.remove_dc},
            {"dither", m.dither},
            {"low_freq", m.low_freq},
            {"high_freq", m.high_freq},
            {"cepstral_lifter", m.cepstral_lifter},
            {"energy_floor", m.energy_floor}}},
          {"pitch",
           {{"min_f0", p.min_f0},
            {"max_f0", p.max_f0},
            {"silence_energy", p.silence_energy},
            {"silence_log_pitch", p.silence_log_pitch},
            {"mean_window_frames", p.mean_window_frames},
            {"delta_window", p.delta_window},
            {"lag_bias", p.lag_bias}}},
          {"cmn", {{"window_frames", c.cmn.window_frames}, {"center", c.cmn.center}}}};
}

FeatureConfig FeatureConfigFromJson(const json &j) {
  FeatureConfig c;
  ForEachKey(j, "features", [&](const std::string &k, const json &v) {
    if (k == "frame_length_ms") c.mfcc.frame.frame_length_ms = v.get<double>();
    else if (k == "frame_hop_ms") c.mfcc.frame.frame_hop_ms = v.get<double>();
    else if (k == "use_pitch") c.use_pitch = v.get<bool>();
    else if (k == "mfcc")
      ForEachKey(v, "features.mfcc", [&](const std::string &k2, const json &v2) {
        MfccConfig &m = c.mfcc;
        if (k2 == "num_ceps") m.num_ceps = v2.get<int>();
        else if (k2 == "num_mel_bins") m.num_mel_bins = v2.get<int>();
        else if (k2 == "fft_size") m.fft_size = v2.get<int>();
        else if (k2 == "preemph") m.preemph = v2.get<double>();
        else if (k2 == "window") m.window = ParseWindow(v2.get<std::string>());
        else if (k2 == "remove_dc") m.remove_dc = v2.get<bool>();
        else if (k2 == "dither") m.dither = v2.get<double>();
        else if (k2 == "low_freq") m.low_freq = v2.get<double>();
        else if (k2 == "high_freq") m.high_freq = v2.get<double>();
        else if (k2 == "cepstral_lifter") m.cepstral_lifter = v2.get<double>();
        else if (k2 == "energy_floor") m.energy_floor = v2.get<double>();
        else return false;
        return true;
      });
    else if (k == "pitch")
      ForEachKey(v, "features.pitch", [&](const std::string &k2, const json &v2) {
        PitchConfig &p = c.pitch;
        if (k2 == "min_f0") p.min_f0 = v2.get<double>();
        else if (k2 == "max_f0") p.max_f0 = v2.get<double>();
        else if (k2 == "silence_energy") p.silence_energy = v2.get<double>();
        else if (k2 == "silence_log_pitch") p.silence_log_pitch = v2.get<double>();
        else if (k2 == "mean_window_frames") p.mean_window_frames = v2.get<int>();
        else if (k2 == "delta_window") p.delta_window = v2.get<int>();
        else if (k2 == "lag_bias") p.lag_bias = v2.get<double>();
        else return false;
        return true;
      });
    else if (k == "cmn")
      ForEachKey(v, "features.cmn", [&](const std::string &k2, const json &v2) {
        if (k2 == "window_frames") c.cmn.window_frames = v2.get<int>();
        else if (k2 == "center") c.cmn.center = v2.get<bool>();
        else return false;
        return true;
      });
    else return false;
    return true;
  });
  c.pitch.frame = c.mfcc.frame;
  c.Validate(kCanonicalSampleRate);
  return c;
}

TdnnSection::TdnnSection() {
  // From-scratch training needs a larger step than fine-tuning.
  train.lr_initial = 0.02;
  train.lr_final = 0.002;
  train.dropout = 0.0;
  train.batch_size = 32;
}

json TdnnSection::ToJson() const {
  return {{"input_dim", topology.input_dim},
          {"frame_dims", topology.frame_dims},
          {"frame_contexts", topology.frame_contexts},
          {"dense_dims", topology.dense_dims},
          {"target", target},
          {"train", train.ToJson()}};
}

TdnnSection TdnnSection::FromJson(const json &j) {
  TdnnSection s;
  ForEachKey(j, "tdnn", [&](const std::string &k, const json &v) {
    if (k == "input_dim") s.topology.input_dim = v.get<int>();
    else if (k == "frame_dims") s.topology.frame_dims = v.get<std::vector<int>>();
    else if (k == "frame_contexts") s.topology.frame_contexts = v.get<std::vector<std::vector<int>>>();
    else if (k == "dense_dims") s.topology.dense_dims = v.get<std::vector<int>>();
    else if (k == "target") s.target = v.get<std::string>();
    else if (k == "train") {
      // Defaults of the section, then overrides.
      json merged = s.train.ToJson();
      if (!v.is_object()) Fail("tdnn.train: expected a JSON object");
      for (const auto &[k2, v2] : v.items()) {
        if (!merged.contains(k2)) Fail("tdnn.train: unknown config key '", k2, "'");
        merged[k2] = v2;
      }
      s.train = FinetuneConfig::FromJson(merged);
    } else return false;
    return true;
  });
  if (s.target != "canonical" && s.target != "raw" && s.target != "speaker")
    Fail("tdnn: target must be canonical, raw or speaker, got '", s.target, "'");
  TdnnTopology probe = s.topology;
  probe.num_classes = 2;
  probe.Validate();
  return s;
}

void EvalConfig::Validate() const {
  if (embedding_layer < 6) Fail("eval: embedding_layer must be a dense layer (6, 7 or 8)");
  if (folds < 2) Fail("eval: folds must be >= 2");
  if (trial_policy == TrialPolicy::kBalanced && (n_target < 0 || n_nontarget < 0 || n_target + n_nontarget == 0))
    Fail("eval: balanced trials need n_target / n_nontarget");
}

json EvalConfig::ToJson() const {
  return {{"embedding_layer", embedding_layer},
          {"label_policy", LabelPolicyName(label_policy)},
          {"trial_policy", trial_policy == TrialPolicy::kAllPairs ? "all_pairs" : "balanced"},
          {"n_target", n_target},
          {"n_nontarget", n_nontarget},
          {"speech_only", speech_only},
          {"folds", folds}};
}

EvalConfig EvalConfig::FromJson(const json &j) {
  EvalConfig c;
  ForEachKey(j, "eval", [&](const std::string &k, const json &v) {
    if (k == "embedding_layer") c.embedding_layer = v.get<int>();
    else if (k == "label_policy") c.label_policy = ParseLabelPolicy(v.get<std::string>());
    else if (k == "trial_policy") {
      const std::string p = v.get<std::string>();
      if (p == "all_pairs") c.trial_policy = TrialPolicy::kAllPairs;
      else if (p == "balanced") c.trial_policy = TrialPolicy::kBalanced;
      else Fail("eval: trial_policy must be all_pairs or balanced, got '", p, "'");
    } else if (k == "n_target") c.n_target = v.get<int>();
    else if (k == "n_nontarget") c.n_nontarget = v.get<int>();
    else if (k == "speech_only") c.speech_only = v.get<bool>();
    else if (k == "folds") c.folds = v.get<int>();
    else return false;
    return true;
  });
  c.Validate();
  return c;
}

const std::vector<std::string> &PathsConfig::Keys() {
  static const std::vector<std::string> keys = {
      "manifest", "audio_root", "features", "model",   "embeddings", "text_embeddings",
      "surrogate_pool", "backend", "trials", "scores", "predictions", "noise_list",
      "ids", "enroll_ids", "probe_ids"};
  return keys;
}

std::string PathsConfig::Get(const std::string &key) const {
  auto it = values.find(key);
  return it == values.end() ? "" : it->second;
}

void PathsConfig::Set(const std::string &key, const std::string &value) {
  if (std::find(Keys().begin(), Keys().end(), key) == Keys().end())
    Fail("paths: unknown config key '", key, "'");
  if (value.empty()) values.erase(key);
  else values[key] = value;
}

json PathsConfig::ToJson() const {
  json j = json::object();
  for (const auto &[k, v] : values) j[k] = v;
  return j;
}

PathsConfig PathsConfig::FromJson(const json &j) {
  PathsConfig p;
  ForEachKey(j, "paths", [&](const std::string &k, const json &v) {
    if (std::find(Keys().begin(), Keys().end(), k) == Keys().end()) return false;
    p.Set(k, v.get<std::string>());
    return true;
  });
  return p;
}

json PipelineConfig::ToJson() const {
  return {{"features", FeatureConfigToJson(features)},
          {"tdnn", tdnn.ToJson()},
          {"finetune", finetune.ToJson()},
          {"backend", backend.ToJson()},
          {"eval", eval.ToJson()},
          {"paths", paths.ToJson()},
          {"seed", seed}};
}

PipelineConfig PipelineConfig::FromJson(const json &j) {
  PipelineConfig c;
  ForEachKey(j, "config", [&](const std::string &k, const json &v) {
    if (k == "features") c.features = FeatureConfigFromJson(v);
    else if (k == "tdnn") c.tdnn = TdnnSection::FromJson(v);
    else if (k == "finetune") c.finetune = FinetuneConfig::FromJson(v);
    else if (k == "backend") c.backend = BackendConfig::FromJson(v);
    else if (k == "eval") c.eval = EvalConfig::FromJson(v);
    else if (k == "paths") c.paths = PathsConfig::FromJson(v);
    else if (k == "seed") c.seed = v.get<std::uint64_t>();
    else return false;
    return true;
  });
  return c;
}

void PipelineConfig::PropagateSeed() {
  finetune.seed = seed;
  tdnn.train.seed = seed;
  backend.seed = seed;
}

std::string PipelineConfig::Hash() const { return ToHex64(Fnv1a64(ToJson().dump())); }

}  // namespace affect
