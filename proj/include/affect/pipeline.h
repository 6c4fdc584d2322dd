// affect/pipeline.h

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

#ifndef AFFECT_PIPELINE_H_
#define AFFECT_PIPELINE_H_

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "affect/backend.h"
#include "affect/corpus.h"
#include "affect/embeddings.h"
#include "affect/features.h"
#include "affect/metrics.h"
#include "affect/tdnn.h"

namespace affect {

// Every FromJson below rejects unknown keys and keeps defaults for missing
// ones; ToJson always writes every field.
nlohmann::json FeatureConfigToJson(const FeatureConfig &c);
FeatureConfig FeatureConfigFromJson(const nlohmann::json &j);

/// Network shape plus the from-scratch training recipe used by train-tdnn.
struct TdnnSection {
  TdnnTopology topology;
  /// Manifest field used as the class for train-tdnn: canonical, raw or speaker.
  std::string target = "canonical";
  FinetuneConfig train;

  TdnnSection();
  nlohmann::json ToJson() const;
  static TdnnSection FromJson(const nlohmann::json &j);
};

struct EvalConfig {
  int embedding_layer = 6;
  LabelPolicy label_policy = LabelPolicy::kCanonical;
  TrialPolicy::Kind trial_policy = TrialPolicy::kAllPairs;
  int n_target = 0;
  int n_nontarget = 0;
  bool speech_only = false;
  int folds = 5;

  void Validate() const;
  nlohmann::json ToJson() const;
  static EvalConfig FromJson(const nlohmann::json &j);
};

/// Input locations. Relative paths are taken as given (relative to the
/// working directory).
struct PathsConfig {
  std::map<std::string, std::string> values;

  static const std::vector<std::string> &Keys();
  std::string Get(const std::string &key) const;
  void Set(const std::string &key, const std::string &value);
  nlohmann::json ToJson() const;
  static PathsConfig FromJson(const nlohmann::json &j);
};

struct PipelineConfig {
  FeatureConfig features;
  TdnnSection tdnn;
  FinetuneConfig finetune;
  BackendConfig backend;
  EvalConfig eval;
  PathsConfig paths;
  std::uint64_t seed = 0;

  nlohmann::json ToJson() const;
  static PipelineConfig FromJson(const nlohmann::json &j);
  /// Copies the top-level seed into the sections that carry their own.
  void PropagateSeed();
  /// Fnv1a64 of the compact JSON dump.
  std::string Hash() const;
};

// ---- stages ---------------------------------------------------------------

/// Reads every record's audio (audio_path, relative to audio_root when not
/// absolute) and writes one archive. Dither, if enabled, is seeded per
/// utterance from `seed` and the id.
void ExtractFeatureArchive(const Manifest &manifest, const std::string &audio_root,
                           const FeatureConfig &cfg, std::uint64_t seed,
                           const std::string &data_path, const std::string &index_path,
                           int threads);

std::string ResolveAudioPath(const UtteranceRecord &r, const std::string &audio_root);

/// Class names and per-utterance labels for a training target.
struct LabelSet {
  std::vector<std::string> classes;
  std::map<std::string, int> label_of;  // utt_id -> index into classes
};
/// target: "canonical" (five classes, fixed order), "raw" or "speaker"
/// (sorted distinct values). Records with excluded labels are skipped.
LabelSet MakeLabelSet(const Manifest &manifest, const std::vector<std::string> &ids,
                      const std::string &target);

std::vector<TrainingExample> LoadExamples(const FeatureArchive &archive, const LabelSet &labels);

/// Noise augmentation: one extra example per utterance, mixed with a noise
/// file chosen per utterance at an SNR drawn uniformly from [snr_low, snr_high] dB.
std::vector<TrainingExample> NoisyCopies(const Manifest &manifest, const LabelSet &labels,
                                         const std::string &audio_root,
                                         const std::vector<std::string> &noise_paths,
                                         const FeatureConfig &features, std::uint64_t seed,
                                         int threads, double snr_low = 0.0, double snr_high = 15.0);

/// Fresh network trained from scratch on `examples`.
TdnnModel TrainTdnn(const std::vector<TrainingExample> &examples, const TdnnSection &cfg,
                    const std::vector<std::string> &classes, std::uint64_t seed, TrainingLog *log,
                    int threads);

/// Head swapped for the five canonical classes (plus layer 8 if asked), then
/// fine-tuned.
TdnnModel FinetuneTdnn(const TdnnModel &pretrained, const std::vector<TrainingExample> &examples,
                       const FinetuneConfig &cfg, TrainingLog *log, int threads);

/// Embeddings from dense layer `layer` for the given ids (all archive ids if
/// empty), in id order. Utterances shorter than the receptive field are
/// skipped and counted.
EmbeddingSet ExtractEmbeddingSet(const TdnnModel &model, const FeatureArchive &archive,
                                 std::vector<std::string> ids, int layer, int threads,
                                 std::size_t *skipped = nullptr);

/// Crema-D records take their text from a same-emotion surrogate drawn from
/// the pool; every other record keeps its own id.
std::map<std::string, std::string> SurrogateMap(const Manifest &manifest, const Manifest *pool,
                                                std::uint64_t seed);

/// Backend on the given ids (all embeddings if empty), labelled with the
/// canonical classes. Excluded labels are dropped.
PldaBackend TrainBackendOn(const EmbeddingSet &embeddings, const Manifest &manifest,
                           const std::vector<std::string> &ids, const BackendConfig &cfg);

std::vector<ScoredTrial> ScoreTrialList(const PldaBackend &backend, const EmbeddingSet &embeddings,
                                        const std::vector<TrialPair> &trials, int threads);

struct Prediction {
  std::string utt_id, predicted, gold;
  std::vector<double> scores;  // per enrolled class
};

/// Enrolls each class present among `enroll_ids` (canonical labels, class
/// order as in backend.class_labels) and identifies every probe.
std::vector<Prediction> IdentifyProbes(const PldaBackend &backend, const EmbeddingSet &embeddings,
                                       const Manifest &manifest,
                                       const std::vector<std::string> &enroll_ids,
                                       const std::vector<std::string> &probe_ids,
                                       std::vector<std::string> *enrolled_classes, int threads);

std::string FormatPredictions(const std::vector<Prediction> &preds,
                              const std::vector<std::string> &classes);
std::vector<Prediction> ParsePredictions(const std::string &text, const std::string &source);

/// One id per line; blank lines ignored.
std::vector<std::string> ReadIdList(const std::string &path);
std::string FormatIdList(const std::vector<std::string> &ids);

}  // namespace affect

#endif  // AFFECT_PIPELINE_H_
