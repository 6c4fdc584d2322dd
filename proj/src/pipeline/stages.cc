// pipeline/stages.cc

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
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>

#include "affect/audio.h"
#include "affect/parallel.h"
#include "affect/pipeline.h"

namespace affect {

namespace fs = std::filesystem;

std::string ResolveAudioPath(const UtteranceRecord &r, const std::string &audio_root) {
  if (r.audio_path.empty()) Fail("record '", r.utt_id, "' has no audio_path");
  const fs::path p(r.audio_path);
  if (p.is_absolute() || audio_root.empty()) return p.string();
  return (fs::path(audio_root) / p).string();
}

void ExtractFeatureArchive(const Manifest &manifest, const std::string &audio_root,
                           const FeatureConfig &cfg, std::uint64_t seed,
                           const std::string &data_path, const std::string &index_path,
                           int threads) {
  const auto &records = manifest.records();
  std::vector<FeatureMatrix> out(records.size());
  ParallelFor(static_cast<int>(records.size()), threads, [&](int i) {
    const UtteranceRecord &r = records[i];
    const AudioBuffer audio = ReadWav(ResolveAudioPath(r, audio_root), r.utt_id);
    out[i] = ExtractFeatures(audio, cfg, DeriveSeed(seed, "dither:" + r.utt_id));
    out[i].id = r.utt_id;
  });
  FeatureArchiveWriter writer(data_path, index_path);
  for (const FeatureMatrix &f : out) writer.Add(f);
  writer.Commit();
}

LabelSet MakeLabelSet(const Manifest &manifest, const std::vector<std::string> &ids,
                      const std::string &target) {
  const std::vector<std::string> use = ids.empty() ? manifest.Ids() : ids;
  auto value_of = [&](const UtteranceRecord &r) -> std::string {
    if (target == "canonical") return CanonicalName(CanonicalizeLabel(r.corpus, r.raw_label));
    if (target == "raw") return NormalizeRawLabel(r.corpus, r.raw_label);
    if (target == "speaker") return r.speaker_id;
    Fail("unknown training target '", target, "'");
  };
  LabelSet out;
  std::map<std::string, std::string> value;
  for (const std::string &id : use) {
    const UtteranceRecord &r = manifest.at(id);
    if (r.Excluded()) continue;
    value[id] = value_of(r);
  }
  if (target == "canonical") {
    out.classes = CanonicalNames();
  } else {
    std::set<std::string> distinct;
    for (const auto &[id, v] : value) distinct.insert(v);
    out.classes.assign(distinct.begin(), distinct.end());
  }
  for (const auto &[id, v] : value)
    out.label_of[id] = static_cast<int>(
        std::find(out.classes.begin(), out.classes.end(), v) - out.classes.begin());
  return out;
}

std::vector<TrainingExample> LoadExamples(const FeatureArchive &archive, const LabelSet &labels) {
  std::vector<TrainingExample> out;
  for (const auto &[id, label] : labels.label_of) {
    if (!archive.Contains(id)) Fail("no features for utterance '", id, "'");
    out.push_back({archive.Read(id), label});
  }
  return out;
}

std::vector<TrainingExample> NoisyCopies(const Manifest &manifest, const LabelSet &labels,
                                         const std::string &audio_root,
                                         const std::vector<std::string> &noise_paths,
                                         const FeatureConfig &features, std::uint64_t seed,
                                         int threads, double snr_low, double snr_high) {
  if (noise_paths.empty()) Fail("noise augmentation needs at least one noise file");
  if (!(snr_high >= snr_low)) Fail("noise augmentation: bad SNR range");
  std::vector<AudioBuffer> noises;
  for (const std::string &p : noise_paths) noises.push_back(ReadWav(p, p));
  std::vector<std::pair<std::string, int>> items(labels.label_of.begin(), labels.label_of.end());
  std::vector<TrainingExample> out(items.size());
  ParallelFor(static_cast<int>(items.size()), threads, [&](int i) {
    const auto &[id, label] = items[i];
    const UtteranceRecord &r = manifest.at(id);
    const AudioBuffer audio = ReadWav(ResolveAudioPath(r, audio_root), id);
    Rng rng(DeriveSeed(seed, "noise:" + id));
    const std::size_t which = std::uniform_int_distribution<std::size_t>(0, noises.size() - 1)(rng);
    const double snr = std::uniform_real_distribution<double>(snr_low, snr_high)(rng);
    const AudioBuffer noisy = AugmentNoise(audio, noises[which], snr, DeriveSeed(seed, "noise-offset:" + id));
    out[i].feats = ExtractFeatures(noisy, features, DeriveSeed(seed, "dither:" + id + "#noisy"));
    out[i].feats.id = id + "#noisy";
    out[i].label = label;
  });
  return out;
}

TdnnModel TrainTdnn(const std::vector<TrainingExample> &examples, const TdnnSection &cfg,
                    const std::vector<std::string> &classes, std::uint64_t seed, TrainingLog *log,
                    int threads) {
  TdnnTopology topo = cfg.topology;
  topo.num_classes = static_cast<int>(classes.size());
  topo.Validate();
  const TdnnModel init = TdnnModel::Init(topo.Build(), classes, DeriveSeed(seed, "init"));
  FinetuneConfig train = cfg.train;
  train.seed = seed;
  TdnnModel model = Finetune(init, examples, train, log, threads);
  model.metadata()["train"] = {{"target", cfg.target}, {"seed", seed}};
  return model;
}

TdnnModel FinetuneTdnn(const TdnnModel &pretrained, const std::vector<TrainingExample> &examples,
                       const FinetuneConfig &cfg, TrainingLog *log, int threads) {
  const TdnnModel adapted = AdaptHead(pretrained, kNumCanonicalEmotions, cfg.add_layer8,
                                      DeriveSeed(cfg.seed, "adapt-head"), CanonicalNames());
  return Finetune(adapted, examples, cfg, log, threads);
}

EmbeddingSet ExtractEmbeddingSet(const TdnnModel &model, const FeatureArchive &archive,
                                 std::vector<std::string> ids, int layer, int threads,
                                 std::size_t *skipped) {
  if (ids.empty()) ids = archive.Ids();
  std::sort(ids.begin(), ids.end());
  model.DenseLayerIndex(layer);  // validates the layer number
  std::vector<std::optional<VecF>> out(ids.size());
  ParallelFor(static_cast<int>(ids.size()), threads, [&](int i) {
    const FeatureMatrix f = archive.Read(ids[i]);
    if (f.NumFrames() < model.ReceptiveField()) return;
    out[i] = model.Embedding(ToFrames<float>(f), layer);
  });
  EmbeddingSet set(Modality::kSpeech);
  std::size_t short_count = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!out[i]) {
      ++short_count;
      continue;
    }
    set.Add({ids[i], Modality::kSpeech, *out[i]});
  }
  if (skipped) *skipped = short_count;
  return set;
}

std::map<std::string, std::string> SurrogateMap(const Manifest &manifest, const Manifest *pool,
                                                std::uint64_t seed) {
  std::vector<UtteranceRecord> crema;
  for (const UtteranceRecord &r : manifest.records())
    if (r.corpus == Corpus::kCremaD && !r.Excluded()) crema.push_back(r);
  if (crema.empty()) return {};
  if (!pool) Fail("Crema-D records need a surrogate pool (DailyDialog manifest) for their text");
  return AssignTextSurrogates(Manifest(std::move(crema)), *pool, seed);
}

PldaBackend TrainBackendOn(const EmbeddingSet &embeddings, const Manifest &manifest,
                           const std::vector<std::string> &ids, const BackendConfig &cfg) {
  std::vector<std::string> use;
  if (ids.empty()) {
    for (const EmbeddingRecord &r : embeddings.records())
      if (manifest.Contains(r.utt_id)) use.push_back(r.utt_id);
  } else {
    use = ids;
  }
  std::sort(use.begin(), use.end());
  std::set<Corpus> corpora;
  for (const std::string &c : cfg.train_corpora) corpora.insert(ParseCorpus(c));
  std::vector<Vec> rows;
  std::vector<int> labels;
  for (const std::string &id : use) {
    const UtteranceRecord &r = manifest.at(id);
    if (r.Excluded()) continue;
    if (!corpora.empty() && !corpora.count(r.corpus)) continue;
    rows.push_back(embeddings.at(id).vector.cast<double>());
    labels.push_back(CanonicalIndex(r));
  }
  PldaBackend b = FitBackend(rows, labels, CanonicalNames(), cfg);
  b.metadata["embedding_dim"] = embeddings.dim();
  return b;
}

std::vector<ScoredTrial> ScoreTrialList(const PldaBackend &backend, const EmbeddingSet &embeddings,
                                        const std::vector<TrialPair> &trials, int threads) {
  std::set<std::string> needed;
  for (const TrialPair &t : trials) needed.insert({t.id1, t.id2});
  std::vector<std::string> ids(needed.begin(), needed.end());
  std::vector<Vec> proj(ids.size());
  ParallelFor(static_cast<int>(ids.size()), threads, [&](int i) {
    proj[i] = backend.Project(embeddings.at(ids[i]).vector.cast<double>());
  });
  std::map<std::string, const Vec *> by;
  for (std::size_t i = 0; i < ids.size(); ++i) by[ids[i]] = &proj[i];
  std::vector<ScoredTrial> out(trials.size());
  ParallelFor(static_cast<int>(trials.size()), threads, [&](int i) {
    const TrialPair &t = trials[i];
    out[i] = {t.id1, t.id2, ScorePair(backend.plda, *by.at(t.id1), *by.at(t.id2)), t.is_target};
  });
  return out;
}

std::vector<Prediction> IdentifyProbes(const PldaBackend &backend, const EmbeddingSet &embeddings,
                                       const Manifest &manifest,
                                       const std::vector<std::string> &enroll_ids,
                                       const std::vector<std::string> &probe_ids,
                                       std::vector<std::string> *enrolled_classes, int threads) {
  std::map<std::string, std::vector<Vec>> by_class;
  std::vector<std::string> sorted_enroll = enroll_ids;
  std::sort(sorted_enroll.begin(), sorted_enroll.end());
  for (const std::string &id : sorted_enroll) {
    const UtteranceRecord &r = manifest.at(id);
    if (r.Excluded()) continue;
    by_class[CanonicalName(CanonicalizeLabel(r.corpus, r.raw_label))].push_back(
        backend.Project(embeddings.at(id).vector.cast<double>()));
  }
  std::vector<std::string> classes;
  std::vector<Enrollment> enrolled;
  for (const std::string &c : backend.class_labels) {
    auto it = by_class.find(c);
    if (it == by_class.end()) continue;
    classes.push_back(c);
    enrolled.push_back(Enroll(backend.plda, it->second));
  }
  if (classes.empty()) Fail("identify: no enrollment utterances");
  std::vector<std::string> probes;
  for (const std::string &id : probe_ids)
    if (!manifest.at(id).Excluded()) probes.push_back(id);
  std::sort(probes.begin(), probes.end());
  std::vector<Prediction> out(probes.size());
  ParallelFor(static_cast<int>(probes.size()), threads, [&](int i) {
    const UtteranceRecord &r = manifest.at(probes[i]);
    const Identification id =
        Identify(backend.plda, backend.Project(embeddings.at(r.utt_id).vector.cast<double>()), enrolled);
    out[i] = {r.utt_id, classes[id.best], CanonicalName(CanonicalizeLabel(r.corpus, r.raw_label)),
              id.scores};
  });
  if (enrolled_classes) *enrolled_classes = classes;
  return out;
}

std::string FormatPredictions(const std::vector<Prediction> &preds,
                              const std::vector<std::string> &classes) {
  std::string out;
  for (const Prediction &p : preds) {
    nlohmann::json scores = nlohmann::json::object();
    for (std::size_t k = 0; k < p.scores.size() && k < classes.size(); ++k) scores[classes[k]] = p.scores[k];
    out += nlohmann::json{{"utt_id", p.utt_id}, {"predicted", p.predicted}, {"gold", p.gold}, {"scores", scores}}
               .dump() +
           "\n";
  }
  return out;
}

std::vector<Prediction> ParsePredictions(const std::string &text, const std::string &source) {
  std::vector<Prediction> out;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  std::uint64_t offset = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::uint64_t start = offset;
    offset += line.size() + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Prediction p;
      p.utt_id = j.at("utt_id").get<std::string>();
      p.predicted = j.at("predicted").get<std::string>();
      p.gold = j.at("gold").get<std::string>();
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception &e) {
      throw FormatError(source, start, StrCat("line ", line_no, ": ", e.what()));
    }
  }
  return out;
}

std::vector<std::string> ReadIdList(const std::string &path) {
  std::istringstream is(ReadFileBytes(path));
  std::vector<std::string> ids;
  std::string tok;
  while (is >> tok) ids.push_back(tok);
  return ids;
}

std::string FormatIdList(const std::vector<std::string> &ids) {
  std::string out;
  for (const std::string &id : ids) out += id + "\n";
  return out;
}

}  // namespace affect
