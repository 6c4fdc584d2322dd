// tools/affect_main.cc

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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "affect/binary_io.h"
#include "affect/pipeline.h"

#ifndef AFFECT_VERSION
#define AFFECT_VERSION "unknown"
#endif

namespace affect {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Bad flags, bad config, missing required paths.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Subcommand {
  const char *name;
  const char *help;
  std::vector<std::string> required_paths;
  std::vector<std::string> optional_paths;
};

const std::vector<Subcommand> &Subcommands() {
  static const std::vector<Subcommand> all = {
      {"extract-features", "Compute MFCC + pitch features for every manifest record",
       {"manifest"}, {"audio_root"}},
      {"train-tdnn", "Train the TDNN from scratch", {"manifest", "features"}, {"ids"}},
      {"finetune-tdnn", "Swap the head for the five emotion classes and fine-tune",
       {"model", "manifest", "features"}, {"ids", "noise_list", "audio_root"}},
      {"extract-embeddings", "Dense-layer embeddings for every utterance", {"model", "features"},
       {"ids"}},
      {"fuse", "Concatenate speech and text embeddings", {"embeddings", "manifest"},
       {"text_embeddings", "surrogate_pool"}},
      {"train-backend", "Fit LDA + pLDA on embeddings", {"embeddings", "manifest"}, {"ids"}},
      {"score-trials", "pLDA verification scores for a trial list", {"backend", "embeddings", "trials"},
       {}},
      {"identify", "Enroll classes and identify probe utterances",
       {"backend", "embeddings", "manifest", "enroll_ids", "probe_ids"}, {}},
      {"eval", "EER from scores and/or accuracy and F1 from predictions", {},
       {"trials", "scores", "predictions"}},
      {"make-folds", "Leave-one-session-out folds", {"manifest"}, {}},
      {"make-trials", "Target/nontarget trial list", {"manifest"}, {"ids"}},
  };
  return all;
}

const Subcommand &FindSubcommand(const std::string &name) {
  for (const Subcommand &s : Subcommands())
    if (name == s.name) return s;
  throw UsageError("unknown subcommand '" + name + "'");
}

std::string FlagForPath(const std::string &key) {
  std::string f = "--" + key;
  std::replace(f.begin(), f.end(), '_', '-');
  return f;
}

// Typed flags that overwrite one config value (a JSON pointer) when given.
class Overrides {
 public:
  template <typename T>
  void Add(CLI::App *app, const std::string &flag, const std::string &pointer, const std::string &help) {
    auto v = std::make_shared<std::optional<T>>();
    app->add_option(flag, *v, help + " (" + pointer + ")");
    items_.push_back({pointer, [v]() -> std::optional<json> {
                        if (!*v) return std::nullopt;
                        return json(**v);
                      }});
  }
  void AddFlag(CLI::App *app, const std::string &flag, const std::string &pointer, const std::string &help) {
    auto v = std::make_shared<bool>(false);
    app->add_flag(flag, *v, help + " (" + pointer + " = true)");
    items_.push_back({pointer, [v]() -> std::optional<json> {
                        if (!*v) return std::nullopt;
                        return json(true);
                      }});
  }
  void Apply(json *config) const {
    for (const auto &[pointer, get] : items_)
      if (auto v = get()) (*config)[json::json_pointer(pointer)] = *v;
  }

 private:
  std::vector<std::pair<std::string, std::function<std::optional<json>()>>> items_;
};

struct Invocation {
  std::string subcommand;
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::map<std::string, std::string> paths;  // from --<path> flags
  Overrides overrides;
};

void AddSubcommandOptions(CLI::App *app, const Subcommand &sc, Invocation *inv) {
  app->add_option("--config", inv->config_path, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--out-dir", inv->out_dir, "Directory for every output of this command")->required();
  app->add_option("--seed", inv->seed, "Random seed (else config 'seed', else $AFFECT_SEED, else 0)");
  app->add_option("--threads", inv->threads, "Worker threads; results do not depend on it")
      ->check(CLI::Range(1, 1024));
  std::vector<std::string> keys = sc.required_paths;
  keys.insert(keys.end(), sc.optional_paths.begin(), sc.optional_paths.end());
  for (const std::string &key : keys)
    app->add_option_function<std::string>(
        FlagForPath(key), [inv, key](const std::string &v) { inv->paths[key] = v; },
        "Path (paths." + key + ")");

  Overrides &o = inv->overrides;
  const std::string name = sc.name;
  if (name == "train-tdnn") {
    o.Add<int>(app, "--epochs", "/tdnn/train/epochs", "Training epochs");
    o.Add<double>(app, "--lr-initial", "/tdnn/train/lr_initial", "Initial learning rate");
    o.Add<double>(app, "--lr-final", "/tdnn/train/lr_final", "Final learning rate");
    o.Add<int>(app, "--batch-size", "/tdnn/train/batch_size", "Minibatch size");
    o.Add<double>(app, "--dropout", "/tdnn/train/dropout", "Dropout on dense layers");
    o.Add<std::string>(app, "--target", "/tdnn/target", "canonical, raw or speaker");
  } else if (name == "finetune-tdnn") {
    o.Add<int>(app, "--epochs", "/finetune/epochs", "Fine-tuning epochs");
    o.Add<double>(app, "--lr-initial", "/finetune/lr_initial", "Initial learning rate");
    o.Add<double>(app, "--lr-final", "/finetune/lr_final", "Final learning rate");
    o.Add<int>(app, "--batch-size", "/finetune/batch_size", "Minibatch size");
    o.Add<double>(app, "--dropout", "/finetune/dropout", "Dropout on dense layers");
    o.Add<double>(app, "--first-six-lr", "/finetune/first_six_lr", "Fixed learning rate of layers 1-6");
    o.Add<double>(app, "--first-six-lr-multiplier", "/finetune/first_six_lr_multiplier",
                  "Learning-rate factor for layers 1-6");
    o.AddFlag(app, "--add-layer8", "/finetune/add_layer8", "Insert a new dense layer below the head");
    o.AddFlag(app, "--noise-aug", "/finetune/noise_aug", "Add one noisy copy of every utterance");
  } else if (name == "extract-embeddings") {
    o.Add<int>(app, "--layer", "/eval/embedding_layer", "Dense layer number (6 or 7)");
  } else if (name == "fuse") {
    o.AddFlag(app, "--speech-only", "/eval/speech_only", "Pass speech embeddings through unchanged");
  } else if (name == "train-backend") {
    o.Add<int>(app, "--lda-dim", "/backend/lda_target_dim", "LDA output dimension");
    o.Add<int>(app, "--em-iters", "/backend/em_max_iters", "Maximum EM iterations");
    o.Add<double>(app, "--em-tol", "/backend/em_tol", "EM stopping tolerance (LL gain per sample)");
    o.AddFlag(app, "--length-norm", "/backend/length_normalize", "Length-normalize after LDA");
    o.Add<std::vector<std::string>>(app, "--train-corpus", "/backend/train_corpora",
                                    "Restrict backend training to these corpora (default: all)");
  } else if (name == "make-folds") {
    o.Add<int>(app, "--folds", "/eval/folds", "Number of sessions/folds");
  } else if (name == "make-trials") {
    o.Add<std::string>(app, "--trial-policy", "/eval/trial_policy", "all_pairs or balanced");
    o.Add<int>(app, "--n-target", "/eval/n_target", "Target trials (balanced)");
    o.Add<int>(app, "--n-nontarget", "/eval/n_nontarget", "Nontarget trials (balanced)");
    o.Add<std::string>(app, "--label-policy", "/eval/label_policy", "canonical or raw");
  }
}

json ParseJsonFile(const std::string &path) {
  std::string text;
  try {
    text = ReadFileBytes(path);
  } catch (const Error &e) {
    throw UsageError(e.what());
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error &e) {
    throw UsageError(path + " (offset " + std::to_string(e.byte) + "): " + e.what());
  }
}

// File config, then flags, then the seed fallback chain. Validated by a
// full FromJson round.
PipelineConfig ResolveConfig(const Invocation &inv) {
  json file = json::object();
  if (!inv.config_path.empty()) file = ParseJsonFile(inv.config_path);
  if (!file.is_object()) throw UsageError(inv.config_path + ": config must be a JSON object");
  PipelineConfig cfg;
  try {
    cfg = PipelineConfig::FromJson(file);
    json full = cfg.ToJson();
    inv.overrides.Apply(&full);
    for (const auto &[k, v] : inv.paths) full["paths"][k] = v;
    if (inv.seed) {
      full["seed"] = *inv.seed;
    } else if (!file.contains("seed")) {
      if (const char *env = std::getenv("AFFECT_SEED")) {
        char *end = nullptr;
        const unsigned long long s = std::strtoull(env, &end, 10);
        if (!*env || *end) throw UsageError(StrCat("AFFECT_SEED must be an unsigned integer, got '", env, "'"));
        full["seed"] = static_cast<std::uint64_t>(s);
      }
    }
    cfg = PipelineConfig::FromJson(full);
  } catch (const InvalidArgument &e) {
    throw UsageError(e.what());
  } catch (const json::exception &e) {
    throw UsageError(e.what());
  }
  cfg.PropagateSeed();
  return cfg;
}

void CheckRequiredPaths(const Subcommand &sc, const PipelineConfig &cfg) {
  for (const std::string &key : sc.required_paths)
    if (cfg.paths.Get(key).empty())
      throw UsageError(StrCat(sc.name, ": missing required path '", key, "' (", FlagForPath(key),
                              " or paths.", key, " in the config)"));
  const std::string name = sc.name;
  if (name == "eval") {
    const bool verif = !cfg.paths.Get("trials").empty() || !cfg.paths.Get("scores").empty();
    if (verif && (cfg.paths.Get("trials").empty() || cfg.paths.Get("scores").empty()))
      throw UsageError("eval: --trials and --scores go together");
    if (!verif && cfg.paths.Get("predictions").empty())
      throw UsageError("eval: give --trials and --scores, or --predictions, or both");
  }
  if (name == "fuse" && !cfg.eval.speech_only && cfg.paths.Get("text_embeddings").empty())
    throw UsageError("fuse: missing required path 'text_embeddings' (--text-embeddings), or pass --speech-only");
  if (name == "finetune-tdnn" && cfg.finetune.noise_aug && cfg.paths.Get("noise_list").empty())
    throw UsageError("finetune-tdnn: noise_aug needs paths.noise_list (--noise-list)");
}

// ---- run manifest -----------------------------------------------------------

class RunContext {
 public:
  RunContext(std::string subcommand, PipelineConfig cfg, fs::path out_dir, int threads)
      : subcommand_(std::move(subcommand)), cfg_(std::move(cfg)), out_dir_(std::move(out_dir)),
        threads_(threads) {}

  const PipelineConfig &cfg() const { return cfg_; }
  int threads() const { return threads_; }
  const std::string &subcommand() const { return subcommand_; }

  /// Path of input `key`; records it with its hash.
  std::string Input(const std::string &key) {
    const std::string p = cfg_.paths.Get(key);
    if (p.empty()) return p;
    Record(key, p);
    if (key == "features") {
      // The index names its data files; hash those too.
      const std::string text = ReadFileBytes(p);
      std::set<std::string> blobs;
      std::size_t pos = 0;
      while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        const std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
          blobs.insert(json::parse(line).at("path").get<std::string>());
        } catch (const json::exception &) {
          // FeatureArchive reports malformed lines with their offsets.
        }
      }
      for (const std::string &b : blobs) {
        const fs::path bp = fs::path(b).is_absolute() ? fs::path(b) : fs::path(p).parent_path() / b;
        Record("features_data", bp.string());
      }
    }
    return p;
  }

  /// One entry for many files: their count and a hash over the per-file hashes.
  void RecordFiles(const std::string &key, const std::vector<std::string> &paths) {
    std::string hashes;
    std::uint64_t total = 0;
    for (const std::string &p : paths) {
      const std::string bytes = ReadFileBytes(p);
      total += bytes.size();
      hashes += ToHex64(Fnv1a64(bytes));
    }
    inputs_.push_back({{"key", key}, {"files", paths.size()}, {"bytes", total}, {"fnv1a64", ToHex64(Fnv1a64(hashes))}});
  }

  /// Path for output `name` inside the out dir; recorded when written.
  std::string Output(const std::string &name) {
    outputs_.push_back(name);
    return (out_dir_ / name).string();
  }

  void Write(const std::string &name, std::string_view bytes) { WriteFileAtomic(Output(name), bytes); }

  json InputsJson() const { return inputs_; }

  json Manifest(const std::vector<std::string> &args) const {
    return {{"subcommand", subcommand_},
            {"args", args},
            {"config", cfg_.ToJson()},
            {"config_hash", cfg_.Hash()},
            {"seed", cfg_.seed},
            {"threads", threads_},
            {"inputs", inputs_},
            {"outputs", outputs_},
            {"versions",
             {{"affectkit", AFFECT_VERSION},
              {"eigen", StrCat(EIGEN_WORLD_VERSION, ".", EIGEN_MAJOR_VERSION, ".", EIGEN_MINOR_VERSION)},
              {"fftw", FftwVersion()},
              {"nlohmann_json", StrCat(NLOHMANN_JSON_VERSION_MAJOR, ".", NLOHMANN_JSON_VERSION_MINOR, ".",
                                       NLOHMANN_JSON_VERSION_PATCH)},
              {"compiler", __VERSION__}}}};
  }

 private:
  void Record(const std::string &key, const std::string &path) {
    const std::string bytes = ReadFileBytes(path);
    inputs_.push_back({{"key", key}, {"path", path}, {"bytes", bytes.size()}, {"fnv1a64", ToHex64(Fnv1a64(bytes))}});
  }

  std::string subcommand_;
  PipelineConfig cfg_;
  fs::path out_dir_;
  int threads_;
  json inputs_ = json::array();
  std::vector<std::string> outputs_;
};

void Log(const RunContext &ctx, const std::string &msg) {
  std::cerr << "affect " << ctx.subcommand() << ": " << msg << "\n";
}

std::vector<std::string> OptionalIds(RunContext *ctx, const std::string &key) {
  const std::string p = ctx->Input(key);
  return p.empty() ? std::vector<std::string>{} : ReadIdList(p);
}

// ---- subcommands ---------------------------------------------------------------

void RunExtractFeatures(RunContext *ctx) {
  const Manifest manifest = Manifest::Load(ctx->Input("manifest"));
  const std::string root = ctx->cfg().paths.Get("audio_root");
  std::vector<std::string> audio;
  for (const UtteranceRecord &r : manifest.records()) audio.push_back(ResolveAudioPath(r, root));
  ctx->RecordFiles("audio", audio);
  const std::string data = ctx->Output("features.fea"), index = ctx->Output("features.index.jsonl");
  ExtractFeatureArchive(manifest, root, ctx->cfg().features, ctx->cfg().seed, data, index, ctx->threads());
  Log(*ctx, StrCat("wrote features for ", manifest.size(), " utterances"));
}

void RunTrainTdnn(RunContext *ctx) {
  const PipelineConfig &cfg = ctx->cfg();
  const Manifest manifest = Manifest::Load(ctx->Input("manifest"));
  const FeatureArchive archive(ctx->Input("features"));
  const LabelSet labels = MakeLabelSet(manifest, OptionalIds(ctx, "ids"), cfg.tdnn.target);
  const std::vector<TrainingExample> examples = LoadExamples(archive, labels);
  TrainingLog log;
  const TdnnModel model = TrainTdnn(examples, cfg.tdnn, labels.classes, cfg.seed, &log, ctx->threads());
  SaveTdnn(model, ctx->Output("model.tdn"));
  ctx->Write("training_log.json", log.ToJson().dump(2) + "\n");
  Log(*ctx, StrCat("trained on ", examples.size(), " utterances (", log.skipped_short, " too short), ",
                   labels.classes.size(), " classes"));
}

void RunFinetuneTdnn(RunContext *ctx) {
  const PipelineConfig &cfg = ctx->cfg();
  const TdnnModel pretrained = LoadTdnn(ctx->Input("model"));
  const Manifest manifest = Manifest::Load(ctx->Input("manifest"));
  const FeatureArchive archive(ctx->Input("features"));
  const LabelSet labels = MakeLabelSet(manifest, OptionalIds(ctx, "ids"), "canonical");
  std::vector<TrainingExample> examples = LoadExamples(archive, labels);
  if (cfg.finetune.noise_aug) {
    const std::vector<std::string> noise = ReadIdList(ctx->Input("noise_list"));
    if (noise.empty()) Fail("noise list '", cfg.paths.Get("noise_list"), "' is empty");
    ctx->RecordFiles("noise_audio", noise);
    std::vector<TrainingExample> noisy =
        NoisyCopies(manifest, labels, cfg.paths.Get("audio_root"), noise, cfg.features,
                    DeriveSeed(cfg.seed, "noise"), ctx->threads());
    examples.insert(examples.end(), noisy.begin(), noisy.end());
  }
  TrainingLog log;
  const TdnnModel model = FinetuneTdnn(pretrained, examples, cfg.finetune, &log, ctx->threads());
  SaveTdnn(model, ctx->Output("model.tdn"));
  ctx->Write("training_log.json", log.ToJson().dump(2) + "\n");
  Log(*ctx, StrCat("fine-tuned on ", examples.size(), " examples"));
}

void RunExtractEmbeddings(RunContext *ctx) {
  const TdnnModel model = LoadTdnn(ctx->Input("model"));
  const FeatureArchive archive(ctx->Input("features"));
  std::size_t skipped = 0;
  const EmbeddingSet set = ExtractEmbeddingSet(model, archive, OptionalIds(ctx, "ids"),
                                               ctx->cfg().eval.embedding_layer, ctx->threads(), &skipped);
  SaveEmb1(set, ctx->Output("embeddings.emb"));
  Log(*ctx, StrCat("wrote ", set.size(), " embeddings of dim ", set.dim(), " (", skipped, " too short)"));
}

void RunFuse(RunContext *ctx) {
  const PipelineConfig &cfg = ctx->cfg();
  const EmbeddingSet speech = LoadEmb1(ctx->Input("embeddings"), Modality::kSpeech);
  const Manifest manifest = Manifest::Load(ctx->Input("manifest"));
  std::optional<EmbeddingSet> text;
  if (!cfg.eval.speech_only) text = LoadEmb1(ctx->Input("text_embeddings"), Modality::kText);
  std::optional<Manifest> pool;
  if (!cfg.paths.Get("surrogate_pool").empty()) pool = Manifest::Load(ctx->Input("surrogate_pool"));
  std::vector<std::string> ids;
  for (const EmbeddingRecord &r : speech.records())
    if (manifest.Contains(r.utt_id)) ids.push_back(r.utt_id);
  const std::map<std::string, std::string> surrogates =
      SurrogateMap(manifest.Subset(ids), pool ? &*pool : nullptr, DeriveSeed(cfg.seed, "surrogates"));
  const EmbeddingSet fused = FuseSets(speech, text ? &*text : nullptr, surrogates, cfg.eval.speech_only);
  SaveEmb1(fused, ctx->Output("fused.emb"));
  json sj = json::object();
  for (const auto &[id, src] : surrogates)
    if (id != src) sj[id] = src;
  ctx->Write("surrogates.json", sj.dump(2) + "\n");
  Log(*ctx, StrCat("wrote ", fused.size(), " embeddings of dim ", fused.dim()));
}

void RunTrainBackend(RunContext *ctx) {
  const EmbeddingSet emb = LoadEmb1(ctx->Input("embeddings"));
  const Manifest manifest = Manifest::Load(ctx->Input("manifest"));
  const PldaBackend backend = TrainBackendOn(emb, manifest, OptionalIds(ctx, "ids"), ctx->cfg().backend);
  SavePld1(backend, ctx->Output("backend.pld"));
  if (backend.metadata.value("within_rank_deficient", false))
    Log(*ctx, StrCat("warning: ", backend.metadata.value("num_train", 0), " training utterances for ",
                     backend.lda.InputDim(), "-dim embeddings; the within-class scatter is singular and "
                     "scores on unseen data may be extreme"));
  Log(*ctx, StrCat("backend: ", backend.lda.InputDim(), " -> ", backend.lda.OutputDim(), " dims, ",
                   backend.metadata.value("em_iterations", 0), " EM iterations"));
}

void RunScoreTrials(RunContext *ctx) {
  const PldaBackend backend = LoadPld1(ctx->Input("backend"));
  const EmbeddingSet emb = LoadEmb1(ctx->Input("embeddings"));
  const std::vector<TrialPair> trials = ReadTrials(ctx->Input("trials"));
  const std::vector<ScoredTrial> scores = ScoreTrialList(backend, emb, trials, ctx->threads());
  ctx->Write("scores.txt", FormatScores(scores));
  Log(*ctx, StrCat("scored ", scores.size(), " trials"));
}

void RunIdentify(RunContext *ctx) {
  const PldaBackend backend = LoadPld1(ctx->Input("backend"));
  const EmbeddingSet emb = LoadEmb1(ctx->Input("embeddings"));
  const Manifest manifest = Manifest::Load(ctx->Input("manifest"));
  const std::vector<std::string> enroll = ReadIdList(ctx->Input("enroll_ids"));
  const std::vector<std::string> probe = ReadIdList(ctx->Input("probe_ids"));
  std::vector<std::string> classes;
  const std::vector<Prediction> preds =
      IdentifyProbes(backend, emb, manifest, enroll, probe, &classes, ctx->threads());
  ctx->Write("predictions.jsonl", FormatPredictions(preds, classes));
  Log(*ctx, StrCat("identified ", preds.size(), " probes against ", classes.size(), " classes"));
}

void RunEval(RunContext *ctx) {
  EvalReport report;
  if (!ctx->cfg().paths.Get("scores").empty()) {
    const std::string sp = ctx->Input("scores");
    const std::vector<ScoredTrial> scores = ParseScores(ReadFileBytes(sp), sp);
    const std::vector<TrialPair> trials = ReadTrials(ctx->Input("trials"));
    report.has_eer = true;
    report.eer = ComputeEer(AttachTargets(scores, trials));
  }
  if (!ctx->cfg().paths.Get("predictions").empty()) {
    const std::string pp = ctx->Input("predictions");
    const std::vector<Prediction> preds = ParsePredictions(ReadFileBytes(pp), pp);
    std::vector<std::string> p, g;
    std::set<std::string> seen;
    for (const Prediction &x : preds) {
      p.push_back(x.predicted);
      g.push_back(x.gold);
      seen.insert(x.predicted);
      seen.insert(x.gold);
    }
    std::vector<std::string> classes = CanonicalNames();
    for (const std::string &s : seen)
      if (std::find(classes.begin(), classes.end(), s) == classes.end()) {
        classes.assign(seen.begin(), seen.end());
        break;
      }
    report.has_classification = true;
    report.cls = ComputeClassificationMetrics(p, g, classes);
  }
  ctx->Write("report.json", report.ToJson().dump(2) + "\n");
  std::cout << report.ToText();
}

void RunMakeFolds(RunContext *ctx) {
  const Manifest manifest = Manifest::Load(ctx->Input("manifest")).WithoutExcluded();
  std::vector<UtteranceRecord> with_session;
  std::vector<std::string> pooled;
  for (const UtteranceRecord &r : manifest.records()) {
    if (r.session_id > 0)
      with_session.push_back(r);
    else
      pooled.push_back(r.utt_id);
  }
  std::sort(pooled.begin(), pooled.end());
  const std::vector<Fold> folds = MakeFolds(Manifest(with_session), ctx->cfg().eval.folds);
  json j = {{"k", folds.size()}, {"pooled_train_ids", pooled.size()}, {"folds", json::array()}};
  for (const Fold &f : folds) {
    std::vector<std::string> train = f.train;
    train.insert(train.end(), pooled.begin(), pooled.end());
    std::sort(train.begin(), train.end());
    const std::string dir = StrCat("fold", f.session);
    fs::create_directories(fs::path(ctx->Output(dir)));
    ctx->Write(dir + "/train.ids", FormatIdList(train));
    ctx->Write(dir + "/test.ids", FormatIdList(f.test));
    j["folds"].push_back({{"session", f.session},
                          {"train", dir + "/train.ids"},
                          {"test", dir + "/test.ids"},
                          {"n_train", train.size()},
                          {"n_test", f.test.size()}});
  }
  ctx->Write("folds.json", j.dump(2) + "\n");
  Log(*ctx, StrCat(folds.size(), " folds; ", pooled.size(), " session-less records train in every fold"));
}

void RunMakeTrials(RunContext *ctx) {
  const PipelineConfig &cfg = ctx->cfg();
  const Manifest manifest = Manifest::Load(ctx->Input("manifest"));
  std::vector<std::string> ids = OptionalIds(ctx, "ids");
  if (ids.empty())
    for (const UtteranceRecord &r : manifest.records())
      if (!r.Excluded()) ids.push_back(r.utt_id);
  TrialPolicy policy;
  policy.kind = cfg.eval.trial_policy;
  policy.n_target = cfg.eval.n_target;
  policy.n_nontarget = cfg.eval.n_nontarget;
  policy.seed = DeriveSeed(cfg.seed, "trials");
  const std::vector<TrialPair> trials = MakeTrials(ids, manifest, policy, cfg.eval.label_policy);
  ctx->Write("trials.txt", FormatTrials(trials));
  std::size_t targets = 0;
  for (const TrialPair &t : trials) targets += t.is_target;
  Log(*ctx, StrCat(trials.size(), " trials, ", targets, " target"));
}

void Execute(RunContext *ctx) {
  static const std::map<std::string, std::function<void(RunContext *)>> table = {
      {"extract-features", RunExtractFeatures}, {"train-tdnn", RunTrainTdnn},
      {"finetune-tdnn", RunFinetuneTdnn},       {"extract-embeddings", RunExtractEmbeddings},
      {"fuse", RunFuse},                        {"train-backend", RunTrainBackend},
      {"score-trials", RunScoreTrials},         {"identify", RunIdentify},
      {"eval", RunEval},                        {"make-folds", RunMakeFolds},
      {"make-trials", RunMakeTrials}};
  table.at(ctx->subcommand())(ctx);
}

// Runs one resolved command and writes config.json and run.json.
int RunResolved(const std::string &subcommand, const PipelineConfig &cfg, const std::string &out_dir,
                int threads, const std::vector<std::string> &args, const json *expected_inputs) {
  RunContext ctx(subcommand, cfg, out_dir, threads);
  try {
    if (expected_inputs)
      for (const json &want : *expected_inputs) {
        if (!want.contains("path")) continue;
        const std::string path = want.at("path").get<std::string>();
        if (ToHex64(Fnv1a64(ReadFileBytes(path))) != want.at("fnv1a64").get<std::string>())
          Fail<Error>("input ", path, " differs from the recorded run");
      }
    fs::create_directories(out_dir);
    ctx.Write("config.json", cfg.ToJson().dump(2) + "\n");
    Execute(&ctx);
    if (expected_inputs && *expected_inputs != ctx.InputsJson())
      Fail<Error>("inputs differ from the recorded run (see the 'inputs' entries of run.json)");
    WriteFileAtomic((fs::path(out_dir) / "run.json").string(), ctx.Manifest(args).dump(2) + "\n");
  } catch (const std::exception &e) {
    std::cerr << "affect " << subcommand << ": error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}

int Main(int argc, char **argv) {
  CLI::App app{"affect: speech emotion recognition with TDNN embeddings and a pLDA backend"};
  app.require_subcommand(0, 1);
  std::string replay, replay_out;
  int replay_threads = 1;
  app.add_option("--replay", replay, "Re-run the command recorded in a run.json")->check(CLI::ExistingFile);
  app.add_option("--replay-out-dir", replay_out, "Output directory for --replay (default: the recorded one)");
  app.add_option("--replay-threads", replay_threads, "Threads for --replay")->check(CLI::Range(1, 1024));

  std::vector<std::unique_ptr<Invocation>> invocations;
  for (const Subcommand &sc : Subcommands()) {
    CLI::App *sub = app.add_subcommand(sc.name, sc.help);
    invocations.push_back(std::make_unique<Invocation>());
    invocations.back()->subcommand = sc.name;
    AddSubcommandOptions(sub, sc, invocations.back().get());
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }
  const std::vector<std::string> args(argv + 1, argv + argc);

  try {
    if (!replay.empty()) {
      if (!app.get_subcommands().empty()) throw UsageError("--replay takes no subcommand");
      const json run = ParseJsonFile(replay);
      std::string sub;
      PipelineConfig cfg;
      std::string out_dir;
      try {
        sub = run.at("subcommand").get<std::string>();
        FindSubcommand(sub);
        cfg = PipelineConfig::FromJson(run.at("config"));
        const std::vector<std::string> rec = run.at("args").get<std::vector<std::string>>();
        for (std::size_t i = 0; i + 1 < rec.size(); ++i)
          if (rec[i] == "--out-dir") out_dir = rec[i + 1];
      } catch (const json::exception &e) {
        throw UsageError(replay + ": " + e.what());
      } catch (const InvalidArgument &e) {
        throw UsageError(replay + ": " + e.what());
      }
      if (!replay_out.empty()) out_dir = replay_out;
      if (out_dir.empty()) throw UsageError("--replay: no output directory recorded; pass --replay-out-dir");
      const json inputs = run.value("inputs", json::array());
      std::cerr << "affect: replaying " << sub << " from " << replay << " into " << out_dir << "\n";
      return RunResolved(sub, cfg, out_dir, replay_threads, args, &inputs);
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return kExitUsage;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    Invocation *inv = nullptr;
    for (auto &i : invocations)
      if (i->subcommand == name) inv = i.get();
    const Subcommand &sc = FindSubcommand(name);
    const PipelineConfig cfg = ResolveConfig(*inv);
    CheckRequiredPaths(sc, cfg);
    return RunResolved(name, cfg, inv->out_dir, inv->threads, args, nullptr);
  } catch (const UsageError &e) {
    std::cerr << "affect: usage error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace
}  // namespace affect

int main(int argc, char **argv) { return affect::Main(argc, argv); }
