// backend/backend.cc

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

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "affect/backend.h"
#include "affect/corpus.h"

namespace affect {

void BackendConfig::Validate() const {
  if (lda_target_dim < 1) Fail("backend: lda_target_dim must be >= 1");
  if (em_max_iters < 1) Fail("backend: em_max_iters must be >= 1");
  if (!(em_tol > 0.0)) Fail("backend: em_tol must be positive");
  for (const std::string &c : train_corpora) ParseCorpus(c);
}

nlohmann::json BackendConfig::ToJson() const {
  return {{"lda_target_dim", lda_target_dim},
          {"em_max_iters", em_max_iters},
          {"em_tol", em_tol},
          {"length_normalize", length_normalize},
          {"train_corpora", train_corpora},
          {"seed", seed}};
}

BackendConfig BackendConfig::FromJson(const nlohmann::json &j) {
  BackendConfig c;
  if (!j.is_object()) Fail("backend config must be a JSON object");
  for (const auto &[key, value] : j.items()) {
    try {
      if (key == "lda_target_dim") c.lda_target_dim = value.get<int>();
      else if (key == "em_max_iters") c.em_max_iters = value.get<int>();
      else if (key == "em_tol") c.em_tol = value.get<double>();
      else if (key == "length_normalize") c.length_normalize = value.get<bool>();
      else if (key == "train_corpora") c.train_corpora = value.get<std::vector<std::string>>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else Fail("backend: unknown config key '", key, "'");
    } catch (const nlohmann::json::exception &e) {
      Fail("backend: bad value for '", key, "': ", e.what());
    }
  }
  c.Validate();
  return c;
}

Vec PldaBackend::Project(const Vec &x) const {
  Vec y = ApplyLda(lda, x);
  if (config.length_normalize) {
    const double norm = y.norm();
    if (norm > 0) y *= std::sqrt(static_cast<double>(y.size())) / norm;
  }
  return y;
}

double PldaBackend::Score(const Vec &x1, const Vec &x2) const {
  return ScorePair(plda, Project(x1), Project(x2));
}

namespace {

template <typename M>
M ThroughFloat(const M &m) {
  return m.template cast<float>().template cast<double>();
}

}  // namespace

PldaBackend FitBackend(const std::vector<Vec> &rows, const std::vector<int> &labels,
                       const std::vector<std::string> &class_labels, const BackendConfig &cfg) {
  cfg.Validate();
  for (int l : labels)
    if (l < 0 || l >= static_cast<int>(class_labels.size()))
      Fail("train_backend: label index ", l, " out of range");
  PldaBackend b;
  b.config = cfg;
  b.class_labels = class_labels;
  b.lda = FitLda(rows, labels, cfg.lda_target_dim);
  // Beyond N - K dimensions the within-class scatter is singular.
  const std::set<int> distinct(labels.begin(), labels.end());
  const long dof = static_cast<long>(rows.size()) - static_cast<long>(distinct.size());
  if (b.lda.OutputDim() > dof)
    Fail("train_backend: LDA output dimension ", b.lda.OutputDim(), " exceeds the ", dof,
         " within-class degrees of freedom (", rows.size(), " utterances, ", distinct.size(),
         " classes); lower lda_target_dim or add training data");
  b.lda.mean = ThroughFloat(b.lda.mean);
  b.lda.projection = ThroughFloat(b.lda.projection);
  std::vector<Vec> projected;
  projected.reserve(rows.size());
  for (const Vec &x : rows) projected.push_back(b.Project(x));
  PldaFitLog log;
  const PldaModel fitted = FitPlda(projected, labels, cfg, &log);
  b.plda = PldaModel(ThroughFloat(fitted.mean()), ThroughFloat(fitted.between()),
                     ThroughFloat(fitted.within()));
  b.metadata["em_iterations"] = log.iterations;
  b.metadata["em_converged"] = log.converged;
  b.metadata["em_log_likelihood"] = log.log_likelihood;
  b.metadata["num_train"] = rows.size();
  // Fewer within-class degrees of freedom than input dimensions: LDA can pick
  // directions with no training variance, and held-out scores blow up.
  b.metadata["within_rank_deficient"] = dof < b.lda.InputDim();
  return b;
}

namespace {

void PutMatrix(const Mat &m, ByteWriter *w) {
  const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f = m.cast<float>();
  w->PutF32s(std::span<const float>(f.data(), f.size()));
}

Mat GetMatrix(int rows, int cols, ByteReader *r) {
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f(rows, cols);
  r->GetF32s(std::span<float>(f.data(), f.size()));
  return f.cast<double>();
}

}  // namespace

void WritePld1(const PldaBackend &b, ByteWriter *w) {
  const nlohmann::json header = {
      {"format", "PLD1"},
      {"version", 1},
      {"input_dim", b.lda.InputDim()},
      {"lda_dim", b.lda.OutputDim()},
      {"plda_dim", b.plda.Dim()},
      {"fisher_dims", b.lda.fisher_dims},
      {"filler_dims", b.lda.filler_dims},
      {"fill_strategy", b.lda.filler_dims ? "within_whitened_pca" : "none"},
      {"fisher_ratios", std::vector<double>(b.lda.fisher_ratios.data(),
                                            b.lda.fisher_ratios.data() + b.lda.fisher_ratios.size())},
      {"num_classes", b.lda.num_classes},
      {"class_labels", b.class_labels},
      {"config", b.config.ToJson()},
      {"metadata", b.metadata}};
  const std::string text = header.dump();
  w->PutBytes("PLD1");
  w->PutU32(static_cast<std::uint32_t>(text.size()));
  w->PutBytes(text);
  PutMatrix(b.lda.mean, w);
  PutMatrix(b.lda.projection, w);
  PutMatrix(b.plda.mean(), w);
  PutMatrix(b.plda.between(), w);
  PutMatrix(b.plda.within(), w);
}

PldaBackend ReadPld1(ByteReader *r) {
  r->ExpectMagic("PLD1");
  const std::uint32_t len = r->GetU32();
  const std::uint64_t header_offset = r->offset();
  const std::string_view text = r->GetBytes(len);
  PldaBackend b;
  int in_dim = 0, lda_dim = 0, plda_dim = 0;
  try {
    const nlohmann::json h = nlohmann::json::parse(text);
    if (h.at("format") != "PLD1" || h.at("version") != 1) Fail("unsupported PLD1 header version");
    in_dim = h.at("input_dim").get<int>();
    lda_dim = h.at("lda_dim").get<int>();
    plda_dim = h.at("plda_dim").get<int>();
    b.lda.fisher_dims = h.at("fisher_dims").get<int>();
    b.lda.filler_dims = h.at("filler_dims").get<int>();
    b.lda.num_classes = h.at("num_classes").get<int>();
    const auto ratios = h.at("fisher_ratios").get<std::vector<double>>();
    b.lda.fisher_ratios = Eigen::Map<const Vec>(ratios.data(), ratios.size());
    b.class_labels = h.at("class_labels").get<std::vector<std::string>>();
    b.config = BackendConfig::FromJson(h.at("config"));
    b.metadata = h.at("metadata");
    if (in_dim < 1 || lda_dim < 1 || lda_dim > in_dim || plda_dim != lda_dim ||
        static_cast<int>(ratios.size()) != lda_dim || b.lda.fisher_dims + b.lda.filler_dims != lda_dim)
      Fail("inconsistent PLD1 dimensions");
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(r->source(), header_offset, StrCat("bad PLD1 header: ", e.what()));
  } catch (const InvalidArgument &e) {
    throw FormatError(r->source(), header_offset, StrCat("bad PLD1 header: ", e.what()));
  }
  const std::size_t want =
      4u * (static_cast<std::size_t>(in_dim) * (1 + lda_dim) + plda_dim + 2u * plda_dim * plda_dim);
  if (r->remaining() != want)
    r->Throw(StrCat("PLD1 expects ", want, " parameter bytes, found ", r->remaining()));
  const std::uint64_t body = r->offset();
  b.lda.mean = GetMatrix(in_dim, 1, r);
  b.lda.projection = GetMatrix(lda_dim, in_dim, r);
  const Vec m = GetMatrix(plda_dim, 1, r);
  const Mat between = GetMatrix(plda_dim, plda_dim, r);
  const Mat within = GetMatrix(plda_dim, plda_dim, r);
  try {
    if (!b.lda.mean.allFinite() || !b.lda.projection.allFinite()) Fail("non-finite LDA parameters");
    b.plda = PldaModel(m, between, within);
  } catch (const Error &e) {
    throw FormatError(r->source(), body, e.what());
  }
  return b;
}

void SavePld1(const PldaBackend &backend, const std::string &path) {
  ByteWriter w;
  WritePld1(backend, &w);
  WriteFileAtomic(path, w.bytes());
}

PldaBackend LoadPld1(const std::string &path) {
  const std::string bytes = ReadFileBytes(path);
  ByteReader r(bytes, path);
  return ReadPld1(&r);
}

std::string FormatScores(const std::vector<ScoredTrial> &scores) {
  std::string out;
  char buf[64];
  for (const ScoredTrial &t : scores) {
    if (!std::isfinite(t.score)) Fail("score for (", t.id1, ", ", t.id2, ") is not finite");
    std::snprintf(buf, sizeof(buf), " %.6f\n", t.score);
    out += t.id1 + " " + t.id2 + buf;
  }
  return out;
}

std::vector<ScoredTrial> ParseScores(const std::string &text, const std::string &source) {
  std::vector<ScoredTrial> out;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    const std::string line = text.substr(pos, eol - pos);
    const std::size_t line_start = pos;
    pos = eol + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream is(line);
    ScoredTrial t;
    std::string score, rest;
    if (!(is >> t.id1 >> t.id2 >> score) || (is >> rest))
      throw FormatError(source, line_start, StrCat("line ", line_no, ": expected '<id1> <id2> <score>'"));
    char *end = nullptr;
    t.score = std::strtod(score.c_str(), &end);
    if (end != score.c_str() + score.size() || !std::isfinite(t.score))
      throw FormatError(source, line_start, StrCat("line ", line_no, ": bad score '", score, "'"));
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace affect
