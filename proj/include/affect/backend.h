// affect/backend.h

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

#ifndef AFFECT_BACKEND_H_
#define AFFECT_BACKEND_H_

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "affect/binary_io.h"
#include "affect/common.h"

namespace affect {

struct BackendConfig {
  int lda_target_dim = 200;
  int em_max_iters = 50;
  double em_tol = 1e-6;          // stop when the LL gain per sample drops below this
  bool length_normalize = false;
  /// Corpora whose records train the backend; empty pools every corpus.
  std::vector<std::string> train_corpora;
  std::uint64_t seed = 0;

  void Validate() const;
  nlohmann::json ToJson() const;
  /// Rejects unknown keys; missing keys keep their defaults.
  static BackendConfig FromJson(const nlohmann::json &j);
};

/// Projection P (d_out x D_in) applied to x - mean. The first `fisher_dims`
/// rows are generalized eigenvectors of (S_b, S_w) by decreasing ratio; the
/// remaining `filler_dims` rows are principal axes of the within-class
/// scatter, S_w-orthogonalized against everything before them. Every row has
/// unit within-class variance.
struct LdaModel {
  Vec mean;
  Mat projection;
  Vec fisher_ratios;   // one per row; filler rows carry their own ratio too
  int fisher_dims = 0;
  int filler_dims = 0;
  int num_classes = 0;

  int InputDim() const { return static_cast<int>(mean.size()); }
  int OutputDim() const { return static_cast<int>(projection.rows()); }
};

/// labels[i] is the class index of rows[i]; any integers will do.
LdaModel FitLda(const std::vector<Vec> &rows, const std::vector<int> &labels, int target_dim);
Vec ApplyLda(const LdaModel &model, const Vec &x);

/// Two-covariance model: x = y + e, y ~ N(m, Phi_b), e ~ N(0, Phi_w).
/// Construction precomputes V with V' Phi_w V = I and V' Phi_b V = diag(psi),
/// so scoring works per dimension on u = V' (x - m).
class PldaModel {
 public:
  PldaModel() = default;
  PldaModel(Vec mean, Mat between, Mat within);

  int Dim() const { return static_cast<int>(mean_.size()); }
  const Vec &mean() const { return mean_; }
  const Mat &between() const { return between_; }
  const Mat &within() const { return within_; }
  const Vec &psi() const { return psi_; }
  const Mat &transform() const { return transform_; }
  /// Eigenvalues of Phi_b (clamped at 0) and Phi_w, ascending.
  Vec BetweenEigenvalues() const;
  Vec WithinEigenvalues() const;

  /// u = V' (x - m).
  Vec Transform(const Vec &x) const;
  /// log p(x_1..n | one shared class) for vectors already transformed.
  double ClassLogLikelihood(int n, const Vec &sum_u, double sum_sq) const;
  /// Total marginal log-likelihood of labelled data.
  double LogLikelihood(const std::vector<Vec> &rows, const std::vector<int> &labels) const;

 private:
  Vec mean_;
  Mat between_, within_;
  Mat transform_;     // V
  Vec psi_;
  double log_det_within_ = 0;
};

struct PldaFitLog {
  std::vector<double> log_likelihood;  // before each update, then the final one
  int iterations = 0;
  bool converged = false;
};

PldaModel FitPlda(const std::vector<Vec> &rows, const std::vector<int> &labels,
                  const BackendConfig &cfg, PldaFitLog *log = nullptr);

/// Sufficient statistics of an enrollment set in transformed coordinates.
struct Enrollment {
  int n = 0;
  Vec sum_u;
};
Enrollment Enroll(const PldaModel &model, const std::vector<Vec> &vectors);

/// log p(probe, enrollment | same) - log p(probe) - log p(enrollment).
double ScoreEnrollment(const PldaModel &model, const Vec &probe, const Enrollment &e);

/// Same-class LLR of a pair. Exactly symmetric, and equal to ScoreEnrollment
/// with a single enrollment vector.
double ScorePair(const PldaModel &model, const Vec &u1, const Vec &u2);

struct Identification {
  std::vector<double> scores;  // one per enrolled class, in input order
  int best = -1;               // ties go to the lowest index
};
Identification Identify(const PldaModel &model, const Vec &probe,
                        const std::vector<Enrollment> &classes);
Identification Identify(const PldaModel &model, const Vec &probe,
                        const std::vector<std::vector<Vec>> &enrollments);

/// LDA followed by pLDA, as trained and stored together.
struct PldaBackend {
  LdaModel lda;
  PldaModel plda;
  BackendConfig config;
  std::vector<std::string> class_labels;
  nlohmann::json metadata = nlohmann::json::object();

  /// Raw embedding -> pLDA space (LDA, then optional length normalization).
  Vec Project(const Vec &x) const;
  double Score(const Vec &x1, const Vec &x2) const;
};

/// Fits LDA on the raw vectors, then pLDA on the projections. Labels index
/// into class_labels. The result is rounded through float so that it equals
/// what a PLD1 file round trip gives back.
PldaBackend FitBackend(const std::vector<Vec> &rows, const std::vector<int> &labels,
                       const std::vector<std::string> &class_labels, const BackendConfig &cfg);

// PLD1: "PLD1", u32 LE header length, JSON header, then f32 LE blobs for the
// LDA mean, P (row-major), the pLDA mean, Phi_b, Phi_w.
void WritePld1(const PldaBackend &backend, ByteWriter *w);
PldaBackend ReadPld1(ByteReader *r);
void SavePld1(const PldaBackend &backend, const std::string &path);
PldaBackend LoadPld1(const std::string &path);

struct ScoredTrial {
  std::string id1, id2;
  double score = 0;
  bool is_target = false;
};

// Scores file: "<id1> <id2> <score:%.6f>" per line.
std::string FormatScores(const std::vector<ScoredTrial> &scores);
/// Reads scores; target flags are not stored there and come back false.
std::vector<ScoredTrial> ParseScores(const std::string &text, const std::string &source);

}  // namespace affect

#endif  // AFFECT_BACKEND_H_
