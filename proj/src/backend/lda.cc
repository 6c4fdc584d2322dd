// backend/lda.cc

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
#include <map>

#include "affect/backend.h"

namespace affect {

namespace {

// Row scaled so its largest-magnitude entry is positive.
void FixSign(Vec *v) {
  Eigen::Index k = 0;
  v->cwiseAbs().maxCoeff(&k);
  if ((*v)(k) < 0) *v = -*v;
}

}  // namespace

LdaModel FitLda(const std::vector<Vec> &rows, const std::vector<int> &labels, int target_dim) {
  if (rows.size() != labels.size()) Fail("fit_lda: ", rows.size(), " rows but ", labels.size(), " labels");
  if (rows.empty()) Fail("fit_lda: no data");
  if (target_dim < 1) Fail("fit_lda: target dim must be >= 1");
  const int dim = static_cast<int>(rows[0].size());
  if (dim < 1) Fail("fit_lda: empty vectors");
  std::map<int, std::vector<int>> groups;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim) Fail("fit_lda: row ", i, " has dim ", rows[i].size(), ", expected ", dim);
    if (!rows[i].allFinite()) Fail("fit_lda: row ", i, " is not finite");
    groups[labels[i]].push_back(static_cast<int>(i));
  }
  if (groups.size() < 2) Fail("fit_lda: need at least 2 classes, got ", groups.size());
  for (const auto &[label, idx] : groups)
    if (idx.size() < 2) Fail("fit_lda: class ", label, " has fewer than 2 samples");

  const double n = static_cast<double>(rows.size());
  Vec mean = Vec::Zero(dim);
  for (const Vec &x : rows) mean += x;
  mean /= n;
  Mat sw = Mat::Zero(dim, dim), sb = Mat::Zero(dim, dim);
  for (const auto &[label, idx] : groups) {
    Vec mu = Vec::Zero(dim);
    for (int i : idx) mu += rows[i];
    mu /= static_cast<double>(idx.size());
    for (int i : idx) {
      const Vec d = rows[i] - mu;
      sw.selfadjointView<Eigen::Lower>().rankUpdate(d);
    }
    const Vec dm = mu - mean;
    sb.selfadjointView<Eigen::Lower>().rankUpdate(dm, static_cast<double>(idx.size()));
  }
  sw = sw.selfadjointView<Eigen::Lower>();
  sb = sb.selfadjointView<Eigen::Lower>();
  sw /= n;
  sb /= n;
  sw.diagonal().array() += 1e-6 * sw.trace() / dim;

  Eigen::LLT<Mat> llt(sw);
  if (llt.info() != Eigen::Success || !(sw.trace() > 0))
    Fail<NumericalError>("fit_lda: within-class scatter is singular after regularization");
  const Mat l = llt.matrixL();
  // C = L^-1 S_b L^-T
  Mat c = llt.matrixL().solve(sb);
  c = llt.matrixL().solve(c.transpose()).transpose();
  c = 0.5 * (c + c.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> eig(c);
  if (eig.info() != Eigen::Success) Fail<NumericalError>("fit_lda: eigensolver failed");

  const int out_dim = std::min(target_dim, dim);
  const int fisher = std::min(out_dim, static_cast<int>(groups.size()) - 1);
  // Whitened basis, one column per output row.
  Mat basis(dim, out_dim);
  for (int k = 0; k < fisher; ++k) basis.col(k) = eig.eigenvectors().col(dim - 1 - k);

  // Filler: principal axes of S_w, mapped to whitened space and
  // orthogonalized against what is already there.
  int filled = fisher;
  if (filled < out_dim) {
    Eigen::SelfAdjointEigenSolver<Mat> weig(sw);
    std::vector<Vec> cands;
    for (int j = dim - 1; j >= 0; --j) cands.push_back(l.transpose() * weig.eigenvectors().col(j));
    for (int j = 0; j < dim; ++j) cands.push_back(Vec::Unit(dim, j));
    for (const Vec &cand : cands) {
      if (filled == out_dim) break;
      Vec w = cand;
      for (int pass = 0; pass < 2; ++pass)
        for (int k = 0; k < filled; ++k) w -= basis.col(k).dot(w) * basis.col(k);
      const double norm = w.norm();
      if (!(norm > 1e-8 * cand.norm())) continue;
      basis.col(filled++) = w / norm;
    }
  }

  LdaModel model;
  model.mean = mean;
  model.num_classes = static_cast<int>(groups.size());
  model.fisher_dims = fisher;
  model.filler_dims = out_dim - fisher;
  // v = L^-T w
  model.projection = llt.matrixU().solve(basis).transpose();
  model.fisher_ratios.resize(out_dim);
  for (int k = 0; k < out_dim; ++k) {
    Vec v = model.projection.row(k).transpose();
    FixSign(&v);
    model.projection.row(k) = v.transpose();
    model.fisher_ratios(k) = v.dot(sb * v) / v.dot(sw * v);
  }
  if (!model.projection.allFinite()) Fail<NumericalError>("fit_lda: non-finite projection");
  return model;
}

Vec ApplyLda(const LdaModel &model, const Vec &x) {
  if (x.size() != model.InputDim())
    Fail("apply_lda: vector has dim ", x.size(), ", model expects ", model.InputDim());
  return model.projection * (x - model.mean);
}

}  // namespace affect
