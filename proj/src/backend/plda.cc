// backend/plda.cc

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
#include <map>
#include <numbers>

#include "affect/backend.h"

namespace affect {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

Mat Symmetrize(const Mat &a) { return 0.5 * (a + a.transpose()); }

struct Groups {
  std::vector<std::vector<int>> members;  // by class, in order of first label value
  int dim = 0;
};

Groups GroupRows(const std::vector<Vec> &rows, const std::vector<int> &labels, const char *op) {
  if (rows.size() != labels.size()) Fail(op, ": ", rows.size(), " rows but ", labels.size(), " labels");
  if (rows.empty()) Fail(op, ": no data");
  Groups g;
  g.dim = static_cast<int>(rows[0].size());
  std::map<int, std::vector<int>> by;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != g.dim) Fail(op, ": row ", i, " has dim ", rows[i].size(), ", expected ", g.dim);
    if (!rows[i].allFinite()) Fail(op, ": row ", i, " is not finite");
    by[labels[i]].push_back(static_cast<int>(i));
  }
  if (by.size() < 2) Fail(op, ": need at least 2 classes, got ", by.size());
  for (auto &[label, idx] : by) {
    if (idx.size() < 2) Fail(op, ": class ", label, " has fewer than 2 samples");
    g.members.push_back(std::move(idx));
  }
  return g;
}

// Per-dimension LLR of a probe coordinate a against an enrollment with n
// vectors summing to s. Written so that n = 1 is exactly symmetric in (a, s).
double LlrTerm(double psi, double a, double s, int n) {
  const double cn = 1.0 + n * psi, c1 = 1.0 + psi, cn1 = 1.0 + (n + 1) * psi;
  const double logs = 0.5 * std::log(cn) + 0.5 * std::log(c1) - 0.5 * std::log(cn1);
  const double sa = s + a;
  return logs + 0.5 * psi * (sa * sa / cn1 - (s * s / cn + a * a / c1));
}

}  // namespace

PldaModel::PldaModel(Vec mean, Mat between, Mat within)
    : mean_(std::move(mean)), between_(Symmetrize(between)), within_(Symmetrize(within)) {
  const int d = Dim();
  if (d < 1) Fail("plda: empty model");
  if (between_.rows() != d || between_.cols() != d || within_.rows() != d || within_.cols() != d)
    Fail("plda: covariance shapes do not match mean dim ", d);
  if (!mean_.allFinite() || !between_.allFinite() || !within_.allFinite())
    Fail<NumericalError>("plda: non-finite parameters");
  Eigen::LLT<Mat> llt(within_);
  if (llt.info() != Eigen::Success) Fail<NumericalError>("plda: within-class covariance is not positive definite");
  Mat c = llt.matrixL().solve(between_);
  c = Symmetrize(llt.matrixL().solve(c.transpose()).transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(c);
  if (eig.info() != Eigen::Success) Fail<NumericalError>("plda: eigensolver failed");
  psi_ = eig.eigenvalues().cwiseMax(0.0);
  transform_ = llt.matrixU().solve(eig.eigenvectors());  // V = L^-T Q
  log_det_within_ = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Vec PldaModel::BetweenEigenvalues() const {
  return Eigen::SelfAdjointEigenSolver<Mat>(between_, Eigen::EigenvaluesOnly).eigenvalues().cwiseMax(0.0);
}

Vec PldaModel::WithinEigenvalues() const {
  return Eigen::SelfAdjointEigenSolver<Mat>(within_, Eigen::EigenvaluesOnly).eigenvalues();
}

Vec PldaModel::Transform(const Vec &x) const {
  if (x.size() != Dim()) Fail("plda: vector has dim ", x.size(), ", model expects ", Dim());
  if (!x.allFinite()) Fail("plda: non-finite input vector");
  return transform_.transpose() * (x - mean_);
}

double PldaModel::ClassLogLikelihood(int n, const Vec &sum_u, double sum_sq) const {
  double ll = -0.5 * n * (Dim() * kLog2Pi + log_det_within_) - 0.5 * sum_sq;
  for (int k = 0; k < Dim(); ++k) {
    const double c = 1.0 + n * psi_(k);
    ll += -0.5 * std::log(c) + 0.5 * psi_(k) * sum_u(k) * sum_u(k) / c;
  }
  return ll;
}

double PldaModel::LogLikelihood(const std::vector<Vec> &rows, const std::vector<int> &labels) const {
  const Groups g = GroupRows(rows, labels, "plda log-likelihood");
  double total = 0;
  for (const auto &idx : g.members) {
    Vec s = Vec::Zero(Dim());
    double q = 0;
    for (int i : idx) {
      const Vec u = Transform(rows[i]);
      s += u;
      q += u.squaredNorm();
    }
    total += ClassLogLikelihood(static_cast<int>(idx.size()), s, q);
  }
  return total;
}

PldaModel FitPlda(const std::vector<Vec> &rows, const std::vector<int> &labels,
                  const BackendConfig &cfg, PldaFitLog *log) {
  cfg.Validate();
  const Groups g = GroupRows(rows, labels, "fit_plda");
  const int d = g.dim;
  const int num_classes = static_cast<int>(g.members.size());
  const double n_total = static_cast<double>(rows.size());

  // Class means and the scatter around them; neither changes across EM.
  std::vector<Vec> means;
  std::vector<double> counts;
  Mat scatter = Mat::Zero(d, d);
  for (const auto &idx : g.members) {
    Vec mu = Vec::Zero(d);
    for (int i : idx) mu += rows[i];
    mu /= static_cast<double>(idx.size());
    for (int i : idx) scatter.selfadjointView<Eigen::Lower>().rankUpdate(rows[i] - mu);
    means.push_back(mu);
    counts.push_back(static_cast<double>(idx.size()));
  }
  scatter = scatter.selfadjointView<Eigen::Lower>();

  Vec m = Vec::Zero(d);
  for (const Vec &mu : means) m += mu;
  m /= num_classes;
  Mat within = scatter / n_total;
  within.diagonal().array() += 1e-6 * within.trace() / d;
  Mat between = Mat::Zero(d, d);
  for (const Vec &mu : means) between.selfadjointView<Eigen::Lower>().rankUpdate(mu - m);
  between = Mat(between.selfadjointView<Eigen::Lower>()) / num_classes;

  PldaModel model(m, between, within);
  PldaFitLog local;
  PldaFitLog &lg = log ? *log : local;
  lg = PldaFitLog{};
  double ll = model.LogLikelihood(rows, labels);
  lg.log_likelihood.push_back(ll);

  for (int iter = 0; iter < cfg.em_max_iters; ++iter) {
    // E-step in the diagonalized coordinates: u = V'(x - m), x - m = A u.
    const Mat &v = model.transform();
    const Mat a = v.transpose().fullPivLu().inverse();   // A = V^-T
    const Vec &psi = model.psi();
    std::vector<Vec> post(num_classes);
    Vec var_sum = Vec::Zero(d), nvar_sum = Vec::Zero(d);
    for (int k = 0; k < num_classes; ++k) {
      const Vec s = counts[k] * (v.transpose() * (means[k] - model.mean()));
      Vec z(d);
      for (int j = 0; j < d; ++j) {
        const double c = 1.0 + counts[k] * psi(j);
        z(j) = psi(j) * s(j) / c;
        var_sum(j) += psi(j) / c;
        nvar_sum(j) += counts[k] * psi(j) / c;
      }
      post[k] = model.mean() + a * z;
    }
    // M-step.
    Vec m_new = Vec::Zero(d);
    for (const Vec &y : post) m_new += y;
    m_new /= num_classes;
    Mat b_new = a * var_sum.asDiagonal() * a.transpose();
    for (const Vec &y : post) b_new.selfadjointView<Eigen::Lower>().rankUpdate(y - m_new);
    b_new.triangularView<Eigen::StrictlyUpper>() = b_new.transpose().triangularView<Eigen::StrictlyUpper>();
    b_new /= num_classes;
    Mat w_new = scatter + a * nvar_sum.asDiagonal() * a.transpose();
    for (int k = 0; k < num_classes; ++k)
      w_new.selfadjointView<Eigen::Lower>().rankUpdate(means[k] - post[k], counts[k]);
    w_new.triangularView<Eigen::StrictlyUpper>() = w_new.transpose().triangularView<Eigen::StrictlyUpper>();
    w_new /= n_total;

    model = PldaModel(m_new, b_new, w_new);
    const double ll_new = model.LogLikelihood(rows, labels);
    lg.log_likelihood.push_back(ll_new);
    lg.iterations = iter + 1;
    if ((ll_new - ll) / n_total < cfg.em_tol) {
      lg.converged = true;
      break;
    }
    ll = ll_new;
  }
  return model;
}

Enrollment Enroll(const PldaModel &model, const std::vector<Vec> &vectors) {
  if (vectors.empty()) Fail("identify: empty enrollment set");
  Enrollment e;
  e.sum_u = Vec::Zero(model.Dim());
  for (const Vec &x : vectors) e.sum_u += model.Transform(x);
  e.n = static_cast<int>(vectors.size());
  return e;
}

double ScoreEnrollment(const PldaModel &model, const Vec &probe, const Enrollment &e) {
  if (e.n < 1) Fail("identify: empty enrollment set");
  if (e.sum_u.size() != model.Dim()) Fail("identify: enrollment dim does not match model");
  const Vec a = model.Transform(probe);
  double llr = 0;
  for (int k = 0; k < model.Dim(); ++k) llr += LlrTerm(model.psi()(k), a(k), e.sum_u(k), e.n);
  return llr;
}

double ScorePair(const PldaModel &model, const Vec &u1, const Vec &u2) {
  const Vec a = model.Transform(u1), b = model.Transform(u2);
  double llr = 0;
  for (int k = 0; k < model.Dim(); ++k) llr += LlrTerm(model.psi()(k), a(k), b(k), 1);
  return llr;
}

Identification Identify(const PldaModel &model, const Vec &probe, const std::vector<Enrollment> &classes) {
  if (classes.empty()) Fail("identify: no enrolled classes");
  Identification out;
  for (const Enrollment &e : classes) out.scores.push_back(ScoreEnrollment(model, probe, e));
  out.best = 0;
  for (std::size_t k = 1; k < out.scores.size(); ++k)
    if (out.scores[k] > out.scores[out.best]) out.best = static_cast<int>(k);
  return out;
}

Identification Identify(const PldaModel &model, const Vec &probe,
                        const std::vector<std::vector<Vec>> &enrollments) {
  std::vector<Enrollment> classes;
  for (const auto &set : enrollments) classes.push_back(Enroll(model, set));
  return Identify(model, probe, classes);
}

}  // namespace affect
