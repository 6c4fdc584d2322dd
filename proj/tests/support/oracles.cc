#include "oracles.h"

#include <algorithm>
#include <map>
#include <cmath>
#include <numbers>

namespace affect::testing {

double GaussianLogPdf(const Vec &x, const Vec &mean, const Mat &cov) {
  Eigen::FullPivLU<Mat> lu(cov);
  const Vec d = x - mean;
  const double quad = d.dot(lu.inverse() * d);
  return -0.5 * (x.size() * std::log(2 * std::numbers::pi) + std::log(lu.determinant()) + quad);
}

double JointGaussianLlr(const Vec &u1, const Vec &u2, const Vec &mean,
                        const Mat &between, const Mat &within) {
  const int d = static_cast<int>(u1.size());
  Mat same(2 * d, 2 * d), diff = Mat::Zero(2 * d, 2 * d);
  same.topLeftCorner(d, d) = between + within;
  same.bottomRightCorner(d, d) = between + within;
  same.topRightCorner(d, d) = between;
  same.bottomLeftCorner(d, d) = between;
  diff.topLeftCorner(d, d) = between + within;
  diff.bottomRightCorner(d, d) = between + within;
  Vec x(2 * d), m(2 * d);
  x << u1, u2;
  m << mean, mean;
  return GaussianLogPdf(x, m, same) - GaussianLogPdf(x, m, diff);
}

double BruteForceEer(const std::vector<double> &target,
                     const std::vector<double> &nontarget) {
  std::vector<double> all(target);
  all.insert(all.end(), nontarget.begin(), nontarget.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  std::vector<double> thresholds;
  thresholds.push_back(all.front() - 1.0);
  for (std::size_t i = 0; i + 1 < all.size(); ++i)
    thresholds.push_back(0.5 * (all[i] + all[i + 1]));
  thresholds.push_back(all.back() + 1.0);

  double prev_far = 0, prev_d = 0;
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    long fa = 0, fr = 0;
    for (double s : nontarget) fa += s >= thresholds[k];
    for (double s : target) fr += s < thresholds[k];
    const double far = fa / static_cast<double>(nontarget.size());
    const double frr = fr / static_cast<double>(target.size());
    const double d = far - frr;
    if (d <= 0) {
      if (d == 0) return far;
      const double lambda = prev_d / (prev_d - d);
      return prev_far + lambda * (far - prev_far);
    }
    prev_far = far;
    prev_d = d;
  }
  return 1.0;
}

LdaOracleResult LdaOracle(const std::vector<Vec> &rows, const std::vector<int> &labels) {
  const int d = static_cast<int>(rows[0].size());
  std::map<int, std::vector<Vec>> classes;
  for (std::size_t i = 0; i < rows.size(); ++i) classes[labels[i]].push_back(rows[i]);
  Vec mean = Vec::Zero(d);
  for (const Vec &x : rows) mean += x;
  mean /= static_cast<double>(rows.size());
  LdaOracleResult r;
  r.within = Mat::Zero(d, d);
  r.between = Mat::Zero(d, d);
  for (const auto &[label, xs] : classes) {
    Vec mu = Vec::Zero(d);
    for (const Vec &x : xs) mu += x;
    mu /= static_cast<double>(xs.size());
    for (const Vec &x : xs) r.within += (x - mu) * (x - mu).transpose();
    r.between += static_cast<double>(xs.size()) * (mu - mean) * (mu - mean).transpose();
  }
  r.within /= static_cast<double>(rows.size());
  r.between /= static_cast<double>(rows.size());
  r.within += (1e-6 * r.within.trace() / d) * Mat::Identity(d, d);
  Eigen::EigenSolver<Mat> es(r.within.fullPivLu().solve(r.between));
  std::vector<int> order(d);
  for (int i = 0; i < d; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return es.eigenvalues()(a).real() > es.eigenvalues()(b).real();
  });
  r.directions.resize(d, d);
  r.ratios.resize(d);
  for (int k = 0; k < d; ++k) {
    r.directions.col(k) = es.eigenvectors().col(order[k]).real().normalized();
    r.ratios(k) = es.eigenvalues()(order[k]).real();
  }
  return r;
}

double SortedEer(std::vector<double> target, std::vector<double> nontarget) {
  std::sort(target.begin(), target.end());
  std::sort(nontarget.begin(), nontarget.end());
  std::vector<double> all(target);
  all.insert(all.end(), nontarget.begin(), nontarget.end());
  double best_gap = 2.0, eer = 0.0;
  for (double t : all) {
    const double frr = (std::lower_bound(target.begin(), target.end(), t) - target.begin()) /
                       static_cast<double>(target.size());
    const double far = (nontarget.end() - std::lower_bound(nontarget.begin(), nontarget.end(), t)) /
                       static_cast<double>(nontarget.size());
    if (std::fabs(far - frr) < best_gap) {
      best_gap = std::fabs(far - frr);
      eer = 0.5 * (far + frr);
    }
  }
  return eer;
}

Mat NaiveCmn(const Mat &x, int window, bool center) {
  const int n = static_cast<int>(x.rows());
  Mat out(x.rows(), x.cols());
  for (int t = 0; t < n; ++t) {
    int start, len;
    if (center) {
      len = std::min(window, n);
      start = std::clamp(t - window / 2, 0, n - len);
    } else {
      start = std::max(0, t - window + 1);
      len = t + 1 - start;
    }
    for (int c = 0; c < x.cols(); ++c) {
      double sum = 0;
      for (int s = start; s < start + len; ++s) sum += x(s, c);
      out(t, c) = x(t, c) - sum / len;
    }
  }
  return out;
}

namespace {

double MeanLoss(const BasicTdnn<double> &model, const std::vector<BasicSample<double>> &batch,
                double dropout, std::uint64_t seed) {
  double acc = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const Vec logits = model
                           .Forward(batch[k].feats, ForwardMode::kTrain, dropout,
                                    DeriveSeed(seed, StrCat("sample:", k)))
                           .logits;
    const double m = logits.maxCoeff();
    acc += m + std::log((logits.array() - m).exp().sum()) - logits(batch[k].label);
  }
  return acc / batch.size();
}

}  // namespace

std::string GroupingExpected(const std::string &corpus, const std::string &label) {
  struct Row {
    const char *canonical, *iemocap, *crema, *daily;
  };
  static const Row rows[] = {
      {"Happiness", "Happiness,Excitement", "Happiness,Excitement", "Happiness"},
      {"Sadness", "Sadness", "Sadness", "Sadness"},
      {"Fear/Surprise", "Fear,Surprise", "Fear", "Fear,Surprise"},
      {"Anger/Disgust", "Anger,Disgust,Frustration", "Anger,Disgust", "Anger,Disgust"},
      {"Neutral", "Neutral", "Neutral", "Other"},
  };
  for (const Row &r : rows) {
    const char *cell = corpus == "IEMOCAP" ? r.iemocap : corpus == "Crema-D" ? r.crema : r.daily;
    std::string list = std::string(",") + cell + ",";
    if (list.find("," + label + ",") != std::string::npos) return r.canonical;
  }
  return "";
}

std::vector<std::string> GroupingAllLabels() {
  return {"Happiness", "Excitement", "Sadness", "Fear", "Surprise", "Anger",
          "Disgust", "Frustration", "Neutral", "Other", "xxx"};
}

void RandomizeBiases(BasicTdnn<double> *model, double scale, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (int i = 0; i < model->NumLayers(); ++i)
    for (Eigen::Index j = 0; j < model->b(i).size(); ++j) model->b(i)(j) = u(rng);
}

double MaxGradientRelativeError(const BasicTdnn<double> &model,
                                const std::vector<BasicSample<double>> &batch,
                                double dropout, std::uint64_t dropout_seed, double step) {
  double loss = 0.0;
  const auto grads = model.ComputeGradients(batch, dropout, dropout_seed, &loss);
  BasicTdnn<double> probe = model;
  double worst = 0.0;
  auto check = [&](double *param, double analytic) {
    const double saved = *param;
    *param = saved + step;
    const double up = MeanLoss(probe, batch, dropout, dropout_seed);
    *param = saved - step;
    const double down = MeanLoss(probe, batch, dropout, dropout_seed);
    *param = saved;
    const double numeric = (up - down) / (2 * step);
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
    worst = std::max(worst, std::fabs(analytic - numeric) / denom);
  };
  for (int i = 0; i < probe.NumLayers(); ++i) {
    if (!probe.spec(i).HasParams()) continue;
    for (Eigen::Index j = 0; j < probe.W(i).size(); ++j)
      check(probe.W(i).data() + j, grads.dW[i].data()[j]);
    for (Eigen::Index j = 0; j < probe.b(i).size(); ++j)
      check(probe.b(i).data() + j, grads.db[i].data()[j]);
  }
  return worst;
}

}  // namespace affect::testing
