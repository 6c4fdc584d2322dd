// metrics/metrics.cc

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
#include <cstdio>
#include <map>
#include <tuple>

#include "affect/metrics.h"

namespace affect {

EerResult ComputeEer(const std::vector<double> &target, const std::vector<double> &nontarget) {
  if (target.empty() || nontarget.empty())
    Fail("compute_eer: need at least one target and one nontarget trial (got ", target.size(),
         " and ", nontarget.size(), ")");
  for (double s : target)
    if (!std::isfinite(s)) Fail("compute_eer: non-finite target score");
  for (double s : nontarget)
    if (!std::isfinite(s)) Fail("compute_eer: non-finite nontarget score");
  std::vector<double> tgt(target), non(nontarget);
  std::sort(tgt.begin(), tgt.end());
  std::sort(non.begin(), non.end());
  std::vector<double> all(tgt);
  all.insert(all.end(), non.begin(), non.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  const double nt = static_cast<double>(tgt.size()), nn = static_cast<double>(non.size());
  EerResult res;
  res.n_target = tgt.size();
  res.n_nontarget = non.size();
  // Below every score: everything accepted.
  double prev_t = all.front() - 1.0, prev_far = 1.0, prev_d = 1.0;
  std::size_t fr = 0, accepted_non = 0;  // targets below t, nontargets below t
  for (std::size_t k = 0; k < all.size(); ++k) {
    const double t = k + 1 < all.size() ? 0.5 * (all[k] + all[k + 1]) : all.back() + 1.0;
    while (fr < tgt.size() && tgt[fr] < t) ++fr;
    while (accepted_non < non.size() && non[accepted_non] < t) ++accepted_non;
    const double far = static_cast<double>(non.size() - accepted_non) / nn;
    const double frr = static_cast<double>(fr) / nt;
    const double d = far - frr;
    if (d <= 0) {
      if (d == 0) {
        res.eer = far;
        res.threshold = t;
      } else {
        const double lambda = prev_d / (prev_d - d);
        res.eer = prev_far + lambda * (far - prev_far);
        res.threshold = prev_t + lambda * (t - prev_t);
      }
      return res;
    }
    prev_t = t;
    prev_far = far;
    prev_d = d;
  }
  res.eer = 1.0;
  res.threshold = prev_t;
  return res;
}

EerResult ComputeEer(const std::vector<ScoredTrial> &trials) {
  std::vector<double> target, nontarget;
  for (const ScoredTrial &t : trials) (t.is_target ? target : nontarget).push_back(t.score);
  return ComputeEer(target, nontarget);
}

ClassificationMetrics ComputeClassificationMetrics(const std::vector<std::string> &preds,
                                                   const std::vector<std::string> &golds,
                                                   const std::vector<std::string> &classes) {
  if (preds.size() != golds.size())
    Fail("classification metrics: ", preds.size(), " predictions but ", golds.size(), " gold labels");
  if (preds.empty()) Fail("classification metrics: no predictions");
  if (classes.empty()) Fail("classification metrics: empty class list");
  std::map<std::string, int> index;
  for (std::size_t c = 0; c < classes.size(); ++c)
    if (!index.emplace(classes[c], static_cast<int>(c)).second) Fail("duplicate class '", classes[c], "'");
  auto lookup = [&](const std::string &l) {
    auto it = index.find(l);
    if (it == index.end()) Fail("classification metrics: unknown label '", l, "'");
    return it->second;
  };
  const std::size_t k = classes.size();
  ClassificationMetrics m;
  m.n = preds.size();
  m.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < preds.size(); ++i) ++m.confusion[lookup(golds[i])][lookup(preds[i])];
  std::size_t correct = 0;
  for (std::size_t c = 0; c < k; ++c) correct += m.confusion[c][c];
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.n);
  for (std::size_t c = 0; c < k; ++c) {
    ClassMetrics cm;
    cm.label = classes[c];
    std::size_t predicted = 0;
    for (std::size_t g = 0; g < k; ++g) predicted += m.confusion[g][c];
    for (std::size_t p = 0; p < k; ++p) cm.support += m.confusion[c][p];
    const double tp = static_cast<double>(m.confusion[c][c]);
    cm.precision = predicted ? tp / static_cast<double>(predicted) : 0.0;
    cm.recall = cm.support ? tp / static_cast<double>(cm.support) : 0.0;
    cm.f1 = cm.precision + cm.recall > 0 ? 2 * cm.precision * cm.recall / (cm.precision + cm.recall) : 0.0;
    m.macro_f1 += cm.f1;
    m.weighted_f1 += cm.f1 * static_cast<double>(cm.support);
    m.per_class.push_back(cm);
  }
  m.macro_f1 /= static_cast<double>(k);
  m.weighted_f1 /= static_cast<double>(m.n);
  return m;
}

std::vector<ScoredTrial> AttachTargets(const std::vector<ScoredTrial> &scores,
                                       const std::vector<TrialPair> &trials) {
  std::map<std::pair<std::string, std::string>, double> by;
  for (const ScoredTrial &s : scores)
    if (!by.emplace(std::make_pair(s.id1, s.id2), s.score).second)
      Fail("scores: duplicate pair (", s.id1, ", ", s.id2, ")");
  std::vector<ScoredTrial> out;
  for (const TrialPair &t : trials) {
    auto it = by.find({t.id1, t.id2});
    if (it == by.end()) it = by.find({t.id2, t.id1});
    if (it == by.end()) Fail("scores: trial (", t.id1, ", ", t.id2, ") was not scored");
    out.push_back({t.id1, t.id2, it->second, t.is_target});
  }
  return out;
}

nlohmann::json EvalReport::ToJson() const {
  nlohmann::json j;
  j["accuracy"] = has_classification ? nlohmann::json(cls.accuracy) : nlohmann::json();
  j["macro_f1"] = has_classification ? nlohmann::json(cls.macro_f1) : nlohmann::json();
  j["weighted_f1"] = has_classification ? nlohmann::json(cls.weighted_f1) : nlohmann::json();
  j["eer"] = has_eer ? nlohmann::json(eer.eer) : nlohmann::json();
  j["threshold"] = has_eer ? nlohmann::json(eer.threshold) : nlohmann::json();
  j["n_trials"] = has_eer ? eer.n_target + eer.n_nontarget : 0;
  nlohmann::json per = nlohmann::json::object();
  if (has_classification)
    for (const ClassMetrics &c : cls.per_class)
      per[c.label] = {{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}, {"support", c.support}};
  j["per_class"] = per;
  return j;
}

std::string EvalReport::ToText() const {
  std::string out;
  char buf[256];
  if (has_classification) {
    std::snprintf(buf, sizeof(buf), "%-16s %9s %9s %9s %8s\n", "class", "precision", "recall", "f1", "support");
    out += buf;
    for (const ClassMetrics &c : cls.per_class) {
      std::snprintf(buf, sizeof(buf), "%-16s %9.4f %9.4f %9.4f %8zu\n", c.label.c_str(), c.precision,
                    c.recall, c.f1, c.support);
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), "accuracy %.4f  macro_f1 %.4f  weighted_f1 %.4f  (n=%zu)\n",
                  cls.accuracy, cls.macro_f1, cls.weighted_f1, cls.n);
    out += buf;
  }
  if (has_eer) {
    std::snprintf(buf, sizeof(buf), "eer %.4f  threshold %.6f  (targets %zu, nontargets %zu)\n", eer.eer,
                  eer.threshold, eer.n_target, eer.n_nontarget);
    out += buf;
  }
  return out;
}

}  // namespace affect
