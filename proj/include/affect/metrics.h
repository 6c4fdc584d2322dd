// affect/metrics.h

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

#ifndef AFFECT_METRICS_H_
#define AFFECT_METRICS_H_

#include <string>
#include <vector>

#include "json.hpp"

#include "affect/backend.h"
#include "affect/corpus.h"

namespace affect {

struct EerResult {
  double eer = 0;
  double threshold = 0;
  std::size_t n_target = 0, n_nontarget = 0;
};

/// FAR(t) = nontargets with score >= t, FRR(t) = targets with score < t.
/// Operating points sit below every score, between each pair of adjacent
/// distinct scores and above every score; the EER is read off where
/// FAR - FRR changes sign, interpolating linearly between the two points.
EerResult ComputeEer(const std::vector<ScoredTrial> &trials);
EerResult ComputeEer(const std::vector<double> &target, const std::vector<double> &nontarget);

struct ClassMetrics {
  std::string label;
  double precision = 0, recall = 0, f1 = 0;
  std::size_t support = 0;
};

struct ClassificationMetrics {
  double accuracy = 0, macro_f1 = 0, weighted_f1 = 0;
  std::vector<ClassMetrics> per_class;
  std::vector<std::vector<std::size_t>> confusion;  // [gold][pred]
  std::size_t n = 0;
};

/// F1 is 0 for a class when precision + recall is 0. Classes with no gold
/// support still count in the macro average.
ClassificationMetrics ComputeClassificationMetrics(const std::vector<std::string> &preds,
                                                   const std::vector<std::string> &golds,
                                                   const std::vector<std::string> &classes);

/// Joins scores with trial keys by (id1, id2). Every trial must be scored.
std::vector<ScoredTrial> AttachTargets(const std::vector<ScoredTrial> &scores,
                                       const std::vector<TrialPair> &trials);

struct EvalReport {
  bool has_classification = false, has_eer = false;
  ClassificationMetrics cls;
  EerResult eer;

  /// {accuracy, macro_f1, weighted_f1, eer, threshold, n_trials, per_class};
  /// metrics that were not computed are null.
  nlohmann::json ToJson() const;
  std::string ToText() const;
};

}  // namespace affect

#endif  // AFFECT_METRICS_H_
