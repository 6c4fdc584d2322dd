// corpus/trials.cc

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
#include <sstream>
#include <tuple>

#include "affect/binary_io.h"
#include "affect/corpus.h"

namespace affect {

namespace {

// k distinct indices from [0, n), in increasing order (partial Fisher-Yates).
std::vector<std::size_t> SampleIndices(std::size_t n, std::size_t k, Rng *rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, n - 1)(*rng);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::vector<TrialPair> MakeTrials(const std::vector<std::string> &ids, const Manifest &manifest,
                                  const TrialPolicy &policy, LabelPolicy label_policy) {
  std::vector<std::string> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    Fail("make_trials: duplicate id in the input list");
  if (sorted.size() < 2) Fail("make_trials: need at least 2 utterances, got ", sorted.size());
  std::vector<std::string> labels;
  for (const std::string &id : sorted) labels.push_back(PolicyLabel(manifest.at(id), label_policy));

  const std::size_t n = sorted.size();
  if (policy.kind == TrialPolicy::kAllPairs) {
    std::vector<TrialPair> out;
    out.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        out.push_back({sorted[i], sorted[j], labels[i] == labels[j]});
    return out;
  }

  if (policy.n_target < 0 || policy.n_nontarget < 0 || policy.n_target + policy.n_nontarget == 0)
    Fail("make_trials: balanced policy needs positive trial counts");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> target, nontarget;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      (labels[i] == labels[j] ? target : nontarget).emplace_back(i, j);
  if (static_cast<std::size_t>(policy.n_target) > target.size())
    Fail("make_trials: asked for ", policy.n_target, " target trials but only ", target.size(),
         " target pairs exist");
  if (static_cast<std::size_t>(policy.n_nontarget) > nontarget.size())
    Fail("make_trials: asked for ", policy.n_nontarget, " nontarget trials but only ",
         nontarget.size(), " nontarget pairs exist");
  Rng rng(policy.seed);
  std::vector<TrialPair> out;
  for (std::size_t k : SampleIndices(target.size(), policy.n_target, &rng))
    out.push_back({sorted[target[k].first], sorted[target[k].second], true});
  for (std::size_t k : SampleIndices(nontarget.size(), policy.n_nontarget, &rng))
    out.push_back({sorted[nontarget[k].first], sorted[nontarget[k].second], false});
  std::sort(out.begin(), out.end(), [](const TrialPair &a, const TrialPair &b) {
    return std::tie(a.id1, a.id2) < std::tie(b.id1, b.id2);
  });
  return out;
}

std::string FormatTrials(const std::vector<TrialPair> &trials) {
  std::string out;
  for (const TrialPair &t : trials)
    out += t.id1 + " " + t.id2 + (t.is_target ? " target\n" : " nontarget\n");
  return out;
}

std::vector<TrialPair> ParseTrials(const std::string &text, const std::string &source) {
  std::vector<TrialPair> out;
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
    std::string a, b, kind, rest;
    if (!(is >> a >> b >> kind) || (is >> rest))
      throw FormatError(source, line_start,
                        StrCat("line ", line_no, ": expected '<id1> <id2> target|nontarget'"));
    if (kind != "target" && kind != "nontarget")
      throw FormatError(source, line_start,
                        StrCat("line ", line_no, ": bad trial type '", kind, "'"));
    if (a == b)
      throw FormatError(source, line_start, StrCat("line ", line_no, ": utterance paired with itself"));
    out.push_back({a, b, kind == "target"});
  }
  return out;
}

void WriteTrials(const std::string &path, const std::vector<TrialPair> &trials) {
  WriteFileAtomic(path, FormatTrials(trials));
}

std::vector<TrialPair> ReadTrials(const std::string &path) {
  return ParseTrials(ReadFileBytes(path), path);
}

}  // namespace affect
