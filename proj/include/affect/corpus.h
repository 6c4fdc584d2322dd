// affect/corpus.h

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

#ifndef AFFECT_CORPUS_H_
#define AFFECT_CORPUS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "affect/common.h"
#include "json.hpp"

namespace affect {

enum class Corpus { kIemocap, kCremaD, kDailyDialog, kOther };

/// "IEMOCAP", "Crema-D", "DailyDialog", "other" (case-insensitive on input).
Corpus ParseCorpus(const std::string &name);
const char *CorpusName(Corpus c);

/// The five grouped classes, in this fixed order.
enum class CanonicalEmotion { kHappiness = 0, kSadness, kFearSurprise, kAngerDisgust, kNeutral };
inline constexpr int kNumCanonicalEmotions = 5;

/// "Happiness", "Sadness", "Fear/Surprise", "Anger/Disgust", "Neutral".
const char *CanonicalName(CanonicalEmotion e);
CanonicalEmotion ParseCanonical(const std::string &name);
std::vector<std::string> CanonicalNames();

/// Raised for labels that mark utterances to drop (IEMOCAP "xxx").
class ExcludedLabel : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// The raw label inventory of a corpus, in spelled-out form.
std::vector<std::string> RawLabelInventory(Corpus corpus);

/// Maps a corpus label (full name, case-insensitive, or the corpus' native
/// short code such as "fru" or "HAP") to its spelled-out form, e.g.
/// "Frustration". Throws ExcludedLabel for "xxx" and InvalidArgument for
/// labels outside the corpus inventory.
std::string NormalizeRawLabel(Corpus corpus, const std::string &raw_label);

/// Grouped class of a corpus label.
CanonicalEmotion CanonicalizeLabel(Corpus corpus, const std::string &raw_label);

struct UtteranceRecord {
  std::string utt_id;
  Corpus corpus = Corpus::kOther;
  std::string audio_path;   // empty for text-only records
  std::string transcript;   // empty if absent
  std::string raw_label;
  std::string speaker_id;
  int session_id = 0;       // 0 = none
  std::string intensity;    // empty if absent
  /// Unrecognized fields (e.g. annotator agreement), kept but unused.
  nlohmann::json extra = nlohmann::json::object();

  bool Excluded() const;
  nlohmann::json ToJson() const;
};

/// Validated, immutable set of records with unique ids.
class Manifest {
 public:
  Manifest() = default;
  explicit Manifest(std::vector<UtteranceRecord> records);

  /// One JSON object per line; blank lines are skipped. Errors name the line.
  static Manifest Parse(const std::string &text, const std::string &source = "<manifest>");
  static Manifest Load(const std::string &path);
  std::string ToJsonl() const;

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<UtteranceRecord> &records() const { return records_; }
  const UtteranceRecord &at(const std::string &utt_id) const;
  const UtteranceRecord *Find(const std::string &utt_id) const;
  bool Contains(const std::string &utt_id) const { return Find(utt_id) != nullptr; }

  /// Copy without excluded-label records; `dropped` receives their count.
  Manifest WithoutExcluded(std::size_t *dropped = nullptr) const;
  /// Records whose id is in `ids`, in manifest order.
  Manifest Subset(const std::vector<std::string> &ids) const;
  std::vector<std::string> Ids() const;

 private:
  std::vector<UtteranceRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Canonical class index (0..4) of a record's label.
int CanonicalIndex(const UtteranceRecord &r);

/// Uniform choice among `pool` records with the same canonical label as
/// `record`, drawn from a stream derived from `seed` and the record id.
std::string SampleTextSurrogate(const UtteranceRecord &record, const Manifest &pool,
                                std::uint64_t seed);

/// Surrogates for every record in `records`. Within each canonical label the
/// pool is shuffled once with the seed and dealt out in sorted-id order, so
/// no pool item repeats until the label's pool is exhausted; after that it
/// cycles. The result is independent of record order.
std::map<std::string, std::string> AssignTextSurrogates(const Manifest &records,
                                                        const Manifest &pool, std::uint64_t seed);

struct Fold {
  int session = 0;
  std::vector<std::string> train, test;  // sorted ids
};

/// Leave-one-session-out folds. The manifest must hold exactly k distinct
/// sessions; fold i tests the i-th smallest session.
std::vector<Fold> MakeFolds(const Manifest &manifest, int k = 5);

enum class LabelPolicy { kCanonical, kRaw };
LabelPolicy ParseLabelPolicy(const std::string &name);
const char *LabelPolicyName(LabelPolicy p);

/// Label string of a record under a policy: canonical class name, or the
/// spelled-out raw label.
std::string PolicyLabel(const UtteranceRecord &r, LabelPolicy policy);

struct TrialPair {
  std::string id1, id2;
  bool is_target = false;
};

struct TrialPolicy {
  enum Kind { kAllPairs, kBalanced } kind = kAllPairs;
  std::uint64_t seed = 0;
  std::int64_t n_target = 0, n_nontarget = 0;
};

/// Pairs over `ids` (sorted first, so order does not matter); an utterance is
/// never paired with itself. Balanced sampling draws without replacement.
std::vector<TrialPair> MakeTrials(const std::vector<std::string> &ids, const Manifest &manifest,
                                  const TrialPolicy &policy, LabelPolicy label_policy);

/// `<id1> <id2> target|nontarget` per line.
std::string FormatTrials(const std::vector<TrialPair> &trials);
std::vector<TrialPair> ParseTrials(const std::string &text, const std::string &source);
void WriteTrials(const std::string &path, const std::vector<TrialPair> &trials);
std::vector<TrialPair> ReadTrials(const std::string &path);

}  // namespace affect

#endif  // AFFECT_CORPUS_H_
