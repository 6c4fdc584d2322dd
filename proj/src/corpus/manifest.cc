// corpus/manifest.cc

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
#include <set>

#include "affect/binary_io.h"
#include "affect/corpus.h"

namespace affect {

namespace {

std::string OptionalString(const nlohmann::json &j, const char *key) {
  if (!j.contains(key) || j[key].is_null()) return "";
  return j[key].get<std::string>();
}

// "3", 3 and "Ses03" all read as session 3.
int ParseSession(const nlohmann::json &v) {
  if (v.is_null()) return 0;
  if (v.is_number_integer()) return v.get<int>();
  std::string s = v.get<std::string>();
  if (s.rfind("Ses", 0) == 0) s = s.substr(3);
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
    Fail("session_id '", v.get<std::string>(), "' is not a session number");
  return std::stoi(s);
}

UtteranceRecord RecordFromJson(const nlohmann::json &j) {
  if (!j.is_object()) Fail("record is not a JSON object");
  static const std::set<std::string> known = {"utt_id",  "corpus",     "audio_path",
                                              "transcript", "raw_label", "speaker_id",
                                              "session_id", "intensity"};
  UtteranceRecord r;
  for (const char *key : {"utt_id", "corpus", "raw_label", "speaker_id"})
    if (!j.contains(key) || j[key].is_null()) Fail("missing required field '", key, "'");
  r.utt_id = j["utt_id"].get<std::string>();
  if (r.utt_id.empty() || r.utt_id.find_first_of(" \t\r\n") != std::string::npos)
    Fail("utt_id '", r.utt_id, "' must be non-empty without whitespace");
  r.corpus = ParseCorpus(j["corpus"].get<std::string>());
  r.raw_label = j["raw_label"].get<std::string>();
  r.speaker_id = j["speaker_id"].get<std::string>();
  r.audio_path = OptionalString(j, "audio_path");
  r.transcript = OptionalString(j, "transcript");
  r.intensity = OptionalString(j, "intensity");
  if (j.contains("session_id")) r.session_id = ParseSession(j["session_id"]);
  if (r.session_id < 0) Fail("session_id must be positive");
  if (r.corpus == Corpus::kIemocap && (r.session_id < 1 || r.session_id > 5))
    Fail("IEMOCAP record '", r.utt_id, "' needs session_id in 1..5");
  for (const auto &[key, value] : j.items())
    if (!known.count(key)) r.extra[key] = value;
  return r;
}

}  // namespace

bool UtteranceRecord::Excluded() const {
  try {
    CanonicalizeLabel(corpus, raw_label);
  } catch (const ExcludedLabel &) {
    return true;
  } catch (const InvalidArgument &) {
  }
  return false;
}

nlohmann::json UtteranceRecord::ToJson() const {
  nlohmann::json j = extra;
  j["utt_id"] = utt_id;
  j["corpus"] = CorpusName(corpus);
  j["raw_label"] = raw_label;
  j["speaker_id"] = speaker_id;
  if (!audio_path.empty()) j["audio_path"] = audio_path;
  if (!transcript.empty()) j["transcript"] = transcript;
  if (session_id) j["session_id"] = session_id;
  if (!intensity.empty()) j["intensity"] = intensity;
  return j;
}

Manifest::Manifest(std::vector<UtteranceRecord> records) : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i)
    if (!index_.emplace(records_[i].utt_id, i).second)
      Fail("duplicate utt_id '", records_[i].utt_id, "'");
}

Manifest Manifest::Parse(const std::string &text, const std::string &source) {
  std::vector<UtteranceRecord> records;
  std::unordered_map<std::string, int> seen;
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
    try {
      UtteranceRecord r = RecordFromJson(nlohmann::json::parse(line));
      auto [it, fresh] = seen.emplace(r.utt_id, line_no);
      if (!fresh)
        Fail("duplicate utt_id '", r.utt_id, "' (first seen on line ", it->second, ")");
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception &e) {
      throw FormatError(source, line_start, StrCat("line ", line_no, ": ", e.what()));
    } catch (const InvalidArgument &e) {
      throw FormatError(source, line_start, StrCat("line ", line_no, ": ", e.what()));
    }
  }
  return Manifest(std::move(records));
}

Manifest Manifest::Load(const std::string &path) { return Parse(ReadFileBytes(path), path); }

std::string Manifest::ToJsonl() const {
  std::string out;
  for (const UtteranceRecord &r : records_) out += r.ToJson().dump() + "\n";
  return out;
}

const UtteranceRecord *Manifest::Find(const std::string &utt_id) const {
  auto it = index_.find(utt_id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

const UtteranceRecord &Manifest::at(const std::string &utt_id) const {
  const UtteranceRecord *r = Find(utt_id);
  if (!r) Fail("utterance '", utt_id, "' is not in the manifest");
  return *r;
}

Manifest Manifest::WithoutExcluded(std::size_t *dropped) const {
  std::vector<UtteranceRecord> kept;
  for (const UtteranceRecord &r : records_)
    if (!r.Excluded()) kept.push_back(r);
  if (dropped) *dropped = records_.size() - kept.size();
  return Manifest(std::move(kept));
}

Manifest Manifest::Subset(const std::vector<std::string> &ids) const {
  std::set<std::string> want(ids.begin(), ids.end());
  for (const std::string &id : want) at(id);
  std::vector<UtteranceRecord> out;
  for (const UtteranceRecord &r : records_)
    if (want.count(r.utt_id)) out.push_back(r);
  return Manifest(std::move(out));
}

std::vector<std::string> Manifest::Ids() const {
  std::vector<std::string> ids;
  for (const UtteranceRecord &r : records_) ids.push_back(r.utt_id);
  return ids;
}

int CanonicalIndex(const UtteranceRecord &r) {
  return static_cast<int>(CanonicalizeLabel(r.corpus, r.raw_label));
}

std::string PolicyLabel(const UtteranceRecord &r, LabelPolicy policy) {
  return policy == LabelPolicy::kCanonical ? CanonicalName(CanonicalizeLabel(r.corpus, r.raw_label))
                                           : NormalizeRawLabel(r.corpus, r.raw_label);
}

namespace {

// Pool ids per canonical label, sorted.
std::vector<std::vector<std::string>> PoolByLabel(const Manifest &pool) {
  std::vector<std::vector<std::string>> by(kNumCanonicalEmotions);
  for (const UtteranceRecord &r : pool.records()) {
    if (r.Excluded()) continue;
    by[CanonicalIndex(r)].push_back(r.utt_id);
  }
  for (auto &v : by) std::sort(v.begin(), v.end());
  return by;
}

}  // namespace

std::string SampleTextSurrogate(const UtteranceRecord &record, const Manifest &pool,
                                std::uint64_t seed) {
  const int label = CanonicalIndex(record);
  const auto by = PoolByLabel(pool);
  const auto &cands = by[label];
  if (cands.empty())
    Fail("surrogate pool has no ", CanonicalName(static_cast<CanonicalEmotion>(label)),
         " utterances for '", record.utt_id, "'");
  Rng rng(DeriveSeed(seed, record.utt_id));
  return cands[std::uniform_int_distribution<std::size_t>(0, cands.size() - 1)(rng)];
}

std::map<std::string, std::string> AssignTextSurrogates(const Manifest &records,
                                                        const Manifest &pool,
                                                        std::uint64_t seed) {
  auto by = PoolByLabel(pool);
  for (int c = 0; c < kNumCanonicalEmotions; ++c) {
    Rng rng(DeriveSeed(seed, StrCat("surrogate-pool:", c)));
    std::shuffle(by[c].begin(), by[c].end(), rng);
  }
  std::vector<std::string> ids = records.Ids();
  std::sort(ids.begin(), ids.end());
  std::vector<std::size_t> dealt(kNumCanonicalEmotions, 0);
  std::map<std::string, std::string> out;
  for (const std::string &id : ids) {
    const UtteranceRecord &r = records.at(id);
    const int c = CanonicalIndex(r);
    if (by[c].empty())
      Fail("surrogate pool has no ", CanonicalName(static_cast<CanonicalEmotion>(c)),
           " utterances for '", id, "'");
    out[id] = by[c][dealt[c]++ % by[c].size()];
  }
  return out;
}

std::vector<Fold> MakeFolds(const Manifest &manifest, int k) {
  if (k < 2) Fail("make_folds: k must be >= 2");
  std::set<int> sessions;
  for (const UtteranceRecord &r : manifest.records()) {
    if (r.session_id <= 0) Fail("make_folds: record '", r.utt_id, "' has no session");
    sessions.insert(r.session_id);
  }
  if (static_cast<int>(sessions.size()) != k)
    Fail("make_folds: manifest has ", sessions.size(), " sessions, k = ", k);
  std::vector<std::string> ids = manifest.Ids();
  std::sort(ids.begin(), ids.end());
  std::vector<Fold> folds;
  for (int s : sessions) {
    Fold f;
    f.session = s;
    for (const std::string &id : ids)
      (manifest.at(id).session_id == s ? f.test : f.train).push_back(id);
    folds.push_back(std::move(f));
  }
  return folds;
}

}  // namespace affect
