// corpus/labels.cc

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
#include <cctype>

#include "affect/corpus.h"

namespace affect {

namespace {

using E = CanonicalEmotion;

std::string Lower(std::string s) {
  for (char &c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

struct LabelEntry {
  const char *name;   // spelled-out label
  const char *code;   // native short code, or nullptr
  CanonicalEmotion canonical;
};

// Grouping of corpus labels into the five canonical classes.
const std::vector<LabelEntry> &Inventory(Corpus corpus) {
  static const std::vector<LabelEntry> iemocap = {
      {"Happiness", "hap", E::kHappiness},     {"Excitement", "exc", E::kHappiness},
      {"Sadness", "sad", E::kSadness},         {"Fear", "fea", E::kFearSurprise},
      {"Surprise", "sur", E::kFearSurprise},   {"Anger", "ang", E::kAngerDisgust},
      {"Disgust", "dis", E::kAngerDisgust},    {"Frustration", "fru", E::kAngerDisgust},
      {"Neutral", "neu", E::kNeutral},
  };
  static const std::vector<LabelEntry> crema = {
      {"Happiness", "hap", E::kHappiness},  {"Excitement", nullptr, E::kHappiness},
      {"Sadness", "sad", E::kSadness},      {"Fear", "fea", E::kFearSurprise},
      {"Anger", "ang", E::kAngerDisgust},   {"Disgust", "dis", E::kAngerDisgust},
      {"Neutral", "neu", E::kNeutral},
  };
  static const std::vector<LabelEntry> daily = {
      {"Happiness", nullptr, E::kHappiness},  {"Sadness", nullptr, E::kSadness},
      {"Fear", nullptr, E::kFearSurprise},    {"Surprise", nullptr, E::kFearSurprise},
      {"Anger", nullptr, E::kAngerDisgust},   {"Disgust", nullptr, E::kAngerDisgust},
      {"Other", "no emotion", E::kNeutral},
  };
  // Corpus-neutral records: the canonical names themselves plus every
  // unambiguous emotion name.
  static const std::vector<LabelEntry> other = {
      {"Happiness", nullptr, E::kHappiness},        {"Excitement", nullptr, E::kHappiness},
      {"Sadness", nullptr, E::kSadness},            {"Fear/Surprise", nullptr, E::kFearSurprise},
      {"Fear", nullptr, E::kFearSurprise},          {"Surprise", nullptr, E::kFearSurprise},
      {"Anger/Disgust", nullptr, E::kAngerDisgust}, {"Anger", nullptr, E::kAngerDisgust},
      {"Disgust", nullptr, E::kAngerDisgust},       {"Frustration", nullptr, E::kAngerDisgust},
      {"Neutral", nullptr, E::kNeutral},
  };
  switch (corpus) {
    case Corpus::kIemocap: return iemocap;
    case Corpus::kCremaD: return crema;
    case Corpus::kDailyDialog: return daily;
    case Corpus::kOther: return other;
  }
  return other;
}

const LabelEntry &Lookup(Corpus corpus, const std::string &raw_label) {
  const std::string key = Lower(raw_label);
  if (corpus == Corpus::kIemocap && key == "xxx")
    Fail<ExcludedLabel>("label 'xxx' is excluded (no annotator agreement)");
  for (const LabelEntry &e : Inventory(corpus))
    if (key == Lower(e.name) || (e.code && key == e.code)) return e;
  Fail("unknown ", CorpusName(corpus), " label '", raw_label, "'");
}

}  // namespace

Corpus ParseCorpus(const std::string &name) {
  const std::string k = Lower(name);
  if (k == "iemocap") return Corpus::kIemocap;
  if (k == "crema-d" || k == "cremad" || k == "crema_d") return Corpus::kCremaD;
  if (k == "dailydialog") return Corpus::kDailyDialog;
  if (k == "other") return Corpus::kOther;
  Fail("unknown corpus '", name, "' (expected IEMOCAP, Crema-D, DailyDialog or other)");
}

const char *CorpusName(Corpus c) {
  switch (c) {
    case Corpus::kIemocap: return "IEMOCAP";
    case Corpus::kCremaD: return "Crema-D";
    case Corpus::kDailyDialog: return "DailyDialog";
    case Corpus::kOther: return "other";
  }
  return "other";
}

const char *CanonicalName(CanonicalEmotion e) {
  switch (e) {
    case E::kHappiness: return "Happiness";
    case E::kSadness: return "Sadness";
    case E::kFearSurprise: return "Fear/Surprise";
    case E::kAngerDisgust: return "Anger/Disgust";
    case E::kNeutral: return "Neutral";
  }
  return "?";
}

CanonicalEmotion ParseCanonical(const std::string &name) {
  for (int i = 0; i < kNumCanonicalEmotions; ++i)
    if (Lower(name) == Lower(CanonicalName(static_cast<E>(i)))) return static_cast<E>(i);
  Fail("unknown canonical emotion '", name, "'");
}

std::vector<std::string> CanonicalNames() {
  std::vector<std::string> out;
  for (int i = 0; i < kNumCanonicalEmotions; ++i) out.push_back(CanonicalName(static_cast<E>(i)));
  return out;
}

std::vector<std::string> RawLabelInventory(Corpus corpus) {
  std::vector<std::string> out;
  for (const LabelEntry &e : Inventory(corpus)) out.push_back(e.name);
  return out;
}

std::string NormalizeRawLabel(Corpus corpus, const std::string &raw_label) {
  return Lookup(corpus, raw_label).name;
}

CanonicalEmotion CanonicalizeLabel(Corpus corpus, const std::string &raw_label) {
  return Lookup(corpus, raw_label).canonical;
}

LabelPolicy ParseLabelPolicy(const std::string &name) {
  if (name == "canonical") return LabelPolicy::kCanonical;
  if (name == "raw") return LabelPolicy::kRaw;
  Fail("unknown label policy '", name, "' (expected canonical or raw)");
}

const char *LabelPolicyName(LabelPolicy p) {
  return p == LabelPolicy::kCanonical ? "canonical" : "raw";
}

}  // namespace affect
