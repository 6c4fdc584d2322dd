// Unit tests for labels, manifests, surrogates, folds, trials and EMB1.

#include <filesystem>
#include <set>

#include "affect/corpus.h"
#include "affect/embeddings.h"
#include "doctest.h"
#include "oracles.h"

using namespace affect;
using namespace affect::testing;

namespace {

std::string Line(const std::string &id, const std::string &corpus, const std::string &label,
                 int session = 0, const std::string &extra = "") {
  std::string s = R"({"utt_id":")" + id + R"(","corpus":")" + corpus + R"(","raw_label":")" +
                  label + R"(","speaker_id":"spk)" + id.substr(0, 1) + "\"";
  if (session) s += ",\"session_id\":" + std::to_string(session);
  return s + extra + "}\n";
}

}  // namespace

TEST_CASE("label grouping, exhaustive") {
  int checked = 0;
  for (const char *corpus : {"IEMOCAP", "Crema-D", "DailyDialog"}) {
    for (const std::string &label : GroupingAllLabels()) {
      const std::string want = GroupingExpected(corpus, label);
      const Corpus c = ParseCorpus(corpus);
      if (want.empty()) {
        CHECK_THROWS_AS(CanonicalizeLabel(c, label), InvalidArgument);
      } else {
        CHECK(CanonicalName(CanonicalizeLabel(c, label)) == want);
        ++checked;
      }
    }
    // The library's inventory is exactly the table's column.
    for (const std::string &label : RawLabelInventory(ParseCorpus(corpus)))
      CHECK(!GroupingExpected(corpus, label).empty());
  }
  CHECK(checked == 9 + 7 + 7);
  CHECK_THROWS_AS(CanonicalizeLabel(Corpus::kIemocap, "xxx"), ExcludedLabel);
  try {
    CanonicalizeLabel(Corpus::kIemocap, "xxx");
  } catch (const ExcludedLabel &e) {
    CHECK(std::string(e.what()).find("excluded") != std::string::npos);
  }
}

TEST_CASE("label examples and aliases") {
  CHECK(CanonicalizeLabel(Corpus::kIemocap, "Frustration") == CanonicalEmotion::kAngerDisgust);
  CHECK(CanonicalizeLabel(Corpus::kCremaD, "Excitement") == CanonicalEmotion::kHappiness);
  CHECK(CanonicalizeLabel(Corpus::kDailyDialog, "Other") == CanonicalEmotion::kNeutral);
  CHECK(CanonicalizeLabel(Corpus::kIemocap, "fru") == CanonicalEmotion::kAngerDisgust);
  CHECK(CanonicalizeLabel(Corpus::kCremaD, "HAP") == CanonicalEmotion::kHappiness);
  CHECK(NormalizeRawLabel(Corpus::kIemocap, "exc") == "Excitement");
  CHECK(CanonicalizeLabel(Corpus::kOther, "Fear/Surprise") == CanonicalEmotion::kFearSurprise);
  CHECK_THROWS_AS(CanonicalizeLabel(Corpus::kCremaD, "Surprise"), InvalidArgument);
  CHECK_THROWS_AS(CanonicalizeLabel(Corpus::kIemocap, "Other"), InvalidArgument);
  CHECK(CanonicalNames().size() == 5);
  CHECK_THROWS_AS(ParseCorpus("VoxCeleb"), InvalidArgument);
}

TEST_CASE("manifest parsing") {
  const std::string text = Line("a1", "IEMOCAP", "hap", 1) + "\n" +
                           Line("b1", "Crema-D", "ANG", 0, R"(,"intensity":"HI","agreement":0.5)") +
                           Line("c1", "DailyDialog", "Other", 0, R"(,"transcript":"hi there")");
  Manifest m = Manifest::Parse(text);
  CHECK(m.size() == 3);
  CHECK(m.at("a1").session_id == 1);
  CHECK(m.at("b1").intensity == "HI");
  CHECK(m.at("b1").extra["agreement"] == 0.5);
  CHECK(m.at("c1").transcript == "hi there");
  CHECK(Manifest::Parse(m.ToJsonl()).ToJsonl() == m.ToJsonl());

  auto error_of = [](const std::string &t) -> std::string {
    try {
      Manifest::Parse(t, "m.jsonl");
    } catch (const FormatError &e) {
      return e.what();
    }
    return "";
  };
  CHECK(error_of(Line("a1", "IEMOCAP", "hap", 1) + Line("a1", "IEMOCAP", "sad", 2))
            .find("duplicate utt_id 'a1'") != std::string::npos);
  CHECK(error_of(Line("a1", "IEMOCAP", "hap")).find("session") != std::string::npos);
  CHECK(error_of(Line("a1", "IEMOCAP", "hap", 1) + "{not json\n").find("line 2") != std::string::npos);
  CHECK(error_of(R"({"utt_id":"x","corpus":"other","raw_label":"Neutral"})")
            .find("speaker_id") != std::string::npos);
  CHECK(Manifest::Parse(R"({"utt_id":"s","corpus":"IEMOCAP","raw_label":"neu","speaker_id":"p","session_id":"Ses04"})")
            .at("s").session_id == 4);

  Manifest with_x = Manifest::Parse(Line("a1", "IEMOCAP", "hap", 1) + Line("a2", "IEMOCAP", "xxx", 1));
  std::size_t dropped = 0;
  CHECK(with_x.WithoutExcluded(&dropped).size() == 1);
  CHECK(dropped == 1);
}

TEST_CASE("text surrogates") {
  std::string pool_text, crema_text;
  const char *labels[] = {"Happiness", "Sadness", "Fear", "Anger", "Other", "Surprise", "Disgust"};
  for (int i = 0; i < 21; ++i)
    pool_text += Line(StrCat("d", i), "DailyDialog", labels[i % 7]);
  for (int i = 0; i < 12; ++i)
    crema_text += Line(StrCat("c", i), "Crema-D", i % 2 ? "HAP" : "SAD");
  Manifest pool = Manifest::Parse(pool_text), crema = Manifest::Parse(crema_text);

  const UtteranceRecord &happy = crema.at("c1");
  const std::string s = SampleTextSurrogate(happy, pool, 3);
  CHECK(CanonicalIndex(pool.at(s)) == static_cast<int>(CanonicalEmotion::kHappiness));
  CHECK(SampleTextSurrogate(happy, pool, 3) == s);

  Manifest neutral_only = Manifest::Parse(Line("d0", "DailyDialog", "Other"));
  CHECK_THROWS_AS(SampleTextSurrogate(happy, neutral_only, 3), InvalidArgument);

  const auto assigned = AssignTextSurrogates(crema, pool, 5);
  CHECK(assigned.size() == 12);
  std::map<std::string, int> uses;
  for (const auto &[id, sur] : assigned) {
    CHECK(CanonicalIndex(crema.at(id)) == CanonicalIndex(pool.at(sur)));
    ++uses[sur];
  }
  // 3 pool items per label, 6 records per label: each used exactly twice.
  for (const auto &[sur, n] : uses) CHECK(n == 2);

  // Independent of record order.
  std::vector<UtteranceRecord> rev(crema.records().rbegin(), crema.records().rend());
  CHECK(AssignTextSurrogates(Manifest(rev), pool, 5) == assigned);
}

TEST_CASE("session folds") {
  std::string text;
  for (int i = 0; i < 40; ++i) text += Line(StrCat("u", i), "IEMOCAP", "neu", 1 + (i * 7) % 5);
  Manifest m = Manifest::Parse(text);
  const auto folds = MakeFolds(m, 5);
  REQUIRE(folds.size() == 5);
  std::set<std::string> all;
  for (const Fold &f : folds) {
    CHECK(f.train.size() + f.test.size() == 40);
    for (const std::string &id : f.test) {
      CHECK(m.at(id).session_id == f.session);
      CHECK(all.insert(id).second);
    }
    for (const std::string &id : f.train) CHECK(m.at(id).session_id != f.session);
  }
  CHECK(all.size() == 40);
  CHECK(folds[2].session == 3);

  std::vector<UtteranceRecord> rev(m.records().rbegin(), m.records().rend());
  const auto folds2 = MakeFolds(Manifest(rev), 5);
  for (int i = 0; i < 5; ++i) CHECK(folds2[i].test == folds[i].test);

  CHECK_THROWS_AS(MakeFolds(m, 4), InvalidArgument);
  CHECK_THROWS_AS(MakeFolds(Manifest::Parse(Line("x", "other", "Neutral")), 5), InvalidArgument);
}

TEST_CASE("trials") {
  Manifest m = Manifest::Parse(Line("a", "IEMOCAP", "hap", 1) + Line("b", "IEMOCAP", "exc", 1) +
                               Line("c", "IEMOCAP", "fea", 2) + Line("d", "IEMOCAP", "sur", 2) +
                               Line("e", "IEMOCAP", "hap", 3));
  auto all = MakeTrials({"d", "c", "b", "a"}, m, {}, LabelPolicy::kCanonical);
  CHECK(all.size() == 6);
  auto find = [](const std::vector<TrialPair> &t, const std::string &x, const std::string &y) {
    for (const TrialPair &p : t)
      if (p.id1 == x && p.id2 == y) return p.is_target;
    FAIL("pair not found");
    return false;
  };
  CHECK(find(all, "c", "d"));
  CHECK(find(all, "a", "b"));
  CHECK(!find(all, "a", "c"));
  auto raw = MakeTrials({"a", "b", "c", "d", "e"}, m, {}, LabelPolicy::kRaw);
  CHECK(!find(raw, "c", "d"));
  CHECK(!find(raw, "a", "b"));
  CHECK(find(raw, "a", "e"));
  for (const TrialPair &p : raw) CHECK(p.id1 != p.id2);

  // Target count = sum over classes of n_c (n_c - 1) / 2.
  std::string text;
  for (int i = 0; i < 30; ++i) text += Line(StrCat("u", i), "other", CanonicalNames()[i % 4 == 3 ? 4 : i % 3]);
  Manifest big = Manifest::Parse(text);
  auto t = MakeTrials(big.Ids(), big, {}, LabelPolicy::kCanonical);
  std::map<std::string, int> counts;
  for (const auto &r : big.records()) ++counts[PolicyLabel(r, LabelPolicy::kCanonical)];
  std::size_t want = 0, got = 0;
  for (const auto &[k, n] : counts) want += n * (n - 1) / 2;
  for (const TrialPair &p : t) got += p.is_target;
  CHECK(got == want);

  TrialPolicy bal{TrialPolicy::kBalanced, 9, 20, 30};
  auto b1 = MakeTrials(big.Ids(), big, bal, LabelPolicy::kCanonical);
  CHECK(b1.size() == 50);
  std::size_t nt = 0;
  for (const TrialPair &p : b1) nt += p.is_target;
  CHECK(nt == 20);
  auto b2 = MakeTrials(big.Ids(), big, bal, LabelPolicy::kCanonical);
  CHECK(FormatTrials(b1) == FormatTrials(b2));
  bal.n_target = 100000;
  CHECK_THROWS_AS(MakeTrials(big.Ids(), big, bal, LabelPolicy::kCanonical), InvalidArgument);
  CHECK_THROWS_AS(MakeTrials({"a"}, m, {}, LabelPolicy::kCanonical), InvalidArgument);

  const auto parsed = ParseTrials(FormatTrials(all), "t");
  CHECK(FormatTrials(parsed) == FormatTrials(all));
  CHECK_THROWS_AS(ParseTrials("a b maybe\n", "t"), FormatError);
  CHECK_THROWS_AS(ParseTrials("a a target\n", "t"), FormatError);
}

TEST_CASE("EMB1 round trip and fusion") {
  namespace fs = std::filesystem;
  Rng rng(3);
  std::normal_distribution<float> g(0, 1);
  EmbeddingSet speech(Modality::kSpeech), text(Modality::kText);
  for (int i = 0; i < 4; ++i) {
    EmbeddingRecord s{StrCat("utt", i), Modality::kSpeech, VecF(512)};
    EmbeddingRecord t{StrCat("utt", i), Modality::kText, VecF(768)};
    for (int k = 0; k < 512; ++k) s.vector(k) = g(rng);
    for (int k = 0; k < 768; ++k) t.vector(k) = g(rng);
    speech.Add(s);
    text.Add(t);
  }
  const fs::path p = fs::temp_directory_path() / "affect_test_text.emb";
  SaveEmb1(text, p.string());
  const std::string bytes = ReadFileBytes(p.string());
  CHECK(bytes.substr(0, 4) == "EMB1");
  CHECK(bytes.size() == 12 + 4 * (2 + 4 + 768 * 4));
  EmbeddingSet back = LoadEmb1(p.string(), Modality::kText);
  CHECK(back.dim() == 768);
  CHECK(back.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(back.records()[i].vector == text.records()[i].vector);
  ByteWriter w;
  WriteEmb1(back, &w);
  CHECK(w.bytes() == bytes);

  EmbeddingRecord f = FuseEmbeddings(speech.records()[1], &text.records()[1]);
  CHECK(f.dim() == 1280);
  CHECK(f.vector.head(512) == speech.records()[1].vector);
  CHECK(f.vector.tail(768) == text.records()[1].vector);
  CHECK(FuseEmbeddings(speech.records()[1], nullptr).vector == speech.records()[1].vector);
  CHECK_THROWS_AS(FuseEmbeddings(speech.records()[1], &text.records()[2]), InvalidArgument);
  CHECK(FuseEmbeddings(speech.records()[1], &text.records()[2], "utt2").dim() == 1280);

  EmbeddingSet fused = FuseSets(speech, &text, {{"utt0", "utt3"}}, false);
  CHECK(fused.at("utt0").vector.tail(768) == text.at("utt3").vector);
  CHECK(fused.at("utt1").vector.tail(768) == text.at("utt1").vector);
  CHECK(FuseSets(speech, nullptr, {}, true).at("utt2").vector == speech.at("utt2").vector);
  CHECK_THROWS_AS(FuseSets(speech, nullptr, {}, false), InvalidArgument);

  std::string bad = bytes;
  bad[0] = 'X';
  ByteReader br(bad, "text.emb");
  try {
    ReadEmb1(&br);
    FAIL("expected FormatError");
  } catch (const FormatError &e) {
    CHECK(e.source() == "text.emb");
    CHECK(e.offset() == 0);
  }
  bad = bytes + "x";
  ByteReader trailing(bad, "text.emb");
  CHECK_THROWS_AS(ReadEmb1(&trailing), FormatError);
}
