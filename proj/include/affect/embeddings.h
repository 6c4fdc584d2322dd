// affect/embeddings.h

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

#ifndef AFFECT_EMBEDDINGS_H_
#define AFFECT_EMBEDDINGS_H_

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "affect/binary_io.h"
#include "affect/common.h"

namespace affect {

enum class Modality { kSpeech, kText, kFused };
const char *ModalityName(Modality m);

struct EmbeddingRecord {
  std::string utt_id;
  Modality modality = Modality::kSpeech;
  VecF vector;

  int dim() const { return static_cast<int>(vector.size()); }
  void Validate() const;
};

/// Ordered set of same-dimension embeddings with unique ids.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  explicit EmbeddingSet(Modality modality) : modality_(modality) {}

  void Add(EmbeddingRecord r);
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  int dim() const { return dim_; }
  Modality modality() const { return modality_; }
  const std::vector<EmbeddingRecord> &records() const { return records_; }
  const EmbeddingRecord *Find(const std::string &id) const;
  const EmbeddingRecord &at(const std::string &id) const;

 private:
  Modality modality_ = Modality::kSpeech;
  int dim_ = 0;
  std::vector<EmbeddingRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

// EMB1: "EMB1", u32 LE dim, u32 LE count, then per record u16 LE id length,
// id bytes (UTF-8), dim x f32 LE.
void WriteEmb1(const EmbeddingSet &set, ByteWriter *w);
EmbeddingSet ReadEmb1(ByteReader *r, Modality modality = Modality::kSpeech);
void SaveEmb1(const EmbeddingSet &set, const std::string &path);
EmbeddingSet LoadEmb1(const std::string &path, Modality modality = Modality::kSpeech);

/// speech ++ text. `text` may be null only in speech-only mode, which returns
/// the speech record unchanged. The text id must equal the speech id or
/// `mapped_text_id` (the surrogate chosen for it).
EmbeddingRecord FuseEmbeddings(const EmbeddingRecord &speech, const EmbeddingRecord *text,
                               const std::string &mapped_text_id = "");

/// Fuses every speech record. Text is looked up by the surrogate mapping if
/// it has an entry for the id, else by the same id. Missing text is an error
/// unless `speech_only`.
EmbeddingSet FuseSets(const EmbeddingSet &speech, const EmbeddingSet *text,
                      const std::map<std::string, std::string> &surrogates, bool speech_only);

}  // namespace affect

#endif  // AFFECT_EMBEDDINGS_H_
