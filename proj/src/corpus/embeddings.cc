// corpus/embeddings.cc

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

#include <limits>

#include "affect/embeddings.h"

namespace affect {

const char *ModalityName(Modality m) {
  switch (m) {
    case Modality::kSpeech: return "speech";
    case Modality::kText: return "text";
    case Modality::kFused: return "fused";
  }
  return "?";
}

void EmbeddingRecord::Validate() const {
  if (utt_id.empty()) Fail("embedding with empty utt_id");
  if (utt_id.size() > std::numeric_limits<std::uint16_t>::max())
    Fail("utt_id longer than 65535 bytes");
  if (vector.size() == 0) Fail("embedding '", utt_id, "' is empty");
  if (!vector.allFinite()) Fail("embedding '", utt_id, "' has non-finite entries");
}

void EmbeddingSet::Add(EmbeddingRecord r) {
  r.Validate();
  if (records_.empty()) dim_ = r.dim();
  if (r.dim() != dim_)
    Fail("embedding '", r.utt_id, "' has dim ", r.dim(), ", set has dim ", dim_);
  if (!index_.emplace(r.utt_id, records_.size()).second)
    Fail("duplicate embedding id '", r.utt_id, "'");
  records_.push_back(std::move(r));
}

const EmbeddingRecord *EmbeddingSet::Find(const std::string &id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

const EmbeddingRecord &EmbeddingSet::at(const std::string &id) const {
  const EmbeddingRecord *r = Find(id);
  if (!r) Fail("no embedding for utterance '", id, "'");
  return *r;
}

void WriteEmb1(const EmbeddingSet &set, ByteWriter *w) {
  w->PutBytes("EMB1");
  w->PutU32(static_cast<std::uint32_t>(set.dim()));
  w->PutU32(static_cast<std::uint32_t>(set.size()));
  for (const EmbeddingRecord &r : set.records()) {
    w->PutU16(static_cast<std::uint16_t>(r.utt_id.size()));
    w->PutBytes(r.utt_id);
    w->PutF32s(std::span<const float>(r.vector.data(), r.vector.size()));
  }
}

EmbeddingSet ReadEmb1(ByteReader *r, Modality modality) {
  r->ExpectMagic("EMB1");
  const std::uint32_t dim = r->GetU32();
  const std::uint32_t count = r->GetU32();
  if (dim == 0 && count > 0) r->Throw("EMB1 dim is 0");
  EmbeddingSet set(modality);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint64_t at = r->offset();
    EmbeddingRecord rec;
    rec.modality = modality;
    const std::uint16_t len = r->GetU16();
    rec.utt_id = std::string(r->GetBytes(len));
    rec.vector.resize(dim);
    r->GetF32s(std::span<float>(rec.vector.data(), dim));
    try {
      set.Add(std::move(rec));
    } catch (const InvalidArgument &e) {
      throw FormatError(r->source(), at, StrCat("record ", i, ": ", e.what()));
    }
  }
  if (!r->AtEnd()) r->Throw(StrCat(r->remaining(), " trailing bytes after ", count, " records"));
  return set;
}

void SaveEmb1(const EmbeddingSet &set, const std::string &path) {
  ByteWriter w;
  WriteEmb1(set, &w);
  WriteFileAtomic(path, w.bytes());
}

EmbeddingSet LoadEmb1(const std::string &path, Modality modality) {
  const std::string bytes = ReadFileBytes(path);
  ByteReader r(bytes, path);
  return ReadEmb1(&r, modality);
}

EmbeddingRecord FuseEmbeddings(const EmbeddingRecord &speech, const EmbeddingRecord *text,
                               const std::string &mapped_text_id) {
  speech.Validate();
  if (!text) return speech;
  text->Validate();
  if (text->utt_id != speech.utt_id && (mapped_text_id.empty() || text->utt_id != mapped_text_id))
    Fail("fuse: text embedding '", text->utt_id, "' does not belong to '", speech.utt_id,
         "' and no surrogate maps it");
  EmbeddingRecord out;
  out.utt_id = speech.utt_id;
  out.modality = Modality::kFused;
  out.vector.resize(speech.dim() + text->dim());
  out.vector.head(speech.dim()) = speech.vector;
  out.vector.tail(text->dim()) = text->vector;
  return out;
}

EmbeddingSet FuseSets(const EmbeddingSet &speech, const EmbeddingSet *text,
                      const std::map<std::string, std::string> &surrogates, bool speech_only) {
  if (speech_only || !text) {
    if (!speech_only) Fail("fuse: no text embeddings given and speech-only mode is off");
    return speech;
  }
  EmbeddingSet out(Modality::kFused);
  for (const EmbeddingRecord &s : speech.records()) {
    auto it = surrogates.find(s.utt_id);
    const std::string text_id = it == surrogates.end() ? s.utt_id : it->second;
    const EmbeddingRecord *t = text->Find(text_id);
    if (!t) Fail("fuse: no text embedding '", text_id, "' for utterance '", s.utt_id, "'");
    out.Add(FuseEmbeddings(s, t, text_id));
  }
  return out;
}

}  // namespace affect
