// features/frontend.cc

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
#include <filesystem>
#include <limits>

#include "affect/features.h"
#include "json.hpp"

namespace affect {

void CmnConfig::Validate() const {
  if (window_frames < 1) Fail("cmn: window_frames must be >= 1, got ", window_frames);
}

void FeatureConfig::Validate(double sample_rate) const {
  mfcc.Validate(sample_rate);
  pitch.Validate(sample_rate);
  cmn.Validate();
  if (mfcc.frame.frame_length_ms != pitch.frame.frame_length_ms ||
      mfcc.frame.frame_hop_ms != pitch.frame.frame_hop_ms)
    Fail("features: MFCC and pitch framing must match");
}

FeatureMatrix ApplyCmn(const FeatureMatrix &feats, const CmnConfig &cfg) {
  cfg.Validate();
  const int num_frames = feats.NumFrames(), dim = feats.Dim();
  if (num_frames < 1) Fail("cmn: features '", feats.id, "' have no frames");

  const int window = cfg.window_frames;
  FeatureMatrix out = feats;
  std::vector<double> sum(dim);
  for (int t = 0; t < num_frames; ++t) {
    int start, end;
    if (cfg.center) {
      start = t - window / 2;
      end = start + window;
      if (start < 0) {
        end -= start;
        start = 0;
      }
      if (end > num_frames) {
        start -= end - num_frames;
        end = num_frames;
      }
      start = std::max(start, 0);
    } else {
      start = std::max(0, t - window + 1);
      end = t + 1;
    }
    // Direct summation, not a running sum: the result must not depend on t's
    // history, only on the window contents.
    std::fill(sum.begin(), sum.end(), 0.0);
    for (int s = start; s < end; ++s)
      for (int d = 0; d < dim; ++d) sum[d] += feats.data(s, d);
    for (int d = 0; d < dim; ++d)
      out.data(t, d) = static_cast<float>(feats.data(t, d) - sum[d] / (end - start));
  }
  return out;
}

double ActiveSignalPower(const AudioBuffer &audio, const FrameConfig &frame) {
  const int len = frame.FrameSamples(audio.sample_rate);
  const int hop = frame.HopSamples(audio.sample_rate);
  const int num_frames = frame.NumFrames(audio.samples.size(), audio.sample_rate);
  if (num_frames < 1) {
    double e = 0.0;
    for (float s : audio.samples) e += static_cast<double>(s) * s;
    return audio.samples.empty() ? 0.0 : e / audio.samples.size();
  }
  std::vector<double> energy(num_frames, 0.0);
  for (int t = 0; t < num_frames; ++t) {
    for (int i = 0; i < len; ++i) {
      const double s = audio.samples[t * hop + i];
      energy[t] += s * s;
    }
    energy[t] /= len;
  }
  const double peak = *std::max_element(energy.begin(), energy.end());
  if (peak <= 0.0) return 0.0;
  double acc = 0.0;
  int count = 0;
  for (double e : energy)
    if (e >= peak * 1e-4) {
      acc += e;
      ++count;
    }
  return acc / count;
}

AudioBuffer AugmentNoise(const AudioBuffer &audio, const AudioBuffer &noise,
                         double snr_db, std::uint64_t seed) {
  audio.Validate();
  if (std::isinf(snr_db) && snr_db > 0) return audio;
  if (std::isnan(snr_db)) Fail("augment: snr_db is NaN");
  noise.Validate();
  if (noise.sample_rate != audio.sample_rate)
    Fail("augment: noise rate ", noise.sample_rate, " != signal rate ", audio.sample_rate);
  if (noise.samples.empty()) Fail("augment: empty noise buffer");

  const std::size_t n = audio.samples.size();
  std::vector<double> segment(n);
  std::size_t offset = 0;
  if (noise.samples.size() > n) {
    Rng rng(seed);
    offset = std::uniform_int_distribution<std::size_t>(0, noise.samples.size() - n)(rng);
  }
  double noise_power = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    segment[i] = noise.samples[(offset + i) % noise.samples.size()];
    noise_power += segment[i] * segment[i];
  }
  noise_power = n ? noise_power / n : 0.0;
  if (noise_power == 0.0) return audio;  // adding silence is the identity

  const double signal_power = ActiveSignalPower(audio);
  if (signal_power == 0.0)
    Fail("augment: signal '", audio.id, "' has zero power; SNR is undefined");
  const double alpha = std::sqrt(signal_power / (noise_power * std::pow(10.0, snr_db / 10.0)));

  AudioBuffer out = audio;
  for (std::size_t i = 0; i < n; ++i)
    out.samples[i] = static_cast<float>(audio.samples[i] + alpha * segment[i]);
  return out;
}

FeatureMatrix ConcatFeatures(const FeatureMatrix &a, const FeatureMatrix &b) {
  if (a.NumFrames() != b.NumFrames())
    Fail("concat: frame counts differ (", a.NumFrames(), " vs ", b.NumFrames(), ")");
  FeatureMatrix out = a;
  out.data.resize(a.NumFrames(), a.Dim() + b.Dim());
  out.data.leftCols(a.Dim()) = a.data;
  out.data.rightCols(b.Dim()) = b.data;
  return out;
}

FeatureMatrix ExtractFeatures(const AudioBuffer &audio, const FeatureConfig &cfg,
                              std::uint64_t dither_seed) {
  const AudioBuffer pcm = Resample(audio, kCanonicalSampleRate);
  cfg.Validate(pcm.sample_rate);
  FeatureMatrix feats = ComputeMfcc(pcm, cfg.mfcc, dither_seed);
  if (cfg.use_pitch) feats = ConcatFeatures(feats, ComputePitchFeatures(pcm, cfg.pitch));
  return ApplyCmn(feats, cfg.cmn);
}

void WriteFea1(const FeatureMatrix &feats, ByteWriter *w) {
  w->PutBytes("FEA1");
  w->PutU32(static_cast<std::uint32_t>(feats.Dim()));
  w->PutU32(static_cast<std::uint32_t>(feats.NumFrames()));
  w->PutF32s(std::span<const float>(feats.data.data(), feats.data.size()));
}

FeatureMatrix ReadFea1(ByteReader *r, const std::string &id) {
  r->ExpectMagic("FEA1");
  const std::uint32_t dim = r->GetU32();
  const std::uint32_t frames = r->GetU32();
  if (static_cast<std::uint64_t>(dim) * frames * 4 > r->remaining())
    r->Throw(StrCat("FEA1 payload of ", frames, "x", dim, " exceeds remaining bytes"));
  FeatureMatrix out;
  out.id = id;
  out.data.resize(frames, dim);
  r->GetF32s(std::span<float>(out.data.data(), out.data.size()));
  return out;
}

FeatureArchiveWriter::FeatureArchiveWriter(std::string data_path, std::string index_path)
    : data_path_(std::move(data_path)), index_path_(std::move(index_path)) {}

void FeatureArchiveWriter::Add(const FeatureMatrix &feats) {
  index_.emplace_back(feats.id, data_.size());
  WriteFea1(feats, &data_);
}

void FeatureArchiveWriter::Commit() {
  namespace fs = std::filesystem;
  const std::string rel =
      fs::path(data_path_).lexically_relative(fs::path(index_path_).parent_path()).string();
  std::string index;
  for (const auto &[id, offset] : index_) {
    nlohmann::json j = {{"id", id}, {"path", rel.empty() ? data_path_ : rel}, {"offset", offset}};
    index += j.dump() + "\n";
  }
  WriteFileAtomic(data_path_, data_.bytes());
  WriteFileAtomic(index_path_, index);
}

FeatureArchive::FeatureArchive(const std::string &index_path) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(index_path).parent_path();
  const std::string text = ReadFileBytes(index_path);
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
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      Entry e{j.at("path").get<std::string>(), j.at("offset").get<std::uint64_t>()};
      const std::string id = j.at("id").get<std::string>();
      if (!entries_.emplace(id, e).second)
        throw FormatError(index_path, line_start, StrCat("duplicate id '", id, "'"));
      ids_.push_back(id);
    } catch (const nlohmann::json::exception &ex) {
      throw FormatError(index_path, line_start,
                        StrCat("line ", line_no, ": bad index entry: ", ex.what()));
    }
  }
  for (auto &[id, e] : entries_) {
    const fs::path p = fs::path(e.path).is_absolute() ? fs::path(e.path) : dir / e.path;
    e.path = p.string();
    if (!blobs_.count(e.path)) blobs_.emplace(e.path, ReadFileBytes(e.path));
  }
}

FeatureMatrix FeatureArchive::Read(const std::string &id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) Fail("feature archive has no utterance '", id, "'");
  const std::string &blob = blobs_.at(it->second.path);
  if (it->second.offset > blob.size())
    throw FormatError(it->second.path, it->second.offset, "offset beyond end of file");
  ByteReader r(std::string_view(blob).substr(it->second.offset), it->second.path,
               it->second.offset);
  return ReadFea1(&r, id);
}

}  // namespace affect
