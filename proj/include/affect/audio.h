// affect/audio.h

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

#ifndef AFFECT_AUDIO_H_
#define AFFECT_AUDIO_H_

#include <string>
#include <vector>

#include "affect/common.h"

namespace affect {

inline constexpr double kCanonicalSampleRate = 16000.0;

/// Mono waveform with amplitudes nominally in [-1, 1].
struct AudioBuffer {
  std::vector<float> samples;
  double sample_rate = kCanonicalSampleRate;
  std::string id;

  /// Throws InvalidArgument on a non-positive rate or non-finite samples.
  void Validate() const;
  double DurationSeconds() const { return samples.size() / sample_rate; }
};

/// Reads a RIFF/WAVE file (PCM 8/16/24/32-bit or IEEE float 32/64).
/// Multi-channel input is averaged down to mono.
AudioBuffer ReadWav(const std::string &path, const std::string &id = "");

/// Writes 16-bit PCM (`float_format` false) or 32-bit IEEE float.
void WriteWav(const std::string &path, const AudioBuffer &audio,
              bool float_format = false);

/// Band-limited resampling with a Hann-windowed sinc kernel. Returns the
/// input unchanged when the rates already match.
AudioBuffer Resample(const AudioBuffer &audio, double target_rate);

}  // namespace affect

#endif  // AFFECT_AUDIO_H_
