// features/audio.cc

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

#include "affect/audio.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "affect/binary_io.h"

namespace affect {

void AudioBuffer::Validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
    Fail("audio '", id, "': sample rate must be positive, got ", sample_rate);
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (!std::isfinite(samples[i]))
      Fail("audio '", id, "': non-finite sample at index ", i);
}

AudioBuffer ReadWav(const std::string &path, const std::string &id) {
  std::string bytes = ReadFileBytes(path);
  ByteReader r(bytes, path);
  r.ExpectMagic("RIFF");
  r.GetU32();
  r.ExpectMagic("WAVE");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  while (!r.AtEnd()) {
    std::string_view chunk = r.GetBytes(4);
    std::uint32_t size = r.GetU32();
    if (chunk == "fmt ") {
      ByteReader f(r.GetBytes(size), path, r.offset() - size);
      format = f.GetU16();
      channels = f.GetU16();
      rate = f.GetU32();
      f.GetU32();
      f.GetU16();
      bits = f.GetU16();
      if (format == 0xFFFE && size >= 26) {  // WAVE_FORMAT_EXTENSIBLE
        f.GetU16();
        f.GetU16();
        f.GetU32();
        format = f.GetU16();
      }
      have_fmt = true;
    } else if (chunk == "data") {
      if (!have_fmt) r.Throw("data chunk before fmt chunk");
      if (channels == 0) r.Throw("zero channels");
      const int width = bits / 8;
      const bool is_float = format == 3;
      if (!(format == 1 || is_float) ||
          !(is_float ? (bits == 32 || bits == 64)
                     : (bits == 8 || bits == 16 || bits == 24 || bits == 32)))
        r.Throw(StrCat("unsupported WAV encoding (format ", format, ", ", bits,
                       " bits)"));
      std::size_t frames = std::min<std::size_t>(size, r.remaining()) /
                           (static_cast<std::size_t>(width) * channels);
      std::string_view pcm = r.GetBytes(frames * width * channels);
      auto u = reinterpret_cast<const unsigned char *>(pcm.data());
      AudioBuffer out;
      out.id = id;
      out.sample_rate = rate;
      out.samples.resize(frames);
      for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) {
          const unsigned char *p = u + (i * channels + c) * width;
          double v = 0.0;
          if (is_float && bits == 32) {
            std::uint32_t w = p[0] | (p[1] << 8) | (p[2] << 16) |
                              (static_cast<std::uint32_t>(p[3]) << 24);
            v = std::bit_cast<float>(w);
          } else if (is_float) {
            std::uint64_t w = 0;
            for (int k = 0; k < 8; ++k) w |= static_cast<std::uint64_t>(p[k]) << (8 * k);
            v = std::bit_cast<double>(w);
          } else if (bits == 8) {
            v = (static_cast<int>(p[0]) - 128) / 128.0;
          } else if (bits == 16) {
            v = static_cast<std::int16_t>(p[0] | (p[1] << 8)) / 32768.0;
          } else if (bits == 24) {
            std::int32_t w = p[0] | (p[1] << 8) | (p[2] << 16);
            if (w & 0x800000) w -= 0x1000000;
            v = w / 8388608.0;
          } else {
            std::int32_t w = static_cast<std::int32_t>(
                p[0] | (p[1] << 8) | (p[2] << 16) |
                (static_cast<std::uint32_t>(p[3]) << 24));
            v = w / 2147483648.0;
          }
          acc += v;
        }
        out.samples[i] = static_cast<float>(acc / channels);
      }
      out.Validate();
      return out;
    } else {
      r.GetBytes(std::min<std::size_t>(size + (size & 1), r.remaining()));
    }
  }
  r.Throw("no data chunk");
}

void WriteWav(const std::string &path, const AudioBuffer &audio,
              bool float_format) {
  audio.Validate();
  const std::uint16_t bits = float_format ? 32 : 16;
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(audio.samples.size() * (bits / 8));
  const auto rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate));
  ByteWriter w;
  w.PutBytes("RIFF");
  w.PutU32(36 + data_bytes);
  w.PutBytes("WAVEfmt ");
  w.PutU32(16);
  w.PutU16(float_format ? 3 : 1);
  w.PutU16(1);
  w.PutU32(rate);
  w.PutU32(rate * (bits / 8));
  w.PutU16(bits / 8);
  w.PutU16(bits);
  w.PutBytes("data");
  w.PutU32(data_bytes);
  for (float s : audio.samples) {
    if (float_format) {
      w.PutF32(s);
    } else {
      double v = std::clamp(static_cast<double>(s) * 32768.0, -32768.0, 32767.0);
      w.PutU16(static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(v))));
    }
  }
  WriteFileAtomic(path, w.bytes());
}

AudioBuffer Resample(const AudioBuffer &audio, double target_rate) {
  audio.Validate();
  if (!(target_rate > 0.0)) Fail("resample: target rate must be positive");
  if (audio.sample_rate == target_rate) return audio;

  const double ratio = target_rate / audio.sample_rate;
  const double cutoff = 0.99 * std::min(1.0, ratio);  // relative to input Nyquist
  const int zeros = 16;
  const double half_width = zeros / cutoff;  // in input samples
  const std::size_t n_out =
      static_cast<std::size_t>(std::floor(audio.samples.size() * ratio));
  const auto n_in = static_cast<long>(audio.samples.size());

  AudioBuffer out;
  out.id = audio.id;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  for (std::size_t j = 0; j < n_out; ++j) {
    const double t = j / ratio;
    const long lo = static_cast<long>(std::ceil(t - half_width));
    const long hi = static_cast<long>(std::floor(t + half_width));
    double acc = 0.0;
    for (long i = std::max(0L, lo); i <= std::min(n_in - 1, hi); ++i) {
      const double x = (i - t) * cutoff;
      const double sinc =
          x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      const double win =
          0.5 + 0.5 * std::cos(std::numbers::pi * (i - t) / half_width);
      acc += audio.samples[i] * cutoff * sinc * win;
    }
    out.samples[j] = static_cast<float>(acc);
  }
  return out;
}

}  // namespace affect
