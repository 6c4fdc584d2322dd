// features/mfcc.cc

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

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "affect/features.h"

namespace affect {

int FrameConfig::FrameSamples(double sample_rate) const {
  return static_cast<int>(std::lround(sample_rate * frame_length_ms / 1000.0));
}

int FrameConfig::HopSamples(double sample_rate) const {
  return static_cast<int>(std::lround(sample_rate * frame_hop_ms / 1000.0));
}

int FrameConfig::NumFrames(std::size_t num_samples, double sample_rate) const {
  const int len = FrameSamples(sample_rate), hop = HopSamples(sample_rate);
  if (num_samples < static_cast<std::size_t>(len)) return 0;
  return static_cast<int>((num_samples - len) / hop) + 1;
}

void FeatureMatrix::Validate() const {
  if (data.rows() < 1) Fail("features '", id, "': no frames");
  if (!data.allFinite()) Fail("features '", id, "': non-finite values");
}

void MfccConfig::Validate(double sample_rate) const {
  if (frame.frame_length_ms <= 0 || frame.frame_hop_ms <= 0)
    Fail("mfcc: frame length and hop must be positive");
  if (num_ceps < 1 || num_mel_bins < 1) Fail("mfcc: num_ceps and num_mel_bins must be >= 1");
  if (num_ceps > num_mel_bins)
    Fail("mfcc: num_ceps (", num_ceps, ") exceeds num_mel_bins (", num_mel_bins, ")");
  if (fft_size < frame.FrameSamples(sample_rate) || (fft_size & (fft_size - 1)) != 0)
    Fail("mfcc: fft_size must be a power of two >= frame samples (",
         frame.FrameSamples(sample_rate), ")");
  if (preemph < 0.0 || preemph >= 1.0) Fail("mfcc: preemph must be in [0, 1)");
  if (dither < 0.0) Fail("mfcc: dither must be >= 0");
  if (!(energy_floor > 0.0)) Fail("mfcc: energy_floor must be positive");
  const double nyquist = sample_rate / 2;
  const double high = high_freq > 0 ? high_freq : nyquist + high_freq;
  if (low_freq < 0 || high <= low_freq || high > nyquist)
    Fail("mfcc: bad band edges [", low_freq, ", ", high, "] for Nyquist ", nyquist);
}

namespace {

// FFTW plans are created under a lock and then executed concurrently on
// caller-owned buffers (FFTW guarantees execute is thread-safe).
fftw_plan RealPlan(int n) {
  static std::mutex mu;
  static std::map<int, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mu);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  double *in = fftw_alloc_real(n);
  fftw_complex *out = fftw_alloc_complex(n / 2 + 1);
  fftw_plan p = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(in);
  fftw_free(out);
  plans.emplace(n, p);
  return p;
}

std::vector<double> MakeWindow(WindowType type, int n) {
  std::vector<double> w(n);
  const double a = 2.0 * std::numbers::pi / (n - 1);
  for (int i = 0; i < n; ++i) {
    switch (type) {
      case WindowType::kPovey:
        w[i] = std::pow(0.5 - 0.5 * std::cos(a * i), 0.85);
        break;
      case WindowType::kHamming:
        w[i] = 0.54 - 0.46 * std::cos(a * i);
        break;
      case WindowType::kHanning:
        w[i] = 0.5 - 0.5 * std::cos(a * i);
        break;
      case WindowType::kRectangular:
        w[i] = 1.0;
        break;
    }
  }
  return w;
}

void CheckAudio(const AudioBuffer &audio, const FrameConfig &frame) {
  audio.Validate();
  if (frame.NumFrames(audio.samples.size(), audio.sample_rate) < 1)
    Fail("audio '", audio.id, "' has ", audio.samples.size(),
         " samples, shorter than one frame (", frame.FrameSamples(audio.sample_rate), ")");
}

}  // namespace

MelBanks::MelBanks(const MfccConfig &cfg, double sample_rate) {
  const int num_fft_bins = cfg.fft_size / 2;
  const double nyquist = sample_rate / 2;
  const double high = cfg.high_freq > 0 ? cfg.high_freq : nyquist + cfg.high_freq;
  const double fft_bin_width = sample_rate / cfg.fft_size;
  const double mel_low = MelScale(cfg.low_freq), mel_high = MelScale(high);
  const double mel_delta = (mel_high - mel_low) / (cfg.num_mel_bins + 1);

  for (int bin = 0; bin < cfg.num_mel_bins; ++bin) {
    const double left = mel_low + bin * mel_delta, center = left + mel_delta,
                 right = center + mel_delta;
    center_hz_.push_back(InverseMelScale(center));
    int first = -1;
    std::vector<double> w;
    for (int k = 0; k < num_fft_bins; ++k) {
      const double mel = MelScale(fft_bin_width * k);
      if (mel > left && mel < right) {
        const double weight =
            mel <= center ? (mel - left) / (center - left) : (right - mel) / (right - center);
        if (first < 0) first = k;
        w.resize(k - first + 1, 0.0);
        w[k - first] = weight;
      }
    }
    if (first < 0) Fail("mfcc: mel bin ", bin, " is empty; use fewer bins or a larger FFT");
    first_bin_.push_back(first);
    weights_.push_back(std::move(w));
  }
}

void MelBanks::Compute(const std::vector<double> &power, std::vector<double> *out) const {
  out->assign(weights_.size(), 0.0);
  for (std::size_t b = 0; b < weights_.size(); ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < weights_[b].size(); ++i)
      acc += weights_[b][i] * power[first_bin_[b] + i];
    (*out)[b] = acc;
  }
}

FeatureMatrix ComputeFbank(const AudioBuffer &audio, const MfccConfig &cfg,
                           std::uint64_t dither_seed) {
  cfg.Validate(audio.sample_rate);
  CheckAudio(audio, cfg.frame);
  const int len = cfg.frame.FrameSamples(audio.sample_rate);
  const int hop = cfg.frame.HopSamples(audio.sample_rate);
  const int num_frames = cfg.frame.NumFrames(audio.samples.size(), audio.sample_rate);
  const std::vector<double> window = MakeWindow(cfg.window, len);
  const MelBanks banks(cfg, audio.sample_rate);
  const fftw_plan plan = RealPlan(cfg.fft_size);

  Rng rng(dither_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> frame(cfg.fft_size), power(cfg.fft_size / 2 + 1), mel;
  std::vector<fftw_complex> spec(cfg.fft_size / 2 + 1);

  FeatureMatrix out;
  out.id = audio.id;
  out.frame_length_ms = cfg.frame.frame_length_ms;
  out.frame_hop_ms = cfg.frame.frame_hop_ms;
  out.data.resize(num_frames, cfg.num_mel_bins);
  for (int t = 0; t < num_frames; ++t) {
    std::fill(frame.begin(), frame.end(), 0.0);
    for (int i = 0; i < len; ++i) frame[i] = audio.samples[t * hop + i];
    if (cfg.dither > 0.0)
      for (int i = 0; i < len; ++i) frame[i] += cfg.dither * gauss(rng);
    if (cfg.remove_dc) {
      double mean = 0.0;
      for (int i = 0; i < len; ++i) mean += frame[i];
      mean /= len;
      for (int i = 0; i < len; ++i) frame[i] -= mean;
    }
    if (cfg.preemph != 0.0) {
      for (int i = len - 1; i > 0; --i) frame[i] -= cfg.preemph * frame[i - 1];
      frame[0] -= cfg.preemph * frame[0];
    }
    for (int i = 0; i < len; ++i) frame[i] *= window[i];

    fftw_execute_dft_r2c(plan, frame.data(), spec.data());
    for (std::size_t k = 0; k < power.size(); ++k)
      power[k] = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
    banks.Compute(power, &mel);
    for (int b = 0; b < cfg.num_mel_bins; ++b)
      out.data(t, b) = static_cast<float>(std::log(std::max(mel[b], cfg.energy_floor)));
  }
  return out;
}

FeatureMatrix ComputeMfcc(const AudioBuffer &audio, const MfccConfig &cfg,
                          std::uint64_t dither_seed) {
  FeatureMatrix fbank = ComputeFbank(audio, cfg, dither_seed);
  const int m = cfg.num_mel_bins;

  // Orthonormal DCT-II rows 0..num_ceps-1, with the sinusoidal lifter folded in.
  Mat dct(cfg.num_ceps, m);
  for (int k = 0; k < cfg.num_ceps; ++k) {
    const double norm = k == 0 ? std::sqrt(1.0 / m) : std::sqrt(2.0 / m);
    const double lift =
        cfg.cepstral_lifter > 0
            ? 1.0 + 0.5 * cfg.cepstral_lifter * std::sin(std::numbers::pi * k / cfg.cepstral_lifter)
            : 1.0;
    for (int n = 0; n < m; ++n)
      dct(k, n) = lift * norm * std::cos(std::numbers::pi / m * (n + 0.5) * k);
  }

  FeatureMatrix out;
  out.id = fbank.id;
  out.frame_length_ms = fbank.frame_length_ms;
  out.frame_hop_ms = fbank.frame_hop_ms;
  out.data = (fbank.data.cast<double>() * dct.transpose()).cast<float>();
  return out;
}

std::string FftwVersion() { return fftw_version; }

}  // namespace affect
