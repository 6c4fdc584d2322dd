// features/pitch.cc

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

// Per-frame pitch from the normalized cross-correlation function (NCCF).
// There is no Viterbi smoothing: each frame independently takes the lag that
// maximizes NCCF times a mild preference for short lags.

#include <algorithm>
#include <cmath>

#include "affect/features.h"

namespace affect {

void PitchConfig::Validate(double sample_rate) const {
  if (!(min_f0 > 0.0) || max_f0 <= min_f0)
    Fail("pitch: need 0 < min_f0 < max_f0, got [", min_f0, ", ", max_f0, "]");
  if (max_f0 >= sample_rate / 2) Fail("pitch: max_f0 must be below Nyquist");
  if (mean_window_frames < 1 || delta_window < 1)
    Fail("pitch: window sizes must be >= 1");
  if (lag_bias < 0.0 || lag_bias >= 1.0) Fail("pitch: lag_bias must be in [0, 1)");
  if (frame.frame_length_ms <= 0 || frame.frame_hop_ms <= 0)
    Fail("pitch: frame length and hop must be positive");
}

double NccfToPov(double nccf) {
  const double n = std::clamp(std::fabs(nccf), 0.0, 1.0);
  // Approximate log-odds of voicing as a function of the NCCF peak.
  const double r = -5.2 + 5.4 * std::exp(7.5 * (n - 1.0)) + 4.8 * n -
                   2.0 * std::exp(-10.0 * n) + 4.2 * std::exp(20.0 * (n - 1.0));
  return 1.0 / (1.0 + std::exp(-r));
}

PitchTrack ComputePitchTrack(const AudioBuffer &audio, const PitchConfig &cfg) {
  audio.Validate();
  cfg.Validate(audio.sample_rate);
  const double sr = audio.sample_rate;
  const int len = cfg.frame.FrameSamples(sr), hop = cfg.frame.HopSamples(sr);
  const int num_frames = cfg.frame.NumFrames(audio.samples.size(), sr);
  if (num_frames < 1)
    Fail("pitch: audio '", audio.id, "' is shorter than one frame (", len, " samples)");

  const int min_lag = std::max(2, static_cast<int>(std::floor(sr / cfg.max_f0)));
  const int max_lag = static_cast<int>(std::ceil(sr / cfg.min_f0));
  const auto n = static_cast<long>(audio.samples.size());

  PitchTrack track;
  track.pitch_hz.assign(num_frames, 0.0);
  track.nccf.assign(num_frames, 0.0);
  track.pov.assign(num_frames, 0.0);
  track.silent.assign(num_frames, false);
  std::vector<double> seg(len + max_lag + 1), nccf(max_lag + 2, 0.0);

  for (int t = 0; t < num_frames; ++t) {
    const long start = static_cast<long>(t) * hop;
    double mean = 0.0;
    for (int i = 0; i < len; ++i) mean += audio.samples[start + i];
    mean /= len;
    double e0 = 0.0;
    for (std::size_t i = 0; i < seg.size(); ++i) {
      const long j = start + static_cast<long>(i);
      seg[i] = j < n ? audio.samples[j] - mean : 0.0;
    }
    for (int i = 0; i < len; ++i) e0 += seg[i] * seg[i];
    if (e0 / len <= cfg.silence_energy) {
      track.silent[t] = true;
      continue;
    }

    // Energy of the lagged window, updated incrementally.
    double el = 0.0;
    for (int i = 0; i < len; ++i) el += seg[min_lag - 1 + i] * seg[min_lag - 1 + i];
    for (int lag = min_lag - 1; lag <= max_lag + 1; ++lag) {
      if (lag > min_lag - 1) {
        el += seg[lag + len - 1] * seg[lag + len - 1] - seg[lag - 1] * seg[lag - 1];
        el = std::max(el, 0.0);
      }
      double cross = 0.0;
      for (int i = 0; i < len; ++i) cross += seg[i] * seg[i + lag];
      nccf[lag] = cross / std::sqrt(e0 * el + 1e-30);
    }

    int best = min_lag;
    double best_score = -1e300;
    for (int lag = min_lag; lag <= max_lag; ++lag) {
      const double score = nccf[lag] * (1.0 - cfg.lag_bias * (lag - min_lag) /
                                                  std::max(1, max_lag - min_lag));
      if (score > best_score) {
        best_score = score;
        best = lag;
      }
    }
    // Parabolic refinement of the peak position.
    double lag = best;
    const double a = nccf[best - 1], b = nccf[best], c = nccf[best + 1];
    const double denom = a - 2.0 * b + c;
    if (denom < 0.0) lag += std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
    track.pitch_hz[t] = sr / lag;
    track.nccf[t] = b;
    track.pov[t] = NccfToPov(std::max(0.0, b));
  }
  return track;
}

FeatureMatrix ComputePitchFeatures(const AudioBuffer &audio, const PitchConfig &cfg) {
  const PitchTrack track = ComputePitchTrack(audio, cfg);
  const int num_frames = static_cast<int>(track.pitch_hz.size());
  const std::vector<double> &pov = track.pov;
  const std::vector<bool> &silent = track.silent;
  std::vector<double> log_pitch(num_frames, 0.0);
  for (int t = 0; t < num_frames; ++t)
    if (!silent[t]) log_pitch[t] = std::log(track.pitch_hz[t]);

  FeatureMatrix out;
  out.id = audio.id;
  out.frame_length_ms = cfg.frame.frame_length_ms;
  out.frame_hop_ms = cfg.frame.frame_hop_ms;
  out.data.setZero(num_frames, 3);

  const int half = cfg.mean_window_frames / 2;
  for (int t = 0; t < num_frames; ++t) {
    out.data(t, 0) = static_cast<float>(pov[t]);
    if (silent[t]) {
      out.data(t, 1) = static_cast<float>(cfg.silence_log_pitch);
      continue;
    }
    double wsum = 0.0, acc = 0.0;
    for (int s = std::max(0, t - half); s <= std::min(num_frames - 1, t + half); ++s) {
      wsum += pov[s];
      acc += pov[s] * log_pitch[s];
    }
    out.data(t, 1) = static_cast<float>(log_pitch[t] - acc / wsum);

    // Regression delta; silent or out-of-range neighbours take this frame's value.
    double num = 0.0, den = 0.0;
    for (int k = 1; k <= cfg.delta_window; ++k) {
      const int tp = t + k, tm = t - k;
      const double xp = (tp < num_frames && !silent[tp]) ? log_pitch[tp] : log_pitch[t];
      const double xm = (tm >= 0 && !silent[tm]) ? log_pitch[tm] : log_pitch[t];
      num += k * (xp - xm);
      den += 2.0 * k * k;
    }
    out.data(t, 2) = static_cast<float>(num / den);
  }
  return out;
}

}  // namespace affect
