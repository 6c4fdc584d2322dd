// affect/features.h

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

#ifndef AFFECT_FEATURES_H_
#define AFFECT_FEATURES_H_

#include <cstdint>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "affect/audio.h"
#include "affect/binary_io.h"

namespace affect {

/// Row-major so that one frame is one contiguous row, as in FEA1.
using FrameMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// T frames x D dims for one utterance.
struct FeatureMatrix {
  std::string id;
  FrameMatrix data;
  double frame_length_ms = 25.0;
  double frame_hop_ms = 10.0;

  int NumFrames() const { return static_cast<int>(data.rows()); }
  int Dim() const { return static_cast<int>(data.cols()); }
  /// T >= 1 and every value finite.
  void Validate() const;
};

enum class WindowType { kPovey, kHamming, kHanning, kRectangular };

/// Framing shared by MFCC and pitch; both must agree so row counts align.
struct FrameConfig {
  double frame_length_ms = 25.0;
  double frame_hop_ms = 10.0;

  int FrameSamples(double sample_rate) const;
  int HopSamples(double sample_rate) const;
  /// floor((n - frame)/hop) + 1, or 0 when n < frame.
  int NumFrames(std::size_t num_samples, double sample_rate) const;
};

struct MfccConfig {
  FrameConfig frame;
  int num_ceps = 30;
  int num_mel_bins = 30;
  int fft_size = 512;
  double preemph = 0.97;
  WindowType window = WindowType::kPovey;
  bool remove_dc = true;
  /// Gaussian dither standard deviation in sample units; 0 disables it.
  double dither = 0.0;
  double low_freq = 20.0;
  /// Upper band edge; values <= 0 are offsets from Nyquist.
  double high_freq = -400.0;
  double cepstral_lifter = 22.0;
  /// Mel energies are floored here before the log.
  double energy_floor = 1e-10;

  void Validate(double sample_rate) const;
};

struct PitchConfig {
  FrameConfig frame;
  double min_f0 = 50.0;
  double max_f0 = 400.0;
  /// Frames with mean-square energy at or below this are digital silence.
  double silence_energy = 1e-12;
  /// Value emitted in the log-pitch column for silent frames.
  double silence_log_pitch = 0.0;
  /// Centered window (frames) of the POV-weighted log-pitch mean.
  int mean_window_frames = 151;
  int delta_window = 2;
  /// Linear penalty on longer lags, to avoid picking sub-harmonics.
  double lag_bias = 0.05;

  void Validate(double sample_rate) const;
};

struct CmnConfig {
  int window_frames = 300;
  /// Centered window shifted to stay inside [0, T); otherwise causal.
  bool center = true;

  void Validate() const;
};

/// Complete 33-dim front end: MFCC, pitch, then sliding CMN.
struct FeatureConfig {
  MfccConfig mfcc;
  PitchConfig pitch;
  CmnConfig cmn;
  bool use_pitch = true;

  void Validate(double sample_rate) const;
};

/// Precomputed mel filterbank: triangles on the mel scale over FFT bins.
class MelBanks {
 public:
  MelBanks(const MfccConfig &cfg, double sample_rate);

  int NumBins() const { return static_cast<int>(center_hz_.size()); }
  double CenterHz(int bin) const { return center_hz_[bin]; }
  /// Power spectrum (fft_size/2 + 1 values) -> mel energies.
  void Compute(const std::vector<double> &power, std::vector<double> *out) const;

  static double MelScale(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }
  static double InverseMelScale(double mel) {
    return 700.0 * (std::exp(mel / 1127.0) - 1.0);
  }

 private:
  std::vector<double> center_hz_;
  std::vector<int> first_bin_;
  std::vector<std::vector<double>> weights_;
};

/// Log mel filterbank energies, T x num_mel_bins.
FeatureMatrix ComputeFbank(const AudioBuffer &audio, const MfccConfig &cfg,
                           std::uint64_t dither_seed = 0);

/// T x num_ceps MFCCs. Throws when audio is shorter than one frame or has
/// non-finite samples. Deterministic when dither is off; with dither the
/// seed fixes the output bit-exactly.
FeatureMatrix ComputeMfcc(const AudioBuffer &audio, const MfccConfig &cfg,
                          std::uint64_t dither_seed = 0);

/// Raw per-frame tracker output; silent frames have pitch 0 and POV 0.
struct PitchTrack {
  std::vector<double> pitch_hz;
  std::vector<double> nccf;
  std::vector<double> pov;
  std::vector<bool> silent;
};

PitchTrack ComputePitchTrack(const AudioBuffer &audio, const PitchConfig &cfg = {});

/// T x 3: [probability of voicing, mean-subtracted log pitch, log-pitch delta].
FeatureMatrix ComputePitchFeatures(const AudioBuffer &audio,
                                   const PitchConfig &cfg = {});

/// Maps a normalized cross-correlation peak to a probability of voicing.
/// Monotone non-decreasing on [0, 1].
double NccfToPov(double nccf);

/// Sliding-window mean subtraction.
FeatureMatrix ApplyCmn(const FeatureMatrix &feats, const CmnConfig &cfg = {});

/// signal + alpha * noise, with alpha chosen so that the active-signal power
/// over the added-noise power equals snr_db. Noise shorter than the signal is
/// tiled; longer noise is cropped at a seeded random offset.
AudioBuffer AugmentNoise(const AudioBuffer &audio, const AudioBuffer &noise,
                         double snr_db, std::uint64_t seed);

/// Mean square over frames whose energy is within 40 dB of the loudest frame.
double ActiveSignalPower(const AudioBuffer &audio, const FrameConfig &frame = {});

/// Version string of the linked FFT library.
std::string FftwVersion();

/// Resamples to 16 kHz if needed and runs the full front end.
FeatureMatrix ExtractFeatures(const AudioBuffer &audio, const FeatureConfig &cfg,
                              std::uint64_t dither_seed = 0);

/// Column-wise concatenation of two matrices with equal T.
FeatureMatrix ConcatFeatures(const FeatureMatrix &a, const FeatureMatrix &b);

// FEA1: "FEA1", u32 dim, u32 frames, row-major f32 values, little-endian.
void WriteFea1(const FeatureMatrix &feats, ByteWriter *w);
FeatureMatrix ReadFea1(ByteReader *r, const std::string &id = "");

/// Many FEA1 records in one data file plus a JSONL index of {id, path, offset}.
class FeatureArchiveWriter {
 public:
  /// `data_path` is the blob; `index_path` the JSONL index. Both are written
  /// atomically by Commit().
  FeatureArchiveWriter(std::string data_path, std::string index_path);
  void Add(const FeatureMatrix &feats);
  void Commit();

 private:
  std::string data_path_, index_path_;
  ByteWriter data_;
  std::vector<std::pair<std::string, std::uint64_t>> index_;
};

class FeatureArchive {
 public:
  /// Reads the index and every referenced data file; paths inside the index
  /// are relative to its directory. Read() is then const and thread-safe.
  explicit FeatureArchive(const std::string &index_path);

  const std::vector<std::string> &Ids() const { return ids_; }
  bool Contains(const std::string &id) const { return entries_.count(id) != 0; }
  FeatureMatrix Read(const std::string &id) const;

 private:
  struct Entry {
    std::string path;
    std::uint64_t offset;
  };
  std::vector<std::string> ids_;
  std::map<std::string, Entry> entries_;
  std::map<std::string, std::string> blobs_;
};

}  // namespace affect

#endif  // AFFECT_FEATURES_H_
