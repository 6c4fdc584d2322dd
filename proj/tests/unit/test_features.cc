// Unit tests for the feature front end.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include "affect/features.h"
#include "doctest.h"
#include "oracles.h"
#include "synthetic.h"

using namespace affect;
using namespace affect::testing;

namespace {

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double MeanSquare(const std::vector<float> &x) {
  double e = 0;
  for (float s : x) e += double(s) * s;
  return e / x.size();
}

}  // namespace

TEST_CASE("mfcc frame arithmetic") {
  AudioBuffer a = WhiteNoise(400.0 / 16000.0, 0.1, 1);
  REQUIRE(a.samples.size() == 400);
  MfccConfig cfg;
  CHECK(ComputeMfcc(a, cfg).NumFrames() == 1);
  CHECK(ComputeMfcc(a, cfg).Dim() == 30);

  a = WhiteNoise(1.0, 0.1, 2);  // 16000 samples
  CHECK(ComputeMfcc(a, cfg).NumFrames() == (16000 - 400) / 160 + 1);

  a.samples.resize(399);
  CHECK_THROWS_AS(ComputeMfcc(a, cfg), InvalidArgument);
  a.samples.assign(800, 0.0f);
  a.samples[10] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(ComputeMfcc(a, cfg), InvalidArgument);
}

TEST_CASE("mfcc of digital silence is column-constant at the log floor") {
  AudioBuffer a = Silence(0.5);
  MfccConfig cfg;
  FeatureMatrix m = ComputeMfcc(a, cfg);
  for (int t = 1; t < m.NumFrames(); ++t)
    CHECK(m.data.row(t) == m.data.row(0));
  FeatureMatrix fb = ComputeFbank(a, cfg);
  CHECK(fb.data.isConstant(static_cast<float>(std::log(cfg.energy_floor))));
}

TEST_CASE("1 kHz sine peaks in the mel bin whose center is nearest 1 kHz") {
  MfccConfig cfg;
  // Analytic mel geometry: centers are equally spaced in mel between the band
  // edges, at positions 1..num_bins of num_bins+1 intervals.
  const double sr = 16000.0, low = cfg.low_freq, high = sr / 2 + cfg.high_freq;
  const double mlow = 1127.0 * std::log(1 + low / 700.0);
  const double mhigh = 1127.0 * std::log(1 + high / 700.0);
  int expected = -1;
  double best = 1e9;
  for (int b = 0; b < cfg.num_mel_bins; ++b) {
    const double mel = mlow + (b + 1) * (mhigh - mlow) / (cfg.num_mel_bins + 1);
    const double hz = 700.0 * (std::exp(mel / 1127.0) - 1.0);
    if (std::fabs(hz - 1000.0) < best) {
      best = std::fabs(hz - 1000.0);
      expected = b;
    }
  }
  FeatureMatrix fb = ComputeFbank(Sine(1000.0, 0.5), cfg);
  for (int t = 0; t < fb.NumFrames(); ++t) {
    Eigen::Index arg;
    fb.data.row(t).maxCoeff(&arg);
    CHECK(arg == expected);
  }
  MelBanks banks(cfg, sr);
  CHECK(std::fabs(banks.CenterHz(expected) - 1000.0) == doctest::Approx(best));
}

TEST_CASE("mfcc dither is seeded") {
  MfccConfig cfg;
  cfg.dither = 1e-3;
  AudioBuffer a = Sine(440.0, 0.3);
  FeatureMatrix x = ComputeMfcc(a, cfg, 7), y = ComputeMfcc(a, cfg, 7),
                z = ComputeMfcc(a, cfg, 8);
  CHECK(x.data == y.data);
  CHECK(x.data != z.data);
  cfg.dither = 0.0;
  CHECK(ComputeMfcc(a, cfg, 1).data == ComputeMfcc(a, cfg, 2).data);
}

TEST_CASE("mfcc config validation") {
  MfccConfig cfg;
  cfg.num_ceps = 31;
  CHECK_THROWS_AS(cfg.Validate(16000), InvalidArgument);
  cfg = MfccConfig{};
  cfg.fft_size = 256;
  CHECK_THROWS_AS(cfg.Validate(16000), InvalidArgument);
}

TEST_CASE("pitch of a 100 Hz sawtooth") {
  PitchTrack track = ComputePitchTrack(Sawtooth(100.0, 2.0));
  const double med = Median(track.pitch_hz);
  CHECK(med >= 98.0);
  CHECK(med <= 102.0);
}

TEST_CASE("white noise is less voiced than a sawtooth") {
  FeatureMatrix saw = ComputePitchFeatures(Sawtooth(100.0, 2.0));
  FeatureMatrix noise = ComputePitchFeatures(WhiteNoise(2.0, 0.2, 3));
  const double saw_pov = saw.data.col(0).cast<double>().mean();
  const double noise_pov = noise.data.col(0).cast<double>().mean();
  CHECK(noise_pov < saw_pov);
  CHECK(saw.data.col(0).minCoeff() >= 0.0f);
  CHECK(saw.data.col(0).maxCoeff() <= 1.0f);
}

TEST_CASE("pitch of digital silence emits floor values") {
  PitchConfig cfg;
  cfg.silence_log_pitch = -3.5;
  FeatureMatrix p = ComputePitchFeatures(Silence(0.5), cfg);
  CHECK(p.data.col(0).isZero());
  CHECK(p.data.col(2).isZero());
  CHECK(p.data.col(1).isConstant(-3.5f));
  CHECK_THROWS_AS(ComputePitchFeatures(Silence(0.01)), InvalidArgument);
}

TEST_CASE("pov map is monotone and bounded") {
  double prev = -1;
  for (int i = 0; i <= 100; ++i) {
    const double p = NccfToPov(i / 100.0);
    CHECK(p >= prev);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    prev = p;
  }
}

TEST_CASE("mfcc and pitch rows align") {
  for (double sec : {0.025, 0.0312, 0.5, 1.2345}) {
    AudioBuffer a = WhiteNoise(sec, 0.1, 4);
    FeatureConfig cfg;
    FeatureMatrix f = ExtractFeatures(a, cfg);
    CHECK(f.Dim() == 33);
    CHECK(ComputeMfcc(a, cfg.mfcc).NumFrames() == ComputePitchFeatures(a, cfg.pitch).NumFrames());
  }
}

TEST_CASE("cmn examples") {
  FeatureMatrix f;
  f.data = FrameMatrix::Constant(10, 4, 2.5f);
  CHECK(ApplyCmn(f).data.isZero());

  f.data.resize(3, 1);
  f.data << 1, 2, 3;
  FeatureMatrix g = ApplyCmn(f, CmnConfig{3, true});
  CHECK(g.data(0, 0) == -1.0f);
  CHECK(g.data(1, 0) == 0.0f);
  CHECK(g.data(2, 0) == 1.0f);

  CHECK_THROWS_AS(ApplyCmn(f, CmnConfig{0, true}), InvalidArgument);
}

TEST_CASE("cmn matches the per-frame recomputation exactly") {
  Rng rng(11);
  std::normal_distribution<double> g(0, 3);
  FeatureMatrix f;
  f.data.resize(600, 5);
  for (int i = 0; i < f.data.size(); ++i) f.data.data()[i] = static_cast<float>(g(rng) + 7);
  const Mat x = f.data.cast<double>();
  for (bool center : {true, false}) {
    FeatureMatrix out = ApplyCmn(f, CmnConfig{300, center});
    const Mat want = NaiveCmn(x, 300, center);
    CHECK(out.data == want.cast<float>());
  }
}

TEST_CASE("cmn with window >= T zeroes every column sum") {
  Rng rng(5);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int trial = 0; trial < 20; ++trial) {
    const int frames = 1 + static_cast<int>(rng() % 300);
    FeatureMatrix f;
    f.data.resize(frames, 3);
    for (int i = 0; i < f.data.size(); ++i) f.data.data()[i] = static_cast<float>(u(rng));
    FeatureMatrix out = ApplyCmn(f, CmnConfig{300, true});
    for (int c = 0; c < 3; ++c) {
      const double scale = f.data.col(c).cwiseAbs().cast<double>().sum() + 1.0;
      CHECK(std::fabs(out.data.col(c).cast<double>().sum()) <= 1e-6 * scale);
    }
  }
}

TEST_CASE("noise augmentation identity cases") {
  AudioBuffer s = Sine(300, 0.5), n = WhiteNoise(1.0, 0.1, 9);
  CHECK(AugmentNoise(s, n, std::numeric_limits<double>::infinity(), 1).samples == s.samples);
  CHECK(AugmentNoise(s, Silence(1.0), 5.0, 1).samples == s.samples);
  CHECK_THROWS_AS(AugmentNoise(Silence(0.5), n, 5.0, 1), InvalidArgument);
}

TEST_CASE("noise augmentation at 0 dB with equal powers") {
  // Full-scale white noise for both, so active power equals total power.
  AudioBuffer s = WhiteNoise(1.0, 0.1, 21), n = WhiteNoise(1.0, 0.1, 22);
  AudioBuffer out = AugmentNoise(s, n, 0.0, 3);
  std::vector<float> added(s.samples.size());
  for (std::size_t i = 0; i < added.size(); ++i) added[i] = out.samples[i] - s.samples[i];
  const double alpha = std::sqrt(MeanSquare(added) / MeanSquare(n.samples));
  CHECK(alpha == doctest::Approx(1.0).epsilon(0.05));
  CHECK(MeanSquare(out.samples) / MeanSquare(s.samples) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("re-measured snr matches the request") {
  AudioBuffer s = Sawtooth(150, 1.0, 0.3);
  s.samples.resize(24000, 0.0f);  // trailing silence excluded from active power
  AudioBuffer n = WhiteNoise(3.0, 0.05, 4);
  for (double snr : {-5.0, 0.0, 10.0, 30.0}) {
    AudioBuffer out = AugmentNoise(s, n, snr, 17);
    AudioBuffer diff = s;
    for (std::size_t i = 0; i < s.samples.size(); ++i) diff.samples[i] = out.samples[i] - s.samples[i];
    // Active-signal power from the frame energies, recomputed here.
    std::vector<double> energy;
    for (std::size_t start = 0; start + 400 <= s.samples.size(); start += 160) {
      double e = 0;
      for (int i = 0; i < 400; ++i) e += double(s.samples[start + i]) * s.samples[start + i];
      energy.push_back(e / 400);
    }
    const double peak = *std::max_element(energy.begin(), energy.end());
    double acc = 0;
    int count = 0;
    for (double e : energy)
      if (e >= peak * 1e-4) acc += e, ++count;
    const double measured = 10 * std::log10((acc / count) / MeanSquare(diff.samples));
    CHECK(std::fabs(measured - snr) < 0.1);
  }
}

TEST_CASE("different augmentation seeds change samples only") {
  AudioBuffer s = Sine(200, 0.5), n = WhiteNoise(2.0, 0.1, 1);
  s.sample_rate = 16000;
  AudioBuffer a = AugmentNoise(s, n, 5, 1), b = AugmentNoise(s, n, 5, 2);
  CHECK(a.samples != b.samples);
  CHECK(a.samples.size() == b.samples.size());
  CHECK(a.sample_rate == b.sample_rate);
}

TEST_CASE("resampling preserves a low tone") {
  AudioBuffer a = Sine(440, 0.5, 0.5, 8000);
  AudioBuffer r = Resample(a, 16000);
  CHECK(r.sample_rate == 16000);
  CHECK(r.samples.size() == 8000);
  double err = 0;
  for (std::size_t i = 500; i < 7500; ++i)
    err = std::max(err, std::fabs(r.samples[i] - 0.5 * std::sin(2 * M_PI * 440 * i / 16000.0)));
  CHECK(err < 0.02);
}

TEST_CASE("fea1 and wav round trips") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "affect_test_features";
  fs::create_directories(dir);
  FeatureMatrix f = ExtractFeatures(WhiteNoise(0.3, 0.1, 1), FeatureConfig{});
  f.id = "utt1";
  FeatureMatrix g = ExtractFeatures(Sine(300, 0.2), FeatureConfig{});
  g.id = "utt2";

  FeatureArchiveWriter w((dir / "feats.fea").string(), (dir / "feats.index.jsonl").string());
  w.Add(f);
  w.Add(g);
  w.Commit();
  FeatureArchive archive((dir / "feats.index.jsonl").string());
  CHECK(archive.Ids() == std::vector<std::string>{"utt1", "utt2"});
  CHECK(archive.Read("utt1").data == f.data);
  CHECK(archive.Read("utt2").data == g.data);
  CHECK_THROWS_AS(archive.Read("nope"), InvalidArgument);

  ByteWriter bw;
  WriteFea1(f, &bw);
  std::string bytes = bw.bytes();
  CHECK(bytes.substr(0, 4) == "FEA1");
  CHECK(bytes.size() == 12 + 4 * f.data.size());
  bytes[1] = 'X';
  ByteReader br(bytes, "mem");
  CHECK_THROWS_AS(ReadFea1(&br), FormatError);

  AudioBuffer a = WhiteNoise(0.1, 0.2, 5);
  WriteWav((dir / "a.wav").string(), a, true);
  CHECK(ReadWav((dir / "a.wav").string()).samples == a.samples);
  WriteWav((dir / "b.wav").string(), a, false);
  AudioBuffer b = ReadWav((dir / "b.wav").string());
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    CHECK(std::fabs(b.samples[i] - a.samples[i]) <= 1.0 / 32768 + 1e-7);
}
