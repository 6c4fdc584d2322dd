#include "synthetic.h"

#include <cmath>
#include <numbers>
#include <random>

namespace affect::testing {

AudioBuffer Sine(double hz, double seconds, double amplitude, double sample_rate) {
  AudioBuffer a;
  a.sample_rate = sample_rate;
  a.samples.resize(static_cast<std::size_t>(seconds * sample_rate));
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    a.samples[i] = static_cast<float>(
        amplitude * std::sin(2.0 * std::numbers::pi * hz * i / sample_rate));
  return a;
}

AudioBuffer Sawtooth(double hz, double seconds, double amplitude, double sample_rate) {
  AudioBuffer a;
  a.sample_rate = sample_rate;
  a.samples.resize(static_cast<std::size_t>(seconds * sample_rate));
  const double period = sample_rate / hz;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double phase = std::fmod(static_cast<double>(i), period) / period;
    a.samples[i] = static_cast<float>(amplitude * (2.0 * phase - 1.0));
  }
  return a;
}

AudioBuffer WhiteNoise(double seconds, double stddev, std::uint64_t seed,
                       double sample_rate) {
  AudioBuffer a;
  a.sample_rate = sample_rate;
  a.samples.resize(static_cast<std::size_t>(seconds * sample_rate));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, stddev);
  for (float &s : a.samples) s = static_cast<float>(g(rng));
  return a;
}

AudioBuffer Silence(double seconds, double sample_rate) {
  AudioBuffer a;
  a.sample_rate = sample_rate;
  a.samples.assign(static_cast<std::size_t>(seconds * sample_rate), 0.0f);
  return a;
}

namespace {

struct ClassShape {
  double formants[3];
  double bandwidths[3];
  double f0_low, f0_high;
  double syllable_hz;  // rate of voiced bursts separated by pauses
  double vibrato_depth, vibrato_hz;
};

const ClassShape kShapes[kSyntheticClasses] = {
    {{700, 1220, 2600}, {130, 70, 160}, 180, 260, 4.5, 0.08, 5.0},
    {{300, 870, 2250}, {60, 90, 120}, 90, 130, 2.0, 0.02, 2.0},
    {{440, 1020, 2240}, {80, 60, 170}, 220, 320, 6.0, 0.12, 8.0},
    {{600, 1700, 2900}, {150, 200, 250}, 140, 200, 5.0, 0.05, 3.0},
    {{500, 1500, 2500}, {100, 100, 100}, 110, 160, 3.0, 0.01, 4.0},
};

}  // namespace

AudioBuffer SyntheticEmotionUtterance(int label, std::uint64_t seed,
                                      const std::string &id) {
  const ClassShape &shape = kShapes[label % kSyntheticClasses];
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  const double sr = 16000.0;
  const double seconds = 0.8 + 0.6 * u(rng);
  const double f0 = shape.f0_low + (shape.f0_high - shape.f0_low) * u(rng);
  const std::size_t n = static_cast<std::size_t>(seconds * sr);

  const double syl = shape.syllable_hz * (0.9 + 0.2 * u(rng));
  const double syl_phase = u(rng);
  std::vector<double> x(n, 0.0);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i / sr;
    const double inst =
        f0 * (1.0 + shape.vibrato_depth * std::sin(2 * std::numbers::pi * shape.vibrato_hz * t));
    phase += inst / sr;
    // Voiced bursts with short pauses between them.
    const double env = std::max(0.0, std::fabs(std::sin(std::numbers::pi * (syl * t + syl_phase))) - 0.2);
    if (phase >= 1.0) {
      phase -= 1.0;
      x[i] = env;
    }
    x[i] += 0.02 * env * g(rng);
  }
  // Cascade of two-pole resonators with per-utterance formant jitter.
  for (int k = 0; k < 3; ++k) {
    const double fc = shape.formants[k] * (1.0 + 0.03 * g(rng));
    const double r = std::exp(-std::numbers::pi * shape.bandwidths[k] / sr);
    const double a1 = 2 * r * std::cos(2 * std::numbers::pi * fc / sr), a2 = -r * r;
    double y1 = 0.0, y2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double y = (1 - r) * x[i] + a1 * y1 + a2 * y2;
      y2 = y1;
      y1 = y;
      x[i] = y;
    }
  }
  double peak = 1e-12;
  for (double v : x) peak = std::max(peak, std::fabs(v));
  const double gain = (0.3 + 0.4 * u(rng)) / peak;
  AudioBuffer a;
  a.id = id;
  a.sample_rate = sr;
  a.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    a.samples[i] = static_cast<float>(gain * x[i] + 0.01 * g(rng));
  return a;
}

}  // namespace affect::testing

namespace affect::testing {

Mat RandomOrthogonal(int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Mat a(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i) a(i, j) = g(rng);
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ();
  // Fix column signs so the distribution is Haar.
  for (int j = 0; j < dim; ++j)
    if (qr.matrixQR()(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

Mat RandomSpd(int dim, double lo, double hi, std::uint64_t seed) {
  const Mat q = RandomOrthogonal(dim, seed);
  Rng rng(DeriveSeed(seed, "spd-eigenvalues"));
  std::uniform_real_distribution<double> u(lo, hi);
  Vec ev(dim);
  for (int i = 0; i < dim; ++i) ev(i) = u(rng);
  Mat s = q * ev.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

LabelledRows SampleTwoCovariance(const Vec &mean, const Mat &between, const Mat &within,
                                 int num_classes, int per_class, std::uint64_t seed,
                                 bool match_latents) {
  const int d = static_cast<int>(mean.size());
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  auto gauss = [&] {
    Vec z(d);
    for (int i = 0; i < d; ++i) z(i) = g(rng);
    return z;
  };
  const Mat lb = Eigen::LLT<Mat>(between).matrixL();
  const Mat lw = Eigen::LLT<Mat>(within).matrixL();
  std::vector<Vec> z(num_classes);
  for (Vec &v : z) v = gauss();
  if (match_latents) {
    Vec zm = Vec::Zero(d);
    for (const Vec &v : z) zm += v;
    zm /= num_classes;
    Mat c = Mat::Zero(d, d);
    for (const Vec &v : z) c += (v - zm) * (v - zm).transpose();
    c /= num_classes;
    const Mat lc = Eigen::LLT<Mat>(c).matrixL();
    for (Vec &v : z) v = lc.triangularView<Eigen::Lower>().solve(Vec(v - zm));
  }
  LabelledRows out;
  for (int k = 0; k < num_classes; ++k) {
    const Vec y = mean + lb * z[k];
    out.latents.push_back(y);
    for (int i = 0; i < per_class; ++i) {
      out.rows.push_back(y + lw * gauss());
      out.labels.push_back(k);
    }
  }
  return out;
}

}  // namespace affect::testing
