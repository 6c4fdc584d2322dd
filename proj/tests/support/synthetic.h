// Test-only signal generators.

#ifndef AFFECT_TESTS_SYNTHETIC_H_
#define AFFECT_TESTS_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <vector>

#include "affect/audio.h"
#include "affect/common.h"

namespace affect::testing {

AudioBuffer Sine(double hz, double seconds, double amplitude = 0.5,
                 double sample_rate = 16000.0);
/// Band-unlimited sawtooth with exact period sample_rate / hz.
AudioBuffer Sawtooth(double hz, double seconds, double amplitude = 0.5,
                     double sample_rate = 16000.0);
AudioBuffer WhiteNoise(double seconds, double stddev, std::uint64_t seed,
                       double sample_rate = 16000.0);
AudioBuffer Silence(double seconds, double sample_rate = 16000.0);

/// Number of synthetic emotion classes.
inline constexpr int kSyntheticClasses = 5;

/// One utterance of synthetic class `label`: a jittered glottal pulse train
/// through class-specific formant resonators, plus white noise. Classes
/// differ in spectral envelope and pitch range.
AudioBuffer SyntheticEmotionUtterance(int label, std::uint64_t seed,
                                      const std::string &id);

/// Random symmetric positive definite matrix with eigenvalues drawn
/// uniformly from [lo, hi] and a random orthogonal basis.
Mat RandomSpd(int dim, double lo, double hi, std::uint64_t seed);

/// Random orthogonal matrix (QR of a Gaussian matrix).
Mat RandomOrthogonal(int dim, std::uint64_t seed);

struct LabelledRows {
  std::vector<Vec> rows;
  std::vector<int> labels;
  std::vector<Vec> latents;  // one class centre per label
};

/// Draws from the two-covariance model: per class y ~ N(mean, between), per
/// sample x = y + e with e ~ N(0, within). With `match_latents`, the drawn
/// class centres are affinely corrected so their sample mean and covariance
/// (divisor K) equal `mean` and `between` exactly; the samples around them
/// stay plain draws.
LabelledRows SampleTwoCovariance(const Vec &mean, const Mat &between, const Mat &within,
                                 int num_classes, int per_class, std::uint64_t seed,
                                 bool match_latents = false);

}  // namespace affect::testing

#endif  // AFFECT_TESTS_SYNTHETIC_H_
