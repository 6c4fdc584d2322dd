// Test-only reference implementations. Deliberately naive and written
// without reusing library code paths, so they can check the library.

#ifndef AFFECT_TESTS_ORACLES_H_
#define AFFECT_TESTS_ORACLES_H_

#include <string>
#include <vector>

#include "affect/common.h"
#include "affect/tdnn.h"

namespace affect::testing {

/// Log density of N(mean, cov) at x via a dense LU determinant and inverse.
double GaussianLogPdf(const Vec &x, const Vec &mean, const Mat &cov);

/// Two-covariance same-class LLR computed by building the full 2d x 2d joint
/// covariance [[B+W, B], [B, B+W]] against block-diag(B+W, B+W).
double JointGaussianLlr(const Vec &u1, const Vec &u2, const Vec &mean,
                        const Mat &between, const Mat &within);

/// EER by evaluating FAR/FRR at every midpoint between sorted distinct scores
/// (plus both ends), then linearly interpolating at the sign change.
double BruteForceEer(const std::vector<double> &target,
                     const std::vector<double> &nontarget);

/// Clamped centered (or causal) window mean subtraction, recomputed per frame.
Mat NaiveCmn(const Mat &x, int window, bool center);

/// Label grouping written out cell by cell: the canonical class name for
/// (corpus, label), or "" when the corpus does not use that label.
std::string GroupingExpected(const std::string &corpus, const std::string &label);
/// Every label spelled anywhere in the table, plus "xxx".
std::vector<std::string> GroupingAllLabels();

/// Generalized eigenvectors of (S_b, S_w + lambda I), lambda = 1e-6 tr(S_w)/D,
/// from a general (non-symmetric) eigensolve of (S_w + lambda I)^-1 S_b.
/// Columns sorted by decreasing ratio, unit Euclidean norm.
struct LdaOracleResult {
  Mat directions;
  Vec ratios;
  Mat within, between;
};
LdaOracleResult LdaOracle(const std::vector<Vec> &rows, const std::vector<int> &labels);

/// EER of large score sets by sorting: the score t where the count-based
/// FAR(t) and FRR(t) are closest, reported as their average.
double SortedEer(std::vector<double> target, std::vector<double> nontarget);

/// Sets every bias to Uniform(-scale, scale).
void RandomizeBiases(BasicTdnn<double> *model, double scale, std::uint64_t seed);

/// Largest relative error between analytic batch gradients and central
/// differences of the mean loss, over every parameter. The loss is evaluated
/// by forward passes only. Relative error is |a - n| / max(|a|, |n|, 1e-6).
double MaxGradientRelativeError(const BasicTdnn<double> &model,
                                const std::vector<BasicSample<double>> &batch,
                                double dropout, std::uint64_t dropout_seed,
                                double step = 1e-6);

}  // namespace affect::testing

#endif  // AFFECT_TESTS_ORACLES_H_
