// affect/tdnn.h

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

#ifndef AFFECT_TDNN_H_
#define AFFECT_TDNN_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "affect/binary_io.h"
#include "affect/common.h"
#include "affect/features.h"
#include "json.hpp"

namespace affect {

enum class LayerKind { kTdnn, kStatsPool, kDense, kSoftmax };

const char *LayerKindName(LayerKind kind);
LayerKind ParseLayerKind(const std::string &name);

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kTdnn;
  /// Frame offsets spliced into the input; {0} for dense and softmax layers.
  std::vector<int> offsets = {0};
  int in_dim = 0;
  int out_dim = 0;
  bool relu = true;

  /// Input width of the affine map: in_dim * offsets.size().
  int SplicedDim() const { return in_dim * static_cast<int>(offsets.size()); }
  /// Number of frames consumed beyond the output frame: max - min offset.
  int Extent() const { return offsets.back() - offsets.front(); }
  bool HasParams() const { return kind != LayerKind::kStatsPool; }
};

/// Shape of the frame-level/segment-level stack. Standard() is the usual
/// 5 frame layers, stats pooling, 2 dense layers, softmax.
struct TdnnTopology {
  int input_dim = 33;
  std::vector<int> frame_dims = {512, 512, 512, 512, 1500};
  std::vector<std::vector<int>> frame_contexts = {
      {-2, -1, 0, 1, 2}, {-2, 0, 2}, {-3, 0, 3}, {0}, {0}};
  std::vector<int> dense_dims = {512, 512};
  int num_classes = 2;

  static TdnnTopology Standard(int num_classes, int input_dim = 33);
  void Validate() const;
  std::vector<LayerSpec> Build() const;
};

/// Checks dimension chaining, offsets, and that there is exactly one stats
/// pooling layer followed by dense layers and a final softmax.
void ValidateLayerSpecs(const std::vector<LayerSpec> &specs);

enum class ForwardMode { kTrain, kInfer };

template <typename Real>
struct BasicGradientSet {
  using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
  /// One entry per layer; empty for layers without parameters.
  std::vector<Matrix> dW;
  std::vector<Vector> db;

  void SetZeroLike(const BasicGradientSet &other);
  void Add(const BasicGradientSet &other);
  void Scale(Real s);
  bool AllFinite() const;
};

template <typename Real>
struct BasicForwardResult {
  using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
  /// pre[i]: affine output of layer i (pooled stats for the pooling layer).
  /// post[i]: after ReLU and dropout; this is the input of layer i + 1.
  /// Rows are frames; segment-level layers have a single row.
  std::vector<Matrix> pre, post;
  /// Scaled dropout keep-masks for dense layers in train mode, else empty.
  std::vector<Matrix> masks;
  Vector logits;
};

/// A labelled training sample. Rows are frames.
template <typename Real>
struct BasicSample {
  Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> feats;
  int label = 0;
};

/// Time-delay network with stats pooling and a softmax head. Real = float for
/// production; double is used by the gradient checks.
template <typename Real>
class BasicTdnn {
 public:
  using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
  using GradientSet = BasicGradientSet<Real>;
  using ForwardResult = BasicForwardResult<Real>;
  using Sample = BasicSample<Real>;

  BasicTdnn() = default;
  /// Zero-initialized parameters.
  BasicTdnn(std::vector<LayerSpec> specs, std::vector<std::string> class_labels);

  /// Uniform(-a, a) weights with a = sqrt(6 / fan_in) (sqrt(3 / fan_in) for
  /// the head), zero biases. Each layer draws from a stream derived from
  /// `seed` and its name.
  static BasicTdnn Init(std::vector<LayerSpec> specs,
                        std::vector<std::string> class_labels, std::uint64_t seed);

  int NumLayers() const { return static_cast<int>(specs_.size()); }
  const LayerSpec &spec(int i) const { return specs_[i]; }
  const std::vector<LayerSpec> &specs() const { return specs_; }
  Matrix &W(int i) { return W_[i]; }
  const Matrix &W(int i) const { return W_[i]; }
  Vector &b(int i) { return b_[i]; }
  const Vector &b(int i) const { return b_[i]; }

  int InputDim() const { return specs_.front().in_dim; }
  int NumClasses() const { return specs_.back().out_dim; }
  /// 1 + sum of frame-layer extents.
  int ReceptiveField() const;
  /// Number of trainable layers below the head (tdnn1.. plus dense layers).
  int Depth() const;
  /// 1-based layer number (tdnnN) of layer i; 0 for pooling and the head.
  int LayerNumber(int i) const;
  /// Index into specs() of the dense layer numbered `number` (6, 7, 8...).
  int DenseLayerIndex(int number) const;
  std::int64_t NumParams() const;

  const std::vector<std::string> &class_labels() const { return class_labels_; }
  nlohmann::json &metadata() { return metadata_; }
  const nlohmann::json &metadata() const { return metadata_; }

  /// Rows of `x` are frames. Dropout (train mode, dense layers only) uses a
  /// generator seeded with `dropout_seed`.
  ForwardResult Forward(const Matrix &x, ForwardMode mode = ForwardMode::kInfer,
                        double dropout = 0.0, std::uint64_t dropout_seed = 0) const;
  Vector Logits(const Matrix &x) const { return Forward(x).logits; }
  /// Affine (pre-ReLU) output of dense layer `layer_number`, infer mode.
  Vector Embedding(const Matrix &x, int layer_number) const;

  /// Adds d(loss)/d(params) for one sample to `grads` (which must be shaped
  /// like the model) and returns the sample's cross-entropy loss.
  Real Backward(const Matrix &x, int label, double dropout,
                std::uint64_t dropout_seed, GradientSet *grads) const;

  /// Gradients of the mean cross-entropy over `batch`. Sample k uses dropout
  /// seed DeriveSeed(dropout_seed, k). Samples are processed in chunks of a
  /// fixed size and summed in order, so the result does not depend on
  /// `threads`.
  GradientSet ComputeGradients(std::span<const Sample> batch, double dropout,
                               std::uint64_t dropout_seed, Real *mean_loss,
                               int threads = 1) const;

  GradientSet ZeroGradients() const;
  bool AllFinite() const;

  template <typename To>
  BasicTdnn<To> Cast() const;

 private:
  template <typename>
  friend class BasicTdnn;

  /// Affine output of parameter layer i for input rows `in`.
  Matrix Affine(int i, const Matrix &in) const;

  std::vector<LayerSpec> specs_;
  std::vector<Matrix> W_;
  std::vector<Vector> b_;
  std::vector<std::string> class_labels_;
  nlohmann::json metadata_ = nlohmann::json::object();
};

using TdnnModel = BasicTdnn<float>;
using GradientSet = BasicGradientSet<float>;

/// Per-dimension mean then population std, variance floored at `var_floor`.
template <typename Real>
Eigen::Matrix<Real, 1, Eigen::Dynamic> StatsPool(
    const Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> &frames,
    double var_floor = 1e-10);

/// Cross-entropy of softmax(logits) against `label`; optional gradient
/// softmax(logits) - onehot(label).
template <typename Real>
Real SoftmaxCrossEntropy(const Eigen::Matrix<Real, Eigen::Dynamic, 1> &logits,
                         int label, Eigen::Matrix<Real, Eigen::Dynamic, 1> *grad);

/// Row-major float features to the model's frame matrix.
template <typename Real>
Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> ToFrames(const FeatureMatrix &feats) {
  return feats.data.template cast<Real>();
}

/// Replaces the head with a fresh `num_classes`-way softmax and, if
/// `add_layer8` and the model has exactly 7 layers below the head, inserts a
/// new dense layer of the same width as the last one. Existing parameters are
/// copied unchanged.
TdnnModel AdaptHead(const TdnnModel &model, int num_classes, bool add_layer8,
                    std::uint64_t seed, std::vector<std::string> class_labels = {});

// Model file: "TDN1", u32 LE header length, JSON header, then f32 LE
// parameters (each layer's W row-major, then b) in layer order.
void WriteTdnn(const TdnnModel &model, ByteWriter *w);
TdnnModel ReadTdnn(ByteReader *r);
void SaveTdnn(const TdnnModel &model, const std::string &path);
TdnnModel LoadTdnn(const std::string &path);

struct FinetuneConfig {
  double lr_initial = 1e-3;
  double lr_final = 1e-4;
  int batch_size = 64;
  double dropout = 0.5;
  int epochs = 3;
  double momentum = 0.9;
  /// Learning rate of layers 1-6 relative to the schedule.
  double first_six_lr_multiplier = 1.0;
  /// If >= 0, layers 1-6 use this fixed learning rate instead; overrides
  /// the multiplier.
  double first_six_lr = -1.0;
  bool add_layer8 = false;
  bool noise_aug = false;
  std::uint64_t seed = 0;

  void Validate() const;
  /// Learning rate of the schedule at `step` of `num_steps`: exponential
  /// from lr_initial at step 0 to lr_final at the last step.
  double LearningRate(std::int64_t step, std::int64_t num_steps) const;
  /// Rate actually applied to layer number `layer_number` (0 for the head).
  double LayerLearningRate(double lr, int layer_number) const;
  nlohmann::json ToJson() const;
  static FinetuneConfig FromJson(const nlohmann::json &j);
};

struct TrainingLog {
  struct Epoch {
    int epoch = 0;
    double mean_loss = 0.0;
    double lr_first = 0.0, lr_last = 0.0;
    std::int64_t steps = 0;
  };
  std::vector<Epoch> epochs;
  std::vector<double> step_lr;
  std::int64_t skipped_short = 0;
  nlohmann::json ToJson() const;
};

struct TrainingExample {
  FeatureMatrix feats;
  int label = 0;
};

/// SGD with momentum on the mean cross-entropy. Examples shorter than the
/// receptive field are skipped and counted in the log. Throws NumericalError
/// on a non-finite loss.
TdnnModel Finetune(const TdnnModel &model, const std::vector<TrainingExample> &data,
                   const FinetuneConfig &cfg, TrainingLog *log, int threads = 1);

}  // namespace affect

#endif  // AFFECT_TDNN_H_
