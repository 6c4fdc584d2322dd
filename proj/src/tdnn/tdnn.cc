// tdnn/tdnn.cc

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

#include <algorithm>
#include <cmath>

#include "affect/parallel.h"
#include "affect/tdnn.h"

namespace affect {

const char *LayerKindName(LayerKind kind) {
  switch (kind) {
    case LayerKind::kTdnn: return "tdnn";
    case LayerKind::kStatsPool: return "stats_pool";
    case LayerKind::kDense: return "dense";
    case LayerKind::kSoftmax: return "softmax";
  }
  return "?";
}

LayerKind ParseLayerKind(const std::string &name) {
  if (name == "tdnn") return LayerKind::kTdnn;
  if (name == "stats_pool") return LayerKind::kStatsPool;
  if (name == "dense") return LayerKind::kDense;
  if (name == "softmax") return LayerKind::kSoftmax;
  Fail("unknown layer kind '", name, "'");
}

TdnnTopology TdnnTopology::Standard(int num_classes, int input_dim) {
  TdnnTopology t;
  t.num_classes = num_classes;
  t.input_dim = input_dim;
  return t;
}

void TdnnTopology::Validate() const {
  if (input_dim < 1) Fail("topology: input_dim must be positive");
  if (frame_dims.empty() || frame_dims.size() != frame_contexts.size())
    Fail("topology: need one context list per frame layer");
  if (dense_dims.empty()) Fail("topology: need at least one dense layer");
  if (num_classes < 2) Fail("topology: num_classes must be >= 2, got ", num_classes);
  ValidateLayerSpecs(Build());
}

std::vector<LayerSpec> TdnnTopology::Build() const {
  std::vector<LayerSpec> specs;
  int in = input_dim, n = 0;
  for (std::size_t i = 0; i < frame_dims.size(); ++i) {
    specs.push_back({StrCat("tdnn", ++n), LayerKind::kTdnn, frame_contexts[i], in,
                     frame_dims[i], true});
    in = frame_dims[i];
  }
  specs.push_back({"stats_pool", LayerKind::kStatsPool, {0}, in, 2 * in, false});
  in *= 2;
  for (int d : dense_dims) {
    specs.push_back({StrCat("tdnn", ++n), LayerKind::kDense, {0}, in, d, true});
    in = d;
  }
  specs.push_back({"output", LayerKind::kSoftmax, {0}, in, num_classes, false});
  return specs;
}

void ValidateLayerSpecs(const std::vector<LayerSpec> &specs) {
  if (specs.size() < 3) Fail("tdnn: need frame layers, pooling and a head");
  int pools = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec &s = specs[i];
    if (s.in_dim < 1 || s.out_dim < 1)
      Fail("tdnn: layer '", s.name, "' has non-positive dims");
    if (s.offsets.empty()) Fail("tdnn: layer '", s.name, "' has no context offsets");
    for (std::size_t k = 1; k < s.offsets.size(); ++k)
      if (s.offsets[k] <= s.offsets[k - 1])
        Fail("tdnn: offsets of layer '", s.name, "' must be strictly increasing");
    if (i > 0 && s.in_dim != specs[i - 1].out_dim)
      Fail("tdnn: layer '", s.name, "' expects input ", s.in_dim, " but previous layer outputs ",
           specs[i - 1].out_dim);
    const bool last = i + 1 == specs.size();
    switch (s.kind) {
      case LayerKind::kTdnn:
        if (pools) Fail("tdnn: frame layer '", s.name, "' after stats pooling");
        break;
      case LayerKind::kStatsPool:
        if (++pools > 1) Fail("tdnn: more than one stats pooling layer");
        if (i == 0) Fail("tdnn: stats pooling cannot be the first layer");
        if (s.out_dim != 2 * s.in_dim) Fail("tdnn: stats pooling must output 2 x input dim");
        break;
      case LayerKind::kDense:
      case LayerKind::kSoftmax:
        if (!pools) Fail("tdnn: segment layer '", s.name, "' before stats pooling");
        if (s.offsets != std::vector<int>{0}) Fail("tdnn: segment layer '", s.name, "' needs context {0}");
        if ((s.kind == LayerKind::kSoftmax) != last)
          Fail("tdnn: the softmax layer must be last and unique");
        break;
    }
  }
  if (specs.back().kind != LayerKind::kSoftmax) Fail("tdnn: last layer must be softmax");
  if (specs.back().out_dim < 2) Fail("tdnn: head needs at least 2 classes");
  if (specs.back().relu) Fail("tdnn: head must not have a nonlinearity");
}

// ---- gradient sets ----

template <typename Real>
void BasicGradientSet<Real>::SetZeroLike(const BasicGradientSet &other) {
  dW.resize(other.dW.size());
  db.resize(other.db.size());
  for (std::size_t i = 0; i < dW.size(); ++i) {
    dW[i].setZero(other.dW[i].rows(), other.dW[i].cols());
    db[i].setZero(other.db[i].size());
  }
}

template <typename Real>
void BasicGradientSet<Real>::Add(const BasicGradientSet &other) {
  for (std::size_t i = 0; i < dW.size(); ++i) {
    dW[i] += other.dW[i];
    db[i] += other.db[i];
  }
}

template <typename Real>
void BasicGradientSet<Real>::Scale(Real s) {
  for (std::size_t i = 0; i < dW.size(); ++i) {
    dW[i] *= s;
    db[i] *= s;
  }
}

template <typename Real>
bool BasicGradientSet<Real>::AllFinite() const {
  for (std::size_t i = 0; i < dW.size(); ++i)
    if (!dW[i].allFinite() || !db[i].allFinite()) return false;
  return true;
}

// ---- free helpers ----

template <typename Real>
Eigen::Matrix<Real, 1, Eigen::Dynamic> StatsPool(
    const Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> &frames, double var_floor) {
  const Eigen::Index n = frames.rows(), d = frames.cols();
  if (n < 1) Fail("stats pooling over zero frames");
  Eigen::Matrix<Real, 1, Eigen::Dynamic> out(2 * d);
  // Sums run over sorted values so the output is independent of frame order.
  std::vector<Real> buf(n);
  auto sorted_sum = [&buf]() {
    std::sort(buf.begin(), buf.end());
    Real s = 0;
    for (Real v : buf) s += v;
    return s;
  };
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index t = 0; t < n; ++t) buf[t] = frames(t, j);
    const Real mean = sorted_sum() / n;
    for (Eigen::Index t = 0; t < n; ++t) buf[t] = (frames(t, j) - mean) * (frames(t, j) - mean);
    const Real var = sorted_sum() / n;
    out(j) = mean;
    out(d + j) = std::sqrt(std::max(var, static_cast<Real>(var_floor)));
  }
  return out;
}

template <typename Real>
Real SoftmaxCrossEntropy(const Eigen::Matrix<Real, Eigen::Dynamic, 1> &logits, int label,
                         Eigen::Matrix<Real, Eigen::Dynamic, 1> *grad) {
  if (label < 0 || label >= logits.size())
    Fail("label ", label, " out of range for ", logits.size(), " classes");
  const Real m = logits.maxCoeff();
  const Real lse = m + std::log((logits.array() - m).exp().sum());
  if (grad) {
    *grad = (logits.array() - lse).exp().matrix();
    (*grad)(label) -= Real(1);
  }
  return lse - logits(label);
}

// ---- model ----

template <typename Real>
BasicTdnn<Real>::BasicTdnn(std::vector<LayerSpec> specs, std::vector<std::string> class_labels)
    : specs_(std::move(specs)), class_labels_(std::move(class_labels)) {
  ValidateLayerSpecs(specs_);
  if (class_labels_.empty())
    for (int k = 0; k < NumClasses(); ++k) class_labels_.push_back(std::to_string(k));
  if (static_cast<int>(class_labels_.size()) != NumClasses())
    Fail("tdnn: ", class_labels_.size(), " class labels for a ", NumClasses(), "-way head");
  W_.resize(specs_.size());
  b_.resize(specs_.size());
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (!specs_[i].HasParams()) continue;
    W_[i].setZero(specs_[i].out_dim, specs_[i].SplicedDim());
    b_[i].setZero(specs_[i].out_dim);
  }
}

template <typename Real>
BasicTdnn<Real> BasicTdnn<Real>::Init(std::vector<LayerSpec> specs,
                                      std::vector<std::string> class_labels,
                                      std::uint64_t seed) {
  BasicTdnn model(std::move(specs), std::move(class_labels));
  for (int i = 0; i < model.NumLayers(); ++i) {
    const LayerSpec &s = model.specs_[i];
    if (!s.HasParams()) continue;
    Rng rng(DeriveSeed(seed, s.name));
    const double bound = std::sqrt((s.relu ? 6.0 : 3.0) / s.SplicedDim());
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix &w = model.W_[i];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<Real>(u(rng));
  }
  return model;
}

template <typename Real>
int BasicTdnn<Real>::ReceptiveField() const {
  int rf = 1;
  for (const LayerSpec &s : specs_)
    if (s.kind == LayerKind::kTdnn) rf += s.Extent();
  return rf;
}

template <typename Real>
int BasicTdnn<Real>::Depth() const {
  int n = 0;
  for (const LayerSpec &s : specs_)
    if (s.kind == LayerKind::kTdnn || s.kind == LayerKind::kDense) ++n;
  return n;
}

template <typename Real>
int BasicTdnn<Real>::LayerNumber(int i) const {
  const LayerKind k = specs_[i].kind;
  if (k != LayerKind::kTdnn && k != LayerKind::kDense) return 0;
  int n = 0;
  for (int j = 0; j <= i; ++j)
    if (specs_[j].kind == LayerKind::kTdnn || specs_[j].kind == LayerKind::kDense) ++n;
  return n;
}

template <typename Real>
int BasicTdnn<Real>::DenseLayerIndex(int number) const {
  for (int i = 0; i < NumLayers(); ++i)
    if (LayerNumber(i) == number) {
      if (specs_[i].kind != LayerKind::kDense)
        Fail("layer ", number, " is a frame-level layer, not a dense embedding layer");
      return i;
    }
  Fail("model has no layer ", number, " (depth ", Depth(), ")");
}

template <typename Real>
std::int64_t BasicTdnn<Real>::NumParams() const {
  std::int64_t n = 0;
  for (std::size_t i = 0; i < specs_.size(); ++i) n += W_[i].size() + b_[i].size();
  return n;
}

template <typename Real>
bool BasicTdnn<Real>::AllFinite() const {
  for (std::size_t i = 0; i < specs_.size(); ++i)
    if (!W_[i].allFinite() || !b_[i].allFinite()) return false;
  return true;
}

template <typename Real>
typename BasicTdnn<Real>::Matrix BasicTdnn<Real>::Affine(int i, const Matrix &in) const {
  const LayerSpec &s = specs_[i];
  const Eigen::Index t_out = in.rows() - s.Extent();
  if (s.kind != LayerKind::kTdnn) {
    Matrix z = in * W_[i].transpose();
    z.rowwise() += b_[i].transpose();
    return z;
  }
  // Frames go in as GEMM columns, padded to a multiple of 8, so every frame
  // takes the same kernel path and its output does not depend on position.
  const Eigen::Index padded = (t_out + 7) / 8 * 8;
  Matrix spliced = Matrix::Zero(s.SplicedDim(), padded);
  for (std::size_t k = 0; k < s.offsets.size(); ++k)
    spliced.block(k * s.in_dim, 0, s.in_dim, t_out) =
        in.middleRows(s.offsets[k] - s.offsets.front(), t_out).transpose();
  const Matrix zt = W_[i] * spliced;
  Matrix z = zt.leftCols(t_out).transpose();
  z.rowwise() += b_[i].transpose();
  return z;
}

template <typename Real>
typename BasicTdnn<Real>::ForwardResult BasicTdnn<Real>::Forward(
    const Matrix &x, ForwardMode mode, double dropout, std::uint64_t dropout_seed) const {
  if (specs_.empty()) Fail("tdnn: forward on an empty model");
  if (x.cols() != InputDim())
    Fail("tdnn: input has dim ", x.cols(), ", model expects ", InputDim());
  if (x.rows() < ReceptiveField())
    Fail("tdnn: input has ", x.rows(), " frames, receptive field is ", ReceptiveField());
  if (!(dropout >= 0.0 && dropout < 1.0)) Fail("tdnn: dropout must be in [0, 1)");

  const int n = NumLayers();
  ForwardResult r;
  r.pre.resize(n);
  r.post.resize(n);
  r.masks.resize(n);
  const bool drop = mode == ForwardMode::kTrain && dropout > 0.0;
  Rng rng(dropout_seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Real keep_scale = static_cast<Real>(1.0 / (1.0 - dropout));

  const Matrix *in = &x;
  for (int i = 0; i < n; ++i) {
    const LayerSpec &s = specs_[i];
    if (s.kind == LayerKind::kStatsPool) {
      r.pre[i] = StatsPool<Real>(*in);
      r.post[i] = r.pre[i];
    } else {
      r.pre[i] = Affine(i, *in);
      r.post[i] = s.relu ? Matrix(r.pre[i].cwiseMax(Real(0))) : r.pre[i];
      if (drop && s.kind == LayerKind::kDense) {
        Matrix mask(r.post[i].rows(), r.post[i].cols());
        for (Eigen::Index j = 0; j < mask.size(); ++j)
          mask.data()[j] = u(rng) < dropout ? Real(0) : keep_scale;
        r.post[i].array() *= mask.array();
        r.masks[i] = std::move(mask);
      }
    }
    in = &r.post[i];
  }
  r.logits = r.post.back().row(0).transpose();
  return r;
}

template <typename Real>
typename BasicTdnn<Real>::Vector BasicTdnn<Real>::Embedding(const Matrix &x,
                                                            int layer_number) const {
  const int idx = DenseLayerIndex(layer_number);
  return Forward(x).pre[idx].row(0).transpose();
}

template <typename Real>
Real BasicTdnn<Real>::Backward(const Matrix &x, int label, double dropout,
                               std::uint64_t dropout_seed, GradientSet *grads) const {
  if (label < 0 || label >= NumClasses())
    Fail("tdnn: label ", label, " out of range for ", NumClasses(), " classes");
  const ForwardResult fr = Forward(x, ForwardMode::kTrain, dropout, dropout_seed);
  Vector g;
  const Real loss = SoftmaxCrossEntropy<Real>(fr.logits, label, &g);

  Matrix d_out = g.transpose();  // gradient w.r.t. post[i]
  for (int i = NumLayers() - 1; i >= 0; --i) {
    const LayerSpec &s = specs_[i];
    const Matrix &in = i == 0 ? x : fr.post[i - 1];
    Matrix d_in;
    if (s.kind == LayerKind::kStatsPool) {
      const Eigen::Index t = in.rows(), d = in.cols();
      d_in.resize(t, d);
      const Real floor = static_cast<Real>(1e-10);
      for (Eigen::Index j = 0; j < d; ++j) {
        const Real mean = fr.pre[i](0, j), sd = fr.pre[i](0, d + j);
        const Real var = (in.col(j).array() - mean).square().mean();
        const Real dm = d_out(0, j) / t;
        const Real ds = var > floor ? d_out(0, d + j) / (t * sd) : Real(0);
        d_in.col(j) = ((in.col(j).array() - mean) * ds + dm).matrix();
      }
    } else {
      Matrix dz = d_out;
      if (fr.masks[i].size()) dz.array() *= fr.masks[i].array();
      if (s.relu) dz = (fr.pre[i].array() > Real(0)).select(dz, Real(0));
      const Eigen::Index t_out = dz.rows();
      grads->db[i] += dz.colwise().sum().transpose();
      if (i > 0) d_in.setZero(in.rows(), s.in_dim);
      for (std::size_t k = 0; k < s.offsets.size(); ++k) {
        const Eigen::Index start = s.offsets[k] - s.offsets.front();
        grads->dW[i].middleCols(k * s.in_dim, s.in_dim).noalias() +=
            dz.transpose() * in.middleRows(start, t_out);
        if (i > 0)
          d_in.middleRows(start, t_out).noalias() +=
              dz * W_[i].middleCols(k * s.in_dim, s.in_dim);
      }
    }
    d_out = std::move(d_in);
  }
  return loss;
}

template <typename Real>
typename BasicTdnn<Real>::GradientSet BasicTdnn<Real>::ZeroGradients() const {
  GradientSet g;
  g.dW.resize(specs_.size());
  g.db.resize(specs_.size());
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    g.dW[i].setZero(W_[i].rows(), W_[i].cols());
    g.db[i].setZero(b_[i].size());
  }
  return g;
}

template <typename Real>
typename BasicTdnn<Real>::GradientSet BasicTdnn<Real>::ComputeGradients(
    std::span<const Sample> batch, double dropout, std::uint64_t dropout_seed,
    Real *mean_loss, int threads) const {
  constexpr int kChunk = 8;
  const int n = static_cast<int>(batch.size());
  if (n == 0) Fail("tdnn: empty batch");
  const int num_chunks = (n + kChunk - 1) / kChunk;
  std::vector<GradientSet> partial(num_chunks);
  std::vector<Real> losses(n);
  ParallelFor(num_chunks, threads, [&](int c) {
    partial[c] = ZeroGradients();
    for (int k = c * kChunk; k < std::min(n, (c + 1) * kChunk); ++k)
      losses[k] = Backward(batch[k].feats, batch[k].label, dropout,
                           DeriveSeed(dropout_seed, StrCat("sample:", k)), &partial[c]);
  });
  GradientSet total = std::move(partial[0]);
  for (int c = 1; c < num_chunks; ++c) total.Add(partial[c]);
  total.Scale(Real(1) / n);
  if (mean_loss) {
    Real acc = 0;
    for (Real l : losses) acc += l;
    *mean_loss = acc / n;
  }
  return total;
}

template <typename Real>
template <typename To>
BasicTdnn<To> BasicTdnn<Real>::Cast() const {
  BasicTdnn<To> out(specs_, class_labels_);
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    out.W_[i] = W_[i].template cast<To>();
    out.b_[i] = b_[i].template cast<To>();
  }
  out.metadata_ = metadata_;
  return out;
}

template struct BasicGradientSet<float>;
template struct BasicGradientSet<double>;
template class BasicTdnn<float>;
template class BasicTdnn<double>;
template BasicTdnn<double> BasicTdnn<float>::Cast<double>() const;
template BasicTdnn<float> BasicTdnn<double>::Cast<float>() const;
template BasicTdnn<float> BasicTdnn<float>::Cast<float>() const;
template BasicTdnn<double> BasicTdnn<double>::Cast<double>() const;
template Eigen::Matrix<float, 1, Eigen::Dynamic> StatsPool<float>(const Eigen::MatrixXf &, double);
template Eigen::Matrix<double, 1, Eigen::Dynamic> StatsPool<double>(const Eigen::MatrixXd &,
                                                                    double);
template float SoftmaxCrossEntropy<float>(const Eigen::VectorXf &, int, Eigen::VectorXf *);
template double SoftmaxCrossEntropy<double>(const Eigen::VectorXd &, int, Eigen::VectorXd *);

// ---- head adaptation ----

TdnnModel AdaptHead(const TdnnModel &model, int num_classes, bool add_layer8,
                    std::uint64_t seed, std::vector<std::string> class_labels) {
  if (num_classes < 2) Fail("adapt_head: num_classes must be >= 2, got ", num_classes);
  std::vector<LayerSpec> specs(model.specs().begin(), model.specs().end() - 1);
  const int last_dim = specs.back().out_dim;
  const bool insert = add_layer8 && model.Depth() == 7;
  if (add_layer8 && model.Depth() != 7 && model.Depth() != 8)
    Fail("adapt_head: add_layer8 needs a 7-layer model, this one has ", model.Depth());
  if (insert) specs.push_back({"tdnn8", LayerKind::kDense, {0}, last_dim, last_dim, true});
  specs.push_back({"output", LayerKind::kSoftmax, {0}, last_dim, num_classes, false});

  TdnnModel fresh = TdnnModel::Init(specs, class_labels, seed);
  for (int i = 0; i + 1 < model.NumLayers(); ++i) {
    fresh.W(i) = model.W(i);
    fresh.b(i) = model.b(i);
  }
  fresh.metadata() = model.metadata();
  fresh.metadata()["adapted_from_classes"] = model.NumClasses();
  return fresh;
}

// ---- serialization ----

void WriteTdnn(const TdnnModel &model, ByteWriter *w) {
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerSpec &s : model.specs())
    layers.push_back({{"name", s.name},
                      {"kind", LayerKindName(s.kind)},
                      {"offsets", s.offsets},
                      {"in_dim", s.in_dim},
                      {"out_dim", s.out_dim},
                      {"relu", s.relu}});
  const nlohmann::json header = {{"format", "TDN1"},
                                 {"version", 1},
                                 {"layers", layers},
                                 {"class_labels", model.class_labels()},
                                 {"input_dim", model.InputDim()},
                                 {"receptive_field", model.ReceptiveField()},
                                 {"num_params", model.NumParams()},
                                 {"metadata", model.metadata()}};
  const std::string text = header.dump();
  w->PutBytes("TDN1");
  w->PutU32(static_cast<std::uint32_t>(text.size()));
  w->PutBytes(text);
  for (int i = 0; i < model.NumLayers(); ++i) {
    if (!model.spec(i).HasParams()) continue;
    const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> wr = model.W(i);
    w->PutF32s(std::span<const float>(wr.data(), wr.size()));
    w->PutF32s(std::span<const float>(model.b(i).data(), model.b(i).size()));
  }
}

TdnnModel ReadTdnn(ByteReader *r) {
  r->ExpectMagic("TDN1");
  const std::uint32_t len = r->GetU32();
  const std::uint64_t header_offset = r->offset();
  const std::string_view text = r->GetBytes(len);
  nlohmann::json header;
  std::vector<LayerSpec> specs;
  std::vector<std::string> labels;
  try {
    header = nlohmann::json::parse(text);
    for (const auto &j : header.at("layers"))
      specs.push_back({j.at("name").get<std::string>(),
                       ParseLayerKind(j.at("kind").get<std::string>()),
                       j.at("offsets").get<std::vector<int>>(), j.at("in_dim").get<int>(),
                       j.at("out_dim").get<int>(), j.at("relu").get<bool>()});
    labels = header.at("class_labels").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(r->source(), header_offset, StrCat("bad TDN1 header: ", e.what()));
  }
  TdnnModel model;
  try {
    model = TdnnModel(specs, labels);
  } catch (const InvalidArgument &e) {
    throw FormatError(r->source(), header_offset, e.what());
  }
  if (header.contains("metadata")) model.metadata() = header["metadata"];
  if (r->remaining() != static_cast<std::size_t>(model.NumParams()) * 4)
    r->Throw(StrCat("TDN1 expects ", model.NumParams(), " parameters, found ",
                    r->remaining(), " bytes"));
  for (int i = 0; i < model.NumLayers(); ++i) {
    if (!model.spec(i).HasParams()) continue;
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> wr(
        model.W(i).rows(), model.W(i).cols());
    r->GetF32s(std::span<float>(wr.data(), wr.size()));
    model.W(i) = wr;
    r->GetF32s(std::span<float>(model.b(i).data(), model.b(i).size()));
  }
  if (!model.AllFinite()) r->Throw("TDN1 contains non-finite parameters");
  return model;
}

void SaveTdnn(const TdnnModel &model, const std::string &path) {
  ByteWriter w;
  WriteTdnn(model, &w);
  WriteFileAtomic(path, w.bytes());
}

TdnnModel LoadTdnn(const std::string &path) {
  const std::string bytes = ReadFileBytes(path);
  ByteReader r(bytes, path);
  return ReadTdnn(&r);
}

}  // namespace affect
