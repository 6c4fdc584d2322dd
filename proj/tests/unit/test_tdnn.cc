// Unit tests for the TDNN: shapes, pooling, gradients, head adaptation,
// fine-tuning and the model file.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "affect/tdnn.h"
#include "doctest.h"
#include "oracles.h"

using namespace affect;
using namespace affect::testing;

namespace {

template <typename Real>
Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> RandomFrames(int t, int d, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0, 1);
  Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> x(t, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<Real>(g(rng));
  return x;
}

TdnnTopology SmallTopology(int num_classes) {
  TdnnTopology t;
  t.input_dim = 33;
  t.frame_dims = {32, 32, 32, 32, 64};
  t.dense_dims = {24, 24};
  t.num_classes = num_classes;
  return t;
}

}  // namespace

TEST_CASE("standard topology shapes") {
  TdnnTopology topo = TdnnTopology::Standard(10);
  topo.Validate();
  const auto specs = topo.Build();
  REQUIRE(specs.size() == 9);
  CHECK(specs[0].SplicedDim() == 165);
  CHECK(specs[0].out_dim == 512);
  CHECK(specs[1].SplicedDim() == 1536);
  CHECK(specs[2].SplicedDim() == 1536);
  CHECK(specs[3].SplicedDim() == 512);
  CHECK(specs[4].out_dim == 1500);
  CHECK(specs[5].kind == LayerKind::kStatsPool);
  CHECK(specs[5].out_dim == 3000);
  CHECK(specs[6].in_dim == 3000);
  CHECK(specs[6].out_dim == 512);
  CHECK(specs[7].out_dim == 512);
  CHECK(specs[8].out_dim == 10);

  TdnnModel m = TdnnModel::Init(specs, {}, 1);
  CHECK(m.ReceptiveField() == 15);
  CHECK(m.Depth() == 7);
  const auto fr = m.Forward(RandomFrames<float>(15, 33, 2));
  CHECK(fr.post[4].rows() == 1);
  CHECK(fr.post[4].cols() == 1500);
  CHECK(fr.post[5].cols() == 3000);
  CHECK(fr.post[6].cols() == 512);
  CHECK(fr.logits.size() == 10);
  CHECK_THROWS_AS(m.Forward(RandomFrames<float>(14, 33, 2)), InvalidArgument);
  CHECK_THROWS_AS(m.Forward(RandomFrames<float>(20, 30, 2)), InvalidArgument);

  // Shapes for other lengths: T' = T - 14 frames survive the frame layers.
  for (int t : {16, 40, 101}) CHECK(m.Forward(RandomFrames<float>(t, 33, 3)).post[4].rows() == t - 14);
}

TEST_CASE("layer spec validation") {
  auto specs = TdnnTopology::Standard(4).Build();
  auto bad = specs;
  bad[1].offsets = {0, -2, 2};
  CHECK_THROWS_AS(ValidateLayerSpecs(bad), InvalidArgument);
  bad = specs;
  bad[2].in_dim = 100;
  CHECK_THROWS_AS(ValidateLayerSpecs(bad), InvalidArgument);
  bad = specs;
  bad.erase(bad.begin() + 5);
  CHECK_THROWS_AS(ValidateLayerSpecs(bad), InvalidArgument);
}

TEST_CASE("stats pooling examples") {
  Eigen::MatrixXd same(4, 3);
  same.rowwise() = Eigen::RowVector3d(1.5, -2, 0.25);
  const auto p = StatsPool<double>(same);
  CHECK(p(0) == 1.5);
  CHECK(p(1) == -2.0);
  CHECK(p(2) == 0.25);
  for (int j = 3; j < 6; ++j) CHECK(p(j) == doctest::Approx(1e-5).epsilon(1e-12));

  Eigen::MatrixXd two(2, 2);
  two << 0, 0, 2, 2;
  const auto q = StatsPool<double>(two);
  CHECK(q(0) == 1.0);
  CHECK(q(2) == 1.0);
  CHECK(q(3) == 1.0);

  Eigen::MatrixXf x = RandomFrames<float>(37, 5, 9);
  std::vector<int> perm(37);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(4);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXf y(37, 5);
  for (int i = 0; i < 37; ++i) y.row(i) = x.row(perm[i]);
  CHECK(StatsPool<float>(x) == StatsPool<float>(y));
}

TEST_CASE("frame-order invariance with pointwise frame layers") {
  TdnnTopology topo = SmallTopology(3);
  topo.frame_contexts = {{0}, {0}, {0}, {0}, {0}};
  TdnnModel m = TdnnModel::Init(topo.Build(), {}, 5);
  Eigen::MatrixXf x = RandomFrames<float>(50, 33, 6);
  std::vector<int> perm(50);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(8);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXf y(50, 33);
  for (int i = 0; i < 50; ++i) y.row(i) = x.row(perm[i]);
  CHECK(m.Logits(x) == m.Logits(y));
}

TEST_CASE("embeddings") {
  TdnnModel m = TdnnModel::Init(TdnnTopology::Standard(6).Build(), {}, 3);
  Eigen::MatrixXf x = RandomFrames<float>(40, 33, 1);
  const Eigen::VectorXf e6 = m.Embedding(x, 6);
  CHECK(e6.size() == 512);
  CHECK(m.Embedding(x, 6) == e6);
  CHECK(m.Embedding(x, 7).size() == 512);
  CHECK_THROWS_AS(m.Embedding(x, 8), InvalidArgument);
  CHECK_THROWS_AS(m.Embedding(x, 3), InvalidArgument);
  // Pre-activation: some entries negative.
  CHECK(e6.minCoeff() < 0.0f);
}

TEST_CASE("softmax cross-entropy gradient") {
  for (int k : {2, 5, 11}) {
    Eigen::VectorXd logits = Eigen::VectorXd::Constant(k, 0.7), g;
    const double loss = SoftmaxCrossEntropy<double>(logits, 1, &g);
    CHECK(loss == doctest::Approx(std::log(k)));
    CHECK(g(1) == doctest::Approx(1.0 / k - 1.0));
    CHECK(g(0) == doctest::Approx(1.0 / k));
  }
  Eigen::VectorXd big(3);
  big << 1000, 0, -1000;
  Eigen::VectorXd g;
  CHECK(std::isfinite(SoftmaxCrossEntropy<double>(big, 2, &g)));
  CHECK_THROWS_AS(SoftmaxCrossEntropy<double>(big, 3, &g), InvalidArgument);
}

TEST_CASE("analytic gradients match central differences") {
  TdnnTopology topo;
  topo.input_dim = 5;
  topo.frame_dims = {6, 7, 8};
  topo.frame_contexts = {{-1, 0, 1}, {-2, 0, 2}, {0}};
  topo.dense_dims = {8, 6};
  topo.num_classes = 4;
  auto model = BasicTdnn<double>::Init(topo.Build(), {}, 17);
  // Zero biases put all-zero frames exactly on a ReLU kink; move off it.
  RandomizeBiases(&model, 0.1, 3);
  std::vector<BasicSample<double>> batch = {{RandomFrames<double>(20, 5, 1), 2},
                                            {RandomFrames<double>(20, 5, 2), 0}};
  for (double dropout : {0.0, 0.3}) {
    const double worst = MaxGradientRelativeError(model, batch, dropout, 99);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("batch gradient is the mean of per-sample gradients") {
  const auto model = BasicTdnn<double>::Init(SmallTopology(3).Build(), {}, 2);
  std::vector<BasicSample<double>> batch;
  for (int i = 0; i < 11; ++i) batch.push_back({RandomFrames<double>(20 + i, 33, 30 + i), i % 3});
  double loss = 0;
  const auto g = model.ComputeGradients(batch, 0.2, 7, &loss);
  auto acc = model.ZeroGradients();
  double loss_acc = 0;
  for (int k = 0; k < 11; ++k)
    loss_acc += model.Backward(batch[k].feats, batch[k].label, 0.2,
                               DeriveSeed(7, StrCat("sample:", k)), &acc);
  acc.Scale(1.0 / 11);
  CHECK(loss == doctest::Approx(loss_acc / 11));
  for (int i = 0; i < model.NumLayers(); ++i) {
    if (!model.spec(i).HasParams()) continue;
    CHECK((g.dW[i] - acc.dW[i]).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((g.db[i] - acc.db[i]).cwiseAbs().maxCoeff() <= 1e-12);
  }
  double loss4 = 0;
  const auto g4 = model.ComputeGradients(batch, 0.2, 7, &loss4, 4);
  CHECK(loss4 == loss);
  for (int i = 0; i < model.NumLayers(); ++i) CHECK(g4.dW[i] == g.dW[i]);
}

TEST_CASE("dropout is off in infer mode") {
  TdnnModel m = TdnnModel::Init(SmallTopology(4).Build(), {}, 3);
  Eigen::MatrixXf x = RandomFrames<float>(30, 33, 1);
  CHECK(m.Forward(x, ForwardMode::kTrain, 0.0, 5).logits == m.Forward(x).logits);
  CHECK(m.Forward(x, ForwardMode::kInfer, 0.5, 5).logits == m.Forward(x).logits);
  CHECK(m.Forward(x, ForwardMode::kTrain, 0.5, 5).logits != m.Forward(x).logits);
}

TEST_CASE("adapt head") {
  TdnnModel base = TdnnModel::Init(SmallTopology(12).Build(), {}, 1);
  TdnnModel a = AdaptHead(base, 5, false, 9);
  CHECK(a.NumClasses() == 5);
  CHECK(a.Depth() == 7);
  for (int i = 0; i + 1 < base.NumLayers(); ++i) {
    CHECK(a.W(i) == base.W(i));
    CHECK(a.b(i) == base.b(i));
  }
  TdnnModel b8 = AdaptHead(base, 5, true, 9);
  CHECK(b8.Depth() == 8);
  const int l8 = b8.DenseLayerIndex(8);
  CHECK(b8.W(l8).rows() == 24);
  CHECK(b8.W(l8).cols() == 24);
  CHECK(AdaptHead(base, 5, true, 9).W(l8) == b8.W(l8));
  CHECK(AdaptHead(base, 5, true, 10).W(l8) != b8.W(l8));
  CHECK(AdaptHead(base, 5, true, 9).W(l8 + 1) == b8.W(l8 + 1));

  TdnnModel full = TdnnModel::Init(TdnnTopology::Standard(20).Build(), {}, 1);
  TdnnModel full8 = AdaptHead(full, 5, true, 2);
  CHECK(full8.W(full8.DenseLayerIndex(8)).rows() == 512);
  CHECK(full8.W(full8.DenseLayerIndex(8)).cols() == 512);
  CHECK_THROWS_AS(AdaptHead(base, 1, false, 1), InvalidArgument);
}

namespace {

// Two classes, separable by the sign of a feature-mean offset.
std::vector<TrainingExample> ToyData(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0, 1);
  std::vector<TrainingExample> data;
  for (int i = 0; i < n; ++i) {
    TrainingExample ex;
    ex.label = i % 2;
    ex.feats.id = StrCat("u", i);
    ex.feats.data.resize(25 + i % 7, 33);
    for (Eigen::Index k = 0; k < ex.feats.data.size(); ++k)
      ex.feats.data.data()[k] = static_cast<float>(g(rng) + (ex.label ? 1.0 : -1.0));
    data.push_back(std::move(ex));
  }
  return data;
}

}  // namespace

TEST_CASE("finetune: frozen first six layers, schedule and loss") {
  TdnnModel base = TdnnModel::Init(SmallTopology(2).Build(), {"a", "b"}, 4);
  FinetuneConfig cfg;
  cfg.batch_size = 16;
  cfg.first_six_lr_multiplier = 0.0;
  cfg.seed = 5;
  const auto data = ToyData(256, 1);
  TrainingLog log;
  TdnnModel tuned = Finetune(base, data, cfg, &log);
  for (int i = 0; i < base.NumLayers(); ++i) {
    const int num = base.LayerNumber(i);
    if (num >= 1 && num <= 6) {
      CHECK(tuned.W(i) == base.W(i));
      CHECK(tuned.b(i) == base.b(i));
    }
  }
  CHECK(tuned.W(base.DenseLayerIndex(7)) != base.W(base.DenseLayerIndex(7)));
  REQUIRE(log.epochs.size() == 3);
  CHECK(log.step_lr.size() == 48);
  CHECK(std::fabs(log.step_lr.back() - 1e-4) <= 1e-6);
  CHECK(log.step_lr.front() == 1e-3);
  for (std::size_t s = 1; s < log.step_lr.size(); ++s) CHECK(log.step_lr[s] < log.step_lr[s - 1]);

  cfg.first_six_lr_multiplier = 1.0;
  TdnnModel free = Finetune(base, data, cfg, &log);
  CHECK(free.W(0) != base.W(0));
  CHECK(log.epochs[1].mean_loss < log.epochs[0].mean_loss);
  CHECK(log.epochs[2].mean_loss < log.epochs[1].mean_loss);

  // Same seed, different thread counts: identical parameters.
  TdnnModel again = Finetune(base, data, cfg, nullptr, 3);
  for (int i = 0; i < base.NumLayers(); ++i) CHECK(again.W(i) == free.W(i));

  cfg.first_six_lr = 0.0;
  TdnnModel abs0 = Finetune(base, data, cfg, nullptr);
  CHECK(abs0.W(0) == base.W(0));
}

TEST_CASE("finetune errors") {
  TdnnModel base = TdnnModel::Init(SmallTopology(2).Build(), {}, 4);
  FinetuneConfig cfg;
  CHECK_THROWS_AS(Finetune(base, {}, cfg, nullptr), InvalidArgument);
  auto data = ToyData(4, 2);
  data[1].label = 5;
  CHECK_THROWS_AS(Finetune(base, data, cfg, nullptr), InvalidArgument);
  data = ToyData(4, 2);
  for (auto &ex : data) ex.feats.data.conservativeResize(10, 33);
  CHECK_THROWS_AS(Finetune(base, data, cfg, nullptr), InvalidArgument);
  data = ToyData(4, 2);
  data[0].feats.data.conservativeResize(10, 33);
  TrainingLog log;
  Finetune(base, data, cfg, &log);
  CHECK(log.skipped_short == 1);
  data = ToyData(4, 2);
  data[0].feats.data(3, 3) = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(Finetune(base, data, cfg, nullptr), NumericalError);

  CHECK_THROWS_AS(FinetuneConfig::FromJson({{"lr_finall", 1e-4}}), InvalidArgument);
  CHECK(FinetuneConfig::FromJson(cfg.ToJson()).ToJson() == cfg.ToJson());
}

TEST_CASE("TDN1 round trip") {
  namespace fs = std::filesystem;
  TdnnModel m = TdnnModel::Init(SmallTopology(5).Build(), {"h", "s", "f", "a", "n"}, 8);
  m.metadata()["note"] = "x";
  const fs::path path = fs::temp_directory_path() / "affect_test_model.tdn";
  SaveTdnn(m, path.string());
  TdnnModel r = LoadTdnn(path.string());
  Eigen::MatrixXf x = RandomFrames<float>(33, 33, 2);
  CHECK(r.Logits(x) == m.Logits(x));
  CHECK(r.class_labels() == m.class_labels());
  CHECK(r.metadata() == m.metadata());
  ByteWriter a, b;
  WriteTdnn(m, &a);
  WriteTdnn(r, &b);
  CHECK(a.bytes() == b.bytes());

  std::string bytes = a.bytes();
  bytes[0] = 'X';
  ByteReader bad(bytes, "model");
  CHECK_THROWS_AS(ReadTdnn(&bad), FormatError);
  bytes = a.bytes();
  bytes.pop_back();
  ByteReader short_reader(bytes, "model");
  CHECK_THROWS_AS(ReadTdnn(&short_reader), FormatError);
}
