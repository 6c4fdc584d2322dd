// python/_core.cc

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

// Low-level bindings. Dict-like values cross the boundary as JSON strings;
// the affectkit package wraps them.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "affect/audio.h"
#include "affect/backend.h"
#include "affect/corpus.h"
#include "affect/embeddings.h"
#include "affect/features.h"
#include "affect/metrics.h"
#include "affect/pipeline.h"
#include "affect/tdnn.h"

namespace py = pybind11;
using namespace affect;

namespace {

using RowMatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

FeatureConfig ParseFeatureConfig(const std::string &json_text) {
  return FeatureConfigFromJson(json_text.empty() ? nlohmann::json::object() : nlohmann::json::parse(json_text));
}

FrameMatrix Extract(const std::vector<float> &samples, double sample_rate, const std::string &config,
                    std::uint64_t dither_seed) {
  AudioBuffer a;
  a.samples = samples;
  a.sample_rate = sample_rate;
  return ExtractFeatures(a, ParseFeatureConfig(config), dither_seed).data;
}

py::tuple ReadWavPy(const std::string &path) {
  const AudioBuffer a = ReadWav(path);
  py::array_t<float> out(a.samples.size());
  std::copy(a.samples.begin(), a.samples.end(), out.mutable_data());
  return py::make_tuple(out, a.sample_rate);
}

Modality ParseModality(const std::string &m) {
  if (m == "speech") return Modality::kSpeech;
  if (m == "text") return Modality::kText;
  if (m == "fused") return Modality::kFused;
  Fail("modality must be speech, text or fused, got '", m, "'");
}

EmbeddingSet ToSet(const std::vector<std::string> &ids, const RowMatF &m, Modality modality) {
  if (static_cast<Eigen::Index>(ids.size()) != m.rows())
    Fail("got ", ids.size(), " ids for ", m.rows(), " rows");
  EmbeddingSet s(modality);
  for (std::size_t i = 0; i < ids.size(); ++i) s.Add({ids[i], modality, m.row(i).transpose()});
  return s;
}

py::tuple FromSet(const EmbeddingSet &s) {
  std::vector<std::string> ids;
  RowMatF m(static_cast<Eigen::Index>(s.size()), s.dim());
  for (std::size_t i = 0; i < s.size(); ++i) {
    ids.push_back(s.records()[i].utt_id);
    m.row(i) = s.records()[i].vector.transpose();
  }
  return py::make_tuple(ids, m);
}

std::vector<Vec> Rows(const RowMatD &m) {
  std::vector<Vec> out;
  out.reserve(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(m.row(i).transpose());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "affectkit native core";

  // Translators run newest first, so the base class goes first.
  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());

  // features
  m.def("read_wav", &ReadWavPy, py::arg("path"), "Returns (samples float32, sample_rate).");
  m.def("extract_features", &Extract, py::arg("samples"), py::arg("sample_rate"), py::arg("config") = "",
        py::arg("dither_seed") = 0, "MFCC + pitch features, frames as rows.");
  m.def("default_feature_config", [] { return FeatureConfigToJson(FeatureConfig{}).dump(); });

  // labels
  m.def("canonical_names", &CanonicalNames);
  m.def("canonical_label", [](const std::string &corpus, const std::string &raw) {
    return std::string(CanonicalName(CanonicalizeLabel(ParseCorpus(corpus), raw)));
  });

  // tdnn
  py::class_<TdnnModel>(m, "Tdnn")
      .def_static("load", &LoadTdnn, py::arg("path"))
      .def("save", [](const TdnnModel &t, const std::string &p) { SaveTdnn(t, p); })
      .def_property_readonly("input_dim", &TdnnModel::InputDim)
      .def_property_readonly("num_classes", &TdnnModel::NumClasses)
      .def_property_readonly("receptive_field", &TdnnModel::ReceptiveField)
      .def_property_readonly("class_labels", &TdnnModel::class_labels)
      .def(
          "embedding",
          [](const TdnnModel &t, const FrameMatrix &feats, int layer) {
            return VecF(t.Embedding(TdnnModel::Matrix(feats), layer));
          },
          py::arg("features"), py::arg("layer") = 6)
      .def("logits", [](const TdnnModel &t, const FrameMatrix &feats) { return VecF(t.Logits(TdnnModel::Matrix(feats))); });

  // embeddings
  m.def(
      "read_emb1",
      [](const std::string &path) { return FromSet(LoadEmb1(path)); }, py::arg("path"),
      "Returns (ids, float32 matrix).");
  m.def(
      "write_emb1",
      [](const std::string &path, const std::vector<std::string> &ids, const RowMatF &mat,
         const std::string &modality) { SaveEmb1(ToSet(ids, mat, ParseModality(modality)), path); },
      py::arg("path"), py::arg("ids"), py::arg("matrix"), py::arg("modality") = "speech");
  m.def(
      "fuse",
      [](const std::vector<std::string> &speech_ids, const RowMatF &speech,
         const std::vector<std::string> &text_ids, const RowMatF &text,
         const std::map<std::string, std::string> &surrogates) {
        const EmbeddingSet s = ToSet(speech_ids, speech, Modality::kSpeech);
        const EmbeddingSet t = ToSet(text_ids, text, Modality::kText);
        return FromSet(FuseSets(s, &t, surrogates, false));
      },
      py::arg("speech_ids"), py::arg("speech"), py::arg("text_ids"), py::arg("text"),
      py::arg("surrogates") = std::map<std::string, std::string>{});

  // backend
  py::class_<PldaBackend>(m, "Backend")
      .def_static("load", &LoadPld1, py::arg("path"))
      .def("save", [](const PldaBackend &b, const std::string &p) { SavePld1(b, p); })
      .def_readonly("class_labels", &PldaBackend::class_labels)
      .def_property_readonly("input_dim", [](const PldaBackend &b) { return b.lda.InputDim(); })
      .def_property_readonly("output_dim", [](const PldaBackend &b) { return b.lda.OutputDim(); })
      .def_property_readonly("metadata", [](const PldaBackend &b) { return b.metadata.dump(); })
      .def("project", &PldaBackend::Project, py::arg("x"))
      .def("score", &PldaBackend::Score, py::arg("x1"), py::arg("x2"))
      .def(
          "identify",
          [](const PldaBackend &b, const Vec &probe, const std::vector<RowMatD> &enrollments) {
            std::vector<std::vector<Vec>> proj;
            for (const RowMatD &e : enrollments) {
              std::vector<Vec> rows;
              for (const Vec &x : Rows(e)) rows.push_back(b.Project(x));
              proj.push_back(std::move(rows));
            }
            const Identification id = Identify(b.plda, b.Project(probe), proj);
            return py::make_tuple(id.best, id.scores);
          },
          py::arg("probe"), py::arg("enrollments"), "Returns (best index, scores per class).");
  m.def(
      "train_backend",
      [](const RowMatD &rows, const std::vector<int> &labels, const std::vector<std::string> &classes,
         const std::string &config) {
        const BackendConfig cfg = config.empty() ? BackendConfig{} : BackendConfig::FromJson(nlohmann::json::parse(config));
        py::gil_scoped_release release;
        return FitBackend(Rows(rows), labels, classes, cfg);
      },
      py::arg("rows"), py::arg("labels"), py::arg("classes"), py::arg("config") = "");

  // metrics
  m.def(
      "compute_eer",
      [](const std::vector<double> &target, const std::vector<double> &nontarget) {
        const EerResult r = ComputeEer(target, nontarget);
        return py::make_tuple(r.eer, r.threshold);
      },
      py::arg("target"), py::arg("nontarget"), "Returns (eer, threshold).");
  m.def(
      "classification_report",
      [](const std::vector<std::string> &preds, const std::vector<std::string> &golds,
         const std::vector<std::string> &classes) {
        EvalReport rep;
        rep.has_classification = true;
        rep.cls = ComputeClassificationMetrics(preds, golds, classes);
        return rep.ToJson().dump();
      },
      py::arg("preds"), py::arg("golds"), py::arg("classes"));
}
