/*
 * Copyright 2026 The ensemble-lens Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Python module `_ensemble_lens`. Analyses return the same compact JSON text
// as the service and the CLI; errors raise `Error` whose message is the JSON
// error document.

#include <memory>
#include <optional>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ensemble_lens/analysis.h"
#include "ensemble_lens/bundle.h"
#include "ensemble_lens/compat.h"

namespace py = pybind11;
namespace el = ensemble_lens;
namespace an = ensemble_lens::analysis;

namespace {

class PyBundle {
 public:
  explicit PyBundle(el::EnsembleBundle bundle)
      : bundle_(std::make_shared<const el::EnsembleBundle>(std::move(bundle))),
        pool_(std::make_unique<an::PredictorPool>(bundle_)) {}

  const el::EnsembleBundle& bundle() const { return *bundle_; }
  an::PredictorPool& pool() const { return *pool_; }

 private:
  std::shared_ptr<const el::EnsembleBundle> bundle_;
  std::unique_ptr<an::PredictorPool> pool_;
};

el::compat::PairOptions PairOptions(std::optional<double> threshold, double xi, size_t bins) {
  el::compat::PairOptions options;
  options.sdr_threshold = threshold;
  options.xi = xi;
  options.histogram_bins = bins;
  return options;
}

using Release = py::call_guard<py::gil_scoped_release>;

}  // namespace

PYBIND11_MODULE(_ensemble_lens, m) {
  m.doc() = "Diagnostics for weighted model ensembles";
  // Owned by the module attribute for the interpreter's lifetime.
  static PyObject* error_type =
      py::exception<el::Error>(m, "Error", PyExc_RuntimeError).release().ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const el::Error& e) {
      PyErr_SetString(error_type, an::Serialize(an::ErrorDocument(e)).c_str());
    }
  });

  py::class_<PyBundle>(m, "Bundle")
      .def_property_readonly("task",
                             [](const PyBundle& b) {
                               return std::string(el::TaskKindName(b.bundle().task));
                             })
      .def_property_readonly("num_rows", [](const PyBundle& b) { return b.bundle().num_rows(); })
      .def_property_readonly("model_ids", [](const PyBundle& b) { return b.bundle().ModelIds(); })
      .def("summary",
           [](const PyBundle& b, const std::string& id) {
             return an::Serialize(an::SummaryDocument(b.bundle(), id));
           },
           py::arg("bundle_id") = "local", Release())
      .def("metrics",
           [](const PyBundle& b) { return an::Serialize(an::MetricsDocument(b.bundle())); },
           Release())
      .def("compare",
           [](const PyBundle& b) { return an::Serialize(an::CompareDocument(b.bundle())); },
           Release())
      .def("correlation",
           [](const PyBundle& b, std::optional<std::string> method) {
             std::optional<std::string_view> view;
             if (method) view = *method;
             return an::Serialize(an::CorrelationDocument(b.bundle(), view));
           },
           py::arg("method") = py::none(), Release())
      .def("compat",
           [](const PyBundle& b, const std::string& metric, std::optional<double> threshold,
              double xi, size_t bins) {
             return an::Serialize(
                 an::CompatDocument(b.bundle(), metric, PairOptions(threshold, xi, bins)));
           },
           py::arg("metric"), py::arg("threshold") = py::none(),
           py::arg("xi") = el::compat::kDefaultXi, py::arg("bins") = 20, Release())
      .def("pair",
           [](const PyBundle& b, const std::string& a, const std::string& c,
              std::optional<double> threshold, double xi, size_t bins) {
             return an::Serialize(
                 an::PairDocument(b.bundle(), a, c, PairOptions(threshold, xi, bins)));
           },
           py::arg("a"), py::arg("b"), py::arg("threshold") = py::none(),
           py::arg("xi") = el::compat::kDefaultXi, py::arg("bins") = 20, Release())
      .def("evaluate",
           [](const PyBundle& b, const std::map<std::string, double>& weights,
              const PyBundle* holdout) {
             return an::Serialize(an::EvaluateDocument(
                 b.bundle(), weights, holdout ? &holdout->bundle() : nullptr));
           },
           py::arg("weights"), py::arg("holdout") = nullptr, Release())
      .def("suggest",
           [](const PyBundle& b, const std::string& objective,
              std::optional<std::string> direction, size_t budget, uint64_t seed) {
             an::SuggestRequest request;
             request.objective = objective;
             request.direction = direction;
             request.budget = budget;
             request.seed = seed;
             return an::Serialize(an::SuggestDocument(b.bundle(), request));
           },
           py::arg("objective"), py::arg("direction") = py::none(), py::arg("budget") = 500,
           py::arg("seed") = 0, Release())
      .def("importance",
           [](const PyBundle& b, const std::string& model, size_t repeats, uint64_t seed,
              std::optional<std::string> metric, bool normalize) {
             el::xai::ImportanceOptions options;
             options.repeats = repeats;
             options.seed = seed;
             options.metric = metric;
             options.normalize = normalize;
             return an::Serialize(an::ImportanceDocument(b.pool(), b.bundle(), model, options));
           },
           py::arg("model"), py::arg("repeats") = 5, py::arg("seed") = 0,
           py::arg("metric") = py::none(), py::arg("normalize") = false, Release())
      .def("pdp",
           [](const PyBundle& b, const std::string& model, const std::string& feature,
              size_t grid, std::optional<size_t> row_cap) {
             el::xai::PdpOptions options;
             options.grid_size = grid;
             options.row_cap = row_cap;
             return an::Serialize(an::PdpDocument(b.pool(), b.bundle(), model, feature, options));
           },
           py::arg("model"), py::arg("feature"), py::arg("grid") = 20,
           py::arg("row_cap") = py::none(), Release())
      .def("document",
           [](const PyBundle& b) { return an::Serialize(el::BundleToDocument(b.bundle())); })
      .def("save",
           [](const PyBundle& b, const std::string& dir) { el::SaveBundleDirectory(b.bundle(), dir); },
           py::arg("directory"), Release());

  m.def("load_bundle",
        [](const std::string& path) { return PyBundle(el::LoadBundle(path)); },
        py::arg("path"));
  m.def("parse_bundle",
        [](const std::string& text, const std::string& base_dir) {
          const auto document = nlohmann::json::parse(text, nullptr, false);
          if (document.is_discarded()) {
            throw el::Error(el::ErrorCode::kSchemaMismatch, "bundle document is not JSON");
          }
          return PyBundle(el::ParseBundleDocument(document, base_dir));
        },
        py::arg("text"), py::arg("base_dir") = "");

  m.def("target_std", [](const std::vector<double>& y) { return el::TargetStd(y); });
  m.def("msd", [](const std::vector<double>& a, const std::vector<double>& b) {
    return el::compat::Msd(a, b);
  });
  m.def("rmsd", [](const std::vector<double>& a, const std::vector<double>& b) {
    return el::compat::Rmsd(a, b);
  });
  m.def("sdr",
        [](const std::vector<double>& a, const std::vector<double>& b, double threshold) {
          return el::compat::Sdr(a, b, threshold);
        },
        py::arg("a"), py::arg("b"), py::arg("threshold"));
  m.def("ar",
        [](const std::vector<double>& a, const std::vector<double>& b, double target_std,
           double xi) { return el::compat::Ar(a, b, target_std, xi); },
        py::arg("a"), py::arg("b"), py::arg("target_std"), py::arg("xi") = el::compat::kDefaultXi);
  m.def("crmse", [](const std::vector<double>& a, const std::vector<double>& b,
                    const std::vector<double>& y) { return el::compat::Crmse(a, b, y); });
  m.def("uniformity", [](const std::vector<int>& a, const std::vector<int>& b) {
    return el::compat::Uniformity(a, b);
  });
  m.def("incompatibility", [](const std::vector<int>& a, const std::vector<int>& b) {
    return el::compat::Incompatibility(a, b);
  });
  m.def("acs", [](const std::vector<int>& a, const std::vector<int>& b,
                  const std::vector<int>& y) { return el::compat::AverageCollectiveScore(a, b, y); });
}
