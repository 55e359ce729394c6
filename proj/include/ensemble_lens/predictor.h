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

// Predictors map feature rows to predictions. Built-in predictors (linear,
// logistic, decision tree) are evaluated in-process; external predictors are
// reached over a line-delimited JSON protocol, on a subprocess's stdio or
// over HTTP:
//
//   {"op":"describe","id":0}
//     -> {"id":0,"task":"binary","classes":["0","1"],"batch_max":500,
//         "concurrent":false}
//   {"op":"predict","id":7,"features":[[1.5,"red"],...],"columns":["x","c"]}
//     -> {"id":7,"predictions":[...]} or {"id":7,"probabilities":[[...],...]}
//     -> {"id":7,"error":{"code":"...","message":"..."}}
//
// HTTP endpoints serve GET /describe and POST /predict with the same bodies.

#ifndef ENSEMBLE_LENS_PREDICTOR_H_
#define ENSEMBLE_LENS_PREDICTOR_H_

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ensemble_lens/bundle.h"
#include "json.hpp"

namespace ensemble_lens::predictor {

inline constexpr size_t kDefaultBatchMax = 10000;

struct Capabilities {
  size_t batch_max = kDefaultBatchMax;
  bool concurrent = true;
};

class Predictor {
 public:
  virtual ~Predictor() = default;
  Predictor(const Predictor&) = delete;
  Predictor& operator=(const Predictor&) = delete;

  TaskKind task() const { return task_; }
  const std::vector<std::string>& class_labels() const { return class_labels_; }
  const Capabilities& capabilities() const { return capabilities_; }

  // Output row k corresponds to input row k. Requests larger than batch_max
  // are split into chunks; predictors that are not concurrent see one request
  // at a time. Throws Error(kProtocolViolation) when a backend returns the
  // wrong number of rows or non-stochastic probabilities.
  PredictionSet Predict(const FeatureTable& rows) const;

 protected:
  Predictor(TaskKind task, std::vector<std::string> class_labels,
            Capabilities capabilities)
      : task_(task),
        class_labels_(std::move(class_labels)),
        capabilities_(capabilities) {}

  // Called with at most batch_max rows.
  virtual PredictionSet PredictBatch(const FeatureTable& rows) const = 0;

  TaskKind task_;
  std::vector<std::string> class_labels_;
  Capabilities capabilities_;

 private:
  mutable std::mutex gate_;
};

// Builds a built-in predictor from its JSON spec:
//
//   {"kind":"linear","features":["x1","x2"],"intercept":1,
//    "coefficients":[2, {"red":0.5,"blue":-1}]}
//   {"kind":"logistic","features":[...],"classes":["no","yes"],
//    "intercept":0,"coefficients":[...]}
//   {"kind":"logistic","features":[...],"classes":["a","b","c"],
//    "intercept":[...],"coefficients":[[...],[...],[...]]}
//   {"kind":"tree","features":[...],"task":"regression",
//    "nodes":[{"feature":"x1","threshold":0.5,"left":1,"right":2},
//             {"value":3},{"value":7}]}
//
// A categorical coefficient is an object mapping level to contribution
// (missing levels contribute 0). Tree splits route to "left" when
// x <= threshold or, for categorical splits, when the value is in "levels";
// classification leaves carry "probabilities" in class order. Node 0 is the
// root. Throws Error(kMalformedSpec, kCoefficientArityMismatch).
std::shared_ptr<const Predictor> LoadBuiltin(const nlohmann::json& spec);

struct ExternalOptions {
  std::chrono::milliseconds handshake_timeout{5000};
  std::chrono::milliseconds request_timeout{60000};
};

// Connects to "http://host:port[/prefix]" or runs any other string as a shell
// command speaking the protocol on stdio, then performs the describe
// handshake. Throws Error(kHandshakeTimeout) when no valid reply arrives in
// time and Error(kProtocolViolation) for a malformed reply.
std::shared_ptr<const Predictor> ConnectExternal(
    const std::string& endpoint, const ExternalOptions& options = {});

// Resolves a bundle's predictor reference:
//   {"kind":"builtin","spec":{...}}
//   {"kind":"external","command":"..."} or {"kind":"external","url":"..."}
// with optional "timeout_ms".
std::shared_ptr<const Predictor> FromReference(
    const nlohmann::ordered_json& reference);

}  // namespace ensemble_lens::predictor

#endif  // ENSEMBLE_LENS_PREDICTOR_H_
