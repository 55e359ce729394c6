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

// JSON documents for every analysis. The HTTP service, the CLI and the Python
// module all render through these functions and Serialize, so the same inputs
// give the same bytes everywhere.

#ifndef ENSEMBLE_LENS_ANALYSIS_H_
#define ENSEMBLE_LENS_ANALYSIS_H_

#include <cstdint>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ensemble_lens/bundle.h"
#include "ensemble_lens/compat.h"
#include "ensemble_lens/predictor.h"
#include "ensemble_lens/xai.h"
#include "json.hpp"

namespace ensemble_lens::analysis {

using nlohmann::ordered_json;

// Compact JSON; non-finite numbers become null.
std::string Serialize(const ordered_json& document);

// Raised when an explanation needs predictors that some models lack.
class PredictorUnavailableError : public Error {
 public:
  PredictorUnavailableError(const std::string& message,
                            std::vector<std::string> models)
      : Error(ErrorCode::kPredictorUnavailable, message),
        models_(std::move(models)) {}

  const std::vector<std::string>& models() const { return models_; }

 private:
  std::vector<std::string> models_;
};

// Lazily resolved, shared predictors of one bundle. "ensemble" is the
// weighted composite of every positively weighted model under the manifest
// weights. Thread-safe.
class PredictorPool {
 public:
  explicit PredictorPool(std::shared_ptr<const EnsembleBundle> bundle)
      : bundle_(std::move(bundle)) {}

  // Throws PredictorUnavailableError and Error(kUnknownModel).
  std::shared_ptr<const predictor::Predictor> Get(const std::string& model_id);

 private:
  std::shared_ptr<const predictor::Predictor> Member(size_t j);

  std::shared_ptr<const EnsembleBundle> bundle_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const predictor::Predictor>> cache_;
};

// Task, sizes, models, features and which analyses the bundle supports.
ordered_json SummaryDocument(const EnsembleBundle& bundle,
                             const std::string& bundle_id);
ordered_json MetricsDocument(const EnsembleBundle& bundle);
ordered_json CompareDocument(const EnsembleBundle& bundle);
// Defaults to pearson for regression and kappa for classification.
ordered_json CorrelationDocument(const EnsembleBundle& bundle,
                                 std::optional<std::string_view> method);
ordered_json CompatDocument(const EnsembleBundle& bundle,
                            std::string_view metric,
                            const compat::PairOptions& options = {});
ordered_json PairDocument(const EnsembleBundle& bundle, std::string_view a,
                          std::string_view b,
                          const compat::PairOptions& options = {});
ordered_json EvaluateDocument(const EnsembleBundle& bundle,
                              const std::map<std::string, double>& weights,
                              const EnsembleBundle* holdout = nullptr);

struct SuggestRequest {
  std::string objective;
  std::optional<std::string> direction;
  size_t budget = 500;
  uint64_t seed = 0;
};
ordered_json SuggestDocument(const EnsembleBundle& bundle,
                             const SuggestRequest& request);

ordered_json ImportanceDocument(PredictorPool& predictors,
                                const EnsembleBundle& bundle,
                                const std::string& model_id,
                                const xai::ImportanceOptions& options,
                                const xai::Progress& progress = {});
ordered_json PdpDocument(PredictorPool& predictors,
                         const EnsembleBundle& bundle,
                         const std::string& model_id,
                         const std::string& feature,
                         const xai::PdpOptions& options,
                         const xai::Progress& progress = {});

// {"error":{"code","message"}} plus "validation" for ValidationError and
// "models" for PredictorUnavailableError.
ordered_json ErrorDocument(const std::exception& error);

// HTTP status for an analysis failure: 400 input, 404 unknown model,
// 409 predictor unavailable, 422 task or parameter mismatch, 502 for a
// misbehaving external predictor.
int HttpStatus(ErrorCode code);

// CLI exit status: 2 input or validation, 3 task mismatch, 4 predictor
// unavailable.
int ExitCode(ErrorCode code);

}  // namespace ensemble_lens::analysis

#endif  // ENSEMBLE_LENS_ANALYSIS_H_
