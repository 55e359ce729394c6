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

#include "ensemble_lens/analysis.h"

#include "ensemble_lens/metrics.h"
#include "ensemble_lens/weights.h"

namespace ensemble_lens::analysis {

std::string Serialize(const ordered_json& document) {
  return document.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

std::shared_ptr<const predictor::Predictor> PredictorPool::Member(size_t j) {
  const ModelEntry& model = bundle_->models[j];
  const auto it = cache_.find(model.id);
  if (it != cache_.end()) return it->second;
  if (!model.predictor) {
    throw PredictorUnavailableError(
        "model \"" + model.id + "\" has no predictor", {model.id});
  }
  auto resolved = predictor::FromReference(*model.predictor);
  cache_.emplace(model.id, resolved);
  return resolved;
}

std::shared_ptr<const predictor::Predictor> PredictorPool::Get(
    const std::string& model_id) {
  std::lock_guard lock(mutex_);
  if (model_id != metrics::kEnsembleId) return Member(bundle_->ModelIndex(model_id));

  const auto it = cache_.find(model_id);
  if (it != cache_.end()) return it->second;
  const std::vector<double> weights = bundle_->Weights();
  std::vector<std::string> missing;
  for (size_t j = 0; j < bundle_->num_models(); ++j) {
    if (weights[j] > 0.0 && !bundle_->models[j].predictor) {
      missing.push_back(bundle_->models[j].id);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw PredictorUnavailableError(
        "the ensemble needs predictors for every weighted model; missing: " + list,
        missing);
  }
  std::vector<std::shared_ptr<const predictor::Predictor>> members(
      bundle_->num_models());
  for (size_t j = 0; j < bundle_->num_models(); ++j) {
    if (weights[j] == 0.0) continue;
    members[j] = Member(j);
    if (IsClassification(bundle_->task) != IsClassification(members[j]->task())) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "predictor of \"" + bundle_->models[j].id +
                      "\" does not fit the bundle task");
    }
    if (members[j]->class_labels() != bundle_->class_labels) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "predictor of \"" + bundle_->models[j].id +
                      "\" does not declare the bundle's class labels in order");
    }
  }
  auto ensemble = weights::MakeEnsemblePredictor(
      std::move(members), weights, bundle_->task, bundle_->class_labels);
  cache_.emplace(model_id, ensemble);
  return ensemble;
}

ordered_json SummaryDocument(const EnsembleBundle& bundle,
                             const std::string& bundle_id) {
  ordered_json out;
  out["bundle_id"] = bundle_id;
  out["task"] = std::string(TaskKindName(bundle.task));
  out["n"] = bundle.num_rows();
  out["m"] = bundle.num_models();
  out["target_column"] = bundle.dataset.target_column;
  if (IsClassification(bundle.task)) {
    out["class_labels"] = bundle.class_labels;
    if (bundle.task == TaskKind::kBinary) {
      out["positive_label"] = bundle.LabelName(bundle.positive_code);
    }
  }
  ordered_json models = ordered_json::array();
  bool any_predictor = false;
  bool ensemble_predictor = true;
  for (const auto& model : bundle.models) {
    ordered_json item;
    item["id"] = model.id;
    item["name"] = model.display_name;
    item["weight"] = model.weight;
    if (IsClassification(bundle.task)) {
      item["has_probabilities"] = model.probabilities.has_value();
    }
    item["has_predictor"] = model.predictor.has_value();
    any_predictor = any_predictor || model.predictor.has_value();
    if (model.weight > 0.0 && !model.predictor) ensemble_predictor = false;
    models.push_back(std::move(item));
  }
  out["models"] = std::move(models);
  ordered_json features = ordered_json::array();
  for (const auto& column : bundle.dataset.features.columns) {
    ordered_json item;
    item["name"] = column.meta.name;
    item["kind"] = column.meta.kind == FeatureKind::kNumeric ? "numeric" : "categorical";
    if (column.meta.kind == FeatureKind::kCategorical) item["levels"] = column.meta.levels;
    features.push_back(std::move(item));
  }
  out["features"] = std::move(features);
  const bool weights_lab =
      bundle.task == TaskKind::kRegression || bundle.HasAllProbabilities();
  ordered_json analyses;
  analyses["metrics"] = true;
  analyses["compare"] = true;
  analyses["correlation"] = true;
  analyses["compat"] = true;
  analyses["weights"] = weights_lab;
  analyses["xai"] = any_predictor;
  analyses["ensemble_xai"] = ensemble_predictor;
  out["analyses"] = std::move(analyses);
  out["warnings"] = ToJson(ValidateBundle(bundle))["warnings"];
  return out;
}

ordered_json MetricsDocument(const EnsembleBundle& bundle) {
  return metrics::ToJson(metrics::MetricsTable(bundle));
}

ordered_json CompareDocument(const EnsembleBundle& bundle) {
  return metrics::ToJson(metrics::PredictionCompareMatrix(bundle), bundle);
}

ordered_json CorrelationDocument(const EnsembleBundle& bundle,
                                 std::optional<std::string_view> method) {
  const metrics::CorrelationMethod parsed =
      method ? metrics::ParseCorrelationMethod(*method)
             : (IsClassification(bundle.task) ? metrics::CorrelationMethod::kKappa
                                              : metrics::CorrelationMethod::kPearson);
  return metrics::ToJson(metrics::PredictionCorrelationMatrix(bundle, parsed));
}

ordered_json CompatDocument(const EnsembleBundle& bundle, std::string_view metric,
                            const compat::PairOptions& options) {
  return metrics::ToJson(
      compat::CompatMatrix(bundle, compat::ParsePairMetric(metric), options));
}

ordered_json PairDocument(const EnsembleBundle& bundle, std::string_view a,
                          std::string_view b, const compat::PairOptions& options) {
  return compat::PairDetail(bundle, a, b, options);
}

ordered_json EvaluateDocument(const EnsembleBundle& bundle,
                              const std::map<std::string, double>& weights,
                              const EnsembleBundle* holdout) {
  const std::vector<double> vector = weights::WeightsFromMap(bundle, weights);
  return weights::ToJson(weights::EvaluateWeights(bundle, vector, holdout));
}

ordered_json SuggestDocument(const EnsembleBundle& bundle,
                             const SuggestRequest& request) {
  std::optional<std::string_view> direction;
  if (request.direction) direction = *request.direction;
  const weights::Objective objective =
      weights::ParseObjective(bundle.task, request.objective, direction);
  return weights::ToJson(
      weights::SuggestWeights(bundle, objective, request.budget, request.seed));
}

ordered_json ImportanceDocument(PredictorPool& predictors,
                                const EnsembleBundle& bundle,
                                const std::string& model_id,
                                const xai::ImportanceOptions& options,
                                const xai::Progress& progress) {
  const auto model = predictors.Get(model_id);
  return xai::ToJson(
      xai::PermutationImportance(*model, bundle, model_id, options, progress));
}

ordered_json PdpDocument(PredictorPool& predictors, const EnsembleBundle& bundle,
                         const std::string& model_id, const std::string& feature,
                         const xai::PdpOptions& options,
                         const xai::Progress& progress) {
  if (!bundle.dataset.features.FindColumn(feature)) {
    throw Error(ErrorCode::kUnknownFeature,
                "dataset has no feature \"" + feature + "\"");
  }
  const auto model = predictors.Get(model_id);
  return xai::ToJson(
      xai::PartialDependence(*model, bundle, model_id, feature, options, progress));
}

ordered_json ErrorDocument(const std::exception& error) {
  ordered_json body;
  ordered_json detail;
  if (const auto* e = dynamic_cast<const Error*>(&error)) {
    detail["code"] = std::string(e->code_name());
  } else {
    detail["code"] = "Internal";
  }
  detail["message"] = error.what();
  body["error"] = std::move(detail);
  if (const auto* e = dynamic_cast<const ValidationError*>(&error)) {
    body["validation"] = ToJson(e->report());
  }
  if (const auto* e = dynamic_cast<const PredictorUnavailableError*>(&error)) {
    body["models"] = e->models();
  }
  return body;
}

int HttpStatus(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownModel:
      return 404;
    case ErrorCode::kPredictorUnavailable:
    case ErrorCode::kHandshakeTimeout:
      return 409;
    case ErrorCode::kMethodTaskMismatch:
    case ErrorCode::kMetricTaskMismatch:
    case ErrorCode::kNonRegressionTask:
    case ErrorCode::kNonClassificationTask:
    case ErrorCode::kNonBinaryTask:
    case ErrorCode::kZeroWeightSum:
    case ErrorCode::kMissingProbabilities:
    case ErrorCode::kBundleMismatch:
    case ErrorCode::kInvalidObjective:
    case ErrorCode::kBudgetTooSmall:
    case ErrorCode::kUnknownFeature:
    case ErrorCode::kNegativeThreshold:
    case ErrorCode::kXiOutOfRange:
    case ErrorCode::kEmptyColumn:
      return 422;
    case ErrorCode::kProtocolViolation:
    case ErrorCode::kRemoteError:
      return 502;
    case ErrorCode::kCancelled:
      return 409;
    default:
      return 400;
  }
}

int ExitCode(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMethodTaskMismatch:
    case ErrorCode::kMetricTaskMismatch:
    case ErrorCode::kNonRegressionTask:
    case ErrorCode::kNonClassificationTask:
    case ErrorCode::kNonBinaryTask:
      return 3;
    case ErrorCode::kPredictorUnavailable:
    case ErrorCode::kHandshakeTimeout:
    case ErrorCode::kProtocolViolation:
    case ErrorCode::kRemoteError:
      return 4;
    default:
      return 2;
  }
}

}  // namespace ensemble_lens::analysis
