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

// Per-model evaluation metrics, the prediction correlation matrix and the
// prediction compare matrix.

#ifndef ENSEMBLE_LENS_METRICS_H_
#define ENSEMBLE_LENS_METRICS_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ensemble_lens/bundle.h"
#include "json.hpp"

namespace ensemble_lens::metrics {

inline constexpr std::string_view kEnsembleId = "ensemble";

struct Warning {
  std::string code;
  std::string message;

  bool operator==(const Warning&) const = default;
};

// A metric value; nullopt is the "undefined" marker (serialized as null).
struct NamedValue {
  std::string name;
  std::optional<double> value;

  bool operator==(const NamedValue&) const = default;
};

struct MetricReport {
  std::string model_id;
  std::vector<NamedValue> metrics;
  std::vector<Warning> warnings;

  bool Has(std::string_view name) const;
  // nullopt when the metric is absent or undefined.
  std::optional<double> Get(std::string_view name) const;

  bool operator==(const MetricReport&) const = default;
};

// MSE, RMSE, MAE, MAPE and R2. MAPE is a fraction; it is undefined (with a
// ZeroTargetForMAPE warning) when any target is 0. R2 is undefined (with a
// DegenerateR2 warning) when the target has zero variance.
// Throws Error(kLengthMismatch, kEmptyTarget).
MetricReport RegressionMetrics(std::span<const double> predictions,
                               std::span<const double> target);

// accuracy, precision, recall and f1 over label codes in [0, num_classes).
// Binary metrics score `positive_code`; multiclass metrics are macro averages
// over the classes that occur in the target or the predictions. A zero
// denominator yields 0 and a ZeroDivision warning.
// Throws Error(kLengthMismatch, kEmptyTarget, kUnknownLabel).
MetricReport ClassificationMetrics(std::span<const int> predictions,
                                   std::span<const int> target, TaskKind task,
                                   size_t num_classes, int positive_code);

// Metrics of a prediction set against the bundle's target.
MetricReport EvaluatePredictions(const EnsembleBundle& bundle,
                                 const PredictionSet& predictions,
                                 std::string model_id);

// The ensemble report first (stored prediction, else recomposed from the
// manifest weights), then one report per model in manifest order.
std::vector<MetricReport> MetricsTable(const EnsembleBundle& bundle);

// Square matrix over models. NaN cells are undefined (serialized as null).
struct PairMatrix {
  std::string metric;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> values;
  bool symmetric = false;
};

enum class CorrelationMethod { kPearson, kSpearman, kKappa };

// Throws Error(kInvalidArgument) for an unknown name.
CorrelationMethod ParseCorrelationMethod(std::string_view name);

double Pearson(std::span<const double> a, std::span<const double> b);
double Spearman(std::span<const double> a, std::span<const double> b);
double CohenKappa(std::span<const int> a, std::span<const int> b,
                  size_t num_classes);

// Regression takes pearson/spearman, classification kappa; anything else
// throws Error(kMethodTaskMismatch).
PairMatrix PredictionCorrelationMatrix(const EnsembleBundle& bundle,
                                       CorrelationMethod method);

struct CompareCell {
  bool correct = false;
  int predicted = -1;
};

// Per-observation residuals of every model.
struct CompareMatrix {
  TaskKind task = TaskKind::kRegression;
  std::vector<std::string> ids;
  double target_std = 0.0;
  // Regression: prediction - target, and the same divided by SD(y).
  std::vector<std::vector<double>> raw;
  std::vector<std::vector<double>> scaled;
  // Classification.
  std::vector<std::vector<CompareCell>> cells;
};

CompareMatrix PredictionCompareMatrix(const EnsembleBundle& bundle);

nlohmann::ordered_json ToJson(const MetricReport& report);
nlohmann::ordered_json ToJson(const std::vector<MetricReport>& table);
nlohmann::ordered_json ToJson(const PairMatrix& matrix);
nlohmann::ordered_json ToJson(const CompareMatrix& matrix,
                              const EnsembleBundle& bundle);

}  // namespace ensemble_lens::metrics

#endif  // ENSEMBLE_LENS_METRICS_H_
