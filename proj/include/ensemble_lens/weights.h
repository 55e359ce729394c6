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

// Weighted-ensemble recomposition, what-if evaluation of alternative weights
// and a coordinate-ascent weight search.
//
// Weight vectors are aligned with the bundle's model order. Regression
// ensembles average predictions; classification ensembles average
// probability rows and take the argmax (ties to the lowest class index).

#ifndef ENSEMBLE_LENS_WEIGHTS_H_
#define ENSEMBLE_LENS_WEIGHTS_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ensemble_lens/bundle.h"
#include "ensemble_lens/metrics.h"
#include "ensemble_lens/predictor.h"
#include "json.hpp"

namespace ensemble_lens::weights {

// Proportional rescale to unit sum. Throws Error(kZeroWeightSum) when the sum
// is not positive and Error(kInvalidArgument) for negative or non-finite
// entries.
std::vector<double> NormalizeWeights(std::span<const double> weights);

// Weight vector from an id -> weight map that must cover exactly the bundle's
// model ids. Throws Error(kBundleMismatch).
std::vector<double> WeightsFromMap(const EnsembleBundle& bundle,
                                   const std::map<std::string, double>& weights);

// Parses "m1=0.5,m2=0.5". Throws Error(kInvalidArgument).
std::map<std::string, double> ParseWeightAssignments(std::string_view text);

// Throws Error(kMissingProbabilities) naming every weighted model without
// probabilities, and Error(kZeroWeightSum).
PredictionSet EnsemblePredict(const EnsembleBundle& bundle,
                              std::span<const double> weights);

struct MetricDelta {
  std::string name;
  // nullopt when either side is undefined.
  std::optional<double> value;
};

struct WhatIfSide {
  metrics::MetricReport candidate;
  metrics::MetricReport baseline;
  std::vector<MetricDelta> delta;
};

struct WhatIfReport {
  std::vector<std::string> ids;
  std::vector<double> weights;
  std::vector<double> normalized_weights;
  std::vector<double> baseline_weights;
  size_t active_model_count = 0;
  WhatIfSide primary;
  std::optional<WhatIfSide> holdout;
};

// Candidate metrics under `weights` against the manifest weights, on the
// bundle and optionally on a holdout bundle with the same task, model ids and
// class labels. Throws Error(kBundleMismatch).
WhatIfReport EvaluateWeights(const EnsembleBundle& bundle,
                             std::span<const double> weights,
                             const EnsembleBundle* holdout = nullptr);

struct Objective {
  std::string metric;
  bool maximize = false;
};

// Metric names follow MetricReport ("rmse" and "RMSE" both work). Direction
// defaults to the metric's natural one. Throws Error(kInvalidObjective).
Objective ParseObjective(TaskKind task, std::string_view metric,
                         std::optional<std::string_view> direction = {});

struct WeightProposal {
  std::vector<std::string> ids;
  std::vector<double> weights;
  Objective objective;
  double objective_value = 0.0;
  double baseline_value = 0.0;
  size_t evaluations_used = 0;
  size_t budget = 0;
  uint64_t seed = 0;
  // (evaluation index, best value so far), one entry per improvement.
  std::vector<std::pair<size_t, double>> trajectory;
};

// Objective value of the ensemble under `weights`.
double ObjectiveValue(const EnsembleBundle& bundle, const Objective& objective,
                      std::span<const double> weights);

inline constexpr double kSearchMultipliers[] = {0.0, 0.25, 0.5, 0.75,
                                                1.0, 1.5,  2.0};

// Coordinate ascent over the weight simplex. Starting from the normalized
// manifest weights, each pass visits the models in a seed-determined order and
// tries scaling that model's weight by every multiplier, keeping the best
// strict improvement. Stops when a pass improves nothing or the budget of
// objective evaluations is spent. Throws Error(kBudgetTooSmall) when
// budget < number of models.
WeightProposal SuggestWeights(const EnsembleBundle& bundle,
                              const Objective& objective, size_t budget,
                              uint64_t seed);

// Weighted composite over per-model predictors, used to explain the ensemble.
// Members with zero weight are never called.
std::shared_ptr<const predictor::Predictor> MakeEnsemblePredictor(
    std::vector<std::shared_ptr<const predictor::Predictor>> members,
    std::span<const double> weights, TaskKind task,
    std::vector<std::string> class_labels);

nlohmann::ordered_json ToJson(const WhatIfReport& report);
nlohmann::ordered_json ToJson(const WeightProposal& proposal);

}  // namespace ensemble_lens::weights

#endif  // ENSEMBLE_LENS_WEIGHTS_H_
