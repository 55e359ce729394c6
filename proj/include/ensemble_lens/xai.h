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

// Model-agnostic explanations over a Predictor: permutation importance and
// one-dimensional partial dependence.

#ifndef ENSEMBLE_LENS_XAI_H_
#define ENSEMBLE_LENS_XAI_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ensemble_lens/bundle.h"
#include "ensemble_lens/predictor.h"
#include "json.hpp"

namespace ensemble_lens::xai {

// Type-7 (linear interpolation) quantiles at probabilities k/(g-1),
// k = 0..g-1, with duplicates removed; strictly increasing.
// Throws Error(kEmptyColumn) and Error(kInvalidArgument) when g < 2.
std::vector<double> QuantileGrid(std::span<const double> values, size_t g);

// Called after each completed unit of work; returning false cancels the
// computation with Error(kCancelled).
using Progress = std::function<bool(size_t done, size_t total)>;

struct ImportanceOptions {
  // A MetricReport name; RMSE for regression, accuracy for classification
  // when unset.
  std::optional<std::string> metric;
  size_t repeats = 5;
  uint64_t seed = 0;
  // Adds each feature's share of the summed absolute drops.
  bool normalize = false;
};

struct FeatureImportance {
  std::string name;
  // Positive means permuting the feature hurts the score.
  double mean_drop = 0.0;
  // Population standard deviation over repeats.
  double std_drop = 0.0;
  size_t repeats = 0;
  std::optional<double> share;
};

struct ImportanceReport {
  std::string model_id;
  std::string metric_name;
  bool higher_is_better = true;
  uint64_t seed = 0;
  size_t repeats = 0;
  double baseline_score = 0.0;
  bool normalized = false;
  std::vector<FeatureImportance> features;
};

// Shuffles of feature f in repeat r are drawn from a stream keyed by
// (seed, f, r) over the rows in a canonical order, so the report depends only
// on the predictor, the multiset of dataset rows and the seed.
// Throws Error(kSchemaMismatch) when the predictor's task or classes do not
// fit the bundle, Error(kInvalidArgument) for repeats == 0 and
// Error(kInvalidObjective) for an unknown or undefined metric.
ImportanceReport PermutationImportance(const predictor::Predictor& model,
                                       const EnsembleBundle& bundle,
                                       const std::string& model_id,
                                       const ImportanceOptions& options,
                                       const Progress& progress = {});

struct PdpOptions {
  size_t grid_size = 20;
  // Evaluate on an evenly spaced subset of at most this many rows.
  std::optional<size_t> row_cap;
};

struct PDPCurve {
  std::string model_id;
  std::string feature;
  FeatureKind kind = FeatureKind::kNumeric;
  // Exactly one of the grids is filled, according to `kind`.
  std::vector<double> numeric_grid;
  std::vector<std::string> level_grid;
  TaskKind task = TaskKind::kRegression;
  // Class labels of the averages, in bundle order (classification only).
  std::vector<std::string> class_labels;
  // One entry per grid point: the mean prediction (regression) or the mean
  // probability of every class (classification).
  std::vector<std::vector<double>> averages;

  size_t size() const {
    return kind == FeatureKind::kNumeric ? numeric_grid.size()
                                         : level_grid.size();
  }
};

// Throws Error(kUnknownFeature), Error(kSchemaMismatch).
PDPCurve PartialDependence(const predictor::Predictor& model,
                           const EnsembleBundle& bundle,
                           const std::string& model_id,
                           const std::string& feature,
                           const PdpOptions& options = {},
                           const Progress& progress = {});

nlohmann::ordered_json ToJson(const ImportanceReport& report);
nlohmann::ordered_json ToJson(const PDPCurve& curve);

}  // namespace ensemble_lens::xai

#endif  // ENSEMBLE_LENS_XAI_H_
