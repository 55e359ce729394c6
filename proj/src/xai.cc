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

#include "ensemble_lens/xai.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ensemble_lens/metrics.h"
#include "ensemble_lens/weights.h"
#include "numeric.h"
#include "random.h"

namespace ensemble_lens::xai {
namespace {

using nlohmann::ordered_json;

// Predictor output restated in the bundle's class order.
struct Outputs {
  std::vector<double> values;
  std::vector<int> codes;
  // n x k in bundle class order; one-hot when the predictor gives labels only.
  ProbabilityMatrix probabilities;
};

class Adapter {
 public:
  Adapter(const predictor::Predictor& model, const EnsembleBundle& bundle)
      : model_(model), task_(bundle.task), k_(bundle.class_labels.size()) {
    if (IsClassification(model.task()) != IsClassification(bundle.task)) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "predictor task " + std::string(TaskKindName(model.task())) +
                      " does not fit a " + std::string(TaskKindName(bundle.task)) +
                      " bundle");
    }
    if (!IsClassification(bundle.task)) return;
    const auto& labels = model.class_labels();
    if (labels.size() != k_) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "predictor declares " + std::to_string(labels.size()) +
                      " classes, the bundle has " + std::to_string(k_));
    }
    for (const auto& label : labels) {
      const auto it = std::find(bundle.class_labels.begin(),
                                bundle.class_labels.end(), label);
      if (it == bundle.class_labels.end()) {
        throw Error(ErrorCode::kSchemaMismatch,
                    "predictor class \"" + label + "\" is not a bundle class");
      }
      to_bundle_.push_back(static_cast<int>(it - bundle.class_labels.begin()));
    }
  }

  Outputs Predict(const FeatureTable& rows) const {
    PredictionSet raw = model_.Predict(rows);
    Outputs out;
    if (!IsClassification(task_)) {
      out.values = std::move(raw.values);
      return out;
    }
    const size_t n = rows.num_rows;
    out.probabilities = ProbabilityMatrix(n, k_);
    out.codes.resize(n);
    for (size_t i = 0; i < n; ++i) {
      if (raw.probabilities) {
        for (size_t c = 0; c < k_; ++c) {
          out.probabilities.at(i, to_bundle_[c]) = raw.probabilities->at(i, c);
        }
      } else {
        out.probabilities.at(i, to_bundle_[raw.codes[i]]) = 1.0;
      }
      out.codes[i] = to_bundle_[raw.codes[i]];
    }
    return out;
  }

 private:
  const predictor::Predictor& model_;
  TaskKind task_;
  size_t k_;
  std::vector<int> to_bundle_;
};

// Lexicographic order over (features..., target); rows equal under it are
// interchangeable.
std::vector<size_t> CanonicalOrder(const EnsembleBundle& bundle) {
  const Dataset& data = bundle.dataset;
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    for (const auto& column : data.features.columns) {
      if (column.meta.kind == FeatureKind::kNumeric) {
        if (column.numeric[a] != column.numeric[b]) {
          return column.numeric[a] < column.numeric[b];
        }
      } else if (column.categorical[a] != column.categorical[b]) {
        return column.categorical[a] < column.categorical[b];
      }
    }
    if (IsClassification(bundle.task)) {
      return data.target_codes[a] < data.target_codes[b];
    }
    return data.target_values[a] < data.target_values[b];
  });
  return order;
}

void Report(const Progress& progress, size_t done, size_t total) {
  if (progress && !progress(done, total)) {
    throw Error(ErrorCode::kCancelled, "computation cancelled");
  }
}

template <typename T>
std::vector<T> Permuted(const std::vector<T>& values,
                        const std::vector<size_t>& permutation) {
  std::vector<T> out(values.size());
  for (size_t i = 0; i < values.size(); ++i) out[i] = values[permutation[i]];
  return out;
}

}  // namespace

std::vector<double> QuantileGrid(std::span<const double> values, size_t g) {
  if (values.empty()) {
    throw Error(ErrorCode::kEmptyColumn, "cannot build a grid on an empty column");
  }
  if (g < 2) throw Error(ErrorCode::kInvalidArgument, "grid size must be at least 2");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  std::vector<double> grid;
  for (size_t k = 0; k < g; ++k) {
    double q;
    if (k == g - 1) {
      q = sorted.back();
    } else {
      const double h = static_cast<double>(n - 1) * static_cast<double>(k) /
                       static_cast<double>(g - 1);
      const auto lo = static_cast<size_t>(std::floor(h));
      const double frac = h - static_cast<double>(lo);
      q = lo + 1 < n ? sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
                     : sorted[lo];
    }
    if (grid.empty() || q > grid.back()) grid.push_back(q);
  }
  return grid;
}

ImportanceReport PermutationImportance(const predictor::Predictor& model,
                                       const EnsembleBundle& bundle,
                                       const std::string& model_id,
                                       const ImportanceOptions& options,
                                       const Progress& progress) {
  if (options.repeats == 0) {
    throw Error(ErrorCode::kInvalidArgument, "repeats must be at least 1");
  }
  const Adapter adapter(model, bundle);
  const bool classification = IsClassification(bundle.task);
  const weights::Objective objective = weights::ParseObjective(
      bundle.task, options.metric.value_or(classification ? "accuracy" : "rmse"));

  const std::vector<size_t> order = CanonicalOrder(bundle);
  const FeatureTable rows = bundle.dataset.features.SelectRows(order);
  const std::vector<double> target_values =
      classification ? std::vector<double>{}
                     : Permuted(bundle.dataset.target_values, order);
  const std::vector<int> target_codes =
      classification ? Permuted(bundle.dataset.target_codes, order)
                     : std::vector<int>{};

  auto score = [&](const FeatureTable& table) {
    const Outputs out = adapter.Predict(table);
    const metrics::MetricReport report =
        classification
            ? metrics::ClassificationMetrics(out.codes, target_codes, bundle.task,
                                             bundle.class_labels.size(),
                                             bundle.positive_code)
            : metrics::RegressionMetrics(out.values, target_values);
    const auto value = report.Get(objective.metric);
    if (!value) {
      throw Error(ErrorCode::kInvalidObjective,
                  objective.metric + " is undefined on these predictions");
    }
    return *value;
  };

  ImportanceReport report;
  report.model_id = model_id;
  report.metric_name = objective.metric;
  report.higher_is_better = objective.maximize;
  report.seed = options.seed;
  report.repeats = options.repeats;
  report.normalized = options.normalize;

  const size_t p = rows.num_columns();
  const size_t total = 1 + p * options.repeats;
  report.baseline_score = score(rows);
  size_t done = 1;
  Report(progress, done, total);

  const size_t n = rows.num_rows;
  for (size_t f = 0; f < p; ++f) {
    std::vector<double> drops;
    for (size_t r = 0; r < options.repeats; ++r) {
      std::mt19937_64 rng(internal::StreamSeed(options.seed, f, r));
      std::vector<size_t> permutation(n);
      std::iota(permutation.begin(), permutation.end(), size_t{0});
      internal::Shuffle(permutation, rng);
      FeatureTable shuffled = rows;
      FeatureColumn& column = shuffled.columns[f];
      if (column.meta.kind == FeatureKind::kNumeric) {
        column.numeric = Permuted(column.numeric, permutation);
      } else {
        column.categorical = Permuted(column.categorical, permutation);
      }
      const double s = score(shuffled);
      drops.push_back(objective.maximize ? report.baseline_score - s
                                         : s - report.baseline_score);
      Report(progress, ++done, total);
    }
    FeatureImportance feature;
    feature.name = rows.columns[f].meta.name;
    feature.repeats = options.repeats;
    feature.mean_drop = internal::OrderFreeMean(drops);
    std::vector<double> squares;
    for (double d : drops) squares.push_back((d - feature.mean_drop) * (d - feature.mean_drop));
    feature.std_drop = std::sqrt(internal::OrderFreeMean(std::move(squares)));
    report.features.push_back(std::move(feature));
  }

  if (options.normalize) {
    std::vector<double> magnitudes;
    for (const auto& f : report.features) magnitudes.push_back(std::abs(f.mean_drop));
    const double sum = internal::OrderFreeSum(std::move(magnitudes));
    if (sum > 0.0) {
      for (auto& f : report.features) f.share = f.mean_drop / sum;
    }
  }
  return report;
}

PDPCurve PartialDependence(const predictor::Predictor& model,
                           const EnsembleBundle& bundle,
                           const std::string& model_id,
                           const std::string& feature,
                           const PdpOptions& options, const Progress& progress) {
  const FeatureTable& all = bundle.dataset.features;
  const auto index = all.FindColumn(feature);
  if (!index) {
    throw Error(ErrorCode::kUnknownFeature, "dataset has no feature \"" + feature + "\"");
  }
  const Adapter adapter(model, bundle);
  const FeatureColumn& source = all.columns[*index];

  PDPCurve curve;
  curve.model_id = model_id;
  curve.feature = feature;
  curve.kind = source.meta.kind;
  curve.task = bundle.task;
  if (IsClassification(bundle.task)) curve.class_labels = bundle.class_labels;
  if (curve.kind == FeatureKind::kNumeric) {
    curve.numeric_grid = QuantileGrid(source.numeric, options.grid_size);
  } else if (!source.meta.levels.empty()) {
    curve.level_grid = source.meta.levels;
  } else {
    for (const auto& level : source.categorical) {
      if (std::find(curve.level_grid.begin(), curve.level_grid.end(), level) ==
          curve.level_grid.end()) {
        curve.level_grid.push_back(level);
      }
    }
  }

  FeatureTable rows = all;
  if (options.row_cap && *options.row_cap > 0 && *options.row_cap < all.num_rows) {
    const size_t cap = *options.row_cap;
    std::vector<size_t> subset(cap);
    for (size_t i = 0; i < cap; ++i) subset[i] = i * all.num_rows / cap;
    rows = all.SelectRows(subset);
  }
  const size_t n = rows.num_rows;
  const size_t k = bundle.class_labels.size();
  const size_t points = curve.size();
  for (size_t g = 0; g < points; ++g) {
    FeatureColumn& column = rows.columns[*index];
    if (curve.kind == FeatureKind::kNumeric) {
      std::fill(column.numeric.begin(), column.numeric.end(), curve.numeric_grid[g]);
    } else {
      std::fill(column.categorical.begin(), column.categorical.end(),
                curve.level_grid[g]);
    }
    const Outputs out = adapter.Predict(rows);
    if (!IsClassification(bundle.task)) {
      curve.averages.push_back({internal::OrderFreeMean(out.values)});
    } else {
      std::vector<double> means(k);
      for (size_t c = 0; c < k; ++c) {
        std::vector<double> column_values(n);
        for (size_t i = 0; i < n; ++i) column_values[i] = out.probabilities.at(i, c);
        means[c] = internal::OrderFreeMean(std::move(column_values));
      }
      curve.averages.push_back(std::move(means));
    }
    Report(progress, g + 1, points);
  }
  return curve;
}

nlohmann::ordered_json ToJson(const ImportanceReport& report) {
  ordered_json out;
  out["model_id"] = report.model_id;
  out["metric_name"] = report.metric_name;
  out["higher_is_better"] = report.higher_is_better;
  out["seed"] = report.seed;
  out["repeats"] = report.repeats;
  out["baseline_score"] = report.baseline_score;
  out["normalized"] = report.normalized;
  ordered_json features = ordered_json::array();
  for (const auto& f : report.features) {
    ordered_json item;
    item["name"] = f.name;
    item["mean_drop"] = f.mean_drop;
    item["std_drop"] = f.std_drop;
    item["repeats"] = f.repeats;
    if (report.normalized) {
      item["share"] = f.share ? ordered_json(*f.share) : ordered_json(nullptr);
    }
    features.push_back(std::move(item));
  }
  out["features"] = std::move(features);
  return out;
}

nlohmann::ordered_json ToJson(const PDPCurve& curve) {
  ordered_json out;
  out["model_id"] = curve.model_id;
  out["feature"] = curve.feature;
  out["kind"] = curve.kind == FeatureKind::kNumeric ? "numeric" : "categorical";
  out["task"] = std::string(TaskKindName(curve.task));
  if (curve.kind == FeatureKind::kNumeric) {
    out["grid"] = curve.numeric_grid;
  } else {
    out["grid"] = curve.level_grid;
  }
  if (IsClassification(curve.task)) {
    out["class_labels"] = curve.class_labels;
    out["averages"] = curve.averages;
  } else {
    ordered_json averages = ordered_json::array();
    for (const auto& a : curve.averages) averages.push_back(a.front());
    out["averages"] = std::move(averages);
  }
  return out;
}

}  // namespace ensemble_lens::xai
