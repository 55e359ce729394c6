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

#include "fixtures.h"

#include <atomic>
#include <cmath>
#include <stdexcept>

#include <unistd.h>

#include "ensemble_lens/predictor.h"

namespace ensemble_lens::testing {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

FeatureColumn Numeric(const std::string& name, std::vector<double> values) {
  FeatureColumn column;
  column.meta.name = name;
  column.numeric = std::move(values);
  return column;
}

void Finish(EnsembleBundle& bundle) {
  if (bundle.task == TaskKind::kRegression) {
    bundle.dataset.target_std = TargetStd(bundle.dataset.target_values);
  }
  const ValidationReport report = ValidateBundle(bundle);
  if (!report.ok()) throw ValidationError(report);
}

ModelEntry BuiltinModel(const std::string& id, const ordered_json& spec,
                        const FeatureTable& features) {
  ModelEntry model;
  model.id = id;
  model.display_name = id;
  model.weight = 1.0;
  model.predictor = ordered_json{{"kind", "builtin"}, {"spec", spec}};
  const auto predictor = predictor::LoadBuiltin(json(spec));
  PredictionSet out = predictor->Predict(features);
  model.values = std::move(out.values);
  model.codes = std::move(out.codes);
  model.probabilities = std::move(out.probabilities);
  return model;
}

}  // namespace

std::vector<double> RandomReals(Rng& rng, size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> unit(lo, hi);
  std::vector<double> out(n);
  for (double& v : out) v = unit(rng);
  return out;
}

std::vector<int> RandomCodes(Rng& rng, size_t n, int k) {
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::vector<int> out(n);
  for (int& v : out) v = pick(rng);
  return out;
}

ProbabilityMatrix RandomProbabilities(Rng& rng, size_t n, size_t k) {
  std::exponential_distribution<double> gamma1(1.0);
  std::uniform_int_distribution<int> coin(0, 9);
  ProbabilityMatrix p(n, k);
  for (size_t i = 0; i < n; ++i) {
    if (coin(rng) == 0) {
      // Uniform row: every class ties.
      for (size_t c = 0; c < k; ++c) p.at(i, c) = 1.0 / static_cast<double>(k);
      continue;
    }
    double total = 0.0;
    for (size_t c = 0; c < k; ++c) total += p.at(i, c) = gamma1(rng);
    for (size_t c = 0; c < k; ++c) p.at(i, c) /= total;
  }
  return p;
}

std::vector<int> ArgMaxCodes(const ProbabilityMatrix& p) {
  std::vector<int> out(p.rows());
  for (size_t i = 0; i < p.rows(); ++i) out[i] = ArgMax(p.row(i));
  return out;
}

EnsembleBundle RegressionFromVectors(const std::vector<std::vector<double>>& predictions,
                                     const std::vector<double>& y,
                                     std::vector<double> weights) {
  EnsembleBundle bundle;
  bundle.task = TaskKind::kRegression;
  bundle.dataset.target_column = "y";
  bundle.dataset.target_values = y;
  bundle.dataset.features.num_rows = y.size();
  if (weights.empty()) weights.assign(predictions.size(), 1.0);
  for (size_t j = 0; j < predictions.size(); ++j) {
    ModelEntry model;
    model.id = "m" + std::to_string(j);
    model.display_name = model.id;
    model.weight = weights[j];
    model.values = predictions[j];
    bundle.models.push_back(std::move(model));
  }
  Finish(bundle);
  return bundle;
}

EnsembleBundle ClassificationFromCodes(
    TaskKind task, size_t k, const std::vector<std::vector<int>>& predictions,
    const std::vector<int>& y,
    const std::vector<std::optional<ProbabilityMatrix>>& probabilities,
    std::vector<double> weights) {
  EnsembleBundle bundle;
  bundle.task = task;
  for (size_t c = 0; c < k; ++c) bundle.class_labels.push_back("c" + std::to_string(c));
  bundle.positive_code = 1;
  bundle.dataset.target_column = "y";
  bundle.dataset.target_codes = y;
  bundle.dataset.features.num_rows = y.size();
  if (weights.empty()) weights.assign(predictions.size(), 1.0);
  for (size_t j = 0; j < predictions.size(); ++j) {
    ModelEntry model;
    model.id = "m" + std::to_string(j);
    model.display_name = model.id;
    model.weight = weights[j];
    model.codes = predictions[j];
    if (j < probabilities.size()) model.probabilities = probabilities[j];
    bundle.models.push_back(std::move(model));
  }
  Finish(bundle);
  return bundle;
}

EnsembleBundle MakeLinearRegressionFixture(size_t n, uint64_t seed) {
  Rng rng(seed);
  EnsembleBundle bundle;
  bundle.task = TaskKind::kRegression;
  FeatureTable& table = bundle.dataset.features;
  table.num_rows = n;
  table.columns.push_back(Numeric("x1", RandomReals(rng, n, 0.0, 1.0)));
  table.columns.push_back(Numeric("x2", RandomReals(rng, n, -1.0, 1.0)));
  table.columns.push_back(Numeric("x3", RandomReals(rng, n, 0.0, 10.0)));
  FeatureColumn color;
  color.meta.name = "color";
  color.meta.kind = FeatureKind::kCategorical;
  color.meta.levels = {"red", "green", "blue"};
  for (int code : RandomCodes(rng, n, 3)) color.categorical.push_back(color.meta.levels[code]);
  table.columns.push_back(std::move(color));

  std::normal_distribution<double> noise(0.0, 0.2);
  bundle.dataset.target_column = "y";
  for (size_t i = 0; i < n; ++i) {
    const double x1 = table.columns[0].numeric[i];
    const double x2 = table.columns[1].numeric[i];
    const double x3 = table.columns[2].numeric[i];
    bundle.dataset.target_values.push_back(1 + 2 * x1 - x2 + 0.03 * x3 + noise(rng));
  }

  const ordered_json lin_a = {
      {"kind", "linear"},
      {"features", {"x1", "x2", "color"}},
      {"intercept", 1.0},
      {"coefficients", {2.0, -1.0, {{"red", 0.5}, {"blue", -1.0}}}}};
  const ordered_json lin_b = {{"kind", "linear"},
                              {"features", {"x1", "x2"}},
                              {"intercept", 0.5},
                              {"coefficients", {1.5, 0.25}}};
  const ordered_json tree_c = {
      {"kind", "tree"},
      {"features", {"x1"}},
      {"task", "regression"},
      {"nodes",
       {{{"feature", "x1"}, {"threshold", 0.5}, {"left", 1}, {"right", 2}},
        {{"value", 1.0}},
        {{"value", 3.0}}}}};
  bundle.models.push_back(BuiltinModel("lin_a", lin_a, table));
  bundle.models.push_back(BuiltinModel("lin_b", lin_b, table));
  bundle.models.push_back(BuiltinModel("tree_c", tree_c, table));
  bundle.models[1].weight = 2.0;
  Finish(bundle);
  return bundle;
}

EnsembleBundle MakeNoiseFixture(size_t n, uint64_t seed) {
  Rng rng(seed);
  EnsembleBundle bundle;
  bundle.task = TaskKind::kRegression;
  FeatureTable& table = bundle.dataset.features;
  table.num_rows = n;
  table.columns.push_back(Numeric("x1", RandomReals(rng, n, 0.0, 1.0)));
  table.columns.push_back(Numeric("x2", RandomReals(rng, n, 0.0, 1.0)));
  bundle.dataset.target_column = "y";
  std::normal_distribution<double> eps(0.0, 0.1);
  for (size_t i = 0; i < n; ++i) {
    bundle.dataset.target_values.push_back(4 * table.columns[0].numeric[i] -
                                           2 * table.columns[1].numeric[i] + eps(rng));
  }
  const auto& y = bundle.dataset.target_values;
  const double errors[] = {0.3, 0.4, 0.5, 0.6};
  for (int j = 0; j < 4; ++j) {
    std::normal_distribution<double> err(0.0, errors[j]);
    ModelEntry model;
    model.id = "good_" + std::to_string(j + 1);
    model.display_name = model.id;
    model.weight = 1.0;
    for (double v : y) model.values.push_back(v + err(rng));
    bundle.models.push_back(std::move(model));
  }
  for (int j = 0; j < 2; ++j) {
    ModelEntry model;
    model.id = "noise_" + std::to_string(j + 1);
    model.display_name = model.id;
    model.weight = 1.0;
    model.values = RandomReals(rng, n, -3.0, 5.0);
    bundle.models.push_back(std::move(model));
  }
  Finish(bundle);
  return bundle;
}

EnsembleBundle MakeClassificationFixture(TaskKind task, size_t n, uint64_t seed) {
  Rng rng(seed);
  EnsembleBundle bundle;
  bundle.task = task;
  FeatureTable& table = bundle.dataset.features;
  table.num_rows = n;
  table.columns.push_back(Numeric("x1", RandomReals(rng, n, -2.0, 2.0)));
  table.columns.push_back(Numeric("x2", RandomReals(rng, n, -2.0, 2.0)));
  bundle.dataset.target_column = "label";
  const bool binary = task == TaskKind::kBinary;
  bundle.class_labels = binary ? std::vector<std::string>{"no", "yes"}
                               : std::vector<std::string>{"a", "b", "c"};
  bundle.positive_code = 1;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (size_t i = 0; i < n; ++i) {
    const double x1 = table.columns[0].numeric[i];
    const double x2 = table.columns[1].numeric[i];
    if (binary) {
      const double p = 1.0 / (1.0 + std::exp(-(1.5 * x1 - x2)));
      bundle.dataset.target_codes.push_back(unit(rng) < p ? 1 : 0);
    } else {
      const double s[3] = {0.0, 1.2 * x1, 1.2 * x2};
      double total = 0.0;
      double e[3];
      for (int c = 0; c < 3; ++c) total += e[c] = std::exp(s[c]);
      const double u = unit(rng) * total;
      bundle.dataset.target_codes.push_back(u < e[0] ? 0 : (u < e[0] + e[1] ? 1 : 2));
    }
  }

  const ordered_json labels = bundle.class_labels;
  std::vector<ordered_json> specs;
  if (binary) {
    specs.push_back({{"kind", "logistic"}, {"features", {"x1", "x2"}}, {"classes", labels},
                     {"intercept", 0.0}, {"coefficients", {1.4, -0.9}}});
    specs.push_back({{"kind", "logistic"}, {"features", {"x1", "x2"}}, {"classes", labels},
                     {"intercept", 0.2}, {"coefficients", {1.0, 0.0}}});
    specs.push_back({{"kind", "logistic"}, {"features", {"x1", "x2"}}, {"classes", labels},
                     {"intercept", -0.1}, {"coefficients", {0.5, -1.5}}});
  } else {
    specs.push_back({{"kind", "logistic"}, {"features", {"x1", "x2"}}, {"classes", labels},
                     {"intercept", {0.0, 0.0, 0.0}},
                     {"coefficients", {{0.0, 0.0}, {1.1, 0.0}, {0.0, 1.3}}}});
    specs.push_back({{"kind", "logistic"}, {"features", {"x1", "x2"}}, {"classes", labels},
                     {"intercept", {0.1, 0.0, -0.1}},
                     {"coefficients", {{0.0, 0.0}, {0.7, 0.2}, {0.1, 0.8}}}});
    specs.push_back({{"kind", "logistic"}, {"features", {"x1", "x2"}}, {"classes", labels},
                     {"intercept", {0.0, 0.3, 0.0}},
                     {"coefficients", {{0.0, 0.0}, {1.5, -0.4}, {-0.2, 1.0}}}});
  }
  for (size_t j = 0; j < specs.size(); ++j) {
    bundle.models.push_back(BuiltinModel("logit_" + std::to_string(j + 1), specs[j], table));
  }
  Finish(bundle);
  return bundle;
}

std::filesystem::path MakeTempDir(const std::string& prefix) {
  static std::atomic<int> counter{0};
  const auto path = std::filesystem::temp_directory_path() /
                    (prefix + "-" + std::to_string(::getpid()) + "-" +
                     std::to_string(counter++));
  std::filesystem::remove_all(path);
  std::filesystem::create_directories(path);
  return path;
}

}  // namespace ensemble_lens::testing
