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

#include "ensemble_lens/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "ensemble_lens/weights.h"
#include "numeric.h"

namespace ensemble_lens::metrics {
namespace {

using internal::OrderFreeMean;
using internal::OrderFreeSum;
using nlohmann::ordered_json;

constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

void CheckLengths(size_t predictions, size_t target) {
  if (predictions != target) {
    throw Error(ErrorCode::kLengthMismatch,
                "prediction length " + std::to_string(predictions) +
                    " differs from target length " + std::to_string(target));
  }
  if (target == 0) {
    throw Error(ErrorCode::kEmptyTarget, "cannot score an empty target");
  }
}

void CheckCodes(std::span<const int> codes, size_t num_classes,
                const char* what) {
  for (size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] < 0 || static_cast<size_t>(codes[i]) >= num_classes) {
      throw Error(ErrorCode::kUnknownLabel,
                  std::string(what) + " row " + std::to_string(i) +
                      " holds an undeclared class label");
    }
  }
}

double SafeRatio(int64_t numerator, int64_t denominator, bool& zero_division) {
  if (denominator == 0) {
    zero_division = true;
    return 0.0;
  }
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

// Average ranks (ties share the mean of their positions), 1-based.
std::vector<double> Ranks(std::span<const double> values) {
  std::vector<size_t> order(values.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) {
      ++j;
    }
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

ordered_json OptionalNumber(const std::optional<double>& value) {
  if (!value || !std::isfinite(*value)) return nullptr;
  return *value;
}

ordered_json MatrixValues(const std::vector<std::vector<double>>& values) {
  ordered_json rows = ordered_json::array();
  for (const auto& row : values) {
    ordered_json cells = ordered_json::array();
    for (double v : row) {
      cells.push_back(std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr));
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

bool MetricReport::Has(std::string_view name) const {
  return std::any_of(metrics.begin(), metrics.end(),
                     [&](const NamedValue& m) { return m.name == name; });
}

std::optional<double> MetricReport::Get(std::string_view name) const {
  for (const auto& metric : metrics) {
    if (metric.name == name) return metric.value;
  }
  return std::nullopt;
}

MetricReport RegressionMetrics(std::span<const double> predictions,
                               std::span<const double> target) {
  CheckLengths(predictions.size(), target.size());
  const size_t n = target.size();
  MetricReport report;

  std::vector<double> squared(n), absolute(n), target_terms(target.begin(),
                                                            target.end());
  std::vector<double> relative;
  relative.reserve(n);
  size_t zero_targets = 0;
  for (size_t i = 0; i < n; ++i) {
    const double e = predictions[i] - target[i];
    squared[i] = e * e;
    absolute[i] = std::abs(e);
    if (target[i] == 0.0) {
      ++zero_targets;
    } else {
      relative.push_back(std::abs(e) / std::abs(target[i]));
    }
  }
  const double sse = OrderFreeSum(squared);
  const double mse = sse / static_cast<double>(n);
  const double mae = OrderFreeMean(std::move(absolute));

  std::optional<double> mape;
  if (zero_targets == 0) {
    mape = OrderFreeMean(std::move(relative));
  } else {
    report.warnings.push_back(
        {"ZeroTargetForMAPE", std::to_string(zero_targets) +
                                  " observation(s) have target 0; MAPE is "
                                  "undefined"});
  }

  const double mean = OrderFreeMean(std::move(target_terms));
  std::vector<double> deviations(n);
  for (size_t i = 0; i < n; ++i) {
    deviations[i] = (target[i] - mean) * (target[i] - mean);
  }
  const double sst = OrderFreeSum(std::move(deviations));
  std::optional<double> r2;
  if (sst > 0.0) {
    r2 = 1.0 - sse / sst;
  } else {
    report.warnings.push_back(
        {"DegenerateR2", "target has zero variance; R2 is undefined"});
  }

  report.metrics = {{"MSE", mse},
                    {"RMSE", std::sqrt(mse)},
                    {"MAE", mae},
                    {"MAPE", mape},
                    {"R2", r2}};
  return report;
}

MetricReport ClassificationMetrics(std::span<const int> predictions,
                                   std::span<const int> target, TaskKind task,
                                   size_t num_classes, int positive_code) {
  if (!IsClassification(task)) {
    throw Error(ErrorCode::kNonClassificationTask,
                "classification metrics need a classification task");
  }
  CheckLengths(predictions.size(), target.size());
  CheckCodes(predictions, num_classes, "prediction");
  CheckCodes(target, num_classes, "target");
  const size_t n = target.size();

  std::vector<int64_t> tp(num_classes, 0), fp(num_classes, 0),
      fn(num_classes, 0);
  int64_t correct = 0;
  for (size_t i = 0; i < n; ++i) {
    const auto p = static_cast<size_t>(predictions[i]);
    const auto y = static_cast<size_t>(target[i]);
    if (p == y) {
      ++correct;
      ++tp[y];
    } else {
      ++fp[p];
      ++fn[y];
    }
  }

  MetricReport report;
  const double accuracy =
      static_cast<double>(correct) / static_cast<double>(n);
  bool zero_division = false;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  if (task == TaskKind::kBinary) {
    const auto c = static_cast<size_t>(positive_code);
    precision = SafeRatio(tp[c], tp[c] + fp[c], zero_division);
    recall = SafeRatio(tp[c], tp[c] + fn[c], zero_division);
    f1 = SafeRatio(2 * tp[c], 2 * tp[c] + fp[c] + fn[c], zero_division);
  } else {
    size_t present = 0;
    for (size_t c = 0; c < num_classes; ++c) {
      if (tp[c] + fp[c] + fn[c] == 0) continue;
      ++present;
      precision += SafeRatio(tp[c], tp[c] + fp[c], zero_division);
      recall += SafeRatio(tp[c], tp[c] + fn[c], zero_division);
      f1 += SafeRatio(2 * tp[c], 2 * tp[c] + fp[c] + fn[c], zero_division);
    }
    const double classes = static_cast<double>(present);
    precision /= classes;
    recall /= classes;
    f1 /= classes;
  }
  if (zero_division) {
    report.warnings.push_back(
        {"ZeroDivision",
         "a precision or recall denominator was 0; that term is taken as 0"});
  }
  report.metrics = {{"accuracy", accuracy},
                    {"precision", precision},
                    {"recall", recall},
                    {"f1", f1}};
  return report;
}

MetricReport EvaluatePredictions(const EnsembleBundle& bundle,
                                 const PredictionSet& predictions,
                                 std::string model_id) {
  MetricReport report =
      bundle.task == TaskKind::kRegression
          ? RegressionMetrics(predictions.values, bundle.dataset.target_values)
          : ClassificationMetrics(predictions.codes,
                                  bundle.dataset.target_codes, bundle.task,
                                  bundle.class_labels.size(),
                                  bundle.positive_code);
  report.model_id = std::move(model_id);
  return report;
}

std::vector<MetricReport> MetricsTable(const EnsembleBundle& bundle) {
  std::vector<MetricReport> table;
  table.reserve(bundle.num_models() + 1);

  PredictionSet ensemble;
  bool have_ensemble = true;
  if (bundle.ensemble_values) {
    ensemble.values = *bundle.ensemble_values;
  } else if (bundle.ensemble_codes) {
    ensemble.codes = *bundle.ensemble_codes;
  } else if (bundle.task == TaskKind::kRegression ||
             bundle.HasAllProbabilities()) {
    ensemble = weights::EnsemblePredict(bundle, bundle.Weights());
  } else {
    have_ensemble = false;
  }
  if (have_ensemble) {
    table.push_back(
        EvaluatePredictions(bundle, ensemble, std::string(kEnsembleId)));
  } else {
    MetricReport report;
    report.model_id = std::string(kEnsembleId);
    for (const char* name : {"accuracy", "precision", "recall", "f1"}) {
      report.metrics.push_back({name, std::nullopt});
    }
    report.warnings.push_back(
        {"EnsembleUnavailable",
         "no stored ensemble prediction and not every model has "
         "probabilities; the weighted ensemble cannot be recomposed"});
    table.push_back(std::move(report));
  }

  for (const auto& model : bundle.models) {
    PredictionSet set;
    set.values = model.values;
    set.codes = model.codes;
    table.push_back(EvaluatePredictions(bundle, set, model.id));
  }
  return table;
}

CorrelationMethod ParseCorrelationMethod(std::string_view name) {
  if (name == "pearson") return CorrelationMethod::kPearson;
  if (name == "spearman") return CorrelationMethod::kSpearman;
  if (name == "kappa") return CorrelationMethod::kKappa;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown correlation method \"" + std::string(name) +
                  "\" (expected pearson, spearman or kappa)");
}

double Pearson(std::span<const double> a, std::span<const double> b) {
  CheckLengths(a.size(), b.size());
  if (std::equal(a.begin(), a.end(), b.begin())) return 1.0;
  const size_t n = a.size();
  const double mean_a = OrderFreeMean({a.begin(), a.end()});
  const double mean_b = OrderFreeMean({b.begin(), b.end()});
  std::vector<double> cross(n), var_a(n), var_b(n);
  for (size_t i = 0; i < n; ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cross[i] = da * db;
    var_a[i] = da * da;
    var_b[i] = db * db;
  }
  const double sa = OrderFreeSum(std::move(var_a));
  const double sb = OrderFreeSum(std::move(var_b));
  if (!(sa > 0.0) || !(sb > 0.0)) return kUndefined;
  const double r = OrderFreeSum(std::move(cross)) / std::sqrt(sa * sb);
  return std::clamp(r, -1.0, 1.0);
}

double Spearman(std::span<const double> a, std::span<const double> b) {
  CheckLengths(a.size(), b.size());
  if (std::equal(a.begin(), a.end(), b.begin())) return 1.0;
  const std::vector<double> ra = Ranks(a);
  const std::vector<double> rb = Ranks(b);
  return Pearson(ra, rb);
}

double CohenKappa(std::span<const int> a, std::span<const int> b,
                  size_t num_classes) {
  CheckLengths(a.size(), b.size());
  CheckCodes(a, num_classes, "prediction");
  CheckCodes(b, num_classes, "prediction");
  const auto n = static_cast<int64_t>(a.size());
  std::vector<int64_t> count_a(num_classes, 0), count_b(num_classes, 0);
  int64_t agree = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ++count_a[static_cast<size_t>(a[i])];
    ++count_b[static_cast<size_t>(b[i])];
    if (a[i] == b[i]) ++agree;
  }
  int64_t chance = 0;
  for (size_t c = 0; c < num_classes; ++c) chance += count_a[c] * count_b[c];
  // kappa = (p_o - p_e) / (1 - p_e), scaled by n^2 to stay in integers.
  const int64_t numerator = n * agree - chance;
  const int64_t denominator = n * n - chance;
  if (denominator == 0) return agree == n ? 1.0 : kUndefined;
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

PairMatrix PredictionCorrelationMatrix(const EnsembleBundle& bundle,
                                       CorrelationMethod method) {
  const bool regression = bundle.task == TaskKind::kRegression;
  if (regression == (method == CorrelationMethod::kKappa)) {
    throw Error(ErrorCode::kMethodTaskMismatch,
                regression
                    ? "kappa applies to classification bundles; use pearson "
                      "or spearman"
                    : "classification bundles support only the kappa method");
  }
  PairMatrix matrix;
  matrix.metric = method == CorrelationMethod::kPearson    ? "pearson"
                  : method == CorrelationMethod::kSpearman ? "spearman"
                                                           : "kappa";
  matrix.ids = bundle.ModelIds();
  matrix.symmetric = true;
  const size_t m = bundle.num_models();
  matrix.values.assign(m, std::vector<double>(m, 1.0));
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = i + 1; j < m; ++j) {
      const ModelEntry& a = bundle.models[i];
      const ModelEntry& b = bundle.models[j];
      double value = 0.0;
      switch (method) {
        case CorrelationMethod::kPearson:
          value = Pearson(a.values, b.values);
          break;
        case CorrelationMethod::kSpearman:
          value = Spearman(a.values, b.values);
          break;
        case CorrelationMethod::kKappa:
          value = CohenKappa(a.codes, b.codes, bundle.class_labels.size());
          break;
      }
      matrix.values[i][j] = value;
      matrix.values[j][i] = value;
    }
  }
  return matrix;
}

CompareMatrix PredictionCompareMatrix(const EnsembleBundle& bundle) {
  CompareMatrix matrix;
  matrix.task = bundle.task;
  matrix.ids = bundle.ModelIds();
  const size_t n = bundle.num_rows();
  if (bundle.task == TaskKind::kRegression) {
    matrix.target_std = bundle.dataset.target_std;
    for (const auto& model : bundle.models) {
      std::vector<double> raw(n), scaled(n);
      for (size_t i = 0; i < n; ++i) {
        raw[i] = model.values[i] - bundle.dataset.target_values[i];
        scaled[i] = matrix.target_std > 0.0 ? raw[i] / matrix.target_std
                                            : kUndefined;
      }
      matrix.raw.push_back(std::move(raw));
      matrix.scaled.push_back(std::move(scaled));
    }
    return matrix;
  }
  for (const auto& model : bundle.models) {
    std::vector<CompareCell> cells(n);
    for (size_t i = 0; i < n; ++i) {
      cells[i] = {model.codes[i] == bundle.dataset.target_codes[i],
                  model.codes[i]};
    }
    matrix.cells.push_back(std::move(cells));
  }
  return matrix;
}

nlohmann::ordered_json ToJson(const MetricReport& report) {
  ordered_json out;
  out["model_id"] = report.model_id;
  ordered_json metrics = ordered_json::object();
  for (const auto& metric : report.metrics) {
    metrics[metric.name] = OptionalNumber(metric.value);
  }
  out["metrics"] = std::move(metrics);
  ordered_json warnings = ordered_json::array();
  for (const auto& warning : report.warnings) {
    warnings.push_back({{"code", warning.code}, {"message", warning.message}});
  }
  out["warnings"] = std::move(warnings);
  return out;
}

nlohmann::ordered_json ToJson(const std::vector<MetricReport>& table) {
  ordered_json reports = ordered_json::array();
  for (const auto& report : table) reports.push_back(ToJson(report));
  return {{"reports", std::move(reports)}};
}

nlohmann::ordered_json ToJson(const PairMatrix& matrix) {
  ordered_json out;
  out["metric"] = matrix.metric;
  out["ids"] = matrix.ids;
  out["values"] = MatrixValues(matrix.values);
  out["symmetric"] = matrix.symmetric;
  return out;
}

nlohmann::ordered_json ToJson(const CompareMatrix& matrix,
                              const EnsembleBundle& bundle) {
  ordered_json out;
  out["task"] = std::string(TaskKindName(matrix.task));
  out["ids"] = matrix.ids;
  if (matrix.task == TaskKind::kRegression) {
    out["target_std"] = matrix.target_std;
    out["raw"] = MatrixValues(matrix.raw);
    out["scaled"] = MatrixValues(matrix.scaled);
    return out;
  }
  ordered_json correct = ordered_json::array();
  ordered_json predicted = ordered_json::array();
  for (const auto& row : matrix.cells) {
    ordered_json c = ordered_json::array();
    ordered_json p = ordered_json::array();
    for (const auto& cell : row) {
      c.push_back(cell.correct);
      p.push_back(bundle.LabelName(cell.predicted));
    }
    correct.push_back(std::move(c));
    predicted.push_back(std::move(p));
  }
  out["correct"] = std::move(correct);
  out["predicted"] = std::move(predicted);
  return out;
}

}  // namespace ensemble_lens::metrics
