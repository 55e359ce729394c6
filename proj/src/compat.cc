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

#include "ensemble_lens/compat.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "numeric.h"

namespace ensemble_lens::compat {
namespace {

using internal::OrderFreeMean;
using nlohmann::ordered_json;

void CheckPair(size_t a, size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kLengthMismatch,
                "prediction vectors differ in length (" + std::to_string(a) +
                    " vs " + std::to_string(b) + ")");
  }
  if (a == 0) throw Error(ErrorCode::kEmptyTarget, "empty prediction vectors");
}

void CheckTriple(size_t a, size_t b, size_t y) {
  CheckPair(a, b);
  if (a != y) {
    throw Error(ErrorCode::kLengthMismatch,
                "predictions have " + std::to_string(a) +
                    " rows, target has " + std::to_string(y));
  }
}

double Fraction(int64_t count, size_t n) {
  return static_cast<double>(count) / static_cast<double>(n);
}

const char* TaskRequirement(PairMetric metric) {
  switch (metric) {
    case PairMetric::kMsd:
    case PairMetric::kRmsd:
    case PairMetric::kSdr:
    case PairMetric::kAr:
    case PairMetric::kCrmse:
      return "regression";
    default:
      return "classification";
  }
}

const ProbabilityMatrix& RequireProbabilities(const ModelEntry& model) {
  if (!model.probabilities) {
    throw Error(ErrorCode::kMissingProbabilities,
                "model " + model.id +
                    " has no probabilities; use strict_conjunctive_accuracy");
  }
  return *model.probabilities;
}

}  // namespace

double Msd(std::span<const double> a, std::span<const double> b) {
  CheckPair(a.size(), b.size());
  std::vector<double> terms(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    terms[i] = diff * diff;
  }
  return OrderFreeMean(std::move(terms));
}

double Rmsd(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(Msd(a, b));
}

double Sdr(std::span<const double> a, std::span<const double> b,
           double threshold) {
  CheckPair(a.size(), b.size());
  if (!(threshold >= 0.0)) {
    throw Error(ErrorCode::kNegativeThreshold,
                "SDR threshold must be >= 0");
  }
  int64_t strong = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) >= threshold) ++strong;
  }
  return Fraction(strong, a.size());
}

double Ar(std::span<const double> a, std::span<const double> b,
          double target_std, double xi) {
  CheckPair(a.size(), b.size());
  if (!(xi > 1.0)) {
    throw Error(ErrorCode::kXiOutOfRange, "AR requires xi > 1");
  }
  const double limit = target_std / xi;
  int64_t close = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) <= limit) ++close;
  }
  return Fraction(close, a.size());
}

double Crmse(std::span<const double> a, std::span<const double> b,
             std::span<const double> y) {
  CheckTriple(a.size(), b.size(), y.size());
  std::vector<double> terms(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    const double e = (a[i] + b[i]) / 2.0 - y[i];
    terms[i] = e * e;
  }
  return std::sqrt(OrderFreeMean(std::move(terms)));
}

EightCellCounts TwoModelConfusion(std::span<const int> a, std::span<const int> b,
                                  std::span<const int> y, int positive_code) {
  CheckTriple(a.size(), b.size(), y.size());
  EightCellCounts counts;
  for (size_t i = 0; i < y.size(); ++i) {
    const bool first = a[i] == y[i];
    const bool second = b[i] == y[i];
    if (y[i] == positive_code) {
      if (first && second) {
        ++counts.ttp;
      } else if (first) {
        ++counts.tfp;
      } else if (second) {
        ++counts.ftp;
      } else {
        ++counts.ffp;
      }
    } else {
      if (first && second) {
        ++counts.ttn;
      } else if (first) {
        ++counts.tfn;
      } else if (second) {
        ++counts.ftn;
      } else {
        ++counts.ffn;
      }
    }
  }
  return counts;
}

double UniformityFromCounts(const EightCellCounts& counts) {
  const int64_t same = counts.ttp + counts.ttn + counts.ffp + counts.ffn;
  return Fraction(same, static_cast<size_t>(counts.total()));
}

double Uniformity(std::span<const int> a, std::span<const int> b) {
  CheckPair(a.size(), b.size());
  int64_t same = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) ++same;
  }
  return Fraction(same, a.size());
}

double Incompatibility(std::span<const int> a, std::span<const int> b) {
  return 1.0 - Uniformity(a, b);
}

double AverageCollectiveScore(std::span<const int> a, std::span<const int> b,
                              std::span<const int> y) {
  CheckTriple(a.size(), b.size(), y.size());
  int64_t credits = 0;
  for (size_t i = 0; i < y.size(); ++i) {
    credits += (a[i] == y[i]) + (b[i] == y[i]);
  }
  // Half credits are exact in binary floating point.
  return (static_cast<double>(credits) / 2.0) / static_cast<double>(y.size());
}

std::vector<double> AcsCumulative(std::span<const int> a, std::span<const int> b,
                                  std::span<const int> y) {
  CheckTriple(a.size(), b.size(), y.size());
  std::vector<double> series(y.size());
  int64_t credits = 0;
  for (size_t i = 0; i < y.size(); ++i) {
    credits += (a[i] == y[i]) + (b[i] == y[i]);
    series[i] = (static_cast<double>(credits) / 2.0) / static_cast<double>(i + 1);
  }
  return series;
}

CorrectnessLevels CorrectnessLevelsOf(std::span<const int> a,
                                      std::span<const int> b,
                                      std::span<const int> y) {
  CheckTriple(a.size(), b.size(), y.size());
  int64_t both = 0, one = 0, none = 0;
  for (size_t i = 0; i < y.size(); ++i) {
    const int right = (a[i] == y[i]) + (b[i] == y[i]);
    if (right == 2) {
      ++both;
    } else if (right == 1) {
      ++one;
    } else {
      ++none;
    }
  }
  return {Fraction(both, y.size()), Fraction(one, y.size()),
          Fraction(none, y.size())};
}

std::vector<std::optional<double>> DisagreementByClass(std::span<const int> a,
                                                       std::span<const int> b,
                                                       std::span<const int> y,
                                                       size_t num_classes) {
  CheckTriple(a.size(), b.size(), y.size());
  std::vector<int64_t> support(num_classes, 0), differ(num_classes, 0);
  for (size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || static_cast<size_t>(y[i]) >= num_classes) {
      throw Error(ErrorCode::kUnknownLabel,
                  "target row " + std::to_string(i) + " has an unknown label");
    }
    const auto c = static_cast<size_t>(y[i]);
    ++support[c];
    if (a[i] != b[i]) ++differ[c];
  }
  std::vector<std::optional<double>> out(num_classes);
  for (size_t c = 0; c < num_classes; ++c) {
    if (support[c] > 0) {
      out[c] = Fraction(differ[c], static_cast<size_t>(support[c]));
    }
  }
  return out;
}

std::vector<int> AveragedArgmax(const ProbabilityMatrix& a,
                                const ProbabilityMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kLengthMismatch,
                "probability matrices differ in shape");
  }
  std::vector<int> labels(a.rows());
  std::vector<double> row(a.cols());
  for (size_t i = 0; i < a.rows(); ++i) {
    for (size_t c = 0; c < a.cols(); ++c) {
      row[c] = (a.at(i, c) + b.at(i, c)) / 2.0;
    }
    labels[i] = ArgMax(row);
  }
  return labels;
}

metrics::MetricReport ConjunctiveClassificationMetrics(
    const ProbabilityMatrix& a, const ProbabilityMatrix& b,
    std::span<const int> y, TaskKind task, size_t num_classes,
    int positive_code) {
  const std::vector<int> joined = AveragedArgmax(a, b);
  metrics::MetricReport report = metrics::ClassificationMetrics(
      joined, y, task, num_classes, positive_code);
  for (auto& metric : report.metrics) {
    metric.name = "conjunctive_" + metric.name;
  }
  return report;
}

double StrictConjunctiveAccuracy(std::span<const int> a, std::span<const int> b,
                                 std::span<const int> y) {
  CheckTriple(a.size(), b.size(), y.size());
  int64_t both = 0;
  for (size_t i = 0; i < y.size(); ++i) {
    if (a[i] == y[i] && b[i] == y[i]) ++both;
  }
  return Fraction(both, y.size());
}

Histogram AbsDiffDistribution(std::span<const double> a,
                              std::span<const double> b, size_t bins) {
  CheckPair(a.size(), b.size());
  if (bins == 0) {
    throw Error(ErrorCode::kInvalidArgument, "histogram needs at least 1 bin");
  }
  std::vector<double> d(a.size());
  double max_d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    d[i] = std::abs(a[i] - b[i]);
    max_d = std::max(max_d, d[i]);
  }
  Histogram histogram;
  if (max_d == 0.0) {
    histogram.edges = {0.0, 0.0};
    histogram.counts = {static_cast<int64_t>(a.size())};
    return histogram;
  }
  const double width = max_d / static_cast<double>(bins);
  histogram.edges.resize(bins + 1);
  for (size_t t = 0; t <= bins; ++t) {
    histogram.edges[t] = max_d * static_cast<double>(t) / static_cast<double>(bins);
  }
  histogram.edges.back() = max_d;
  histogram.counts.assign(bins, 0);
  for (double value : d) {
    auto index = static_cast<size_t>(value / width);
    index = std::min(index, bins - 1);
    // Keep the bin consistent with the published edges.
    while (index > 0 && value < histogram.edges[index]) --index;
    while (index + 1 < bins && value >= histogram.edges[index + 1]) ++index;
    ++histogram.counts[index];
  }
  return histogram;
}

PairMetric ParsePairMetric(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  for (PairMetric metric :
       {PairMetric::kMsd, PairMetric::kRmsd, PairMetric::kSdr, PairMetric::kAr,
        PairMetric::kCrmse, PairMetric::kUniformity,
        PairMetric::kIncompatibility, PairMetric::kAcs,
        PairMetric::kConjunctiveAccuracy, PairMetric::kConjunctivePrecision,
        PairMetric::kConjunctiveRecall, PairMetric::kConjunctiveF1,
        PairMetric::kStrictConjunctiveAccuracy}) {
    if (PairMetricName(metric) == lower) return metric;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown compatimetric \"" + std::string(name) + "\"");
}

std::string_view PairMetricName(PairMetric metric) {
  switch (metric) {
    case PairMetric::kMsd:
      return "msd";
    case PairMetric::kRmsd:
      return "rmsd";
    case PairMetric::kSdr:
      return "sdr";
    case PairMetric::kAr:
      return "ar";
    case PairMetric::kCrmse:
      return "crmse";
    case PairMetric::kUniformity:
      return "uniformity";
    case PairMetric::kIncompatibility:
      return "incompatibility";
    case PairMetric::kAcs:
      return "acs";
    case PairMetric::kConjunctiveAccuracy:
      return "conjunctive_accuracy";
    case PairMetric::kConjunctivePrecision:
      return "conjunctive_precision";
    case PairMetric::kConjunctiveRecall:
      return "conjunctive_recall";
    case PairMetric::kConjunctiveF1:
      return "conjunctive_f1";
    case PairMetric::kStrictConjunctiveAccuracy:
      return "strict_conjunctive_accuracy";
  }
  return "msd";
}

bool AppliesTo(PairMetric metric, TaskKind task) {
  return (std::string_view(TaskRequirement(metric)) == "regression") ==
         (task == TaskKind::kRegression);
}

std::vector<PairMetric> MetricsFor(TaskKind task) {
  if (task == TaskKind::kRegression) {
    return {PairMetric::kMsd, PairMetric::kRmsd, PairMetric::kSdr,
            PairMetric::kAr, PairMetric::kCrmse};
  }
  return {PairMetric::kUniformity,
          PairMetric::kIncompatibility,
          PairMetric::kAcs,
          PairMetric::kConjunctiveAccuracy,
          PairMetric::kConjunctivePrecision,
          PairMetric::kConjunctiveRecall,
          PairMetric::kConjunctiveF1,
          PairMetric::kStrictConjunctiveAccuracy};
}

double PairValue(const EnsembleBundle& bundle, PairMetric metric, size_t a,
                 size_t b, const PairOptions& options) {
  if (!AppliesTo(metric, bundle.task)) {
    throw Error(ErrorCode::kMetricTaskMismatch,
                std::string(PairMetricName(metric)) + " needs a " +
                    TaskRequirement(metric) + " bundle, this one is " +
                    std::string(TaskKindName(bundle.task)));
  }
  const ModelEntry& first = bundle.models.at(a);
  const ModelEntry& second = bundle.models.at(b);
  const auto& y_values = bundle.dataset.target_values;
  const auto& y_codes = bundle.dataset.target_codes;
  const size_t k = bundle.class_labels.size();
  auto conjunctive = [&](std::string_view name) {
    const metrics::MetricReport report = ConjunctiveClassificationMetrics(
        RequireProbabilities(first), RequireProbabilities(second), y_codes,
        bundle.task, k, bundle.positive_code);
    return *report.Get(name);
  };
  switch (metric) {
    case PairMetric::kMsd:
      return Msd(first.values, second.values);
    case PairMetric::kRmsd:
      return Rmsd(first.values, second.values);
    case PairMetric::kSdr:
      return Sdr(first.values, second.values,
                 options.sdr_threshold.value_or(bundle.dataset.target_std));
    case PairMetric::kAr:
      return Ar(first.values, second.values, bundle.dataset.target_std,
                options.xi);
    case PairMetric::kCrmse:
      return Crmse(first.values, second.values, y_values);
    case PairMetric::kUniformity:
      return Uniformity(first.codes, second.codes);
    case PairMetric::kIncompatibility:
      return Incompatibility(first.codes, second.codes);
    case PairMetric::kAcs:
      return AverageCollectiveScore(first.codes, second.codes, y_codes);
    case PairMetric::kConjunctiveAccuracy:
      return conjunctive("conjunctive_accuracy");
    case PairMetric::kConjunctivePrecision:
      return conjunctive("conjunctive_precision");
    case PairMetric::kConjunctiveRecall:
      return conjunctive("conjunctive_recall");
    case PairMetric::kConjunctiveF1:
      return conjunctive("conjunctive_f1");
    case PairMetric::kStrictConjunctiveAccuracy:
      return StrictConjunctiveAccuracy(first.codes, second.codes, y_codes);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

metrics::PairMatrix CompatMatrix(const EnsembleBundle& bundle,
                                 PairMetric metric,
                                 const PairOptions& options) {
  metrics::PairMatrix matrix;
  matrix.metric = std::string(PairMetricName(metric));
  matrix.ids = bundle.ModelIds();
  // Every supported compatimetric is symmetric in (a, b).
  matrix.symmetric = true;
  const size_t m = bundle.num_models();
  matrix.values.assign(m, std::vector<double>(m, 0.0));
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = i; j < m; ++j) {
      const double value = PairValue(bundle, metric, i, j, options);
      matrix.values[i][j] = value;
      matrix.values[j][i] = value;
    }
  }
  return matrix;
}

nlohmann::ordered_json PairDetail(const EnsembleBundle& bundle,
                                  std::string_view a_id, std::string_view b_id,
                                  const PairOptions& options) {
  const size_t a = bundle.ModelIndex(a_id);
  const size_t b = bundle.ModelIndex(b_id);
  const ModelEntry& first = bundle.models[a];
  const ModelEntry& second = bundle.models[b];

  ordered_json out;
  out["a"] = first.id;
  out["b"] = second.id;
  out["task"] = std::string(TaskKindName(bundle.task));

  if (bundle.task == TaskKind::kRegression) {
    const double threshold =
        options.sdr_threshold.value_or(bundle.dataset.target_std);
    for (PairMetric metric : MetricsFor(bundle.task)) {
      out[std::string(PairMetricName(metric))] =
          PairValue(bundle, metric, a, b, options);
    }
    out["sdr_threshold"] = threshold;
    out["ar_xi"] = options.xi;
    out["target_std"] = bundle.dataset.target_std;
    const auto& y = bundle.dataset.target_values;
    out["rmse_a"] = *metrics::RegressionMetrics(first.values, y).Get("RMSE");
    out["rmse_b"] = *metrics::RegressionMetrics(second.values, y).Get("RMSE");
    out["abs_diff_histogram"] = ToJson(
        AbsDiffDistribution(first.values, second.values, options.histogram_bins));
    return out;
  }

  const auto& y = bundle.dataset.target_codes;
  const size_t k = bundle.class_labels.size();
  const bool have_probabilities =
      first.probabilities.has_value() && second.probabilities.has_value();
  for (PairMetric metric : MetricsFor(bundle.task)) {
    const std::string name(PairMetricName(metric));
    const bool needs_probabilities =
        metric == PairMetric::kConjunctiveAccuracy ||
        metric == PairMetric::kConjunctivePrecision ||
        metric == PairMetric::kConjunctiveRecall ||
        metric == PairMetric::kConjunctiveF1;
    if (needs_probabilities && !have_probabilities) {
      out[name] = nullptr;
    } else {
      out[name] = PairValue(bundle, metric, a, b, options);
    }
  }
  if (!have_probabilities) {
    out["warnings"] = ordered_json::array(
        {{{"code", "MissingProbabilities"},
          {"message",
           "probability-averaged conjunctive metrics need probabilities for "
           "both models; strict_conjunctive_accuracy is reported instead"}}});
  } else {
    out["warnings"] = ordered_json::array();
  }
  out["correctness_levels"] = ToJson(CorrectnessLevelsOf(first.codes, second.codes, y));
  ordered_json by_class = ordered_json::object();
  const auto disagreement = DisagreementByClass(first.codes, second.codes, y, k);
  for (size_t c = 0; c < k; ++c) {
    by_class[bundle.class_labels[c]] =
        disagreement[c] ? ordered_json(*disagreement[c]) : ordered_json(nullptr);
  }
  out["disagreement_by_class"] = std::move(by_class);
  out["acs_cumulative"] = AcsCumulative(first.codes, second.codes, y);
  if (bundle.task == TaskKind::kBinary) {
    out["two_model_confusion"] = ToJson(
        TwoModelConfusion(first.codes, second.codes, y, bundle.positive_code));
  }
  return out;
}

nlohmann::ordered_json ToJson(const EightCellCounts& counts) {
  return {{"TTP", counts.ttp}, {"TFP", counts.tfp}, {"FTP", counts.ftp},
          {"FFP", counts.ffp}, {"FFN", counts.ffn}, {"FTN", counts.ftn},
          {"TFN", counts.tfn}, {"TTN", counts.ttn}};
}

nlohmann::ordered_json ToJson(const CorrectnessLevels& levels) {
  return {{"both_correct", levels.both_correct},
          {"exactly_one_correct", levels.exactly_one_correct},
          {"none_correct", levels.none_correct}};
}

nlohmann::ordered_json ToJson(const Histogram& histogram) {
  return {{"edges", histogram.edges}, {"counts", histogram.counts}};
}

}  // namespace ensemble_lens::compat
