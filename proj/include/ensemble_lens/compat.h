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

// Pairwise model-compatibility measures ("compatimetrics").
//
// Regression measures compare two prediction vectors a and b through the
// per-observation difference d_i = |a_i - b_i|:
//
//   MSD   mean of (a_i - b_i)^2; RMSD is its square root.
//   SDR   fraction of d_i >= threshold (default SD(y), population).
//   AR    fraction of d_i <= SD(y) / xi (default xi = 50).
//   CRMSE RMSE of the averaged prediction (a_i + b_i) / 2.
//
// Classification measures work on label codes. The two-model confusion
// matrix sorts binary observations by actual class and by whether each model
// is right ("TFN": model 1 right, model 2 wrong, actual negative; "FTP":
// model 1 wrong, model 2 right, actual positive).

#ifndef ENSEMBLE_LENS_COMPAT_H_
#define ENSEMBLE_LENS_COMPAT_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ensemble_lens/bundle.h"
#include "ensemble_lens/metrics.h"
#include "json.hpp"

namespace ensemble_lens::compat {

inline constexpr double kDefaultXi = 50.0;

// All scalar functions throw Error(kLengthMismatch) on unequal lengths and
// Error(kEmptyTarget) on empty input.

double Msd(std::span<const double> a, std::span<const double> b);
double Rmsd(std::span<const double> a, std::span<const double> b);

// Throws Error(kNegativeThreshold).
double Sdr(std::span<const double> a, std::span<const double> b,
           double threshold);

// Throws Error(kXiOutOfRange) unless xi > 1.
double Ar(std::span<const double> a, std::span<const double> b,
          double target_std, double xi = kDefaultXi);

double Crmse(std::span<const double> a, std::span<const double> b,
             std::span<const double> y);

struct EightCellCounts {
  int64_t ttp = 0;
  int64_t tfp = 0;
  int64_t ftp = 0;
  int64_t ffp = 0;
  int64_t ffn = 0;
  int64_t ftn = 0;
  int64_t tfn = 0;
  int64_t ttn = 0;

  int64_t total() const { return ttp + tfp + ftp + ffp + ffn + ftn + tfn + ttn; }
  bool operator==(const EightCellCounts&) const = default;
};

// Binary label codes; `positive_code` marks the positive class and every other
// code counts as negative.
EightCellCounts TwoModelConfusion(std::span<const int> a, std::span<const int> b,
                                  std::span<const int> y, int positive_code);

// (TTP + TTN + FFP + FFN) / n.
double UniformityFromCounts(const EightCellCounts& counts);

// Fraction of identical labels; incompatibility is 1 - uniformity.
double Uniformity(std::span<const int> a, std::span<const int> b);
double Incompatibility(std::span<const int> a, std::span<const int> b);

// Mean over observations of (1[a_i = y_i] + 1[b_i = y_i]) / 2.
double AverageCollectiveScore(std::span<const int> a, std::span<const int> b,
                              std::span<const int> y);
// Element k-1 is the score averaged over the first k observations.
std::vector<double> AcsCumulative(std::span<const int> a, std::span<const int> b,
                                  std::span<const int> y);

struct CorrectnessLevels {
  double both_correct = 0.0;
  double exactly_one_correct = 0.0;
  double none_correct = 0.0;
};

CorrectnessLevels CorrectnessLevelsOf(std::span<const int> a,
                                      std::span<const int> b,
                                      std::span<const int> y);

// Per true class: fraction of its observations on which a and b disagree.
// nullopt for classes absent from y.
std::vector<std::optional<double>> DisagreementByClass(std::span<const int> a,
                                                       std::span<const int> b,
                                                       std::span<const int> y,
                                                       size_t num_classes);

// Labels of the averaged probability rows (a_i + b_i) / 2, ties to the lowest
// class index.
std::vector<int> AveragedArgmax(const ProbabilityMatrix& a,
                                const ProbabilityMatrix& b);

// Metrics of the joined prediction, named conjunctive_accuracy,
// conjunctive_precision, conjunctive_recall, conjunctive_f1.
metrics::MetricReport ConjunctiveClassificationMetrics(
    const ProbabilityMatrix& a, const ProbabilityMatrix& b,
    std::span<const int> y, TaskKind task, size_t num_classes,
    int positive_code);

// Fraction of observations both models get right.
double StrictConjunctiveAccuracy(std::span<const int> a, std::span<const int> b,
                                 std::span<const int> y);

struct Histogram {
  std::vector<double> edges;
  std::vector<int64_t> counts;
};

// Equal-width histogram of |a_i - b_i| over [0, max]; a zero maximum gives
// the single bin [0, 0]. Throws Error(kInvalidArgument) for bins == 0.
Histogram AbsDiffDistribution(std::span<const double> a,
                              std::span<const double> b, size_t bins);

// Bundle-level access.

enum class PairMetric {
  kMsd,
  kRmsd,
  kSdr,
  kAr,
  kCrmse,
  kUniformity,
  kIncompatibility,
  kAcs,
  kConjunctiveAccuracy,
  kConjunctivePrecision,
  kConjunctiveRecall,
  kConjunctiveF1,
  kStrictConjunctiveAccuracy,
};

// Case-insensitive. Throws Error(kInvalidArgument).
PairMetric ParsePairMetric(std::string_view name);
std::string_view PairMetricName(PairMetric metric);
bool AppliesTo(PairMetric metric, TaskKind task);
std::vector<PairMetric> MetricsFor(TaskKind task);

struct PairOptions {
  // SDR threshold; defaults to SD(y).
  std::optional<double> sdr_threshold;
  double xi = kDefaultXi;
  size_t histogram_bins = 20;
};

// Throws Error(kMetricTaskMismatch), Error(kMissingProbabilities) for the
// probability-averaged conjunctive metrics.
double PairValue(const EnsembleBundle& bundle, PairMetric metric, size_t a,
                 size_t b, const PairOptions& options = {});

metrics::PairMatrix CompatMatrix(const EnsembleBundle& bundle,
                                 PairMetric metric,
                                 const PairOptions& options = {});

// Every scalar compatimetric of one pair plus the per-pair series, as one
// document. Keys of scalar entries equal PairMetricName.
nlohmann::ordered_json PairDetail(const EnsembleBundle& bundle,
                                  std::string_view a_id, std::string_view b_id,
                                  const PairOptions& options = {});

nlohmann::ordered_json ToJson(const EightCellCounts& counts);
nlohmann::ordered_json ToJson(const CorrectnessLevels& levels);
nlohmann::ordered_json ToJson(const Histogram& histogram);

}  // namespace ensemble_lens::compat

#endif  // ENSEMBLE_LENS_COMPAT_H_
