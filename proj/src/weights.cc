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

#include "ensemble_lens/weights.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "ensemble_lens/csv.h"
#include "random.h"

namespace ensemble_lens::weights {
namespace {

using nlohmann::ordered_json;

std::string Lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Weighted mean of rows, clamped to the range of the contributing values so
// the result is a convex combination even after rounding.
std::vector<double> CombineValues(
    const std::vector<std::span<const double>>& members,
    std::span<const double> weights, size_t n) {
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) {
    bool first = true;
    double sum = 0.0, lo = 0.0, hi = 0.0;
    for (size_t j = 0; j < members.size(); ++j) {
      if (weights[j] == 0.0) continue;
      const double v = members[j][i];
      if (first) {
        sum = weights[j] * v;
        lo = hi = v;
        first = false;
      } else {
        sum += weights[j] * v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    out[i] = std::clamp(sum, lo, hi);
  }
  return out;
}

ProbabilityMatrix CombineProbabilities(
    const std::vector<const ProbabilityMatrix*>& members,
    std::span<const double> weights, size_t n, size_t k) {
  ProbabilityMatrix out(n, k);
  for (size_t j = 0; j < members.size(); ++j) {
    if (weights[j] == 0.0) continue;
    const ProbabilityMatrix& p = *members[j];
    for (size_t i = 0; i < n; ++i) {
      for (size_t c = 0; c < k; ++c) out.at(i, c) += weights[j] * p.at(i, c);
    }
  }
  return out;
}

std::vector<int> ArgMaxRows(const ProbabilityMatrix& p) {
  std::vector<int> codes(p.rows());
  for (size_t i = 0; i < p.rows(); ++i) codes[i] = ArgMax(p.row(i));
  return codes;
}

std::vector<MetricDelta> Deltas(const metrics::MetricReport& candidate,
                                const metrics::MetricReport& baseline) {
  std::vector<MetricDelta> out;
  for (const auto& metric : candidate.metrics) {
    const auto base = baseline.Get(metric.name);
    MetricDelta delta{metric.name, std::nullopt};
    if (metric.value && base) delta.value = *metric.value - *base;
    out.push_back(std::move(delta));
  }
  return out;
}

WhatIfSide EvaluateSide(const EnsembleBundle& bundle,
                        std::span<const double> candidate,
                        std::span<const double> baseline) {
  WhatIfSide side;
  side.candidate = metrics::EvaluatePredictions(
      bundle, EnsemblePredict(bundle, candidate), "candidate");
  side.baseline = metrics::EvaluatePredictions(
      bundle, EnsemblePredict(bundle, baseline), "baseline");
  side.delta = Deltas(side.candidate, side.baseline);
  return side;
}

void CheckHoldout(const EnsembleBundle& bundle, const EnsembleBundle& holdout) {
  if (bundle.task != holdout.task) {
    throw Error(ErrorCode::kBundleMismatch,
                "holdout task differs from the analysed bundle");
  }
  if (bundle.class_labels != holdout.class_labels) {
    throw Error(ErrorCode::kBundleMismatch,
                "holdout class labels differ from the analysed bundle");
  }
  const auto ids = bundle.ModelIds();
  const auto other = holdout.ModelIds();
  if (std::set<std::string>(ids.begin(), ids.end()) !=
          std::set<std::string>(other.begin(), other.end()) ||
      ids.size() != other.size()) {
    throw Error(ErrorCode::kBundleMismatch,
                "holdout model ids differ from the analysed bundle");
  }
}

// Re-indexes a weight vector from `from`'s model order into `to`'s.
std::vector<double> Reindex(const EnsembleBundle& from, const EnsembleBundle& to,
                            std::span<const double> weights) {
  std::vector<double> out(to.num_models());
  for (size_t j = 0; j < from.num_models(); ++j) {
    out[to.ModelIndex(from.models[j].id)] = weights[j];
  }
  return out;
}

ordered_json WeightMap(const std::vector<std::string>& ids,
                       std::span<const double> weights) {
  ordered_json out = ordered_json::object();
  for (size_t j = 0; j < ids.size(); ++j) out[ids[j]] = weights[j];
  return out;
}

ordered_json DeltaJson(const std::vector<MetricDelta>& deltas) {
  ordered_json out = ordered_json::object();
  for (const auto& delta : deltas) {
    out[delta.name] = delta.value && std::isfinite(*delta.value)
                          ? ordered_json(*delta.value)
                          : ordered_json(nullptr);
  }
  return out;
}

ordered_json SideJson(const WhatIfSide& side) {
  ordered_json out;
  out["candidate"] = metrics::ToJson(side.candidate);
  out["baseline"] = metrics::ToJson(side.baseline);
  out["delta"] = DeltaJson(side.delta);
  return out;
}

class EnsemblePredictor final : public predictor::Predictor {
 public:
  EnsemblePredictor(
      std::vector<std::shared_ptr<const predictor::Predictor>> members,
      std::vector<double> weights, TaskKind task,
      std::vector<std::string> class_labels)
      : Predictor(task, std::move(class_labels),
                  {std::numeric_limits<size_t>::max(), true}),
        members_(std::move(members)),
        weights_(std::move(weights)) {}

 protected:
  PredictionSet PredictBatch(const FeatureTable& rows) const override {
    const size_t n = rows.num_rows;
    std::vector<PredictionSet> outputs(members_.size());
    for (size_t j = 0; j < members_.size(); ++j) {
      if (weights_[j] == 0.0) continue;
      outputs[j] = members_[j]->Predict(rows);
    }
    PredictionSet out;
    if (task_ == TaskKind::kRegression) {
      std::vector<std::span<const double>> values;
      for (const auto& output : outputs) values.emplace_back(output.values);
      out.values = CombineValues(values, weights_, n);
      return out;
    }
    std::vector<const ProbabilityMatrix*> probabilities;
    for (size_t j = 0; j < outputs.size(); ++j) {
      if (weights_[j] == 0.0) {
        probabilities.push_back(nullptr);
        continue;
      }
      if (!outputs[j].probabilities) {
        throw Error(ErrorCode::kMissingProbabilities,
                    "ensemble member " + std::to_string(j) +
                        " returns labels only; the ensemble needs "
                        "probabilities");
      }
      probabilities.push_back(&*outputs[j].probabilities);
    }
    out.probabilities =
        CombineProbabilities(probabilities, weights_, n, class_labels_.size());
    out.codes = ArgMaxRows(*out.probabilities);
    return out;
  }

 private:
  std::vector<std::shared_ptr<const predictor::Predictor>> members_;
  std::vector<double> weights_;
};

}  // namespace

std::vector<double> NormalizeWeights(std::span<const double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "weights must be finite and non-negative");
    }
    sum += w;
  }
  if (!(sum > 0.0)) {
    throw Error(ErrorCode::kZeroWeightSum, "weights sum to zero");
  }
  std::vector<double> out(weights.size());
  for (size_t j = 0; j < weights.size(); ++j) out[j] = weights[j] / sum;
  return out;
}

std::vector<double> WeightsFromMap(const EnsembleBundle& bundle,
                                   const std::map<std::string, double>& weights) {
  std::vector<double> out(bundle.num_models());
  for (const auto& [id, w] : weights) {
    size_t j = 0;
    try {
      j = bundle.ModelIndex(id);
    } catch (const Error&) {
      throw Error(ErrorCode::kBundleMismatch,
                  "weight given for unknown model \"" + id + "\"");
    }
    out[j] = w;
  }
  for (const auto& model : bundle.models) {
    if (!weights.contains(model.id)) {
      throw Error(ErrorCode::kBundleMismatch,
                  "no weight given for model \"" + model.id + "\"");
    }
  }
  return out;
}

namespace {

std::string_view Trim(std::string_view text) {
  const size_t first = text.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const size_t last = text.find_last_not_of(" \t");
  return text.substr(first, last - first + 1);
}

}  // namespace

std::map<std::string, double> ParseWeightAssignments(std::string_view text) {
  std::map<std::string, double> out;
  size_t start = 0;
  while (start <= text.size()) {
    const size_t comma = text.find(',', start);
    const std::string_view item =
        text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                           : comma - start);
    const size_t eq = item.find('=');
    const std::string_view id =
        eq == std::string_view::npos ? item : Trim(item.substr(0, eq));
    if (eq == std::string_view::npos || id.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "expected id=weight, got \"" + std::string(item) + "\"");
    }
    const auto value = csv::ParseNumber(item.substr(eq + 1));
    if (!value) {
      throw Error(ErrorCode::kInvalidArgument,
                  "weight \"" + std::string(item.substr(eq + 1)) +
                      "\" is not a number");
    }
    if (!out.emplace(std::string(id), *value).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "model \"" + std::string(id) +
                      "\" assigned twice");
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

PredictionSet EnsemblePredict(const EnsembleBundle& bundle,
                              std::span<const double> weights) {
  if (weights.size() != bundle.num_models()) {
    throw Error(ErrorCode::kBundleMismatch,
                "got " + std::to_string(weights.size()) + " weights for " +
                    std::to_string(bundle.num_models()) + " models");
  }
  const std::vector<double> w = NormalizeWeights(weights);
  const size_t n = bundle.num_rows();
  PredictionSet out;
  if (bundle.task == TaskKind::kRegression) {
    std::vector<std::span<const double>> values;
    for (const auto& model : bundle.models) values.emplace_back(model.values);
    out.values = CombineValues(values, w, n);
    return out;
  }

  std::string missing;
  std::vector<const ProbabilityMatrix*> probabilities;
  for (size_t j = 0; j < bundle.num_models(); ++j) {
    const ModelEntry& model = bundle.models[j];
    if (w[j] > 0.0 && !model.probabilities) {
      missing += (missing.empty() ? "" : ", ") + model.id;
    }
    probabilities.push_back(model.probabilities ? &*model.probabilities
                                                : nullptr);
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::kMissingProbabilities,
                "weighted classification ensembles need probabilities; "
                "missing for: " + missing);
  }
  out.probabilities =
      CombineProbabilities(probabilities, w, n, bundle.class_labels.size());
  out.codes = ArgMaxRows(*out.probabilities);
  return out;
}

WhatIfReport EvaluateWeights(const EnsembleBundle& bundle,
                             std::span<const double> weights,
                             const EnsembleBundle* holdout) {
  if (weights.size() != bundle.num_models()) {
    throw Error(ErrorCode::kBundleMismatch,
                "got " + std::to_string(weights.size()) + " weights for " +
                    std::to_string(bundle.num_models()) + " models");
  }
  WhatIfReport report;
  report.ids = bundle.ModelIds();
  report.weights.assign(weights.begin(), weights.end());
  report.normalized_weights = NormalizeWeights(weights);
  report.baseline_weights = bundle.Weights();
  report.active_model_count = static_cast<size_t>(
      std::count_if(weights.begin(), weights.end(),
                    [](double w) { return w > 0.0; }));
  report.primary = EvaluateSide(bundle, weights, report.baseline_weights);
  if (holdout != nullptr) {
    CheckHoldout(bundle, *holdout);
    report.holdout =
        EvaluateSide(*holdout, Reindex(bundle, *holdout, weights),
                     Reindex(bundle, *holdout, report.baseline_weights));
  }
  return report;
}

Objective ParseObjective(TaskKind task, std::string_view metric,
                         std::optional<std::string_view> direction) {
  const std::string name = Lower(metric);
  Objective objective;
  if (task == TaskKind::kRegression) {
    if (name == "mse" || name == "rmse" || name == "mae" || name == "mape" ||
        name == "r2") {
      objective.metric = name == "r2" ? "R2" : [&] {
        std::string upper = name;
        std::transform(upper.begin(), upper.end(), upper.begin(),
                       [](unsigned char c) { return std::toupper(c); });
        return upper;
      }();
      objective.maximize = name == "r2";
    }
  } else if (name == "accuracy" || name == "precision" || name == "recall" ||
             name == "f1") {
    objective.metric = name;
    objective.maximize = true;
  }
  if (objective.metric.empty()) {
    throw Error(ErrorCode::kInvalidObjective,
                "\"" + std::string(metric) + "\" is not a " +
                    std::string(TaskKindName(task)) + " metric");
  }
  if (direction) {
    const std::string d = Lower(*direction);
    if (d == "min" || d == "minimize") {
      objective.maximize = false;
    } else if (d == "max" || d == "maximize") {
      objective.maximize = true;
    } else {
      throw Error(ErrorCode::kInvalidObjective,
                  "direction must be minimize or maximize");
    }
  }
  return objective;
}

double ObjectiveValue(const EnsembleBundle& bundle, const Objective& objective,
                      std::span<const double> weights) {
  const metrics::MetricReport report = metrics::EvaluatePredictions(
      bundle, EnsemblePredict(bundle, weights), "candidate");
  const auto value = report.Get(objective.metric);
  if (!value) {
    throw Error(ErrorCode::kInvalidObjective,
                objective.metric + " is undefined on this bundle");
  }
  return *value;
}

WeightProposal SuggestWeights(const EnsembleBundle& bundle,
                              const Objective& objective, size_t budget,
                              uint64_t seed) {
  const size_t m = bundle.num_models();
  if (budget < m) {
    throw Error(ErrorCode::kBudgetTooSmall,
                "budget " + std::to_string(budget) +
                    " is smaller than the number of models (" +
                    std::to_string(m) + ")");
  }
  ParseObjective(bundle.task, objective.metric);

  auto better = [&](double candidate, double incumbent) {
    return objective.maximize ? candidate > incumbent : candidate < incumbent;
  };

  WeightProposal proposal;
  proposal.ids = bundle.ModelIds();
  proposal.objective = objective;
  proposal.budget = budget;
  proposal.seed = seed;

  std::vector<double> current = NormalizeWeights(bundle.Weights());
  double best = ObjectiveValue(bundle, objective, current);
  size_t evaluations = 1;
  proposal.baseline_value = best;
  proposal.trajectory.emplace_back(evaluations, best);

  std::mt19937_64 rng(seed);
  std::vector<size_t> order(m);
  bool improved = true;
  while (improved && evaluations < budget) {
    improved = false;
    std::iota(order.begin(), order.end(), size_t{0});
    internal::Shuffle(order, rng);
    for (size_t j : order) {
      if (evaluations >= budget) break;
      if (current[j] == 0.0) continue;
      std::optional<std::vector<double>> step;
      double step_value = best;
      size_t step_index = 0;
      for (double multiplier : kSearchMultipliers) {
        if (multiplier == 1.0) continue;
        if (evaluations >= budget) break;
        std::vector<double> candidate = current;
        candidate[j] *= multiplier;
        if (!(std::accumulate(candidate.begin(), candidate.end(), 0.0) > 0.0)) {
          continue;
        }
        candidate = NormalizeWeights(candidate);
        const double value = ObjectiveValue(bundle, objective, candidate);
        ++evaluations;
        if (better(value, step_value)) {
          step = std::move(candidate);
          step_value = value;
          step_index = evaluations;
        }
      }
      if (step) {
        current = std::move(*step);
        best = step_value;
        proposal.trajectory.emplace_back(step_index, best);
        improved = true;
      }
    }
  }
  proposal.weights = std::move(current);
  proposal.objective_value = best;
  proposal.evaluations_used = evaluations;
  return proposal;
}

std::shared_ptr<const predictor::Predictor> MakeEnsemblePredictor(
    std::vector<std::shared_ptr<const predictor::Predictor>> members,
    std::span<const double> weights, TaskKind task,
    std::vector<std::string> class_labels) {
  if (members.size() != weights.size()) {
    throw Error(ErrorCode::kBundleMismatch,
                "ensemble predictor needs one weight per member");
  }
  std::vector<double> normalized = NormalizeWeights(weights);
  for (size_t j = 0; j < members.size(); ++j) {
    if (normalized[j] > 0.0 && members[j] == nullptr) {
      throw Error(ErrorCode::kPredictorUnavailable,
                  "ensemble member " + std::to_string(j) + " has no predictor");
    }
  }
  return std::make_shared<EnsemblePredictor>(std::move(members),
                                             std::move(normalized), task,
                                             std::move(class_labels));
}

nlohmann::ordered_json ToJson(const WhatIfReport& report) {
  ordered_json out;
  out["ids"] = report.ids;
  out["weights"] = WeightMap(report.ids, report.weights);
  out["normalized_weights"] = WeightMap(report.ids, report.normalized_weights);
  out["baseline_weights"] = WeightMap(report.ids, report.baseline_weights);
  out["active_model_count"] = report.active_model_count;
  const ordered_json primary = SideJson(report.primary);
  out["candidate"] = primary["candidate"];
  out["baseline"] = primary["baseline"];
  out["delta"] = primary["delta"];
  if (report.holdout) out["holdout"] = SideJson(*report.holdout);
  return out;
}

nlohmann::ordered_json ToJson(const WeightProposal& proposal) {
  ordered_json out;
  out["weights"] = WeightMap(proposal.ids, proposal.weights);
  out["objective_name"] = proposal.objective.metric;
  out["direction"] = proposal.objective.maximize ? "maximize" : "minimize";
  out["objective_value"] = proposal.objective_value;
  out["baseline_value"] = proposal.baseline_value;
  out["evaluations_used"] = proposal.evaluations_used;
  out["budget"] = proposal.budget;
  out["seed"] = proposal.seed;
  ordered_json trajectory = ordered_json::array();
  for (const auto& [index, value] : proposal.trajectory) {
    trajectory.push_back({index, value});
  }
  out["trajectory"] = std::move(trajectory);
  return out;
}

}  // namespace ensemble_lens::weights
