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

#include "oracle_checks.h"

#include <cmath>
#include <sstream>

#include "ensemble_lens/compat.h"
#include "oracles.h"

namespace ensemble_lens::testing {
namespace {

std::string Describe(const std::string& what, double actual, double expected) {
  std::ostringstream out;
  out.precision(17);
  out << what << ": library " << actual << ", oracle " << expected;
  return out.str();
}

std::vector<std::vector<double>> Rows(const ProbabilityMatrix& p) {
  std::vector<std::vector<double>> out(p.rows());
  for (size_t i = 0; i < p.rows(); ++i) out[i].assign(p.row(i).begin(), p.row(i).end());
  return out;
}

}  // namespace

void CheckTally::Exact(const std::string& what, double actual, double expected) {
  ++comparisons;
  // NaN never compares equal, so undefined on both sides is spelled out.
  if (actual == expected || (std::isnan(actual) && std::isnan(expected))) return;
  failures.push_back(Describe(what, actual, expected));
}

void CheckTally::Relative(const std::string& what, double actual, double expected,
                          double tol) {
  ++comparisons;
  const double scale = std::max(std::fabs(expected), 1e-300);
  if (std::fabs(actual - expected) <= tol * scale) return;
  failures.push_back(Describe(what, actual, expected));
}

RegressionTriple RandomRegressionTriple(Rng& rng, size_t max_n) {
  const size_t n = 2 + rng() % (max_n - 1);
  RegressionTriple t;
  const double scale = std::pow(10.0, static_cast<int>(rng() % 7) - 3);
  t.y = RandomReals(rng, n, -scale, scale);
  t.a = RandomReals(rng, n, -scale, scale);
  t.b = RandomReals(rng, n, -scale, scale);
  std::uniform_int_distribution<int> tie(0, 4);
  for (size_t i = 0; i < n; ++i) {
    if (tie(rng) == 0) t.b[i] = t.a[i];
  }
  return t;
}

ClassificationTriple RandomClassificationTriple(Rng& rng, size_t max_n, bool binary) {
  ClassificationTriple t;
  t.task = binary ? TaskKind::kBinary : TaskKind::kMulticlass;
  t.k = binary ? 2 : 3 + rng() % 4;
  const size_t n = 2 + rng() % (max_n - 1);
  t.pa = RandomProbabilities(rng, n, t.k);
  t.pb = RandomProbabilities(rng, n, t.k);
  // Shared rows make the averaged argmax tie-heavy.
  std::uniform_int_distribution<int> copy(0, 5);
  for (size_t i = 0; i < n; ++i) {
    if (copy(rng) == 0) {
      for (size_t c = 0; c < t.k; ++c) t.pb.at(i, c) = t.pa.at(i, c);
    }
  }
  t.a = ArgMaxCodes(t.pa);
  t.b = ArgMaxCodes(t.pb);
  t.y = RandomCodes(rng, n, static_cast<int>(t.k));
  return t;
}

void CheckRegressionTriple(const RegressionTriple& t, CheckTally& tally) {
  const double sd = TargetStd(t.y);
  tally.Relative("SD(y)", sd, oracle::PopulationStd(t.y));
  tally.Relative("MSD", compat::Msd(t.a, t.b), oracle::Msd(t.a, t.b));
  tally.Relative("RMSD", compat::Rmsd(t.a, t.b), oracle::Rmsd(t.a, t.b));
  tally.Relative("CRMSE", compat::Crmse(t.a, t.b, t.y), oracle::Crmse(t.a, t.b, t.y));
  for (double threshold : {sd, 0.0, sd / 3, 2 * sd}) {
    tally.Exact("SDR", compat::Sdr(t.a, t.b, threshold), oracle::Sdr(t.a, t.b, threshold));
  }
  for (double xi : {compat::kDefaultXi, 1.5, 4.0, 1e6}) {
    tally.Exact("AR", compat::Ar(t.a, t.b, sd, xi), oracle::Ar(t.a, t.b, sd, xi));
  }
}

void CheckClassificationTriple(const ClassificationTriple& t, CheckTally& tally) {
  const auto& a = t.a;
  const auto& b = t.b;
  const auto& y = t.y;
  tally.Exact("uniformity", compat::Uniformity(a, b), oracle::Uniformity(a, b));
  tally.Exact("incompatibility", compat::Incompatibility(a, b), oracle::Incompatibility(a, b));
  tally.Exact("ACS", compat::AverageCollectiveScore(a, b, y), oracle::Acs(a, b, y));
  const auto cumulative = compat::AcsCumulative(a, b, y);
  const auto cumulative_oracle = oracle::AcsCumulative(a, b, y);
  for (size_t i = 0; i < cumulative.size(); ++i) {
    tally.Exact("ACS cumulative", cumulative[i], cumulative_oracle[i]);
  }
  const auto levels = compat::CorrectnessLevelsOf(a, b, y);
  const auto levels_oracle = oracle::CorrectnessLevels(a, b, y);
  tally.Exact("both correct", levels.both_correct, levels_oracle[0]);
  tally.Exact("one correct", levels.exactly_one_correct, levels_oracle[1]);
  tally.Exact("none correct", levels.none_correct, levels_oracle[2]);
  const auto by_class = compat::DisagreementByClass(a, b, y, t.k);
  const auto by_class_oracle = oracle::DisagreementByClass(a, b, y, static_cast<int>(t.k));
  for (size_t c = 0; c < t.k; ++c) {
    tally.Exact("disagreement present", by_class[c].has_value(),
                by_class_oracle[c].has_value());
    if (by_class[c] && by_class_oracle[c]) {
      tally.Exact("disagreement", *by_class[c], *by_class_oracle[c]);
    }
  }
  tally.Exact("strict conjunctive accuracy", compat::StrictConjunctiveAccuracy(a, b, y),
              oracle::StrictConjunctiveAccuracy(a, b, y));

  const auto joined = compat::AveragedArgmax(t.pa, t.pb);
  const auto joined_oracle = oracle::AveragedLabels(Rows(t.pa), Rows(t.pb));
  size_t mismatched = 0;
  for (size_t i = 0; i < joined.size(); ++i) mismatched += joined[i] != joined_oracle[i];
  tally.Exact("averaged argmax mismatches", static_cast<double>(mismatched), 0.0);
  const auto report = compat::ConjunctiveClassificationMetrics(
      t.pa, t.pb, y, t.task, t.k, /*positive_code=*/1);
  const auto scores = oracle::Classification(joined_oracle, y, static_cast<int>(t.k),
                                             t.task == TaskKind::kBinary, 1);
  tally.Exact("conjunctive accuracy", *report.Get("conjunctive_accuracy"), scores.accuracy);
  tally.Relative("conjunctive precision", *report.Get("conjunctive_precision"),
                 scores.precision);
  tally.Relative("conjunctive recall", *report.Get("conjunctive_recall"), scores.recall);
  tally.Relative("conjunctive f1", *report.Get("conjunctive_f1"), scores.f1);

  if (t.task == TaskKind::kBinary) {
    const auto cells = compat::TwoModelConfusion(a, b, y, 1);
    const auto o = oracle::EightCells(a, b, y, 1);
    const int64_t lib[8] = {cells.ttp, cells.tfp, cells.ftp, cells.ffp,
                            cells.ffn, cells.ftn, cells.tfn, cells.ttn};
    const int64_t ref[8] = {o.ttp, o.tfp, o.ftp, o.ffp, o.ffn, o.ftn, o.tfn, o.ttn};
    for (int c = 0; c < 8; ++c) {
      tally.Exact("eight-cell count", static_cast<double>(lib[c]), static_cast<double>(ref[c]));
    }
    tally.Exact("uniformity from counts", compat::UniformityFromCounts(cells),
                oracle::Uniformity(a, b));
  }
}

}  // namespace ensemble_lens::testing
