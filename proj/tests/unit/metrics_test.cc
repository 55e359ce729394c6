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

#include <cmath>

#include <gtest/gtest.h>

#include "ensemble_lens/weights.h"
#include "fixtures.h"
#include "oracles.h"

namespace ensemble_lens::metrics {
namespace {

using testing::Rng;

void ExpectRel(double actual, double expected, double tol = 1e-12) {
  EXPECT_LE(std::fabs(actual - expected), tol * std::max(1.0, std::fabs(expected)))
      << actual << " vs " << expected;
}

bool HasWarning(const MetricReport& r, const std::string& code) {
  for (const auto& w : r.warnings) {
    if (w.code == code) return true;
  }
  return false;
}

TEST(RegressionMetrics, PerfectPrediction) {
  const std::vector<double> y = {1, 2, 3, 7};
  const MetricReport r = RegressionMetrics(y, y);
  EXPECT_EQ(r.Get("MSE"), 0.0);
  EXPECT_EQ(r.Get("RMSE"), 0.0);
  EXPECT_EQ(r.Get("R2"), 1.0);
}

TEST(RegressionMetrics, TwoPointExample) {
  const std::vector<double> y = {1, 2}, pred = {2, 2};
  const MetricReport r = RegressionMetrics(pred, y);
  EXPECT_EQ(r.Get("MSE"), 0.5);
  EXPECT_EQ(r.Get("MAE"), 0.5);
  EXPECT_EQ(r.Get("MAPE"), 0.5);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(RegressionMetrics, ZeroTargetDropsMape) {
  const std::vector<double> y = {0, 2}, pred = {1, 1};
  const MetricReport r = RegressionMetrics(pred, y);
  EXPECT_EQ(r.Get("MSE"), 1.0);
  EXPECT_TRUE(r.Has("MAPE"));
  EXPECT_FALSE(r.Get("MAPE"));
  EXPECT_TRUE(HasWarning(r, "ZeroTargetForMAPE"));
  EXPECT_TRUE(ToJson(r)["metrics"]["MAPE"].is_null());
}

TEST(RegressionMetrics, ConstantTargetLeavesR2Undefined) {
  const std::vector<double> y = {5, 5, 5}, pred = {4, 5, 6};
  const MetricReport r = RegressionMetrics(pred, y);
  EXPECT_FALSE(r.Get("R2"));
  EXPECT_TRUE(HasWarning(r, "DegenerateR2"));
}

TEST(RegressionMetrics, Errors) {
  const std::vector<double> a = {1, 2}, b = {1};
  EXPECT_THROW(RegressionMetrics(a, b), Error);
  EXPECT_THROW(RegressionMetrics(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST(RegressionMetrics, MatchOracleOnRandomInputs) {
  Rng rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    const size_t n = 1 + rng() % 120;
    const auto y = testing::RandomReals(rng, n, 0.5, 20.0);
    const auto pred = testing::RandomReals(rng, n, -5.0, 25.0);
    const MetricReport r = RegressionMetrics(pred, y);
    ExpectRel(*r.Get("MSE"), oracle::Mse(pred, y));
    ExpectRel(*r.Get("RMSE"), oracle::Rmse(pred, y));
    ExpectRel(*r.Get("MAE"), oracle::Mae(pred, y));
    ExpectRel(*r.Get("MAPE"), *oracle::Mape(pred, y));
    const auto r2 = oracle::R2(pred, y);
    if (r2) ExpectRel(*r.Get("R2"), *r2, 1e-10);
  }
}

TEST(ClassificationMetrics, PerfectPrediction) {
  const std::vector<int> y = {0, 1, 2, 1};
  const MetricReport r = ClassificationMetrics(y, y, TaskKind::kMulticlass, 3, 1);
  for (const char* name : {"accuracy", "precision", "recall", "f1"}) EXPECT_EQ(r.Get(name), 1.0);
}

TEST(ClassificationMetrics, BinaryExample) {
  const std::vector<int> y = {1, 1, 0, 0}, pred = {1, 0, 0, 0};
  const MetricReport r = ClassificationMetrics(pred, y, TaskKind::kBinary, 2, 1);
  EXPECT_EQ(r.Get("accuracy"), 0.75);
  EXPECT_EQ(r.Get("precision"), 1.0);
  EXPECT_EQ(r.Get("recall"), 0.5);
  ExpectRel(*r.Get("f1"), 2.0 / 3.0);
}

TEST(ClassificationMetrics, MulticlassMacroExample) {
  const std::vector<int> y = {0, 1, 2}, pred = {0, 0, 0};
  const MetricReport r = ClassificationMetrics(pred, y, TaskKind::kMulticlass, 3, 1);
  ExpectRel(*r.Get("accuracy"), 1.0 / 3.0);
  ExpectRel(*r.Get("precision"), 1.0 / 9.0);
  EXPECT_TRUE(HasWarning(r, "ZeroDivision"));
}

TEST(ClassificationMetrics, UnknownCodeIsRejected) {
  const std::vector<int> y = {0, 1}, pred = {0, 5};
  try {
    ClassificationMetrics(pred, y, TaskKind::kBinary, 2, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownLabel);
  }
}

TEST(ClassificationMetrics, MatchOracleOnRandomInputs) {
  Rng rng(202);
  for (int trial = 0; trial < 400; ++trial) {
    const bool binary = trial % 2 == 0;
    const int k = binary ? 2 : 3 + static_cast<int>(rng() % 4);
    const size_t n = 1 + rng() % 150;
    const auto y = testing::RandomCodes(rng, n, k);
    const auto pred = testing::RandomCodes(rng, n, k);
    const MetricReport r = ClassificationMetrics(
        pred, y, binary ? TaskKind::kBinary : TaskKind::kMulticlass, k, 1);
    const auto o = oracle::Classification(pred, y, k, binary, 1);
    EXPECT_EQ(*r.Get("accuracy"), o.accuracy);
    ExpectRel(*r.Get("precision"), o.precision);
    ExpectRel(*r.Get("recall"), o.recall);
    ExpectRel(*r.Get("f1"), o.f1);
  }
}

TEST(MetricsTable, EnsembleFirstThenModels) {
  const auto b = testing::MakeLinearRegressionFixture();
  const auto table = MetricsTable(b);
  ASSERT_EQ(table.size(), 4u);
  EXPECT_EQ(table[0].model_id, "ensemble");
  EXPECT_EQ(table[1].model_id, "lin_a");
  EXPECT_EQ(table[3].model_id, "tree_c");
  const auto oracle_rmse = oracle::Rmse(b.models[1].values, b.dataset.target_values);
  ExpectRel(*table[2].Get("RMSE"), oracle_rmse);
}

TEST(MetricsTable, OneHotWeightsReproduceComponent) {
  auto b = testing::MakeLinearRegressionFixture();
  for (auto& m : b.models) m.weight = 0.0;
  b.models[0].weight = 1.0;
  const auto table = MetricsTable(b);
  EXPECT_EQ(table[0].metrics, table[1].metrics);
}

TEST(MetricsTable, StoredEnsembleWins) {
  auto b = testing::MakeNoiseFixture(50);
  b.ensemble_values = b.dataset.target_values;
  const auto table = MetricsTable(b);
  EXPECT_EQ(table[0].Get("RMSE"), 0.0);
}

TEST(MetricsTable, ClassificationEnsembleUsesProbabilities) {
  const auto b = testing::MakeClassificationFixture(TaskKind::kMulticlass);
  const auto table = MetricsTable(b);
  const PredictionSet joint = weights::EnsemblePredict(b, b.Weights());
  EXPECT_EQ(table[0].metrics,
            EvaluatePredictions(b, joint, "ensemble").metrics);
}

TEST(Correlation, Examples) {
  const std::vector<double> a = {1, 2, 3}, b = {3, 2, 1};
  EXPECT_EQ(Pearson(a, b), -1.0);
  EXPECT_EQ(Pearson(a, a), 1.0);
  EXPECT_EQ(Spearman(a, b), -1.0);
  // 2x2 table with p_o = p_e = 0.5.
  const std::vector<int> x = {0, 0, 1, 1}, y = {0, 1, 0, 1};
  EXPECT_EQ(CohenKappa(x, y, 2), 0.0);
  EXPECT_EQ(CohenKappa(x, x, 2), 1.0);
}

TEST(Correlation, ConstantVectorIsUndefined) {
  const std::vector<double> a = {1, 1, 1}, b = {1, 2, 3};
  EXPECT_TRUE(std::isnan(Pearson(a, b)));
}

TEST(Correlation, SpearmanUsesRanks) {
  const std::vector<double> a = {1, 2, 3, 4}, b = {1, 8, 27, 64};
  EXPECT_EQ(Spearman(a, b), 1.0);
  const std::vector<double> ties = {1, 1, 2, 2};
  // Average ranks (1.5, 1.5, 3.5, 3.5) against (1, 2, 3, 4).
  ExpectRel(Spearman(a, ties), oracle::Pearson({1, 2, 3, 4}, {1.5, 1.5, 3.5, 3.5}));
}

TEST(Correlation, MatchesOracle) {
  Rng rng(303);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 3 + rng() % 100;
    const auto a = testing::RandomReals(rng, n, -1, 1);
    const auto b = testing::RandomReals(rng, n, -1, 1);
    ExpectRel(Pearson(a, b), oracle::Pearson(a, b), 1e-11);
    const int k = 2 + static_cast<int>(rng() % 3);
    const auto x = testing::RandomCodes(rng, n, k);
    const auto y = testing::RandomCodes(rng, n, k);
    ExpectRel(CohenKappa(x, y, k), oracle::Kappa(x, y, k), 1e-12);
  }
}

TEST(CorrelationMatrix, TaskChecks) {
  const auto reg = testing::MakeNoiseFixture(40);
  const auto m = PredictionCorrelationMatrix(reg, CorrelationMethod::kPearson);
  ASSERT_EQ(m.ids.size(), 6u);
  for (size_t i = 0; i < 6; ++i) EXPECT_EQ(m.values[i][i], 1.0);
  EXPECT_EQ(m.values[0][1], m.values[1][0]);
  try {
    PredictionCorrelationMatrix(reg, CorrelationMethod::kKappa);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMethodTaskMismatch);
  }
  const auto cls = testing::MakeClassificationFixture(TaskKind::kBinary);
  EXPECT_THROW(PredictionCorrelationMatrix(cls, CorrelationMethod::kSpearman), Error);
  EXPECT_EQ(ParseCorrelationMethod("kappa"), CorrelationMethod::kKappa);
  EXPECT_THROW(ParseCorrelationMethod("tau"), Error);
}

TEST(CompareMatrix, RawAndScaledResiduals) {
  // y = [10, 2, 10, 2] has SD 4.
  const auto b = testing::RegressionFromVectors({{12, 2, 10, 2}, {10, 2, 10, 2}}, {10, 2, 10, 2});
  const CompareMatrix c = PredictionCompareMatrix(b);
  EXPECT_EQ(c.target_std, 4.0);
  EXPECT_EQ(c.raw[0][0], 2.0);
  EXPECT_EQ(c.scaled[0][0], 0.5);
  EXPECT_EQ(c.raw[1][0], 0.0);
}

TEST(CompareMatrix, ClassificationCells) {
  const auto b = testing::ClassificationFromCodes(TaskKind::kBinary, 2, {{1, 0}, {0, 0}}, {0, 0});
  const CompareMatrix c = PredictionCompareMatrix(b);
  EXPECT_FALSE(c.cells[0][0].correct);
  EXPECT_EQ(c.cells[0][0].predicted, 1);
  EXPECT_TRUE(c.cells[1][1].correct);
  const auto doc = ToJson(c, b);
  EXPECT_TRUE(doc.is_object());
}

}  // namespace
}  // namespace ensemble_lens::metrics
