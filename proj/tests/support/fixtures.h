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

// Deterministic bundles and random inputs shared by the test suites.

#ifndef ENSEMBLE_LENS_TESTS_SUPPORT_FIXTURES_H_
#define ENSEMBLE_LENS_TESTS_SUPPORT_FIXTURES_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ensemble_lens/bundle.h"
#include "json.hpp"

namespace ensemble_lens::testing {

using Rng = std::mt19937_64;

std::vector<double> RandomReals(Rng& rng, size_t n, double lo, double hi);
std::vector<int> RandomCodes(Rng& rng, size_t n, int k);
// Rows drawn from a flat Dirichlet, occasionally with exact ties.
ProbabilityMatrix RandomProbabilities(Rng& rng, size_t n, size_t k);
std::vector<int> ArgMaxCodes(const ProbabilityMatrix& p);

// Models "m0", "m1", ... with the given predictions and weights (default 1)
// and no features.
EnsembleBundle RegressionFromVectors(const std::vector<std::vector<double>>& predictions,
                                     const std::vector<double>& y,
                                     std::vector<double> weights = {});

// Class labels "c0", "c1", ...; probabilities are optional per model.
EnsembleBundle ClassificationFromCodes(
    TaskKind task, size_t k, const std::vector<std::vector<int>>& predictions,
    const std::vector<int>& y,
    const std::vector<std::optional<ProbabilityMatrix>>& probabilities = {},
    std::vector<double> weights = {});

// Features x1, x2, x3 (numeric) and color (red/green/blue); three models with
// built-in predictors that ignore x3:
//   lin_a  1 + 2*x1 - x2 + {red: 0.5, blue: -1}[color]
//   lin_b  0.5 + 1.5*x1 + 0.25*x2
//   tree_c x1 <= 0.5 ? 1 : 3
// Stored predictions equal the predictors' outputs.
EnsembleBundle MakeLinearRegressionFixture(size_t n = 120, uint64_t seed = 11);

// Six regression models on n observations: four track the target with small
// independent errors, noise_1 and noise_2 are independent of it. Manifest
// weights are uniform.
EnsembleBundle MakeNoiseFixture(size_t n = 400, uint64_t seed = 5);

// Logistic built-ins over x1, x2 with stored probabilities. Binary uses labels
// no/yes, multiclass a/b/c.
EnsembleBundle MakeClassificationFixture(TaskKind task, size_t n = 150,
                                         uint64_t seed = 3);

// Fresh empty directory under the system temp dir.
std::filesystem::path MakeTempDir(const std::string& prefix);

}  // namespace ensemble_lens::testing

#endif  // ENSEMBLE_LENS_TESTS_SUPPORT_FIXTURES_H_
