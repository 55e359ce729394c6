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

// Library-versus-oracle comparison of every scalar compatimetric on one random
// triple. Shared by the unit suite and the acceptance report.

#ifndef ENSEMBLE_LENS_TESTS_SUPPORT_ORACLE_CHECKS_H_
#define ENSEMBLE_LENS_TESTS_SUPPORT_ORACLE_CHECKS_H_

#include <string>
#include <vector>

#include "ensemble_lens/bundle.h"
#include "fixtures.h"

namespace ensemble_lens::testing {

struct CheckTally {
  size_t comparisons = 0;
  std::vector<std::string> failures;

  void Exact(const std::string& what, double actual, double expected);
  // |actual - expected| <= tol * max(|expected|, tiny).
  void Relative(const std::string& what, double actual, double expected, double tol = 1e-12);
  bool ok() const { return failures.empty(); }
};

struct RegressionTriple {
  std::vector<double> a, b, y;
};

struct ClassificationTriple {
  TaskKind task = TaskKind::kBinary;
  size_t k = 2;
  ProbabilityMatrix pa, pb;
  std::vector<int> a, b, y;
};

// n in [2, max_n]; some observations have exact ties between a and b.
RegressionTriple RandomRegressionTriple(Rng& rng, size_t max_n);
ClassificationTriple RandomClassificationTriple(Rng& rng, size_t max_n, bool binary);

void CheckRegressionTriple(const RegressionTriple& t, CheckTally& tally);
void CheckClassificationTriple(const ClassificationTriple& t, CheckTally& tally);

}  // namespace ensemble_lens::testing

#endif  // ENSEMBLE_LENS_TESTS_SUPPORT_ORACLE_CHECKS_H_
