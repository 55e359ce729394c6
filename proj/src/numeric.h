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

#ifndef ENSEMBLE_LENS_SRC_NUMERIC_H_
#define ENSEMBLE_LENS_SRC_NUMERIC_H_

#include <algorithm>
#include <cmath>
#include <vector>

namespace ensemble_lens::internal {

// Sum whose result depends only on the multiset of terms: terms are sorted
// before a compensated (Neumaier) accumulation, so any permutation of the
// observations gives the same bits.
inline double OrderFreeSum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  double compensation = 0.0;
  for (double term : terms) {
    const double t = sum + term;
    if (std::abs(sum) >= std::abs(term)) {
      compensation += (sum - t) + term;
    } else {
      compensation += (term - t) + sum;
    }
    sum = t;
  }
  return sum + compensation;
}

inline double OrderFreeMean(std::vector<double> terms) {
  const double n = static_cast<double>(terms.size());
  return OrderFreeSum(std::move(terms)) / n;
}

}  // namespace ensemble_lens::internal

#endif  // ENSEMBLE_LENS_SRC_NUMERIC_H_
