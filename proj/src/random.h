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

// Seeded shuffles that give the same sequence on every standard library:
// std::mt19937_64 is fully specified, std::uniform_int_distribution and
// std::shuffle are not.

#ifndef ENSEMBLE_LENS_SRC_RANDOM_H_
#define ENSEMBLE_LENS_SRC_RANDOM_H_

#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

namespace ensemble_lens::internal {

// SplitMix64 finalizer, used to derive independent stream seeds.
inline uint64_t Mix(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline uint64_t StreamSeed(uint64_t seed, uint64_t a, uint64_t b) {
  return Mix(Mix(Mix(seed) ^ a) ^ (b * 0xD1B54A32D192ED03ULL));
}

// Uniform integer in [0, range) by rejection.
inline uint64_t UniformBelow(std::mt19937_64& rng, uint64_t range) {
  const uint64_t max = std::numeric_limits<uint64_t>::max();
  const uint64_t limit = max - max % range;
  uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % range;
}

template <typename T>
void Shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<size_t>(UniformBelow(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace ensemble_lens::internal

#endif  // ENSEMBLE_LENS_SRC_RANDOM_H_
