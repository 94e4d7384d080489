// Copyright 2026 The robust_rl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace robust_rl {

/// Generator used by every sampling routine in the library.
using Rng = std::mt19937_64;

namespace detail {

/// SplitMix64 finalizer; turns structured (seed, index) pairs into
/// well-separated generator seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(mix_seed(base) ^ (stream + 0x632be59bd9b4e019ULL));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Draws an index from a probability vector (row or column) by inverse CDF.
/// Zero-probability entries are never returned, even under rounding at the
/// upper end of the cumulative sum.
template <class Probs>
Eigen::Index sample_categorical(const Probs& probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  Eigen::Index last = 0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const double p = probs(i);
    if (p <= 0.0) continue;
    last = i;
    acc += p;
    if (u < acc) return i;
  }
  return last;
}

}  // namespace detail
}  // namespace robust_rl
