/* Copyright 2026 The XEdge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef XEDGE_RANDOM_H_
#define XEDGE_RANDOM_H_

#include <cstdint>
#include <random>
#include <vector>

namespace xedge {

// Seeded generator whose derived distributions are defined here rather than
// by the standard library, so sequences are identical across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(Mix(seed)) {}

  // Independent stream for the given (seed, index) pair.
  static Rng ForStream(uint64_t seed, uint64_t index) {
    return Rng(Mix(seed) ^ Mix(index + 0x9e3779b97f4a7c15ULL));
  }

  uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double Uniform01() { return (engine_() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }
  // Uniform integer in [0, n).
  uint64_t UniformInt(uint64_t n);
  // Uniform integer in [lo, hi].
  int64_t UniformRange(int64_t lo, int64_t hi);
  bool Bernoulli(double p) { return Uniform01() < p; }
  double Normal();

  static uint64_t Mix(uint64_t x);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Fisher-Yates shuffle driven by Rng::UniformInt.
template <typename T>
void Shuffle(std::vector<T>& values, Rng& rng) {
  for (size_t i = values.size(); i > 1; --i) {
    const size_t j = rng.UniformInt(i);
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace xedge

#endif  // XEDGE_RANDOM_H_
