// Copyright 2026 The miaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef MIAUDIT_RNG_HPP_
#define MIAUDIT_RNG_HPP_

// Deterministic random streams.
//
// Every piece of randomness in the engine is drawn from a stream derived from
// a root seed plus a string tag and integer coordinates.  Streams derived with
// the same key always produce the same values on every platform, independent
// of thread scheduling, because mt19937_64 and the samplers below are fully
// specified (no std::*_distribution, whose output is implementation-defined).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace miaudit {

// SplitMix64 finalizer; bijective on 64-bit ints with good avalanche.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over the tag bytes, so distinct tags land in distinct streams.
inline std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
  return mix64(root ^ mix64(hash_tag(tag)));
}

// Folds integer coordinates into the stream key one by one, e.g.
// derive_seed(seed, "score", model, sample_id, variant).
template <typename... Ints>
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                          std::uint64_t i0, Ints... rest) {
  return derive_seed(mix64(derive_seed(root, tag)) ^ mix64(i0 ^ 0x5851f42d4c957f2dULL),
                     tag, static_cast<std::uint64_t>(rest)...);
}

// Seeded stream with explicitly-coded samplers.  One instance per logical
// stream; never shared across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller.  Draws two uniforms per call and keeps no
  // cached spare, so call counts map 1:1 onto engine state.
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double gaussian(double mean, double stddev) {
    return mean + stddev * gaussian();
  }

  // Uniform integer in [0, n) by rejection; free of modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  // Fisher-Yates shuffle of indices [0, n).
  std::vector<int> permutation(int n) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(below(static_cast<std::uint64_t>(i) + 1));
      std::swap(p[i], p[j]);
    }
    return p;
  }

  // k distinct indices drawn uniformly from [0, n), in draw order.
  std::vector<int> sample_without_replacement(int n, int k) {
    if (k < 0 || k > n) {
      throw std::invalid_argument("sample_without_replacement: need 0 <= k <= n");
    }
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    std::vector<int> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i) {
      const int j = i + static_cast<int>(below(static_cast<std::uint64_t>(n - i)));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

  // Random unit vector (isotropic direction) of the given dimension.
  std::vector<double> unit_vector(int dim) {
    std::vector<double> v(dim);
    double norm_sq = 0.0;
    do {
      norm_sq = 0.0;
      for (int i = 0; i < dim; ++i) {
        v[i] = gaussian();
        norm_sq += v[i] * v[i];
      }
    } while (norm_sq == 0.0);
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : v) x *= inv;
    return v;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace miaudit

#endif  // MIAUDIT_RNG_HPP_
