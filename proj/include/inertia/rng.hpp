// Copyright 2026 InertiaKit Authors
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

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace inertia {

// splitmix64: used to hash (seed, tag) pairs into independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
  // FNV-1a, then one splitmix round for avalanche.
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return splitmix64(h);
}

// Deterministic random stream. mt19937_64 output is pinned by the standard;
// the uniform and gaussian transforms below are written out explicitly
// (instead of std::*_distribution, whose algorithms are
// implementation-defined) so the same seed yields the same bytes on every
// platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed), seed_(seed) {}

  // Child stream keyed by a label; independent of sibling call order.
  Rng derive(std::string_view tag) const {
    return Rng(splitmix64(seed_ ^ hash_tag(tag)));
  }
  Rng derive(std::string_view tag, std::uint64_t index) const {
    return Rng(splitmix64(seed_ ^ hash_tag(tag) ^ splitmix64(index)));
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller with a fixed two-uniform draw per pair.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // Guard log(0); 2^-53 is the smallest non-zero uniform() output.
    if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double gaussian(double mean, double stddev) {
    return mean + stddev * gaussian();
  }

  // Uniform integer in [0, n). Modulo bias at n << 2^64 is negligible for
  // every use here, and the arithmetic is identical on every platform.
  std::uint64_t uniform_index(std::uint64_t n) { return gen_() % n; }

  // Fisher-Yates with the portable index sampler above (std::shuffle's
  // sampling strategy is implementation-defined).
  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  std::uint64_t seed_;  // retained so derive() mixes a stable parent identity
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace inertia
