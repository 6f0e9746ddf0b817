// Copyright 2026 The dpreid Authors
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

#ifndef DPREID_RNG_HPP
#define DPREID_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dpreid {

/// One step of the splitmix64 mixer.
std::uint64_t splitmix64(std::uint64_t x);

/// Deterministically derives an independent stream seed from a base seed and
/// an arbitrary sequence of identifiers (image index, sweep cell coordinates,
/// epoch number, ...). Results do not depend on scheduling, only on the ids.
std::uint64_t derive_seed(std::uint64_t seed,
                          std::initializer_list<std::uint64_t> ids);

/// Seeded generator with explicit, platform-independent mappings to doubles.
/// The standard distributions are implementation-defined, so every mapping
/// used here is spelled out by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on the open interval (0, 1): 53-bit mantissa, offset by half an
  /// ulp so neither endpoint is reachable.
  double uniform_unit() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(gen_() >> 11) * 0x1.0p-53);
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) { return gen_() % n; }

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(uniform_index(
                    static_cast<std::uint64_t>(hi - lo) + 1));
  }

  /// Standard normal via Box-Muller (no caching, two uniforms per draw).
  double normal(double mean, double stddev);

 private:
  std::mt19937_64 gen_;
};

}  // namespace dpreid

#endif  // DPREID_RNG_HPP
