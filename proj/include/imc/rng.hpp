// Copyright 2026 The imc Authors. All Rights Reserved.
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

// Deterministic random streams.
//
// Every random quantity in the library is drawn from SplitMix64: the state is
// a 64-bit counter advanced by the constant 0x9e3779b97f4a7c15 and each output
// is the counter passed through the mix64 finalizer below. The derived
// quantities are fixed as well, so any implementation following this file
// reproduces the same draws:
//
//   uniform()  = (next_u64() >> 11) * 2^-53                      in [0, 1)
//   normal()   = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)              one per call
//   below(n)   = rejection sampling of next_u64() against
//                2^64 - (2^64 mod n), then value mod n
//
// Child streams are split off with derive_seed(base, {a, b, ...}), which folds
// each path component into the base through mix64.

#ifndef IMC_RNG_HPP_
#define IMC_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace imc {

constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(base);
  for (std::uint64_t component : path) {
    h = mix64(h ^ mix64(component + kGoldenGamma));
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t x = next_u64();
      if (x >= threshold) return x % n;
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace imc

#endif  // IMC_RNG_HPP_
