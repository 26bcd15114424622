/*
 * Copyright 2026 The Attrshield Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef ATTRSHIELD_RNG_H_
#define ATTRSHIELD_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace attrshield {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
inline std::uint64_t MixBits(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a root seed and a path of
// indices, e.g. (seed, origin_id) or (seed, generation, member).
inline std::uint64_t DeriveSeed(std::uint64_t root,
                                std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = MixBits(root);
  for (std::uint64_t p : path) h = MixBits(h ^ MixBits(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng MakeRng(std::uint64_t root, std::initializer_list<std::uint64_t> path = {}) {
  return Rng(DeriveSeed(root, path));
}

// Uniform double in [0, 1) from the top 53 bits.
inline double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). n must be > 0.
inline std::size_t UniformIndex(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(UniformUnit(rng) * static_cast<double>(n)) % n;
}

}  // namespace attrshield

#endif  // ATTRSHIELD_RNG_H_
