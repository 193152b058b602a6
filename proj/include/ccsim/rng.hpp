/*
 * Copyright 2026 the ccsim authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/** @file
 * Deterministic random number primitives.
 *
 * Everything random in the simulator is derived from these three building
 * blocks, so that encodings, boot state and learning trajectories are
 * reproducible bit-for-bit across runs, platforms and implementations:
 *
 *  1. mix64     - the splitmix64 finalizer, used as a 64-bit hash.
 *  2. RngStream - a xorshift64* recurrence, used where an ordered stream of
 *                 values is needed (the scalar encoder index streams).
 *  3. keyed draws - stateless hashes of (seed, purpose, indices...) tuples,
 *                 used where the *same* decision must be reproducible from
 *                 independently executing components (stochastic permanence
 *                 rounding, boot-time initialization, synapse sampling).
 *                 Because a keyed draw has no hidden state, a distributed
 *                 machine and a sequential reference obtain identical values
 *                 no matter in which order they evaluate them.
 *
 * The exact recurrences are part of the on-disk and on-wire contract of the
 * simulator (see docs/formats.md) and must not be changed.
 */

#pragma once

#include <cstdint>
#include <initializer_list>

namespace ccsim {

// splitmix64 finalizer (Steele, Lea, Flood / Vigna).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// xorshift64* stream. State is never zero.
class RngStream {
public:
  // The stream for bucket b of master seed m is seeded with
  // mix64(mix64(m) ^ (b + 0x632BE59BD9B4E019)).
  RngStream(std::uint64_t master_seed, std::uint64_t bucket) {
    state_ = mix64(mix64(master_seed) ^ (bucket + 0x632BE59BD9B4E019ULL));
    if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
  }

  std::uint64_t next() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

private:
  std::uint64_t state_;
};

// Purpose tags keep independent families of keyed draws from colliding.
namespace rng_purpose {
constexpr std::uint64_t kProximalInit = 0x50524F58494E4954ULL; // "PROXINIT"
constexpr std::uint64_t kSpRound = 0x53505F524F554E44ULL;      // "SP_ROUND"
constexpr std::uint64_t kTmRound = 0x544D5F524F554E44ULL;      // "TM_ROUND"
constexpr std::uint64_t kGrowSample = 0x47524F5753414D50ULL;   // "GROWSAMP"
} // namespace rng_purpose

// Stateless keyed hash of a tuple of 64-bit parts.
inline std::uint64_t keyed_hash(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x8C2F1D74A1E3B5C7ULL;
  for (std::uint64_t p : parts) h = mix64(h ^ p);
  return h;
}

// Uniform double in [0, 1) from a hash value (53 high-quality bits).
inline double hash_to_unit(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Uniform integer in [lo, hi] from a hash value.
inline int hash_to_range(std::uint64_t h, int lo, int hi) {
  return lo + static_cast<int>(h % static_cast<std::uint64_t>(hi - lo + 1));
}

// Rounds a fractional step to an integer so that the expectation equals the
// input: floor(x) always, plus one more with probability frac(x).
inline int stochastic_round(double x, std::uint64_t key) {
  const int base = static_cast<int>(x);
  const double frac = x - static_cast<double>(base);
  return base + (hash_to_unit(key) < frac ? 1 : 0);
}

} // namespace ccsim
