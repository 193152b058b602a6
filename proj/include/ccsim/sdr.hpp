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
 * Sparse distributed representations and the hardware-style scalar encoder.
 *
 * An Sdr is a fixed-width binary vector with a small number of active bits,
 * stored as a strictly ascending list of bit indices. The scalar encoder maps
 * a non-negative integer L to an Sdr with exactly `w` active bits using two
 * pseudo-random index streams, so that nearby scalars share most of their
 * bits and distant scalars share almost none:
 *
 *   bucket b = L / w
 *   R1 = first w unique indices (mod k) of the stream seeded with b
 *   R2 = first w unique indices of the stream seeded with b+1,
 *        skipping indices already present in R1
 *   output = first (w - L%w) indices of R1  +  first (L%w) indices of R2
 *
 * Stepping L by one inside a bucket swaps a single R1 index for an R2 index,
 * so consecutive scalars overlap in exactly w-1 bits. At a bucket boundary
 * the encoding becomes R1 of the next bucket, whose stream is the same one
 * that fed R2, so the overlap stays w-1 minus any indices that were skipped
 * while building R2 (duplicate "collisions" between the two streams).
 *
 * The index streams are xorshift64* (see rng.hpp); the whole construction is
 * a pure function of (L, params) and is documented bit-exactly in
 * docs/formats.md.
 */

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ccsim {

struct SdrParams {
  std::uint32_t k = 2045; // total bit width
  std::uint32_t w = 40;   // active bit count
  std::uint64_t master_seed = 1;

  void validate() const; // throws config_error when w >= k or w == 0
};

struct Sdr {
  SdrParams params;
  std::vector<std::uint32_t> active; // strictly ascending indices in [0, k)
};

// Encodes a non-negative scalar. Pure function of (value, params).
Sdr encode(std::uint64_t value, const SdrParams &params);

// |a.active & b.active|. Throws config_error when widths differ.
std::uint32_t overlap(const Sdr &a, const Sdr &b);

// Bitwise OR of all members. An empty list yields an empty Sdr (k = 0).
Sdr union_sdr(std::span<const Sdr> members);

// Test/diagnostic helpers exposing the encoder internals.
namespace sdr_detail {

// First `count` unique indices (mod k) of the stream for `bucket`,
// optionally skipping indices contained in `exclude` (sorted).
std::vector<std::uint32_t> stream_prefix(const SdrParams &params,
                                         std::uint64_t bucket,
                                         std::uint32_t count,
                                         std::span<const std::uint32_t> exclude);

// Number of indices of bucket b+1's w-prefix already present in bucket b's
// w-prefix: the collision count c in the neighbor-overlap bound w-1-c.
std::uint32_t boundary_collisions(const SdrParams &params, std::uint64_t bucket);

} // namespace sdr_detail

} // namespace ccsim
