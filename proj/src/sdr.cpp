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

#include "ccsim/sdr.hpp"

#include <algorithm>

#include "ccsim/errors.hpp"
#include "ccsim/rng.hpp"

namespace ccsim {

void SdrParams::validate() const {
  if (w == 0 || w >= k)
    throw config_error("sdr: active bit count w must satisfy 0 < w < k (w=" +
                       std::to_string(w) + ", k=" + std::to_string(k) + ")");
}

namespace sdr_detail {

std::vector<std::uint32_t> stream_prefix(const SdrParams &params,
                                         std::uint64_t bucket,
                                         std::uint32_t count,
                                         std::span<const std::uint32_t> exclude) {
  RngStream stream(params.master_seed, bucket);
  std::vector<std::uint32_t> out;
  out.reserve(count);
  std::vector<bool> seen(params.k, false);
  for (std::uint32_t idx : exclude) seen[idx] = true;
  while (out.size() < count) {
    const auto idx = static_cast<std::uint32_t>(stream.next() % params.k);
    if (seen[idx]) continue;
    seen[idx] = true;
    out.push_back(idx);
  }
  return out;
}

std::uint32_t boundary_collisions(const SdrParams &params, std::uint64_t bucket) {
  const auto r1 = stream_prefix(params, bucket, params.w, {});
  const auto next = stream_prefix(params, bucket + 1, params.w, {});
  std::vector<std::uint32_t> sorted(r1.begin(), r1.end());
  std::sort(sorted.begin(), sorted.end());
  std::uint32_t c = 0;
  for (std::uint32_t idx : next)
    if (std::binary_search(sorted.begin(), sorted.end(), idx)) ++c;
  return c;
}

} // namespace sdr_detail

Sdr encode(std::uint64_t value, const SdrParams &params) {
  params.validate();
  const std::uint64_t bucket = value / params.w;
  const auto offset = static_cast<std::uint32_t>(value % params.w);

  const auto r1 = sdr_detail::stream_prefix(params, bucket, params.w, {});
  std::vector<std::uint32_t> r1_sorted(r1.begin(), r1.end());
  std::sort(r1_sorted.begin(), r1_sorted.end());
  const auto r2 =
      sdr_detail::stream_prefix(params, bucket + 1, offset, r1_sorted);

  Sdr out;
  out.params = params;
  out.active.assign(r1.begin(), r1.begin() + (params.w - offset));
  out.active.insert(out.active.end(), r2.begin(), r2.end());
  std::sort(out.active.begin(), out.active.end());
  return out;
}

std::uint32_t overlap(const Sdr &a, const Sdr &b) {
  if (a.params.k != b.params.k)
    throw config_error("sdr: overlap of mismatched widths (" +
                       std::to_string(a.params.k) + " vs " +
                       std::to_string(b.params.k) + ")");
  std::uint32_t count = 0;
  auto ia = a.active.begin();
  auto ib = b.active.begin();
  while (ia != a.active.end() && ib != b.active.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

Sdr union_sdr(std::span<const Sdr> members) {
  Sdr out;
  if (members.empty()) {
    out.params.k = 0;
    out.params.w = 0;
    return out;
  }
  out.params = members.front().params;
  for (const Sdr &m : members) {
    if (m.params.k != out.params.k)
      throw config_error("sdr: union of mismatched widths");
    out.active.insert(out.active.end(), m.active.begin(), m.active.end());
  }
  std::sort(out.active.begin(), out.active.end());
  out.active.erase(std::unique(out.active.begin(), out.active.end()),
                   out.active.end());
  return out;
}

} // namespace ccsim
