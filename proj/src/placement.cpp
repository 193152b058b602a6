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

#include "ccsim/placement.hpp"

#include <cmath>

#include "ccsim/errors.hpp"

namespace ccsim {

std::uint32_t ceil_log2(std::uint64_t v) {
  std::uint32_t bits = 0;
  std::uint64_t span = 1;
  while (span < v) {
    span <<= 1;
    ++bits;
  }
  return bits;
}

NodeId Placement::node_of_column(ColumnId c) const {
  for (NodeId n = 0; n < columns_per_node.size(); ++n)
    if (c >= columns_per_node[n].first && c < columns_per_node[n].last)
      return n;
  throw config_error("placement: column out of range");
}

namespace {

// Zone grid factorization: zx * zy = zones with zx | dim_x and zy | dim_y,
// preferring the squarest split (Figure-6 style quadrants).
std::pair<std::uint32_t, std::uint32_t>
zone_grid(std::uint32_t zones, std::uint32_t dim_x, std::uint32_t dim_y) {
  std::pair<std::uint32_t, std::uint32_t> best{0, 0};
  std::uint32_t best_score = 0;
  for (std::uint32_t zx = 1; zx <= zones; ++zx) {
    if (zones % zx != 0) continue;
    const std::uint32_t zy = zones / zx;
    if (dim_x % zx != 0 || dim_y % zy != 0) continue;
    const std::uint32_t score = std::min(zx, zy);
    if (best.first == 0 || score > best_score ||
        (score == best_score && zx > best.first)) {
      best = {zx, zy};
      best_score = score;
    }
  }
  if (best.first == 0)
    throw config_error("placement: cannot tile " + std::to_string(dim_x) + "x" +
                       std::to_string(dim_y) + " torus into " +
                       std::to_string(zones) + " equal zones");
  return best;
}

} // namespace

Placement map_cortex(const CortexParams &cortex, std::uint32_t dim_x,
                     std::uint32_t dim_y, std::uint32_t zones) {
  if (zones == 0) throw config_error("placement: zone count must be positive");
  const std::uint32_t nodes = dim_x * dim_y;
  if (nodes == 0) throw config_error("placement: empty torus");
  if (cortex.num_columns % zones != 0)
    throw config_error("placement: zones must divide the column count");

  Placement p;
  p.num_nodes = nodes;
  p.num_zones = zones;
  p.zone_of_node.resize(nodes);
  p.zone_nodes.resize(zones);
  p.zone_columns.resize(zones);
  p.columns_per_node.resize(nodes);

  const auto [zx, zy] = zone_grid(zones, dim_x, dim_y);
  const std::uint32_t bw = dim_x / zx; // block width
  const std::uint32_t bh = dim_y / zy; // block height
  for (std::uint32_t y = 0; y < dim_y; ++y) {
    for (std::uint32_t x = 0; x < dim_x; ++x) {
      const NodeId n = y * dim_x + x;
      const std::uint32_t zone = (y / bh) * zx + (x / bw);
      p.zone_of_node[n] = zone;
      p.zone_nodes[zone].push_back(n);
    }
  }

  // Columns: equal contiguous range per zone, block-partitioned over the
  // zone's nodes in ascending node order.
  const std::uint32_t cols_per_zone = cortex.num_columns / zones;
  for (std::uint32_t z = 0; z < zones; ++z) {
    p.zone_columns[z] = {z * cols_per_zone, (z + 1) * cols_per_zone};
    const auto &members = p.zone_nodes[z];
    const auto m = static_cast<std::uint32_t>(members.size());
    for (std::uint32_t i = 0; i < m; ++i) {
      const ColumnId lo = p.zone_columns[z].first +
                          static_cast<ColumnId>((std::uint64_t)cols_per_zone * i / m);
      const ColumnId hi = p.zone_columns[z].first +
                          static_cast<ColumnId>((std::uint64_t)cols_per_zone * (i + 1) / m);
      p.columns_per_node[members[i]] = {lo, hi};
    }
  }
  return p;
}

PacketFormats PacketFormats::derive(const CortexParams &cortex,
                                    const SdrParams &sdr) {
  PacketFormats f;
  f.proximal_bits = ceil_log2(sdr.k);
  f.inhibition_bits = ceil_log2(cortex.num_columns) + ceil_log2(sdr.k);
  f.distal_bits = ceil_log2(cortex.num_columns) + ceil_log2(cortex.cells_per_column);
  f.prediction_bits = ceil_log2(cortex.num_columns);
  return f;
}

std::uint32_t PacketFormats::bits_for(PacketKind kind) const {
  switch (kind) {
  case PacketKind::Proximal: return proximal_bits;
  case PacketKind::Inhibition: return inhibition_bits;
  case PacketKind::Distal: return distal_bits;
  case PacketKind::Prediction: return prediction_bits;
  case PacketKind::Broom: return 0;
  }
  return 0;
}

} // namespace ccsim
