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
 * Column-to-node placement, scale-out zones and packet record formats.
 *
 * Zones tile the torus into equal contiguous blocks (e.g. four 4x4 quadrants
 * of an 8x8 grid). Each zone hosts a contiguous range of columns, split
 * evenly over its nodes in node-id order, and processes its own slice of the
 * input stream; inhibition and distal traffic never leave a zone.
 */

#pragma once

#include <cstdint>
#include <vector>

#include "ccsim/cortex.hpp"
#include "ccsim/packet.hpp"
#include "ccsim/sdr.hpp"

namespace ccsim {

struct ColumnRange {
  ColumnId first = 0;
  ColumnId last = 0; // exclusive
  std::uint32_t count() const { return last - first; }
};

struct Placement {
  std::uint32_t num_nodes = 0;
  std::uint32_t num_zones = 1;
  std::vector<ColumnRange> columns_per_node; // indexed by node
  std::vector<std::uint32_t> zone_of_node;   // indexed by node
  std::vector<std::vector<NodeId>> zone_nodes; // ascending per zone
  std::vector<ColumnRange> zone_columns;       // per zone

  NodeId node_of_column(ColumnId c) const;
  std::uint32_t zone_of_column(ColumnId c) const {
    return zone_of_node[node_of_column(c)];
  }
};

// Partitions columns over the torus nodes (block partition in row-major node
// order) and nodes into `zones` equal contiguous sub-grids.
Placement map_cortex(const CortexParams &cortex, std::uint32_t dim_x,
                     std::uint32_t dim_y, std::uint32_t zones);

// Payload record widths derived from the configuration.
struct PacketFormats {
  std::uint32_t proximal_bits = 0;   // ceil(log2 k)
  std::uint32_t inhibition_bits = 0; // ceil(log2 columns) + ceil(log2 overlap range)
  std::uint32_t distal_bits = 0;     // ceil(log2 columns) + ceil(log2 cells)
  std::uint32_t prediction_bits = 0; // ceil(log2 columns)

  static PacketFormats derive(const CortexParams &cortex, const SdrParams &sdr);
  std::uint32_t bits_for(PacketKind kind) const;
};

std::uint32_t ceil_log2(std::uint64_t v);

} // namespace ccsim
