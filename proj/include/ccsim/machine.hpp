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
 * The accelerator machine: columns mapped onto Columnar Cores over the torus.
 *
 * Every core owns a contiguous column range and runs the same per-column
 * algorithms as the sequential reference model, fed exclusively by packets:
 *
 *   proximal   encoder spikes, multicast to cores whose columns could see
 *              the bit (one packet per active bit; coalescing merges them)
 *   inhibition (column, overlap) pairs, broadcast within the zone, so every
 *              core ranks the full zone and picks the same winners
 *   distal     (column, cell) activations, broadcast within the zone
 *   prediction predicted-column records, unicast to the classifier (node 0)
 *
 * A sequential epoch runs the nine-stage schedule (spikes/drain/compute three
 * times, three drain barriers); the pipelined schedule keeps three epochs in
 * flight and needs a single drain per epoch, with per-core compute time
 * (one cycle per delivered proximal/distal record) overlapped against the
 * communication and enforced through the drain's cores-finished gate.
 *
 * With n scale-out zones the torus is tiled into n sub-grids, each hosting a
 * closed sub-cortex over 1/n of the columns with a proportional winner
 * budget; n consecutive stream values are processed concurrently, one per
 * zone, and inhibition/distal traffic never leaves a zone.
 */

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccsim/cortex.hpp"
#include "ccsim/network.hpp"
#include "ccsim/placement.hpp"
#include "ccsim/sdr.hpp"

namespace ccsim {

struct MachineConfig {
  CortexParams cortex;
  SdrParams sdr;
  NetConfig net;
  std::uint32_t zones = 1;
  bool pipelined = false;

  void validate() const;
};

// Result for one stream epoch (one input value). Stage metrics cover the
// machine stage that retired the epoch; with n zones, the n stream epochs of
// a stage share its metrics.
struct StreamResult {
  std::uint32_t stream_index = 0;
  std::uint32_t zone = 0;
  std::uint32_t zone_epoch = 0;
  std::vector<ColumnId> active;         // global column ids, ascending
  std::vector<ColumnId> predicted_next; // global column ids, ascending
  double anomaly = 0.0;
  std::uint32_t bursting_columns = 0;
  std::uint64_t cycles = 0; // stage cycles
  NetStats stage_stats;     // stage deltas (flit-hops per kind, energy inputs)
  std::uint32_t drains = 0; // barriers in the stage
};

class Machine {
public:
  explicit Machine(const MachineConfig &cfg);

  const MachineConfig &config() const { return cfg_; }
  const Placement &placement() const { return placement_; }
  const PacketFormats &formats() const { return formats_; }
  Network &network() { return net_; }
  const Network &network() const { return net_; }

  // Runs a whole stream: values are dealt round-robin over zones, the
  // pipeline (if any) is filled and flushed, and one result per input value
  // is returned in stream order.
  std::vector<StreamResult> run_stream(std::span<const std::uint64_t> values);

  // Cross-zone deliveries of zone-restricted traffic; must stay zero.
  std::uint64_t zone_violations() const { return zone_violations_; }
  std::uint64_t barriers_run() const { return barrier_seq_; }

  // Snapshot of the assembled cortex state (one sub-model per zone), shared
  // format with the reference model. Only legal between streams.
  void save(std::ostream &out) const;
  void load(std::istream &in);

  // Reference model equivalent to one zone of this machine.
  CortexModel make_zone_reference(std::uint32_t zone) const;

private:
  struct Core {
    NodeId node = 0;
    std::uint32_t zone = 0;
    ColumnRange range; // global ids
    std::vector<Column> columns;
    std::vector<std::vector<CellId>> predictive; // per owned column
    // inboxes keyed by zone-local epoch
    std::map<std::uint32_t, std::vector<std::uint32_t>> prox_in;
    std::map<std::uint32_t, std::vector<std::pair<ColumnId, std::uint16_t>>>
        inh_in; // zone-local column, overlap
    std::map<std::uint32_t, std::vector<CellRef>> distal_in; // zone-local
    // transient per-epoch products
    std::map<std::uint32_t, std::vector<CellRef>> own_active_cells;
    std::map<std::uint32_t, std::vector<std::uint32_t>> expected_prox;
    std::map<std::uint32_t, std::vector<ColumnId>> pending_predictions;
  };

  struct EpochSlot {
    std::uint64_t value = 0;
    std::uint32_t stream_index = 0;
    std::vector<ColumnId> active; // zone-local
    std::uint32_t bursting = 0;
    double anomaly = 0.0;
    std::vector<ColumnId> predicted_next; // zone-local
    bool s6_done = false;
    bool s9_done = false;
  };

  struct Zone {
    std::uint32_t index = 0;
    CortexParams params; // zone-local view (id_offset, geometry set)
    ColumnRange columns;
    std::vector<NodeId> nodes;
    NodeId encoder_node = 0;
    std::vector<BitMask> bit_masks; // per encoder bit: hosting nodes
    BitMask all_nodes_mask;
    // pipeline counters (zone-local epochs)
    std::uint32_t fed = 0;          // proximal emitted
    std::uint32_t inh_emitted = 0;
    std::uint32_t distal_emitted = 0;
    std::uint32_t pred_emitted = 0;
    std::uint32_t s6_done = 0;
    std::uint32_t s9_done = 0;
    std::vector<ColumnId> predicted_for_epoch; // zone-local, for epoch s9_done
    std::map<std::uint32_t, EpochSlot> slots;
  };

  void on_delivery(NodeId node, const Packet &p, std::uint64_t cycle);
  void emit_proximal(Zone &z, std::uint64_t value);
  void emit_inhibition(Zone &z, std::uint32_t epoch);
  void emit_distal(Zone &z, std::uint32_t epoch);
  void emit_predictions(Zone &z, std::uint32_t epoch);
  void compute_s6(Zone &z, std::uint32_t epoch);
  void compute_s9(Zone &z, std::uint32_t epoch);
  void run_barrier_stage();
  void idle_compute(std::uint64_t cycles);
  std::uint64_t max_inbox(const Zone &z, std::uint32_t epoch, bool prox) const;
  ActivitySet activity_from_inbox(const Core &core, const Zone &z,
                                  std::uint32_t epoch) const;
  void finalize_results(Zone &z, std::vector<StreamResult> &out,
                        const NetStats &stage_delta, std::uint64_t stage_cycles,
                        std::uint32_t drains);
  Core &core_at(NodeId n) { return cores_[n]; }

  MachineConfig cfg_;
  Placement placement_;
  PacketFormats formats_;
  Network net_;
  std::vector<Core> cores_;
  std::vector<Zone> zones_;
  std::uint32_t barrier_seq_ = 0;
  std::uint64_t zone_violations_ = 0;
  std::vector<std::uint64_t> busy_until_; // per node, pipelined compute model
  std::uint32_t stream_cursor_ = 0;
};

// Epoch-by-epoch comparison of accelerator and reference trajectories.
struct VerifyReport {
  std::optional<std::uint32_t> first_divergence;
  std::string detail;
  bool ok() const { return !first_divergence.has_value(); }
};

VerifyReport verify_against_reference(std::span<const StreamResult> accel,
                                      std::span<const EpochResult> ref);

} // namespace ccsim
