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
 * Cycle-level 2-D torus packet network.
 *
 * Routers have a four-stage pipeline, one byte-budgeted input buffer per
 * link, and a coalescing injection queue. Packets are routed dimension-order
 * (X fully, then Y) with in-router multicast replication: a copy peels off a
 * Y-branch at every destination column and continues along X while
 * destinations remain. Flow control is virtual cut-through at packet
 * granularity; entering a ring (injection or an X->Y turn) additionally
 * requires two max-size packet slots free downstream (bubble rule).
 *
 * Timing model: a packet that enters a router becomes eligible for switching
 * after `router_pipeline` cycles; a granted hop occupies the link for
 * ceil(size_bits / (8 * link_bytes)) serialization cycles and arrives
 * `link_latency` cycles after the last flit leaves. Delivery happens on
 * arrival at a destination node.
 *
 * Drain barriers: begin_barrier() releases two broom sweeps, one from node 0
 * and one from node N-1. Broom copies ride the same channels as data, so a
 * copy crossing a channel certifies that no packet of the draining window is
 * behind it. The sweep structure mirrors the routing function:
 *
 *   - a row wave per row and direction (+X for the node-0 broom, -X for the
 *     other) loops the full ring; it is forwarded by a node once its
 *     injection queue is empty and its cores have finished the window, and
 *     therefore flushes every X channel;
 *   - a column wave per column and direction loops each Y ring; it is
 *     additionally held at a node until both row waves have passed, because
 *     X traffic from either direction may still turn into the column there;
 *   - seed copies carry the brooms up/down the first/last column to start
 *     the row waves (X channels are never fed from Y channels, so row waves
 *     need no cross-certification).
 *
 * A node reports drained once both row waves, both column waves and its own
 * quiescence conditions have been observed; at that point no packet of the
 * window addressed to it can still be in flight.
 */

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "ccsim/packet.hpp"

namespace ccsim {

// Directed link endpoints of one router. Collapsed for degenerate dims:
// a 2-wide dimension keeps only the Plus port, a 1-wide dimension none.
enum Port : int {
  kPortXPlus = 0,
  kPortXMinus = 1,
  kPortYPlus = 2,
  kPortYMinus = 3,
  kNumPorts = 4,
  kPortNone = -1,
};

struct MulticastTree {
  std::vector<std::pair<NodeId, NodeId>> link_crossings; // directed hops
  std::vector<NodeId> deliveries;
};

class Network {
public:
  explicit Network(const NetConfig &cfg);

  const NetConfig &config() const { return cfg_; }
  std::uint32_t nodes() const { return cfg_.nodes(); }
  std::uint32_t x_of(NodeId n) const { return n % cfg_.dim_x; }
  std::uint32_t y_of(NodeId n) const { return n / cfg_.dim_x; }
  NodeId node_at(std::uint32_t x, std::uint32_t y) const {
    return y * cfg_.dim_x + x;
  }
  // Neighbor in a logical direction; collapsed dims fold onto the Plus port.
  NodeId neighbor(NodeId n, Port p) const;
  bool port_exists(Port p) const;

  // Queues a packet at a node's injection interface. With coalescing enabled
  // the payload may be appended to a queued, not yet dispatched packet with
  // the same kind, destination mask, epoch tag and retirement window; returns
  // true when the packet was merged.
  bool inject(NodeId node, Packet packet, std::uint32_t retire_seq);

  // Advances the whole network one clock cycle.
  void tick();
  std::uint64_t now() const { return now_; }

  // True when no packet is queued, buffered or on a wire.
  bool idle() const;

  // Static multicast replication tree of (src -> mask), for analysis/tests.
  MulticastTree expand_multicast(NodeId src, const BitMask &mask) const;

  // --- drain barrier ---
  void begin_barrier(std::uint32_t seq);
  bool barrier_active() const { return barrier_active_; }
  std::uint32_t barrier_seq() const { return barrier_seq_; }
  bool is_drained(NodeId node) const;
  bool all_drained() const;
  // Pipelined mode: cycle at which a node's cores finish the current window.
  void set_compute_ready(NodeId node, std::uint64_t cycle);

  // Runs tick() until the active barrier completes; throws sim_error on
  // watchdog expiry. Returns the number of cycles consumed.
  std::uint64_t run_barrier();

  const NetStats &stats() const { return stats_; }
  void reset_stats() { stats_ = NetStats{}; stats_.cycles = 0; }

  // Delivery sink: (node, packet, arrival cycle). Multicast leaves fire once
  // per destination with the full payload.
  using DeliverySink =
      std::function<void(NodeId, const Packet &, std::uint64_t)>;
  void set_delivery_sink(DeliverySink sink) { sink_ = std::move(sink); }

  // Deliveries observed after the receiving node reported drained for the
  // packet's retirement window. Must stay zero; counted for the test suite.
  std::uint64_t late_deliveries() const { return late_deliveries_; }

private:
  struct OutRequest {
    Port port = kPortNone;
    BitMask mask;
    std::uint8_t phase = 0; // 0 = X, 1 = Y
    bool entering = false;
    bool granted = false;
  };

  struct DataCopy {
    PacketKind kind;
    NodeId src;
    std::uint32_t epoch_tag;
    std::uint32_t record_bits;
    std::shared_ptr<const std::vector<Record>> payload;
    BitMask remaining;
    std::uint8_t phase = 0;
    bool entering = false;
    std::uint32_t retire_seq = 0;

    std::uint32_t size_bits() const {
      return kPacketHeaderBits +
             record_bits * static_cast<std::uint32_t>(payload->size());
    }
    std::uint32_t size_bytes() const { return (size_bits() + 7) / 8; }
  };

  enum class BroomWave : std::uint8_t { Seed, Row, Col };

  // Row and column waves loop their ring twice. The first lap shows that
  // every node on the ring has stopped feeding it (injection queues empty,
  // turning traffic cut off by the row certificates); only then is the
  // second lap guaranteed to be behind all in-flight window traffic,
  // including packets wrapping past the wave's starting point, so
  // certificates are issued on second-lap absorption.
  struct BroomCopy {
    std::uint8_t broom = 0; // 0: from node 0, 1: from node N-1
    BroomWave wave = BroomWave::Row;
    NodeId origin = 0; // wave start; copies die when lap 1 loops back
    std::uint8_t lap = 0;
    std::uint32_t barrier = 0;
  };

  struct FifoEntry {
    bool is_broom = false;
    DataCopy data;
    BroomCopy broom;
    std::uint64_t ready_at = 0;
    std::uint32_t bytes = 0;
    bool processed = false; // outputs computed
    std::vector<OutRequest> outs;
    std::uint32_t outs_left = 0;
  };

  struct InjEntry {
    Packet pkt;
    std::uint32_t retire_seq = 0;
    std::uint64_t ready_at = 0;
    bool dispatched = false; // head being transmitted; no longer coalescible
    std::vector<OutRequest> outs;
    std::uint32_t outs_left = 0;
    bool processed = false;
    DataCopy as_copy; // materialized once at dispatch
  };

  struct PendingBroom {
    BroomCopy copy;
    Port out = kPortNone;
    bool entering = false;
  };

  struct InputBuffer {
    std::deque<FifoEntry> fifo;
    std::uint32_t reserved_bytes = 0; // queued plus in-flight reservations
  };

  struct Router {
    std::array<InputBuffer, kNumPorts> in;
    std::array<std::uint64_t, kNumPorts> link_free_at{};
    std::array<std::uint32_t, kNumPorts> rr_next{}; // round-robin pointers
    std::deque<InjEntry> inj;
    std::vector<PendingBroom> pending_brooms;
    // barrier bookkeeping
    bool row_seen[2] = {false, false};
    bool col_seen[2] = {false, false};
    bool drained = false;
    std::uint32_t drained_seq = 0; // highest completed barrier at this node
    std::uint64_t compute_ready = 0;
  };

  struct Arrival {
    NodeId dest;
    Port in_port;
    FifoEntry entry;
  };

  // routing helpers
  int ring_dir(std::uint32_t from, std::uint32_t to, std::uint32_t size) const;
  std::vector<OutRequest> compute_outputs(NodeId node, const BitMask &mask,
                                          std::uint8_t phase, bool &self) const;
  Port dir_port(int dim, int dir) const; // dim 0 = X, 1 = Y

  void process_arrivals();
  void process_router(NodeId n);
  void arbitrate(NodeId n);
  bool try_grant(NodeId n, Port out, const BitMask &mask, std::uint8_t phase,
                 bool entering, std::uint32_t bytes, std::uint32_t flits,
                 const DataCopy *data, const PendingBroom *broom);
  void deliver(NodeId node, const DataCopy &copy);
  void absorb_broom(NodeId n, const BroomCopy &copy, Port in_port);
  void spawn_broom(NodeId n, std::uint8_t broom, BroomWave wave, NodeId origin);
  bool broom_gate_open(NodeId n, const PendingBroom &pb) const;
  bool inj_quiescent(NodeId n) const;
  void update_drained(NodeId n);
  void note_progress() { last_progress_ = now_; }
  void trace_event(const char *event, NodeId node, const char *detail) const;

  NetConfig cfg_;
  std::vector<Router> routers_;
  std::multimap<std::uint64_t, Arrival> arrivals_;
  std::uint64_t now_ = 0;
  std::uint64_t last_progress_ = 0;
  std::uint32_t in_flight_ = 0; // resident copies + wire transfers

  bool barrier_active_ = false;
  std::uint32_t barrier_seq_ = 0;
  std::uint64_t barrier_started_ = 0;
  std::uint32_t drained_count_ = 0;

  NetStats stats_;
  DeliverySink sink_;
  std::uint64_t late_deliveries_ = 0;
  mutable std::unique_ptr<std::ostream> trace_out_;
};

} // namespace ccsim
