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

#include "ccsim/network.hpp"

#include <cassert>
#include <fstream>
#include <iostream>

namespace ccsim {

const char *packet_kind_name(PacketKind kind) {
  switch (kind) {
  case PacketKind::Proximal: return "proximal";
  case PacketKind::Inhibition: return "inhibition";
  case PacketKind::Distal: return "distal";
  case PacketKind::Prediction: return "prediction";
  case PacketKind::Broom: return "broom";
  }
  return "?";
}

void NetConfig::validate() const {
  if (dim_x == 0 || dim_y == 0)
    throw config_error("net: torus dimensions must be positive");
  if (link_bytes == 0 || buffer_bytes == 0 || max_packet_bytes == 0)
    throw config_error("net: link width, buffer and packet sizes must be positive");
  if (max_packet_bytes * 2 > buffer_bytes)
    throw config_error("net: max_packet_bytes must be <= buffer_bytes / 2");
  if (router_pipeline == 0)
    throw config_error("net: router pipeline must be at least one cycle");
}

NetStats NetStats::operator-(const NetStats &rhs) const {
  NetStats d = *this;
  d.cycles -= rhs.cycles;
  for (std::size_t i = 0; i < kind.size(); ++i) {
    d.kind[i].packets_injected -= rhs.kind[i].packets_injected;
    d.kind[i].records_injected -= rhs.kind[i].records_injected;
    d.kind[i].packets_delivered -= rhs.kind[i].packets_delivered;
    d.kind[i].records_delivered -= rhs.kind[i].records_delivered;
    d.kind[i].flit_hops -= rhs.kind[i].flit_hops;
  }
  d.router_traversals -= rhs.router_traversals;
  d.buffer_writes -= rhs.buffer_writes;
  d.buffer_reads -= rhs.buffer_reads;
  d.expected_deliveries -= rhs.expected_deliveries;
  d.deliveries -= rhs.deliveries;
  return d;
}

Network::Network(const NetConfig &cfg) : cfg_(cfg) {
  cfg_.validate();
  routers_.resize(cfg_.nodes());
  // certification flags for absent dimensions hold vacuously
  for (Router &r : routers_) {
    if (cfg_.dim_x == 1) r.row_seen[0] = r.row_seen[1] = true;
    if (cfg_.dim_y == 1) r.col_seen[0] = r.col_seen[1] = true;
  }
}

bool Network::port_exists(Port p) const {
  switch (p) {
  case kPortXPlus: return cfg_.dim_x >= 2;
  case kPortXMinus: return cfg_.dim_x >= 3;
  case kPortYPlus: return cfg_.dim_y >= 2;
  case kPortYMinus: return cfg_.dim_y >= 3;
  default: return false;
  }
}

NodeId Network::neighbor(NodeId n, Port p) const {
  const std::uint32_t x = x_of(n), y = y_of(n);
  switch (p) {
  case kPortXPlus: return node_at((x + 1) % cfg_.dim_x, y);
  case kPortXMinus: return node_at((x + cfg_.dim_x - 1) % cfg_.dim_x, y);
  case kPortYPlus: return node_at(x, (y + 1) % cfg_.dim_y);
  case kPortYMinus: return node_at(x, (y + cfg_.dim_y - 1) % cfg_.dim_y);
  default: throw config_error("net: bad port");
  }
}

namespace {
// Input buffer at the far end of a transmission through `out`: the paired
// port on the receiving side. A 2-wide dimension keeps only the Plus port,
// so the pair folds onto itself.
Port peer_port(Port out, std::uint32_t dim_size) {
  if (dim_size == 2) return out;
  switch (out) {
  case kPortXPlus: return kPortXMinus;
  case kPortXMinus: return kPortXPlus;
  case kPortYPlus: return kPortYMinus;
  case kPortYMinus: return kPortYPlus;
  default: return kPortNone;
  }
}
} // namespace

int Network::ring_dir(std::uint32_t from, std::uint32_t to,
                      std::uint32_t size) const {
  if (size <= 2) return +1;
  const std::uint32_t fwd = (to + size - from) % size;
  const std::uint32_t bwd = (from + size - to) % size;
  return fwd <= bwd ? +1 : -1;
}

Port Network::dir_port(int dim, int dir) const {
  if (dim == 0) return dir > 0 ? kPortXPlus : kPortXMinus;
  return dir > 0 ? kPortYPlus : kPortYMinus;
}

std::vector<Network::OutRequest>
Network::compute_outputs(NodeId node, const BitMask &mask, std::uint8_t phase,
                         bool &self) const {
  self = mask.test(node);
  std::vector<OutRequest> outs;
  const std::uint32_t x = x_of(node), y = y_of(node);

  if (phase == 1) { // Y phase: continue along the column
    BitMask plus(nodes()), minus(nodes());
    mask.for_each([&](NodeId d) {
      if (d == node) return;
      (ring_dir(y, y_of(d), cfg_.dim_y) > 0 ? plus : minus).set(d);
    });
    for (int dir : {+1, -1}) {
      const BitMask &m = dir > 0 ? plus : minus;
      if (m.empty()) continue;
      OutRequest req;
      req.port = dir_port(1, dir);
      req.mask = m;
      req.phase = 1;
      req.entering = false;
      outs.push_back(std::move(req));
    }
    return outs;
  }

  // X phase (also the injection split): destinations in this column peel off
  // into Y branches, the rest keep travelling along the row.
  BitMask col_plus(nodes()), col_minus(nodes());
  BitMask x_plus(nodes()), x_minus(nodes());
  mask.for_each([&](NodeId d) {
    if (d == node) return;
    if (x_of(d) == x) {
      (ring_dir(y, y_of(d), cfg_.dim_y) > 0 ? col_plus : col_minus).set(d);
    } else {
      (ring_dir(x, x_of(d), cfg_.dim_x) > 0 ? x_plus : x_minus).set(d);
    }
  });
  for (int dir : {+1, -1}) {
    const BitMask &m = dir > 0 ? col_plus : col_minus;
    if (m.empty()) continue;
    OutRequest req;
    req.port = dir_port(1, dir);
    req.mask = m;
    req.phase = 1;
    req.entering = true; // X -> Y turn enters a new ring
    outs.push_back(std::move(req));
  }
  for (int dir : {+1, -1}) {
    const BitMask &m = dir > 0 ? x_plus : x_minus;
    if (m.empty()) continue;
    OutRequest req;
    req.port = dir_port(0, dir);
    req.mask = m;
    req.phase = 0;
    req.entering = false; // set to true by the injection path
    outs.push_back(std::move(req));
  }
  return outs;
}

bool Network::inject(NodeId node, Packet packet, std::uint32_t retire_seq) {
  if (node >= nodes()) throw config_error("net: inject at unknown node");
  if (packet.kind == PacketKind::Broom)
    throw config_error("net: brooms are internal to the barrier");
  if (packet.dest_mask.size() != nodes() || packet.dest_mask.empty())
    throw config_error("net: packet needs a nonempty destination mask");
  if (packet.payload.empty() || packet.record_bits == 0)
    throw config_error("net: packet needs payload records");
  if (packet.size_bytes() > cfg_.max_packet_bytes)
    throw config_error("net: packet exceeds max_packet_bytes");

  Router &r = routers_[node];
  auto &ks = stats_.kind[static_cast<std::size_t>(packet.kind)];
  ks.records_injected += packet.payload.size();
  stats_.expected_deliveries +=
      static_cast<std::uint64_t>(packet.dest_mask.count()) *
      packet.payload.size();

  if (cfg_.coalescing) {
    for (InjEntry &e : r.inj) {
      if (e.dispatched) continue;
      if (e.pkt.kind != packet.kind || e.pkt.epoch_tag != packet.epoch_tag ||
          e.retire_seq != retire_seq || !(e.pkt.dest_mask == packet.dest_mask))
        continue;
      const std::uint32_t merged_bits =
          e.pkt.size_bits() + packet.record_bits *
                                  static_cast<std::uint32_t>(packet.payload.size());
      if ((merged_bits + 7) / 8 > cfg_.max_packet_bytes) continue;
      e.pkt.payload.insert(e.pkt.payload.end(), packet.payload.begin(),
                           packet.payload.end());
      trace_event("coalesce", node, packet_kind_name(packet.kind));
      return true;
    }
  }

  InjEntry e;
  e.pkt = std::move(packet);
  e.retire_seq = retire_seq;
  e.ready_at = now_ + cfg_.router_pipeline;
  r.inj.push_back(std::move(e));
  ks.packets_injected += 1;
  trace_event("inject", node, packet_kind_name(r.inj.back().pkt.kind));
  return false;
}

void Network::deliver(NodeId node, const DataCopy &copy) {
  auto &ks = stats_.kind[static_cast<std::size_t>(copy.kind)];
  ks.packets_delivered += 1;
  ks.records_delivered += copy.payload->size();
  stats_.deliveries += copy.payload->size();
  if (routers_[node].drained_seq >= copy.retire_seq && copy.retire_seq > 0)
    ++late_deliveries_;
  if (sink_) {
    Packet p;
    p.kind = copy.kind;
    p.src_node = copy.src;
    p.epoch_tag = copy.epoch_tag;
    p.record_bits = copy.record_bits;
    p.payload = *copy.payload;
    p.dest_mask = BitMask(nodes());
    p.dest_mask.set(node);
    sink_(node, p, now_);
  }
  trace_event("deliver", node, packet_kind_name(copy.kind));
  note_progress();
}

void Network::process_arrivals() {
  auto range_end = arrivals_.upper_bound(now_);
  for (auto it = arrivals_.begin(); it != range_end;) {
    Arrival &arr = it->second;
    Router &r = routers_[arr.dest];
    FifoEntry &e = arr.entry;
    const std::uint32_t flits =
        e.is_broom ? 1
                   : (e.data.size_bits() + 8 * cfg_.link_bytes - 1) /
                         (8 * cfg_.link_bytes);
    if (!e.is_broom && e.data.remaining.test(arr.dest)) {
      deliver(arr.dest, e.data);
      e.data.remaining.clear(arr.dest);
    }
    if (!e.is_broom && e.data.remaining.empty()) {
      r.in[arr.in_port].reserved_bytes -= e.bytes; // consumed at ejection
    } else {
      e.ready_at = now_ + cfg_.router_pipeline;
      stats_.buffer_writes += flits;
      r.in[arr.in_port].fifo.push_back(std::move(e));
    }
    it = arrivals_.erase(it);
    note_progress();
  }
}

bool Network::inj_quiescent(NodeId n) const {
  const Router &r = routers_[n];
  return r.inj.empty() && now_ >= r.compute_ready;
}

void Network::spawn_broom(NodeId n, std::uint8_t broom, BroomWave wave,
                          NodeId origin) {
  PendingBroom pb;
  pb.copy.broom = broom;
  pb.copy.wave = wave;
  pb.copy.origin = origin;
  pb.copy.barrier = barrier_seq_;
  pb.entering = true; // a freshly spawned copy enters its ring
  switch (wave) {
  case BroomWave::Row:
    pb.out = broom == 0 ? kPortXPlus : kPortXMinus;
    break;
  case BroomWave::Col:
  case BroomWave::Seed:
    pb.out = broom == 0 ? kPortYPlus : kPortYMinus;
    break;
  }
  if (!port_exists(pb.out) && (pb.out == kPortXMinus || pb.out == kPortYMinus)) {
    // collapsed 2-wide dimension: minus direction folds onto the plus port
    pb.out = pb.out == kPortXMinus ? kPortXPlus : kPortYPlus;
  }
  routers_[n].pending_brooms.push_back(std::move(pb));
}

void Network::absorb_broom(NodeId n, const BroomCopy &copy, Port) {
  if (!barrier_active_ || copy.barrier != barrier_seq_)
    throw sim_error("net: broom received for a stale barrier");
  Router &r = routers_[n];
  trace_event("broom", n,
              copy.wave == BroomWave::Row   ? "row"
              : copy.wave == BroomWave::Col ? "col"
                                            : "seed");
  switch (copy.wave) {
  case BroomWave::Seed: {
    // start this row's wave, then carry on to the next row
    spawn_broom(n, copy.broom, BroomWave::Row, n);
    const std::uint32_t y = y_of(n);
    const bool last = copy.broom == 0 ? (y == cfg_.dim_y - 1) : (y == 0);
    if (!last) {
      PendingBroom pb;
      pb.copy = copy;
      pb.out = copy.broom == 0 ? kPortYPlus : kPortYMinus;
      if (!port_exists(pb.out)) pb.out = kPortYPlus;
      pb.entering = false;
      r.pending_brooms.push_back(std::move(pb));
    }
    break;
  }
  case BroomWave::Row: {
    if (copy.lap == 1) r.row_seen[copy.broom] = true;
    if (n == copy.origin && copy.lap == 1) break; // swept twice, done
    const std::uint32_t y = y_of(n);
    const bool spawn_col =
        copy.lap == 0 && n != copy.origin && cfg_.dim_y > 1 &&
        (copy.broom == 0 ? (y == 0) : (y == cfg_.dim_y - 1));
    if (spawn_col) spawn_broom(n, copy.broom, BroomWave::Col, n);
    PendingBroom pb;
    pb.copy = copy;
    if (n == copy.origin) pb.copy.lap = 1; // start the certifying lap
    pb.out = copy.broom == 0 ? kPortXPlus : kPortXMinus;
    if (!port_exists(pb.out)) pb.out = kPortXPlus;
    pb.entering = false;
    r.pending_brooms.push_back(std::move(pb));
    break;
  }
  case BroomWave::Col: {
    if (copy.lap == 1) r.col_seen[copy.broom] = true;
    if (n == copy.origin && copy.lap == 1) break;
    PendingBroom pb;
    pb.copy = copy;
    if (n == copy.origin) pb.copy.lap = 1;
    pb.out = copy.broom == 0 ? kPortYPlus : kPortYMinus;
    if (!port_exists(pb.out)) pb.out = kPortYPlus;
    pb.entering = false;
    r.pending_brooms.push_back(std::move(pb));
    break;
  }
  }
  note_progress();
}

bool Network::broom_gate_open(NodeId n, const PendingBroom &pb) const {
  if (pb.copy.wave == BroomWave::Seed) return true; // transport only
  if (!inj_quiescent(n)) return false;
  if (pb.copy.wave == BroomWave::Col) {
    const Router &r = routers_[n];
    return r.row_seen[0] && r.row_seen[1];
  }
  return true;
}

void Network::process_router(NodeId n) {
  Router &r = routers_[n];
  for (int p = 0; p < kNumPorts; ++p) {
    auto &fifo = r.in[p].fifo;
    // absorb every broom that has reached the head of the buffer
    while (!fifo.empty() && fifo.front().is_broom &&
           now_ >= fifo.front().ready_at) {
      const FifoEntry head = fifo.front();
      fifo.pop_front();
      r.in[p].reserved_bytes -= head.bytes;
      stats_.buffer_reads += 1;
      absorb_broom(n, head.broom, static_cast<Port>(p));
    }
    if (fifo.empty()) continue;
    FifoEntry &head = fifo.front();
    if (head.is_broom || head.processed || now_ < head.ready_at) continue;
    bool self = false;
    head.outs = compute_outputs(n, head.data.remaining, head.data.phase, self);
    assert(!self); // local share was consumed on arrival
    head.outs_left = static_cast<std::uint32_t>(head.outs.size());
    head.processed = true;
  }
  if (!r.inj.empty()) {
    InjEntry &head = r.inj.front();
    if (!head.processed && now_ >= head.ready_at) {
      head.processed = true;
      head.dispatched = true;
      bool self = false;
      head.outs = compute_outputs(n, head.pkt.dest_mask, 0, self);
      for (OutRequest &req : head.outs) req.entering = true; // ring entries
      head.outs_left = static_cast<std::uint32_t>(head.outs.size());
      head.as_copy.kind = head.pkt.kind;
      head.as_copy.src = head.pkt.src_node;
      head.as_copy.epoch_tag = head.pkt.epoch_tag;
      head.as_copy.record_bits = head.pkt.record_bits;
      head.as_copy.payload =
          std::make_shared<const std::vector<Record>>(head.pkt.payload);
      head.as_copy.retire_seq = head.retire_seq;
      if (self) deliver(n, head.as_copy);
      if (head.outs_left == 0) r.inj.pop_front(); // purely local packet
    }
  }
}

bool Network::try_grant(NodeId n, Port out, const BitMask &mask,
                        std::uint8_t phase, bool entering, std::uint32_t bytes,
                        std::uint32_t flits, const DataCopy *data,
                        const PendingBroom *broom) {
  Router &r = routers_[n];
  if (r.link_free_at[out] > now_) return false;
  const NodeId dest = neighbor(n, out);
  const Port in_port =
      peer_port(out, (out == kPortXPlus || out == kPortXMinus) ? cfg_.dim_x
                                                               : cfg_.dim_y);
  InputBuffer &target = routers_[dest].in[in_port];
  const std::uint32_t need =
      entering ? std::max(bytes, 2 * cfg_.max_packet_bytes) : bytes;
  if (target.reserved_bytes + need > cfg_.buffer_bytes) return false;

  target.reserved_bytes += bytes;
  r.link_free_at[out] = now_ + flits;

  Arrival arr;
  arr.dest = dest;
  arr.in_port = in_port;
  arr.entry.bytes = bytes;
  if (broom != nullptr) {
    arr.entry.is_broom = true;
    arr.entry.broom = broom->copy;
    stats_.kind[static_cast<std::size_t>(PacketKind::Broom)].flit_hops += flits;
  } else {
    arr.entry.is_broom = false;
    arr.entry.data = *data;
    arr.entry.data.remaining = mask;
    arr.entry.data.phase = phase;
    stats_.kind[static_cast<std::size_t>(arr.entry.data.kind)].flit_hops +=
        flits;
  }
  arrivals_.emplace(now_ + flits + cfg_.link_latency, std::move(arr));
  stats_.router_traversals += 1;
  note_progress();
  return true;
}

void Network::arbitrate(NodeId n) {
  Router &r = routers_[n];
  for (int p = 0; p < kNumPorts; ++p) {
    const Port out = static_cast<Port>(p);
    if (!port_exists(out)) continue;
    if (r.link_free_at[p] > now_) continue;

    // brooms carry the barrier and win arbitration outright
    bool granted = false;
    for (std::size_t b = 0; b < r.pending_brooms.size(); ++b) {
      PendingBroom &pb = r.pending_brooms[b];
      if (pb.out != out || !broom_gate_open(n, pb)) continue;
      const std::uint32_t bytes = (kPacketHeaderBits + 7) / 8;
      if (try_grant(n, out, BitMask(), 0, pb.entering, bytes, 1, nullptr,
                    &pb)) {
        r.pending_brooms.erase(r.pending_brooms.begin() + b);
        granted = true;
      }
      break; // one broom candidate per port per cycle
    }
    if (granted) continue;

    // round-robin over requesters: slot 0 = injection, 1..4 = input buffers
    for (std::uint32_t scan = 0; scan < 5; ++scan) {
      const std::uint32_t slot = (r.rr_next[p] + scan) % 5;
      if (slot == 0) {
        if (r.inj.empty()) continue;
        InjEntry &head = r.inj.front();
        if (!head.processed) continue;
        OutRequest *req = nullptr;
        for (OutRequest &o : head.outs)
          if (!o.granted && o.port == out) req = &o;
        if (req == nullptr) continue;
        const std::uint32_t bytes = head.pkt.size_bytes();
        const std::uint32_t flits = head.pkt.flits(cfg_.link_bytes);
        if (!try_grant(n, out, req->mask, req->phase, req->entering, bytes,
                       flits, &head.as_copy, nullptr))
          continue;
        stats_.buffer_reads += flits;
        req->granted = true;
        if (--head.outs_left == 0) r.inj.pop_front();
      } else {
        auto &fifo = r.in[slot - 1].fifo;
        if (fifo.empty()) continue;
        FifoEntry &head = fifo.front();
        if (head.is_broom || !head.processed) continue;
        OutRequest *req = nullptr;
        for (OutRequest &o : head.outs)
          if (!o.granted && o.port == out) req = &o;
        if (req == nullptr) continue;
        const std::uint32_t bytes = head.bytes;
        const std::uint32_t flits =
            (head.data.size_bits() + 8 * cfg_.link_bytes - 1) /
            (8 * cfg_.link_bytes);
        if (!try_grant(n, out, req->mask, req->phase, req->entering, bytes,
                       flits, &head.data, nullptr))
          continue;
        stats_.buffer_reads += flits;
        req->granted = true;
        if (--head.outs_left == 0) {
          r.in[slot - 1].reserved_bytes -= head.bytes;
          fifo.pop_front();
        }
      }
      r.rr_next[p] = (slot + 1) % 5;
      break; // one grant per output port per cycle
    }
  }
}

void Network::update_drained(NodeId n) {
  Router &r = routers_[n];
  if (r.drained) return;
  if (r.row_seen[0] && r.row_seen[1] && r.col_seen[0] && r.col_seen[1] &&
      inj_quiescent(n)) {
    r.drained = true;
    r.drained_seq = barrier_seq_;
    ++drained_count_;
    trace_event("drained", n, "");
    if (drained_count_ == nodes()) barrier_active_ = false;
  }
}

void Network::tick() {
  process_arrivals();
  for (NodeId n = 0; n < nodes(); ++n) process_router(n);
  for (NodeId n = 0; n < nodes(); ++n) arbitrate(n);
  if (barrier_active_) {
    for (NodeId n = 0; n < nodes(); ++n) update_drained(n);
    if (now_ - barrier_started_ > cfg_.watchdog_cycles)
      throw sim_error("net: drain watchdog expired (barrier " +
                      std::to_string(barrier_seq_) + ")");
  }
  if (now_ - last_progress_ > cfg_.watchdog_cycles && !idle())
    throw sim_error("net: no forward progress (possible deadlock)");
  ++now_;
  ++stats_.cycles;
}

bool Network::idle() const {
  if (!arrivals_.empty()) return false;
  for (const Router &r : routers_) {
    if (!r.inj.empty() || !r.pending_brooms.empty()) return false;
    for (const auto &buf : r.in)
      if (!buf.fifo.empty()) return false;
  }
  return true;
}

void Network::begin_barrier(std::uint32_t seq) {
  if (barrier_active_)
    throw sim_error("net: barrier already active");
  if (seq == 0 || seq <= barrier_seq_)
    throw config_error("net: barrier sequence must increase from 1");
  barrier_active_ = true;
  barrier_seq_ = seq;
  barrier_started_ = now_;
  drained_count_ = 0;
  for (NodeId n = 0; n < nodes(); ++n) {
    Router &r = routers_[n];
    assert(r.pending_brooms.empty());
    r.drained = false;
    r.row_seen[0] = r.row_seen[1] = (cfg_.dim_x == 1);
    r.col_seen[0] = r.col_seen[1] = (cfg_.dim_y == 1);
  }
  const NodeId last = nodes() - 1;
  for (std::uint8_t b = 0; b < 2; ++b) {
    const NodeId src = b == 0 ? 0 : last;
    if (cfg_.dim_x > 1) spawn_broom(src, b, BroomWave::Row, src);
    if (cfg_.dim_y > 1) spawn_broom(src, b, BroomWave::Col, src);
    if (cfg_.dim_x > 1 && cfg_.dim_y > 1)
      spawn_broom(src, b, BroomWave::Seed, src);
  }
  trace_event("barrier", 0, std::to_string(seq).c_str());
  note_progress();
  // 1x1 degenerate torus: nothing to sweep
  for (NodeId n = 0; n < nodes(); ++n) update_drained(n);
}

bool Network::is_drained(NodeId node) const { return routers_[node].drained; }

bool Network::all_drained() const {
  return !barrier_active_ && drained_count_ == nodes();
}

void Network::set_compute_ready(NodeId node, std::uint64_t cycle) {
  routers_[node].compute_ready = cycle;
}

std::uint64_t Network::run_barrier() {
  const std::uint64_t start = now_;
  while (barrier_active_) tick();
  return now_ - start;
}

MulticastTree Network::expand_multicast(NodeId src, const BitMask &mask) const {
  MulticastTree tree;
  struct Item {
    NodeId node;
    BitMask mask;
    std::uint8_t phase;
  };
  std::vector<Item> work{{src, mask, 0}};
  while (!work.empty()) {
    Item item = std::move(work.back());
    work.pop_back();
    bool self = false;
    auto outs = compute_outputs(item.node, item.mask, item.phase, self);
    if (self) tree.deliveries.push_back(item.node);
    for (const OutRequest &req : outs) {
      const NodeId next = neighbor(item.node, req.port);
      tree.link_crossings.emplace_back(item.node, next);
      BitMask rest = req.mask;
      if (rest.test(next)) tree.deliveries.push_back(next), rest.clear(next);
      if (!rest.empty()) work.push_back({next, std::move(rest), req.phase});
    }
  }
  return tree;
}

void Network::trace_event(const char *event, NodeId node,
                          const char *detail) const {
  if (!cfg_.trace) return;
  if (!trace_out_) {
    if (cfg_.trace_path.empty()) {
      trace_out_ = std::make_unique<std::ostream>(std::cerr.rdbuf());
    } else {
      trace_out_ = std::make_unique<std::ofstream>(cfg_.trace_path);
    }
  }
  *trace_out_ << "cycle=" << now_ << " event=" << event << " node=" << node
              << (detail && *detail ? " " : "") << (detail ? detail : "")
              << "\n";
}

} // namespace ccsim
