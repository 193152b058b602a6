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

#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "ccsim/network.hpp"
#include "ccsim/rng.hpp"

using namespace ccsim;

namespace {

NetConfig cfg4x4() {
  NetConfig cfg;
  cfg.dim_x = 4;
  cfg.dim_y = 4;
  return cfg;
}

BitMask mask_of(const Network &net, std::initializer_list<NodeId> nodes) {
  BitMask m(net.nodes());
  for (NodeId n : nodes) m.set(n);
  return m;
}

Packet make_packet(const Network &, PacketKind kind, NodeId src, BitMask mask,
                   std::vector<Record> records, std::uint32_t record_bits,
                   std::uint32_t epoch = 0) {
  Packet p;
  p.kind = kind;
  p.src_node = src;
  p.dest_mask = std::move(mask);
  p.payload = std::move(records);
  p.record_bits = record_bits;
  p.epoch_tag = epoch;
  return p;
}

// Independent DOR-tree oracle: union of per-destination dimension-order
// paths (X along the source row toward the destination column, then Y),
// with ring direction chosen per destination by shortest distance, ties +.
std::set<std::pair<NodeId, NodeId>> dor_tree_edges(const Network &net,
                                                   NodeId src,
                                                   const BitMask &mask) {
  std::set<std::pair<NodeId, NodeId>> edges;
  const std::uint32_t X = net.config().dim_x, Y = net.config().dim_y;
  auto step = [](std::uint32_t v, int dir, std::uint32_t size) {
    return (v + size + static_cast<std::uint32_t>(dir)) % size;
  };
  auto dir_of = [](std::uint32_t from, std::uint32_t to, std::uint32_t size) {
    if (size <= 2) return +1;
    const std::uint32_t fwd = (to + size - from) % size;
    return fwd <= size - fwd ? +1 : -1;
  };
  mask.for_each([&](NodeId d) {
    std::uint32_t x = net.x_of(src), y = net.y_of(src);
    const std::uint32_t dx = net.x_of(d), dy = net.y_of(d);
    while (x != dx) {
      const int dir = dir_of(x, dx, X);
      const NodeId from = net.node_at(x, y);
      x = step(x, dir, X);
      edges.insert({from, net.node_at(x, y)});
    }
    while (y != dy) {
      const int dir = dir_of(y, dy, Y);
      const NodeId from = net.node_at(x, y);
      y = step(y, dir, Y);
      edges.insert({from, net.node_at(x, y)});
    }
  });
  return edges;
}

} // namespace

TEST_CASE("torus construction and neighbor arithmetic") {
  NetConfig cfg = cfg4x4();
  Network net(cfg);
  CHECK(net.nodes() == 16);
  for (Port p : {kPortXPlus, kPortXMinus, kPortYPlus, kPortYMinus})
    CHECK(net.port_exists(p));

  CHECK(net.neighbor(5, kPortXPlus) == 6);
  CHECK(net.neighbor(5, kPortXMinus) == 4);
  CHECK(net.neighbor(5, kPortYPlus) == 9);
  CHECK(net.neighbor(5, kPortYMinus) == 1);
  // wraparound
  CHECK(net.neighbor(3, kPortXPlus) == 0);
  CHECK(net.neighbor(0, kPortYMinus) == 12);

  NetConfig bad = cfg;
  bad.dim_x = 0;
  CHECK_THROWS_AS(Network{bad}, config_error);
}

TEST_CASE("degenerate tori collapse duplicate links") {
  NetConfig cfg;
  cfg.dim_x = 1;
  cfg.dim_y = 2;
  Network net(cfg);
  CHECK_FALSE(net.port_exists(kPortXPlus));
  CHECK_FALSE(net.port_exists(kPortXMinus));
  CHECK(net.port_exists(kPortYPlus));
  CHECK_FALSE(net.port_exists(kPortYMinus)); // one bidirectional pair only
  CHECK(net.neighbor(0, kPortYPlus) == 1);
  CHECK(net.neighbor(1, kPortYPlus) == 0);
}

TEST_CASE("adjacent unicast arrives after pipeline + link + serialization") {
  Network net(cfg4x4());
  std::uint64_t delivered_at = ~0ULL;
  net.set_delivery_sink([&](NodeId node, const Packet &p, std::uint64_t cycle) {
    CHECK(node == 1);
    CHECK(p.payload.size() == 1);
    delivered_at = cycle;
  });
  // a single 22-bit record: 38 bits total, one flit on 16-byte links
  net.inject(0, make_packet(net, PacketKind::Inhibition, 0, mask_of(net, {1}),
                            {{7, 3}}, 22),
             1);
  for (int i = 0; i < 20 && delivered_at == ~0ULL; ++i) net.tick();
  CHECK(delivered_at == 6); // 4 pipeline + 1 serialization + 1 link
  CHECK(net.idle());
}

TEST_CASE("empty network ticks produce no traffic deltas") {
  Network net(cfg4x4());
  const NetStats before = net.stats();
  for (int i = 0; i < 1000; ++i) net.tick();
  const NetStats d = net.stats() - before;
  CHECK(d.cycles == 1000);
  CHECK(d.deliveries == 0);
  CHECK(d.router_traversals == 0);
  CHECK(d.buffer_writes == 0);
  for (const auto &k : d.kind) {
    CHECK(k.packets_injected == 0);
    CHECK(k.flit_hops == 0);
  }
}

TEST_CASE("self-addressed packet is a zero-hop local delivery") {
  Network net(cfg4x4());
  int deliveries = 0;
  net.set_delivery_sink([&](NodeId node, const Packet &, std::uint64_t) {
    CHECK(node == 5);
    ++deliveries;
  });
  net.inject(5, make_packet(net, PacketKind::Distal, 5, mask_of(net, {5}),
                            {{1, 2}}, 16),
             1);
  for (int i = 0; i < 10; ++i) net.tick();
  CHECK(deliveries == 1);
  CHECK(net.stats().total_flit_hops() == 0);
  CHECK(net.idle());
}

TEST_CASE("coalescing merges same-mask same-epoch packets") {
  NetConfig cfg = cfg4x4();
  cfg.coalescing = true;
  Network net(cfg);
  const auto mask = mask_of(net, {3, 7});
  CHECK_FALSE(net.inject(0, make_packet(net, PacketKind::Proximal, 0, mask,
                                        {{1, 0}}, 11),
                         1));
  CHECK(net.inject(0, make_packet(net, PacketKind::Proximal, 0, mask, {{2, 0}},
                                  11),
                   1));
  // a different mask starts a fresh packet
  CHECK_FALSE(net.inject(0, make_packet(net, PacketKind::Proximal, 0,
                                        mask_of(net, {3}), {{3, 0}}, 11),
                         1));
  const auto &ks = net.stats().kind[size_t(PacketKind::Proximal)];
  CHECK(ks.packets_injected == 2);
  CHECK(ks.records_injected == 3);
}

// Arithmetic oracle from the size model: payload capacity of an 80-byte
// packet is floor((640 - 16) / 22) = 28 inhibition records.
TEST_CASE("coalesced packet count matches the size-model arithmetic") {
  NetConfig cfg = cfg4x4();
  cfg.coalescing = true;
  Network net(cfg);
  const auto mask = mask_of(net, {9});
  for (std::uint32_t i = 0; i < 100; ++i)
    net.inject(2, make_packet(net, PacketKind::Inhibition, 2, mask,
                              {{i, i % 32}}, 22),
               1);
  const std::uint32_t capacity =
      (8 * cfg.max_packet_bytes - kPacketHeaderBits) / 22;
  CHECK(capacity == 28);
  const std::uint64_t expect = (100 + capacity - 1) / capacity;
  CHECK(net.stats().kind[size_t(PacketKind::Inhibition)].packets_injected ==
        expect);

  // all 100 records arrive
  std::uint64_t records = 0;
  net.set_delivery_sink([&](NodeId, const Packet &p, std::uint64_t) {
    records += p.payload.size();
  });
  while (!net.idle()) net.tick();
  CHECK(records == 100);
}

TEST_CASE("full broadcast reaches every node exactly once") {
  Network net(cfg4x4());
  BitMask all(net.nodes());
  for (NodeId n = 0; n < net.nodes(); ++n) all.set(n);
  std::map<NodeId, int> copies;
  net.set_delivery_sink(
      [&](NodeId node, const Packet &, std::uint64_t) { ++copies[node]; });
  net.inject(0, make_packet(net, PacketKind::Distal, 0, all, {{5, 1}}, 16), 1);
  while (!net.idle()) net.tick();
  CHECK(copies.size() == net.nodes());
  for (const auto &[node, count] : copies) CHECK(count == 1);
}

// Oracle: independent graph walk of the dimension-order replication tree.
TEST_CASE("broadcast flit-hops equal the DOR tree oracle") {
  for (auto [sx, sy] :
       std::vector<std::pair<int, int>>{{0, 0}, {2, 1}, {3, 3}}) {
    Network net(cfg4x4());
    BitMask all(net.nodes());
    for (NodeId n = 0; n < net.nodes(); ++n) all.set(n);
    const NodeId src = net.node_at(sx, sy);
    const auto oracle = dor_tree_edges(net, src, all);

    // static expansion agrees with the oracle
    const auto tree = net.expand_multicast(src, all);
    std::set<std::pair<NodeId, NodeId>> got(tree.link_crossings.begin(),
                                            tree.link_crossings.end());
    CHECK(got.size() == tree.link_crossings.size()); // each edge once
    CHECK(got == oracle);
    CHECK(tree.deliveries.size() == net.nodes());

    // live run agrees (one-flit packet: flit-hops == tree edges)
    net.inject(src,
               make_packet(net, PacketKind::Distal, src, all, {{1, 1}}, 16), 1);
    while (!net.idle()) net.tick();
    CHECK(net.stats().total_flit_hops() == oracle.size());
  }
}

// Oracle: randomized masks, static tree vs independent path-union walker.
TEST_CASE("randomized multicast trees match the oracle") {
  Network net(cfg4x4());
  std::uint64_t h = 31;
  for (int trial = 0; trial < 50; ++trial) {
    h = mix64(h);
    const NodeId src = h % net.nodes();
    BitMask m(net.nodes());
    for (NodeId n = 0; n < net.nodes(); ++n)
      if (mix64(h ^ (n * 771)) & 1) m.set(n);
    if (m.empty()) m.set(src);
    const auto tree = net.expand_multicast(src, m);
    std::set<std::pair<NodeId, NodeId>> got(tree.link_crossings.begin(),
                                            tree.link_crossings.end());
    CHECK(got == dor_tree_edges(net, src, m));
    CHECK(tree.deliveries.size() == m.count());
  }
}

TEST_CASE("1x1 network drains immediately") {
  NetConfig cfg;
  cfg.dim_x = 1;
  cfg.dim_y = 1;
  Network net(cfg);
  net.begin_barrier(1);
  CHECK(net.all_drained());
  CHECK(net.is_drained(0));
}

// Hand-traced wavefront fixture for the empty 2x2 torus. A broom hop costs
// pipeline(4) + serialization(1) + link(1) = 6 cycles. Row waves (two laps
// each) finish certifying by cycle 36; the wave spawns pay an extra bubble
// wait for an empty downstream buffer and one port-contention cycle where
// two copies share a link, so the column waves' final certificates land at
// cycles 54/55 (corner nodes) and 60 (the other two).
TEST_CASE("2x2 drain completes at the hand-traced cycle") {
  NetConfig cfg;
  cfg.dim_x = 2;
  cfg.dim_y = 2;
  Network net(cfg);
  net.begin_barrier(1);
  const std::uint64_t cycles = net.run_barrier();
  CHECK(net.all_drained());
  for (NodeId n = 0; n < 4; ++n) CHECK(net.is_drained(n));
  CHECK(cycles == 61); // last certificate during cycle 60, seen after its tick
}

TEST_CASE("drain flushes in-flight traffic before reporting drained") {
  Network net(cfg4x4());
  std::uint64_t delivered = 0;
  net.set_delivery_sink(
      [&](NodeId, const Packet &, std::uint64_t) { ++delivered; });
  BitMask all(net.nodes());
  for (NodeId n = 0; n < net.nodes(); ++n) all.set(n);
  for (NodeId src : {5u, 10u, 0u})
    net.inject(src,
               make_packet(net, PacketKind::Inhibition, src, all, {{src, 9}},
                           22),
               1);
  net.begin_barrier(1);
  net.run_barrier();
  CHECK(delivered == 3 * net.nodes());
  CHECK(net.late_deliveries() == 0);
  CHECK(net.idle());
  const NetStats &s = net.stats();
  CHECK(s.expected_deliveries == s.deliveries);
}

// Property harness: randomized multicast traffic with a drain per window;
// no packet may arrive after its window's drain completed at the receiver.
TEST_CASE("randomized traffic and drains never deliver late") {
  Network net(cfg4x4());
  std::uint64_t h = 1234;
  for (std::uint32_t window = 1; window <= 200; ++window) {
    const int packets = 1 + (mix64(h + window) % 8);
    for (int i = 0; i < packets; ++i) {
      h = mix64(h);
      const NodeId src = h % net.nodes();
      BitMask m(net.nodes());
      for (NodeId n = 0; n < net.nodes(); ++n)
        if (mix64(h ^ (0x9E37 * (n + 1))) % 3 == 0) m.set(n);
      if (m.empty()) m.set((src + 7) % net.nodes());
      std::vector<Record> recs;
      const int nrec = 1 + (mix64(h ^ 0xF00D) % 5);
      for (int r = 0; r < nrec; ++r)
        recs.push_back({static_cast<std::uint32_t>(h % 512),
                        static_cast<std::uint32_t>((h >> 9) % 32)});
      net.inject(src,
                 make_packet(net, PacketKind::Distal, src, m, recs, 16, window),
                 window);
    }
    net.begin_barrier(window);
    net.run_barrier();
    CHECK(net.idle());
  }
  CHECK(net.late_deliveries() == 0);
  const NetStats &s = net.stats();
  CHECK(s.expected_deliveries == s.deliveries);
}

// Long-run stress: heavy multicast load, then quiesce. The watchdog inside
// tick() turns a deadlock into a test failure.
TEST_CASE("heavy multicast stress drains without stalling") {
  NetConfig cfg = cfg4x4();
  cfg.watchdog_cycles = 200000;
  Network net(cfg);
  std::uint64_t h = 777;
  std::uint64_t injected_windows = 0;
  for (std::uint32_t window = 1; window <= 40; ++window) {
    for (int i = 0; i < 120; ++i) {
      h = mix64(h);
      const NodeId src = h % net.nodes();
      BitMask m(net.nodes());
      for (NodeId n = 0; n < net.nodes(); ++n)
        if (mix64(h ^ (n * 31 + 1)) & 1) m.set(n);
      if (m.empty()) m.set((src + 1) % net.nodes());
      net.inject(src,
                 make_packet(net, PacketKind::Proximal, src, m,
                             {{static_cast<std::uint32_t>(h % 2048), 0}}, 11,
                             window),
                 window);
    }
    ++injected_windows;
    net.begin_barrier(window);
    net.run_barrier();
    REQUIRE(net.idle());
  }
  CHECK(injected_windows == 40);
  CHECK(net.late_deliveries() == 0);
  CHECK(net.stats().expected_deliveries == net.stats().deliveries);
}

TEST_CASE("coalescing does not change the delivered record multiset") {
  using Triple = std::tuple<int, std::uint32_t, std::uint32_t, NodeId>;
  auto run = [&](bool coalescing) {
    NetConfig cfg = cfg4x4();
    cfg.coalescing = coalescing;
    Network net(cfg);
    std::multiset<Triple> seen;
    net.set_delivery_sink([&](NodeId node, const Packet &p, std::uint64_t) {
      for (const Record &r : p.payload)
        seen.insert({int(p.kind), r.a, r.b, node});
    });
    std::uint64_t h = 99;
    for (int i = 0; i < 200; ++i) {
      h = mix64(h);
      const NodeId src = h % net.nodes();
      BitMask m(net.nodes());
      for (NodeId n = 0; n < net.nodes(); ++n)
        if (mix64(h ^ (n * 917)) % 4 == 0) m.set(n);
      if (m.empty()) m.set((src + 3) % net.nodes());
      net.inject(src,
                 make_packet(net, PacketKind::Inhibition, src, m,
                             {{static_cast<std::uint32_t>(h % 512),
                               static_cast<std::uint32_t>(h % 32)}},
                             22, 1),
                 1);
    }
    net.begin_barrier(1);
    net.run_barrier();
    return seen;
  };
  const auto on = run(true);
  const auto off = run(false);
  CHECK(on == off);
  CHECK(on.size() > 0);
}

TEST_CASE("identical configurations and traces evolve identically") {
  auto run = [&]() {
    Network net(cfg4x4());
    std::vector<std::tuple<NodeId, std::uint64_t>> trace;
    net.set_delivery_sink([&](NodeId node, const Packet &, std::uint64_t cy) {
      trace.emplace_back(node, cy);
    });
    std::uint64_t h = 4242;
    for (int i = 0; i < 60; ++i) {
      h = mix64(h);
      BitMask m(net.nodes());
      m.set(h % net.nodes());
      m.set((h >> 8) % net.nodes());
      net.inject((h >> 16) % net.nodes(),
                 make_packet(net, PacketKind::Distal, (h >> 16) % net.nodes(),
                             m,
                             {{static_cast<std::uint32_t>(h % 512),
                               static_cast<std::uint32_t>(h % 16)}},
                             16),
                 1);
    }
    net.begin_barrier(1);
    net.run_barrier();
    return trace;
  };
  CHECK(run() == run());
}

TEST_CASE("energy units recompute from the dumped counters") {
  Network net(cfg4x4());
  BitMask all(net.nodes());
  for (NodeId n = 0; n < net.nodes(); ++n) all.set(n);
  for (NodeId src = 0; src < 4; ++src)
    net.inject(src,
               make_packet(net, PacketKind::Inhibition, src, all,
                           {{src, 1}, {src + 4, 2}}, 22),
               1);
  net.begin_barrier(1);
  net.run_barrier();
  const NetStats &s = net.stats();
  const NetConfig &cfg = net.config();
  const double expect = 2.0 * double(s.router_traversals) +
                        1.0 * double(s.total_flit_hops()) +
                        1.0 * double(s.buffer_writes) +
                        1.0 * double(s.buffer_reads);
  CHECK(s.energy_units(cfg) == expect);
  CHECK(s.router_traversals > 0);
}

TEST_CASE("oversized and malformed injections are rejected") {
  Network net(cfg4x4());
  // 29 records of 22 bits exceed 80 bytes
  std::vector<Record> too_many(29, Record{1, 1});
  CHECK_THROWS_AS(net.inject(0, make_packet(net, PacketKind::Inhibition, 0,
                                            mask_of(net, {1}), too_many, 22),
                             1),
                  config_error);
  CHECK_THROWS_AS(net.inject(0, make_packet(net, PacketKind::Distal, 0,
                                            BitMask(net.nodes()), {{1, 1}}, 16),
                             1),
                  config_error);
}
