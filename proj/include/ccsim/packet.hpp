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

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ccsim/errors.hpp"

namespace ccsim {

using NodeId = std::uint32_t;

enum class PacketKind : std::uint8_t {
  Proximal = 0,   // encoder spike: record = (input bit)
  Inhibition = 1, // record = (column, overlap)
  Distal = 2,     // record = (column, cell)
  Prediction = 3, // record = (column)
  Broom = 4,      // drain barrier sweep
};
constexpr std::size_t kNumPacketKinds = 5;
const char *packet_kind_name(PacketKind kind);

// One payload record; field meaning depends on the packet kind.
struct Record {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  auto operator<=>(const Record &) const = default;
};

// Multicast destination set over the node id space.
class BitMask {
public:
  BitMask() = default;
  explicit BitMask(std::uint32_t num_nodes)
      : size_(num_nodes), words_((num_nodes + 63) / 64, 0) {}

  void set(NodeId n) { words_[n >> 6] |= (1ULL << (n & 63)); }
  void clear(NodeId n) { words_[n >> 6] &= ~(1ULL << (n & 63)); }
  bool test(NodeId n) const {
    return (words_[n >> 6] >> (n & 63)) & 1ULL;
  }
  std::uint32_t size() const { return size_; }

  bool empty() const {
    for (auto w : words_)
      if (w) return false;
    return true;
  }
  std::uint32_t count() const {
    std::uint32_t c = 0;
    for (auto w : words_) c += static_cast<std::uint32_t>(__builtin_popcountll(w));
    return c;
  }
  template <typename Fn> void for_each(Fn fn) const {
    for (std::size_t wi = 0; wi < words_.size(); ++wi) {
      std::uint64_t w = words_[wi];
      while (w) {
        const int bit = __builtin_ctzll(w);
        fn(static_cast<NodeId>(wi * 64 + bit));
        w &= w - 1;
      }
    }
  }
  bool operator==(const BitMask &other) const = default;

private:
  std::uint32_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

constexpr std::uint32_t kPacketHeaderBits = 16; // kind, epoch tag, record count

struct Packet {
  PacketKind kind = PacketKind::Proximal;
  NodeId src_node = 0;
  BitMask dest_mask;
  std::vector<Record> payload;
  std::uint32_t epoch_tag = 0;
  std::uint32_t record_bits = 0; // payload bits per record (see PacketFormats)

  std::uint32_t size_bits() const {
    return kPacketHeaderBits +
           record_bits * static_cast<std::uint32_t>(payload.size());
  }
  std::uint32_t size_bytes() const { return (size_bits() + 7) / 8; }
  std::uint32_t flits(std::uint32_t link_bytes) const {
    return (size_bits() + 8 * link_bytes - 1) / (8 * link_bytes);
  }
};

struct NetConfig {
  std::uint32_t dim_x = 4;
  std::uint32_t dim_y = 4;
  std::uint32_t link_bytes = 16;     // bytes per cycle per link
  std::uint32_t router_pipeline = 4; // cycles through a router
  std::uint32_t link_latency = 1;    // cycles on the wire
  std::uint32_t buffer_bytes = 160;  // per input port
  std::uint32_t max_packet_bytes = 80;
  double clock_period_ns = 1.0;
  bool coalescing = true;
  std::uint64_t watchdog_cycles = 2000000;
  bool trace = false;             // per-event text log
  std::string trace_path;        // empty: stderr

  // relative energy weights per event class
  double cost_router_traversal = 2.0;
  double cost_link_flit = 1.0;
  double cost_buffer_write = 1.0;
  double cost_buffer_read = 1.0;

  std::uint32_t nodes() const { return dim_x * dim_y; }
  void validate() const;
};

struct KindStats {
  std::uint64_t packets_injected = 0;
  std::uint64_t records_injected = 0;
  std::uint64_t packets_delivered = 0; // one per multicast leaf
  std::uint64_t records_delivered = 0;
  std::uint64_t flit_hops = 0;
};

struct NetStats {
  std::uint64_t cycles = 0;
  std::array<KindStats, kNumPacketKinds> kind{};
  std::uint64_t router_traversals = 0;
  std::uint64_t buffer_writes = 0; // flits entering input buffers
  std::uint64_t buffer_reads = 0;  // flits leaving input buffers or queues
  std::uint64_t expected_deliveries = 0; // multicast expansion of injections
  std::uint64_t deliveries = 0;

  std::uint64_t total_flit_hops() const {
    std::uint64_t t = 0;
    for (const auto &k : kind) t += k.flit_hops;
    return t;
  }
  double energy_units(const NetConfig &cfg) const {
    return cfg.cost_router_traversal * static_cast<double>(router_traversals) +
           cfg.cost_link_flit * static_cast<double>(total_flit_hops()) +
           cfg.cost_buffer_write * static_cast<double>(buffer_writes) +
           cfg.cost_buffer_read * static_cast<double>(buffer_reads);
  }
  NetStats operator-(const NetStats &rhs) const;
};

} // namespace ccsim
