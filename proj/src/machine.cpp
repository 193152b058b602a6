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

#include "ccsim/machine.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "ccsim/errors.hpp"

namespace ccsim {

void MachineConfig::validate() const {
  cortex.validate();
  sdr.validate();
  net.validate();
  if (zones == 0) throw config_error("machine: zone count must be positive");
}

Machine::Machine(const MachineConfig &cfg)
    : cfg_(cfg),
      placement_(map_cortex(cfg.cortex, cfg.net.dim_x, cfg.net.dim_y, cfg.zones)),
      formats_(PacketFormats::derive(cfg.cortex, cfg.sdr)),
      net_(cfg.net) {
  cfg_.validate();
  busy_until_.assign(net_.nodes(), 0);

  zones_.resize(cfg_.zones);
  for (std::uint32_t zi = 0; zi < cfg_.zones; ++zi) {
    Zone &z = zones_[zi];
    z.index = zi;
    z.columns = placement_.zone_columns[zi];
    z.nodes = placement_.zone_nodes[zi];
    z.encoder_node = z.nodes.front();
    z.params = cfg_.cortex;
    z.params.num_columns = z.columns.count();
    z.params.id_offset = z.columns.first;
    z.params.geometry_columns = cfg_.cortex.num_columns;
    z.params.validate();
    z.all_nodes_mask = BitMask(net_.nodes());
    for (NodeId n : z.nodes) z.all_nodes_mask.set(n);
  }

  cores_.resize(net_.nodes());
  for (NodeId n = 0; n < net_.nodes(); ++n) {
    Core &core = cores_[n];
    core.node = n;
    core.zone = placement_.zone_of_node[n];
    core.range = placement_.columns_per_node[n];
    const Zone &z = zones_[core.zone];
    core.columns.reserve(core.range.count());
    core.predictive.resize(core.range.count());
    for (ColumnId gid = core.range.first; gid < core.range.last; ++gid)
      core.columns.push_back(
          cla::boot_column(gid - z.columns.first, z.params, cfg_.sdr));
  }

  // per-zone encoder tables: bit -> mask of hosting nodes
  for (Zone &z : zones_) {
    z.bit_masks.assign(cfg_.sdr.k, BitMask(net_.nodes()));
    for (NodeId n : z.nodes) {
      const Core &core = cores_[n];
      for (ColumnId gid = core.range.first; gid < core.range.last; ++gid) {
        const std::uint32_t start = cla::receptive_field_start(
            gid - z.columns.first, z.params, cfg_.sdr);
        const std::uint32_t entries = std::min(
            {z.params.rf_diameter, z.params.proximal_capacity, cfg_.sdr.k});
        for (std::uint32_t s = 0; s < entries; ++s)
          z.bit_masks[(start + s) % cfg_.sdr.k].set(n);
      }
    }
  }

  net_.set_delivery_sink(
      [this](NodeId node, const Packet &p, std::uint64_t cycle) {
        on_delivery(node, p, cycle);
      });
}

void Machine::on_delivery(NodeId node, const Packet &p, std::uint64_t cycle) {
  Core &core = cores_[node];
  const std::uint32_t zone_of_src = placement_.zone_of_node[p.src_node];
  switch (p.kind) {
  case PacketKind::Proximal: {
    auto &inbox = core.prox_in[p.epoch_tag];
    for (const Record &r : p.payload) inbox.push_back(r.a);
    break;
  }
  case PacketKind::Inhibition: {
    if (zone_of_src != core.zone) ++zone_violations_;
    const Zone &z = zones_[core.zone];
    auto &inbox = core.inh_in[p.epoch_tag];
    for (const Record &r : p.payload)
      inbox.emplace_back(r.a - z.columns.first,
                         static_cast<std::uint16_t>(r.b));
    break;
  }
  case PacketKind::Distal: {
    if (zone_of_src != core.zone) ++zone_violations_;
    const Zone &z = zones_[core.zone];
    auto &inbox = core.distal_in[p.epoch_tag];
    for (const Record &r : p.payload)
      inbox.push_back({r.a - z.columns.first, r.b});
    break;
  }
  case PacketKind::Prediction:
    break; // classifier-side traffic; the driver assembles scores itself
  case PacketKind::Broom:
    break;
  }
  if (cfg_.pipelined &&
      (p.kind == PacketKind::Proximal || p.kind == PacketKind::Distal)) {
    // one local memory access per delivered record
    busy_until_[node] = std::max(busy_until_[node], cycle) + p.payload.size();
    net_.set_compute_ready(node, busy_until_[node]);
  }
}

void Machine::emit_proximal(Zone &z, std::uint64_t value) {
  const std::uint32_t epoch = z.fed;
  EpochSlot &slot = z.slots[epoch];
  slot.value = value;
  const Sdr input = encode(value, cfg_.sdr);
  for (std::uint32_t bit : input.active) {
    const BitMask &mask = z.bit_masks[bit];
    if (mask.empty()) continue;
    mask.for_each(
        [&](NodeId n) { cores_[n].expected_prox[epoch].push_back(bit); });
    Packet p;
    p.kind = PacketKind::Proximal;
    p.src_node = z.encoder_node;
    p.dest_mask = mask;
    p.payload = {{bit, 0}};
    p.record_bits = formats_.proximal_bits;
    p.epoch_tag = epoch;
    net_.inject(z.encoder_node, std::move(p), barrier_seq_ + 1);
  }
  ++z.fed;
}

void Machine::emit_inhibition(Zone &z, std::uint32_t epoch) {
  for (NodeId n : z.nodes) {
    Core &core = cores_[n];
    auto &bits = core.prox_in[epoch];
    std::sort(bits.begin(), bits.end());
    auto expected = core.expected_prox[epoch];
    std::sort(expected.begin(), expected.end());
    if (bits != expected)
      throw sim_error("machine: proximal spikes lost or duplicated at node " +
                      std::to_string(n));
    for (std::uint32_t i = 0; i < core.range.count(); ++i) {
      const ColumnId lcol = core.range.first - z.columns.first + i;
      const std::uint16_t overlap = static_cast<std::uint16_t>(
          cla::column_overlap(core.columns[i], bits, z.params));
      Packet p;
      p.kind = PacketKind::Inhibition;
      p.src_node = n;
      p.dest_mask = z.all_nodes_mask;
      p.payload = {{lcol + z.columns.first, overlap}};
      p.record_bits = formats_.inhibition_bits;
      p.epoch_tag = epoch;
      net_.inject(n, std::move(p), barrier_seq_ + 1);
    }
  }
}

ActivitySet Machine::activity_from_inbox(const Core &core, const Zone &z,
                                         std::uint32_t epoch) const {
  std::vector<CellRef> cells;
  auto it = core.distal_in.find(epoch);
  if (it != core.distal_in.end()) cells = it->second;
  return ActivitySet::from_list(std::move(cells), z.params.num_columns,
                                z.params.cells_per_column);
}

void Machine::compute_s6(Zone &z, std::uint32_t epoch) {
  EpochSlot &slot = z.slots[epoch];
  std::vector<ColumnId> zone_active;
  for (NodeId n : z.nodes) {
    Core &core = cores_[n];
    // zone-wide overlap table; every column must report exactly once
    std::vector<std::uint16_t> overlaps(z.params.num_columns, 0);
    std::vector<std::uint8_t> seen(z.params.num_columns, 0);
    for (const auto &[lcol, ov] : core.inh_in[epoch]) {
      if (lcol >= overlaps.size() || seen[lcol])
        throw sim_error("machine: bad or duplicate inhibition record");
      seen[lcol] = 1;
      overlaps[lcol] = ov;
    }
    for (std::uint8_t s : seen)
      if (!s) throw sim_error("machine: missing inhibition record");

    const auto winners = cla::inhibition_winners(overlaps, z.params.n_win());
    const ActivitySet prev =
        epoch > 0 ? activity_from_inbox(core, z, epoch - 1)
                  : ActivitySet::from_list({}, z.params.num_columns,
                                           z.params.cells_per_column);
    auto &bits = core.prox_in[epoch];
    auto &own_cells = core.own_active_cells[epoch];
    for (std::uint32_t i = 0; i < core.range.count(); ++i) {
      const ColumnId lcol = core.range.first - z.columns.first + i;
      if (!std::binary_search(winners.begin(), winners.end(), lcol)) continue;
      zone_active.push_back(lcol);
      const auto activation = cla::activate_column(z.params, core.predictive[i]);
      if (activation.bursted) ++slot.bursting;
      for (CellId t : activation.active_cells) own_cells.push_back({lcol, t});
      if (z.params.learning) {
        cla::adapt_proximal_column(core.columns[i], lcol, epoch, bits,
                                   z.params);
        cla::learn_distal_column(core.columns[i], lcol, epoch,
                                 core.predictive[i], activation.bursted, prev,
                                 z.params);
      }
    }
    core.prox_in.erase(epoch);
    core.inh_in.erase(epoch);
    core.expected_prox.erase(epoch);
    if (epoch > 0) core.distal_in.erase(epoch - 1);
  }
  std::sort(zone_active.begin(), zone_active.end());
  slot.active = std::move(zone_active);
  slot.anomaly = cla::anomaly_score(slot.active, z.predicted_for_epoch);
  slot.s6_done = true;
  ++z.s6_done;
}

void Machine::emit_distal(Zone &z, std::uint32_t epoch) {
  for (NodeId n : z.nodes) {
    Core &core = cores_[n];
    auto it = core.own_active_cells.find(epoch);
    if (it == core.own_active_cells.end()) continue;
    for (const CellRef &c : it->second) {
      Packet p;
      p.kind = PacketKind::Distal;
      p.src_node = n;
      p.dest_mask = z.all_nodes_mask;
      p.payload = {{c.column + z.columns.first, c.cell}};
      p.record_bits = formats_.distal_bits;
      p.epoch_tag = epoch;
      net_.inject(n, std::move(p), barrier_seq_ + 1);
    }
  }
  ++z.distal_emitted;
}

void Machine::compute_s9(Zone &z, std::uint32_t epoch) {
  EpochSlot &slot = z.slots[epoch];
  // zone-wide expectation: the union of what the cores multicast
  std::vector<CellRef> expected;
  for (NodeId n : z.nodes) {
    auto it = cores_[n].own_active_cells.find(epoch);
    if (it != cores_[n].own_active_cells.end())
      expected.insert(expected.end(), it->second.begin(), it->second.end());
  }
  std::sort(expected.begin(), expected.end());

  std::vector<ColumnId> zone_predicted;
  for (NodeId n : z.nodes) {
    Core &core = cores_[n];
    std::vector<CellRef> got = core.distal_in[epoch];
    std::sort(got.begin(), got.end());
    if (got != expected)
      throw sim_error(
          "machine: distal activations lost or duplicated at node " +
          std::to_string(n));
    const ActivitySet activity = activity_from_inbox(core, z, epoch);
    std::vector<ColumnId> own_predicted;
    for (std::uint32_t i = 0; i < core.range.count(); ++i) {
      const ColumnId lcol = core.range.first - z.columns.first + i;
      core.predictive[i] =
          cla::predictive_cells(core.columns[i], activity, z.params);
      if (!core.predictive[i].empty()) {
        zone_predicted.push_back(lcol);
        own_predicted.push_back(lcol);
      }
    }
    core.pending_predictions[epoch] = std::move(own_predicted);
    core.own_active_cells.erase(epoch);
  }
  std::sort(zone_predicted.begin(), zone_predicted.end());
  slot.predicted_next = zone_predicted;
  z.predicted_for_epoch = std::move(zone_predicted);
  slot.s9_done = true;
  ++z.s9_done;
}

void Machine::emit_predictions(Zone &z, std::uint32_t epoch) {
  BitMask classifier(net_.nodes());
  classifier.set(0);
  for (NodeId n : z.nodes) {
    Core &core = cores_[n];
    auto it = core.pending_predictions.find(epoch);
    if (it == core.pending_predictions.end()) continue;
    for (ColumnId lcol : it->second) {
      Packet p;
      p.kind = PacketKind::Prediction;
      p.src_node = n;
      p.dest_mask = classifier;
      p.payload = {{lcol + z.columns.first, 0}};
      p.record_bits = formats_.prediction_bits;
      p.epoch_tag = epoch;
      net_.inject(n, std::move(p), barrier_seq_ + 1);
    }
    core.pending_predictions.erase(it);
  }
  ++z.pred_emitted;
}

void Machine::run_barrier_stage() {
  ++barrier_seq_;
  net_.begin_barrier(barrier_seq_);
  net_.run_barrier();
}

void Machine::idle_compute(std::uint64_t cycles) {
  for (std::uint64_t i = 0; i < cycles; ++i) net_.tick();
}

std::uint64_t Machine::max_inbox(const Zone &z, std::uint32_t epoch,
                                 bool prox) const {
  std::uint64_t m = 0;
  for (NodeId n : z.nodes) {
    const Core &core = cores_[n];
    if (prox) {
      auto it = core.prox_in.find(epoch);
      if (it != core.prox_in.end())
        m = std::max<std::uint64_t>(m, it->second.size());
    } else {
      auto it = core.distal_in.find(epoch);
      if (it != core.distal_in.end())
        m = std::max<std::uint64_t>(m, it->second.size());
    }
  }
  return m;
}

void Machine::finalize_results(Zone &z, std::vector<StreamResult> &out,
                               const NetStats &stage_delta,
                               std::uint64_t stage_cycles,
                               std::uint32_t drains) {
  for (auto it = z.slots.begin(); it != z.slots.end();) {
    EpochSlot &slot = it->second;
    if (!slot.s6_done || !slot.s9_done) {
      ++it;
      continue;
    }
    StreamResult r;
    r.stream_index = slot.stream_index;
    r.zone = z.index;
    r.zone_epoch = it->first;
    r.active.reserve(slot.active.size());
    for (ColumnId lcol : slot.active)
      r.active.push_back(lcol + z.columns.first);
    for (ColumnId lcol : slot.predicted_next)
      r.predicted_next.push_back(lcol + z.columns.first);
    r.anomaly = slot.anomaly;
    r.bursting_columns = slot.bursting;
    r.cycles = stage_cycles;
    r.stage_stats = stage_delta;
    r.drains = drains;
    out.push_back(std::move(r));
    it = z.slots.erase(it);
  }
}

std::vector<StreamResult>
Machine::run_stream(std::span<const std::uint64_t> values) {
  std::vector<StreamResult> results;
  std::size_t next_value = 0;

  if (!cfg_.pipelined) {
    while (next_value < values.size()) {
      const std::uint64_t stage_start = net_.now();
      const NetStats stats_start = net_.stats();
      // classifier traffic computed at the previous epoch's S9
      for (Zone &z : zones_)
        while (z.pred_emitted < z.s9_done) emit_predictions(z, z.pred_emitted);

      std::vector<std::pair<Zone *, std::uint32_t>> participants;
      for (Zone &z : zones_) {
        if (next_value >= values.size()) break;
        const std::uint32_t epoch = z.fed;
        emit_proximal(z, values[next_value]);
        z.slots[epoch].stream_index =
            static_cast<std::uint32_t>(stream_cursor_ + next_value);
        participants.emplace_back(&z, epoch);
        ++next_value;
      }
      run_barrier_stage(); // S2
      std::uint64_t prox_load = 0;
      for (auto &[z, e] : participants)
        prox_load = std::max(prox_load, max_inbox(*z, e, true));
      idle_compute(prox_load); // S3: one cycle per delivered spike
      for (auto &[z, e] : participants) {
        emit_inhibition(*z, e);
        ++z->inh_emitted;
      }
      run_barrier_stage(); // S5
      for (auto &[z, e] : participants) {
        compute_s6(*z, e);  // S6
        emit_distal(*z, e); // S7
      }
      run_barrier_stage(); // S8
      std::uint64_t distal_load = 0;
      for (auto &[z, e] : participants)
        distal_load = std::max(distal_load, max_inbox(*z, e, false));
      idle_compute(distal_load); // S9: one cycle per delivered activation
      for (auto &[z, e] : participants) compute_s9(*z, e);

      const NetStats delta = net_.stats() - stats_start;
      const std::uint64_t cycles = net_.now() - stage_start;
      for (Zone &z : zones_) finalize_results(z, results, delta, cycles, 3);
    }
    // flush the final epoch's classifier traffic so the machine quiesces
    bool flushed = false;
    for (Zone &z : zones_)
      while (z.pred_emitted < z.s9_done) {
        emit_predictions(z, z.pred_emitted);
        flushed = true;
      }
    if (flushed) run_barrier_stage();
  } else {
    // one barrier per stage, three epochs in flight per zone
    auto work_left = [&] {
      if (next_value < values.size()) return true;
      for (const Zone &z : zones_)
        if (z.s9_done < z.fed || z.pred_emitted < z.s9_done) return true;
      return false;
    };
    while (work_left()) {
      const std::uint64_t stage_start = net_.now();
      const NetStats stats_start = net_.stats();
      std::vector<std::uint32_t> fed_before(zones_.size());
      std::vector<std::uint32_t> s6_before(zones_.size());
      for (std::size_t i = 0; i < zones_.size(); ++i) {
        fed_before[i] = zones_[i].fed;
        s6_before[i] = zones_[i].s6_done;
      }
      for (Zone &z : zones_)
        while (z.pred_emitted < z.s9_done) emit_predictions(z, z.pred_emitted);
      for (Zone &z : zones_) {
        if (next_value >= values.size()) break;
        const std::uint32_t epoch = z.fed;
        emit_proximal(z, values[next_value]);
        z.slots[epoch].stream_index =
            static_cast<std::uint32_t>(stream_cursor_ + next_value);
        ++next_value;
      }
      for (std::size_t i = 0; i < zones_.size(); ++i) {
        Zone &z = zones_[i];
        if (z.inh_emitted < fed_before[i]) {
          emit_inhibition(z, z.inh_emitted);
          ++z.inh_emitted;
        }
        if (z.distal_emitted < s6_before[i]) emit_distal(z, z.distal_emitted);
      }
      run_barrier_stage();
      // consume what this stage's drain delivered; S9 of epoch e runs before
      // S6 of epoch e+1, which needs its predictions
      for (Zone &z : zones_) {
        if (z.s9_done < z.distal_emitted) compute_s9(z, z.s9_done);
        if (z.s6_done < z.inh_emitted) compute_s6(z, z.s6_done);
      }
      const NetStats delta = net_.stats() - stats_start;
      const std::uint64_t cycles = net_.now() - stage_start;
      for (Zone &z : zones_) finalize_results(z, results, delta, cycles, 1);
    }
  }
  stream_cursor_ += static_cast<std::uint32_t>(values.size());
  std::sort(results.begin(), results.end(),
            [](const StreamResult &a, const StreamResult &b) {
              return a.stream_index < b.stream_index;
            });
  return results;
}

CortexModel Machine::make_zone_reference(std::uint32_t zone) const {
  return CortexModel(zones_[zone].params, cfg_.sdr);
}

namespace {
constexpr std::uint64_t kMachineMagic = 0x4843414D434331ULL; // "1CCMACH"
} // namespace

void Machine::save(std::ostream &out) const {
  for (const Zone &z : zones_)
    if (z.s9_done != z.fed || z.pred_emitted != z.s9_done)
      throw sim_error("machine: snapshot requires a quiescent pipeline");
  out.write(reinterpret_cast<const char *>(&kMachineMagic),
            sizeof(kMachineMagic));
  const std::uint32_t nz = static_cast<std::uint32_t>(zones_.size());
  out.write(reinterpret_cast<const char *>(&nz), sizeof(nz));
  for (const Zone &z : zones_) {
    CortexModel model(z.params, cfg_.sdr);
    std::vector<std::vector<CellId>> predictive(z.params.num_columns);
    for (NodeId n : z.nodes) {
      const Core &core = cores_[n];
      for (std::uint32_t i = 0; i < core.range.count(); ++i) {
        const ColumnId lcol = core.range.first - z.columns.first + i;
        model.columns()[lcol] = core.columns[i];
        predictive[lcol] = core.predictive[i];
      }
    }
    ActivitySet prev = ActivitySet::from_list({}, z.params.num_columns,
                                              z.params.cells_per_column);
    if (z.fed > 0)
      prev = activity_from_inbox(cores_[z.nodes.front()], z, z.fed - 1);
    model.set_state(std::move(prev), std::move(predictive), z.fed);
    model.save(out);
  }
}

void Machine::load(std::istream &in) {
  std::uint64_t magic = 0;
  in.read(reinterpret_cast<char *>(&magic), sizeof(magic));
  if (!in || magic != kMachineMagic)
    throw sim_error("machine: bad snapshot magic");
  std::uint32_t nz = 0;
  in.read(reinterpret_cast<char *>(&nz), sizeof(nz));
  if (!in || nz != zones_.size())
    throw sim_error("machine: snapshot zone count mismatch");
  for (Zone &z : zones_) {
    CortexModel model = CortexModel::load(in);
    if (model.params().num_columns != z.params.num_columns)
      throw sim_error("machine: snapshot geometry mismatch");
    const std::uint32_t epoch = model.epoch();
    for (NodeId n : z.nodes) {
      Core &core = cores_[n];
      core.prox_in.clear();
      core.inh_in.clear();
      core.distal_in.clear();
      core.own_active_cells.clear();
      core.expected_prox.clear();
      core.pending_predictions.clear();
      for (std::uint32_t i = 0; i < core.range.count(); ++i) {
        const ColumnId lcol = core.range.first - z.columns.first + i;
        core.columns[i] = model.columns()[lcol];
        core.predictive[i] = model.predictive()[lcol];
      }
      if (epoch > 0) core.distal_in[epoch - 1] = model.prev_active().list;
    }
    z.fed = z.inh_emitted = z.distal_emitted = z.pred_emitted = epoch;
    z.s6_done = z.s9_done = epoch;
    z.predicted_for_epoch = model.predicted_columns();
    z.slots.clear();
  }
}

VerifyReport verify_against_reference(std::span<const StreamResult> accel,
                                      std::span<const EpochResult> ref) {
  VerifyReport report;
  const std::size_t n = std::min(accel.size(), ref.size());
  for (std::size_t e = 0; e < n; ++e) {
    std::ostringstream what;
    if (accel[e].active != ref[e].active)
      what << "active column sets differ";
    else if (accel[e].predicted_next != ref[e].predicted_next)
      what << "predicted column sets differ";
    else if (accel[e].anomaly != ref[e].anomaly)
      what << "anomaly scores differ (" << accel[e].anomaly << " vs "
           << ref[e].anomaly << ")";
    else
      continue;
    report.first_divergence = static_cast<std::uint32_t>(e);
    report.detail = what.str();
    return report;
  }
  if (accel.size() != ref.size()) {
    report.first_divergence = static_cast<std::uint32_t>(n);
    report.detail = "trace lengths differ";
  }
  return report;
}

} // namespace ccsim
