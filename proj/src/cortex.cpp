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

#include "ccsim/cortex.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>

#include "ccsim/errors.hpp"
#include "ccsim/rng.hpp"

namespace ccsim {

void CortexParams::validate() const {
  if (num_columns == 0) throw config_error("cortex: num_columns must be positive");
  if (cells_per_column == 0)
    throw config_error("cortex: cells_per_column must be positive");
  if (density <= 0.0 || density > 1.0)
    throw config_error("cortex: density must be in (0, 1]");
  if (n_win() == 0)
    throw config_error("cortex: density * num_columns yields zero winners");
  if (perm_max == 0 || perm_max > 255)
    throw config_error("cortex: perm_max must be in [1, 255]");
  if (perm_connected > perm_max || perm_init_hi > perm_max ||
      perm_init_lo > perm_init_hi || distal_init > perm_max)
    throw config_error("cortex: permanence levels out of range");
  if (rf_diameter == 0) throw config_error("cortex: rf_diameter must be positive");
  if (max_synapses_per_segment == 0 || max_segments_per_cell == 0)
    throw config_error("cortex: segment capacities must be positive");
  if (geometry_columns != 0 && id_offset + num_columns > geometry_columns)
    throw config_error("cortex: zone range exceeds the cortex geometry");
}

ActivitySet ActivitySet::from_list(std::vector<CellRef> cells,
                                   std::uint32_t num_columns,
                                   std::uint32_t cells_per_column) {
  ActivitySet s;
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  s.list = std::move(cells);
  s.flags.assign(static_cast<size_t>(num_columns) * cells_per_column, 0);
  for (const CellRef &c : s.list)
    s.flags[static_cast<size_t>(c.column) * cells_per_column + c.cell] = 1;
  return s;
}

namespace cla {

std::uint32_t receptive_field_start(ColumnId column, const CortexParams &cp,
                                    const SdrParams &sp) {
  const std::uint64_t center =
      (static_cast<std::uint64_t>(cp.global_id(column)) * sp.k) /
      cp.geometry_total();
  const std::uint32_t radius = cp.rf_diameter / 2;
  return static_cast<std::uint32_t>((center + sp.k - radius) % sp.k);
}

Column boot_column(ColumnId column, const CortexParams &cp, const SdrParams &sp) {
  Column col;
  const std::uint32_t start = receptive_field_start(column, cp, sp);
  const std::uint32_t entries =
      std::min({cp.rf_diameter, cp.proximal_capacity, sp.k});
  col.proximal.reserve(entries);
  for (std::uint32_t slot = 0; slot < entries; ++slot) {
    ProximalSynapse syn;
    syn.bit = (start + slot) % sp.k;
    const std::uint64_t h = keyed_hash(
        {cp.seed, rng_purpose::kProximalInit, cp.global_id(column), slot});
    syn.permanence = static_cast<std::uint8_t>(hash_to_range(
        h, static_cast<int>(cp.perm_init_lo), static_cast<int>(cp.perm_init_hi)));
    col.proximal.push_back(syn);
  }
  std::sort(col.proximal.begin(), col.proximal.end(),
            [](const ProximalSynapse &a, const ProximalSynapse &b) {
              return a.bit < b.bit;
            });
  col.cells.resize(cp.cells_per_column);
  return col;
}

std::uint32_t column_overlap(const Column &col,
                             std::span<const std::uint32_t> input_bits,
                             const CortexParams &cp) {
  std::uint32_t count = 0;
  auto syn = col.proximal.begin();
  auto bit = input_bits.begin();
  while (syn != col.proximal.end() && bit != input_bits.end()) {
    if (syn->bit < *bit) {
      ++syn;
    } else if (*bit < syn->bit) {
      ++bit;
    } else {
      if (syn->permanence >= cp.perm_connected) ++count;
      ++syn;
      ++bit;
    }
  }
  return count;
}

std::vector<ColumnId> inhibition_winners(std::span<const std::uint16_t> overlaps,
                                         std::uint32_t n_win) {
  std::vector<ColumnId> order(overlaps.size());
  std::iota(order.begin(), order.end(), 0);
  const std::uint32_t take =
      std::min<std::uint32_t>(n_win, static_cast<std::uint32_t>(order.size()));
  std::partial_sort(order.begin(), order.begin() + take, order.end(),
                    [&](ColumnId a, ColumnId b) {
                      if (overlaps[a] != overlaps[b])
                        return overlaps[a] > overlaps[b];
                      return a < b;
                    });
  std::vector<ColumnId> winners(order.begin(), order.begin() + take);
  std::sort(winners.begin(), winners.end());
  return winners;
}

double anomaly_score(std::span<const ColumnId> active,
                     std::span<const ColumnId> predicted) {
  if (active.empty()) return 0.0;
  std::uint32_t hit = 0;
  auto a = active.begin();
  auto p = predicted.begin();
  while (a != active.end() && p != predicted.end()) {
    if (*a < *p) {
      ++a;
    } else if (*p < *a) {
      ++p;
    } else {
      ++hit;
      ++a;
      ++p;
    }
  }
  return static_cast<double>(active.size() - hit) /
         static_cast<double>(active.size());
}

void adapt_proximal_column(Column &col, ColumnId id, std::uint32_t epoch,
                           std::span<const std::uint32_t> input_bits,
                           const CortexParams &cp) {
  const int max = static_cast<int>(cp.perm_max);
  for (ProximalSynapse &syn : col.proximal) {
    const bool active =
        std::binary_search(input_bits.begin(), input_bits.end(), syn.bit);
    const std::uint64_t key = keyed_hash(
        {cp.seed, rng_purpose::kSpRound, epoch, cp.global_id(id), syn.bit});
    int value = syn.permanence;
    if (active) {
      value += stochastic_round(cp.sp_learn_levels(), key);
    } else {
      value -= stochastic_round(cp.sp_forget_levels(), key);
    }
    syn.permanence = static_cast<std::uint8_t>(std::clamp(value, 0, max));
  }
}

ColumnActivation activate_column(const CortexParams &cp,
                                 std::span<const CellId> predicted_cells) {
  ColumnActivation out;
  if (predicted_cells.empty()) {
    out.bursted = true;
    out.active_cells.resize(cp.cells_per_column);
    std::iota(out.active_cells.begin(), out.active_cells.end(), 0);
  } else {
    out.active_cells.assign(predicted_cells.begin(), predicted_cells.end());
  }
  return out;
}

namespace {

std::uint32_t matching_synapses(const DistalSegment &seg,
                                const ActivitySet &activity,
                                std::uint32_t cells_per_column) {
  std::uint32_t count = 0;
  for (const DistalSynapse &syn : seg.synapses)
    if (activity.contains(syn.presynaptic.column, syn.presynaptic.cell,
                          cells_per_column))
      ++count;
  return count;
}

std::uint32_t active_connected_synapses(const DistalSegment &seg,
                                        const ActivitySet &activity,
                                        const CortexParams &cp) {
  std::uint32_t count = 0;
  for (const DistalSynapse &syn : seg.synapses)
    if (syn.permanence >= cp.perm_connected &&
        activity.contains(syn.presynaptic.column, syn.presynaptic.cell,
                          cp.cells_per_column))
      ++count;
  return count;
}

// Strengthens synapses onto previously active cells, weakens the rest, and
// drops synapses that decay to zero.
void reinforce_segment(DistalSegment &seg, ColumnId id, CellId cell,
                       std::uint32_t seg_index, std::uint32_t epoch,
                       const ActivitySet &prev_active, const CortexParams &cp) {
  const int max = static_cast<int>(cp.perm_max);
  for (DistalSynapse &syn : seg.synapses) {
    const bool was_active = prev_active.contains(
        syn.presynaptic.column, syn.presynaptic.cell, cp.cells_per_column);
    const std::uint64_t key = keyed_hash(
        {cp.seed, rng_purpose::kTmRound, epoch, cp.global_id(id), cell,
         seg_index, syn.presynaptic.column, syn.presynaptic.cell});
    int value = syn.permanence;
    if (was_active) {
      value += stochastic_round(cp.tm_levels(), key);
    } else {
      value -= stochastic_round(cp.tm_levels(), key);
    }
    syn.permanence = static_cast<std::uint8_t>(std::clamp(value, 0, max));
  }
  std::erase_if(seg.synapses,
                [](const DistalSynapse &s) { return s.permanence == 0; });
  seg.last_reinforced = epoch;
}

// Grows synapses onto a keyed-random sample of previously active cells that
// the segment does not reference yet, up to the segment capacity.
void grow_segment(DistalSegment &seg, ColumnId id, CellId cell,
                  std::uint32_t epoch, const ActivitySet &prev_active,
                  const CortexParams &cp) {
  if (seg.synapses.size() >= cp.max_synapses_per_segment) return;
  std::vector<CellRef> candidates;
  candidates.reserve(prev_active.list.size());
  for (const CellRef &c : prev_active.list) {
    const bool present = std::any_of(
        seg.synapses.begin(), seg.synapses.end(),
        [&](const DistalSynapse &s) { return s.presynaptic == c; });
    if (!present) candidates.push_back(c);
  }
  const std::uint32_t room =
      cp.max_synapses_per_segment - static_cast<std::uint32_t>(seg.synapses.size());
  const std::uint32_t grow =
      std::min<std::uint32_t>(room, static_cast<std::uint32_t>(candidates.size()));
  // keyed partial Fisher-Yates over the candidate list
  for (std::uint32_t i = 0; i < grow; ++i) {
    const std::uint64_t h = keyed_hash(
        {cp.seed, rng_purpose::kGrowSample, epoch, cp.global_id(id), cell, i});
    const auto j =
        i + static_cast<std::uint32_t>(h % (candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
    DistalSynapse syn;
    syn.presynaptic = candidates[i];
    syn.permanence = static_cast<std::uint8_t>(cp.distal_init);
    seg.synapses.push_back(syn);
  }
  std::sort(seg.synapses.begin(), seg.synapses.end(),
            [](const DistalSynapse &a, const DistalSynapse &b) {
              return a.presynaptic < b.presynaptic;
            });
}

struct BestMatch {
  bool found = false;
  CellId cell = 0;
  std::uint32_t segment = 0;
};

// Best matching segment of the whole column: most stored synapses onto
// previously active cells, at least theta_match of them. Ties prefer the
// lowest cell, then the lowest segment index.
BestMatch best_matching_segment(const Column &col, const ActivitySet &prev_active,
                                const CortexParams &cp) {
  BestMatch best;
  std::uint32_t best_count = 0;
  for (CellId t = 0; t < col.cells.size(); ++t) {
    const Cell &cell = col.cells[t];
    for (std::uint32_t s = 0; s < cell.segments.size(); ++s) {
      const std::uint32_t m =
          matching_synapses(cell.segments[s], prev_active, cp.cells_per_column);
      if (m >= cp.theta_match && m > best_count) {
        best_count = m;
        best.found = true;
        best.cell = t;
        best.segment = s;
      }
    }
  }
  return best;
}

CellId least_used_cell(const Column &col) {
  CellId chosen = 0;
  size_t fewest = col.cells.empty() ? 0 : col.cells[0].segments.size();
  for (CellId t = 1; t < col.cells.size(); ++t) {
    if (col.cells[t].segments.size() < fewest) {
      fewest = col.cells[t].segments.size();
      chosen = t;
    }
  }
  return chosen;
}

} // namespace

void learn_distal_column(Column &col, ColumnId id, std::uint32_t epoch,
                         std::span<const CellId> predicted_cells, bool bursted,
                         const ActivitySet &prev_active, const CortexParams &cp) {
  if (!bursted) {
    // Correctly predicted: reinforce every segment that predicted each cell.
    for (CellId t : predicted_cells) {
      Cell &cell = col.cells[t];
      for (std::uint32_t s = 0; s < cell.segments.size(); ++s)
        if (active_connected_synapses(cell.segments[s], prev_active, cp) >=
            cp.theta_act)
          reinforce_segment(cell.segments[s], id, t, s, epoch, prev_active, cp);
    }
    return;
  }
  if (prev_active.list.empty()) return; // nothing to connect to

  const BestMatch match = best_matching_segment(col, prev_active, cp);
  if (match.found) {
    DistalSegment &seg = col.cells[match.cell].segments[match.segment];
    reinforce_segment(seg, id, match.cell, match.segment, epoch, prev_active, cp);
    grow_segment(seg, id, match.cell, epoch, prev_active, cp);
    return;
  }

  const CellId learner = least_used_cell(col);
  Cell &cell = col.cells[learner];
  if (cell.segments.size() >= cp.max_segments_per_cell) {
    // evict the least recently reinforced segment
    std::uint32_t victim = 0;
    for (std::uint32_t s = 1; s < cell.segments.size(); ++s)
      if (cell.segments[s].last_reinforced <
          cell.segments[victim].last_reinforced)
        victim = s;
    cell.segments.erase(cell.segments.begin() + victim);
  }
  DistalSegment seg;
  seg.last_reinforced = epoch;
  grow_segment(seg, id, learner, epoch, prev_active, cp);
  cell.segments.push_back(std::move(seg));
}

std::vector<CellId> predictive_cells(const Column &col,
                                     const ActivitySet &current_active,
                                     const CortexParams &cp) {
  std::vector<CellId> out;
  for (CellId t = 0; t < col.cells.size(); ++t) {
    for (const DistalSegment &seg : col.cells[t].segments) {
      if (active_connected_synapses(seg, current_active, cp) >= cp.theta_act) {
        out.push_back(t);
        break;
      }
    }
  }
  return out;
}

} // namespace cla

CortexModel::CortexModel(const CortexParams &cp, const SdrParams &sp)
    : params_(cp), sdr_params_(sp) {
  params_.validate();
  sdr_params_.validate();
  columns_.reserve(cp.num_columns);
  for (ColumnId c = 0; c < cp.num_columns; ++c)
    columns_.push_back(cla::boot_column(c, params_, sdr_params_));
  prev_active_ =
      ActivitySet::from_list({}, cp.num_columns, cp.cells_per_column);
  predictive_.resize(cp.num_columns);
}

std::vector<std::uint16_t> CortexModel::compute_overlaps(const Sdr &input) const {
  if (input.params.k != sdr_params_.k)
    throw config_error("cortex: input width does not match encoder config");
  std::vector<std::uint16_t> overlaps(columns_.size());
  for (ColumnId c = 0; c < columns_.size(); ++c)
    overlaps[c] = static_cast<std::uint16_t>(
        cla::column_overlap(columns_[c], input.active, params_));
  return overlaps;
}

std::vector<ColumnId> CortexModel::predicted_columns() const {
  std::vector<ColumnId> out;
  for (ColumnId c = 0; c < predictive_.size(); ++c)
    if (!predictive_[c].empty()) out.push_back(c);
  return out;
}

EpochResult CortexModel::step(const Sdr &input) {
  const auto overlaps = compute_overlaps(input);
  EpochResult result;
  result.active = cla::inhibition_winners(overlaps, params_.n_win());
  result.anomaly = cla::anomaly_score(result.active, predicted_columns());

  std::vector<CellRef> active_cells;
  std::vector<std::pair<ColumnId, bool>> burst_info; // (column, bursted)
  for (ColumnId c : result.active) {
    const auto activation = cla::activate_column(params_, predictive_[c]);
    if (activation.bursted) ++result.bursting_columns;
    burst_info.emplace_back(c, activation.bursted);
    for (CellId t : activation.active_cells) active_cells.push_back({c, t});
  }

  if (params_.learning) {
    for (const auto &[c, bursted] : burst_info) {
      cla::adapt_proximal_column(columns_[c], c, epoch_, input.active, params_);
      cla::learn_distal_column(columns_[c], c, epoch_, predictive_[c], bursted,
                               prev_active_, params_);
    }
  }

  ActivitySet current = ActivitySet::from_list(
      std::move(active_cells), params_.num_columns, params_.cells_per_column);
  for (ColumnId c = 0; c < columns_.size(); ++c)
    predictive_[c] = cla::predictive_cells(columns_[c], current, params_);
  result.predicted_next = predicted_columns();

  prev_active_ = std::move(current);
  ++epoch_;
  return result;
}

// --- snapshot serialization ------------------------------------------------

namespace {

constexpr std::uint64_t kSnapshotMagic = 0x50414E53434331ULL; // "1CCSNAP"
constexpr std::uint32_t kSnapshotVersion = 1;

template <typename T> void put(std::ostream &out, T value) {
  out.write(reinterpret_cast<const char *>(&value), sizeof(value));
}

template <typename T> T get(std::istream &in) {
  T value{};
  in.read(reinterpret_cast<char *>(&value), sizeof(value));
  if (!in) throw sim_error("snapshot: truncated stream");
  return value;
}

} // namespace

void CortexModel::save(std::ostream &out) const {
  put(out, kSnapshotMagic);
  put(out, kSnapshotVersion);
  const CortexParams &p = params_;
  put(out, p.num_columns);
  put(out, p.cells_per_column);
  put(out, p.density);
  put(out, p.rf_diameter);
  put(out, p.proximal_capacity);
  put(out, p.max_segments_per_cell);
  put(out, p.max_synapses_per_segment);
  put(out, p.theta_act);
  put(out, p.theta_match);
  put(out, p.perm_max);
  put(out, p.perm_connected);
  put(out, p.perm_init_lo);
  put(out, p.perm_init_hi);
  put(out, p.distal_init);
  put(out, p.sp_learn_rate);
  put(out, p.sp_forget_rate);
  put(out, p.tm_rate);
  put(out, static_cast<std::uint8_t>(p.learning));
  put(out, p.seed);
  put(out, p.id_offset);
  put(out, p.geometry_columns);
  put(out, sdr_params_.k);
  put(out, sdr_params_.w);
  put(out, sdr_params_.master_seed);
  put(out, epoch_);

  for (const Column &col : columns_) {
    put(out, static_cast<std::uint32_t>(col.proximal.size()));
    for (const ProximalSynapse &syn : col.proximal) {
      put(out, syn.bit);
      put(out, syn.permanence);
    }
    for (const Cell &cell : col.cells) {
      put(out, static_cast<std::uint32_t>(cell.segments.size()));
      for (const DistalSegment &seg : cell.segments) {
        put(out, seg.last_reinforced);
        put(out, static_cast<std::uint32_t>(seg.synapses.size()));
        for (const DistalSynapse &syn : seg.synapses) {
          put(out, syn.presynaptic.column);
          put(out, syn.presynaptic.cell);
          put(out, syn.permanence);
        }
      }
    }
  }
  put(out, static_cast<std::uint32_t>(prev_active_.list.size()));
  for (const CellRef &c : prev_active_.list) {
    put(out, c.column);
    put(out, c.cell);
  }
  for (const auto &cells : predictive_) {
    put(out, static_cast<std::uint32_t>(cells.size()));
    for (CellId t : cells) put(out, t);
  }
}

CortexModel CortexModel::load(std::istream &in) {
  if (get<std::uint64_t>(in) != kSnapshotMagic)
    throw sim_error("snapshot: bad magic");
  if (get<std::uint32_t>(in) != kSnapshotVersion)
    throw sim_error("snapshot: unsupported version");
  CortexParams p;
  p.num_columns = get<std::uint32_t>(in);
  p.cells_per_column = get<std::uint32_t>(in);
  p.density = get<double>(in);
  p.rf_diameter = get<std::uint32_t>(in);
  p.proximal_capacity = get<std::uint32_t>(in);
  p.max_segments_per_cell = get<std::uint32_t>(in);
  p.max_synapses_per_segment = get<std::uint32_t>(in);
  p.theta_act = get<std::uint32_t>(in);
  p.theta_match = get<std::uint32_t>(in);
  p.perm_max = get<std::uint32_t>(in);
  p.perm_connected = get<std::uint32_t>(in);
  p.perm_init_lo = get<std::uint32_t>(in);
  p.perm_init_hi = get<std::uint32_t>(in);
  p.distal_init = get<std::uint32_t>(in);
  p.sp_learn_rate = get<double>(in);
  p.sp_forget_rate = get<double>(in);
  p.tm_rate = get<double>(in);
  p.learning = get<std::uint8_t>(in) != 0;
  p.seed = get<std::uint64_t>(in);
  p.id_offset = get<std::uint32_t>(in);
  p.geometry_columns = get<std::uint32_t>(in);
  SdrParams sp;
  sp.k = get<std::uint32_t>(in);
  sp.w = get<std::uint32_t>(in);
  sp.master_seed = get<std::uint64_t>(in);

  CortexModel model(p, sp);
  model.epoch_ = get<std::uint32_t>(in);

  for (Column &col : model.columns_) {
    col.proximal.resize(get<std::uint32_t>(in));
    for (ProximalSynapse &syn : col.proximal) {
      syn.bit = get<std::uint32_t>(in);
      syn.permanence = get<std::uint8_t>(in);
    }
    for (Cell &cell : col.cells) {
      cell.segments.resize(get<std::uint32_t>(in));
      for (DistalSegment &seg : cell.segments) {
        seg.last_reinforced = get<std::uint32_t>(in);
        seg.synapses.resize(get<std::uint32_t>(in));
        for (DistalSynapse &syn : seg.synapses) {
          syn.presynaptic.column = get<std::uint32_t>(in);
          syn.presynaptic.cell = get<std::uint32_t>(in);
          syn.permanence = get<std::uint8_t>(in);
        }
      }
    }
  }
  std::vector<CellRef> active(get<std::uint32_t>(in));
  for (CellRef &c : active) {
    c.column = get<std::uint32_t>(in);
    c.cell = get<std::uint32_t>(in);
  }
  model.prev_active_ = ActivitySet::from_list(std::move(active), p.num_columns,
                                              p.cells_per_column);
  for (auto &cells : model.predictive_) {
    cells.resize(get<std::uint32_t>(in));
    for (CellId &t : cells) t = get<std::uint32_t>(in);
  }
  return model;
}

} // namespace ccsim
