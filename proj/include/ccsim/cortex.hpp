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
 * Sequential, network-free cortical learning model.
 *
 * This is the semantic reference for the accelerator: spatial pooling with
 * global inhibition, temporal memory with bursting, quantized permanences
 * with stochastic-rounded learning steps, and the miss-prediction anomaly
 * score. One epoch processes one encoded input:
 *
 *   overlaps -> inhibition -> cell activation -> learning -> predictions
 *
 * All per-column algorithms live in namespace `cla` as free functions over a
 * Column plus immutable epoch context. The distributed machine executes the
 * same functions on its share of the columns; because every random decision
 * is a keyed draw (see rng.hpp), both produce bit-identical trajectories.
 */

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ccsim/sdr.hpp"

namespace ccsim {

using ColumnId = std::uint32_t;
using CellId = std::uint32_t;

struct CellRef {
  ColumnId column = 0;
  CellId cell = 0;
  auto operator<=>(const CellRef &) const = default;
};

struct CortexParams {
  std::uint32_t num_columns = 2025; // 45x45 at full scale
  std::uint32_t cells_per_column = 32;
  double density = 0.02; // winner fraction per epoch

  std::uint32_t rf_diameter = 32;        // proximal receptive-field window
  std::uint32_t proximal_capacity = 128; // max proximal table entries
  std::uint32_t max_segments_per_cell = 128;
  std::uint32_t max_synapses_per_segment = 40;

  std::uint32_t theta_act = 20;   // connected synapses for a predictive segment
  std::uint32_t theta_match = 10; // stored synapses for a matching segment

  // Quantized permanence levels. perm_max = 15 is the 4-bit machine;
  // 63 gives the 64-level high-precision variant.
  std::uint32_t perm_max = 15;
  std::uint32_t perm_connected = 8;
  std::uint32_t perm_init_lo = 6; // boot-time proximal range, inclusive
  std::uint32_t perm_init_hi = 9;
  std::uint32_t distal_init = 8; // permanence of a freshly grown distal synapse

  // Fractional learning rates (of full scale); level steps are
  // rate * perm_max applied with stochastic rounding.
  double sp_learn_rate = 0.08;
  double sp_forget_rate = 0.003;
  double tm_rate = 0.1;

  bool learning = true;
  std::uint64_t seed = 1;

  // Scale-out zones: a zone hosts columns [id_offset, id_offset+num_columns)
  // of a larger cortex whose receptive-field geometry spans geometry_columns
  // (0 means num_columns). Random draws are keyed by the global id, so a
  // zone is bit-equivalent to a standalone model with the same offsets.
  std::uint32_t id_offset = 0;
  std::uint32_t geometry_columns = 0;

  std::uint32_t global_id(ColumnId local) const { return local + id_offset; }
  std::uint32_t geometry_total() const {
    return geometry_columns != 0 ? geometry_columns : num_columns;
  }

  std::uint32_t n_win() const {
    return static_cast<std::uint32_t>(density * num_columns);
  }
  double sp_learn_levels() const { return sp_learn_rate * perm_max; }
  double sp_forget_levels() const { return sp_forget_rate * perm_max; }
  double tm_levels() const { return tm_rate * perm_max; }

  void validate() const; // throws config_error
};

struct ProximalSynapse {
  std::uint32_t bit = 0; // encoder bit index
  std::uint8_t permanence = 0;
};

struct DistalSynapse {
  CellRef presynaptic;
  std::uint8_t permanence = 0;
};

struct DistalSegment {
  std::vector<DistalSynapse> synapses; // sorted by presynaptic
  std::uint32_t last_reinforced = 0;
};

struct Cell {
  std::vector<DistalSegment> segments;
};

struct Column {
  std::vector<ProximalSynapse> proximal; // sorted by bit
  std::vector<Cell> cells;
};

// Activity of one epoch, indexable both as a sorted list and as flags.
struct ActivitySet {
  std::vector<CellRef> list;        // ascending
  std::vector<std::uint8_t> flags;  // size num_columns * cells_per_column

  bool contains(ColumnId c, CellId t, std::uint32_t cells_per_column) const {
    return !flags.empty() && flags[c * cells_per_column + t] != 0;
  }
  static ActivitySet from_list(std::vector<CellRef> cells,
                               std::uint32_t num_columns,
                               std::uint32_t cells_per_column);
};

namespace cla {

// Receptive field: a contiguous diameter-wide window of encoder bits centered
// at floor(column * k / num_columns), wrapped modulo k.
std::uint32_t receptive_field_start(ColumnId column, const CortexParams &cp,
                                    const SdrParams &sp);

// Boot-time column: one proximal synapse per receptive-field bit with a
// keyed-random permanence in [perm_init_lo, perm_init_hi].
Column boot_column(ColumnId column, const CortexParams &cp, const SdrParams &sp);

// Connected proximal synapses on active input bits.
std::uint32_t column_overlap(const Column &col,
                             std::span<const std::uint32_t> input_bits,
                             const CortexParams &cp);

// Exactly n_win winners by (overlap desc, id asc); result ascending by id.
std::vector<ColumnId> inhibition_winners(std::span<const std::uint16_t> overlaps,
                                         std::uint32_t n_win);

// Fraction of active columns that were not predicted; 0 on an empty set.
double anomaly_score(std::span<const ColumnId> active,
                     std::span<const ColumnId> predicted);

// Spatial-pooler adaptation of a winning column.
void adapt_proximal_column(Column &col, ColumnId id, std::uint32_t epoch,
                           std::span<const std::uint32_t> input_bits,
                           const CortexParams &cp);

struct ColumnActivation {
  bool bursted = false;
  std::vector<CellId> active_cells; // ascending
};

// Activation of a winner column given its predicted cells (possibly empty).
ColumnActivation activate_column(const CortexParams &cp,
                                 std::span<const CellId> predicted_cells);

// Temporal-memory learning for one active column: reinforcement of correctly
// predicting segments, and segment growth at the learning cell of a burst.
void learn_distal_column(Column &col, ColumnId id, std::uint32_t epoch,
                         std::span<const CellId> predicted_cells, bool bursted,
                         const ActivitySet &prev_active, const CortexParams &cp);

// Cells of `col` with a segment holding >= theta_act connected synapses onto
// currently active cells.
std::vector<CellId> predictive_cells(const Column &col,
                                     const ActivitySet &current_active,
                                     const CortexParams &cp);

} // namespace cla

struct EpochResult {
  std::vector<ColumnId> active;         // winner columns of this epoch
  std::vector<ColumnId> predicted_next; // columns predicted for the next epoch
  double anomaly = 0.0;
  std::uint32_t bursting_columns = 0;
};

class CortexModel {
public:
  CortexModel(const CortexParams &cp, const SdrParams &sp);

  EpochResult step(const Sdr &input);

  // Exposed pipeline pieces (the accelerator and the tests drive these).
  std::vector<std::uint16_t> compute_overlaps(const Sdr &input) const;

  const CortexParams &params() const { return params_; }
  const SdrParams &sdr_params() const { return sdr_params_; }
  std::uint32_t epoch() const { return epoch_; }
  const std::vector<Column> &columns() const { return columns_; }
  std::vector<Column> &columns() { return columns_; }
  const ActivitySet &prev_active() const { return prev_active_; }
  const std::vector<std::vector<CellId>> &predictive() const {
    return predictive_;
  }
  std::vector<ColumnId> predicted_columns() const;

  void set_learning(bool enabled) { params_.learning = enabled; }

  // Wholesale state replacement; used when assembling or scattering a
  // distributed machine's snapshot.
  void set_state(ActivitySet prev_active,
                 std::vector<std::vector<CellId>> predictive,
                 std::uint32_t epoch) {
    prev_active_ = std::move(prev_active);
    predictive_ = std::move(predictive);
    epoch_ = epoch;
  }

  // Versioned binary snapshot (layout in docs/formats.md).
  void save(std::ostream &out) const;
  static CortexModel load(std::istream &in);

private:
  CortexParams params_;
  SdrParams sdr_params_;
  std::vector<Column> columns_;
  ActivitySet prev_active_;
  std::vector<std::vector<CellId>> predictive_; // per column, ascending
  std::uint32_t epoch_ = 0;
};

} // namespace ccsim
