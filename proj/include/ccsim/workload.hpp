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
 * Workload generation and ingestion: synthetic polynomial time series with a
 * learned-criterion tracker, and CSV scalar-stream ingestion with affine
 * quantization for anomaly-detection runs.
 */

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ccsim {

struct PolySeries {
  std::array<std::int64_t, 5> coefficients{}; // degree <= 4
  std::vector<std::uint64_t> points;          // 20 samples at x = 0..19
  std::uint64_t seed = 0;
};

constexpr std::uint32_t kPolyPoints = 20;
// Coefficients are drawn uniformly from [-kCoeffRange, kCoeffRange]; values
// are clamped into the encoder's non-negative integer domain.
constexpr std::int64_t kCoeffRange = 9;
constexpr std::int64_t kPolyValueMax = 1u << 30;

// Deterministic series generation: degree uniform in 0..4, coefficients
// uniform in the documented range, 20 points evaluated at x = 0..19.
PolySeries gen_poly_series(std::uint64_t seed);

// Anything that can consume one scalar per epoch and report whether any
// column burst: the reference model and the machine both qualify.
struct EpochOutcome {
  double anomaly = 0.0;
  std::uint32_t bursting_columns = 0;
};
using ModelStepFn = std::function<EpochOutcome(std::uint64_t value)>;

// Tracks the learned criterion: a repetition counts as learned when at least
// half of its epochs saw no bursting column.
class LearnTracker {
public:
  explicit LearnTracker(std::uint32_t series_length)
      : length_(series_length) {}

  void record_epoch(bool burst_free) {
    if (burst_free) ++hits_;
    if (++seen_ == length_) {
      learned_ = hits_ * 2 >= length_;
      hits_ = 0;
      seen_ = 0;
    }
  }
  bool learned() const { return learned_; }

private:
  std::uint32_t length_;
  std::uint32_t hits_ = 0;
  std::uint32_t seen_ = 0;
  bool learned_ = false;
};

struct LearnOutcome {
  std::uint32_t repetitions = 0; // repetitions consumed
  bool learned = false;          // false: max_reps exhausted
};

// Replays the series until a full repetition meets the learned criterion or
// max_reps is exhausted.
LearnOutcome run_until_learned(const ModelStepFn &step, const PolySeries &series,
                               std::uint32_t max_reps);

struct CsvIngestResult {
  std::vector<std::uint64_t> stream; // quantized levels
  std::uint64_t skipped_rows = 0;    // malformed rows
  double range_lo = 0.0;             // probationary range used
  double range_hi = 0.0;
};

// Reads one numeric column of a headered CSV file and quantizes it to at
// most `levels` integer levels. The quantizer range comes from a
// probationary prefix of the stream (fraction of rows, at least one).
CsvIngestResult ingest_csv(const std::string &path, const std::string &column,
                           std::uint32_t levels, double probation_fraction);

// One anomaly score per stream value.
std::vector<double> run_anomaly(const ModelStepFn &step,
                                const std::vector<std::uint64_t> &stream);

} // namespace ccsim
