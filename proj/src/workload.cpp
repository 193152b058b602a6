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

#include "ccsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ccsim/errors.hpp"
#include "ccsim/rng.hpp"

namespace ccsim {

PolySeries gen_poly_series(std::uint64_t seed) {
  PolySeries s;
  s.seed = seed;
  const std::uint64_t h0 = keyed_hash({seed, 0x504F4C59ULL}); // "POLY"
  const std::uint32_t degree = static_cast<std::uint32_t>(h0 % 5);
  for (std::uint32_t d = 0; d <= degree; ++d) {
    const std::uint64_t h = keyed_hash({seed, 0x434F4546ULL, d}); // "COEF"
    s.coefficients[d] =
        static_cast<std::int64_t>(h % (2 * kCoeffRange + 1)) - kCoeffRange;
  }
  s.points.resize(kPolyPoints);
  for (std::uint32_t x = 0; x < kPolyPoints; ++x) {
    // Horner evaluation, clamped into the encoder domain
    std::int64_t v = 0;
    for (int d = 4; d >= 0; --d) v = v * static_cast<std::int64_t>(x) + s.coefficients[d];
    v = std::clamp<std::int64_t>(v, 0, kPolyValueMax);
    s.points[x] = static_cast<std::uint64_t>(v);
  }
  return s;
}

LearnOutcome run_until_learned(const ModelStepFn &step, const PolySeries &series,
                               std::uint32_t max_reps) {
  LearnOutcome out;
  const auto length = static_cast<std::uint32_t>(series.points.size());
  for (std::uint32_t rep = 0; rep < max_reps; ++rep) {
    LearnTracker tracker(length);
    for (std::uint64_t v : series.points)
      tracker.record_epoch(step(v).bursting_columns == 0);
    ++out.repetitions;
    if (tracker.learned()) {
      out.learned = true;
      return out;
    }
  }
  return out; // max_reps exhausted; reported, not fatal
}

CsvIngestResult ingest_csv(const std::string &path, const std::string &column,
                           std::uint32_t levels, double probation_fraction) {
  if (levels == 0 || levels > 130)
    throw config_error("csv: quantization levels must be in [1, 130]");
  if (probation_fraction <= 0.0 || probation_fraction > 1.0)
    throw config_error("csv: probation fraction must be in (0, 1]");
  std::ifstream in(path);
  if (!in) throw config_error("csv: cannot open " + path);

  std::string header;
  if (!std::getline(in, header))
    throw config_error("csv: empty file " + path);

  // locate the value column
  std::size_t col_index = std::string::npos;
  {
    std::stringstream ss(header);
    std::string field;
    std::size_t idx = 0;
    while (std::getline(ss, field, ',')) {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      if (field == column) col_index = idx;
      ++idx;
    }
  }
  if (col_index == std::string::npos)
    throw config_error("csv: no column named '" + column + "' in " + path);

  CsvIngestResult result;
  std::vector<double> raw;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::size_t idx = 0;
    bool found = false;
    double value = 0.0;
    while (std::getline(ss, field, ',')) {
      if (idx == col_index) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        try {
          std::size_t used = 0;
          value = std::stod(field, &used);
          found = used == field.size() && !field.empty();
        } catch (...) {
          found = false;
        }
        break;
      }
      ++idx;
    }
    if (!found) {
      ++result.skipped_rows;
      continue;
    }
    raw.push_back(value);
  }
  if (raw.empty()) throw config_error("csv: no usable rows in " + path);

  // quantizer bounds from the probationary prefix
  const std::size_t prefix = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(raw.size() * probation_fraction)));
  double lo = raw[0], hi = raw[0];
  for (std::size_t i = 0; i < std::min(prefix, raw.size()); ++i) {
    lo = std::min(lo, raw[i]);
    hi = std::max(hi, raw[i]);
  }
  result.range_lo = lo;
  result.range_hi = hi;

  result.stream.reserve(raw.size());
  const double span = hi - lo;
  for (double v : raw) {
    std::uint64_t level = 0;
    if (span > 0.0) {
      const double t = (v - lo) / span * (levels - 1);
      level = static_cast<std::uint64_t>(
          std::clamp(t, 0.0, static_cast<double>(levels - 1)) + 0.5);
    }
    result.stream.push_back(level);
  }
  return result;
}

std::vector<double> run_anomaly(const ModelStepFn &step,
                                const std::vector<std::uint64_t> &stream) {
  std::vector<double> scores;
  scores.reserve(stream.size());
  for (std::uint64_t v : stream) scores.push_back(step(v).anomaly);
  return scores;
}

} // namespace ccsim
