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

#include <cstdio>
#include <fstream>

#include "ccsim/cortex.hpp"
#include "ccsim/errors.hpp"
#include "ccsim/rng.hpp"
#include "ccsim/workload.hpp"

using namespace ccsim;

namespace {

CortexParams desk_params() {
  CortexParams p;
  p.num_columns = 64;
  p.cells_per_column = 4;
  p.density = 0.05;
  p.rf_diameter = 16;
  p.theta_act = 2;
  p.theta_match = 1;
  p.seed = 42;
  return p;
}

SdrParams desk_sdr() {
  SdrParams s;
  s.k = 256;
  s.w = 8;
  s.master_seed = 7;
  return s;
}

ModelStepFn ref_stepper(CortexModel &model, const SdrParams &sp) {
  return [&model, sp](std::uint64_t v) {
    const EpochResult r = model.step(encode(v, sp));
    return EpochOutcome{r.anomaly, r.bursting_columns};
  };
}

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string &content) {
    path = std::string("/tmp/ccsim_test_") +
           std::to_string(mix64(reinterpret_cast<std::uintptr_t>(this))) +
           ".csv";
    std::ofstream out(path);
    out << content;
  }
  ~TempCsv() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("polynomial series are deterministic and well formed") {
  const PolySeries a = gen_poly_series(123);
  const PolySeries b = gen_poly_series(123);
  CHECK(a.points == b.points);
  CHECK(a.coefficients == b.coefficients);
  CHECK(a.points.size() == kPolyPoints);
  CHECK(gen_poly_series(124).points != a.points);
}

TEST_CASE("a degree-0 series is constant") {
  // scan for a seed whose polynomial has no non-constant coefficients
  bool found = false;
  for (std::uint64_t seed = 0; seed < 200 && !found; ++seed) {
    const PolySeries s = gen_poly_series(seed);
    bool degree0 = true;
    for (int d = 1; d <= 4; ++d)
      if (s.coefficients[d] != 0) degree0 = false;
    if (!degree0) continue;
    found = true;
    for (std::uint64_t v : s.points) CHECK(v == s.points[0]);
  }
  CHECK(found);
}

// Oracle: re-evaluate the stored coefficients with plain powers.
TEST_CASE("stored points match re-evaluation of the coefficients") {
  for (std::uint64_t seed : {1ULL, 55ULL, 999ULL, 31337ULL}) {
    const PolySeries s = gen_poly_series(seed);
    for (std::uint32_t x = 0; x < kPolyPoints; ++x) {
      long double v = 0.0L;
      for (int d = 0; d <= 4; ++d) {
        long double term = s.coefficients[d];
        for (int i = 0; i < d; ++i) term *= x;
        v += term;
      }
      const auto expect = static_cast<std::uint64_t>(
          std::clamp<long double>(v, 0.0L, kPolyValueMax));
      CHECK(s.points[x] == expect);
    }
  }
}

TEST_CASE("an already-learned series is recognized in one repetition") {
  const PolySeries series = gen_poly_series(5);
  ModelStepFn perfect = [](std::uint64_t) { return EpochOutcome{0.0, 0}; };
  const LearnOutcome out = run_until_learned(perfect, series, 50);
  CHECK(out.learned);
  CHECK(out.repetitions == 1);
}

TEST_CASE("with learning disabled the criterion is never met") {
  CortexParams cp = desk_params();
  cp.learning = false;
  SdrParams sp = desk_sdr();
  CortexModel model(cp, sp);
  const PolySeries series = gen_poly_series(8);
  const LearnOutcome out =
      run_until_learned(ref_stepper(model, sp), series, 10);
  CHECK_FALSE(out.learned);
  CHECK(out.repetitions == 10);
}

// Reference-run fixture: a constant (degree-0) series on a fresh model
// reaches the criterion within a small, frozen number of repetitions.
TEST_CASE("a fresh constant series learns quickly") {
  std::uint64_t degree0_seed = ~0ULL;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const PolySeries s = gen_poly_series(seed);
    bool degree0 = true;
    for (int d = 1; d <= 4; ++d)
      if (s.coefficients[d] != 0) degree0 = false;
    if (degree0) {
      degree0_seed = seed;
      break;
    }
  }
  REQUIRE(degree0_seed != ~0ULL);
  CortexParams cp = desk_params();
  SdrParams sp = desk_sdr();
  CortexModel model(cp, sp);
  const PolySeries series = gen_poly_series(degree0_seed);
  const LearnOutcome out =
      run_until_learned(ref_stepper(model, sp), series, 10);
  CHECK(out.learned);
  CHECK(out.repetitions == 1); // frozen from the reference run
}

TEST_CASE("learn tracker counts burst-free epochs per repetition") {
  LearnTracker t(4);
  // 2 of 4 burst-free: exactly half, learned
  t.record_epoch(true);
  t.record_epoch(false);
  t.record_epoch(true);
  t.record_epoch(false);
  CHECK(t.learned());
  LearnTracker u(4);
  u.record_epoch(true);
  u.record_epoch(false);
  u.record_epoch(false);
  u.record_epoch(false);
  CHECK_FALSE(u.learned());
}

TEST_CASE("csv ingestion quantizes and validates") {
  TempCsv file("timestamp,value\n"
               "t0,5.0\n"
               "t1,5.0\n"
               "t2,5.0\n");
  const auto r = ingest_csv(file.path, "value", 130, 0.1);
  REQUIRE(r.stream.size() == 3);
  for (std::uint64_t level : r.stream) CHECK(level == 0); // constant column
  CHECK(r.skipped_rows == 0);
}

TEST_CASE("a full-range ramp with matching levels quantizes to identity") {
  std::string content = "t,v\n";
  for (int i = 0; i < 130; ++i)
    content += "x," + std::to_string(i) + ".0\n";
  TempCsv file(content);
  // probation covers the whole stream, so the range is [0, 129]
  const auto r = ingest_csv(file.path, "v", 130, 1.0);
  REQUIRE(r.stream.size() == 130);
  for (std::uint64_t i = 0; i < 130; ++i) CHECK(r.stream[i] == i);
}

TEST_CASE("csv ingestion is deterministic and skips malformed rows") {
  std::string content = "a,b\n1,10\n2,not-a-number\n3,30\n,\n4,40\n";
  TempCsv file(content);
  const auto r1 = ingest_csv(file.path, "b", 100, 0.5);
  const auto r2 = ingest_csv(file.path, "b", 100, 0.5);
  CHECK(r1.stream == r2.stream);
  CHECK(r1.skipped_rows == 2);
  REQUIRE(r1.stream.size() == 3);
}

TEST_CASE("csv errors are reported as configuration errors") {
  TempCsv empty("");
  CHECK_THROWS_AS(ingest_csv(empty.path, "v", 130, 0.1), config_error);
  TempCsv headed("a,b\n1,2\n");
  CHECK_THROWS_AS(ingest_csv(headed.path, "missing", 130, 0.1), config_error);
  CHECK_THROWS_AS(ingest_csv(headed.path, "b", 200, 0.1), config_error);
  CHECK_THROWS_AS(ingest_csv("/nonexistent/file.csv", "b", 130, 0.1),
                  config_error);
}

// Property: the quantizer is monotone in the raw value.
TEST_CASE("quantizer monotonicity") {
  std::string content = "t,v\n";
  std::vector<double> raw;
  std::uint64_t h = 5;
  for (int i = 0; i < 300; ++i) {
    h = mix64(h);
    const double v = static_cast<double>(h % 100000) / 7.0;
    raw.push_back(v);
    content += "x," + std::to_string(v) + "\n";
  }
  TempCsv file(content);
  const auto r = ingest_csv(file.path, "v", 130, 0.1);
  REQUIRE(r.stream.size() == raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    for (std::size_t j = 0; j < raw.size(); ++j)
      if (raw[i] < raw[j]) CHECK(r.stream[i] <= r.stream[j]);
}

TEST_CASE("anomaly runner scores every epoch, starting at 1") {
  CortexParams cp = desk_params();
  SdrParams sp = desk_sdr();
  CortexModel model(cp, sp);
  std::vector<std::uint64_t> stream;
  for (int rep = 0; rep < 10; ++rep)
    for (std::uint64_t v : {100ULL, 900ULL, 1700ULL}) stream.push_back(v);
  const auto scores = run_anomaly(ref_stepper(model, sp), stream);
  REQUIRE(scores.size() == stream.size());
  CHECK(scores.front() == 1.0);
  for (double s : scores) {
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
  // converged tail: a repeating short cycle scores near zero
  double tail = 0.0;
  for (std::size_t i = scores.size() - 6; i < scores.size(); ++i)
    tail += scores[i];
  CHECK(tail / 6.0 < 0.1);

  // a never-seen value after convergence spikes toward 1
  const auto spike = run_anomaly(ref_stepper(model, sp), {123456});
  CHECK(spike[0] > 0.9);
}
