// Copyright 2026 The mrlda Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <vector>

#include <unistd.h>

#include "doctest.h"
#include "mrlda/mr_runtime.hpp"
#include "mrlda/text_format.hpp"

using namespace mrlda::mr;
namespace fs = std::filesystem;

namespace {

struct Record {
  std::int32_t left, right;
  double value;
};
using Shards = std::vector<std::vector<Record>>;

const MapFn<Record, int> kIdentityMap = [](const Record& r, const int&, MapContext& ctx) {
  ctx.emit(r.left, r.right, r.value);
};

using Stream = std::vector<std::pair<EmitKey, std::vector<double>>>;
const ReduceFn<Stream> kCollect = [](int, KeyGroupReader& reader) {
  Stream out;
  while (reader.next()) out.push_back({reader.key(), std::vector<double>(reader.values().begin(), reader.values().end())});
  return out;
};

const CombineFn kCombine = [](std::vector<EmitKV> p) { return combine(std::move(p)); };

Shards random_shards(std::size_t n, int num_shards, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Shards shards(static_cast<std::size_t>(num_shards));
  for (std::size_t i = 0; i < n; ++i) {
    const auto left = static_cast<std::int32_t>(rng() % 6) - 1;
    const auto right = static_cast<std::int32_t>(rng() % 9) - 1;
    shards[i % shards.size()].push_back({left, right, static_cast<double>(rng() % 1000) / 7.0});
  }
  return shards;
}

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("mrlda_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

BroadcastBundle small_bundle() {
  BroadcastBundle b;
  b.iteration = 3;
  b.languages = {"xx"};
  BetaTable t;
  t.topics = 2;
  t.vocab_size = 3;
  t.expected_beta = {0.2, 0.5, 0.3, 0.25, 0.5, 0.25};
  t.normalizer = {10.0, 4.0};
  b.beta.push_back(t);
  b.alpha = {0.1, 0.7};
  return b;
}

}  // namespace

TEST_CASE("sentinel sorts first") {
  CHECK(EmitKey{kSentinel, 5} < EmitKey{0, kSentinel});
  CHECK(EmitKey{3, kSentinel} < EmitKey{3, 0});
  CHECK(EmitKey{2, 100} < EmitKey{3, kSentinel});
}

TEST_CASE("partition routes on the left component") {
  CHECK(partition({3, 17}, 10) == partition({3, kSentinel}, 10));
  CHECK(partition({kSentinel, 2}, 10) == 0);
  CHECK(partition({kSentinel, kSentinel}, 7) == 0);
  std::set<int> used;
  for (int k = 0; k < 10; ++k) {
    used.insert(partition({k, kSentinel}, 100));
    for (int v = 0; v < 20; ++v) used.insert(partition({k, v}, 100));
  }
  used.insert(partition({kSentinel, 1}, 100));
  CHECK(used.size() <= 11);
}

TEST_CASE("combine sums equal keys") {
  auto out = combine({{{1, 1}, 0.5}, {{1, 1}, 0.25}});
  REQUIRE(out.size() == 1);
  CHECK(out[0].value == 0.75);
  std::vector<EmitKV> distinct{{{0, 1}, 1.0}, {{0, 2}, 2.0}};
  CHECK(combine(distinct) == distinct);

  std::mt19937_64 rng(9);
  std::vector<EmitKV> pairs;
  std::map<EmitKey, double> oracle;
  for (int i = 0; i < 1000; ++i) {
    EmitKV kv{{static_cast<std::int32_t>(rng() % 5), static_cast<std::int32_t>(rng() % 5)}, (rng() % 1000) / 3.0};
    oracle[kv.key] += kv.value;
    pairs.push_back(kv);
  }
  const auto combined = combine(pairs);
  CHECK(combined.size() == oracle.size());
  for (const auto& kv : combined) CHECK(kv.value == doctest::Approx(oracle[kv.key]).epsilon(1e-12));
}

TEST_CASE("identity map with a summing reduce") {
  Shards shards{{{0, 0, 1.0}}, {{1, 1, 2.0}}};
  const ReduceFn<std::vector<EmitKV>> sum_reduce = [](int, KeyGroupReader& r) {
    std::vector<EmitKV> out;
    while (r.next()) out.push_back({r.key(), r.sum()});
    return out;
  };
  auto result = run_job<Record, int, std::vector<EmitKV>>(kIdentityMap, kCombine, sum_reduce,
                                                          std::span<const std::vector<Record>>(shards), 0,
                                                          JobOptions{1, 1, true, {}});
  CHECK(result.reducer_outputs[0] == std::vector<EmitKV>{{{0, 0}, 1.0}, {{1, 1}, 2.0}});
}

TEST_CASE("reducers see sorted groups, sentinel first, independent of workers") {
  const auto shards = random_shards(500, 7, 4);
  std::vector<Stream> reference;
  for (int workers : {1, 3, 8}) {
    auto result = run_job<Record, int, Stream>(kIdentityMap, kCombine, kCollect,
                                               std::span<const std::vector<Record>>(shards), 0,
                                               JobOptions{3, workers, false, {}});
    for (int p = 0; p < 3; ++p) {
      const auto& stream = result.reducer_outputs[static_cast<std::size_t>(p)];
      for (std::size_t i = 1; i < stream.size(); ++i) CHECK(stream[i - 1].first < stream[i].first);
      for (const auto& [key, values] : stream) CHECK(partition(key, 3) == p);
    }
    if (reference.empty()) {
      reference = result.reducer_outputs;
    } else {
      CHECK(result.reducer_outputs == reference);
    }
    CHECK(result.metrics.map_output_records == 500);
    CHECK(result.metrics.combine_output_records == 500);
  }
}

TEST_CASE("combiner on and off give the same per-key sums") {
  const auto shards = random_shards(2000, 5, 8);
  const ReduceFn<std::map<EmitKey, double>> sums = [](int, KeyGroupReader& r) {
    std::map<EmitKey, double> m;
    while (r.next()) m[r.key()] = r.sum();
    return m;
  };
  auto on = run_job<Record, int, std::map<EmitKey, double>>(kIdentityMap, kCombine, sums,
                                                            std::span<const std::vector<Record>>(shards), 0,
                                                            JobOptions{2, 2, true, {}});
  auto off = run_job<Record, int, std::map<EmitKey, double>>(kIdentityMap, kCombine, sums,
                                                             std::span<const std::vector<Record>>(shards), 0,
                                                             JobOptions{2, 2, false, {}});
  CHECK(on.metrics.combine_output_records <= on.metrics.map_output_records);
  CHECK(on.metrics.combine_output_records < off.metrics.combine_output_records);
  for (std::size_t p = 0; p < 2; ++p) {
    REQUIRE(on.reducer_outputs[p].size() == off.reducer_outputs[p].size());
    for (const auto& [key, value] : off.reducer_outputs[p]) {
      CHECK(on.reducer_outputs[p].at(key) == doctest::Approx(value).epsilon(1e-12));
    }
  }
}

TEST_CASE("side channel is merged and sorted") {
  Shards shards{{{5, 0, 1.0}, {1, 1, 2.0}}, {{3, 0, 3.0}}};
  const MapFn<Record, int> side_map = [](const Record& r, const int&, MapContext& ctx) {
    ctx.emit_side(r.left, r.right, r.value);
  };
  auto result = run_job<Record, int, Stream>(side_map, kCombine, kCollect,
                                             std::span<const std::vector<Record>>(shards), 0, JobOptions{});
  REQUIRE(result.side.size() == 3);
  CHECK(result.side[0].key == EmitKey{1, 1});
  CHECK(result.side[2].key == EmitKey{5, 0});
  CHECK(result.metrics.side_records == 3);
}

TEST_CASE("failures name the shard and record") {
  Shards shards{{{0, 0, 1.0}}, {{0, 0, 1.0}, {9, 9, 1.0}}};
  const MapFn<Record, int> failing = [](const Record& r, const int&, MapContext& ctx) {
    if (r.left == 9) throw std::runtime_error("boom");
    ctx.emit(r.left, r.right, r.value);
  };
  try {
    run_job<Record, int, Stream>(failing, kCombine, kCollect, std::span<const std::vector<Record>>(shards), 0,
                                 JobOptions{});
    FAIL("expected JobError");
  } catch (const JobError& e) {
    CHECK(std::string(e.what()).find("shard 1") != std::string::npos);
    CHECK(std::string(e.what()).find("record 1") != std::string::npos);
  }
  const ReduceFn<int> bad_reduce = [](int, KeyGroupReader& r) -> int {
    r.next();
    throw std::runtime_error("bad");
  };
  CHECK_THROWS_AS((run_job<Record, int, int>(kIdentityMap, kCombine, bad_reduce,
                                             std::span<const std::vector<Record>>(shards), 0, JobOptions{})),
                  JobError);
}

TEST_CASE("spill files round-trip") {
  const auto dir = temp_dir("spill");
  std::vector<EmitKV> records{{{kSentinel, kSentinel}, -1.5}, {{0, kSentinel}, 2.0}, {{0, 7}, 1e-300}};
  write_spill(dir / "run.bin", records);
  CHECK(fs::file_size(dir / "run.bin") == 48);
  CHECK(read_spill(dir / "run.bin") == records);
  fs::remove_all(dir);
}

TEST_CASE("broadcast publish and load is bit-exact") {
  const auto dir = temp_dir("broadcast");
  const auto bundle = small_bundle();
  publish_broadcast(bundle, dir);
  CHECK(fs::exists(dir / "beta.xx.3.tsv"));
  CHECK(fs::exists(dir / "alpha.3.tsv"));
  CHECK(load_broadcast(dir, 3, {"xx"}) == bundle);

  auto next = bundle;
  next.iteration = 4;
  next.alpha = {0.2, 0.2};
  publish_broadcast(next, dir);
  CHECK(load_broadcast(dir, 3, {"xx"}) == bundle);
  CHECK(load_broadcast(dir, 4, {"xx"}) == next);

  auto text = mrlda::text::read_file_text(dir / "beta.xx.3.tsv");
  text.replace(text.find("0.20000000000000001"), 19, "0.40000000000000001");
  mrlda::text::write_file_atomic(dir / "beta.xx.3.tsv", text);
  CHECK_THROWS_AS(load_broadcast(dir, 3, {"xx"}), JobError);
  fs::remove_all(dir);
}

TEST_CASE("validate rejects invalid bundles") {
  auto b = small_bundle();
  b.beta[0].expected_beta[0] = 0.0;
  CHECK_THROWS_AS(b.validate(), JobError);
  const auto dir = temp_dir("invalid");
  CHECK_THROWS_AS(publish_broadcast(b, dir), JobError);
  fs::remove_all(dir);
}

TEST_CASE("metrics serialize as JSON") {
  JobMetrics m;
  m.map_output_records = 12;
  const auto json = m.to_json(2);
  CHECK(json.find("\"map_output_records\": 12") != std::string::npos);
  CHECK(json.find("\"iteration\": 2") != std::string::npos);
}
