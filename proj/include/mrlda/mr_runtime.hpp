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

// In-process MapReduce runtime.
//
// A job runs one map task per input shard on a worker pool. Each map task
// sorts its emissions by key, optionally combines them, partitions them by
// the left key component and spills one sorted binary run per reduce
// partition. Reduce tasks k-way merge the runs of their partition, breaking
// key ties by shard index, so every reducer sees the same value sequence no
// matter how many workers ran or in which order tasks finished.
//
// Spill record layout (little-endian, 16 bytes): left:i32, right:i32,
// value:f64. The sentinel is encoded as -1, which sorts before every id.

#ifndef MRLDA_MR_RUNTIME_HPP
#define MRLDA_MR_RUNTIME_HPP

#include <chrono>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrlda::mr {

inline constexpr std::int32_t kSentinel = -1;

struct EmitKey {
  std::int32_t left = kSentinel;
  std::int32_t right = kSentinel;

  bool left_is_sentinel() const { return left == kSentinel; }
  bool right_is_sentinel() const { return right == kSentinel; }
  auto operator<=>(const EmitKey&) const = default;
};

std::string to_string(const EmitKey& key);

struct EmitKV {
  EmitKey key;
  double value = 0.0;
  bool operator==(const EmitKV&) const = default;
};

class JobError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Routes on the left component only. Sentinel-left keys go to reducer 0.
int partition(const EmitKey& key, int num_reducers);

/// Sorts by key (stable) and replaces runs of equal keys by one pair whose
/// value is the sum in emission order.
std::vector<EmitKV> combine(std::vector<EmitKV> pairs);

using CombineFn = std::function<std::vector<EmitKV>(std::vector<EmitKV>)>;

struct JobMetrics {
  std::uint64_t map_input_records = 0;
  std::uint64_t map_output_records = 0;      // before the combiner
  std::uint64_t combine_output_records = 0;  // after the combiner (== before when disabled)
  std::uint64_t reduce_input_groups = 0;
  std::uint64_t side_records = 0;
  double map_seconds = 0.0;
  double reduce_seconds = 0.0;
  double side_merge_seconds = 0.0;

  std::string to_json(int iteration) const;
};

class MapContext {
 public:
  void emit(EmitKey key, double value) { emissions_.push_back({key, value}); }
  void emit(std::int32_t left, std::int32_t right, double value) { emit({left, right}, value); }
  /// Bypasses the shuffle: appended to this task's side file.
  void emit_side(std::int32_t a, std::int32_t b, double value) {
    side_.push_back({{a, b}, value});
  }

  std::vector<EmitKV>& emissions() { return emissions_; }
  std::vector<EmitKV>& side() { return side_; }

 private:
  std::vector<EmitKV> emissions_;
  std::vector<EmitKV> side_;
};

/// Sequential reader over one sorted spill run.
class SpillReader {
 public:
  explicit SpillReader(const std::filesystem::path& path);
  bool has_value() const { return has_value_; }
  const EmitKV& current() const { return current_; }
  void advance();

 private:
  std::ifstream in_;
  EmitKV current_{};
  bool has_value_ = false;
};

void write_spill(const std::filesystem::path& path, std::span<const EmitKV> records);
std::vector<EmitKV> read_spill(const std::filesystem::path& path);

/// Delivers one reduce partition as key groups in ascending key order.
class KeyGroupReader {
 public:
  /// `runs` in shard order; equal keys are delivered lowest shard first.
  explicit KeyGroupReader(std::vector<std::unique_ptr<SpillReader>> runs);
  /// In-memory stream, assumed sorted. Used by tests and by reducers that
  /// are driven directly.
  explicit KeyGroupReader(std::vector<EmitKV> sorted_records);

  bool next();
  const EmitKey& key() const { return key_; }
  std::span<const double> values() const { return values_; }
  /// Sum of values() in delivery order.
  double sum() const;
  std::uint64_t groups_read() const { return groups_; }

 private:
  std::vector<std::unique_ptr<SpillReader>> runs_;
  std::vector<EmitKV> memory_;
  std::size_t memory_pos_ = 0;
  bool from_memory_ = false;
  EmitKey key_{};
  std::vector<double> values_;
  std::uint64_t groups_ = 0;
};

struct JobOptions {
  int num_reducers = 1;
  int workers = 1;
  bool use_combiner = true;
  /// Where spill runs and side files go. Empty: a private temporary
  /// directory that is removed when the job ends.
  std::filesystem::path scratch_dir;
};

template <class ReduceOut>
struct JobResult {
  std::vector<ReduceOut> reducer_outputs;  // indexed by partition
  std::vector<EmitKV> side;                // sorted by (a, b)
  JobMetrics metrics;
};

template <class Record, class Broadcast>
using MapFn = std::function<void(const Record&, const Broadcast&, MapContext&)>;

template <class ReduceOut>
using ReduceFn = std::function<ReduceOut(int partition, KeyGroupReader&)>;

// --- runtime internals shared by the run_job template ------------------------

namespace detail {

/// Runs task(i) for i in [0, n) on up to `workers` threads. After all tasks
/// finish, rethrows the exception of the lowest failing index.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task);

class ScratchDir {
 public:
  explicit ScratchDir(const std::filesystem::path& requested);
  ~ScratchDir();
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  bool owned_ = false;
};

std::filesystem::path spill_path(const std::filesystem::path& dir, std::size_t shard, int partition);
std::filesystem::path side_path(const std::filesystem::path& dir, std::size_t shard);

struct MapTaskCounts {
  std::uint64_t input = 0;
  std::uint64_t emitted = 0;
  std::uint64_t combined = 0;
};

/// Sorts, combines, partitions and spills one map task's output.
MapTaskCounts finish_map_task(std::size_t shard, MapContext& ctx, const CombineFn& combine_fn,
                              bool use_combiner, int num_reducers,
                              const std::filesystem::path& dir);

KeyGroupReader open_partition(const std::filesystem::path& dir, std::size_t num_shards,
                              int partition);

std::vector<EmitKV> merge_side_files(const std::filesystem::path& dir, std::size_t num_shards);

double seconds_since(std::chrono::steady_clock::time_point start);

}  // namespace detail

/// Runs one MapReduce job. `map_fn` and `reduce_fn` must be pure given
/// their input and the broadcast; a failure in either aborts the job with a
/// JobError naming the shard and record (or partition and key).
template <class Record, class Broadcast, class ReduceOut>
JobResult<ReduceOut> run_job(const MapFn<Record, Broadcast>& map_fn, const CombineFn& combine_fn,
                             const ReduceFn<ReduceOut>& reduce_fn,
                             std::span<const std::vector<Record>> shards,
                             const Broadcast& broadcast, const JobOptions& options) {
  if (options.num_reducers < 1) throw std::invalid_argument("num_reducers must be >= 1");
  if (options.workers < 1) throw std::invalid_argument("workers must be >= 1");
  detail::ScratchDir scratch(options.scratch_dir);
  JobResult<ReduceOut> result;

  auto start = std::chrono::steady_clock::now();
  std::vector<detail::MapTaskCounts> counts(shards.size());
  detail::parallel_for(shards.size(), options.workers, [&](std::size_t s) {
    MapContext ctx;
    const auto& records = shards[s];
    for (std::size_t i = 0; i < records.size(); ++i) {
      try {
        map_fn(records[i], broadcast, ctx);
      } catch (const std::exception& e) {
        throw JobError("map task for shard " + std::to_string(s) + " failed on record " +
                       std::to_string(i) + ": " + e.what());
      }
    }
    counts[s] = detail::finish_map_task(s, ctx, combine_fn, options.use_combiner,
                                        options.num_reducers, scratch.path());
    counts[s].input = records.size();
  });
  for (const auto& c : counts) {
    result.metrics.map_input_records += c.input;
    result.metrics.map_output_records += c.emitted;
    result.metrics.combine_output_records += c.combined;
  }
  result.metrics.map_seconds = detail::seconds_since(start);

  start = std::chrono::steady_clock::now();
  const auto num_partitions = static_cast<std::size_t>(options.num_reducers);
  result.reducer_outputs.resize(num_partitions);
  std::vector<std::uint64_t> groups(num_partitions, 0);
  detail::parallel_for(num_partitions, options.workers, [&](std::size_t p) {
    auto reader = detail::open_partition(scratch.path(), shards.size(), static_cast<int>(p));
    try {
      result.reducer_outputs[p] = reduce_fn(static_cast<int>(p), reader);
    } catch (const std::exception& e) {
      throw JobError("reduce task for partition " + std::to_string(p) + " failed at key " +
                     to_string(reader.key()) + ": " + e.what());
    }
    groups[p] = reader.groups_read();
  });
  for (auto g : groups) result.metrics.reduce_input_groups += g;
  result.metrics.reduce_seconds = detail::seconds_since(start);

  start = std::chrono::steady_clock::now();
  result.side = detail::merge_side_files(scratch.path(), shards.size());
  result.metrics.side_records = result.side.size();
  result.metrics.side_merge_seconds = detail::seconds_since(start);
  return result;
}

// --- broadcast (distributed cache analog) ------------------------------------

/// Normalized expected topic-word table for one language.
struct BetaTable {
  int topics = 0;
  int vocab_size = 0;
  std::vector<double> expected_beta;  // [v * topics + k], sums to 1 over v
  std::vector<double> normalizer;     // [k]: sum_v lambda_{v,k}

  double at(int v, int k) const {
    return expected_beta[static_cast<std::size_t>(v) * static_cast<std::size_t>(topics) +
                         static_cast<std::size_t>(k)];
  }
  bool operator==(const BetaTable&) const = default;
};

struct BroadcastBundle {
  int iteration = 0;
  std::vector<std::string> languages;
  std::vector<BetaTable> beta;  // per language
  std::vector<double> alpha;

  /// Throws JobError unless every table is complete, positive and each
  /// topic column sums to 1 within 1e-9.
  void validate() const;
  bool operator==(const BroadcastBundle&) const = default;
};

/// Writes beta.<lang>.<label>.tsv, nu.<lang>.<label>.tsv and
/// alpha.<label>.tsv (label defaults to the iteration number) through
/// write-then-rename. `prefix` is prepended to every file name.
void publish_broadcast(const BroadcastBundle& bundle, const std::filesystem::path& dir,
                       const std::string& label = {}, const std::string& prefix = {});

BroadcastBundle load_broadcast(const std::filesystem::path& dir, int iteration,
                               const std::vector<std::string>& languages,
                               const std::string& label = {}, const std::string& prefix = {});

void write_metrics(const std::filesystem::path& dir, int iteration, const JobMetrics& metrics);

}  // namespace mrlda::mr

#endif  // MRLDA_MR_RUNTIME_HPP
