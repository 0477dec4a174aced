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

#include "mrlda/mr_runtime.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include <unistd.h>

#include "json.hpp"
#include "mrlda/text_format.hpp"

namespace mrlda::mr {

std::string to_string(const EmitKey& key) {
  auto part = [](std::int32_t x) { return x == kSentinel ? std::string("^") : std::to_string(x); };
  return "<" + part(key.left) + "," + part(key.right) + ">";
}

int partition(const EmitKey& key, int num_reducers) {
  if (num_reducers < 1) throw std::invalid_argument("num_reducers must be >= 1");
  if (key.left_is_sentinel()) return 0;
  return static_cast<int>(key.left % num_reducers);
}

std::vector<EmitKV> combine(std::vector<EmitKV> pairs) {
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const EmitKV& a, const EmitKV& b) { return a.key < b.key; });
  std::vector<EmitKV> out;
  out.reserve(pairs.size());
  for (const auto& kv : pairs) {
    if (!out.empty() && out.back().key == kv.key) {
      out.back().value += kv.value;
    } else {
      out.push_back(kv);
    }
  }
  return out;
}

std::string JobMetrics::to_json(int iteration) const {
  nlohmann::ordered_json j;
  j["iteration"] = iteration;
  j["map_input_records"] = map_input_records;
  j["map_output_records"] = map_output_records;
  j["combine_output_records"] = combine_output_records;
  j["reduce_input_groups"] = reduce_input_groups;
  j["side_records"] = side_records;
  j["map_seconds"] = map_seconds;
  j["reduce_seconds"] = reduce_seconds;
  j["side_merge_seconds"] = side_merge_seconds;
  return j.dump(2) + "\n";
}

// --- spill files -------------------------------------------------------------

namespace {

constexpr std::size_t kRecordBytes = 16;

template <class T>
T to_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

void encode(const EmitKV& kv, unsigned char* out) {
  const auto left = to_little_endian(kv.key.left);
  const auto right = to_little_endian(kv.key.right);
  const auto value = to_little_endian(std::bit_cast<std::uint64_t>(kv.value));
  std::memcpy(out, &left, 4);
  std::memcpy(out + 4, &right, 4);
  std::memcpy(out + 8, &value, 8);
}

EmitKV decode(const unsigned char* in) {
  std::int32_t left = 0;
  std::int32_t right = 0;
  std::uint64_t bits = 0;
  std::memcpy(&left, in, 4);
  std::memcpy(&right, in + 4, 4);
  std::memcpy(&bits, in + 8, 8);
  return {{to_little_endian(left), to_little_endian(right)},
          std::bit_cast<double>(to_little_endian(bits))};
}

}  // namespace

void write_spill(const std::filesystem::path& path, std::span<const EmitKV> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw JobError("cannot create spill file " + path.string());
  std::vector<unsigned char> buffer(records.size() * kRecordBytes);
  for (std::size_t i = 0; i < records.size(); ++i) encode(records[i], buffer.data() + i * kRecordBytes);
  out.write(reinterpret_cast<const char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
  if (!out) throw JobError("write failed: " + path.string());
}

std::vector<EmitKV> read_spill(const std::filesystem::path& path) {
  std::vector<EmitKV> out;
  SpillReader reader(path);
  while (reader.has_value()) {
    out.push_back(reader.current());
    reader.advance();
  }
  return out;
}

SpillReader::SpillReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
  if (!in_) throw JobError("cannot open spill file " + path.string());
  advance();
}

void SpillReader::advance() {
  unsigned char buf[kRecordBytes];
  in_.read(reinterpret_cast<char*>(buf), kRecordBytes);
  if (in_.gcount() == 0) {
    has_value_ = false;
    return;
  }
  if (in_.gcount() != static_cast<std::streamsize>(kRecordBytes)) {
    throw JobError("truncated spill record");
  }
  current_ = decode(buf);
  has_value_ = true;
}

// --- key groups --------------------------------------------------------------

KeyGroupReader::KeyGroupReader(std::vector<std::unique_ptr<SpillReader>> runs)
    : runs_(std::move(runs)) {}

KeyGroupReader::KeyGroupReader(std::vector<EmitKV> sorted_records)
    : memory_(std::move(sorted_records)), from_memory_(true) {}

bool KeyGroupReader::next() {
  values_.clear();
  if (from_memory_) {
    if (memory_pos_ >= memory_.size()) return false;
    key_ = memory_[memory_pos_].key;
    while (memory_pos_ < memory_.size() && memory_[memory_pos_].key == key_) {
      values_.push_back(memory_[memory_pos_++].value);
    }
    ++groups_;
    return true;
  }
  const EmitKey* smallest = nullptr;
  for (const auto& run : runs_) {
    if (run->has_value() && (!smallest || run->current().key < *smallest)) {
      smallest = &run->current().key;
    }
  }
  if (!smallest) return false;
  key_ = *smallest;
  for (auto& run : runs_) {
    while (run->has_value() && run->current().key == key_) {
      values_.push_back(run->current().value);
      run->advance();
    }
  }
  ++groups_;
  return true;
}

double KeyGroupReader::sum() const {
  double total = 0.0;
  for (double v : values_) total += v;
  return total;
}

// --- runtime internals ---------------------------------------------------------

namespace detail {

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto drain = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (threads <= 1) {
    drain();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(drain);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

ScratchDir::ScratchDir(const std::filesystem::path& requested) {
  namespace fs = std::filesystem;
  if (!requested.empty()) {
    path_ = requested;
    fs::create_directories(path_);
    return;
  }
  static std::atomic<unsigned> counter{0};
  const auto base = fs::temp_directory_path();
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = base / ("mrlda-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      owned_ = true;
      return;
    }
  }
  throw JobError("cannot create scratch directory under " + base.string());
}

ScratchDir::~ScratchDir() {
  if (owned_) {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
}

std::filesystem::path spill_path(const std::filesystem::path& dir, std::size_t shard, int partition) {
  return dir / ("spill-s" + std::to_string(shard) + "-p" + std::to_string(partition) + ".bin");
}

std::filesystem::path side_path(const std::filesystem::path& dir, std::size_t shard) {
  return dir / ("side-s" + std::to_string(shard) + ".bin");
}

MapTaskCounts finish_map_task(std::size_t shard, MapContext& ctx, const CombineFn& combine_fn,
                              bool use_combiner, int num_reducers,
                              const std::filesystem::path& dir) {
  MapTaskCounts counts;
  auto& emitted = ctx.emissions();
  for (const auto& kv : emitted) {
    if (!std::isfinite(kv.value)) {
      throw JobError("non-finite value emitted for key " + to_string(kv.key));
    }
  }
  counts.emitted = emitted.size();
  std::vector<EmitKV> run;
  if (use_combiner) {
    run = combine_fn ? combine_fn(std::move(emitted)) : combine(std::move(emitted));
    std::stable_sort(run.begin(), run.end(),
                     [](const EmitKV& a, const EmitKV& b) { return a.key < b.key; });
  } else {
    run = std::move(emitted);
    std::stable_sort(run.begin(), run.end(),
                     [](const EmitKV& a, const EmitKV& b) { return a.key < b.key; });
  }
  counts.combined = run.size();

  std::vector<std::vector<EmitKV>> by_partition(static_cast<std::size_t>(num_reducers));
  for (const auto& kv : run) by_partition[static_cast<std::size_t>(partition(kv.key, num_reducers))].push_back(kv);
  for (int p = 0; p < num_reducers; ++p) {
    write_spill(spill_path(dir, shard, p), by_partition[static_cast<std::size_t>(p)]);
  }
  write_spill(side_path(dir, shard), ctx.side());
  return counts;
}

KeyGroupReader open_partition(const std::filesystem::path& dir, std::size_t num_shards,
                              int partition) {
  std::vector<std::unique_ptr<SpillReader>> runs;
  runs.reserve(num_shards);
  for (std::size_t s = 0; s < num_shards; ++s) {
    runs.push_back(std::make_unique<SpillReader>(spill_path(dir, s, partition)));
  }
  return KeyGroupReader(std::move(runs));
}

std::vector<EmitKV> merge_side_files(const std::filesystem::path& dir, std::size_t num_shards) {
  std::vector<EmitKV> all;
  for (std::size_t s = 0; s < num_shards; ++s) {
    auto part = read_spill(side_path(dir, s));
    all.insert(all.end(), part.begin(), part.end());
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const EmitKV& a, const EmitKV& b) { return a.key < b.key; });
  return all;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

// --- broadcast -----------------------------------------------------------------

void BroadcastBundle::validate() const {
  if (languages.size() != beta.size()) throw JobError("broadcast: language/table count mismatch");
  if (alpha.empty()) throw JobError("broadcast: empty alpha");
  for (double a : alpha) {
    if (!(a > 0.0) || !std::isfinite(a)) throw JobError("broadcast: alpha entries must be positive");
  }
  for (std::size_t l = 0; l < beta.size(); ++l) {
    const auto& table = beta[l];
    const auto K = static_cast<std::size_t>(table.topics);
    const auto V = static_cast<std::size_t>(table.vocab_size);
    if (K != alpha.size()) throw JobError("broadcast: topic count does not match alpha");
    if (table.expected_beta.size() != K * V || table.normalizer.size() != K || V == 0) {
      throw JobError("broadcast: incomplete table for language '" + languages[l] + "'");
    }
    for (std::size_t k = 0; k < K; ++k) {
      if (!(table.normalizer[k] > 0.0) || !std::isfinite(table.normalizer[k])) {
        throw JobError("broadcast: non-positive normalizer");
      }
      double total = 0.0;
      for (std::size_t v = 0; v < V; ++v) {
        const double value = table.expected_beta[v * K + k];
        if (!(value > 0.0) || !std::isfinite(value)) {
          throw JobError("broadcast: non-positive expected beta at language '" + languages[l] +
                         "' topic " + std::to_string(k) + " term " + std::to_string(v));
        }
        total += value;
      }
      if (std::fabs(total - 1.0) > 1e-9) {
        throw JobError("broadcast: topic " + std::to_string(k) + " of language '" + languages[l] +
                       "' sums to " + text::format_double(total));
      }
    }
  }
}

namespace {

std::string label_or_iteration(const std::string& label, int iteration) {
  return label.empty() ? std::to_string(iteration) : label;
}

std::vector<std::vector<std::string_view>> tsv_rows(const std::string& contents, std::size_t fields,
                                                    const std::string& name) {
  std::vector<std::vector<std::string_view>> rows;
  std::string_view rest(contents);
  std::size_t line_no = 0;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    auto line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    auto row = text::split(line, '\t');
    if (row.size() != fields) throw JobError(name + ": malformed line " + std::to_string(line_no));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void publish_broadcast(const BroadcastBundle& bundle, const std::filesystem::path& dir,
                       const std::string& label, const std::string& prefix) {
  bundle.validate();
  std::filesystem::create_directories(dir);
  const auto tag = label_or_iteration(label, bundle.iteration);
  for (std::size_t l = 0; l < bundle.languages.size(); ++l) {
    const auto& table = bundle.beta[l];
    std::string beta;
    for (int k = 0; k < table.topics; ++k) {
      for (int v = 0; v < table.vocab_size; ++v) {
        beta += std::to_string(k) + '\t' + std::to_string(v) + '\t' +
                text::format_double(table.at(v, k)) + '\n';
      }
    }
    text::write_file_atomic(dir / (prefix + "beta." + bundle.languages[l] + "." + tag + ".tsv"), beta);
    std::string nu;
    for (int k = 0; k < table.topics; ++k) {
      nu += std::to_string(k) + '\t' + text::format_double(table.normalizer[static_cast<std::size_t>(k)]) + '\n';
    }
    text::write_file_atomic(dir / (prefix + "nu." + bundle.languages[l] + "." + tag + ".tsv"), nu);
  }
  std::string alpha;
  for (std::size_t k = 0; k < bundle.alpha.size(); ++k) {
    alpha += std::to_string(k) + '\t' + text::format_double(bundle.alpha[k]) + '\n';
  }
  text::write_file_atomic(dir / (prefix + "alpha." + tag + ".tsv"), alpha);
}

BroadcastBundle load_broadcast(const std::filesystem::path& dir, int iteration,
                               const std::vector<std::string>& languages,
                               const std::string& label, const std::string& prefix) {
  const auto tag = label_or_iteration(label, iteration);
  BroadcastBundle bundle;
  bundle.iteration = iteration;
  bundle.languages = languages;

  const auto alpha_name = prefix + "alpha." + tag + ".tsv";
  const auto alpha_text = text::read_file_text(dir / alpha_name);
  for (const auto& row : tsv_rows(alpha_text, 2, alpha_name)) {
    const auto k = text::parse_int32(row[0], "topic", 0);
    if (k != static_cast<std::int32_t>(bundle.alpha.size())) throw JobError(alpha_name + ": topics out of order");
    bundle.alpha.push_back(text::parse_double(row[1], "alpha", 0));
  }
  const int K = static_cast<int>(bundle.alpha.size());

  for (const auto& language : languages) {
    BetaTable table;
    table.topics = K;
    const auto beta_name = prefix + "beta." + language + "." + tag + ".tsv";
    const auto beta_text = text::read_file_text(dir / beta_name);
    const auto rows = tsv_rows(beta_text, 3, beta_name);
    if (K == 0 || rows.size() % static_cast<std::size_t>(K) != 0) {
      throw JobError(beta_name + ": row count is not a multiple of the topic count");
    }
    table.vocab_size = static_cast<int>(rows.size() / static_cast<std::size_t>(K));
    table.expected_beta.assign(rows.size(), 0.0);
    std::size_t i = 0;
    for (int k = 0; k < K; ++k) {
      for (int v = 0; v < table.vocab_size; ++v, ++i) {
        const auto& row = rows[i];
        if (text::parse_int32(row[0], "topic", 0) != k || text::parse_int32(row[1], "term", 0) != v) {
          throw JobError(beta_name + ": rows must be ordered by (topic, term) with no gaps");
        }
        table.expected_beta[static_cast<std::size_t>(v) * static_cast<std::size_t>(K) +
                            static_cast<std::size_t>(k)] = text::parse_double(row[2], "beta", 0);
      }
    }
    const auto nu_name = prefix + "nu." + language + "." + tag + ".tsv";
    const auto nu_text = text::read_file_text(dir / nu_name);
    const auto nu_rows = tsv_rows(nu_text, 2, nu_name);
    if (nu_rows.size() != static_cast<std::size_t>(K)) throw JobError(nu_name + ": wrong row count");
    for (int k = 0; k < K; ++k) {
      if (text::parse_int32(nu_rows[static_cast<std::size_t>(k)][0], "topic", 0) != k) {
        throw JobError(nu_name + ": topics out of order");
      }
      table.normalizer.push_back(text::parse_double(nu_rows[static_cast<std::size_t>(k)][1], "nu", 0));
    }
    bundle.beta.push_back(std::move(table));
  }
  bundle.validate();
  return bundle;
}

void write_metrics(const std::filesystem::path& dir, int iteration, const JobMetrics& metrics) {
  std::filesystem::create_directories(dir);
  text::write_file_atomic(dir / ("metrics." + std::to_string(iteration) + ".json"),
                          metrics.to_json(iteration));
}

}  // namespace mrlda::mr
