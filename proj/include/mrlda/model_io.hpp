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


// Run configuration and the on-disk model directory.
//
// Model directory (every name carries an optional prefix):
//   beta.<lang>.final.tsv    k<TAB>v<TAB>E[beta_{v,k}]
//   nu.<lang>.final.tsv      k<TAB>sum_v lambda_{v,k}
//   lambda.<lang>.final.tsv  k<TAB>v<TAB>lambda_{v,k}
//   alpha.final.tsv          k<TAB>alpha_k
//   gamma.final.tsv          d<TAB>k<TAB>gamma_{d,k}
//   elbo.tsv                 iter<TAB>bound
//   vocab.tsv                vocabulary the model was trained on
//   config.json              effective run configuration

#ifndef MRLDA_MODEL_IO_HPP
#define MRLDA_MODEL_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mrlda/corpus.hpp"
#include "mrlda/lda_job.hpp"
#include "mrlda/mr_runtime.hpp"

namespace mrlda {

struct RunConfig {
  std::string input;
  std::string out;
  int topics = 0;
  double alpha_init = 0.0;  // <= 0: 1/K
  double eta = 0.01;
  std::string prior_file;
  double prior_boost = 10.0;
  int max_iter = 50;
  double elbo_tol = 1e-4;
  double gamma_tol = 1e-5;
  int gamma_max_iter = 100;
  int workers = 1;
  int reducers = 1;
  int shards = 8;
  std::uint64_t seed = 0;
  std::string mode = "mono";  // mono | poly
  std::vector<std::string> languages;
  bool serial = false;
  std::string init = "random";        // random | documents
  std::string elog_beta = "digamma";  // digamma | log_mean
  bool combiner = true;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  /// Everything except the informed prior and checkpoint directory.
  TrainConfig to_train_config() const;

  std::string to_json() const;
  /// Missing keys keep their defaults; unknown keys are an InputError.
  static RunConfig from_json(const std::string& text);
  static RunConfig read(const std::filesystem::path& path);
};

void write_model(const std::filesystem::path& dir, const TrainResult& result, const RunConfig& config,
                 const VocabMap& vocab, const std::string& prefix = {});

struct LoadedModel {
  RunConfig config;
  VocabMap vocab;
  mr::BroadcastBundle bundle;  // final E[beta], nu and alpha
};

/// Throws InputError when a model file is missing or malformed.
LoadedModel load_model(const std::filesystem::path& dir, const std::string& prefix = {});

std::vector<DocGamma> read_gammas(std::istream& in);
void write_gammas(std::ostream& out, const std::vector<DocGamma>& gammas);

}  // namespace mrlda

#endif  // MRLDA_MODEL_IO_HPP
