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


// Single-threaded variational EM over the whole corpus in plain loops, with
// no shuffle, sharding or broadcast. Used as the numerical oracle for the
// distributed trainer; shares the special functions, the lambda
// initialization and the alpha Newton solver.

#ifndef MRLDA_REFERENCE_VB_HPP
#define MRLDA_REFERENCE_VB_HPP

#include "mrlda/corpus.hpp"
#include "mrlda/lda_job.hpp"

namespace mrlda {

/// Same configuration, seed semantics, stopping rule and result layout as
/// train. Workers, reducers, shards, combiner and checkpoint_dir are ignored.
TrainResult serial_train(const TrainingCorpus& corpus, const TrainConfig& config);

/// Converged gamma for one document against fixed lambda and alpha.
std::vector<double> serial_infer(const IndexedDocument& doc, const std::vector<TopicParams>& topics,
                                 const std::vector<double>& alpha, const InferenceOptions& options);

}  // namespace mrlda

#endif  // MRLDA_REFERENCE_VB_HPP
