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


// Informed topic-word priors from a word-category dictionary, and the
// polylingual model: one shared gamma per aligned document, one topic-word
// table per language.

#ifndef MRLDA_EXTENSIONS_HPP
#define MRLDA_EXTENSIONS_HPP

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mrlda/corpus.hpp"
#include "mrlda/lda_job.hpp"
#include "mrlda/mr_runtime.hpp"

namespace mrlda {

/// Ordered categories; category i seeds topic i.
struct CategoryDictionary {
  struct Category {
    std::string name;
    std::vector<std::string> patterns;  // exact terms, or prefixes ending in '*'
  };
  std::vector<Category> categories;

  /// `name<TAB>pattern pattern ...` per line; blank lines are skipped.
  static CategoryDictionary parse(std::istream& in);
  static CategoryDictionary read(const std::filesystem::path& path);
  /// Throws InputError on duplicate names or empty pattern lists.
  void validate() const;
};

bool pattern_matches(std::string_view pattern, std::string_view term);

struct InformedPriorOptions {
  double boost = 10.0;
  double base = 0.01;
};

/// V x K table [v * K + k]: boost where term v matches category k, base
/// elsewhere. Topics beyond the dictionary stay at base.
std::vector<double> build_informed_prior(const CategoryDictionary& dict, const LanguageVocab& vocab,
                                         int topics, const InformedPriorOptions& options = {},
                                         std::vector<int>* matches_per_category = nullptr);

/// One table per language in `languages`. A category that matches no term
/// in any language produces a warning line.
EtaPrior build_informed_prior(const CategoryDictionary& dict, const VocabMap& vocab,
                              const std::vector<std::string>& languages, int topics,
                              const InformedPriorOptions& options = {},
                              std::vector<std::string>* warnings = nullptr);

struct PolyCorpusConfig {
  std::vector<std::string> languages;
  std::vector<std::int32_t> vocab_sizes;

  /// Distinct languages, matching sizes, positive vocabularies.
  void validate() const;
};

struct PolyUpdate {
  DocumentUpdate update;
  std::vector<mr::EmitKV> emissions;  // topic keys use slot = language * K + k
  std::vector<mr::EmitKV> side;
};

/// Maps `doc`'s language parts onto the bundle's languages and runs the
/// shared-gamma E-step. A language part with tokens but no table is an
/// InputError.
PolyUpdate poly_e_step(const Document& doc, const mr::BroadcastBundle& bundle,
                       const InferenceOptions& options);

/// Same driver as train; the language list comes from the corpus.
TrainResult train_polylingual(const TrainingCorpus& corpus, const TrainConfig& config);

}  // namespace mrlda

#endif  // MRLDA_EXTENSIONS_HPP
