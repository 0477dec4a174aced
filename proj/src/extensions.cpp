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


#include "mrlda/extensions.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include "mrlda/text_format.hpp"

namespace mrlda {

CategoryDictionary CategoryDictionary::parse(std::istream& in) {
  CategoryDictionary dict;
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> names;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = text::split(line, '\t', 2);
    if (fields.size() != 2 || fields[0].empty()) {
      throw InputError("dictionary line must be name<TAB>patterns", line_no);
    }
    Category cat{std::string(fields[0]), {}};
    for (auto p : text::split(fields[1], ' ')) {
      if (!p.empty()) cat.patterns.emplace_back(p);
    }
    if (cat.patterns.empty()) throw InputError("category '" + cat.name + "' has no patterns", line_no);
    if (!names.insert(cat.name).second) {
      throw InputError("duplicate category '" + cat.name + "'", line_no);
    }
    dict.categories.push_back(std::move(cat));
  }
  return dict;
}

CategoryDictionary CategoryDictionary::read(const std::filesystem::path& path) {
  return read_file(path, [](std::istream& in) { return parse(in); });
}

void CategoryDictionary::validate() const {
  std::set<std::string> names;
  for (const auto& c : categories) {
    if (c.patterns.empty()) throw InputError("category '" + c.name + "' has no patterns");
    if (!names.insert(c.name).second) throw InputError("duplicate category '" + c.name + "'");
  }
}

bool pattern_matches(std::string_view pattern, std::string_view term) {
  if (!pattern.empty() && pattern.back() == '*') {
    return term.starts_with(pattern.substr(0, pattern.size() - 1));
  }
  return pattern == term;
}

namespace {

void check_prior_args(const CategoryDictionary& dict, int topics, const InformedPriorOptions& options) {
  dict.validate();
  if (topics < 1) throw std::invalid_argument("topics must be >= 1");
  if (dict.categories.size() > static_cast<std::size_t>(topics)) {
    throw std::invalid_argument("dictionary has more categories than topics");
  }
  if (!(options.base > 0.0) || !(options.boost > options.base) || !std::isfinite(options.boost)) {
    throw std::invalid_argument("informed prior needs boost > base > 0");
  }
}

}  // namespace

std::vector<double> build_informed_prior(const CategoryDictionary& dict, const LanguageVocab& vocab,
                                         int topics, const InformedPriorOptions& options,
                                         std::vector<int>* matches_per_category) {
  check_prior_args(dict, topics, options);
  const auto Ks = static_cast<std::size_t>(topics);
  std::vector<double> eta(static_cast<std::size_t>(vocab.size()) * Ks, options.base);
  if (matches_per_category) matches_per_category->assign(dict.categories.size(), 0);
  for (std::size_t k = 0; k < dict.categories.size(); ++k) {
    for (std::int32_t v = 0; v < vocab.size(); ++v) {
      for (const auto& p : dict.categories[k].patterns) {
        if (pattern_matches(p, vocab.term(v))) {
          eta[static_cast<std::size_t>(v) * Ks + k] = options.boost;
          if (matches_per_category) ++(*matches_per_category)[k];
          break;
        }
      }
    }
  }
  return eta;
}

EtaPrior build_informed_prior(const CategoryDictionary& dict, const VocabMap& vocab,
                              const std::vector<std::string>& languages, int topics,
                              const InformedPriorOptions& options, std::vector<std::string>* warnings) {
  EtaPrior prior;
  prior.topics = topics;
  std::vector<int> total(dict.categories.size(), 0);
  for (const auto& language : languages) {
    std::vector<int> matches;
    prior.values.push_back(build_informed_prior(dict, vocab.at(language), topics, options, &matches));
    for (std::size_t k = 0; k < matches.size(); ++k) total[k] += matches[k];
  }
  if (languages.empty()) check_prior_args(dict, topics, options);
  for (std::size_t k = 0; k < total.size(); ++k) {
    if (total[k] == 0 && warnings) {
      warnings->push_back("category '" + dict.categories[k].name + "' matches no vocabulary term");
    }
  }
  return prior;
}

void PolyCorpusConfig::validate() const {
  if (languages.empty()) throw InputError("at least one language is required");
  if (languages.size() != vocab_sizes.size()) throw InputError("one vocabulary size per language is required");
  std::set<std::string> seen;
  for (std::size_t l = 0; l < languages.size(); ++l) {
    if (!seen.insert(languages[l]).second) throw InputError("duplicate language '" + languages[l] + "'");
    if (vocab_sizes[l] < 1) throw InputError("language '" + languages[l] + "' has an empty vocabulary");
  }
}

PolyUpdate poly_e_step(const Document& doc, const mr::BroadcastBundle& bundle,
                       const InferenceOptions& options) {
  IndexedDocument indexed{doc.doc_id, std::vector<std::vector<TermCount>>(bundle.languages.size())};
  for (const auto& part : doc.parts) {
    std::size_t l = 0;
    while (l < bundle.languages.size() && bundle.languages[l] != part.language) ++l;
    if (l == bundle.languages.size()) {
      if (part.terms.empty()) continue;
      throw InputError("document " + std::to_string(doc.doc_id) + " has tokens in language '" +
                       part.language + "' with no broadcast table");
    }
    indexed.terms[l] = part.terms;
  }
  const MapperTables tables(bundle, options.expected_log_beta);
  PolyUpdate out;
  out.update = e_step_document(indexed, tables, options);
  mr::MapContext ctx;
  emit_document(indexed, out.update, tables.topics(), ctx);
  out.emissions = std::move(ctx.emissions());
  out.side = std::move(ctx.side());
  return out;
}

TrainResult train_polylingual(const TrainingCorpus& corpus, const TrainConfig& config) {
  PolyCorpusConfig{corpus.languages, corpus.vocab_sizes}.validate();
  return train(corpus, config);
}

}  // namespace mrlda
