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

#ifndef MRLDA_CORPUS_HPP
#define MRLDA_CORPUS_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mrlda {

/// Malformed input: a bad line in a raw, corpus, vocabulary or dictionary
/// file, or a corpus that cannot be trained on. `line()` is 1-based, 0 when
/// not tied to a line.
class InputError : public std::runtime_error {
 public:
  InputError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline constexpr std::string_view kMonolingualLanguage = "xx";

// --- tokenization ----------------------------------------------------------

using Stemmer = std::function<std::string(std::string_view)>;

struct TokenizerOptions {
  bool stem = false;
  Stemmer stemmer;  // used when stem is set; defaults to light_stem
};

/// Lowercases ASCII and splits on anything that is not alphanumeric. Bytes
/// >= 0x80 are kept as word characters so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& options = {});

/// Conservative English suffix stripper (plurals, -ing, -ed, -ly).
std::string light_stem(std::string_view word);

// --- vocabulary ------------------------------------------------------------

struct RawDocument {
  std::int32_t doc_id = 0;
  std::string language{kMonolingualLanguage};
  std::string text;
};

/// How min_df is counted: documents containing the term, or total tokens.
enum class FrequencyMode { document, collection };

class LanguageVocab {
 public:
  LanguageVocab() = default;
  /// `terms` must be strictly ascending.
  LanguageVocab(std::vector<std::string> terms, std::vector<std::int64_t> frequencies);

  std::int32_t size() const { return static_cast<std::int32_t>(terms_.size()); }
  const std::string& term(std::int32_t id) const { return terms_.at(static_cast<std::size_t>(id)); }
  std::int64_t frequency(std::int32_t id) const { return freq_.at(static_cast<std::size_t>(id)); }
  /// -1 when absent.
  std::int32_t find(std::string_view term) const;
  const std::vector<std::string>& terms() const { return terms_; }

  bool operator==(const LanguageVocab& other) const {
    return terms_ == other.terms_ && freq_ == other.freq_;
  }

 private:
  std::vector<std::string> terms_;
  std::vector<std::int64_t> freq_;
  std::unordered_map<std::string, std::int32_t> index_;
};

struct VocabMap {
  std::map<std::string, LanguageVocab> languages;

  const LanguageVocab& at(const std::string& language) const;
  bool operator==(const VocabMap&) const = default;
};

/// Keeps terms whose frequency (per `mode`) is at least min_df; ids follow
/// lexicographic term order within each language.
VocabMap build_vocabulary(std::span<const RawDocument> raw_docs, int min_df,
                          const TokenizerOptions& tokenizer = {},
                          FrequencyMode mode = FrequencyMode::document);

// --- documents -------------------------------------------------------------

struct TermCount {
  std::int32_t term = 0;
  std::int32_t count = 0;
  bool operator==(const TermCount&) const = default;
};

struct LanguageTerms {
  std::string language;
  std::vector<TermCount> terms;  // ascending term id, counts >= 1
  bool operator==(const LanguageTerms&) const = default;
};

struct Document {
  std::int32_t doc_id = 0;
  std::vector<LanguageTerms> parts;  // ascending language code

  std::int64_t token_count() const;
  const LanguageTerms* find(std::string_view language) const;
  bool operator==(const Document&) const = default;
};

/// Counts in-vocabulary tokens; OOV tokens are dropped. The returned part
/// may be empty.
LanguageTerms vectorize(const std::string& language, std::string_view text, const VocabMap& vocab,
                        const TokenizerOptions& tokenizer = {});

/// Groups raw records by doc_id (several languages per id make one aligned
/// multilingual document) and vectorizes them. Documents with no
/// in-vocabulary tokens are excluded and their ids reported in `excluded`.
std::vector<Document> vectorize_corpus(std::span<const RawDocument> raw_docs,
                                       const VocabMap& vocab,
                                       const TokenizerOptions& tokenizer = {},
                                       std::vector<std::int32_t>* excluded = nullptr);

struct CorpusShard {
  int shard_id = 0;
  std::vector<Document> documents;  // ascending doc_id
};

/// Round-robin by ascending doc_id. Shards may be empty.
std::vector<CorpusShard> shard_corpus(std::span<const Document> docs, int num_shards);

// --- file formats ----------------------------------------------------------

/// `doc_id<TAB>language<TAB>text` lines.
std::vector<RawDocument> read_raw_documents(std::istream& in);

/// `language<TAB>term<TAB>id<TAB>doc_freq`, sorted by (language, id).
void write_vocabulary(std::ostream& out, const VocabMap& vocab);
VocabMap read_vocabulary(std::istream& in);

/// `doc_id<TAB>language<TAB>v1:c1 v2:c2 ...`, one line per (document, language).
void write_corpus(std::ostream& out, std::span<const Document> docs);
std::vector<Document> read_corpus(std::istream& in);

/// Reads a file with `reader`, throwing InputError when it cannot be opened.
template <class Reader>
auto read_file(const std::filesystem::path& path, Reader&& reader);

// --- trainer-facing view ---------------------------------------------------

/// A document with its language parts indexed by position in the model's
/// language list.
struct IndexedDocument {
  std::int32_t doc_id = 0;
  std::vector<std::vector<TermCount>> terms;  // [language] -> ascending term ids

  std::int64_t token_count() const;
  std::int64_t distinct_terms() const;
};

struct TrainingCorpus {
  std::vector<std::string> languages;
  std::vector<std::int32_t> vocab_sizes;  // per language
  std::vector<IndexedDocument> documents;  // ascending doc_id

  std::int64_t token_count() const;
};

/// Restricts documents to `languages` (in that order) and drops documents
/// left without tokens. Term ids are validated against the vocabulary.
TrainingCorpus make_training_corpus(std::span<const Document> docs, const VocabMap& vocab,
                                    const std::vector<std::string>& languages);

// --- implementation --------------------------------------------------------

template <class Reader>
auto read_file(const std::filesystem::path& path, Reader&& reader) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return reader(in);
}

}  // namespace mrlda

#endif  // MRLDA_CORPUS_HPP
