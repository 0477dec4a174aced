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

#include "mrlda/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "mrlda/text_format.hpp"

namespace mrlda {

// --- tokenization ----------------------------------------------------------

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& options) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    if (options.stem) {
      current = options.stemmer ? options.stemmer(current) : light_stem(current);
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::string light_stem(std::string_view word) {
  std::string w(word);
  if (w.size() <= 3) return w;
  if (ends_with(w, "ies") && w.size() > 4) return w.substr(0, w.size() - 3) + "y";
  if (ends_with(w, "sses")) return w.substr(0, w.size() - 2);
  if (ends_with(w, "ss") || ends_with(w, "us")) return w;
  if (ends_with(w, "ing") && w.size() > 5) return w.substr(0, w.size() - 3);
  if (ends_with(w, "ed") && w.size() > 4) return w.substr(0, w.size() - 2);
  if (ends_with(w, "ly") && w.size() > 4) return w.substr(0, w.size() - 2);
  if (ends_with(w, "s")) return w.substr(0, w.size() - 1);
  return w;
}

// --- vocabulary ------------------------------------------------------------

LanguageVocab::LanguageVocab(std::vector<std::string> terms, std::vector<std::int64_t> frequencies)
    : terms_(std::move(terms)), freq_(std::move(frequencies)) {
  if (terms_.size() != freq_.size()) throw InputError("vocabulary: term/frequency size mismatch");
  if (terms_.size() > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
    throw InputError("vocabulary too large");
  }
  index_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (i > 0 && !(terms_[i - 1] < terms_[i])) {
      throw InputError("vocabulary terms must be unique and ascending: '" + terms_[i] + "'");
    }
    index_.emplace(terms_[i], static_cast<std::int32_t>(i));
  }
}

std::int32_t LanguageVocab::find(std::string_view term) const {
  auto it = index_.find(std::string(term));
  return it == index_.end() ? -1 : it->second;
}

const LanguageVocab& VocabMap::at(const std::string& language) const {
  auto it = languages.find(language);
  if (it == languages.end()) throw InputError("no vocabulary for language '" + language + "'");
  return it->second;
}

VocabMap build_vocabulary(std::span<const RawDocument> raw_docs, int min_df,
                          const TokenizerOptions& tokenizer, FrequencyMode mode) {
  if (min_df < 1) throw InputError("min_df must be >= 1");
  if (raw_docs.empty()) throw InputError("empty corpus");

  // (language, doc_id) pairs can repeat across lines; a term counts once per
  // document in document-frequency mode.
  std::map<std::string, std::map<std::string, std::int64_t>> counts;
  std::map<std::string, std::map<std::int32_t, std::set<std::string>>> seen;
  for (const auto& doc : raw_docs) {
    auto& lang_counts = counts[doc.language];
    auto& doc_seen = seen[doc.language][doc.doc_id];
    for (auto& token : tokenize(doc.text, tokenizer)) {
      if (mode == FrequencyMode::collection) {
        ++lang_counts[token];
      } else if (doc_seen.insert(token).second) {
        ++lang_counts[token];
      }
    }
  }

  VocabMap vocab;
  for (auto& [language, term_counts] : counts) {
    std::vector<std::string> terms;
    std::vector<std::int64_t> freqs;
    for (auto& [term, count] : term_counts) {  // std::map: lexicographic order
      if (count >= min_df) {
        terms.push_back(term);
        freqs.push_back(count);
      }
    }
    if (!terms.empty()) vocab.languages.emplace(language, LanguageVocab(std::move(terms), std::move(freqs)));
  }
  if (vocab.languages.empty()) {
    throw InputError("no terms survive min_df=" + std::to_string(min_df));
  }
  return vocab;
}

// --- documents -------------------------------------------------------------

std::int64_t Document::token_count() const {
  std::int64_t total = 0;
  for (const auto& part : parts)
    for (const auto& tc : part.terms) total += tc.count;
  return total;
}

const LanguageTerms* Document::find(std::string_view language) const {
  for (const auto& part : parts)
    if (part.language == language) return &part;
  return nullptr;
}

LanguageTerms vectorize(const std::string& language, std::string_view text, const VocabMap& vocab,
                        const TokenizerOptions& tokenizer) {
  LanguageTerms out{language, {}};
  auto it = vocab.languages.find(language);
  if (it == vocab.languages.end()) return out;
  std::map<std::int32_t, std::int32_t> counts;
  for (const auto& token : tokenize(text, tokenizer)) {
    const std::int32_t id = it->second.find(token);
    if (id >= 0) ++counts[id];
  }
  out.terms.reserve(counts.size());
  for (auto [id, count] : counts) out.terms.push_back({id, count});
  return out;
}

namespace {

void merge_part(std::vector<LanguageTerms>& parts, LanguageTerms part) {
  auto it = std::find_if(parts.begin(), parts.end(),
                         [&](const LanguageTerms& p) { return p.language == part.language; });
  if (it == parts.end()) {
    parts.push_back(std::move(part));
    return;
  }
  std::map<std::int32_t, std::int32_t> merged;
  for (auto tc : it->terms) merged[tc.term] += tc.count;
  for (auto tc : part.terms) merged[tc.term] += tc.count;
  it->terms.clear();
  for (auto [id, count] : merged) it->terms.push_back({id, count});
}

void sort_parts(Document& doc) {
  std::erase_if(doc.parts, [](const LanguageTerms& p) { return p.terms.empty(); });
  std::sort(doc.parts.begin(), doc.parts.end(),
            [](const LanguageTerms& a, const LanguageTerms& b) { return a.language < b.language; });
}

}  // namespace

std::vector<Document> vectorize_corpus(std::span<const RawDocument> raw_docs,
                                       const VocabMap& vocab, const TokenizerOptions& tokenizer,
                                       std::vector<std::int32_t>* excluded) {
  std::map<std::int32_t, Document> by_id;
  for (const auto& raw : raw_docs) {
    auto& doc = by_id[raw.doc_id];
    doc.doc_id = raw.doc_id;
    merge_part(doc.parts, vectorize(raw.language, raw.text, vocab, tokenizer));
  }
  std::vector<Document> docs;
  docs.reserve(by_id.size());
  for (auto& [id, doc] : by_id) {
    sort_parts(doc);
    if (doc.parts.empty()) {
      std::cerr << "warning: document " << id << " has no in-vocabulary tokens; excluded\n";
      if (excluded) excluded->push_back(id);
      continue;
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<CorpusShard> shard_corpus(std::span<const Document> docs, int num_shards) {
  if (num_shards < 1) throw std::invalid_argument("num_shards must be >= 1");
  std::vector<const Document*> sorted;
  sorted.reserve(docs.size());
  for (const auto& d : docs) sorted.push_back(&d);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Document* a, const Document* b) { return a->doc_id < b->doc_id; });
  std::vector<CorpusShard> shards(static_cast<std::size_t>(num_shards));
  for (int s = 0; s < num_shards; ++s) shards[static_cast<std::size_t>(s)].shard_id = s;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    shards[i % static_cast<std::size_t>(num_shards)].documents.push_back(*sorted[i]);
  }
  return shards;
}

// --- file formats ----------------------------------------------------------

std::vector<RawDocument> read_raw_documents(std::istream& in) {
  std::vector<RawDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = text::split(line, '\t', 3);
    if (fields.size() != 3) throw InputError("expected doc_id<TAB>language<TAB>text", line_no);
    RawDocument doc;
    doc.doc_id = text::parse_int32(fields[0], "doc_id", line_no);
    if (doc.doc_id < 0) throw InputError("doc_id must be non-negative", line_no);
    if (fields[1].empty()) throw InputError("empty language code", line_no);
    doc.language = std::string(fields[1]);
    doc.text = std::string(fields[2]);
    docs.push_back(std::move(doc));
  }
  return docs;
}

void write_vocabulary(std::ostream& out, const VocabMap& vocab) {
  for (const auto& [language, lv] : vocab.languages) {
    for (std::int32_t id = 0; id < lv.size(); ++id) {
      out << language << '\t' << lv.term(id) << '\t' << id << '\t' << lv.frequency(id) << '\n';
    }
  }
}

VocabMap read_vocabulary(std::istream& in) {
  std::map<std::string, std::pair<std::vector<std::string>, std::vector<std::int64_t>>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = text::split(line, '\t');
    if (fields.size() != 4) throw InputError("expected language<TAB>term<TAB>id<TAB>doc_freq", line_no);
    auto& [terms, freqs] = rows[std::string(fields[0])];
    const auto id = text::parse_int32(fields[2], "term id", line_no);
    if (id != static_cast<std::int32_t>(terms.size())) {
      throw InputError("term ids must be dense and ascending per language", line_no);
    }
    terms.emplace_back(fields[1]);
    freqs.push_back(text::parse_int64(fields[3], "doc_freq", line_no));
  }
  VocabMap vocab;
  for (auto& [language, tf] : rows) {
    vocab.languages.emplace(language, LanguageVocab(std::move(tf.first), std::move(tf.second)));
  }
  return vocab;
}

void write_corpus(std::ostream& out, std::span<const Document> docs) {
  for (const auto& doc : docs) {
    for (const auto& part : doc.parts) {
      out << doc.doc_id << '\t' << part.language << '\t';
      for (std::size_t i = 0; i < part.terms.size(); ++i) {
        if (i) out << ' ';
        out << part.terms[i].term << ':' << part.terms[i].count;
      }
      out << '\n';
    }
  }
}

std::vector<Document> read_corpus(std::istream& in) {
  std::map<std::int32_t, Document> by_id;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = text::split(line, '\t');
    if (fields.size() != 3) throw InputError("expected doc_id<TAB>language<TAB>v:c ...", line_no);
    const auto doc_id = text::parse_int32(fields[0], "doc_id", line_no);
    LanguageTerms part{std::string(fields[1]), {}};
    for (auto pair : text::split(fields[2], ' ')) {
      if (pair.empty()) continue;
      const auto colon = pair.find(':');
      if (colon == std::string_view::npos) throw InputError("expected term:count", line_no);
      TermCount tc{text::parse_int32(pair.substr(0, colon), "term id", line_no),
                   text::parse_int32(pair.substr(colon + 1), "count", line_no)};
      if (tc.term < 0 || tc.count < 1) throw InputError("term ids must be >= 0 and counts >= 1", line_no);
      if (!part.terms.empty() && part.terms.back().term >= tc.term) {
        throw InputError("term ids must be strictly ascending", line_no);
      }
      part.terms.push_back(tc);
    }
    auto& doc = by_id[doc_id];
    doc.doc_id = doc_id;
    if (doc.find(part.language)) throw InputError("duplicate (doc_id, language) line", line_no);
    if (!part.terms.empty()) doc.parts.push_back(std::move(part));
  }
  std::vector<Document> docs;
  for (auto& [id, doc] : by_id) {
    sort_parts(doc);
    if (!doc.parts.empty()) docs.push_back(std::move(doc));
  }
  return docs;
}

// --- trainer-facing view ---------------------------------------------------

std::int64_t IndexedDocument::token_count() const {
  std::int64_t total = 0;
  for (const auto& lang : terms)
    for (const auto& tc : lang) total += tc.count;
  return total;
}

std::int64_t IndexedDocument::distinct_terms() const {
  std::int64_t total = 0;
  for (const auto& lang : terms) total += static_cast<std::int64_t>(lang.size());
  return total;
}

std::int64_t TrainingCorpus::token_count() const {
  std::int64_t total = 0;
  for (const auto& d : documents) total += d.token_count();
  return total;
}

TrainingCorpus make_training_corpus(std::span<const Document> docs, const VocabMap& vocab,
                                    const std::vector<std::string>& languages) {
  if (languages.empty()) throw InputError("at least one language is required");
  TrainingCorpus corpus;
  corpus.languages = languages;
  for (const auto& language : languages) corpus.vocab_sizes.push_back(vocab.at(language).size());

  std::vector<const Document*> sorted;
  for (const auto& d : docs) sorted.push_back(&d);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Document* a, const Document* b) { return a->doc_id < b->doc_id; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->doc_id == sorted[i - 1]->doc_id) {
      throw InputError("duplicate doc_id " + std::to_string(sorted[i]->doc_id));
    }
  }
  for (const Document* doc : sorted) {
    IndexedDocument indexed{doc->doc_id, std::vector<std::vector<TermCount>>(languages.size())};
    for (std::size_t l = 0; l < languages.size(); ++l) {
      const LanguageTerms* part = doc->find(languages[l]);
      if (!part) continue;
      for (auto tc : part->terms) {
        if (tc.term < 0 || tc.term >= corpus.vocab_sizes[l]) {
          throw InputError("document " + std::to_string(doc->doc_id) + ": term id " +
                           std::to_string(tc.term) + " outside vocabulary of '" + languages[l] + "'");
        }
      }
      indexed.terms[l] = part->terms;
    }
    if (indexed.token_count() > 0) corpus.documents.push_back(std::move(indexed));
  }
  if (corpus.documents.empty()) throw InputError("no documents with tokens in the selected languages");
  return corpus;
}

}  // namespace mrlda
