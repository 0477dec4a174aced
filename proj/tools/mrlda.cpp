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


// mrlda: preprocess, train, topics, infer.
// Exit codes: 0 success, 2 input error, 3 runtime or convergence failure.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mrlda/corpus.hpp"
#include "mrlda/extensions.hpp"
#include "mrlda/lda_job.hpp"
#include "mrlda/math_kernels.hpp"
#include "mrlda/model_io.hpp"
#include "mrlda/reference_vb.hpp"
#include "mrlda/text_format.hpp"

namespace fs = std::filesystem;
using namespace mrlda;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

// Training failed after the model directory (if any) was written.
class RunFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Binding {
  CLI::Option* option;
  std::function<void(RunConfig&, const RunConfig&)> copy;
};

template <class T>
void bind_flag(CLI::App* app, std::vector<Binding>& bindings, RunConfig& flags, const std::string& name,
          T RunConfig::*field, const std::string& help) {
  CLI::Option* opt = nullptr;
  if constexpr (std::is_same_v<T, bool>) {
    opt = app->add_flag(name, flags.*field, help);
  } else {
    opt = app->add_option(name, flags.*field, help)->capture_default_str();
  }
  if constexpr (std::is_same_v<T, std::vector<std::string>>) opt->delimiter(',');
  bindings.push_back({opt, [field](RunConfig& dst, const RunConfig& src) { dst.*field = src.*field; }});
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  text::write_file_atomic(path, text);
}

// --- preprocess --------------------------------------------------------------

struct PreprocessArgs {
  std::string input, out, df_mode = "document";
  int min_df = 1;
  bool stem = false;
};

int cmd_preprocess(const PreprocessArgs& a) {
  if (a.df_mode != "document" && a.df_mode != "collection") throw InputError("df-mode must be document or collection");
  const auto raw = read_file(a.input, [](std::istream& in) { return read_raw_documents(in); });
  TokenizerOptions tok;
  tok.stem = a.stem;
  const auto vocab = build_vocabulary(raw, a.min_df, tok,
                                      a.df_mode == "document" ? FrequencyMode::document : FrequencyMode::collection);
  const auto docs = vectorize_corpus(raw, vocab, tok);
  std::ostringstream vs, cs;
  write_vocabulary(vs, vocab);
  write_corpus(cs, docs);
  fs::create_directories(a.out);
  write_text(fs::path(a.out) / "vocab.tsv", vs.str());
  write_text(fs::path(a.out) / "corpus.tsv", cs.str());
  std::int64_t tokens = 0;
  for (const auto& d : docs) tokens += d.token_count();
  std::cout << "documents\t" << docs.size() << '\n';
  for (const auto& [language, lv] : vocab.languages) std::cout << "vocabulary\t" << language << '\t' << lv.size() << '\n';
  std::cout << "tokens\t" << tokens << '\n';
  return 0;
}

// --- train -------------------------------------------------------------------

std::vector<std::string> resolve_languages(const RunConfig& cfg, const VocabMap& vocab) {
  std::vector<std::string> available;
  for (const auto& [language, lv] : vocab.languages) available.push_back(language);
  if (cfg.mode == "mono") {
    if (!cfg.languages.empty()) {
      if (cfg.languages.size() != 1) throw InputError("mono mode takes exactly one language");
      return cfg.languages;
    }
    if (available.size() != 1) {
      throw InputError("corpus has " + std::to_string(available.size()) +
                       " languages; use --mode poly or pick one with --languages");
    }
    return available;
  }
  return cfg.languages.empty() ? available : cfg.languages;
}

int cmd_train(RunConfig cfg) {
  if (cfg.input.empty() || cfg.out.empty()) throw InputError("train needs --input and --out");
  cfg.validate();
  const fs::path in_dir(cfg.input);
  const auto vocab = read_file(in_dir / "vocab.tsv", [](std::istream& in) { return read_vocabulary(in); });
  const auto docs = read_file(in_dir / "corpus.tsv", [](std::istream& in) { return read_corpus(in); });
  cfg.languages = resolve_languages(cfg, vocab);
  if (cfg.alpha_init <= 0.0) cfg.alpha_init = 1.0 / cfg.topics;
  const auto corpus = make_training_corpus(docs, vocab, cfg.languages);

  auto train_cfg = cfg.to_train_config();
  if (!cfg.prior_file.empty()) {
    const auto dict = CategoryDictionary::read(cfg.prior_file);
    std::vector<std::string> warnings;
    train_cfg.eta_prior = build_informed_prior(dict, vocab, cfg.languages, cfg.topics,
                                               {cfg.prior_boost, cfg.eta}, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  }
  const fs::path out(cfg.out);
  fs::create_directories(out);
  if (!cfg.serial) train_cfg.checkpoint_dir = out / "checkpoints";

  TrainResult result;
  try {
    if (cfg.serial) {
      result = serial_train(corpus, train_cfg);
    } else if (cfg.mode == "poly") {
      result = train_polylingual(corpus, train_cfg);
    } else {
      result = train(corpus, train_cfg);
    }
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\nbound trace:\n";
    for (std::size_t t = 0; t < e.trace().size(); ++t) {
      std::cerr << (t + 1) << '\t' << text::format_double(e.trace()[t]) << '\n';
    }
    return kExitRuntime;
  }
  write_model(out, result, cfg, vocab, cfg.serial ? "serial." : "");
  std::cout << "iterations\t" << result.iterations << '\n'
            << "converged\t" << (result.converged ? "yes" : "no") << '\n'
            << "elbo\t" << text::format_double(result.elbo.back()) << '\n';
  if (!result.converged) {
    throw RunFailure("bound did not converge within " + std::to_string(cfg.max_iter) + " iterations");
  }
  return 0;
}

// --- topics ------------------------------------------------------------------

int cmd_topics(const std::string& model_dir, int top_n, bool serial) {
  if (top_n < 1) throw InputError("top-n must be >= 1");
  const auto model = load_model(model_dir, serial ? "serial." : "");
  for (std::size_t l = 0; l < model.config.languages.size(); ++l) {
    const auto& language = model.config.languages[l];
    const auto& table = model.bundle.beta[l];
    const auto& lv = model.vocab.at(language);
    std::vector<std::int32_t> order(static_cast<std::size_t>(table.vocab_size));
    for (int k = 0; k < table.topics; ++k) {
      for (std::size_t v = 0; v < order.size(); ++v) order[v] = static_cast<std::int32_t>(v);
      std::stable_sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
        const double x = table.at(a, k), y = table.at(b, k);
        return x != y ? x > y : a < b;
      });
      const auto n = std::min<std::size_t>(static_cast<std::size_t>(top_n), order.size());
      for (std::size_t r = 0; r < n; ++r) {
        std::cout << language << '\t' << k << '\t' << (r + 1) << '\t' << lv.term(order[r]) << '\t'
                  << text::format_double(table.at(order[r], k)) << '\n';
      }
    }
  }
  return 0;
}

// --- infer -------------------------------------------------------------------

struct InferArgs {
  std::string model, input, out;
  double gamma_tol = 0.0;
  int gamma_max_iter = 0;
  bool stem = false;
  bool serial = false;
};

// Held-out documents as term counts over the model vocabulary.
std::vector<Document> held_out_documents(const InferArgs& a, const VocabMap& model_vocab) {
  const fs::path in(a.input);
  if (fs::is_directory(in)) {
    const auto vocab = read_file(in / "vocab.tsv", [](std::istream& s) { return read_vocabulary(s); });
    auto docs = read_file(in / "corpus.tsv", [](std::istream& s) { return read_corpus(s); });
    for (auto& doc : docs) {
      for (auto& part : doc.parts) {
        const auto mv = model_vocab.languages.find(part.language);
        std::vector<TermCount> mapped;
        if (mv != model_vocab.languages.end()) {
          const auto& src = vocab.at(part.language);
          for (const auto& tc : part.terms) {
            const auto id = mv->second.find(src.term(tc.term));
            if (id >= 0) mapped.push_back({id, tc.count});
          }
        }
        std::sort(mapped.begin(), mapped.end(), [](const TermCount& x, const TermCount& y) { return x.term < y.term; });
        part.terms = std::move(mapped);
      }
    }
    return docs;
  }
  const auto raw = read_file(in, [](std::istream& s) { return read_raw_documents(s); });
  TokenizerOptions tok;
  tok.stem = a.stem;
  std::vector<Document> docs;
  for (const auto& d : vectorize_corpus(raw, model_vocab, tok)) docs.push_back(d);
  return docs;
}

int cmd_infer(const InferArgs& a) {
  if (a.model.empty() || a.input.empty() || a.out.empty()) throw InputError("infer needs --model, --input and --out");
  const auto model = load_model(a.model, a.serial ? "serial." : "");
  InferenceOptions opts;
  opts.gamma_tol = a.gamma_tol > 0.0 ? a.gamma_tol : model.config.gamma_tol;
  opts.gamma_max_iter = a.gamma_max_iter > 0 ? a.gamma_max_iter : model.config.gamma_max_iter;
  opts.expected_log_beta = model.config.elog_beta == "log_mean" ? ExpectedLogBeta::log_mean : ExpectedLogBeta::digamma;

  const auto docs = held_out_documents(a, model.vocab);
  const auto& languages = model.config.languages;
  std::vector<DocGamma> gammas;
  for (const auto& doc : docs) {
    IndexedDocument indexed{doc.doc_id, std::vector<std::vector<TermCount>>(languages.size())};
    for (std::size_t l = 0; l < languages.size(); ++l) {
      if (const auto* part = doc.find(languages[l])) indexed.terms[l] = part->terms;
    }
    if (indexed.token_count() == 0) {
      std::cerr << "warning: document " << doc.doc_id << " has no in-vocabulary tokens; skipped\n";
      continue;
    }
    gammas.push_back({doc.doc_id, infer_document(indexed, model.bundle, opts)});
  }
  std::ostringstream out;
  write_gammas(out, gammas);
  write_text(a.out, out.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational LDA on an in-process MapReduce runtime"};
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto* pre_cmd = app.add_subcommand("preprocess", "Tokenize raw documents and build the vocabulary");
  pre_cmd->add_option("--input", pre.input, "doc_id<TAB>language<TAB>text file")->required();
  pre_cmd->add_option("--out", pre.out, "output directory")->required();
  pre_cmd->add_option("--min-df", pre.min_df, "minimum term frequency")->capture_default_str();
  pre_cmd->add_option("--df-mode", pre.df_mode, "document | collection")->capture_default_str();
  pre_cmd->add_flag("--stem", pre.stem, "strip common English suffixes");

  RunConfig flags;
  std::vector<Binding> bindings;
  std::string config_path;
  auto* train_cmd = app.add_subcommand("train", "Fit a model");
  train_cmd->add_option("--config", config_path, "config.json to start from; explicit flags override it");
  bind_flag(train_cmd, bindings, flags, "--input", &RunConfig::input, "preprocessed corpus directory");
  bind_flag(train_cmd, bindings, flags, "--out", &RunConfig::out, "model directory");
  bind_flag(train_cmd, bindings, flags, "--topics", &RunConfig::topics, "number of topics");
  bind_flag(train_cmd, bindings, flags, "--alpha-init", &RunConfig::alpha_init, "initial symmetric alpha (0: 1/K)");
  bind_flag(train_cmd, bindings, flags, "--eta", &RunConfig::eta, "symmetric topic-word prior");
  bind_flag(train_cmd, bindings, flags, "--prior-file", &RunConfig::prior_file, "word-category dictionary");
  bind_flag(train_cmd, bindings, flags, "--prior-boost", &RunConfig::prior_boost, "prior on dictionary terms");
  bind_flag(train_cmd, bindings, flags, "--max-iter", &RunConfig::max_iter, "EM iteration cap");
  bind_flag(train_cmd, bindings, flags, "--elbo-tol", &RunConfig::elbo_tol, "relative bound change to stop at");
  bind_flag(train_cmd, bindings, flags, "--gamma-tol", &RunConfig::gamma_tol, "per-document gamma tolerance");
  bind_flag(train_cmd, bindings, flags, "--gamma-max-iter", &RunConfig::gamma_max_iter, "per-document sweep cap");
  bind_flag(train_cmd, bindings, flags, "--workers", &RunConfig::workers, "worker threads");
  bind_flag(train_cmd, bindings, flags, "--reducers", &RunConfig::reducers, "reduce partitions");
  bind_flag(train_cmd, bindings, flags, "--shards", &RunConfig::shards, "map input shards");
  bind_flag(train_cmd, bindings, flags, "--seed", &RunConfig::seed, "initialization seed");
  bind_flag(train_cmd, bindings, flags, "--mode", &RunConfig::mode, "mono | poly");
  bind_flag(train_cmd, bindings, flags, "--languages", &RunConfig::languages, "comma-separated language codes");
  bind_flag(train_cmd, bindings, flags, "--serial", &RunConfig::serial, "use the single-loop trainer");
  bind_flag(train_cmd, bindings, flags, "--init", &RunConfig::init, "random | documents");
  bind_flag(train_cmd, bindings, flags, "--elog-beta", &RunConfig::elog_beta, "digamma | log_mean");
  bind_flag(train_cmd, bindings, flags, "--combiner,!--no-combiner", &RunConfig::combiner, "map-side combiner (default on)");

  std::string topics_model;
  int top_n = 10;
  bool topics_serial = false;
  auto* topics_cmd = app.add_subcommand("topics", "Print the top terms of every topic");
  topics_cmd->add_option("--input", topics_model, "model directory")->required();
  topics_cmd->add_option("--top-n", top_n, "terms per topic")->capture_default_str();
  topics_cmd->add_flag("--serial", topics_serial, "read the single-loop trainer's files");

  InferArgs inf;
  auto* infer_cmd = app.add_subcommand("infer", "Infer gamma for held-out documents");
  infer_cmd->add_option("--model", inf.model, "model directory")->required();
  infer_cmd->add_option("--input", inf.input, "raw document file or preprocessed corpus directory")->required();
  infer_cmd->add_option("--out", inf.out, "output gamma file")->required();
  infer_cmd->add_option("--gamma-tol", inf.gamma_tol, "override the model's gamma tolerance");
  infer_cmd->add_option("--gamma-max-iter", inf.gamma_max_iter, "override the model's sweep cap");
  infer_cmd->add_flag("--stem", inf.stem, "stem raw input");
  infer_cmd->add_flag("--serial", inf.serial, "read the single-loop trainer's files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*pre_cmd) return cmd_preprocess(pre);
    if (*train_cmd) {
      RunConfig cfg = flags;
      if (!config_path.empty()) {
        cfg = RunConfig::read(config_path);
        for (const auto& b : bindings) {
          if (b.option->count() > 0) b.copy(cfg, flags);
        }
      }
      return cmd_train(cfg);
    }
    if (*topics_cmd) return cmd_topics(topics_model, top_n, topics_serial);
    if (*infer_cmd) return cmd_infer(inf);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::logic_error& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitInput;
}
