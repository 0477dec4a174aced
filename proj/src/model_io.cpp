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


#include "mrlda/model_io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "mrlda/text_format.hpp"

namespace mrlda {

using Json = nlohmann::ordered_json;

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (topics < 1) fail("topics must be >= 1");
  if (!std::isfinite(alpha_init) || alpha_init < 0.0) fail("alpha-init must be positive (or 0 for 1/K)");
  if (!(eta > 0.0) || !std::isfinite(eta)) fail("eta must be positive");
  if (!(prior_boost > 0.0)) fail("prior-boost must be positive");
  if (max_iter < 1) fail("max-iter must be >= 1");
  if (!(elbo_tol > 0.0)) fail("elbo-tol must be positive");
  if (!(gamma_tol > 0.0)) fail("gamma-tol must be positive");
  if (gamma_max_iter < 1) fail("gamma-max-iter must be >= 1");
  if (workers < 1) fail("workers must be >= 1");
  if (reducers < 1) fail("reducers must be >= 1");
  if (shards < 1) fail("shards must be >= 1");
  if (mode != "mono" && mode != "poly") fail("mode must be mono or poly");
  if (init != "random" && init != "documents") fail("init must be random or documents");
  if (elog_beta != "digamma" && elog_beta != "log_mean") fail("elog-beta must be digamma or log_mean");
}

TrainConfig RunConfig::to_train_config() const {
  validate();
  TrainConfig c;
  c.topics = topics;
  c.alpha_init = alpha_init;
  c.eta = eta;
  c.max_iterations = max_iter;
  c.elbo_tol = elbo_tol;
  c.inference.gamma_tol = gamma_tol;
  c.inference.gamma_max_iter = gamma_max_iter;
  c.inference.expected_log_beta = elog_beta == "digamma" ? ExpectedLogBeta::digamma : ExpectedLogBeta::log_mean;
  c.workers = workers;
  c.reducers = reducers;
  c.shards = shards;
  c.seed = seed;
  c.init = init == "documents" ? LambdaInit::documents : LambdaInit::random;
  c.use_combiner = combiner;
  return c;
}

std::string RunConfig::to_json() const {
  Json j;
  j["input"] = input;
  j["out"] = out;
  j["topics"] = topics;
  j["alpha_init"] = alpha_init;
  j["eta"] = eta;
  j["prior_file"] = prior_file;
  j["prior_boost"] = prior_boost;
  j["max_iter"] = max_iter;
  j["elbo_tol"] = elbo_tol;
  j["gamma_tol"] = gamma_tol;
  j["gamma_max_iter"] = gamma_max_iter;
  j["workers"] = workers;
  j["reducers"] = reducers;
  j["shards"] = shards;
  j["seed"] = seed;
  j["mode"] = mode;
  j["languages"] = languages;
  j["serial"] = serial;
  j["init"] = init;
  j["elog_beta"] = elog_beta;
  j["combiner"] = combiner;
  return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw InputError(std::string("config.json: ") + e.what());
  }
  if (!j.is_object()) throw InputError("config.json: expected an object");
  RunConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "input") c.input = value.get<std::string>();
      else if (key == "out") c.out = value.get<std::string>();
      else if (key == "topics") c.topics = value.get<int>();
      else if (key == "alpha_init") c.alpha_init = value.get<double>();
      else if (key == "eta") c.eta = value.get<double>();
      else if (key == "prior_file") c.prior_file = value.get<std::string>();
      else if (key == "prior_boost") c.prior_boost = value.get<double>();
      else if (key == "max_iter") c.max_iter = value.get<int>();
      else if (key == "elbo_tol") c.elbo_tol = value.get<double>();
      else if (key == "gamma_tol") c.gamma_tol = value.get<double>();
      else if (key == "gamma_max_iter") c.gamma_max_iter = value.get<int>();
      else if (key == "workers") c.workers = value.get<int>();
      else if (key == "reducers") c.reducers = value.get<int>();
      else if (key == "shards") c.shards = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "mode") c.mode = value.get<std::string>();
      else if (key == "languages") c.languages = value.get<std::vector<std::string>>();
      else if (key == "serial") c.serial = value.get<bool>();
      else if (key == "init") c.init = value.get<std::string>();
      else if (key == "elog_beta") c.elog_beta = value.get<std::string>();
      else if (key == "combiner") c.combiner = value.get<bool>();
      else throw InputError("config.json: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config.json: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::read(const std::filesystem::path& path) {
  return from_json(text::read_file_text(path));
}

void write_gammas(std::ostream& out, const std::vector<DocGamma>& gammas) {
  for (const auto& g : gammas) {
    for (std::size_t k = 0; k < g.gamma.size(); ++k) {
      out << g.doc_id << '\t' << k << '\t' << text::format_double(g.gamma[k]) << '\n';
    }
  }
}

std::vector<DocGamma> read_gammas(std::istream& in) {
  std::vector<DocGamma> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = text::split(line, '\t');
    if (f.size() != 3) throw InputError("expected d<TAB>k<TAB>value", line_no);
    const auto d = text::parse_int32(f[0], "doc_id", line_no);
    const auto k = text::parse_int32(f[1], "topic", line_no);
    if (out.empty() || out.back().doc_id != d) out.push_back({d, {}});
    if (k != static_cast<std::int32_t>(out.back().gamma.size())) {
      throw InputError("gamma rows must list topics in order", line_no);
    }
    out.back().gamma.push_back(text::parse_double(f[2], "gamma", line_no));
  }
  return out;
}

void write_model(const std::filesystem::path& dir, const TrainResult& result, const RunConfig& config,
                 const VocabMap& vocab, const std::string& prefix) {
  std::filesystem::create_directories(dir);
  mr::publish_broadcast(result.final_bundle(), dir, "final", prefix);
  for (std::size_t l = 0; l < result.languages.size(); ++l) {
    const auto& p = result.topics[l];
    std::string s;
    for (int k = 0; k < p.topics; ++k) {
      for (int v = 0; v < p.vocab_size; ++v) {
        s += std::to_string(k) + '\t' + std::to_string(v) + '\t' + text::format_double(p.lambda_at(v, k)) + '\n';
      }
    }
    text::write_file_atomic(dir / (prefix + "lambda." + result.languages[l] + ".final.tsv"), s);
  }
  std::ostringstream gamma;
  write_gammas(gamma, result.gammas);
  text::write_file_atomic(dir / (prefix + "gamma.final.tsv"), gamma.str());
  std::string elbo;
  for (std::size_t t = 0; t < result.elbo.size(); ++t) {
    elbo += std::to_string(t + 1) + '\t' + text::format_double(result.elbo[t]) + '\n';
  }
  text::write_file_atomic(dir / (prefix + "elbo.tsv"), elbo);
  VocabMap used;
  for (const auto& language : result.languages) used.languages[language] = vocab.at(language);
  std::ostringstream vs;
  write_vocabulary(vs, used);
  text::write_file_atomic(dir / (prefix + "vocab.tsv"), vs.str());
  text::write_file_atomic(dir / (prefix + "config.json"), config.to_json());
}

LoadedModel load_model(const std::filesystem::path& dir, const std::string& prefix) {
  LoadedModel m;
  m.config = RunConfig::read(dir / (prefix + "config.json"));
  m.vocab = read_file(dir / (prefix + "vocab.tsv"), [](std::istream& in) { return read_vocabulary(in); });
  if (m.config.languages.empty()) throw InputError("config.json lists no languages");
  try {
    m.bundle = mr::load_broadcast(dir, 0, m.config.languages, "final", prefix);
    const auto trace = text::read_file_text(dir / (prefix + "elbo.tsv"));
    m.bundle.iteration = static_cast<int>(std::count(trace.begin(), trace.end(), '\n'));
  } catch (const mr::JobError& e) {
    throw InputError(e.what());
  }
  for (std::size_t l = 0; l < m.config.languages.size(); ++l) {
    if (m.vocab.at(m.config.languages[l]).size() != m.bundle.beta[l].vocab_size) {
      throw InputError("vocabulary and beta table sizes differ for '" + m.config.languages[l] + "'");
    }
  }
  return m;
}

}  // namespace mrlda
