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


#include "mrlda/lda_job.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>

#include "mrlda/math_kernels.hpp"
#include "mrlda/vec_kernels.hpp"

namespace mrlda {

namespace {

std::size_t idx(std::int32_t v, int topics) {
  return static_cast<std::size_t>(v) * static_cast<std::size_t>(topics);
}

}  // namespace

// --- parameters --------------------------------------------------------------

EtaPrior EtaPrior::symmetric(double eta, std::span<const std::int32_t> vocab_sizes, int topics) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("eta must be positive");
  EtaPrior prior;
  prior.topics = topics;
  for (auto v : vocab_sizes) {
    prior.values.emplace_back(static_cast<std::size_t>(v) * static_cast<std::size_t>(topics), eta);
  }
  return prior;
}

std::vector<double> EtaPrior::column(std::size_t language, int k) const {
  const auto& table = values.at(language);
  const std::size_t V = table.size() / static_cast<std::size_t>(topics);
  std::vector<double> out(V);
  for (std::size_t v = 0; v < V; ++v) out[v] = table[v * static_cast<std::size_t>(topics) + static_cast<std::size_t>(k)];
  return out;
}

void EtaPrior::validate(std::span<const std::int32_t> vocab_sizes, int expected_topics) const {
  if (topics != expected_topics) throw std::invalid_argument("eta prior has the wrong topic count");
  if (values.size() != vocab_sizes.size()) {
    throw std::invalid_argument("eta prior has the wrong language count");
  }
  for (std::size_t l = 0; l < values.size(); ++l) {
    if (values[l].size() != static_cast<std::size_t>(vocab_sizes[l]) * static_cast<std::size_t>(topics)) {
      throw std::invalid_argument("eta prior table has the wrong size");
    }
    for (double e : values[l]) {
      if (!(e > 0.0) || !std::isfinite(e)) throw std::invalid_argument("eta prior must be positive");
    }
  }
}

mr::BetaTable TopicParams::expected_beta() const {
  mr::BetaTable table;
  table.topics = topics;
  table.vocab_size = vocab_size;
  table.normalizer = normalizer;
  table.expected_beta.resize(lambda.size());
  for (int v = 0; v < vocab_size; ++v) {
    for (int k = 0; k < topics; ++k) {
      table.expected_beta[idx(v, topics) + static_cast<std::size_t>(k)] =
          lambda_at(v, k) / normalizer[static_cast<std::size_t>(k)];
    }
  }
  return table;
}

// --- mapper ------------------------------------------------------------------

MapperTables::MapperTables(const mr::BroadcastBundle& bundle, ExpectedLogBeta mode) {
  bundle.validate();
  topics_ = static_cast<int>(bundle.alpha.size());
  alpha_ = bundle.alpha;
  check_dirichlet_params(alpha_, 1, "alpha");
  const auto K = static_cast<std::size_t>(topics_);
  for (const auto& table : bundle.beta) {
    if (table.topics != topics_) throw mr::JobError("broadcast: topic count mismatch");
    vocab_sizes_.push_back(table.vocab_size);
    std::vector<double> logs(table.expected_beta.size());
    std::vector<double> weights(table.expected_beta.size());
    std::vector<double> psi_nu(K);
    for (std::size_t k = 0; k < K; ++k) psi_nu[k] = digamma(table.normalizer[k]);
    for (std::size_t v = 0; v < static_cast<std::size_t>(table.vocab_size); ++v) {
      double row_max = -INFINITY;
      for (std::size_t k = 0; k < K; ++k) {
        const double mean = table.expected_beta[v * K + k];
        const double e = mode == ExpectedLogBeta::digamma
                             ? digamma(mean * table.normalizer[k]) - psi_nu[k]
                             : std::log(mean);
        logs[v * K + k] = e;
        row_max = std::max(row_max, e);
      }
      for (std::size_t k = 0; k < K; ++k) weights[v * K + k] = std::exp(logs[v * K + k] - row_max);
    }
    log_beta_.push_back(std::move(logs));
    weight_.push_back(std::move(weights));
  }
}

std::span<const double> MapperTables::weight_row(std::size_t language, std::int32_t v) const {
  return std::span<const double>(weight_[language]).subspan(idx(v, topics_), static_cast<std::size_t>(topics_));
}

std::span<const double> MapperTables::log_row(std::size_t language, std::int32_t v) const {
  return std::span<const double>(log_beta_[language]).subspan(idx(v, topics_), static_cast<std::size_t>(topics_));
}

DocumentUpdate e_step_document(const IndexedDocument& doc, const MapperTables& tables,
                               const InferenceOptions& options) {
  const int K = tables.topics();
  const auto Ks = static_cast<std::size_t>(K);
  const std::int64_t tokens = doc.token_count();
  if (tokens <= 0) throw InputError("document " + std::to_string(doc.doc_id) + " has no tokens");
  if (doc.terms.size() > tables.languages()) {
    for (std::size_t l = tables.languages(); l < doc.terms.size(); ++l) {
      if (!doc.terms[l].empty()) {
        throw InputError("document " + std::to_string(doc.doc_id) + " has tokens in language " +
                         std::to_string(l) + " with no broadcast table");
      }
    }
  }
  const std::size_t L = std::min(doc.terms.size(), tables.languages());
  for (std::size_t l = 0; l < L; ++l) {
    for (const auto& tc : doc.terms[l]) {
      if (tc.term < 0 || tc.term >= tables.vocab_size(l)) {
        throw InputError("document " + std::to_string(doc.doc_id) + " term id " +
                         std::to_string(tc.term) + " outside the vocabulary");
      }
      if (tc.count <= 0) throw InputError("non-positive term count");
    }
  }

  DocumentUpdate update;
  auto& var = update.variational;
  const auto& alpha = tables.alpha();
  var.gamma.resize(Ks);
  for (std::size_t k = 0; k < Ks; ++k) var.gamma[k] = alpha[k] + static_cast<double>(tokens) / K;
  var.phi.resize(L);
  for (std::size_t l = 0; l < L; ++l) var.phi[l].assign(doc.terms[l].size() * Ks, 0.0);

  std::vector<double> exp_psi(Ks), sigma(Ks), next(Ks);
  for (int sweep = 1; sweep <= options.gamma_max_iter; ++sweep) {
    double shift = -INFINITY;
    for (std::size_t k = 0; k < Ks; ++k) {
      exp_psi[k] = digamma(var.gamma[k]);
      shift = std::max(shift, exp_psi[k]);
    }
    for (std::size_t k = 0; k < Ks; ++k) exp_psi[k] = std::exp(exp_psi[k] - shift);
    std::fill(sigma.begin(), sigma.end(), 0.0);
    for (std::size_t l = 0; l < L; ++l) {
      const auto& terms = doc.terms[l];
      for (std::size_t t = 0; t < terms.size(); ++t) {
        std::span<double> row(var.phi[l].data() + t * Ks, Ks);
        const double z = simd::product_normalize(tables.weight_row(l, terms[t].term), exp_psi, row);
        if (!(z > 0.0) || !std::isfinite(z)) {
          throw std::runtime_error("phi normalizer is not positive for document " +
                                   std::to_string(doc.doc_id));
        }
        simd::axpy(static_cast<double>(terms[t].count), row, sigma);
      }
    }
    for (std::size_t k = 0; k < Ks; ++k) next[k] = alpha[k] + sigma[k];
    const double change = simd::max_relative_change(var.gamma, next);
    var.gamma.swap(next);
    var.sweeps = sweep;
    if (change < options.gamma_tol) {
      var.converged = true;
      break;
    }
  }

  update.gamma_stats = dirichlet_log_expectation(var.gamma);
  double part = -phi_fn(var.gamma);
  for (std::size_t l = 0; l < L; ++l) {
    const auto& terms = doc.terms[l];
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const double* row = var.phi[l].data() + t * Ks;
      const auto logs = tables.log_row(l, terms[t].term);
      double inner = 0.0;
      for (std::size_t k = 0; k < Ks; ++k) {
        if (row[k] > 0.0) inner += row[k] * (update.gamma_stats[k] + logs[k] - std::log(row[k]));
      }
      part += static_cast<double>(terms[t].count) * inner;
    }
  }
  if (!std::isfinite(part)) {
    throw std::runtime_error("non-finite bound contribution for document " + std::to_string(doc.doc_id));
  }
  update.elbo_part = part;
  return update;
}

void emit_document(const IndexedDocument& doc, const DocumentUpdate& update, int topics,
                   mr::MapContext& ctx) {
  const auto Ks = static_cast<std::size_t>(topics);
  const auto& phi = update.variational.phi;
  for (int k = 0; k < topics; ++k) {
    for (std::size_t l = 0; l < phi.size(); ++l) {
      const auto slot = topic_slot(l, k, topics);
      const auto& terms = doc.terms[l];
      for (std::size_t t = 0; t < terms.size(); ++t) {
        const double value = terms[t].count * phi[l][t * Ks + static_cast<std::size_t>(k)];
        ctx.emit(slot, mr::kSentinel, value);
        ctx.emit(slot, terms[t].term, value);
      }
    }
  }
  for (int k = 0; k < topics; ++k) {
    ctx.emit(mr::kSentinel, k, update.gamma_stats[static_cast<std::size_t>(k)]);
  }
  for (int k = 0; k < topics; ++k) {
    ctx.emit_side(doc.doc_id, k, update.variational.gamma[static_cast<std::size_t>(k)]);
  }
  ctx.emit(mr::kSentinel, mr::kSentinel, update.elbo_part);
}

std::uint64_t expected_emission_count(const IndexedDocument& doc, int topics) {
  const auto K = static_cast<std::uint64_t>(topics);
  return 2 * static_cast<std::uint64_t>(doc.distinct_terms()) * K + K + 1;
}

// --- reducer -----------------------------------------------------------------

TopicAccumulator::TopicAccumulator(std::int32_t slot, std::vector<double> eta_column)
    : slot_(slot), eta_(std::move(eta_column)), sigma_(eta_.size(), 0.0) {}

void TopicAccumulator::add(const mr::EmitKey& key, double sigma) {
  if (key.left != slot_) {
    throw ProtocolError("key " + mr::to_string(key) + " delivered to topic " + std::to_string(slot_));
  }
  if (key.right_is_sentinel()) {
    if (have_marginal_ || last_term_ != mr::kSentinel) {
      throw ProtocolError("normalizer key " + mr::to_string(key) + " out of order");
    }
    marginal_ = sigma;
    have_marginal_ = true;
    return;
  }
  if (!have_marginal_) {
    throw ProtocolError("term key " + mr::to_string(key) + " arrived before its topic normalizer");
  }
  if (key.right <= last_term_ || key.right >= static_cast<std::int32_t>(eta_.size())) {
    throw ProtocolError("term key " + mr::to_string(key) + " out of order or outside the vocabulary");
  }
  sigma_[static_cast<std::size_t>(key.right)] = sigma;
  last_term_ = key.right;
}

TopicReduction TopicAccumulator::finish() const {
  TopicReduction out;
  out.slot = slot_;
  const std::size_t V = eta_.size();
  double nu = marginal_;
  for (double e : eta_) nu += e;
  out.normalizer = nu;
  out.lambda.resize(V);
  out.expected_beta.resize(V);
  const double psi_nu = digamma(nu);
  double entropy = log_gamma(nu);
  double prior = log_dirichlet_normalizer(eta_);
  for (std::size_t v = 0; v < V; ++v) {
    const double lam = eta_[v] + sigma_[v];
    out.lambda[v] = lam;
    out.expected_beta[v] = lam / nu;
    const double elog = digamma(lam) - psi_nu;
    entropy += (lam - 1.0) * elog - log_gamma(lam);
    prior += (eta_[v] - 1.0) * elog;
  }
  out.entropy_term = entropy;
  out.eta_prior_term = prior;
  return out;
}

TopicReduction reduce_topic(std::int32_t slot, std::span<const mr::EmitKV> stream,
                            std::vector<double> eta_column) {
  TopicAccumulator acc(slot, std::move(eta_column));
  std::size_t i = 0;
  while (i < stream.size()) {
    const auto key = stream[i].key;
    double sigma = 0.0;
    for (; i < stream.size() && stream[i].key == key; ++i) sigma += stream[i].value;
    acc.add(key, sigma);
  }
  return acc.finish();
}

PartitionOutput reduce_partition(int partition, mr::KeyGroupReader& reader,
                                 const ReducerSetup& setup) {
  const int K = setup.topics;
  const auto slots = static_cast<std::int32_t>(setup.vocab_sizes.size()) * K;
  auto eta_column = [&](std::int32_t slot) {
    return setup.eta->column(static_cast<std::size_t>(slot / K), slot % K);
  };
  PartitionOutput out;
  std::optional<TopicAccumulator> acc;
  while (reader.next()) {
    const auto& key = reader.key();
    const double sigma = reader.sum();
    if (key.left_is_sentinel()) {
      if (key.right_is_sentinel()) {
        out.document_elbo += sigma;
        out.has_document_elbo = true;
      } else {
        if (key.right < 0 || key.right >= K) throw ProtocolError("bad alpha key " + mr::to_string(key));
        out.alpha_stats.emplace_back(key.right, sigma);
      }
      continue;
    }
    if (key.left < 0 || key.left >= slots || mr::partition(key, setup.num_reducers) != partition) {
      throw ProtocolError("topic key " + mr::to_string(key) + " not owned by this partition");
    }
    if (!acc || acc->slot() != key.left) {
      if (acc) out.topics.push_back(acc->finish());
      acc.emplace(key.left, eta_column(key.left));
    }
    acc->add(key, sigma);
  }
  if (acc) out.topics.push_back(acc->finish());

  std::vector<bool> seen(static_cast<std::size_t>(slots), false);
  for (const auto& t : out.topics) seen[static_cast<std::size_t>(t.slot)] = true;
  for (std::int32_t slot = 0; slot < slots; ++slot) {
    if (!seen[static_cast<std::size_t>(slot)] &&
        mr::partition(mr::EmitKey{slot, mr::kSentinel}, setup.num_reducers) == partition) {
      out.topics.push_back(TopicAccumulator(slot, eta_column(slot)).finish());
    }
  }
  std::sort(out.topics.begin(), out.topics.end(),
            [](const TopicReduction& a, const TopicReduction& b) { return a.slot < b.slot; });
  return out;
}

// --- alpha -------------------------------------------------------------------

double alpha_objective(const AlphaSuffStats& stats, std::span<const double> alpha) {
  double value = static_cast<double>(stats.num_docs) * log_dirichlet_normalizer(alpha);
  for (std::size_t k = 0; k < alpha.size(); ++k) value += (alpha[k] - 1.0) * stats.s[k];
  return value;
}

std::vector<double> alpha_gradient(const AlphaSuffStats& stats, std::span<const double> alpha) {
  check_dirichlet_params(alpha, 1, "alpha");
  double total = 0.0;
  for (double a : alpha) total += a;
  const double C = static_cast<double>(stats.num_docs);
  const double psi_total = digamma(total);
  std::vector<double> g(alpha.size());
  for (std::size_t k = 0; k < alpha.size(); ++k) g[k] = C * (psi_total - digamma(alpha[k])) + stats.s[k];
  return g;
}

std::vector<double> solve_alpha_hessian(std::int64_t num_docs, std::span<const double> alpha,
                                        std::span<const double> g) {
  if (num_docs <= 0) throw std::invalid_argument("alpha update needs at least one document");
  check_dirichlet_params(alpha, 1, "alpha");
  const double C = static_cast<double>(num_docs);
  double total = 0.0;
  for (double a : alpha) total += a;
  const double z = -C * trigamma(total);
  std::vector<double> h(alpha.size());
  double num = 0.0, den = 1.0 / z;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    h[k] = C * trigamma(alpha[k]);
    num += g[k] / h[k];
    den += 1.0 / h[k];
  }
  const double c = num / den;
  std::vector<double> x(alpha.size());
  for (std::size_t k = 0; k < alpha.size(); ++k) x[k] = (g[k] - c) / h[k];
  return x;
}

NewtonResult newton_alpha(const AlphaSuffStats& stats, std::span<const double> alpha0,
                          const NewtonOptions& options) {
  if (stats.num_docs <= 0) throw std::invalid_argument("alpha update needs at least one document");
  if (stats.s.size() != alpha0.size()) throw std::invalid_argument("alpha statistics size mismatch");
  check_dirichlet_params(alpha0, 1, "alpha");
  NewtonResult result;
  result.alpha.assign(alpha0.begin(), alpha0.end());
  const std::size_t K = alpha0.size();
  if (K == 1) {
    result.converged = true;
    return result;
  }
  auto& alpha = result.alpha;
  std::vector<double> candidate(K);
  double objective = alpha_objective(stats, alpha);
  for (int it = 1; it <= options.max_iter; ++it) {
    const auto g = alpha_gradient(stats, alpha);
    const auto step = solve_alpha_hessian(stats.num_docs, alpha, g);
    double scale = 1.0;
    bool accepted = false;
    double next_objective = objective;
    for (int halving = 0; halving <= options.max_halvings; ++halving, scale *= 0.5) {
      bool positive = true;
      for (std::size_t k = 0; k < K; ++k) {
        candidate[k] = alpha[k] + scale * step[k];
        if (!(candidate[k] > 0.0) || !std::isfinite(candidate[k])) positive = false;
      }
      if (!positive) continue;
      next_objective = alpha_objective(stats, candidate);
      if (next_objective >= objective - 1e-12 * std::abs(objective)) {
        accepted = true;
        break;
      }
    }
    result.iterations = it;
    if (!accepted) {
      result.step_failed = true;
      break;
    }
    double change = 0.0;
    for (std::size_t k = 0; k < K; ++k) change = std::max(change, std::abs(candidate[k] - alpha[k]) / alpha[k]);
    alpha.swap(candidate);
    objective = next_objective;
    if (change < options.tol) {
      result.converged = true;
      break;
    }
  }
  double gn = 0.0;
  for (double v : alpha_gradient(stats, alpha)) gn = std::max(gn, std::abs(v));
  result.gradient_norm = gn;
  return result;
}

double assemble_elbo(const ElboLedger& ledger) {
  if (!ledger.alpha_prior || !ledger.document_terms || !ledger.eta_prior || !ledger.topic_entropy) {
    throw std::logic_error("bound assembly is missing a component");
  }
  return *ledger.alpha_prior + *ledger.document_terms + *ledger.eta_prior - *ledger.topic_entropy;
}

// --- driver ------------------------------------------------------------------

void TrainConfig::validate() const {
  if (topics < 1) throw std::invalid_argument("topics must be >= 1");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("eta must be positive");
  if (!std::isfinite(alpha_init)) throw std::invalid_argument("alpha_init must be finite");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(elbo_tol > 0.0)) throw std::invalid_argument("elbo_tol must be positive");
  if (!(inference.gamma_tol > 0.0)) throw std::invalid_argument("gamma_tol must be positive");
  if (inference.gamma_max_iter < 1) throw std::invalid_argument("gamma_max_iter must be >= 1");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (reducers < 1) throw std::invalid_argument("reducers must be >= 1");
  if (shards < 1) throw std::invalid_argument("shards must be >= 1");
}

EtaPrior TrainConfig::resolve_eta(std::span<const std::int32_t> vocab_sizes) const {
  if (eta_prior) {
    eta_prior->validate(vocab_sizes, topics);
    return *eta_prior;
  }
  return EtaPrior::symmetric(eta, vocab_sizes, topics);
}

std::vector<TopicParams> initial_topic_params(const TrainingCorpus& corpus, const EtaPrior& eta,
                                              int topics, LambdaInit init, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto Ks = static_cast<std::size_t>(topics);
  std::vector<TopicParams> params;
  for (std::size_t l = 0; l < corpus.languages.size(); ++l) {
    TopicParams p;
    p.topics = topics;
    p.vocab_size = corpus.vocab_sizes[l];
    p.lambda = eta.values[l];
    if (init == LambdaInit::random) {
      for (auto& lam : p.lambda) lam *= 1.0 + static_cast<double>(rng() >> 11) * 0x1p-53;
    }
    params.push_back(std::move(p));
  }
  if (init == LambdaInit::documents) {
    const std::size_t C = corpus.documents.size();
    if (C == 0) throw InputError("corpus has no documents");
    const std::size_t per_topic = (C + Ks - 1) / Ks;
    for (std::size_t k = 0; k < Ks; ++k) {
      for (std::size_t n = 0; n < per_topic; ++n) {
        const auto& doc = corpus.documents[static_cast<std::size_t>(rng() % C)];
        for (std::size_t l = 0; l < doc.terms.size() && l < params.size(); ++l) {
          for (const auto& tc : doc.terms[l]) params[l].lambda[idx(tc.term, topics) + k] += tc.count;
        }
      }
    }
  }
  for (auto& p : params) {
    p.normalizer.assign(Ks, 0.0);
    for (int v = 0; v < p.vocab_size; ++v) {
      for (std::size_t k = 0; k < Ks; ++k) p.normalizer[k] += p.lambda[idx(v, topics) + k];
    }
  }
  return params;
}

mr::BroadcastBundle make_bundle(int iteration, const std::vector<std::string>& languages,
                                const std::vector<TopicParams>& topics, std::vector<double> alpha) {
  mr::BroadcastBundle bundle;
  bundle.iteration = iteration;
  bundle.languages = languages;
  for (const auto& t : topics) bundle.beta.push_back(t.expected_beta());
  bundle.alpha = std::move(alpha);
  return bundle;
}

mr::BroadcastBundle TrainResult::final_bundle() const {
  return make_bundle(iterations, languages, topics, alpha);
}

namespace {

struct MapperInput {
  const MapperTables* tables;
  const InferenceOptions* options;
};

}  // namespace

TrainResult train(const TrainingCorpus& corpus, const TrainConfig& config) {
  config.validate();
  if (corpus.documents.empty()) throw InputError("corpus has no documents");
  if (corpus.languages.empty() || corpus.languages.size() != corpus.vocab_sizes.size()) {
    throw InputError("corpus language list is inconsistent");
  }
  const int K = config.topics;
  const auto Ks = static_cast<std::size_t>(K);
  const EtaPrior eta = config.resolve_eta(corpus.vocab_sizes);

  TrainResult result;
  result.languages = corpus.languages;
  result.topics = initial_topic_params(corpus, eta, K, config.init, config.seed);
  result.alpha.assign(Ks, config.initial_alpha());

  std::vector<std::vector<IndexedDocument>> shards(static_cast<std::size_t>(config.shards));
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
    shards[i % shards.size()].push_back(corpus.documents[i]);
  }

  auto bundle = make_bundle(0, corpus.languages, result.topics, result.alpha);
  if (!config.checkpoint_dir.empty()) {
    std::filesystem::create_directories(config.checkpoint_dir);
    mr::publish_broadcast(bundle, config.checkpoint_dir);
    bundle = mr::load_broadcast(config.checkpoint_dir, 0, corpus.languages);
  }

  ReducerSetup setup{K, config.reducers, corpus.vocab_sizes, &eta};
  const mr::ReduceFn<PartitionOutput> reduce_fn = [&setup](int p, mr::KeyGroupReader& reader) {
    return reduce_partition(p, reader, setup);
  };
  const mr::MapFn<IndexedDocument, MapperInput> map_fn =
      [K](const IndexedDocument& doc, const MapperInput& in, mr::MapContext& ctx) {
        emit_document(doc, e_step_document(doc, *in.tables, *in.options), K, ctx);
      };
  const mr::CombineFn combine_fn = [](std::vector<mr::EmitKV> pairs) { return mr::combine(std::move(pairs)); };
  mr::JobOptions job_options{config.reducers, config.workers, config.use_combiner, {}};

  int declines = 0;
  for (int t = 1; t <= config.max_iterations; ++t) {
    const MapperTables tables(bundle, config.inference.expected_log_beta);
    const MapperInput input{&tables, &config.inference};
    auto job = mr::run_job<IndexedDocument, MapperInput, PartitionOutput>(
        map_fn, combine_fn, reduce_fn, std::span<const std::vector<IndexedDocument>>(shards), input,
        job_options);

    ElboLedger ledger;
    AlphaSuffStats stats;
    stats.num_docs = static_cast<std::int64_t>(corpus.documents.size());
    stats.s.assign(Ks, 0.0);
    std::vector<bool> have_stat(Ks, false);
    std::vector<const TopicReduction*> by_slot(corpus.languages.size() * Ks, nullptr);
    for (const auto& part : job.reducer_outputs) {
      if (part.has_document_elbo) ledger.document_terms = ledger.document_terms.value_or(0.0) + part.document_elbo;
      for (const auto& [k, s] : part.alpha_stats) {
        stats.s[static_cast<std::size_t>(k)] += s;
        have_stat[static_cast<std::size_t>(k)] = true;
      }
      for (const auto& topic : part.topics) by_slot[static_cast<std::size_t>(topic.slot)] = &topic;
    }
    if (!ledger.document_terms) throw mr::JobError("no document bound contributions reached the reducers");
    if (std::find(have_stat.begin(), have_stat.end(), false) != have_stat.end()) {
      throw mr::JobError("missing alpha statistics");
    }
    double entropy = 0.0, prior = 0.0;
    for (std::size_t slot = 0; slot < by_slot.size(); ++slot) {
      const auto* topic = by_slot[slot];
      if (!topic) throw mr::JobError("topic slot " + std::to_string(slot) + " missing from reducer output");
      entropy += topic->entropy_term;
      prior += topic->eta_prior_term;
      auto& params = result.topics[slot / Ks];
      const std::size_t k = slot % Ks;
      params.normalizer[k] = topic->normalizer;
      for (std::size_t v = 0; v < topic->lambda.size(); ++v) params.lambda[v * Ks + k] = topic->lambda[v];
    }
    ledger.topic_entropy = entropy;
    ledger.eta_prior = prior;
    ledger.alpha_prior = alpha_objective(stats, result.alpha);
    const double elbo = assemble_elbo(ledger);
    if (!std::isfinite(elbo)) throw mr::JobError("bound is not finite at iteration " + std::to_string(t));

    result.gammas.clear();
    for (const auto& rec : job.side) {
      if (result.gammas.empty() || result.gammas.back().doc_id != rec.key.left) {
        result.gammas.push_back({rec.key.left, {}});
      }
      result.gammas.back().gamma.push_back(rec.value);
    }

    const auto newton = newton_alpha(stats, result.alpha, config.newton);
    if (newton.step_failed) {
      std::cerr << "warning: alpha update found no improving positive step at iteration " << t << '\n';
    }
    result.alpha = newton.alpha;
    bundle = make_bundle(t, corpus.languages, result.topics, result.alpha);
    if (!config.checkpoint_dir.empty()) {
      mr::publish_broadcast(bundle, config.checkpoint_dir);
      mr::write_metrics(config.checkpoint_dir, t, job.metrics);
      bundle = mr::load_broadcast(config.checkpoint_dir, t, corpus.languages);
    }

    result.elbo.push_back(elbo);
    result.ledgers.push_back(ledger);
    result.metrics.push_back(job.metrics);
    result.iterations = t;
    if (t >= 2) {
      const double prev = result.elbo[result.elbo.size() - 2];
      const double rel = std::abs(elbo - prev) / std::abs(prev);
      if (elbo < prev - 1e-8 * std::abs(prev)) {
        if (++declines >= 3) {
          throw ConvergenceError("bound decreased for three consecutive iterations", result.elbo);
        }
      } else {
        declines = 0;
      }
      if (rel < config.elbo_tol) {
        result.converged = true;
        break;
      }
    }
  }
  return result;
}

std::vector<double> infer_document(const IndexedDocument& doc, const mr::BroadcastBundle& model,
                                   const InferenceOptions& options) {
  const MapperTables tables(model, options.expected_log_beta);
  return e_step_document(doc, tables, options).variational.gamma;
}

}  // namespace mrlda
