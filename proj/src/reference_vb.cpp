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


#include "mrlda/reference_vb.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mrlda/math_kernels.hpp"

namespace mrlda {

namespace {

struct LogBetaTables {
  std::vector<std::vector<double>> log_beta;  // [l][v * K + k]
  std::vector<std::vector<double>> weight;    // exp(log_beta - row max)
};

LogBetaTables log_beta_tables(const std::vector<TopicParams>& topics, ExpectedLogBeta mode) {
  LogBetaTables out;
  for (const auto& p : topics) {
    const int K = p.topics;
    std::vector<double> nu(static_cast<std::size_t>(K), 0.0);
    for (int v = 0; v < p.vocab_size; ++v) {
      for (int k = 0; k < K; ++k) nu[static_cast<std::size_t>(k)] += p.lambda_at(v, k);
    }
    std::vector<double> logs(p.lambda.size()), weights(p.lambda.size());
    for (int v = 0; v < p.vocab_size; ++v) {
      double row_max = -INFINITY;
      for (int k = 0; k < K; ++k) {
        const double lam = p.lambda_at(v, k);
        const double n = nu[static_cast<std::size_t>(k)];
        const double e = mode == ExpectedLogBeta::digamma ? digamma(lam) - digamma(n) : std::log(lam / n);
        logs[static_cast<std::size_t>(v * K + k)] = e;
        row_max = std::max(row_max, e);
      }
      for (int k = 0; k < K; ++k) {
        const auto i = static_cast<std::size_t>(v * K + k);
        weights[i] = std::exp(logs[i] - row_max);
      }
    }
    out.log_beta.push_back(std::move(logs));
    out.weight.push_back(std::move(weights));
  }
  return out;
}

struct SerialDocResult {
  std::vector<double> gamma;
  std::vector<std::vector<double>> phi;
  double bound = 0.0;
};

SerialDocResult serial_e_step(const IndexedDocument& doc, const LogBetaTables& tables,
                              const std::vector<double>& alpha, const InferenceOptions& options) {
  const std::size_t K = alpha.size();
  const std::size_t L = doc.terms.size();
  if (L > tables.weight.size()) throw InputError("document has a language with no topic table");
  double n_tokens = 0.0;
  for (const auto& part : doc.terms) {
    for (const auto& tc : part) n_tokens += tc.count;
  }
  if (n_tokens <= 0.0) throw InputError("document " + std::to_string(doc.doc_id) + " has no tokens");

  SerialDocResult r;
  r.gamma.resize(K);
  for (std::size_t k = 0; k < K; ++k) r.gamma[k] = alpha[k] + n_tokens / static_cast<double>(K);
  r.phi.resize(L);
  for (std::size_t l = 0; l < L; ++l) r.phi[l].assign(doc.terms[l].size() * K, 0.0);

  std::vector<double> e(K), next(K);
  for (int sweep = 0; sweep < options.gamma_max_iter; ++sweep) {
    double shift = -INFINITY;
    for (std::size_t k = 0; k < K; ++k) shift = std::max(shift, digamma(r.gamma[k]));
    for (std::size_t k = 0; k < K; ++k) e[k] = std::exp(digamma(r.gamma[k]) - shift);
    for (std::size_t k = 0; k < K; ++k) next[k] = alpha[k];
    for (std::size_t l = 0; l < L; ++l) {
      for (std::size_t t = 0; t < doc.terms[l].size(); ++t) {
        const auto v = static_cast<std::size_t>(doc.terms[l][t].term);
        double z = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          r.phi[l][t * K + k] = tables.weight[l][v * K + k] * e[k];
          z += r.phi[l][t * K + k];
        }
        if (!(z > 0.0)) throw std::runtime_error("phi normalizer is not positive");
        for (std::size_t k = 0; k < K; ++k) {
          r.phi[l][t * K + k] /= z;
          next[k] += doc.terms[l][t].count * r.phi[l][t * K + k];
        }
      }
    }
    double change = 0.0;
    for (std::size_t k = 0; k < K; ++k) change = std::max(change, std::abs(next[k] - r.gamma[k]) / r.gamma[k]);
    r.gamma = next;
    if (change < options.gamma_tol) break;
  }

  double gamma_total = 0.0;
  for (double g : r.gamma) gamma_total += g;
  std::vector<double> elog_theta(K);
  for (std::size_t k = 0; k < K; ++k) elog_theta[k] = digamma(r.gamma[k]) - digamma(gamma_total);
  double bound = -phi_fn(r.gamma);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t t = 0; t < doc.terms[l].size(); ++t) {
      const auto v = static_cast<std::size_t>(doc.terms[l][t].term);
      double inner = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const double p = r.phi[l][t * K + k];
        if (p > 0.0) inner += p * (elog_theta[k] + tables.log_beta[l][v * K + k] - std::log(p));
      }
      bound += doc.terms[l][t].count * inner;
    }
  }
  r.bound = bound;
  return r;
}

}  // namespace

TrainResult serial_train(const TrainingCorpus& corpus, const TrainConfig& config) {
  config.validate();
  if (corpus.documents.empty()) throw InputError("corpus has no documents");
  const int K = config.topics;
  const auto Ks = static_cast<std::size_t>(K);
  const std::size_t L = corpus.languages.size();
  const EtaPrior eta = config.resolve_eta(corpus.vocab_sizes);

  TrainResult result;
  result.languages = corpus.languages;
  result.topics = initial_topic_params(corpus, eta, K, config.init, config.seed);
  result.alpha.assign(Ks, config.initial_alpha());
  const double C = static_cast<double>(corpus.documents.size());

  int declines = 0;
  for (int t = 1; t <= config.max_iterations; ++t) {
    const auto tables = log_beta_tables(result.topics, config.inference.expected_log_beta);

    std::vector<std::vector<double>> counts(L);
    for (std::size_t l = 0; l < L; ++l) counts[l].assign(result.topics[l].lambda.size(), 0.0);
    AlphaSuffStats stats;
    stats.num_docs = static_cast<std::int64_t>(corpus.documents.size());
    stats.s.assign(Ks, 0.0);
    double doc_bound = 0.0;
    result.gammas.clear();
    for (const auto& doc : corpus.documents) {
      const auto r = serial_e_step(doc, tables, result.alpha, config.inference);
      double total = 0.0;
      for (double g : r.gamma) total += g;
      for (std::size_t k = 0; k < Ks; ++k) stats.s[k] += digamma(r.gamma[k]) - digamma(total);
      for (std::size_t l = 0; l < doc.terms.size(); ++l) {
        for (std::size_t i = 0; i < doc.terms[l].size(); ++i) {
          const auto v = static_cast<std::size_t>(doc.terms[l][i].term);
          for (std::size_t k = 0; k < Ks; ++k) counts[l][v * Ks + k] += doc.terms[l][i].count * r.phi[l][i * Ks + k];
        }
      }
      doc_bound += r.bound;
      result.gammas.push_back({doc.doc_id, r.gamma});
    }

    double entropy = 0.0, prior = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      auto& p = result.topics[l];
      const auto V = static_cast<std::size_t>(p.vocab_size);
      for (std::size_t k = 0; k < Ks; ++k) {
        std::vector<double> lam(V), eta_col(V);
        double nu = 0.0;
        for (std::size_t v = 0; v < V; ++v) {
          eta_col[v] = eta.values[l][v * Ks + k];
          lam[v] = eta_col[v] + counts[l][v * Ks + k];
          p.lambda[v * Ks + k] = lam[v];
          nu += lam[v];
        }
        p.normalizer[k] = nu;
        entropy += phi_fn(lam);
        double term = log_dirichlet_normalizer(eta_col);
        for (std::size_t v = 0; v < V; ++v) term += (eta_col[v] - 1.0) * (digamma(lam[v]) - digamma(nu));
        prior += term;
      }
    }
    double alpha_term = C * log_dirichlet_normalizer(result.alpha);
    for (std::size_t k = 0; k < Ks; ++k) alpha_term += (result.alpha[k] - 1.0) * stats.s[k];
    const double elbo = alpha_term + doc_bound + prior - entropy;
    if (!std::isfinite(elbo)) throw std::runtime_error("bound is not finite");

    ElboLedger ledger;
    ledger.document_terms = doc_bound;
    ledger.topic_entropy = entropy;
    ledger.eta_prior = prior;
    ledger.alpha_prior = alpha_term;

    result.alpha = newton_alpha(stats, result.alpha, config.newton).alpha;
    result.elbo.push_back(elbo);
    result.ledgers.push_back(ledger);
    result.iterations = t;
    if (t >= 2) {
      const double prev = result.elbo[result.elbo.size() - 2];
      if (elbo < prev - 1e-8 * std::abs(prev)) {
        if (++declines >= 3) throw ConvergenceError("bound decreased for three consecutive iterations", result.elbo);
      } else {
        declines = 0;
      }
      if (std::abs(elbo - prev) / std::abs(prev) < config.elbo_tol) {
        result.converged = true;
        break;
      }
    }
  }
  return result;
}

std::vector<double> serial_infer(const IndexedDocument& doc, const std::vector<TopicParams>& topics,
                                 const std::vector<double>& alpha, const InferenceOptions& options) {
  const auto tables = log_beta_tables(topics, options.expected_log_beta);
  return serial_e_step(doc, tables, alpha, options).gamma;
}

}  // namespace mrlda
