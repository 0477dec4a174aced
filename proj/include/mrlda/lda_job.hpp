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

// Variational EM for LDA as a sequence of MapReduce jobs.
//
// Mapper: per-document phi/gamma coordinate ascent against the broadcast
// topic table, emitting <k,^> and <k,v> expected counts, <^,k> gamma
// statistics for the alpha update, gamma to a side file, and <^,^> the
// document's share of the bound.
//
// Reducer: one pass per topic. The <k,^> group arrives first and yields the
// normalizer; each <k,v> group then yields lambda_{v,k} and the normalized
// expected topic-word value.
//
// Driver: assembles the bound, runs Newton-Raphson on alpha and publishes
// the next broadcast.
//
// Topic keys carry a language slot, left = language * K + k, so the
// polylingual model shares the same job.

#ifndef MRLDA_LDA_JOB_HPP
#define MRLDA_LDA_JOB_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrlda/corpus.hpp"
#include "mrlda/mr_runtime.hpp"

namespace mrlda {

/// How E_q[log beta_{v,k}] is evaluated in the phi update and the bound.
///   digamma:  psi(lambda_{v,k}) - psi(sum_w lambda_{w,k})
///   log_mean: log(lambda_{v,k} / sum_w lambda_{w,k})
/// Only digamma makes every update a coordinate ascent step on the bound.
enum class ExpectedLogBeta { digamma, log_mean };

enum class LambdaInit { random, documents };

struct InferenceOptions {
  double gamma_tol = 1e-5;  // L-infinity relative change in gamma
  int gamma_max_iter = 100;
  ExpectedLogBeta expected_log_beta = ExpectedLogBeta::digamma;
};

struct NewtonOptions {
  double tol = 1e-6;  // max_k |delta alpha_k| / alpha_k
  int max_iter = 1000;
  int max_halvings = 32;
};

/// Topic-word prior, one V x K table per language stored [v * K + k].
struct EtaPrior {
  int topics = 0;
  std::vector<std::vector<double>> values;

  static EtaPrior symmetric(double eta, std::span<const std::int32_t> vocab_sizes, int topics);
  double at(std::size_t language, int v, int k) const {
    return values[language][static_cast<std::size_t>(v) * static_cast<std::size_t>(topics) +
                            static_cast<std::size_t>(k)];
  }
  /// eta_{*,k} for one language.
  std::vector<double> column(std::size_t language, int k) const;
  void validate(std::span<const std::int32_t> vocab_sizes, int topics) const;
};

/// lambda for one language.
struct TopicParams {
  int topics = 0;
  int vocab_size = 0;
  std::vector<double> lambda;      // [v * K + k]
  std::vector<double> normalizer;  // [k]

  double lambda_at(int v, int k) const {
    return lambda[static_cast<std::size_t>(v) * static_cast<std::size_t>(topics) +
                  static_cast<std::size_t>(k)];
  }
  /// lambda / normalizer.
  mr::BetaTable expected_beta() const;
};

struct DocVariational {
  std::vector<double> gamma;
  std::vector<std::vector<double>> phi;  // [language][t * K + k], t indexes the doc's terms
  int sweeps = 0;
  bool converged = false;
};

struct DocumentUpdate {
  DocVariational variational;
  std::vector<double> gamma_stats;  // psi(gamma_k) - psi(sum gamma)
  double elbo_part = 0.0;           // L_d(gamma,phi) + L_d(phi) - Phi(gamma)
};

/// Per-job lookup tables derived once from the broadcast and shared
/// read-only by every map task.
class MapperTables {
 public:
  MapperTables(const mr::BroadcastBundle& bundle, ExpectedLogBeta mode);

  int topics() const { return topics_; }
  std::size_t languages() const { return log_beta_.size(); }
  int vocab_size(std::size_t language) const { return vocab_sizes_[language]; }
  const std::vector<double>& alpha() const { return alpha_; }
  /// exp(E[log beta_{v,*}]) up to a per-row constant; drives the phi update.
  std::span<const double> weight_row(std::size_t language, std::int32_t v) const;
  /// E[log beta_{v,*}].
  std::span<const double> log_row(std::size_t language, std::int32_t v) const;

 private:
  int topics_ = 0;
  std::vector<int> vocab_sizes_;
  std::vector<double> alpha_;
  std::vector<std::vector<double>> weight_;
  std::vector<std::vector<double>> log_beta_;
};

/// Alternates phi and gamma updates until gamma's relative change drops
/// below the tolerance. Gamma starts at alpha_k + N_d / K.
DocumentUpdate e_step_document(const IndexedDocument& doc, const MapperTables& tables,
                               const InferenceOptions& options);

/// Emissions in mapper order: for each topic k, <k,^> and <k,v> per term,
/// then <^,k>, then gamma_k to the side channel; finally one <^,^>.
void emit_document(const IndexedDocument& doc, const DocumentUpdate& update, int topics,
                   mr::MapContext& ctx);

/// 2 * T_d * K + K + 1, with T_d counted over all languages.
std::uint64_t expected_emission_count(const IndexedDocument& doc, int topics);

inline std::int32_t topic_slot(std::size_t language, int k, int topics) {
  return static_cast<std::int32_t>(language) * topics + k;
}

// --- reducer -----------------------------------------------------------------

/// The shuffle delivered a term key before its topic's normalizer, or keys
/// out of order.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TopicReduction {
  std::int32_t slot = 0;
  std::vector<double> lambda;         // [v]
  double normalizer = 0.0;            // sum of <k,^> values + sum_v eta_{v,k}
  std::vector<double> expected_beta;  // lambda / normalizer
  double entropy_term = 0.0;          // Phi(lambda_{*,k})
  double eta_prior_term = 0.0;        // E_q[log p(beta_k | eta_k)]
};

/// Streaming reduction of one topic. Feed the topic's key groups in sort
/// order; unobserved terms get lambda = eta.
class TopicAccumulator {
 public:
  TopicAccumulator(std::int32_t slot, std::vector<double> eta_column);
  void add(const mr::EmitKey& key, double sigma);
  TopicReduction finish() const;
  std::int32_t slot() const { return slot_; }

 private:
  std::int32_t slot_;
  std::vector<double> eta_;
  std::vector<double> sigma_;
  double marginal_ = 0.0;
  bool have_marginal_ = false;
  std::int32_t last_term_ = mr::kSentinel;
};

/// Reduces a complete, sorted stream for one topic slot.
TopicReduction reduce_topic(std::int32_t slot, std::span<const mr::EmitKV> stream,
                            std::vector<double> eta_column);

struct PartitionOutput {
  std::vector<TopicReduction> topics;                   // ascending slot
  std::vector<std::pair<std::int32_t, double>> alpha_stats;  // <^,k> sums
  double document_elbo = 0.0;                           // <^,^> sum
  bool has_document_elbo = false;
};

struct ReducerSetup {
  int topics = 0;
  int num_reducers = 1;
  std::vector<std::int32_t> vocab_sizes;
  const EtaPrior* eta = nullptr;
};

/// Reduces one partition and also emits every owned topic slot that
/// received no keys.
PartitionOutput reduce_partition(int partition, mr::KeyGroupReader& reader,
                                 const ReducerSetup& setup);

// --- driver ------------------------------------------------------------------

struct AlphaSuffStats {
  std::vector<double> s;  // sum_d psi(gamma_{d,k}) - psi(sum_l gamma_{d,l})
  std::int64_t num_docs = 0;
};

/// C (log Gamma(sum alpha) - sum log Gamma(alpha_k)) + sum_k (alpha_k - 1) s_k:
/// every alpha-dependent term of the bound.
double alpha_objective(const AlphaSuffStats& stats, std::span<const double> alpha);

/// g_k = C (psi(sum alpha) - psi(alpha_k)) + s_k.
std::vector<double> alpha_gradient(const AlphaSuffStats& stats, std::span<const double> alpha);

/// Solves H x = g for H(k,l) = delta(k,l) C psi'(alpha_k) - C psi'(sum alpha)
/// with the diagonal-plus-rank-one identity. H is the negated Hessian of
/// alpha_objective, so the ascent step is alpha + x.
std::vector<double> solve_alpha_hessian(std::int64_t num_docs, std::span<const double> alpha,
                                        std::span<const double> g);

struct NewtonResult {
  std::vector<double> alpha;
  int iterations = 0;
  bool converged = false;
  bool step_failed = false;  // no positive step within max_halvings
  double gradient_norm = 0.0;
};

NewtonResult newton_alpha(const AlphaSuffStats& stats, std::span<const double> alpha0,
                          const NewtonOptions& options = {});

struct ElboLedger {
  std::optional<double> document_terms;  // mappers: sum_d L_d(gamma,phi) + L_d(phi) - Phi(gamma_d)
  std::optional<double> topic_entropy;   // reducers: sum_k Phi(lambda_{*,k})
  std::optional<double> eta_prior;       // reducers: sum_k E_q[log p(beta_k | eta_k)]
  std::optional<double> alpha_prior;     // driver: alpha_objective at the E-step's alpha
};

/// alpha_prior + document_terms + eta_prior - topic_entropy. Throws if any
/// part is missing.
double assemble_elbo(const ElboLedger& ledger);

struct TrainConfig {
  int topics = 0;
  double alpha_init = 0.0;  // <= 0: 1/K
  double eta = 0.01;
  std::optional<EtaPrior> eta_prior;  // overrides eta when set
  int max_iterations = 50;
  double elbo_tol = 1e-4;
  InferenceOptions inference;
  NewtonOptions newton;
  int workers = 1;
  int reducers = 1;
  int shards = 8;
  std::uint64_t seed = 0;
  LambdaInit init = LambdaInit::random;
  bool use_combiner = true;
  /// When set, every iteration's broadcast and metrics are published here
  /// and mappers read the broadcast back from disk.
  std::filesystem::path checkpoint_dir;

  void validate() const;
  double initial_alpha() const { return alpha_init > 0.0 ? alpha_init : 1.0 / topics; }
  EtaPrior resolve_eta(std::span<const std::int32_t> vocab_sizes) const;
};

struct DocGamma {
  std::int32_t doc_id = 0;
  std::vector<double> gamma;
  bool operator==(const DocGamma&) const = default;
};

struct TrainResult {
  std::vector<std::string> languages;
  std::vector<TopicParams> topics;  // per language
  std::vector<double> alpha;
  std::vector<DocGamma> gammas;     // ascending doc_id
  std::vector<double> elbo;         // one entry per iteration
  std::vector<ElboLedger> ledgers;
  std::vector<mr::JobMetrics> metrics;
  int iterations = 0;
  bool converged = false;

  mr::BroadcastBundle final_bundle() const;
};

/// The bound failed to improve for three consecutive iterations.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

/// Initial lambda per language: eta * (1 + u) with u ~ U[0,1), or
/// eta plus the counts of ceil(C/K) random documents per topic.
std::vector<TopicParams> initial_topic_params(const TrainingCorpus& corpus, const EtaPrior& eta,
                                              int topics, LambdaInit init, std::uint64_t seed);

mr::BroadcastBundle make_bundle(int iteration, const std::vector<std::string>& languages,
                                const std::vector<TopicParams>& topics,
                                std::vector<double> alpha);

TrainResult train(const TrainingCorpus& corpus, const TrainConfig& config);

/// Gamma for a held-out document against a frozen model.
std::vector<double> infer_document(const IndexedDocument& doc, const mr::BroadcastBundle& model,
                                   const InferenceOptions& options);

}  // namespace mrlda

#endif  // MRLDA_LDA_JOB_HPP
