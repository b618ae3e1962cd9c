#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "alqa/backend.hpp"
#include "alqa/dataset.hpp"
#include "alqa/geometry.hpp"

namespace alqa {

enum class Strategy { confidence, clustering, diversity, pal, random };

std::string_view to_string(Strategy s);
/// Throws ArgumentError for unknown names.
Strategy parse_strategy(std::string_view name);

struct AcquisitionConfig {
  int knn_k = 5;
  int kmeans_k = 10;
  int kmeans_max_iters = 100;
  int max_span_tokens = kDefaultMaxSpanTokens;
};

/// Arguments of one acquisition call. Ids refer to instances of the pool
/// dataset passed alongside.
struct AcquisitionRequest {
  std::vector<std::string> labeled_ids;
  std::vector<std::string> unlabeled_ids;
  std::size_t batch_size = 1;
  ModelHandle model;
  std::uint64_t rng_seed = 0;
};

/// Throws ArgumentError unless b >= 1, b <= |unlabeled|, the id sets are
/// disjoint and every id is in `pool`.
void validate_request(const AcquisitionRequest& req, const Dataset& pool);

struct ConfidenceDetail {
  Eigen::Index token_start = 0;
  Eigen::Index token_end = 0;
  std::string answer;
};

struct ClusterDetail {
  int cluster = 0;
  std::size_t cluster_size = 0;
};

struct DiversityDetail {
  int nearest_centroid = 0;
};

struct PalDetail {
  bool skipped = false;
  std::string distractor;
  std::string distractor_source_id;
  double kl_start = 0.0;
  double kl_end = 0.0;
};

using CandidateDetail =
    std::variant<std::monostate, ConfidenceDetail, ClusterDetail, DiversityDetail, PalDetail>;

struct ScoredCandidate {
  std::string id;
  double score = 0.0;
  CandidateDetail detail;
};

/// Context of `original_id` with the distractor appended after one space.
struct PerturbedInstance {
  std::string original_id;
  std::string perturbed_context;
  std::string distractor;
  std::string distractor_source_id;
};

/// Picks distractor sentences for candidates against a fixed labeled set.
/// Labeled context embeddings and per-neighbor sentence embeddings are
/// computed once and reused across candidates.
class PerturbationBuilder {
 public:
  PerturbationBuilder(Backend& backend, ModelHandle model, std::span<const QAInstance> labeled,
                      int k);

  /// Nearest labeled contexts (exact-context matches excluded), split into
  /// sentences; the sentence closest to the candidate's context embedding
  /// becomes the distractor. Ties go to the earlier neighbor, then the
  /// earlier sentence. nullopt means the candidate must be skipped.
  std::optional<PerturbedInstance> build(const QAInstance& u);

 private:
  struct Sentence {
    std::string text;
    Embedding embedding;
  };
  const std::vector<Sentence>& sentences_of(const std::string& id);

  Backend& backend_;
  ModelHandle model_;
  int k_;
  std::vector<IndexedPoint<double>> corpus_;
  std::unordered_map<std::string, std::string> contexts_;
  std::unordered_map<std::string, std::vector<Sentence>> sentence_cache_;
};

std::optional<PerturbedInstance> build_perturbation(const QAInstance& u,
                                                    std::span<const QAInstance> labeled,
                                                    Backend& backend, const ModelHandle& model,
                                                    int k);

/// Robustness score: minus the summed symmetrized KL between the start (and
/// end) distributions before and after the perturbation, both restricted to
/// the original context's tokens. A skipped candidate scores +infinity.
ScoredCandidate pal_score(const QAInstance& u, Backend& backend, const ModelHandle& model,
                          PerturbationBuilder& builder);

/// Robustness scores given both predictions; exposed for inspection.
PalDetail compare_predictions(const SpanDistribution& original,
                              const SpanDistribution& perturbed, std::size_t original_length);

std::vector<ScoredCandidate> select_least_confidence(Backend& backend, const Dataset& pool,
                                                     const AcquisitionRequest& req,
                                                     const AcquisitionConfig& cfg);
std::vector<ScoredCandidate> select_clustering(Backend& backend, const Dataset& pool,
                                               const AcquisitionRequest& req,
                                               const AcquisitionConfig& cfg);
std::vector<ScoredCandidate> select_diversity(Backend& backend, const Dataset& pool,
                                              const AcquisitionRequest& req,
                                              const AcquisitionConfig& cfg);
/// Throws PalStarved if every candidate was skipped.
std::vector<ScoredCandidate> select_pal(Backend& backend, const Dataset& pool,
                                        const AcquisitionRequest& req,
                                        const AcquisitionConfig& cfg);
/// Uniform baseline; not one of the studied strategies.
std::vector<ScoredCandidate> select_random(const AcquisitionRequest& req);

std::vector<ScoredCandidate> select(Strategy s, Backend& backend, const Dataset& pool,
                                    const AcquisitionRequest& req, const AcquisitionConfig& cfg);

/// Text embedded for the clustering and diversity strategies.
std::string question_context_text(const QAInstance& inst);

}  // namespace alqa
