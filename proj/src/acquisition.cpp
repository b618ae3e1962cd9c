#include "alqa/acquisition.hpp"

#include <algorithm>
#include <limits>
#include <unordered_set>

#include "alqa/divergence.hpp"
#include "alqa/errors.hpp"
#include "alqa/sampling.hpp"
#include "alqa/text.hpp"

namespace alqa {

namespace {

bool ascending(const ScoredCandidate& a, const ScoredCandidate& b) {
  return a.score != b.score ? a.score < b.score : a.id < b.id;
}

bool descending(const ScoredCandidate& a, const ScoredCandidate& b) {
  return a.score != b.score ? a.score > b.score : a.id < b.id;
}

std::vector<ScoredCandidate> take_front(std::vector<ScoredCandidate> all, std::size_t b) {
  all.resize(std::min(all.size(), b));
  return all;
}

std::vector<IndexedPoint<double>> embed_all(Backend& backend, const ModelHandle& m,
                                            const Dataset& pool,
                                            const std::vector<std::string>& ids) {
  std::vector<IndexedPoint<double>> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    out.push_back({id, backend.embed(m, question_context_text(pool.at(id)))});
  }
  return out;
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::confidence: return "confidence";
    case Strategy::clustering: return "clustering";
    case Strategy::diversity: return "diversity";
    case Strategy::pal: return "pal";
    case Strategy::random: return "random";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::confidence, Strategy::clustering, Strategy::diversity, Strategy::pal,
                 Strategy::random}) {
    if (to_string(s) == name) return s;
  }
  throw ArgumentError("unknown strategy \"" + std::string(name) +
                      "\" (expected confidence, clustering, diversity, pal or random)");
}

std::string question_context_text(const QAInstance& inst) {
  return inst.question + " " + inst.context;
}

void validate_request(const AcquisitionRequest& req, const Dataset& pool) {
  if (req.batch_size < 1) throw ArgumentError("batch size must be >= 1");
  if (req.batch_size > req.unlabeled_ids.size()) {
    throw ArgumentError("batch size exceeds the unlabeled pool");
  }
  std::unordered_set<std::string_view> labeled;
  for (const auto& id : req.labeled_ids) {
    if (!pool.contains(id)) throw ArgumentError("labeled id not in pool: " + id);
    labeled.insert(id);
  }
  std::unordered_set<std::string_view> unlabeled;
  for (const auto& id : req.unlabeled_ids) {
    if (!pool.contains(id)) throw ArgumentError("unlabeled id not in pool: " + id);
    if (labeled.count(id)) throw ArgumentError("id is both labeled and unlabeled: " + id);
    if (!unlabeled.insert(id).second) throw ArgumentError("duplicate unlabeled id: " + id);
  }
}

// ---------------------------------------------------------------- confidence

std::vector<ScoredCandidate> select_least_confidence(Backend& backend, const Dataset& pool,
                                                     const AcquisitionRequest& req,
                                                     const AcquisitionConfig& cfg) {
  validate_request(req, pool);
  std::vector<ScoredCandidate> scored;
  scored.reserve(req.unlabeled_ids.size());
  for (const auto& id : req.unlabeled_ids) {
    const auto& inst = pool.at(id);
    SpanDistribution dist;
    try {
      dist = backend.predict(req.model, inst.question, inst.context);
    } catch (const TransportError& e) {
      throw TransportError("candidate " + id + ": " + e.what());
    }
    auto span = decode_answer(dist, inst.context, cfg.max_span_tokens);
    scored.push_back(
        {id, span.score, ConfidenceDetail{span.token_start, span.token_end, std::move(span.text)}});
  }
  std::sort(scored.begin(), scored.end(), ascending);
  return take_front(std::move(scored), req.batch_size);
}

// ---------------------------------------------------------------- clustering

std::vector<ScoredCandidate> select_clustering(Backend& backend, const Dataset& pool,
                                               const AcquisitionRequest& req,
                                               const AcquisitionConfig& cfg) {
  validate_request(req, pool);
  const auto points = embed_all(backend, req.model, pool, req.unlabeled_ids);
  const int k = std::min<int>(cfg.kmeans_k, static_cast<int>(points.size()));
  const auto matrix = stack_columns<double>(points);
  const auto clusters = kmeans(matrix, k, derive_seed(req.rng_seed, 1), cfg.kmeans_max_iters);
  const auto sizes = clusters.cluster_sizes();

  const auto chosen = proportional_sample(req.unlabeled_ids, clusters.assignment, req.batch_size,
                                          derive_seed(req.rng_seed, 2));
  std::unordered_map<std::string_view, std::size_t> position;
  for (std::size_t i = 0; i < req.unlabeled_ids.size(); ++i) position[req.unlabeled_ids[i]] = i;

  std::vector<ScoredCandidate> out;
  out.reserve(chosen.size());
  for (const auto& id : chosen) {
    const auto i = static_cast<Eigen::Index>(position.at(id));
    const int c = clusters.assignment[static_cast<std::size_t>(i)];
    out.push_back({id, euclidean(matrix.col(i), clusters.centroids.col(c)),
                   ClusterDetail{c, sizes[static_cast<std::size_t>(c)]}});
  }
  return out;
}

// ---------------------------------------------------------------- diversity

std::vector<ScoredCandidate> select_diversity(Backend& backend, const Dataset& pool,
                                              const AcquisitionRequest& req,
                                              const AcquisitionConfig& cfg) {
  validate_request(req, pool);
  if (req.labeled_ids.empty()) throw ArgumentError("diversity sampling needs a labeled set");
  const auto labeled = embed_all(backend, req.model, pool, req.labeled_ids);
  const int k = std::min<int>(cfg.kmeans_k, static_cast<int>(labeled.size()));
  const auto clusters =
      kmeans(stack_columns<double>(labeled), k, derive_seed(req.rng_seed, 3), cfg.kmeans_max_iters);

  std::vector<ScoredCandidate> scored;
  scored.reserve(req.unlabeled_ids.size());
  for (const auto& id : req.unlabeled_ids) {
    const Embedding v = backend.embed(req.model, question_context_text(pool.at(id)));
    double best = std::numeric_limits<double>::infinity();
    int nearest = 0;
    for (Eigen::Index c = 0; c < clusters.centroids.cols(); ++c) {
      const double d = euclidean(v, clusters.centroids.col(c));
      if (d < best) {
        best = d;
        nearest = static_cast<int>(c);
      }
    }
    scored.push_back({id, best, DiversityDetail{nearest}});
  }
  std::sort(scored.begin(), scored.end(), descending);
  return take_front(std::move(scored), req.batch_size);
}

// ---------------------------------------------------------------- PAL

PerturbationBuilder::PerturbationBuilder(Backend& backend, ModelHandle model,
                                         std::span<const QAInstance> labeled, int k)
    : backend_(backend), model_(std::move(model)), k_(k) {
  if (k < 1) throw ArgumentError("knn k must be >= 1");
  corpus_.reserve(labeled.size());
  for (const auto& inst : labeled) {
    corpus_.push_back({inst.id, backend_.embed(model_, inst.context)});
    contexts_.emplace(inst.id, inst.context);
  }
}

const std::vector<PerturbationBuilder::Sentence>& PerturbationBuilder::sentences_of(
    const std::string& id) {
  auto it = sentence_cache_.find(id);
  if (it != sentence_cache_.end()) return it->second;
  std::vector<Sentence> sentences;
  for (auto& text : split_sentences(contexts_.at(id))) {
    Embedding e = backend_.embed(model_, text);
    sentences.push_back({std::move(text), std::move(e)});
  }
  return sentence_cache_.emplace(id, std::move(sentences)).first->second;
}

std::optional<PerturbedInstance> PerturbationBuilder::build(const QAInstance& u) {
  if (corpus_.empty()) return std::nullopt;
  const Embedding query = backend_.embed(model_, u.context);
  NeighborSet<double> neighbors;
  try {
    neighbors = knn(query, std::span<const IndexedPoint<double>>(corpus_), k_, u.context,
                    contexts_, u.id);
  } catch (const NoEligibleNeighbors&) {
    return std::nullopt;
  }

  const Sentence* best = nullptr;
  std::string best_source;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& nb : neighbors.neighbors) {
    for (const auto& s : sentences_of(nb.id)) {
      const double d = euclidean(s.embedding, query);
      if (best == nullptr || d < best_d) {
        best = &s;
        best_d = d;
        best_source = nb.id;
      }
    }
  }
  if (best == nullptr) return std::nullopt;
  return PerturbedInstance{u.id, u.context + " " + best->text, best->text, best_source};
}

std::optional<PerturbedInstance> build_perturbation(const QAInstance& u,
                                                    std::span<const QAInstance> labeled,
                                                    Backend& backend, const ModelHandle& model,
                                                    int k) {
  PerturbationBuilder builder(backend, model, labeled, k);
  return builder.build(u);
}

PalDetail compare_predictions(const SpanDistribution& original, const SpanDistribution& perturbed,
                              std::size_t original_length) {
  // Tokens of the perturbed context that lie inside the original text.
  Eigen::Index n = 0;
  for (const auto& r : perturbed.token_offsets) {
    if (r.end > original_length) break;
    ++n;
  }
  n = std::min(n, original.size());
  if (n < 1) throw ArgumentError("perturbed prediction has no tokens inside the original context");

  PalDetail d;
  d.kl_start = sym_kl(restrict_renormalize(original.start_probs, n),
                      restrict_renormalize(perturbed.start_probs, n));
  d.kl_end = sym_kl(restrict_renormalize(original.end_probs, n),
                    restrict_renormalize(perturbed.end_probs, n));
  return d;
}

ScoredCandidate pal_score(const QAInstance& u, Backend& backend, const ModelHandle& model,
                          PerturbationBuilder& builder) {
  auto perturbed = builder.build(u);
  if (!perturbed) {
    PalDetail skipped;
    skipped.skipped = true;
    return {u.id, std::numeric_limits<double>::infinity(), skipped};
  }
  const auto before = backend.predict(model, u.question, u.context);
  const auto after = backend.predict(model, u.question, perturbed->perturbed_context);
  PalDetail detail = compare_predictions(before, after, scalar_length(u.context));
  detail.distractor = std::move(perturbed->distractor);
  detail.distractor_source_id = std::move(perturbed->distractor_source_id);
  const double s = -(detail.kl_start + detail.kl_end);
  return {u.id, s, std::move(detail)};
}

std::vector<ScoredCandidate> select_pal(Backend& backend, const Dataset& pool,
                                        const AcquisitionRequest& req,
                                        const AcquisitionConfig& cfg) {
  validate_request(req, pool);
  if (req.labeled_ids.empty()) throw ArgumentError("PAL needs a labeled set");
  std::vector<QAInstance> labeled;
  labeled.reserve(req.labeled_ids.size());
  for (const auto& id : req.labeled_ids) labeled.push_back(pool.at(id));
  PerturbationBuilder builder(backend, req.model, labeled, cfg.knn_k);

  std::vector<ScoredCandidate> scored;
  scored.reserve(req.unlabeled_ids.size());
  bool any_scored = false;
  for (const auto& id : req.unlabeled_ids) {
    scored.push_back(pal_score(pool.at(id), backend, req.model, builder));
    any_scored = any_scored || !std::get<PalDetail>(scored.back().detail).skipped;
  }
  if (!any_scored) {
    throw PalStarved("PAL found no distractor for any candidate; fall back to least confidence");
  }
  // Skipped candidates (+inf) sort last and are only taken to fill the batch.
  std::sort(scored.begin(), scored.end(), ascending);
  return take_front(std::move(scored), req.batch_size);
}

// ---------------------------------------------------------------- random

std::vector<ScoredCandidate> select_random(const AcquisitionRequest& req) {
  if (req.batch_size < 1 || req.batch_size > req.unlabeled_ids.size()) {
    throw ArgumentError("batch size out of range");
  }
  Rng rng(derive_seed(req.rng_seed, 4));
  std::vector<ScoredCandidate> out;
  for (auto i : sample_without_replacement(req.unlabeled_ids.size(), req.batch_size, rng)) {
    out.push_back({req.unlabeled_ids[i], 0.0, std::monostate{}});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

std::vector<ScoredCandidate> select(Strategy s, Backend& backend, const Dataset& pool,
                                    const AcquisitionRequest& req, const AcquisitionConfig& cfg) {
  switch (s) {
    case Strategy::confidence: return select_least_confidence(backend, pool, req, cfg);
    case Strategy::clustering: return select_clustering(backend, pool, req, cfg);
    case Strategy::diversity: return select_diversity(backend, pool, req, cfg);
    case Strategy::pal: return select_pal(backend, pool, req, cfg);
    case Strategy::random:
      validate_request(req, pool);
      return select_random(req);
  }
  throw ArgumentError("unknown strategy");
}

}  // namespace alqa
