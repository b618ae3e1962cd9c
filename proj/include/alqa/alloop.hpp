#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "alqa/acquisition.hpp"
#include "alqa/backend.hpp"
#include "alqa/dataset.hpp"
#include "alqa/metrics.hpp"

namespace alqa {

/// How many candidates each iteration acquires: a fraction of the current
/// unlabeled pool (shrinking), or a fraction of the whole dataset (constant).
enum class BatchMode { shrinking, constant };

struct ALConfig {
  double seed_fraction = 0.01;
  double batch_fraction = 0.10;
  Strategy strategy = Strategy::pal;
  int knn_k = 5;
  int kmeans_k = 10;
  std::uint64_t rng_seed = 42;
  int max_span_tokens = kDefaultMaxSpanTokens;
  /// Iterations after whose fine-tune the model is evaluated; empty = every one.
  std::vector<std::size_t> eval_checkpoints;
  BatchMode batch_mode = BatchMode::shrinking;
  /// Fine-tune on all of D_l each iteration instead of only the new batch.
  bool refeed_all = false;
  /// Wall-clock seconds in the log; off keeps logs byte-identical across replays.
  bool record_timing = false;

  /// Throws ArgumentError on out-of-range values.
  void validate() const;
  AcquisitionConfig acquisition() const;
  bool is_checkpoint(std::size_t t) const;
};

/// Parses flat `key=value` lines; '#' starts a comment. Unknown keys and bad
/// values throw ArgumentError naming the line.
ALConfig parse_config(std::string_view text);
ALConfig load_config(const std::filesystem::path& path);
/// Full config in the same format; parse_config(format_config(c)) == c.
std::string format_config(const ALConfig& cfg);

/// Labeled set D_l and unlabeled set D_u at iteration t.
class PoolState {
 public:
  PoolState(std::vector<std::string> labeled, std::vector<std::string> unlabeled);

  const std::vector<std::string>& labeled() const { return labeled_; }
  const std::vector<std::string>& unlabeled() const { return unlabeled_; }
  std::size_t t() const { return t_; }
  bool is_labeled(std::string_view id) const { return labeled_set_.count(std::string(id)) != 0; }

  /// Moves `ids` from D_u to D_l and advances t. Throws ArgumentError if an
  /// id is not currently unlabeled or repeats.
  void label(std::span<const std::string> ids);

 private:
  std::vector<std::string> labeled_;
  std::vector<std::string> unlabeled_;
  std::unordered_set<std::string> labeled_set_;
  std::size_t t_ = 0;
};

/// Seeds D_l with max(1, round(seed_fraction * N)) uniformly drawn ids; the
/// rest, in dataset order, form D_u.
PoolState seed_pool(const Dataset& d, const ALConfig& cfg);

/// min(|D_u|, ceil(batch_fraction * |D_u|)) in shrinking mode,
/// min(|D_u|, ceil(batch_fraction * N)) in constant mode; at least 1.
std::size_t batch_size(const PoolState& pool, const ALConfig& cfg, std::size_t dataset_size);

struct IterationRecord {
  std::size_t t = 0;
  Strategy strategy = Strategy::pal;  // strategy actually used
  bool fallback = false;              // PAL starved, least confidence used
  std::size_t batch_size = 0;
  std::vector<ScoredCandidate> selected;
  std::size_t n_labeled = 0;    // after labeling this batch
  std::size_t n_unlabeled = 0;  // after labeling this batch
  std::optional<EvalResult> eval;
  double seconds = 0.0;
};

struct ExperimentLog {
  std::vector<IterationRecord> records;
  std::optional<double> auc;  // over the checkpointed F1 values

  /// Checkpointed iterations as a learning curve (label = iteration index).
  std::optional<LearningCurve> curve() const;
};

/// A run that stopped early. `iteration()` is the iteration that failed;
/// earlier records were already delivered.
class ExperimentError : public std::runtime_error {
 public:
  ExperimentError(std::size_t iteration, const std::string& what)
      : std::runtime_error("iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

using RecordSink = std::function<void(const IterationRecord&)>;

/// The acquisition loop. While D_u is non-empty: continue fine-tuning on the
/// newly labeled instances (the seed set first), evaluate at checkpoints,
/// acquire a batch with the configured strategy, label it through the
/// oracle and move it from D_u to D_l. `eval_set` defaults to `d` itself.
/// `on_record` sees every completed iteration as soon as it finishes.
ExperimentLog run_experiment(const Dataset& d, const ALConfig& cfg, Backend& backend,
                             const Dataset* eval_set = nullptr, const RecordSink& on_record = {});

}  // namespace alqa
