#include "alqa/alloop.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "alqa/errors.hpp"
#include "alqa/sampling.hpp"
#include "alqa/text.hpp"

namespace alqa {

namespace {

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(std::string_view value, std::size_t line_no) {
  T out{};
  auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ArgumentError("config line " + std::to_string(line_no) + ": bad number \"" +
                        std::string(value) + "\"");
  }
  return out;
}

bool parse_bool(std::string_view value, std::size_t line_no) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ArgumentError("config line " + std::to_string(line_no) + ": expected true or false");
}

// Guards against products like 0.1 * 30 landing a hair above an integer.
std::size_t ceil_fraction(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

}  // namespace

void ALConfig::validate() const {
  if (!(seed_fraction > 0.0 && seed_fraction < 1.0)) {
    throw ArgumentError("seed_fraction must be in (0, 1)");
  }
  if (!(batch_fraction > 0.0 && batch_fraction <= 1.0)) {
    throw ArgumentError("batch_fraction must be in (0, 1]");
  }
  if (knn_k < 1) throw ArgumentError("knn_k must be >= 1");
  if (kmeans_k < 1) throw ArgumentError("kmeans_k must be >= 1");
  if (max_span_tokens < 1) throw ArgumentError("max_span_tokens must be >= 1");
  for (std::size_t i = 1; i < eval_checkpoints.size(); ++i) {
    if (eval_checkpoints[i] <= eval_checkpoints[i - 1]) {
      throw ArgumentError("eval_checkpoints must strictly increase");
    }
  }
}

AcquisitionConfig ALConfig::acquisition() const {
  AcquisitionConfig a;
  a.knn_k = knn_k;
  a.kmeans_k = kmeans_k;
  a.max_span_tokens = max_span_tokens;
  return a;
}

bool ALConfig::is_checkpoint(std::size_t t) const {
  return eval_checkpoints.empty() ||
         std::binary_search(eval_checkpoints.begin(), eval_checkpoints.end(), t);
}

ALConfig parse_config(std::string_view text) {
  ALConfig cfg;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const auto line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ArgumentError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));

    if (key == "strategy") {
      cfg.strategy = parse_strategy(value);
    } else if (key == "seed_fraction") {
      cfg.seed_fraction = parse_number<double>(value, line_no);
    } else if (key == "batch_fraction") {
      cfg.batch_fraction = parse_number<double>(value, line_no);
    } else if (key == "knn_k") {
      cfg.knn_k = parse_number<int>(value, line_no);
    } else if (key == "kmeans_k") {
      cfg.kmeans_k = parse_number<int>(value, line_no);
    } else if (key == "rng_seed") {
      cfg.rng_seed = parse_number<std::uint64_t>(value, line_no);
    } else if (key == "max_span_tokens") {
      cfg.max_span_tokens = parse_number<int>(value, line_no);
    } else if (key == "eval_checkpoints") {
      cfg.eval_checkpoints.clear();
      if (value != "all") {
        std::istringstream items(value);
        for (std::string item; std::getline(items, item, ',');) {
          cfg.eval_checkpoints.push_back(parse_number<std::size_t>(trim(item), line_no));
        }
      }
    } else if (key == "batch_mode") {
      if (value == "shrinking") {
        cfg.batch_mode = BatchMode::shrinking;
      } else if (value == "constant") {
        cfg.batch_mode = BatchMode::constant;
      } else {
        throw ArgumentError("config line " + std::to_string(line_no) +
                            ": batch_mode must be shrinking or constant");
      }
    } else if (key == "refeed_all") {
      cfg.refeed_all = parse_bool(value, line_no);
    } else if (key == "record_timing") {
      cfg.record_timing = parse_bool(value, line_no);
    } else {
      throw ArgumentError("config line " + std::to_string(line_no) + ": unknown key \"" + key +
                          "\"");
    }
  }
  cfg.validate();
  return cfg;
}

ALConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LookupError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const ALConfig& cfg) {
  std::ostringstream out;
  out << "strategy=" << to_string(cfg.strategy) << '\n';
  out << "seed_fraction=" << shortest(cfg.seed_fraction) << '\n';
  out << "batch_fraction=" << shortest(cfg.batch_fraction) << '\n';
  out << "knn_k=" << cfg.knn_k << '\n';
  out << "kmeans_k=" << cfg.kmeans_k << '\n';
  out << "rng_seed=" << cfg.rng_seed << '\n';
  out << "max_span_tokens=" << cfg.max_span_tokens << '\n';
  out << "eval_checkpoints=";
  if (cfg.eval_checkpoints.empty()) {
    out << "all";
  } else {
    for (std::size_t i = 0; i < cfg.eval_checkpoints.size(); ++i) {
      out << (i ? "," : "") << cfg.eval_checkpoints[i];
    }
  }
  out << '\n';
  out << "batch_mode=" << (cfg.batch_mode == BatchMode::shrinking ? "shrinking" : "constant")
      << '\n';
  out << "refeed_all=" << (cfg.refeed_all ? "true" : "false") << '\n';
  out << "record_timing=" << (cfg.record_timing ? "true" : "false") << '\n';
  return out.str();
}

PoolState::PoolState(std::vector<std::string> labeled, std::vector<std::string> unlabeled)
    : labeled_(std::move(labeled)), unlabeled_(std::move(unlabeled)) {
  labeled_set_.insert(labeled_.begin(), labeled_.end());
  if (labeled_set_.size() != labeled_.size()) throw ArgumentError("duplicate labeled id");
  for (const auto& id : unlabeled_) {
    if (labeled_set_.count(id)) throw ArgumentError("id both labeled and unlabeled: " + id);
  }
}

void PoolState::label(std::span<const std::string> ids) {
  std::unordered_set<std::string> moving;
  for (const auto& id : ids) {
    if (!moving.insert(id).second) throw ArgumentError("id selected twice: " + id);
  }
  const auto before = unlabeled_.size();
  std::erase_if(unlabeled_, [&](const std::string& id) { return moving.count(id) != 0; });
  if (before - unlabeled_.size() != moving.size()) {
    throw ArgumentError("selected id is not in the unlabeled pool");
  }
  for (const auto& id : ids) {
    labeled_.push_back(id);
    labeled_set_.insert(id);
  }
  ++t_;
}

PoolState seed_pool(const Dataset& d, const ALConfig& cfg) {
  if (d.empty()) throw ArgumentError("cannot seed an empty dataset");
  const std::size_t n = d.size();
  const auto wanted = static_cast<std::size_t>(std::llround(cfg.seed_fraction * static_cast<double>(n)));
  const std::size_t count = std::clamp<std::size_t>(wanted, 1, n);

  Rng rng(derive_seed(cfg.rng_seed, 0));
  auto picks = sample_without_replacement(n, count, rng);
  std::sort(picks.begin(), picks.end());
  std::vector<bool> chosen(n, false);
  std::vector<std::string> labeled;
  labeled.reserve(count);
  for (auto i : picks) {
    chosen[i] = true;
    labeled.push_back(d[i].id);
  }
  std::vector<std::string> unlabeled;
  unlabeled.reserve(n - count);
  for (std::size_t i = 0; i < n; ++i) {
    if (!chosen[i]) unlabeled.push_back(d[i].id);
  }
  return PoolState(std::move(labeled), std::move(unlabeled));
}

std::size_t batch_size(const PoolState& pool, const ALConfig& cfg, std::size_t dataset_size) {
  const std::size_t u = pool.unlabeled().size();
  if (u == 0) throw ArgumentError("batch_size: unlabeled pool is empty");
  const std::size_t base = cfg.batch_mode == BatchMode::shrinking ? u : dataset_size;
  return std::clamp<std::size_t>(ceil_fraction(cfg.batch_fraction, base), 1, u);
}

std::optional<LearningCurve> ExperimentLog::curve() const {
  std::vector<Checkpoint> points;
  for (const auto& r : records) {
    if (r.eval) points.push_back({static_cast<long long>(r.t), r.eval->f1});
  }
  if (points.empty()) return std::nullopt;
  return LearningCurve(std::move(points));
}

ExperimentLog run_experiment(const Dataset& d, const ALConfig& cfg, Backend& backend,
                             const Dataset* eval_set, const RecordSink& on_record) {
  cfg.validate();
  const Dataset& eval_data = eval_set ? *eval_set : d;
  ExperimentLog log;
  PoolState pool = seed_pool(d, cfg);
  std::vector<std::string> newly_labeled = pool.labeled();
  ModelHandle model = backend.current();

  while (!pool.unlabeled().empty()) {
    const auto started = std::chrono::steady_clock::now();
    IterationRecord rec;
    rec.t = pool.t();
    rec.strategy = cfg.strategy;
    try {
      const auto& train_ids = cfg.refeed_all ? pool.labeled() : newly_labeled;
      std::vector<QAInstance> batch;
      batch.reserve(train_ids.size());
      for (const auto& id : train_ids) batch.push_back(d.at(id));
      model = backend.fine_tune(model, batch);

      if (cfg.is_checkpoint(rec.t)) rec.eval = evaluate(backend, model, eval_data, cfg.max_span_tokens);

      AcquisitionRequest req;
      req.labeled_ids = pool.labeled();
      req.unlabeled_ids = pool.unlabeled();
      req.batch_size = batch_size(pool, cfg, d.size());
      req.model = model;
      req.rng_seed = derive_seed(cfg.rng_seed, 1000 + rec.t);
      rec.batch_size = req.batch_size;

      try {
        rec.selected = select(cfg.strategy, backend, d, req, cfg.acquisition());
      } catch (const PalStarved&) {
        rec.fallback = true;
        rec.strategy = Strategy::confidence;
        rec.selected = select_least_confidence(backend, d, req, cfg.acquisition());
      }
      if (rec.selected.size() != req.batch_size) {
        throw std::logic_error("strategy returned " + std::to_string(rec.selected.size()) +
                               " candidates for a batch of " + std::to_string(req.batch_size));
      }

      newly_labeled.clear();
      for (const auto& c : rec.selected) {
        oracle_label(c.id, d);  // the annotator answers from the stored gold label
        newly_labeled.push_back(c.id);
      }
      pool.label(newly_labeled);
    } catch (const std::exception& e) {
      throw ExperimentError(rec.t, e.what());
    }

    rec.n_labeled = pool.labeled().size();
    rec.n_unlabeled = pool.unlabeled().size();
    if (cfg.record_timing) {
      rec.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    if (on_record) on_record(rec);
    log.records.push_back(std::move(rec));
  }

  if (auto c = log.curve()) log.auc = auc(*c);
  return log;
}

}  // namespace alqa
