#include "alqa/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "alqa/errors.hpp"
#include "alqa/synthetic_backend.hpp"
#include "alqa/text.hpp"
#include "alqa/wire.hpp"

namespace alqa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw LookupError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, std::string_view body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << body;
  if (!out) throw std::runtime_error("failed writing " + p.string());
}

json detail_to_json(const CandidateDetail& detail) {
  struct Visitor {
    json operator()(std::monostate) const { return json::object(); }
    json operator()(const ConfidenceDetail& d) const {
      return {{"answer", d.answer}, {"token_start", d.token_start}, {"token_end", d.token_end}};
    }
    json operator()(const ClusterDetail& d) const {
      return {{"cluster", d.cluster}, {"cluster_size", d.cluster_size}};
    }
    json operator()(const DiversityDetail& d) const {
      return {{"nearest_centroid", d.nearest_centroid}};
    }
    json operator()(const PalDetail& d) const {
      if (d.skipped) return {{"skipped", true}};
      return {{"distractor", d.distractor},
              {"distractor_source_id", d.distractor_source_id},
              {"kl_start", d.kl_start},
              {"kl_end", d.kl_end}};
    }
  };
  return std::visit(Visitor{}, detail);
}

}  // namespace

std::unique_ptr<Backend> make_backend(std::string_view spec) {
  constexpr std::string_view synthetic = "synthetic:";
  constexpr std::string_view wire_cmd = "wire:cmd:";
  constexpr std::string_view wire_tcp = "wire:tcp:";
  if (spec.starts_with(synthetic)) {
    const auto digits = spec.substr(synthetic.size());
    std::uint64_t seed = 0;
    auto res = std::from_chars(digits.data(), digits.data() + digits.size(), seed);
    if (digits.empty() || res.ec != std::errc() || res.ptr != digits.data() + digits.size()) {
      throw ArgumentError("bad synthetic seed in backend spec \"" + std::string(spec) + "\"");
    }
    return std::make_unique<SyntheticBackend>(seed);
  }
  if (spec.starts_with(wire_cmd) && spec.size() > wire_cmd.size()) {
    return std::make_unique<WireBackend>(spawn_process(std::string(spec.substr(wire_cmd.size()))),
                                         std::string(spec));
  }
  if (spec.starts_with(wire_tcp) && spec.size() > wire_tcp.size()) {
    return std::make_unique<WireBackend>(connect_tcp(std::string(spec.substr(wire_tcp.size()))),
                                         std::string(spec));
  }
  throw ArgumentError("unrecognized backend spec \"" + std::string(spec) +
                      "\" (expected synthetic:<seed>, wire:cmd:<command> or wire:tcp:<host:port>)");
}

json record_to_json(const IterationRecord& rec) {
  json selected = json::array();
  for (const auto& c : rec.selected) {
    json item = {{"id", c.id}};
    item["score"] = std::isfinite(c.score) ? json(c.score) : json(nullptr);
    item["detail"] = detail_to_json(c.detail);
    selected.push_back(std::move(item));
  }
  json j = {{"t", rec.t},
            {"strategy", std::string(to_string(rec.strategy))},
            {"fallback", rec.fallback},
            {"batch_size", rec.batch_size},
            {"n_labeled", rec.n_labeled},
            {"n_unlabeled", rec.n_unlabeled},
            {"selected", std::move(selected)}};
  if (rec.strategy == Strategy::random) j["baseline"] = true;
  if (rec.eval) {
    j["eval"] = {{"f1", rec.eval->f1}, {"em", rec.eval->em}, {"n", rec.eval->n_examples}};
  } else {
    j["eval"] = nullptr;
  }
  j["seconds"] = rec.seconds;
  return j;
}

std::string summary_csv(const ExperimentLog& log) {
  std::string out = "t,n_labeled,n_unlabeled,f1,em,seconds\n";
  for (const auto& r : log.records) {
    out += std::to_string(r.t) + "," + std::to_string(r.n_labeled) + "," +
           std::to_string(r.n_unlabeled) + ",";
    if (r.eval) out += fixed(r.eval->f1, 4) + "," + fixed(r.eval->em, 4);
    else out += ",";
    out += "," + fixed(r.seconds, 3) + "\n";
  }
  return out;
}

std::string eval_csv(const ExperimentLog& log) {
  std::string out = "checkpoint,f1,em\n";
  for (const auto& r : log.records) {
    if (!r.eval) continue;
    out += std::to_string(r.t) + "," + fixed(r.eval->f1, 4) + "," + fixed(r.eval->em, 4) + "\n";
  }
  return out;
}

std::string curve_data(const ExperimentLog& log) {
  std::string out = "# checkpoint f1\n";
  for (const auto& r : log.records) {
    if (r.eval) out += std::to_string(r.t) + " " + fixed(r.eval->f1, 4) + "\n";
  }
  return out;
}

std::vector<Checkpoint> parse_eval_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || trim(line).rfind("checkpoint,f1", 0) != 0) {
    throw ParseError("eval.csv must start with a checkpoint,f1,em header", 0);
  }
  std::vector<Checkpoint> out;
  while (std::getline(in, line)) {
    const auto row = trim(line);
    if (row.empty()) continue;
    std::istringstream cells(row);
    std::string step, f1;
    std::getline(cells, step, ',');
    std::getline(cells, f1, ',');
    Checkpoint c;
    auto r1 = std::from_chars(step.data(), step.data() + step.size(), c.step);
    auto r2 = std::from_chars(f1.data(), f1.data() + f1.size(), c.f1);
    if (r1.ec != std::errc() || r2.ec != std::errc() || f1.empty()) {
      throw ParseError("bad eval.csv row \"" + row + "\"", 0);
    }
    out.push_back(c);
  }
  return out;
}

std::string comparison_csv(const std::vector<RunCurve>& runs) {
  if (runs.empty()) throw ArgumentError("nothing to compare");
  std::vector<LearningCurve> curves;
  curves.reserve(runs.size());
  for (const auto& r : runs) curves.emplace_back(r.points);

  const auto grid = curves.front().steps();
  bool mismatch = false;
  for (const auto& c : curves) mismatch = mismatch || c.steps() != grid;
  if (mismatch) {
    std::string msg = "runs use different checkpoint grids:";
    for (std::size_t i = 0; i < runs.size(); ++i) {
      msg += "\n  " + runs[i].label + ": [";
      const auto steps = curves[i].steps();
      for (std::size_t k = 0; k < steps.size(); ++k) msg += (k ? "," : "") + std::to_string(steps[k]);
      msg += "]";
    }
    throw ArgumentError(msg);
  }

  std::string out = "strategy";
  for (auto s : grid) out += "," + std::to_string(s);
  out += ",auc\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    out += runs[i].label;
    for (const auto& p : curves[i].points()) out += "," + format_one_decimal(p.f1);
    out += "," + format_one_decimal(auc(curves[i])) + "\n";
  }
  return out;
}

int cmd_run(const RunManifest& m, std::ostream& err) {
  ALConfig cfg;
  try {
    if (!fs::exists(m.config)) {
      err << "error: config file not found: " << m.config.string() << "\n";
      return kExitMissingFile;
    }
    cfg = load_config(m.config);
    if (m.strategy) cfg.strategy = parse_strategy(*m.strategy);
    if (m.seed) cfg.rng_seed = *m.seed;
  } catch (const std::exception& e) {
    err << "error: invalid config " << m.config.string() << ": " << e.what() << "\n";
    return kExitUsage;
  }

  Dataset data;
  std::optional<Dataset> eval_data;
  for (const auto* p : {&m.dataset, m.eval ? &*m.eval : nullptr}) {
    if (p == nullptr) continue;
    if (!fs::exists(*p)) {
      err << "error: dataset not found: " << p->string() << "\n";
      return kExitMissingFile;
    }
    try {
      auto loaded = load_squad(*p);
      if (m.one_per_context) loaded = subset_one_per_context(loaded);
      if (p == &m.dataset) {
        data = std::move(loaded);
      } else {
        eval_data = std::move(loaded);
      }
    } catch (const ParseError& e) {
      err << "error: cannot parse " << p->string() << " at byte " << e.offset() << ": " << e.what()
          << "\n";
      return kExitBadInput;
    } catch (const std::exception& e) {
      err << "error: invalid dataset " << p->string() << ": " << e.what() << "\n";
      return kExitBadInput;
    }
  }
  if (data.empty()) {
    err << "error: dataset " << m.dataset.string() << " has no instances\n";
    return kExitBadInput;
  }

  std::unique_ptr<Backend> backend;
  try {
    backend = make_backend(m.backend);
  } catch (const std::exception& e) {
    err << "error: backend " << m.backend << " unavailable: " << e.what() << "\n";
    return kExitBackend;
  }

  std::error_code ec;
  fs::create_directories(m.out, ec);
  if (ec) {
    err << "error: cannot create output directory " << m.out.string() << ": " << ec.message()
        << "\n";
    return kExitUsage;
  }

  try {
    std::string echoed = "# dataset=" + m.dataset.string() + "\n# backend=" + m.backend + "\n";
    if (m.eval) echoed += "# eval=" + m.eval->string() + "\n";
    if (m.one_per_context) echoed += "# one_per_context=true\n";
    write_file(m.out / "config.txt", echoed + format_config(cfg));

    std::ofstream log_out(m.out / "log.ndjson", std::ios::binary);
    if (!log_out) throw std::runtime_error("cannot write log.ndjson");
    err << "run: " << data.size() << " instances, strategy " << to_string(cfg.strategy)
        << ", backend " << m.backend << "\n";

    ExperimentLog log;
    try {
      log = run_experiment(
          data, cfg, *backend, eval_data ? &*eval_data : nullptr, [&](const IterationRecord& r) {
            log_out << record_to_json(r).dump() << "\n";
            log_out.flush();
            log.records.push_back(r);
            err << "  t=" << r.t << " labeled=" << r.n_labeled << " unlabeled=" << r.n_unlabeled;
            if (r.eval) err << " f1=" << fixed(r.eval->f1, 2);
            if (r.fallback) err << " (fallback)";
            err << "\n";
          });
    } catch (const ExperimentError& e) {
      write_file(m.out / "summary.csv", summary_csv(log));
      err << "error: run stopped at " << e.what() << "\n";
      return kExitRunFailed;
    }

    json summary = {{"iterations", log.records.size()}};
    summary["auc"] = log.auc ? json(*log.auc) : json(nullptr);
    log_out << json{{"summary", summary}}.dump() << "\n";

    write_file(m.out / "summary.csv", summary_csv(log));
    write_file(m.out / "eval.csv", eval_csv(log));
    write_file(m.out / "curve.dat", curve_data(log));
    const std::string auc_line =
        log.auc ? "auc=" + format_one_decimal(*log.auc) + " checkpoints=" +
                      std::to_string(log.curve()->points().size()) + "\n"
                : "auc=n/a checkpoints=0\n";
    write_file(m.out / "eval_summary.txt", auc_line);
    err << "done: " << auc_line;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRunFailed;
  }
  return kExitOk;
}

int cmd_compare(const std::vector<fs::path>& runs, const fs::path& out_csv, std::ostream& err) {
  if (runs.size() < 2) {
    err << "error: compare needs at least two run directories\n";
    return kExitUsage;
  }
  std::vector<RunCurve> curves;
  for (const auto& dir : runs) {
    if (!fs::exists(dir / "eval.csv") || !fs::exists(dir / "config.txt")) {
      err << "error: " << dir.string() << " is not a completed run (eval.csv or config.txt missing)\n";
      return kExitMissingFile;
    }
    try {
      const auto cfg = parse_config(read_file(dir / "config.txt"));
      auto points = parse_eval_csv(read_file(dir / "eval.csv"));
      if (points.empty()) throw ParseError("eval.csv has no checkpoints", 0);
      curves.push_back({std::string(to_string(cfg.strategy)), std::move(points)});
    } catch (const std::exception& e) {
      err << "error: cannot read run " << dir.string() << ": " << e.what() << "\n";
      return kExitBadInput;
    }
  }
  std::string table;
  try {
    table = comparison_csv(curves);
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << "\n";
    return kExitGridMismatch;
  }
  try {
    if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
    write_file(out_csv, table);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

int cmd_serve(std::string_view backend_spec, std::ostream& err) {
  std::unique_ptr<Backend> backend;
  try {
    backend = make_backend(backend_spec);
  } catch (const std::exception& e) {
    err << "error: backend " << backend_spec << " unavailable: " << e.what() << "\n";
    return kExitBackend;
  }
  serve(*backend, std::cin, std::cout);
  return kExitOk;
}

}  // namespace alqa
