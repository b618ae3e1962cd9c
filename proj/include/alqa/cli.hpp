#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "alqa/alloop.hpp"
#include "alqa/backend.hpp"

namespace alqa {

/// Process exit codes of the command line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,           // invalid flags or config
  kExitMissingFile = 3,     // config, dataset or run directory not found
  kExitBadInput = 4,        // dataset or run output that fails to parse or validate
  kExitBackend = 5,         // backend spec unparseable or backend unreachable
  kExitRunFailed = 6,       // failure after the run started
  kExitGridMismatch = 7,    // compare: runs evaluated at different checkpoints
};

/// "synthetic:<seed>", "wire:cmd:<command>" or "wire:tcp:<host:port>".
/// Throws ArgumentError for unparseable specs, TransportError if unreachable.
std::unique_ptr<Backend> make_backend(std::string_view spec);

struct RunManifest {
  std::filesystem::path config;
  std::filesystem::path dataset;
  std::string backend = "synthetic:0";
  std::filesystem::path out;
  std::optional<std::string> strategy;   // overrides the config
  std::optional<std::uint64_t> seed;     // overrides rng_seed
  std::optional<std::filesystem::path> eval;  // evaluation set; default: the pool itself
  bool one_per_context = false;
};

/// Runs one experiment and writes config.txt, log.ndjson, summary.csv,
/// eval.csv, eval_summary.txt and curve.dat into `m.out`. Diagnostics go to `err`.
int cmd_run(const RunManifest& m, std::ostream& err);

/// Reads completed run directories and writes a comparison CSV with one row
/// per run: strategy, F1 at each checkpoint, AUC.
int cmd_compare(const std::vector<std::filesystem::path>& runs,
                const std::filesystem::path& out_csv, std::ostream& err);

/// Serves the wire protocol on stdin/stdout with the given backend.
int cmd_serve(std::string_view backend_spec, std::ostream& err);

// Report formats, exposed for tests.
nlohmann::json record_to_json(const IterationRecord& rec);
std::string summary_csv(const ExperimentLog& log);
std::string eval_csv(const ExperimentLog& log);
std::string curve_data(const ExperimentLog& log);

struct RunCurve {
  std::string label;
  std::vector<Checkpoint> points;
};

/// Parses an eval.csv body (header checkpoint,f1,em; em may be blank).
std::vector<Checkpoint> parse_eval_csv(std::string_view text);

/// Comparison table. Throws ArgumentError listing every grid when the runs'
/// checkpoint grids differ.
std::string comparison_csv(const std::vector<RunCurve>& runs);

}  // namespace alqa
