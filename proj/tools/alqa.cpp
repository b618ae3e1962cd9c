// alqa: run pool-based active learning experiments for extractive QA.
//
//   alqa run --config exp.cfg --dataset train.json --backend synthetic:7 --out runs/pal
//   alqa compare --out table.csv runs/confidence runs/clustering runs/diversity runs/pal
//   alqa serve --backend synthetic:7      # wire protocol on stdin/stdout

#include <iostream>

#include <CLI11.hpp>

#include "alqa/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Pool-based active learning for extractive question answering"};
  app.require_subcommand(1);

  alqa::RunManifest manifest;
  std::string config, dataset, out, eval, strategy;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "Run one active learning experiment");
  run->add_option("--config", config, "Experiment config (key=value lines)")->required();
  run->add_option("--dataset", dataset, "SQuAD v1.1 JSON pool")->required();
  run->add_option("--backend", manifest.backend,
                  "synthetic:<seed>, wire:cmd:<command> or wire:tcp:<host:port>")
      ->capture_default_str();
  run->add_option("--out", out, "Output directory")->required();
  auto* strategy_opt = run->add_option("--strategy", strategy, "Override the config strategy");
  auto* seed_opt = run->add_option("--seed", seed, "Override rng_seed");
  auto* eval_opt = run->add_option("--eval", eval, "SQuAD JSON evaluation set (default: the pool)");
  run->add_flag("--one-per-context", manifest.one_per_context,
                "Keep only the first question of every context");

  std::vector<std::string> run_dirs;
  std::string table;
  auto* compare = app.add_subcommand("compare", "Tabulate F1 per checkpoint and AUC across runs");
  compare->add_option("runs", run_dirs, "Completed run directories")->required();
  compare->add_option("--out", table, "Comparison CSV to write")->required();

  std::string serve_backend = "synthetic:0";
  auto* serve = app.add_subcommand("serve", "Serve the backend wire protocol on stdio");
  serve->add_option("--backend", serve_backend, "Backend to expose")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : alqa::kExitUsage;
  }

  if (*run) {
    manifest.config = config;
    manifest.dataset = dataset;
    manifest.out = out;
    if (*strategy_opt) manifest.strategy = strategy;
    if (*seed_opt) manifest.seed = seed;
    if (*eval_opt) manifest.eval = eval;
    return alqa::cmd_run(manifest, std::cerr);
  }
  if (*compare) {
    std::vector<std::filesystem::path> dirs(run_dirs.begin(), run_dirs.end());
    return alqa::cmd_compare(dirs, table, std::cerr);
  }
  return alqa::cmd_serve(serve_backend, std::cerr);
}
