// Command-line harness over the shared C API (sfl.h).
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sfl.h"

namespace {

struct Pending {
  std::vector<std::pair<std::string, std::string>> kv;
  void add(const std::string& key, const std::string& value) { kv.emplace_back(key, value); }
};

int apply_and_run(sfl_config* cfg, const Pending& pending, bool print_summary) {
  for (const auto& [k, v] : pending.kv) {
    if (sfl_config_set(cfg, k.c_str(), v.c_str()) != SFL_OK) {
      std::fprintf(stderr, "error: %s\n", sfl_last_error());
      return 2;
    }
  }
  std::string summary(1 << 16, '\0');
  int rc = sfl_run(cfg, summary.data(), summary.size());
  if (rc != SFL_OK) {
    std::fprintf(stderr, "error: %s\n", sfl_last_error());
    if (print_summary && summary[0] != '\0') std::printf("%s\n", summary.c_str());
    return 1;
  }
  if (print_summary) std::printf("%s\n", summary.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Successor-feature landmark agent"};
  app.require_subcommand(1);

  sfl_config* cfg = sfl_config_new();
  Pending pending;
  std::string config_file;
  std::vector<std::string> overrides;

  app.add_option("--config", config_file, "INI config file (flags override it)");
  app.add_option("--set", overrides, "extra key=value overrides")->take_all();

  std::string map, out_dir = "out", checkpoint, goal, ref_state, policy, visits, trace;
  std::string spawn, frontier_mode, encoder_mode;
  long seed = -1, steps = -1, trials = -1, budget = -1;
  double gamma = -1.0;
  bool traces = false, analytic = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "root RNG seed");
    sub->add_option("--out", out_dir, "output directory");
  };

  CLI::App* train = app.add_subcommand("train", "explore and learn SF + landmark graph");
  train->add_option("--map", map, "ASCII map file")->required();
  train->add_option("--steps", steps, "environment step budget");
  train->add_option("--spawn", spawn, "fixed | random");
  train->add_option("--frontier", frontier_mode, "count | uniform");
  train->add_option("--encoder", encoder_mode, "onehot | learned");
  train->add_flag("--traces", traces, "write per-episode traces");
  add_common(train);

  CLI::App* eval = app.add_subcommand("eval", "goal-reaching evaluation from checkpoints");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file(s), comma separated")
      ->required();
  eval->add_option("--trials", trials, "trials per checkpoint");
  eval->add_option("--budget", budget, "step budget per trial");
  eval->add_option("--goal", goal, "goal state x,y,H (default: map goal cell)");
  eval->add_option("--policy", policy, "sfl | greedy | random | oracle");
  eval->add_flag("--traces", traces, "write per-trial traces");
  add_common(eval);

  CLI::App* heatmap = app.add_subcommand("heatmap", "SFS-vs-reference-state CSV");
  heatmap->add_option("--checkpoint", checkpoint, "checkpoint file");
  heatmap->add_option("--map", map, "ASCII map file (with --analytic)");
  heatmap->add_option("--ref-state", ref_state, "reference state x,y,H")->required();
  heatmap->add_flag("--analytic", analytic, "use the exact SR instead of a checkpoint");
  heatmap->add_option("--gamma", gamma, "discount for --analytic");
  add_common(heatmap);

  CLI::App* export_graph = app.add_subcommand("export-graph", "landmark graph as DOT");
  export_graph->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  add_common(export_graph);

  CLI::App* coverage = app.add_subcommand("coverage", "coverage %% from a visits file");
  coverage->add_option("--visits", visits, "visits.csv from a training run")->required();
  coverage->add_option("--map", map, "ASCII map file")->required();
  add_common(coverage);

  CLI::App* replay = app.add_subcommand("replay", "re-execute and verify a trace file");
  replay->add_option("--trace", trace, "trace.jsonl from a run")->required();
  replay->add_option("--map", map, "ASCII map file")->required();
  add_common(replay);

  CLI11_PARSE(app, argc, argv);

  if (!config_file.empty() &&
      sfl_config_load_file(cfg, config_file.c_str()) != SFL_OK) {
    std::fprintf(stderr, "error: %s\n", sfl_last_error());
    sfl_config_free(cfg);
    return 2;
  }

  if (train->parsed()) pending.add("run.mode", "train");
  if (eval->parsed()) pending.add("run.mode", "eval");
  if (heatmap->parsed()) pending.add("run.mode", "heatmap");
  if (export_graph->parsed()) pending.add("run.mode", "export-graph");
  if (coverage->parsed()) pending.add("run.mode", "coverage");
  if (replay->parsed()) pending.add("run.mode", "replay");

  if (!map.empty()) pending.add("run.map", map);
  if (seed >= 0) pending.add("run.seed", std::to_string(seed));
  if (steps >= 0) pending.add("run.steps", std::to_string(steps));
  pending.add("run.out_dir", out_dir);
  if (!checkpoint.empty()) pending.add("run.checkpoint", checkpoint);
  if (!spawn.empty()) pending.add("agent.spawn", spawn);
  if (!frontier_mode.empty()) pending.add("agent.frontier_mode", frontier_mode);
  if (!encoder_mode.empty()) pending.add("encoder.mode", encoder_mode);
  if (traces) pending.add("output.traces", "true");
  if (trials >= 0) pending.add("eval.trials", std::to_string(trials));
  if (budget >= 0) pending.add("eval.budget", std::to_string(budget));
  if (!goal.empty()) pending.add("eval.goal", goal);
  if (!policy.empty()) pending.add("eval.policy", policy);
  if (!ref_state.empty()) pending.add("heatmap.ref_state", ref_state);
  if (analytic) pending.add("heatmap.analytic", "true");
  if (gamma > 0) pending.add("heatmap.gamma", std::to_string(gamma));
  if (!visits.empty()) pending.add("input.visits", visits);
  if (!trace.empty()) pending.add("input.trace", trace);

  for (const std::string& kv : overrides) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      sfl_config_free(cfg);
      return 2;
    }
    pending.add(kv.substr(0, eq), kv.substr(eq + 1));
  }

  int rc = apply_and_run(cfg, pending, true);
  sfl_config_free(cfg);
  return rc;
}
