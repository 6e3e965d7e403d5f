#include "sfl/run.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "sfl/agent.hpp"
#include "sfl/checkpoint.hpp"
#include "sfl/grid.hpp"

namespace sfl {

namespace {

namespace fs = std::filesystem;

struct World {
  std::unique_ptr<Env> env;
  std::unique_ptr<FeatureEncoder> encoder;
  std::string map_text;
};

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

World build_world(const RunConfig& cfg, Rng& root, const std::string& map_text_override) {
  World w;
  if (cfg.env_kind == "chain") {
    w.env = std::make_unique<ChainWorld>(cfg.chain_length,
                                         cfg.episode_limit > 0 ? cfg.episode_limit : 20);
  } else {
    w.map_text = map_text_override.empty() ? read_text_file(cfg.map) : map_text_override;
    w.env = std::make_unique<GridWorld>(GridMap::parse(w.map_text), cfg.episode_limit,
                                        cfg.state_cap);
  }
  if (cfg.encoder.mode == "onehot") {
    w.encoder = std::make_unique<OneHotEncoder>(w.env->num_states(), cfg.encoder.alpha);
  } else {
    w.encoder = std::make_unique<LearnedEncoder>(*w.env, cfg.encoder,
                                                 root.split("encoder-init"));
  }
  return w;
}

EpisodeStore collect_random_walks(const Env& env, int episodes, Rng rng) {
  EpisodeStore store;
  for (int e = 0; e < episodes; ++e) {
    store.begin_episode();
    int s = env.start_state();
    store.add(s);
    for (int t = 0; t < env.episode_limit(); ++t) {
      s = env.step(s, static_cast<int>(rng.uniform_below(env.num_actions()))).next_state;
      store.add(s);
    }
  }
  return store;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path.string());
  return out;
}

void write_visits(const fs::path& path, const Env& env, const std::vector<long>& visits,
                  uint64_t hash) {
  std::ofstream out = open_out(path);
  out << "# config_hash=" << hash << "\n";
  out << "x,y,count\n";
  // one row per cell; recover coordinates from any state on the cell
  std::vector<StateCoords> cell_coords(env.num_cells());
  std::vector<char> seen(env.num_cells(), 0);
  for (int s = 0; s < env.num_states(); ++s) {
    int c = env.cell_of(s);
    if (!seen[c]) {
      seen[c] = 1;
      cell_coords[c] = env.coords(s);
    }
  }
  for (int c = 0; c < env.num_cells(); ++c) {
    out << cell_coords[c].x << ',' << cell_coords[c].y << ',' << visits[c] << "\n";
  }
}

struct LoadedRun {
  RunConfig cfg;  // the configuration the run was trained with
  World world;
  std::unique_ptr<SfLearner> learner;
  std::unique_ptr<LearnedSfProvider> provider;
  std::unique_ptr<LandmarkGraph> graph;
  long global_step = 0;
};

void load_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  while (std::getline(in, line)) {
    std::string t = line;
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = t.substr(1, t.size() - 2);
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos) continue;
    std::string key = t.substr(0, eq);
    std::string value = t.substr(eq + 1);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    while (!value.empty() && value.front() == ' ') value.erase(value.begin());
    cfg.set(section + "." + key, value);
  }
}

LoadedRun load_run(const std::string& path, Rng& root) {
  Checkpoint ck = Checkpoint::load(path);
  LoadedRun run;
  load_config_text(run.cfg, ck.blob("config"));
  run.world = build_world(run.cfg, root, ck.blobs.count("map") ? ck.blob("map") : "");
  if (run.cfg.encoder.mode == "learned") {
    auto* enc = dynamic_cast<LearnedEncoder*>(run.world.encoder.get());
    ck.get_mlp("encoder.net", enc->net());
  }
  run.learner = std::make_unique<SfLearner>(*run.world.encoder,
                                            run.world.env->num_actions(), run.cfg.sf,
                                            Rng(run.cfg.seed));
  ck.get_mlp("sf.theta", run.learner->net());
  ck.get_mlp("sf.target", run.learner->target());
  ck.get_adam("sf.adam", run.learner->optimizer());
  run.provider = std::make_unique<LearnedSfProvider>(*run.learner);

  nlohmann::json counters = nlohmann::json::parse(ck.blob("counters"));
  run.global_step = counters.at("global_step").get<long>();
  run.learner->restore_counters(counters.at("td_updates").get<long>(),
                                counters.at("target_syncs").get<long>());

  run.graph = std::make_unique<LandmarkGraph>(LandmarkGraph::from_json(
      nlohmann::json::parse(ck.blob("graph")), run.cfg.graph, run.cfg.sfs));
  run.graph->refresh_landmark_sfs(*run.provider);
  return run;
}

int resolve_state(const Env& env, const std::string& coord_text) {
  StateCoords c = parse_coords(coord_text);
  const auto* grid = dynamic_cast<const GridWorld*>(&env);
  if (grid) return grid->id_of(GridState{c.x, c.y, c.heading, 0});
  return c.x;  // chain world: the position is the state
}

int goal_state_for_eval(const Env& env, const RunConfig& cfg) {
  if (!cfg.eval_goal.empty()) return resolve_state(env, cfg.eval_goal);
  const auto* grid = dynamic_cast<const GridWorld*>(&env);
  if (grid) return grid->goal_state(East);
  return env.num_states() - 1;  // chain world: far end
}

RunResult run_train(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  uint64_t hash = cfg.hash();
  Rng root(cfg.seed);
  World w = build_world(cfg, root, "");

  nlohmann::json encoder_report;
  if (cfg.encoder.mode == "learned") {
    auto* enc = dynamic_cast<LearnedEncoder*>(w.encoder.get());
    int walks = std::max<int>(
        10, static_cast<int>((cfg.encoder.negative_far * 4) / w.env->episode_limit() + 1) * 10);
    EpisodeStore store = collect_random_walks(*w.env, walks, root.split("encoder-walk"));
    Rng train_rng = root.split("encoder-train");
    EncoderTrainReport rep =
        train_encoder(*enc, store, cfg.encoder.pretrain_steps, train_rng);
    encoder_report = {{"initial_loss", rep.initial_loss},
                      {"final_loss", rep.final_loss},
                      {"steps", rep.steps}};
  }

  SfLearner learner(*w.encoder, w.env->num_actions(), cfg.sf, root);
  LearnedSfProvider provider(learner);
  LandmarkGraph graph(cfg.graph, cfg.sfs);
  Agent agent(*w.env, learner, provider, graph, cfg.agent, cfg.sfs, root);

  std::ofstream metrics = open_out(fs::path(cfg.out_dir) / "metrics.jsonl");
  metrics << nlohmann::json{{"config_hash", hash}}.dump() << "\n";
  std::ofstream traces;
  if (cfg.write_traces) {
    traces = open_out(fs::path(cfg.out_dir) / "trace.jsonl");
    traces << nlohmann::json{{"config_hash", hash}}.dump() << "\n";
  }

  while (agent.global_step() < cfg.steps) {
    EpisodeTrace trace;
    EpisodeStats st = agent.explore_episode(cfg.write_traces ? &trace : nullptr);
    metrics << nlohmann::json{{"step", st.end_step},
                              {"num_landmarks", st.num_landmarks},
                              {"num_edges", st.num_edges},
                              {"coverage_pct", st.coverage_pct},
                              {"frontier_id", st.frontier_id},
                              {"success", st.frontier_reached}}
                   .dump()
            << "\n";
    if (cfg.write_traces) traces << trace.to_json().dump() << "\n";
  }

  write_visits(fs::path(cfg.out_dir) / "visits.csv", *w.env, agent.cell_visits(), hash);
  open_out(fs::path(cfg.out_dir) / "config.ini") << "# config_hash=" << hash << "\n"
                                                 << cfg.canonical();

  Checkpoint ck;
  ck.config_hash = hash;
  ck.blobs["config"] = cfg.canonical();
  if (!w.map_text.empty()) ck.blobs["map"] = w.map_text;
  ck.blobs["graph"] = graph.to_json().dump();
  ck.blobs["counters"] = nlohmann::json{{"global_step", agent.global_step()},
                                        {"episodes", agent.episode_count()},
                                        {"td_updates", learner.update_count()},
                                        {"target_syncs", learner.sync_count()}}
                             .dump();
  if (cfg.encoder.mode == "learned") {
    ck.put_mlp("encoder.net", dynamic_cast<LearnedEncoder*>(w.encoder.get())->net());
  }
  ck.put_mlp("sf.theta", learner.net());
  ck.put_mlp("sf.target", learner.target());
  ck.put_adam("sf.adam", learner.optimizer());
  ck.save((fs::path(cfg.out_dir) / "checkpoint.sfl").string());

  RunResult result;
  result.summary = {{"mode", "train"},
                    {"config_hash", hash},
                    {"steps", agent.global_step()},
                    {"episodes", agent.episode_count()},
                    {"num_landmarks", graph.size()},
                    {"coverage_pct", agent.coverage_pct()},
                    {"out_dir", cfg.out_dir}};
  if (!encoder_report.is_null()) result.summary["encoder"] = encoder_report;
  return result;
}

RunResult run_eval(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) {
    throw ConfigError("run.checkpoint: required for eval mode");
  }
  fs::create_directories(cfg.out_dir);
  std::vector<std::string> paths;
  {
    std::istringstream in(cfg.checkpoint);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (!item.empty()) paths.push_back(item);
    }
  }

  std::ofstream results = open_out(fs::path(cfg.out_dir) / "results.jsonl");
  results << nlohmann::json{{"config_hash", cfg.hash()}}.dump() << "\n";

  std::vector<double> per_seed_rate;
  nlohmann::json per_seed = nlohmann::json::array();
  std::map<std::string, std::pair<int, int>> bins;  // name -> (successes, trials)

  for (size_t ci = 0; ci < paths.size(); ++ci) {
    Rng root(cfg.seed);
    LoadedRun run = load_run(paths[ci], root);
    const Env& env = *run.world.env;
    Rng rng = root.split("eval-" + std::to_string(ci));
    int budget = cfg.eval_budget > 0 ? cfg.eval_budget : env.episode_limit();
    bool random_spawn = run.cfg.agent.spawn == "random";
    int fixed_goal = random_spawn ? -1 : goal_state_for_eval(env, cfg);

    std::ofstream traces;
    if (cfg.write_traces) {
      traces = open_out(fs::path(cfg.out_dir) /
                        ("trace_seed" + std::to_string(ci) + ".jsonl"));
    }

    int successes = 0;
    struct Trial {
      int start, goal, dist;
      bool success;
      int steps;
    };
    std::vector<Trial> trials;
    for (int t = 0; t < cfg.eval_trials; ++t) {
      int start = random_spawn ? env.random_state(rng) : env.start_state();
      int goal = random_spawn ? env.random_state(rng) : fixed_goal;
      EpisodeTrace trace;
      trace.episode = t;
      EvalResult r = evaluate_trial(env, *run.provider, *run.graph, run.cfg.agent,
                                    run.cfg.sfs, run.global_step, start, goal, budget,
                                    cfg.eval_policy, rng, cfg.write_traces ? &trace : nullptr);
      if (r.success) ++successes;
      int dist = geodesic_distance(env, start, goal);
      trials.push_back({start, goal, dist, r.success, r.steps});
      results << nlohmann::json{{"seed_index", ci},
                                {"trial", t},
                                {"start", start},
                                {"goal", goal},
                                {"geodesic", dist},
                                {"success", r.success},
                                {"steps", r.steps}}
                     .dump()
              << "\n";
      if (cfg.write_traces) {
        trace.success = r.success;
        traces << trace.to_json().dump() << "\n";
      }
    }
    double rate = static_cast<double>(successes) / cfg.eval_trials;
    per_seed_rate.push_back(rate);
    per_seed.push_back({{"checkpoint", paths[ci]}, {"success_rate", rate}});

    if (random_spawn) {
      // difficulty bins: geodesic-distance terciles of this trial sample
      std::vector<int> d;
      for (const auto& t : trials) d.push_back(t.dist);
      std::sort(d.begin(), d.end());
      int lo = d[d.size() / 3];
      int hi = d[(2 * d.size()) / 3];
      for (const auto& t : trials) {
        const char* name = t.dist <= lo ? "easy" : (t.dist <= hi ? "medium" : "hard");
        auto& [s, n] = bins[name];
        if (t.success) ++s;
        ++n;
      }
    }
  }

  double mean = 0.0;
  for (double r : per_seed_rate) mean += r;
  mean /= static_cast<double>(per_seed_rate.size());
  double stderr_val;
  if (per_seed_rate.size() > 1) {
    double var = 0.0;
    for (double r : per_seed_rate) var += (r - mean) * (r - mean);
    var /= static_cast<double>(per_seed_rate.size() - 1);
    stderr_val = std::sqrt(var / static_cast<double>(per_seed_rate.size()));
  } else {
    stderr_val = std::sqrt(mean * (1.0 - mean) / cfg.eval_trials);
  }

  RunResult result;
  result.summary = {{"mode", "eval"},       {"policy", cfg.eval_policy},
                    {"success_rate", mean}, {"stderr", stderr_val},
                    {"seeds", per_seed},    {"trials_per_seed", cfg.eval_trials}};
  if (!bins.empty()) {
    nlohmann::json jb;
    for (const auto& [name, sn] : bins) {
      jb[name] = {{"success_rate", static_cast<double>(sn.first) / sn.second},
                  {"trials", sn.second}};
    }
    result.summary["bins"] = jb;
  }
  open_out(fs::path(cfg.out_dir) / "summary.json") << result.summary.dump(2) << "\n";
  return result;
}

RunResult run_heatmap(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  if (cfg.ref_state.empty()) throw ConfigError("heatmap.ref_state: required");
  RunResult result;
  fs::path out_path = fs::path(cfg.out_dir) / "heatmap.csv";
  if (cfg.analytic) {
    Rng root(cfg.seed);
    World w = build_world(cfg, root, "");
    SrMatrices sr = analytic_sr(*w.env, cfg.analytic_gamma);
    AnalyticSfProvider provider(sr);
    std::ofstream out = open_out(out_path);
    write_sfs_heatmap(*w.env, provider, resolve_state(*w.env, cfg.ref_state), out,
                      cfg.hash());
  } else {
    if (cfg.checkpoint.empty()) {
      throw ConfigError("run.checkpoint: required for heatmap mode (or set heatmap.analytic)");
    }
    Rng root(cfg.seed);
    LoadedRun run = load_run(cfg.checkpoint, root);
    std::ofstream out = open_out(out_path);
    write_sfs_heatmap(*run.world.env, *run.provider,
                      resolve_state(*run.world.env, cfg.ref_state), out, cfg.hash());
  }
  result.summary = {{"mode", "heatmap"}, {"file", out_path.string()}};
  return result;
}

RunResult run_export_graph(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw ConfigError("run.checkpoint: required for export-graph");
  fs::create_directories(cfg.out_dir);
  Rng root(cfg.seed);
  LoadedRun run = load_run(cfg.checkpoint, root);
  fs::path out_path = fs::path(cfg.out_dir) / "graph.dot";
  std::ofstream out = open_out(out_path);
  run.graph->write_dot(out, run.global_step, cfg.hash());
  RunResult result;
  result.summary = {{"mode", "export-graph"},
                    {"file", out_path.string()},
                    {"num_landmarks", run.graph->size()}};
  return result;
}

RunResult run_coverage(const RunConfig& cfg) {
  if (cfg.visits_file.empty()) throw ConfigError("input.visits: required for coverage mode");
  Rng root(cfg.seed);
  World w = build_world(cfg, root, "");
  std::ifstream in(cfg.visits_file);
  if (!in) throw std::runtime_error("cannot open visits file: " + cfg.visits_file);
  std::string line;
  int covered = 0;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("x,", 0) == 0) continue;
    std::istringstream ls(line);
    std::string xs, ys, cs;
    std::getline(ls, xs, ',');
    std::getline(ls, ys, ',');
    std::getline(ls, cs);
    ++rows;
    if (std::stol(cs) > 0) ++covered;
  }
  if (rows == 0) throw std::runtime_error("visits file has no data rows");
  double pct = 100.0 * covered / w.env->num_cells();
  RunResult result;
  result.summary = {{"mode", "coverage"},
                    {"covered_cells", covered},
                    {"reachable_cells", w.env->num_cells()},
                    {"coverage_pct", pct}};
  return result;
}

RunResult run_replay(const RunConfig& cfg) {
  if (cfg.trace_file.empty()) throw ConfigError("input.trace: required for replay mode");
  Rng root(cfg.seed);
  World w = build_world(cfg, root, "");
  std::ifstream in(cfg.trace_file);
  if (!in) throw std::runtime_error("cannot open trace file: " + cfg.trace_file);
  std::string line;
  long episodes = 0;
  long steps = 0;
  long mismatches = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    if (!j.contains("transitions")) continue;  // header record
    ++episodes;
    for (const auto& t : j["transitions"]) {
      int s = t.at("s").get<int>();
      int a = t.at("a").get<int>();
      int ns = t.at("ns").get<int>();
      ++steps;
      if (w.env->step(s, a).next_state != ns) ++mismatches;
    }
  }
  RunResult result;
  result.exit_code = mismatches == 0 ? 0 : 1;
  result.summary = {{"mode", "replay"},
                    {"episodes", episodes},
                    {"steps", steps},
                    {"mismatches", mismatches},
                    {"verified", mismatches == 0}};
  return result;
}

}  // namespace

RunResult run(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.mode == "train") return run_train(cfg);
  if (cfg.mode == "eval") return run_eval(cfg);
  if (cfg.mode == "heatmap") return run_heatmap(cfg);
  if (cfg.mode == "export-graph") return run_export_graph(cfg);
  if (cfg.mode == "coverage") return run_coverage(cfg);
  if (cfg.mode == "replay") return run_replay(cfg);
  throw ConfigError("unknown mode: " + cfg.mode);
}

}  // namespace sfl
