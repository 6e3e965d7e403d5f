#include "sfl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace sfl {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

long to_long(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected boolean, got '" + v + "'");
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  if (trim(v).empty()) return out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    out.push_back(static_cast<int>(to_long(key, trim(item))));
  }
  return out;
}

std::string from_int_list(const std::vector<int>& v) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    os << v[i];
  }
  return os.str();
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define STR_FIELD(key, member)                                    \
  {key, [](const RunConfig& c) { return c.member; },              \
   [](RunConfig& c, const std::string& v) { c.member = v; }}
#define LONG_FIELD(key, member)                                              \
  {key, [](const RunConfig& c) { return std::to_string(c.member); },         \
   [](RunConfig& c, const std::string& v) {                                  \
     c.member = static_cast<decltype(c.member)>(to_long(key, v));            \
   }}
#define DOUBLE_FIELD(key, member)                                   \
  {key, [](const RunConfig& c) { return format_double(c.member); }, \
   [](RunConfig& c, const std::string& v) { c.member = to_double(key, v); }}
#define BOOL_FIELD(key, member)                                           \
  {key, [](const RunConfig& c) { return c.member ? "true" : "false"; },   \
   [](RunConfig& c, const std::string& v) { c.member = to_bool(key, v); }}
#define INTLIST_FIELD(key, member)                                        \
  {key, [](const RunConfig& c) { return from_int_list(c.member); },       \
   [](RunConfig& c, const std::string& v) { c.member = to_int_list(key, v); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      STR_FIELD("run.mode", mode),
      STR_FIELD("run.map", map),
      {"run.seed", [](const RunConfig& c) { return std::to_string(c.seed); },
       [](RunConfig& c, const std::string& v) {
         c.seed = static_cast<uint64_t>(to_long("run.seed", v));
       }},
      LONG_FIELD("run.steps", steps),
      STR_FIELD("run.out_dir", out_dir),
      STR_FIELD("run.checkpoint", checkpoint),
      STR_FIELD("run.env", env_kind),
      LONG_FIELD("env.episode_limit", episode_limit),
      LONG_FIELD("env.state_cap", state_cap),
      LONG_FIELD("env.chain_length", chain_length),
      STR_FIELD("encoder.mode", encoder.mode),
      DOUBLE_FIELD("encoder.alpha", encoder.alpha),
      LONG_FIELD("encoder.feature_dim", encoder.feature_dim),
      INTLIST_FIELD("encoder.hidden", encoder.hidden),
      DOUBLE_FIELD("encoder.margin", encoder.margin),
      LONG_FIELD("encoder.positive_window", encoder.positive_window),
      LONG_FIELD("encoder.negative_near", encoder.negative_near),
      LONG_FIELD("encoder.negative_far", encoder.negative_far),
      DOUBLE_FIELD("encoder.lr", encoder.lr),
      LONG_FIELD("encoder.batch", encoder.batch),
      LONG_FIELD("encoder.pretrain_steps", encoder.pretrain_steps),
      BOOL_FIELD("encoder.co_train", encoder.co_train),
      INTLIST_FIELD("sf.hidden", sf.hidden),
      DOUBLE_FIELD("sf.lr", sf.lr),
      LONG_FIELD("sf.batch", sf.batch),
      LONG_FIELD("sf.n_step", sf.n_step),
      LONG_FIELD("sf.buffer_capacity", sf.buffer_capacity),
      DOUBLE_FIELD("sf.gamma", sf.gamma),
      LONG_FIELD("sf.target_update_interval", sf.target_update_interval),
      DOUBLE_FIELD("sf.grad_clip", sf.grad_clip),
      LONG_FIELD("sf.update_interval_steps", sf.update_interval_steps),
      LONG_FIELD("sf.samplers", sf.samplers),
      BOOL_FIELD("sfs.normalize", sfs.normalize),
      LONG_FIELD("sfs.window", sfs.window),
      DOUBLE_FIELD("sfs.epsilon_train", sfs.epsilon_train),
      DOUBLE_FIELD("sfs.epsilon_eval", sfs.epsilon_eval),
      DOUBLE_FIELD("graph.delta_add", graph.delta_add),
      DOUBLE_FIELD("graph.delta_local", graph.delta_local),
      STR_FIELD("graph.edge_threshold_mode", graph.edge_threshold_mode),
      DOUBLE_FIELD("graph.delta_edge", graph.delta_edge),
      LONG_FIELD("graph.landmark_cap", graph.landmark_cap),
      DOUBLE_FIELD("graph.tau_temporal", graph.tau_temporal),
      LONG_FIELD("graph.k_nearest", graph.k_nearest),
      LONG_FIELD("graph.failure_forget_window", graph.failure_forget_window),
      BOOL_FIELD("graph.temporal_filter", graph.temporal_filter),
      BOOL_FIELD("graph.knn_filter", graph.knn_filter),
      LONG_FIELD("graph.n_cand", graph.n_cand),
      LONG_FIELD("graph.n_add", graph.n_add),
      LONG_FIELD("graph.n_update", graph.n_update),
      LONG_FIELD("graph.n_form_edges", graph.n_form_edges),
      BOOL_FIELD("graph.refresh_after_td", graph.refresh_after_td),
      LONG_FIELD("agent.n_front", agent.n_front),
      LONG_FIELD("agent.n_explore", agent.n_explore),
      LONG_FIELD("agent.n_land", agent.n_land),
      DOUBLE_FIELD("agent.temperature", agent.temperature),
      STR_FIELD("agent.frontier_mode", agent.frontier_mode),
      STR_FIELD("agent.spawn", agent.spawn),
      LONG_FIELD("agent.k_goal", agent.k_goal),
      LONG_FIELD("eval.trials", eval_trials),
      STR_FIELD("eval.goal", eval_goal),
      LONG_FIELD("eval.budget", eval_budget),
      STR_FIELD("eval.policy", eval_policy),
      STR_FIELD("heatmap.ref_state", ref_state),
      BOOL_FIELD("heatmap.analytic", analytic),
      DOUBLE_FIELD("heatmap.gamma", analytic_gamma),
      BOOL_FIELD("output.traces", write_traces),
      STR_FIELD("input.visits", visits_file),
      STR_FIELD("input.trace", trace_file),
  };
  return kFields;
}

#undef STR_FIELD
#undef LONG_FIELD
#undef DOUBLE_FIELD
#undef BOOL_FIELD
#undef INTLIST_FIELD

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(*this, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::string RunConfig::get(const std::string& key) const {
  for (const auto& f : fields()) {
    if (f.key == key) return f.get(*this);
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.key);
  return out;
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config file line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    set(key, value);
  }
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  std::string section;
  for (const auto& f : fields()) {
    std::string sec = f.key.substr(0, f.key.find('.'));
    if (sec != section) {
      section = sec;
      os << '[' << section << "]\n";
    }
    os << f.key.substr(f.key.find('.') + 1) << " = " << f.get(*this) << "\n";
  }
  return os.str();
}

uint64_t RunConfig::hash() const {
  // The output directory does not change what a run computes, so it stays
  // out of the identity hash.
  std::istringstream in(canonical());
  std::ostringstream filtered;
  std::string line;
  std::string section;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() == '[') section = line;
    if (section == "[run]" && line.rfind("out_dir ", 0) == 0) continue;
    filtered << line << '\n';
  }
  return fnv1a64(filtered.str());
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(mode == "train" || mode == "eval" || mode == "heatmap" ||
              mode == "export-graph" || mode == "coverage" || mode == "replay",
          "run.mode: unknown mode '" + mode + "'");
  require(env_kind == "grid" || env_kind == "chain",
          "run.env: must be 'grid' or 'chain'");
  require(encoder.mode == "onehot" || encoder.mode == "learned",
          "encoder.mode: must be 'onehot' or 'learned'");
  require(encoder.alpha > 0, "encoder.alpha: must be > 0");
  require(sf.gamma > 0 && sf.gamma < 1, "sf.gamma: must be in (0, 1)");
  require(sf.n_step >= 1, "sf.n_step: must be >= 1");
  require(sf.batch >= 1, "sf.batch: must be >= 1");
  require(sf.samplers >= 1, "sf.samplers: must be >= 1");
  require(sfs.window >= 1, "sfs.window: must be >= 1");
  require(sfs.epsilon_train >= 0 && sfs.epsilon_train <= 1,
          "sfs.epsilon_train: must be in [0, 1]");
  require(sfs.epsilon_eval >= 0 && sfs.epsilon_eval <= 1,
          "sfs.epsilon_eval: must be in [0, 1]");
  require(graph.edge_threshold_mode == "fixed" || graph.edge_threshold_mode == "median",
          "graph.edge_threshold_mode: must be 'fixed' or 'median'");
  require(graph.landmark_cap >= 1, "graph.landmark_cap: must be >= 1");
  require(graph.n_cand >= 1, "graph.n_cand: must be >= 1");
  require(graph.n_add >= 1 && graph.n_update >= 1 && graph.n_form_edges >= 1,
          "graph cadences must be >= 1");
  require(agent.n_front >= 1 && agent.n_explore >= 1 && agent.n_land >= 1,
          "agent budgets must be >= 1");
  require(agent.frontier_mode == "count" || agent.frontier_mode == "uniform",
          "agent.frontier_mode: must be 'count' or 'uniform'");
  require(agent.spawn == "fixed" || agent.spawn == "random",
          "agent.spawn: must be 'fixed' or 'random'");
  require(eval_policy == "sfl" || eval_policy == "greedy" || eval_policy == "random" ||
              eval_policy == "oracle",
          "eval.policy: unknown policy '" + eval_policy + "'");
  // eval/export/heatmap-from-checkpoint rebuild the world from the
  // checkpoint's embedded map; the others need one up front.
  bool needs_map = mode == "train" || mode == "coverage" || mode == "replay" ||
                   (mode == "heatmap" && analytic);
  if (env_kind == "grid" && needs_map) {
    require(!map.empty(), "run.map: required for grid runs");
  }
}

StateCoords parse_coords(const std::string& text) {
  std::istringstream in(text);
  std::string xs, ys, hs;
  if (!std::getline(in, xs, ',') || !std::getline(in, ys, ',') || !std::getline(in, hs)) {
    throw ConfigError("state coordinate: expected 'x,y,H', got '" + text + "'");
  }
  StateCoords c;
  c.x = static_cast<int>(to_long("state x", trim(xs)));
  c.y = static_cast<int>(to_long("state y", trim(ys)));
  std::string h = trim(hs);
  if (h == "N" || h == "n") c.heading = 0;
  else if (h == "E" || h == "e") c.heading = 1;
  else if (h == "S" || h == "s") c.heading = 2;
  else if (h == "W" || h == "w") c.heading = 3;
  else c.heading = static_cast<int>(to_long("state heading", h));
  if (c.heading < 0 || c.heading > 3) {
    throw ConfigError("state heading out of range in '" + text + "'");
  }
  return c;
}

}  // namespace sfl
