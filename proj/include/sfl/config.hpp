#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "sfl/agent.hpp"
#include "sfl/encoder.hpp"
#include "sfl/landmarks.hpp"
#include "sfl/similarity.hpp"
#include "sfl/successor.hpp"

namespace sfl {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Full run configuration. Every key is addressable as "section.name" for
// flag overrides and the INI-style config file; precedence is
// flags > file > defaults. Defaults follow the library's reference
// hyperparameter set for small gridworlds.
struct RunConfig {
  // [run]
  std::string mode = "train";  // train | eval | heatmap | export-graph | coverage | replay
  std::string map;
  uint64_t seed = 0;
  long steps = 200000;
  std::string out_dir = "out";
  std::string checkpoint;  // comma-separated list for eval over seeds
  std::string env_kind = "grid";  // grid | chain

  // [env]
  int episode_limit = 0;  // 0 = auto (100, or 40 * (doors + 1) with doors)
  long state_cap = 50000;
  int chain_length = 3;

  EncoderConfig encoder;
  SfConfig sf;
  SfsConfig sfs;
  GraphConfig graph;
  AgentConfig agent;

  // [eval]
  int eval_trials = 100;
  std::string eval_goal;  // "x,y,H"; empty = map goal cell, heading E
  int eval_budget = 0;    // 0 = episode limit
  std::string eval_policy = "sfl";

  // [heatmap]
  std::string ref_state;  // "x,y,H"
  bool analytic = false;  // analytic SR instead of a checkpoint
  double analytic_gamma = 0.95;

  // [output]
  bool write_traces = false;

  // [input] for coverage/replay modes
  std::string visits_file;
  std::string trace_file;

  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static std::vector<std::string> keys();

  void load_file(const std::string& path);
  std::string canonical() const;  // deterministic "key = value" dump
  uint64_t hash() const;
  void validate() const;
};

// "x,y,H" with H in {N,E,S,W}; also accepts a bare integer heading.
StateCoords parse_coords(const std::string& text);

}  // namespace sfl
