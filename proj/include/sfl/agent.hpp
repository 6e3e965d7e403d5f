#pragma once

#include <string>
#include <vector>

#include "sfl/env.hpp"
#include "sfl/landmarks.hpp"
#include "sfl/planner.hpp"
#include "sfl/similarity.hpp"
#include "sfl/successor.hpp"

#include "json.hpp"

namespace sfl {

struct AgentConfig {
  int n_front = 40;    // step budget toward the frontier per cycle
  int n_explore = 40;  // random-walk steps after the frontier phase
  int n_land = 8;      // per-leg budget; overall limit n_land * path length
  double temperature = 1.0;
  std::string frontier_mode = "count";  // count | uniform
  std::string spawn = "fixed";          // fixed | random
  int k_goal = 5;  // synthesized edges into a temporary goal node
};

struct TransitionRecord {
  int state;
  int action;
  int next_state;
  PolicyTag tag;
};

struct EpisodeTrace {
  int episode = 0;
  int start_state = 0;
  std::vector<TransitionRecord> transitions;
  struct PlanRecord {
    long step;
    std::vector<int> waypoints;
    double weight;
  };
  std::vector<PlanRecord> plans;
  struct LocalizationRecord {
    long step;
    int landmark;
    double value;
  };
  std::vector<LocalizationRecord> localizations;
  int frontier_id = -1;
  bool success = false;

  nlohmann::json to_json() const;
};

struct EpisodeStats {
  long end_step = 0;
  int steps = 0;
  int frontier_id = -1;
  bool frontier_reached = false;
  int num_landmarks = 0;
  long num_edges = 0;
  double coverage_pct = 0.0;
  double td_loss = 0.0;
  int td_batches = 0;
};

// Softmax over exp((1/count) / temperature); zero counts behave as count 1.
std::vector<double> frontier_weights(const LandmarkGraph& graph, double temperature);
int sample_frontier(const LandmarkGraph& graph, Rng& rng, double temperature);

double coverage_percent(const std::vector<long>& cell_visits, int reachable_cells);

// Reverse breadth-first distances: minimal actions from every state to `to`.
std::vector<int> geodesic_to(const Env& env, int to);

struct TraverseResult {
  int steps = 0;
  bool reached = false;
  int final_landmark = -1;  // last gated localization, -1 if none
};

// Owns one training loop: frontier selection, planning, traversal, random
// exploration, graph bookkeeping cadences and TD updates.
class Agent {
 public:
  Agent(const Env& env, SfLearner& learner, const SfProvider& provider,
        LandmarkGraph& graph, AgentConfig cfg, SfsConfig sfs_cfg, Rng rng);

  EpisodeStats explore_episode(EpisodeTrace* trace = nullptr);

  // Goal-conditioned pursuit of a landmark; public for tests.
  TraverseResult traverse(int target_id, int budget, double epsilon,
                          EpisodeTrace* trace = nullptr);

  void reset_episode();
  long global_step() const { return global_step_; }
  int episode_count() const { return episode_index_; }
  int current_state() const { return env_state_; }
  const std::vector<long>& cell_visits() const { return cell_visits_; }
  double coverage_pct() const;
  const std::vector<GraphEdge>& current_edges() const { return edges_cache_; }
  EpisodeContext& context() { return ctx_; }

 private:
  int take_action(int action, PolicyTag tag, EpisodeTrace* trace);
  void housekeeping();
  void run_td_phase(EpisodeStats& stats);
  void run_parallel_samplers();
  bool episode_done() const;
  int greedy_toward(const std::vector<double>& goal_sf, double epsilon);

  const Env& env_;
  SfLearner& learner_;
  const SfProvider& provider_;
  LandmarkGraph& graph_;
  AgentConfig cfg_;
  SfsConfig sfs_cfg_;
  Rng rng_env_;
  Rng rng_policy_;
  Rng rng_frontier_;
  Rng rng_sampler_;
  EpisodeContext ctx_;
  int env_state_ = 0;
  long global_step_ = 0;
  int episode_steps_ = 0;
  int episode_index_ = 0;
  long last_flush_ = 0;
  long last_refresh_ = 0;
  long last_edges_ = 0;
  long last_td_ = 0;
  std::vector<GraphEdge> edges_cache_;
  std::vector<long> cell_visits_;
};

struct EvalResult {
  bool success = false;
  int steps = 0;
};

// One evaluation trial. The goal is inserted as a temporary node with
// synthesized edges from the k_goal highest-SFS landmarks; the graph itself
// is never mutated. policy: sfl | greedy | random | oracle.
EvalResult evaluate_trial(const Env& env, const SfProvider& provider,
                          const LandmarkGraph& graph, const AgentConfig& cfg,
                          const SfsConfig& sfs_cfg, long now_step, int start_state,
                          int goal_state, int budget, const std::string& policy,
                          Rng& rng, EpisodeTrace* trace = nullptr);

}  // namespace sfl
