#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfl/env.hpp"
#include "sfl/similarity.hpp"

#include "json.hpp"

namespace sfl {

struct GraphConfig {
  double delta_add = 0.99;
  double delta_local = 1.0;  // values >= 1 gate at 1 - 1e-9 (cosine tops out at 1)
  std::string edge_threshold_mode = "fixed";  // fixed | median
  double delta_edge = 1.0;
  int landmark_cap = 10;
  double tau_temporal = 0.1;
  int k_nearest = 5;
  long failure_forget_window = 80000;
  bool temporal_filter = false;
  bool knn_filter = false;
  int n_cand = 1;           // landmarks added per candidate flush
  long n_add = 3000;        // steps between candidate flushes
  long n_update = 1000;     // steps between landmark SF refreshes
  long n_form_edges = 1000; // steps between edge re-derivations
  bool refresh_after_td = true;
};

struct Landmark {
  int id = 0;
  int snapshot_state = 0;
  StateCoords coords;
  std::vector<double> sf_cache;
  long visit_count = 0;
  long added_at_step = 0;
};

struct GraphEdge {
  int from = 0;
  int to = 0;
  long count = 0;
  double weight = 0.0;
  std::vector<std::string> filtered_by;  // empty -> member of the active set E

  bool active() const { return filtered_by.empty(); }
};

struct Localization {
  int landmark = -1;
  double value = 0.0;
  bool localized = false;  // value cleared the gate
};

// Per-actor, per-episode localization state. Cleared at episode boundaries
// so stale cross-episode SFS cannot leak into localization.
struct EpisodeContext {
  explicit EpisodeContext(int window) : history(window) {}
  SfsHistory history;
  std::optional<int> l_prev;

  void reset() {
    history.clear();
    l_prev.reset();
  }
};

// Non-parametric landmark graph: landmarks are never removed, ids are dense
// in insertion order, and the edge set is a view derived from empirical
// transition counts plus the configured filters.
class LandmarkGraph {
 public:
  LandmarkGraph(GraphConfig cfg, SfsConfig sfs_cfg)
      : cfg_(std::move(cfg)), sfs_cfg_(sfs_cfg) {}

  const GraphConfig& config() const { return cfg_; }
  int size() const { return static_cast<int>(landmarks_.size()); }
  bool empty() const { return landmarks_.empty(); }
  const Landmark& landmark(int id) const { return landmarks_.at(id); }
  Landmark& mutable_landmark(int id) { return landmarks_.at(id); }

  // Raw SFS of a state against every landmark cache.
  std::vector<double> sfs_row(const SfProvider& provider, int state) const;

  // argmax over an aggregated SFS vector plus the delta_local gate. Empty
  // graph yields {-1, 0, false}, distinct from a below-threshold argmax.
  Localization localize(std::span<const double> aggregated) const;

  // Per-state body of the graph update: push history, localize, enqueue an
  // add candidate when below delta_add, record landmark transitions and
  // visits when gated.
  Localization observe(const SfProvider& provider, const Env& env, int state,
                       EpisodeContext& ctx, long global_step);

  // History + localization only; the evaluation path uses this so trials
  // never mutate the graph.
  Localization observe_readonly(const SfProvider& provider, int state,
                                EpisodeContext& ctx) const;

  // Batch form over a trajectory of state ids.
  void graph_update(const SfProvider& provider, const Env& env,
                    std::span<const int> states, EpisodeContext& ctx, long step_base);

  // First observed state becomes landmark 0 unconditionally.
  int bootstrap(const SfProvider& provider, const Env& env, int state, long step);

  // Direct insertion; normal growth goes through the candidate buffer.
  int add_landmark(const SfProvider& provider, const Env& env, int state, long step);

  // Moves up to n_cand buffered candidates into the landmark set, re-checking
  // separation against the current set; returns how many were added.
  int flush_candidates(const SfProvider& provider, const Env& env, long step);
  int pending_candidates() const { return static_cast<int>(candidates_.size()); }

  void refresh_landmark_sfs(const SfProvider& provider);

  void record_failure(int from, int to, long step);

  // Median of positive transition counts, or the fixed configured value.
  double edge_threshold() const;

  // Candidate edges (count > 0) annotated with the filters that removed
  // them; the active set E is the subset with no annotations.
  std::vector<GraphEdge> derive_edges(long now_step) const;
  static std::vector<GraphEdge> active_edges(const std::vector<GraphEdge>& edges);

  long transition_count(int from, int to) const;
  long total_transition_increments() const { return total_increments_; }
  const std::map<std::pair<int, int>, long>& transition_counts() const { return counts_; }

  void write_dot(std::ostream& out, long now_step, uint64_t config_hash) const;

  nlohmann::json to_json() const;
  static LandmarkGraph from_json(const nlohmann::json& j, GraphConfig cfg, SfsConfig sfs_cfg);

 private:
  bool gate(double value) const;

  struct Failure {
    int from;
    int to;
    long step;
  };
  struct Candidate {
    int state;
    double score;
  };

  GraphConfig cfg_;
  SfsConfig sfs_cfg_;
  std::vector<Landmark> landmarks_;
  std::map<std::pair<int, int>, long> counts_;
  std::vector<Failure> failures_;
  std::vector<Candidate> candidates_;
  long total_increments_ = 0;
};

}  // namespace sfl
