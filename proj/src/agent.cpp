#include "sfl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <thread>

namespace sfl {

namespace {

bool same_coords(const Env& env, int a, int b) {
  StateCoords ca = env.coords(a);
  StateCoords cb = env.coords(b);
  return ca.x == cb.x && ca.y == cb.y && ca.heading == cb.heading;
}

std::vector<std::vector<double>> action_sfs(const SfProvider& provider, int state) {
  std::vector<std::vector<double>> out;
  out.reserve(provider.num_actions());
  for (int a = 0; a < provider.num_actions(); ++a) {
    out.push_back(provider.state_action_sf(state, a));
  }
  return out;
}

}  // namespace

nlohmann::json EpisodeTrace::to_json() const {
  nlohmann::json j;
  j["episode"] = episode;
  j["start_state"] = start_state;
  j["frontier_id"] = frontier_id;
  j["success"] = success;
  j["transitions"] = nlohmann::json::array();
  for (const auto& t : transitions) {
    j["transitions"].push_back(
        {{"s", t.state},
         {"a", t.action},
         {"ns", t.next_state},
         {"tag", t.tag == PolicyTag::Random ? "random" : "goal"}});
  }
  j["plans"] = nlohmann::json::array();
  for (const auto& p : plans) {
    j["plans"].push_back({{"step", p.step}, {"waypoints", p.waypoints}, {"weight", p.weight}});
  }
  j["localizations"] = nlohmann::json::array();
  for (const auto& l : localizations) {
    j["localizations"].push_back({{"step", l.step}, {"landmark", l.landmark}, {"value", l.value}});
  }
  return j;
}

std::vector<double> frontier_weights(const LandmarkGraph& graph, double temperature) {
  std::vector<double> w;
  w.reserve(graph.size());
  for (int i = 0; i < graph.size(); ++i) {
    long count = std::max<long>(1, graph.landmark(i).visit_count);
    w.push_back(std::exp(1.0 / (static_cast<double>(count) * temperature)));
  }
  double total = 0.0;
  for (double x : w) total += x;
  for (double& x : w) x /= total;
  return w;
}

int sample_frontier(const LandmarkGraph& graph, Rng& rng, double temperature) {
  if (graph.empty()) throw std::logic_error("sample_frontier: empty graph");
  std::vector<double> w = frontier_weights(graph, temperature);
  double u = rng.uniform();
  double acc = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (u < acc) return static_cast<int>(i);
  }
  return graph.size() - 1;
}

double coverage_percent(const std::vector<long>& cell_visits, int reachable_cells) {
  int covered = 0;
  for (long c : cell_visits) {
    if (c > 0) ++covered;
  }
  return 100.0 * static_cast<double>(covered) / static_cast<double>(reachable_cells);
}

std::vector<int> geodesic_to(const Env& env, int to) {
  int n = env.num_states();
  std::vector<std::vector<int>> rev(n);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < env.num_actions(); ++a) {
      rev[env.step(s, a).next_state].push_back(s);
    }
  }
  std::vector<int> dist(n, -1);
  dist[to] = 0;
  std::deque<int> queue{to};
  while (!queue.empty()) {
    int s = queue.front();
    queue.pop_front();
    for (int prev : rev[s]) {
      if (dist[prev] < 0) {
        dist[prev] = dist[s] + 1;
        queue.push_back(prev);
      }
    }
  }
  return dist;
}

Agent::Agent(const Env& env, SfLearner& learner, const SfProvider& provider,
             LandmarkGraph& graph, AgentConfig cfg, SfsConfig sfs_cfg, Rng rng)
    : env_(env),
      learner_(learner),
      provider_(provider),
      graph_(graph),
      cfg_(std::move(cfg)),
      sfs_cfg_(sfs_cfg),
      rng_env_(rng.split("agent-env")),
      rng_policy_(rng.split("agent-policy")),
      rng_frontier_(rng.split("agent-frontier")),
      rng_sampler_(rng.split("agent-sampler")),
      ctx_(sfs_cfg.window),
      env_state_(env.start_state()),
      cell_visits_(env.num_cells(), 0) {}

bool Agent::episode_done() const { return episode_steps_ >= env_.episode_limit(); }

double Agent::coverage_pct() const {
  return coverage_percent(cell_visits_, env_.num_cells());
}

void Agent::housekeeping() {
  const GraphConfig& g = graph_.config();
  if (global_step_ - last_flush_ >= g.n_add) {
    graph_.flush_candidates(provider_, env_, global_step_);
    last_flush_ = global_step_;
  }
  if (global_step_ - last_refresh_ >= g.n_update) {
    graph_.refresh_landmark_sfs(provider_);
    last_refresh_ = global_step_;
  }
  if (global_step_ - last_edges_ >= g.n_form_edges) {
    edges_cache_ = graph_.derive_edges(global_step_);
    last_edges_ = global_step_;
  }
}

int Agent::take_action(int action, PolicyTag tag, EpisodeTrace* trace) {
  StepResult r = env_.step(env_state_, action);
  if (tag == PolicyTag::Random) {
    learner_.buffer().append({env_state_, action, r.reward, r.next_state, r.done, tag});
  }
  if (trace) trace->transitions.push_back({env_state_, action, r.next_state, tag});
  env_state_ = r.next_state;
  ++global_step_;
  ++episode_steps_;
  cell_visits_[env_.cell_of(env_state_)] += 1;
  Localization loc = graph_.observe(provider_, env_, env_state_, ctx_, global_step_);
  if (trace && loc.localized) {
    trace->localizations.push_back({global_step_, loc.landmark, loc.value});
  }
  housekeeping();
  return action;
}

int Agent::greedy_toward(const std::vector<double>& goal_sf, double epsilon) {
  std::vector<double> q = goal_q(action_sfs(provider_, env_state_), goal_sf,
                                 sfs_cfg_.normalize);
  return greedy_action(q, epsilon, rng_policy_);
}

TraverseResult Agent::traverse(int target_id, int budget, double epsilon,
                               EpisodeTrace* trace) {
  TraverseResult result;
  result.final_landmark = ctx_.l_prev.value_or(-1);
  if (ctx_.l_prev.has_value() && *ctx_.l_prev == target_id) {
    result.reached = true;
    return result;
  }
  std::vector<double> goal_sf =
      provider_.state_sf(graph_.landmark(target_id).snapshot_state);
  while (result.steps < budget && !episode_done()) {
    take_action(greedy_toward(goal_sf, epsilon), PolicyTag::GoalConditioned, trace);
    ++result.steps;
    if (ctx_.l_prev.has_value()) {
      result.final_landmark = *ctx_.l_prev;
      if (*ctx_.l_prev == target_id) {
        result.reached = true;
        return result;
      }
    }
  }
  return result;
}

void Agent::reset_episode() {
  env_state_ = cfg_.spawn == "random" ? env_.random_state(rng_env_) : env_.start_state();
  episode_steps_ = 0;
  ctx_.reset();
  cell_visits_[env_.cell_of(env_state_)] += 1;
}

void Agent::run_td_phase(EpisodeStats& stats) {
  const SfConfig& sc = learner_.config();
  if (learner_.buffer().size() < sc.batch) return;
  bool updated = false;
  while (global_step_ - last_td_ >= sc.update_interval_steps) {
    stats.td_loss = learner_.train_step();
    stats.td_batches += 1;
    last_td_ += sc.update_interval_steps;
    updated = true;
  }
  // Stale caches would break exact-match localization for the rest of the
  // episode, so refresh them as soon as theta moves.
  if (updated && graph_.config().refresh_after_td) {
    graph_.refresh_landmark_sfs(provider_);
  }
}

void Agent::run_parallel_samplers() {
  int extra = learner_.config().samplers - 1;
  if (extra <= 0) return;
  int walk_len = cfg_.n_explore;
  std::vector<std::vector<Transition>> walks(extra);
  std::vector<std::thread> threads;
  threads.reserve(extra);
  for (int i = 0; i < extra; ++i) {
    Rng walk_rng = rng_sampler_.split("sampler-" + std::to_string(i) + "-" +
                                      std::to_string(episode_index_));
    threads.emplace_back([this, i, walk_len, walk_rng, &walks]() mutable {
      int s = env_.start_state();
      for (int t = 0; t < walk_len; ++t) {
        int a = static_cast<int>(walk_rng.uniform_below(env_.num_actions()));
        StepResult r = env_.step(s, a);
        walks[i].push_back({s, a, r.reward, r.next_state, r.done, PolicyTag::Random});
        s = r.next_state;
      }
    });
  }
  // Join and append in sampler order so the buffer contents stay
  // deterministic regardless of thread scheduling.
  for (auto& t : threads) t.join();
  for (const auto& walk : walks) {
    learner_.buffer().begin_episode();
    for (const auto& tr : walk) learner_.buffer().append(tr);
  }
}

EpisodeStats Agent::explore_episode(EpisodeTrace* trace) {
  reset_episode();
  if (trace) {
    trace->episode = episode_index_;
    trace->start_state = env_state_;
  }

  // The spawn state is part of the trajectory; an empty graph bootstraps here.
  graph_.observe(provider_, env_, env_state_, ctx_, global_step_);

  EpisodeStats stats;
  while (!episode_done()) {
    // Frontier phase: pick a rarely-visited landmark and travel to it.
    int frontier = cfg_.frontier_mode == "uniform"
                       ? static_cast<int>(rng_frontier_.uniform_below(graph_.size()))
                       : sample_frontier(graph_, rng_frontier_, cfg_.temperature);
    stats.frontier_id = frontier;
    if (trace) trace->frontier_id = frontier;

    int l_curr = ctx_.l_prev.value_or(-1);
    if (l_curr < 0) {
      // Not gated anywhere yet; plan from the raw argmax landmark.
      l_curr = graph_.localize(graph_.sfs_row(provider_, env_state_)).landmark;
    }

    bool reached = l_curr == frontier;
    if (!reached) {
      std::optional<Plan> plan =
          shortest_path(edges_cache_, graph_.size(), l_curr, frontier, global_step_);
      for (int retry = 0; !plan.has_value() && retry < 4; ++retry) {
        frontier = cfg_.frontier_mode == "uniform"
                       ? static_cast<int>(rng_frontier_.uniform_below(graph_.size()))
                       : sample_frontier(graph_, rng_frontier_, cfg_.temperature);
        stats.frontier_id = frontier;
        if (frontier == l_curr) break;
        plan = shortest_path(edges_cache_, graph_.size(), l_curr, frontier, global_step_);
      }
      reached = l_curr == frontier;

      if (plan.has_value()) {
        if (trace) {
          trace->plans.push_back({global_step_, plan->waypoints, plan->total_weight});
        }
        long overall =
            std::min<long>(cfg_.n_front,
                           static_cast<long>(cfg_.n_land) *
                               static_cast<long>(plan->waypoints.size()));
        long used = 0;
        while (!reached && used < overall && !episode_done()) {
          NextWaypoint nw = next_waypoint(*plan, l_curr);
          if (nw.kind == WaypointStep::Done) {
            reached = true;
            break;
          }
          if (nw.kind == WaypointStep::Replan) {
            plan = shortest_path(edges_cache_, graph_.size(), l_curr, frontier,
                                 global_step_);
            if (!plan.has_value()) break;
            if (trace) {
              trace->plans.push_back({global_step_, plan->waypoints, plan->total_weight});
            }
            continue;
          }
          int leg_from = l_curr;
          int leg_budget = static_cast<int>(std::min<long>(cfg_.n_land, overall - used));
          TraverseResult leg =
              traverse(nw.landmark, leg_budget, sfs_cfg_.epsilon_train, trace);
          used += leg.steps;
          if (leg.reached) {
            l_curr = nw.landmark;
            if (l_curr == frontier) reached = true;
          } else if (leg.final_landmark >= 0 && leg.final_landmark != leg_from) {
            l_curr = leg.final_landmark;  // drifted; next_waypoint decides
          } else {
            graph_.record_failure(leg_from, nw.landmark, global_step_);
            // Replanning must see the failure, so the edge view is rebuilt
            // immediately rather than waiting for the n_form_edges cadence.
            edges_cache_ = graph_.derive_edges(global_step_);
            plan = shortest_path(edges_cache_, graph_.size(), l_curr, frontier,
                                 global_step_);
            if (!plan.has_value()) break;
            if (trace) {
              trace->plans.push_back({global_step_, plan->waypoints, plan->total_weight});
            }
          }
        }
      }
    }
    stats.frontier_reached = stats.frontier_reached || reached;

    // Local random exploration; these transitions train the SF.
    learner_.buffer().begin_episode();
    for (int t = 0; t < cfg_.n_explore && !episode_done(); ++t) {
      int a = static_cast<int>(rng_policy_.uniform_below(env_.num_actions()));
      take_action(a, PolicyTag::Random, trace);
    }
    run_parallel_samplers();
    run_td_phase(stats);
  }

  if (trace) trace->success = stats.frontier_reached;
  stats.end_step = global_step_;
  stats.steps = episode_steps_;
  stats.num_landmarks = graph_.size();
  for (const auto& e : graph_.derive_edges(global_step_)) {
    if (e.active()) ++stats.num_edges;
  }
  stats.coverage_pct = coverage_pct();
  ++episode_index_;
  return stats;
}

EvalResult evaluate_trial(const Env& env, const SfProvider& provider,
                          const LandmarkGraph& graph, const AgentConfig& cfg,
                          const SfsConfig& sfs_cfg, long now_step, int start_state,
                          int goal_state, int budget, const std::string& policy,
                          Rng& rng, EpisodeTrace* trace) {
  EvalResult result;
  int state = start_state;
  if (trace) trace->start_state = start_state;
  if (same_coords(env, state, goal_state)) {
    result.success = true;
    return result;
  }

  auto step_with = [&](int action) {
    StepResult r = env.step(state, action);
    if (trace) trace->transitions.push_back({state, action, r.next_state,
                                             PolicyTag::GoalConditioned});
    state = r.next_state;
    ++result.steps;
    if (same_coords(env, state, goal_state)) result.success = true;
  };

  if (policy == "random") {
    while (result.steps < budget && !result.success) {
      step_with(static_cast<int>(rng.uniform_below(env.num_actions())));
    }
    return result;
  }
  if (policy == "oracle") {
    std::vector<int> dist = geodesic_to(env, goal_state);
    while (result.steps < budget && !result.success) {
      int best = 0;
      int best_d = -1;
      for (int a = 0; a < env.num_actions(); ++a) {
        int d = dist[env.step(state, a).next_state];
        if (d >= 0 && (best_d < 0 || d < best_d)) {
          best_d = d;
          best = a;
        }
      }
      if (best_d < 0) break;  // goal unreachable from here
      step_with(best);
    }
    return result;
  }

  std::vector<double> goal_sf = provider.state_sf(goal_state);
  auto pursue_goal = [&](int limit) {
    while (result.steps < budget && result.steps < limit && !result.success) {
      std::vector<double> q =
          goal_q(action_sfs(provider, state), goal_sf, sfs_cfg.normalize);
      step_with(greedy_action(q, sfs_cfg.epsilon_eval, rng));
    }
  };
  if (policy == "greedy") {
    pursue_goal(budget);
    return result;
  }
  if (policy != "sfl") throw std::invalid_argument("unknown eval policy: " + policy);

  if (graph.empty()) {
    pursue_goal(budget);
    return result;
  }

  // Temporary goal node: edges from the k_goal highest-SFS landmarks.
  int goal_node = graph.size();
  std::vector<GraphEdge> edges =
      LandmarkGraph::active_edges(graph.derive_edges(now_step));
  {
    std::vector<std::pair<double, int>> scored;
    for (int i = 0; i < graph.size(); ++i) {
      scored.emplace_back(sfs(graph.landmark(i).sf_cache, goal_sf, sfs_cfg.normalize), i);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    int k = std::min<int>(cfg.k_goal, static_cast<int>(scored.size()));
    for (int i = 0; i < k; ++i) {
      GraphEdge e;
      e.from = scored[i].second;
      e.to = goal_node;
      e.count = 1;
      e.weight = std::exp(-1.0);
      edges.push_back(std::move(e));
    }
  }

  EpisodeContext ctx(sfs_cfg.window);
  auto localize_here = [&]() { return graph.observe_readonly(provider, state, ctx); };

  Localization loc = localize_here();
  int l_curr = loc.landmark;

  while (result.steps < budget && !result.success) {
    std::optional<Plan> plan =
        shortest_path(edges, graph.size() + 1, l_curr, goal_node, now_step);
    if (!plan.has_value()) {
      pursue_goal(budget);
      return result;
    }
    if (trace) trace->plans.push_back({now_step, plan->waypoints, plan->total_weight});

    bool replan = false;
    while (!replan && result.steps < budget && !result.success) {
      NextWaypoint nw = next_waypoint(*plan, l_curr);
      if (nw.kind == WaypointStep::Done) break;  // at the last real waypoint
      if (nw.kind == WaypointStep::Replan) {
        replan = true;
        break;
      }
      bool final_leg = nw.landmark == goal_node;
      std::vector<double> leg_sf =
          final_leg ? goal_sf
                    : provider.state_sf(graph.landmark(nw.landmark).snapshot_state);
      int leg_steps = 0;
      bool leg_done = false;
      while (leg_steps < cfg.n_land && result.steps < budget && !result.success) {
        std::vector<double> q =
            goal_q(action_sfs(provider, state), leg_sf, sfs_cfg.normalize);
        step_with(greedy_action(q, sfs_cfg.epsilon_eval, rng));
        ++leg_steps;
        if (result.success) return result;
        Localization here = localize_here();
        if (here.localized) {
          if (!final_leg && here.landmark == nw.landmark) {
            l_curr = nw.landmark;
            leg_done = true;
            break;
          }
          if (here.landmark != l_curr) {
            l_curr = here.landmark;
            leg_done = true;  // drifted; next_waypoint decides
            break;
          }
        }
      }
      if (!leg_done && !result.success) replan = true;  // leg budget expired
    }
    if (!replan) {
      // Plan exhausted without reaching the exact goal; fall back to direct
      // pursuit for the remaining budget.
      pursue_goal(budget);
      return result;
    }
  }
  return result;
}

}  // namespace sfl
