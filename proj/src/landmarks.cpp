#include "sfl/landmarks.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace sfl {

namespace {
constexpr double kExactGate = 1.0 - 1e-9;
}

std::vector<double> LandmarkGraph::sfs_row(const SfProvider& provider, int state) const {
  std::vector<double> state_sf = provider.state_sf(state);
  std::vector<double> row;
  row.reserve(landmarks_.size());
  for (const auto& lm : landmarks_) {
    row.push_back(sfs(state_sf, lm.sf_cache, sfs_cfg_.normalize));
  }
  return row;
}

bool LandmarkGraph::gate(double value) const {
  // Table-style configs use delta_local = 1, which a cosine can never
  // strictly exceed; treat it as an exact-match gate.
  if (cfg_.delta_local >= 1.0) return value >= kExactGate;
  return value > cfg_.delta_local;
}

Localization LandmarkGraph::localize(std::span<const double> aggregated) const {
  if (aggregated.empty()) return {};
  int best = 0;
  for (size_t i = 1; i < aggregated.size(); ++i) {
    if (aggregated[i] > aggregated[best]) best = static_cast<int>(i);
  }
  Localization loc;
  loc.landmark = best;
  loc.value = aggregated[best];
  loc.localized = gate(loc.value);
  return loc;
}

Localization LandmarkGraph::observe_readonly(const SfProvider& provider, int state,
                                             EpisodeContext& ctx) const {
  if (landmarks_.empty()) return {};
  ctx.history.push(sfs_row(provider, state));
  return localize(ctx.history.aggregate());
}

Localization LandmarkGraph::observe(const SfProvider& provider, const Env& env, int state,
                                    EpisodeContext& ctx, long global_step) {
  if (landmarks_.empty()) {
    bootstrap(provider, env, state, global_step);
    ctx.history.push(sfs_row(provider, state));
    Localization loc = localize(ctx.history.aggregate());
    if (loc.localized) {
      landmarks_[loc.landmark].visit_count += 1;
      ctx.l_prev = loc.landmark;
    }
    return loc;
  }

  ctx.history.push(sfs_row(provider, state));
  Localization loc = localize(ctx.history.aggregate());

  if (loc.value < cfg_.delta_add && size() < cfg_.landmark_cap) {
    auto it = std::find_if(candidates_.begin(), candidates_.end(),
                           [&](const Candidate& c) { return c.state == state; });
    if (it == candidates_.end()) {
      candidates_.push_back({state, loc.value});
    } else if (loc.value < it->score) {
      it->score = loc.value;
    }
  }

  if (loc.localized) {
    if (ctx.l_prev.has_value() && *ctx.l_prev != loc.landmark) {
      counts_[{*ctx.l_prev, loc.landmark}] += 1;
      ++total_increments_;
    }
    if (!ctx.l_prev.has_value() || *ctx.l_prev != loc.landmark) {
      landmarks_[loc.landmark].visit_count += 1;
    }
    ctx.l_prev = loc.landmark;
  }
  return loc;
}

void LandmarkGraph::graph_update(const SfProvider& provider, const Env& env,
                                 std::span<const int> states, EpisodeContext& ctx,
                                 long step_base) {
  long step = step_base;
  for (int s : states) observe(provider, env, s, ctx, step++);
}

int LandmarkGraph::bootstrap(const SfProvider& provider, const Env& env, int state,
                             long step) {
  if (!landmarks_.empty()) throw std::logic_error("bootstrap on a non-empty graph");
  return add_landmark(provider, env, state, step);
}

int LandmarkGraph::add_landmark(const SfProvider& provider, const Env& env, int state,
                                long step) {
  Landmark lm;
  lm.id = static_cast<int>(landmarks_.size());
  lm.snapshot_state = state;
  lm.coords = env.coords(state);
  lm.sf_cache = provider.state_sf(state);
  lm.added_at_step = step;
  landmarks_.push_back(std::move(lm));
  return landmarks_.back().id;
}

int LandmarkGraph::flush_candidates(const SfProvider& provider, const Env& env, long step) {
  // Most novel first (lowest recorded aggregated SFS; ties by state id).
  std::sort(candidates_.begin(), candidates_.end(), [](const Candidate& a, const Candidate& b) {
    return a.score != b.score ? a.score < b.score : a.state < b.state;
  });
  int added = 0;
  for (const Candidate& cand : candidates_) {
    if (added >= cfg_.n_cand || size() >= cfg_.landmark_cap) break;
    // Separation re-check against the current set; the buffered score may be
    // stale by up to n_add steps.
    std::vector<double> row = sfs_row(provider, cand.state);
    double best = *std::max_element(row.begin(), row.end());
    if (best >= cfg_.delta_add) continue;
    add_landmark(provider, env, cand.state, step);
    ++added;
  }
  candidates_.clear();
  return added;
}

void LandmarkGraph::refresh_landmark_sfs(const SfProvider& provider) {
  for (auto& lm : landmarks_) lm.sf_cache = provider.state_sf(lm.snapshot_state);
}

void LandmarkGraph::record_failure(int from, int to, long step) {
  if (from < 0 || from >= size() || to < 0 || to >= size()) {
    throw std::invalid_argument("record_failure: unknown landmark id");
  }
  failures_.push_back({from, to, step});
}

double LandmarkGraph::edge_threshold() const {
  if (cfg_.edge_threshold_mode == "fixed") return cfg_.delta_edge;
  std::vector<long> counts;
  counts.reserve(counts_.size());
  for (const auto& [pair, c] : counts_) {
    if (c > 0) counts.push_back(c);
  }
  if (counts.empty()) return 0.0;
  std::sort(counts.begin(), counts.end());
  size_t k = counts.size();
  return (k % 2 == 1) ? static_cast<double>(counts[k / 2])
                      : 0.5 * static_cast<double>(counts[k / 2 - 1] + counts[k / 2]);
}

std::vector<GraphEdge> LandmarkGraph::derive_edges(long now_step) const {
  double threshold = edge_threshold();
  std::vector<GraphEdge> edges;
  edges.reserve(counts_.size());
  for (const auto& [pair, count] : counts_) {
    if (count <= 0) continue;
    GraphEdge e;
    e.from = pair.first;
    e.to = pair.second;
    e.count = count;
    e.weight = std::exp(-static_cast<double>(count));
    if (static_cast<double>(count) <= threshold) e.filtered_by.push_back("threshold");
    if (cfg_.temporal_filter) {
      double span = cfg_.tau_temporal * size();
      if (std::abs(e.from - e.to) >= span) e.filtered_by.push_back("temporal");
    }
    edges.push_back(std::move(e));
  }

  if (cfg_.knn_filter) {
    // Keep the k outgoing edges with the most transitions per vertex,
    // considering only edges that survived the earlier filters.
    std::map<int, std::vector<size_t>> by_from;
    for (size_t i = 0; i < edges.size(); ++i) {
      if (edges[i].filtered_by.empty()) by_from[edges[i].from].push_back(i);
    }
    for (auto& [from, idx] : by_from) {
      if (static_cast<int>(idx.size()) <= cfg_.k_nearest) continue;
      std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        if (edges[a].count != edges[b].count) return edges[a].count > edges[b].count;
        return edges[a].to < edges[b].to;
      });
      for (size_t i = cfg_.k_nearest; i < idx.size(); ++i) {
        edges[idx[i]].filtered_by.push_back("k_nearest");
      }
    }
  }

  for (auto& e : edges) {
    for (const Failure& f : failures_) {
      if (f.from == e.from && f.to == e.to &&
          now_step - f.step <= cfg_.failure_forget_window) {
        e.filtered_by.push_back("failure");
        break;
      }
    }
  }
  return edges;
}

std::vector<GraphEdge> LandmarkGraph::active_edges(const std::vector<GraphEdge>& edges) {
  std::vector<GraphEdge> active;
  for (const auto& e : edges) {
    if (e.active()) active.push_back(e);
  }
  return active;
}

long LandmarkGraph::transition_count(int from, int to) const {
  auto it = counts_.find({from, to});
  return it == counts_.end() ? 0 : it->second;
}

void LandmarkGraph::write_dot(std::ostream& out, long now_step, uint64_t config_hash) const {
  out << "// config_hash=" << config_hash << "\n";
  out << "digraph landmarks {\n";
  for (const auto& lm : landmarks_) {
    out << "  n" << lm.id << " [id=" << lm.id << ", x=" << lm.coords.x
        << ", y=" << lm.coords.y << ", heading=" << lm.coords.heading
        << ", visit_count=" << lm.visit_count << ", added_at_step=" << lm.added_at_step
        << "];\n";
  }
  for (const auto& e : derive_edges(now_step)) {
    out << "  n" << e.from << " -> n" << e.to << " [count=" << e.count
        << ", weight=" << e.weight;
    if (!e.filtered_by.empty()) {
      out << ", filtered_by=\"";
      for (size_t i = 0; i < e.filtered_by.size(); ++i) {
        if (i) out << ',';
        out << e.filtered_by[i];
      }
      out << '"';
    }
    out << "];\n";
  }
  out << "}\n";
}

nlohmann::json LandmarkGraph::to_json() const {
  nlohmann::json j;
  j["landmarks"] = nlohmann::json::array();
  for (const auto& lm : landmarks_) {
    j["landmarks"].push_back({{"id", lm.id},
                              {"state", lm.snapshot_state},
                              {"x", lm.coords.x},
                              {"y", lm.coords.y},
                              {"heading", lm.coords.heading},
                              {"visits", lm.visit_count},
                              {"added_at", lm.added_at_step}});
  }
  j["counts"] = nlohmann::json::array();
  for (const auto& [pair, c] : counts_) {
    j["counts"].push_back({pair.first, pair.second, c});
  }
  j["failures"] = nlohmann::json::array();
  for (const auto& f : failures_) j["failures"].push_back({f.from, f.to, f.step});
  j["total_increments"] = total_increments_;
  return j;
}

LandmarkGraph LandmarkGraph::from_json(const nlohmann::json& j, GraphConfig cfg,
                                       SfsConfig sfs_cfg) {
  LandmarkGraph g(std::move(cfg), sfs_cfg);
  for (const auto& item : j.at("landmarks")) {
    Landmark lm;
    lm.id = item.at("id").get<int>();
    lm.snapshot_state = item.at("state").get<int>();
    lm.coords = {item.at("x").get<int>(), item.at("y").get<int>(),
                 item.at("heading").get<int>()};
    lm.visit_count = item.at("visits").get<long>();
    lm.added_at_step = item.at("added_at").get<long>();
    g.landmarks_.push_back(std::move(lm));
  }
  for (const auto& item : j.at("counts")) {
    g.counts_[{item[0].get<int>(), item[1].get<int>()}] = item[2].get<long>();
  }
  for (const auto& item : j.at("failures")) {
    g.failures_.push_back({item[0].get<int>(), item[1].get<int>(), item[2].get<long>()});
  }
  g.total_increments_ = j.value("total_increments", 0L);
  return g;
}

}  // namespace sfl
