#include "sfl/planner.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>

namespace sfl {

std::optional<Plan> shortest_path(const std::vector<GraphEdge>& edges, int num_nodes,
                                  int from, int to, long step) {
  if (from < 0 || from >= num_nodes || to < 0 || to >= num_nodes) {
    throw std::invalid_argument("shortest_path: node out of range");
  }
  if (from == to) {
    return Plan{{from}, 0.0, step};
  }

  std::vector<std::vector<std::pair<int, double>>> adj(num_nodes);
  for (const auto& e : edges) {
    if (e.active()) adj[e.from].emplace_back(e.to, e.weight);
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(num_nodes, kInf);
  std::vector<std::vector<int>> path(num_nodes);
  std::vector<char> settled(num_nodes, 0);

  struct Item {
    double dist;
    std::vector<int> path;
  };
  auto worse = [](const Item& a, const Item& b) {
    if (a.dist != b.dist) return a.dist > b.dist;
    return a.path > b.path;  // prefer the lexicographically smaller sequence
  };
  std::priority_queue<Item, std::vector<Item>, decltype(worse)> queue(worse);

  dist[from] = 0.0;
  path[from] = {from};
  queue.push({0.0, path[from]});

  while (!queue.empty()) {
    Item item = queue.top();
    queue.pop();
    int u = item.path.back();
    if (settled[u]) continue;
    if (item.dist != dist[u] || item.path != path[u]) continue;  // stale entry
    settled[u] = 1;
    if (u == to) break;
    for (auto [v, w] : adj[u]) {
      if (settled[v]) continue;
      double nd = item.dist + w;
      if (nd < dist[v]) {
        dist[v] = nd;
        path[v] = item.path;
        path[v].push_back(v);
        queue.push({nd, path[v]});
      } else if (nd == dist[v]) {
        std::vector<int> candidate = item.path;
        candidate.push_back(v);
        if (candidate < path[v]) {
          path[v] = std::move(candidate);
          queue.push({nd, path[v]});
        }
      }
    }
  }

  if (dist[to] == kInf) return std::nullopt;
  return Plan{path[to], dist[to], step};
}

NextWaypoint next_waypoint(const Plan& plan, int current_localized) {
  if (plan.waypoints.empty()) throw std::invalid_argument("next_waypoint: empty plan");
  if (current_localized == plan.waypoints.back()) return {WaypointStep::Done, -1};
  for (size_t i = 0; i + 1 < plan.waypoints.size(); ++i) {
    if (plan.waypoints[i] == current_localized) {
      return {WaypointStep::Next, plan.waypoints[i + 1]};
    }
  }
  return {WaypointStep::Replan, -1};
}

}  // namespace sfl
