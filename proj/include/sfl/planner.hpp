#pragma once

#include <optional>
#include <vector>

#include "sfl/landmarks.hpp"

namespace sfl {

struct Plan {
  std::vector<int> waypoints;  // [from .. to], no repeats
  double total_weight = 0.0;
  long created_at_step = 0;
};

// Minimal-weight path over the active edge set (Dijkstra; all weights are
// positive). Equal-weight alternatives resolve to the lexicographically
// smallest waypoint-id sequence. nullopt when `to` is unreachable.
std::optional<Plan> shortest_path(const std::vector<GraphEdge>& edges, int num_nodes,
                                  int from, int to, long step);

enum class WaypointStep { Next, Replan, Done };

struct NextWaypoint {
  WaypointStep kind = WaypointStep::Replan;
  int landmark = -1;
};

// current == last waypoint -> Done; current on the plan -> its successor;
// anything else -> Replan.
NextWaypoint next_waypoint(const Plan& plan, int current_localized);

}  // namespace sfl
