#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sfl/env.hpp"

namespace sfl {

enum class Cell : uint8_t { Wall, Floor, Door, Start, Goal };

// Headings rotate clockwise: TurnRight is +1 mod 4, TurnLeft is -1.
enum Heading { North = 0, East = 1, South = 2, West = 3 };

enum GridAction { Forward = 0, TurnLeft = 1, TurnRight = 2, Toggle = 3 };

struct ParseError : std::runtime_error {
  ParseError(std::string msg, int row, int col)
      : std::runtime_error(std::move(msg)), row(row), col(col) {}
  int row;
  int col;
};

struct StateCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ASCII map: '#' wall, '.' floor, 'D' door, 'S' start, 'G' goal. The outer
// boundary must be wall, exactly one S, and every non-wall cell must be
// reachable from S with all doors open.
struct GridMap {
  int width = 0;
  int height = 0;
  std::vector<Cell> cells;  // row-major
  std::vector<std::pair<int, int>> door_positions;
  int start_x = -1;
  int start_y = -1;
  int goal_x = -1;
  int goal_y = -1;

  Cell at(int x, int y) const { return cells[y * width + x]; }
  bool is_wall(int x, int y) const { return at(x, y) == Cell::Wall; }
  int door_index(int x, int y) const;  // -1 if not a door

  static GridMap parse(const std::string& text);
  static GridMap load_file(const std::string& path);
};

struct GridState {
  int x = 0;
  int y = 0;
  int heading = North;
  uint32_t door_open = 0;

  bool operator==(const GridState&) const = default;
};

// Deterministic gridworld over a parsed map. Doors are part of the state
// (bitmask), keeping the dynamics Markov. Door bits reset to closed at
// episode start; bumping a wall and toggling a non-door are no-ops.
class GridWorld : public Env {
 public:
  // episode_limit 0 selects the default: 100 when the map has no doors,
  // 40 * (doors + 1) otherwise.
  explicit GridWorld(GridMap map, int episode_limit = 0, long state_cap = 50000);

  const GridMap& map() const { return map_; }

  int id_of(const GridState& s) const;
  GridState state_of(int id) const;
  GridState step_state(const GridState& s, GridAction a) const;

  // Env interface
  int num_states() const override { return num_states_; }
  int num_actions() const override { return 4; }
  StepResult step(int state, int action) const override;
  std::vector<double> observation(int state) const override;
  int obs_dim() const override;
  int start_state() const override;
  int episode_limit() const override { return episode_limit_; }
  StateCoords coords(int state) const override;
  int num_cells() const override { return static_cast<int>(cells_.size()); }
  int cell_of(int state) const override;
  bool heatmap_include(int state) const override;

  // All valid states in canonical-id order; the id of a state equals its
  // position in this list.
  std::vector<GridState> enumerate_states() const;

  int goal_state(int heading) const;

 private:
  GridMap map_;
  int episode_limit_;
  std::vector<std::pair<int, int>> cells_;  // non-wall cells, row-major
  std::vector<int> cell_index_;             // (y * w + x) -> dense index or -1
  int num_states_ = 0;
};

}  // namespace sfl
