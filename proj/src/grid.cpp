#include "sfl/grid.hpp"

#include <deque>
#include <fstream>
#include <sstream>

namespace sfl {

namespace {

// dx/dy per heading N, E, S, W
constexpr int kDx[4] = {0, 1, 0, -1};
constexpr int kDy[4] = {-1, 0, 1, 0};

std::string at_pos(const std::string& msg, int row, int col) {
  std::ostringstream os;
  os << msg << " (row " << row << ", col " << col << ")";
  return os.str();
}

}  // namespace

int GridMap::door_index(int x, int y) const {
  for (size_t i = 0; i < door_positions.size(); ++i) {
    if (door_positions[i] == std::make_pair(x, y)) return static_cast<int>(i);
  }
  return -1;
}

GridMap GridMap::parse(const std::string& text) {
  std::vector<std::string> rows;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  if (rows.size() < 3) throw ParseError("map must have at least 3 rows", 0, 0);

  GridMap map;
  map.height = static_cast<int>(rows.size());
  map.width = static_cast<int>(rows[0].size());
  if (map.width < 3) throw ParseError("map must have at least 3 columns", 0, 0);

  for (int y = 0; y < map.height; ++y) {
    if (static_cast<int>(rows[y].size()) != map.width) {
      throw ParseError(at_pos("non-rectangular map: row length mismatch", y,
                              static_cast<int>(rows[y].size())),
                       y, static_cast<int>(rows[y].size()));
    }
  }

  map.cells.resize(static_cast<size_t>(map.width) * map.height);
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      char c = rows[y][x];
      Cell cell;
      switch (c) {
        case '#': cell = Cell::Wall; break;
        case '.': cell = Cell::Floor; break;
        case 'D': cell = Cell::Door; break;
        case 'S': cell = Cell::Start; break;
        case 'G': cell = Cell::Goal; break;
        default:
          throw ParseError(at_pos(std::string("invalid map character '") + c + "'", y, x), y, x);
      }
      bool boundary = x == 0 || y == 0 || x == map.width - 1 || y == map.height - 1;
      if (boundary && cell != Cell::Wall) {
        throw ParseError(at_pos("boundary cell must be wall", y, x), y, x);
      }
      if (cell == Cell::Start) {
        if (map.start_x >= 0) throw ParseError(at_pos("multiple start cells", y, x), y, x);
        map.start_x = x;
        map.start_y = y;
      }
      if (cell == Cell::Goal) {
        if (map.goal_x >= 0) throw ParseError(at_pos("multiple goal cells", y, x), y, x);
        map.goal_x = x;
        map.goal_y = y;
      }
      if (cell == Cell::Door) map.door_positions.emplace_back(x, y);
      map.cells[y * map.width + x] = cell;
    }
  }
  if (map.start_x < 0) throw ParseError("no start cell", 0, 0);

  // Flood fill from S with all doors open; every non-wall cell must be reached.
  std::vector<char> seen(map.cells.size(), 0);
  std::deque<std::pair<int, int>> queue{{map.start_x, map.start_y}};
  seen[map.start_y * map.width + map.start_x] = 1;
  while (!queue.empty()) {
    auto [x, y] = queue.front();
    queue.pop_front();
    for (int h = 0; h < 4; ++h) {
      int nx = x + kDx[h];
      int ny = y + kDy[h];
      if (nx < 0 || ny < 0 || nx >= map.width || ny >= map.height) continue;
      int idx = ny * map.width + nx;
      if (!seen[idx] && map.cells[idx] != Cell::Wall) {
        seen[idx] = 1;
        queue.emplace_back(nx, ny);
      }
    }
  }
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      if (map.cells[y * map.width + x] != Cell::Wall && !seen[y * map.width + x]) {
        throw ParseError(at_pos("cell unreachable from start", y, x), y, x);
      }
    }
  }
  return map;
}

GridMap GridMap::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open map file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

GridWorld::GridWorld(GridMap map, int episode_limit, long state_cap) : map_(std::move(map)) {
  cell_index_.assign(map_.cells.size(), -1);
  for (int y = 0; y < map_.height; ++y) {
    for (int x = 0; x < map_.width; ++x) {
      if (!map_.is_wall(x, y)) {
        cell_index_[y * map_.width + x] = static_cast<int>(cells_.size());
        cells_.emplace_back(x, y);
      }
    }
  }
  int doors = static_cast<int>(map_.door_positions.size());
  if (doors > 20) throw StateCapError("too many doors for a bitmask state");
  long n = static_cast<long>(cells_.size()) * 4 * (1L << doors);
  if (n > state_cap) {
    throw StateCapError("state space " + std::to_string(n) + " exceeds cap " +
                        std::to_string(state_cap));
  }
  num_states_ = static_cast<int>(n);
  episode_limit_ = episode_limit > 0 ? episode_limit : (doors == 0 ? 100 : 40 * (doors + 1));
}

int GridWorld::id_of(const GridState& s) const {
  int ci = cell_index_[s.y * map_.width + s.x];
  if (ci < 0) throw std::invalid_argument("state on a wall cell");
  return (static_cast<int>(s.door_open) * static_cast<int>(cells_.size()) + ci) * 4 + s.heading;
}

GridState GridWorld::state_of(int id) const {
  GridState s;
  s.heading = id % 4;
  int rest = id / 4;
  int ci = rest % static_cast<int>(cells_.size());
  s.door_open = static_cast<uint32_t>(rest / static_cast<int>(cells_.size()));
  s.x = cells_[ci].first;
  s.y = cells_[ci].second;
  return s;
}

GridState GridWorld::step_state(const GridState& s, GridAction a) const {
  GridState next = s;
  switch (a) {
    case Forward: {
      int nx = s.x + kDx[s.heading];
      int ny = s.y + kDy[s.heading];
      if (map_.is_wall(nx, ny)) break;
      int door = map_.door_index(nx, ny);
      if (door >= 0 && !(s.door_open & (1u << door))) break;  // closed door blocks
      next.x = nx;
      next.y = ny;
      break;
    }
    case TurnLeft:
      next.heading = (s.heading + 3) % 4;
      break;
    case TurnRight:
      next.heading = (s.heading + 1) % 4;
      break;
    case Toggle: {
      int nx = s.x + kDx[s.heading];
      int ny = s.y + kDy[s.heading];
      if (nx < 0 || ny < 0 || nx >= map_.width || ny >= map_.height) break;
      int door = map_.door_index(nx, ny);
      if (door >= 0) next.door_open = s.door_open ^ (1u << door);
      break;
    }
  }
  return next;
}

StepResult GridWorld::step(int state, int action) const {
  GridState next = step_state(state_of(state), static_cast<GridAction>(action));
  return {id_of(next), 0.0, false};
}

// Channels per cell: wall, closed door, open door, agent; plus a one-hot
// heading appended.
std::vector<double> GridWorld::observation(int state) const {
  GridState s = state_of(state);
  int cells = map_.width * map_.height;
  std::vector<double> obs(static_cast<size_t>(cells) * 4 + 4, 0.0);
  for (int y = 0; y < map_.height; ++y) {
    for (int x = 0; x < map_.width; ++x) {
      int i = y * map_.width + x;
      if (map_.is_wall(x, y)) {
        obs[i] = 1.0;
      } else {
        int door = map_.door_index(x, y);
        if (door >= 0) {
          bool open = s.door_open & (1u << door);
          obs[cells * (open ? 2 : 1) + i] = 1.0;
        }
      }
    }
  }
  obs[cells * 3 + s.y * map_.width + s.x] = 1.0;
  obs[static_cast<size_t>(cells) * 4 + s.heading] = 1.0;
  return obs;
}

int GridWorld::obs_dim() const { return map_.width * map_.height * 4 + 4; }

int GridWorld::start_state() const {
  return id_of(GridState{map_.start_x, map_.start_y, East, 0});
}

StateCoords GridWorld::coords(int state) const {
  GridState s = state_of(state);
  return {s.x, s.y, s.heading};
}

int GridWorld::cell_of(int state) const {
  GridState s = state_of(state);
  return cell_index_[s.y * map_.width + s.x];
}

bool GridWorld::heatmap_include(int state) const { return state_of(state).door_open == 0; }

std::vector<GridState> GridWorld::enumerate_states() const {
  std::vector<GridState> out;
  out.reserve(num_states_);
  for (int id = 0; id < num_states_; ++id) out.push_back(state_of(id));
  return out;
}

int GridWorld::goal_state(int heading) const {
  if (map_.goal_x < 0) throw std::runtime_error("map has no goal cell");
  return id_of(GridState{map_.goal_x, map_.goal_y, heading, 0});
}

}  // namespace sfl
