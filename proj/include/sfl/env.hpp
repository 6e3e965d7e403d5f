#pragma once

#include <vector>

#include "sfl/rng.hpp"

namespace sfl {

enum class PolicyTag { Random, GoalConditioned };

struct StepResult {
  int next_state;
  double reward;
  bool done;
};

struct StateCoords {
  int x = 0;
  int y = 0;
  int heading = 0;
};

// Deterministic environment with an enumerable state space. State ids are
// dense in [0, num_states()) and stable for the lifetime of the instance.
// Instances hold no episode state; the caller tracks the current state id.
class Env {
 public:
  virtual ~Env() = default;

  virtual int num_states() const = 0;
  virtual int num_actions() const = 0;
  virtual StepResult step(int state, int action) const = 0;

  // Flat observation used by learned encoders.
  virtual std::vector<double> observation(int state) const = 0;
  virtual int obs_dim() const = 0;

  virtual int start_state() const = 0;
  virtual int random_state(Rng& rng) const;
  virtual int episode_limit() const = 0;

  virtual StateCoords coords(int state) const = 0;

  // Coverage is measured over (x, y) cells, ignoring heading and door bits.
  virtual int num_cells() const = 0;
  virtual int cell_of(int state) const = 0;

  // Which states belong in a heatmap slice (grid worlds restrict to the
  // all-doors-closed mask so (x, y, heading) rows are unique).
  virtual bool heatmap_include(int state) const;
};

// n positions in a row; actions {Left, Right}; bumping an end is a no-op.
class ChainWorld : public Env {
 public:
  explicit ChainWorld(int length, int episode_limit = 20);

  int num_states() const override { return length_; }
  int num_actions() const override { return 2; }
  StepResult step(int state, int action) const override;
  std::vector<double> observation(int state) const override;
  int obs_dim() const override { return length_; }
  int start_state() const override { return 0; }
  int episode_limit() const override { return episode_limit_; }
  StateCoords coords(int state) const override { return {state, 0, 0}; }
  int num_cells() const override { return length_; }
  int cell_of(int state) const override { return state; }

 private:
  int length_;
  int episode_limit_;
};

// P[s][s'] = (1/|A|) sum_a 1[step(s,a)=s']; every row sums to 1.
std::vector<std::vector<double>> random_policy_matrix(const Env& env);

// Minimal number of actions from `from` to every state, breadth-first over
// the full dynamics; -1 marks unreachable states.
std::vector<int> geodesic_from(const Env& env, int from);
int geodesic_distance(const Env& env, int from, int to);

}  // namespace sfl
