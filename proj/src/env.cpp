#include "sfl/env.hpp"

#include <deque>
#include <stdexcept>

namespace sfl {

int Env::random_state(Rng& rng) const {
  return static_cast<int>(rng.uniform_below(static_cast<uint64_t>(num_states())));
}

bool Env::heatmap_include(int) const { return true; }

ChainWorld::ChainWorld(int length, int episode_limit)
    : length_(length), episode_limit_(episode_limit) {
  if (length < 1) throw std::invalid_argument("ChainWorld: length must be >= 1");
}

StepResult ChainWorld::step(int state, int action) const {
  int next = state;
  if (action == 0) {
    if (state > 0) next = state - 1;
  } else {
    if (state < length_ - 1) next = state + 1;
  }
  return {next, 0.0, false};
}

std::vector<double> ChainWorld::observation(int state) const {
  std::vector<double> obs(length_, 0.0);
  obs[state] = 1.0;
  return obs;
}

std::vector<std::vector<double>> random_policy_matrix(const Env& env) {
  int n = env.num_states();
  int a = env.num_actions();
  std::vector<std::vector<double>> p(n, std::vector<double>(n, 0.0));
  double w = 1.0 / a;
  for (int s = 0; s < n; ++s) {
    for (int act = 0; act < a; ++act) {
      p[s][env.step(s, act).next_state] += w;
    }
  }
  return p;
}

std::vector<int> geodesic_from(const Env& env, int from) {
  std::vector<int> dist(env.num_states(), -1);
  dist[from] = 0;
  std::deque<int> queue{from};
  while (!queue.empty()) {
    int s = queue.front();
    queue.pop_front();
    for (int a = 0; a < env.num_actions(); ++a) {
      int next = env.step(s, a).next_state;
      if (dist[next] < 0) {
        dist[next] = dist[s] + 1;
        queue.push_back(next);
      }
    }
  }
  return dist;
}

int geodesic_distance(const Env& env, int from, int to) {
  return geodesic_from(env, from)[to];
}

}  // namespace sfl
