#pragma once

#include <deque>
#include <span>
#include <vector>

#include "sfl/encoder.hpp"
#include "sfl/env.hpp"
#include "sfl/nn.hpp"

namespace sfl {

// Exact successor representation under the uniform random policy:
// M = (I - gamma P)^-1, M_sa(s, a) = e_s + gamma M(step(s, a)).
struct SrMatrices {
  int n = 0;
  int num_actions = 0;
  double gamma = 0.0;
  std::vector<double> m;     // n x n
  std::vector<double> m_sa;  // (n * num_actions) x n

  std::span<const double> state_row(int s) const {
    return {&m[static_cast<size_t>(s) * n], static_cast<size_t>(n)};
  }
  std::span<const double> state_action_row(int s, int a) const {
    return {&m_sa[(static_cast<size_t>(s) * num_actions + a) * n], static_cast<size_t>(n)};
  }
};

SrMatrices analytic_sr(const Env& env, double gamma);

struct SfConfig {
  std::vector<int> hidden = {512};  // empty -> tabular linear head
  double lr = 5e-4;
  int batch = 128;
  int n_step = 1;
  long buffer_capacity = 20000;
  double gamma = 0.99;
  long target_update_interval = 250;
  double grad_clip = 1.0;
  long update_interval_steps = 40;  // env steps per TD batch
  int samplers = 1;
};

struct Transition {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
  bool done = false;
  PolicyTag source = PolicyTag::Random;
};

// Episode-structured transition store. Only random-policy transitions are
// accepted; n-step segments never cross an episode boundary.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(long capacity) : capacity_(capacity) {}

  void begin_episode();
  void append(const Transition& t);  // throws on GoalConditioned source
  long size() const { return total_; }

  struct Segment {
    std::vector<int> states;   // s_t .. s_{t+m-1}
    std::vector<int> actions;  // a_t .. a_{t+m-1}
    int bootstrap_state = 0;   // s_{t+m}
  };

  Segment sample_segment(int n, Rng& rng) const;

  const std::deque<std::vector<Transition>>& episodes() const { return episodes_; }

 private:
  long capacity_;
  long total_ = 0;
  std::deque<std::vector<Transition>> episodes_;
};

// TD-learned successor features: |A| heads of length d over phi(s), with a
// hard-copy target network, n-step returns and global-norm gradient clipping.
class SfLearner {
 public:
  SfLearner(const FeatureEncoder& encoder, int num_actions, SfConfig cfg, Rng rng);

  int feature_dim() const { return encoder_->dim(); }
  int num_actions() const { return num_actions_; }
  const SfConfig& config() const { return cfg_; }

  // One forward pass; heads concatenated, |A| * d values.
  std::vector<double> predict_heads(int state) const;
  std::vector<double> predict_sf(int state) const;  // uniform mean over heads
  std::vector<double> predict_sf_sa(int state, int action) const;

  ReplayBuffer& buffer() { return buffer_; }
  const ReplayBuffer& buffer() const { return buffer_; }

  // Squared TD error averaged over batch and feature dimensions; clips the
  // global gradient norm, applies Adam and syncs the target on schedule.
  double td_update(const std::vector<ReplayBuffer::Segment>& batch);
  // Samples a batch from the buffer and runs td_update.
  double train_step();

  void sync_target();
  long update_count() const { return updates_; }
  long sync_count() const { return syncs_; }
  double last_grad_norm() const { return last_grad_norm_; }
  void restore_counters(long updates, long syncs) {
    updates_ = updates;
    syncs_ = syncs;
  }

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  Mlp& target() { return target_; }
  const Mlp& target() const { return target_; }
  Adam& optimizer() { return opt_; }

 private:
  std::vector<double> target_state_sf(int state) const;  // mean heads, target net

  const FeatureEncoder* encoder_;
  int num_actions_;
  SfConfig cfg_;
  Mlp net_;
  Mlp target_;
  Adam opt_;
  ReplayBuffer buffer_;
  Rng sample_rng_;
  long updates_ = 0;
  long syncs_ = 0;
  double last_grad_norm_ = 0.0;
};

}  // namespace sfl
