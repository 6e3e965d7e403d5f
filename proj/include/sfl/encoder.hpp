#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "sfl/env.hpp"
#include "sfl/nn.hpp"

namespace sfl {

struct EncoderConfig {
  std::string mode = "onehot";  // onehot | learned
  double alpha = 10.0;          // target L2 norm of emitted features
  int feature_dim = 64;
  std::vector<int> hidden = {128};
  double margin = 2.0;     // triplet margin m
  int positive_window = 2;  // K_p
  int negative_near = 10;   // U_n
  int negative_far = 15;    // L_n
  double lr = 5e-4;
  int batch = 128;
  long pretrain_steps = 2000;
  bool co_train = false;
};

// phi(s); every emitted vector has L2 norm == alpha.
class FeatureEncoder {
 public:
  virtual ~FeatureEncoder() = default;
  virtual int dim() const = 0;
  virtual Features encode(int state) const = 0;
};

class OneHotEncoder : public FeatureEncoder {
 public:
  OneHotEncoder(int num_states, double alpha = 1.0)
      : num_states_(num_states), alpha_(alpha) {}
  int dim() const override { return num_states_; }
  Features encode(int state) const override;

 private:
  int num_states_;
  double alpha_;
};

// MLP over the flat grid observation, output rescaled to norm alpha.
class LearnedEncoder : public FeatureEncoder {
 public:
  LearnedEncoder(const Env& env, EncoderConfig cfg, Rng rng);

  int dim() const override { return cfg_.feature_dim; }
  Features encode(int state) const override;

  std::vector<double> embed(const std::vector<double>& obs) const;
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  const EncoderConfig& config() const { return cfg_; }
  const Env& env() const { return env_; }

 private:
  const Env& env_;
  EncoderConfig cfg_;
  Mlp net_;
};

// Episode-indexed state log feeding the triplet sampler.
class EpisodeStore {
 public:
  void begin_episode() { episodes_.emplace_back(); }
  void add(int state) { episodes_.back().push_back(state); }
  const std::vector<std::vector<int>>& episodes() const { return episodes_; }
  size_t total_states() const;

 private:
  std::vector<std::vector<int>> episodes_;
};

struct TripletBatch {
  std::vector<std::array<int, 3>> states;  // anchor, positive, negative ids
  double margin = 2.0;
};

// Anchors are drawn uniformly over positions whose negative window is
// non-empty; positives from [t-K_p, t+K_p] and negatives from
// [t-L_n, t-U_n] u [t+U_n, t+L_n], all within the anchor's episode.
TripletBatch sample_triplets(const EpisodeStore& store, const EncoderConfig& cfg,
                             int count, Rng& rng);

// Hinge loss mean over triples: max(0, |f(a)-f(p)|^2 - |f(a)-f(n)|^2 + m).
double triplet_loss_value(const LearnedEncoder& enc, const TripletBatch& batch);
// Same, but also accumulates parameter gradients into enc.net().
double triplet_loss(LearnedEncoder& enc, const TripletBatch& batch);

// Fraction of triples with |f(a)-f(p)| < |f(a)-f(n)|.
double triplet_accuracy(const LearnedEncoder& enc, const TripletBatch& batch);

struct EncoderTrainReport {
  double initial_loss = 0;
  double final_loss = 0;
  long steps = 0;
};

// Adam on the triplet loss; throws if the loss diverges past 10x its
// initial value.
EncoderTrainReport train_encoder(LearnedEncoder& enc, const EpisodeStore& store,
                                 long steps, Rng& rng);

}  // namespace sfl
