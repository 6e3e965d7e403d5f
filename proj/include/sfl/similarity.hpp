#pragma once

#include <deque>
#include <iosfwd>
#include <span>
#include <vector>

#include "sfl/env.hpp"
#include "sfl/rng.hpp"
#include "sfl/successor.hpp"

namespace sfl {

struct SfsConfig {
  bool normalize = true;  // cosine; raw dot product only for oracle checks
  int window = 1;         // W, median aggregation window
  double epsilon_train = 0.1;
  double epsilon_eval = 0.05;
};

// Similarity of two SF vectors: cosine by default, raw dot product when
// normalize is false. Throws on a zero-norm input when normalizing (an
// untrained SF).
double sfs(std::span<const double> a, std::span<const double> b, bool normalize = true);

// Q(s, a, g) per action: sfs(psi(s, a), psi(g)). The reward weights are the
// goal's SF by construction; nothing is learned here.
std::vector<double> goal_q(const std::vector<std::vector<double>>& action_sf,
                           std::span<const double> goal_sf, bool normalize = true);

// epsilon-greedy argmax; ties resolve to the lowest action index.
int greedy_action(std::span<const double> q, double epsilon, Rng& rng);

// Ring buffer of per-landmark SFS rows over the last W steps. Entries can be
// ragged while the landmark set grows; aggregation takes each landmark's
// median over the rows that include it.
class SfsHistory {
 public:
  explicit SfsHistory(int window);

  void push(std::vector<double> row);
  std::vector<double> aggregate() const;  // throws when empty
  void clear() { rows_.clear(); }
  bool empty() const { return rows_.empty(); }
  int size() const { return static_cast<int>(rows_.size()); }
  int window() const { return window_; }

 private:
  int window_;
  std::deque<std::vector<double>> rows_;
};

// Source of SF vectors for similarity queries.
class SfProvider {
 public:
  virtual ~SfProvider() = default;
  virtual int dim() const = 0;
  virtual int num_actions() const = 0;
  virtual std::vector<double> state_sf(int state) const = 0;
  virtual std::vector<double> state_action_sf(int state, int action) const = 0;
};

class AnalyticSfProvider : public SfProvider {
 public:
  explicit AnalyticSfProvider(const SrMatrices& sr) : sr_(&sr) {}
  int dim() const override { return sr_->n; }
  int num_actions() const override { return sr_->num_actions; }
  std::vector<double> state_sf(int state) const override;
  std::vector<double> state_action_sf(int state, int action) const override;

 private:
  const SrMatrices* sr_;
};

class LearnedSfProvider : public SfProvider {
 public:
  explicit LearnedSfProvider(const SfLearner& learner) : learner_(&learner) {}
  int dim() const override { return learner_->feature_dim(); }
  int num_actions() const override { return learner_->num_actions(); }
  std::vector<double> state_sf(int state) const override;
  std::vector<double> state_action_sf(int state, int action) const override;

 private:
  const SfLearner* learner_;
};

// CSV rows "x,y,heading,sfs" of SFS between ref_state and every state in the
// environment's heatmap slice.
void write_sfs_heatmap(const Env& env, const SfProvider& provider, int ref_state,
                       std::ostream& out, uint64_t config_hash);

}  // namespace sfl
