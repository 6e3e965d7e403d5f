#include "sfl/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace sfl {

double sfs(std::span<const double> a, std::span<const double> b, bool normalize) {
  if (a.size() != b.size()) throw std::invalid_argument("sfs: dimension mismatch");
  double dot = 0.0;
  for (size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  if (!normalize) return dot;
  double na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw std::runtime_error("sfs: zero-norm SF vector (untrained SF?)");
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> goal_q(const std::vector<std::vector<double>>& action_sf,
                           std::span<const double> goal_sf, bool normalize) {
  std::vector<double> q;
  q.reserve(action_sf.size());
  for (const auto& psi : action_sf) q.push_back(sfs(psi, goal_sf, normalize));
  return q;
}

int greedy_action(std::span<const double> q, double epsilon, Rng& rng) {
  if (q.empty()) throw std::invalid_argument("greedy_action: empty Q vector");
  if (epsilon > 0.0 && rng.uniform() < epsilon) {
    return static_cast<int>(rng.uniform_below(q.size()));
  }
  int best = 0;
  for (size_t a = 1; a < q.size(); ++a) {
    if (q[a] > q[best]) best = static_cast<int>(a);
  }
  return best;
}

SfsHistory::SfsHistory(int window) : window_(window) {
  if (window < 1) throw std::invalid_argument("SfsHistory: window must be >= 1");
}

void SfsHistory::push(std::vector<double> row) {
  rows_.push_back(std::move(row));
  while (static_cast<int>(rows_.size()) > window_) rows_.pop_front();
}

std::vector<double> SfsHistory::aggregate() const {
  if (rows_.empty()) throw std::runtime_error("SfsHistory: aggregate over empty history");
  size_t width = 0;
  for (const auto& r : rows_) width = std::max(width, r.size());
  std::vector<double> out(width, 0.0);
  std::vector<double> column;
  for (size_t j = 0; j < width; ++j) {
    column.clear();
    for (const auto& r : rows_) {
      if (j < r.size()) column.push_back(r[j]);
    }
    std::sort(column.begin(), column.end());
    size_t k = column.size();
    out[j] = (k % 2 == 1) ? column[k / 2] : 0.5 * (column[k / 2 - 1] + column[k / 2]);
  }
  return out;
}

std::vector<double> AnalyticSfProvider::state_sf(int state) const {
  auto row = sr_->state_row(state);
  return {row.begin(), row.end()};
}

std::vector<double> AnalyticSfProvider::state_action_sf(int state, int action) const {
  auto row = sr_->state_action_row(state, action);
  return {row.begin(), row.end()};
}

std::vector<double> LearnedSfProvider::state_sf(int state) const {
  return learner_->predict_sf(state);
}

std::vector<double> LearnedSfProvider::state_action_sf(int state, int action) const {
  return learner_->predict_sf_sa(state, action);
}

void write_sfs_heatmap(const Env& env, const SfProvider& provider, int ref_state,
                       std::ostream& out, uint64_t config_hash) {
  static const char kHeading[4] = {'N', 'E', 'S', 'W'};
  std::vector<double> ref = provider.state_sf(ref_state);
  out << "# config_hash=" << config_hash << "\n";
  out << "x,y,heading,sfs\n";
  for (int s = 0; s < env.num_states(); ++s) {
    if (!env.heatmap_include(s)) continue;
    StateCoords c = env.coords(s);
    double value = sfs(provider.state_sf(s), ref);
    out << c.x << ',' << c.y << ',' << kHeading[c.heading & 3] << ',' << value << "\n";
  }
}

}  // namespace sfl
