#include "sfl/successor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sfl {

namespace {

// Dense LU solve with partial pivoting: A X = B, B overwritten with X.
// A is n x n row-major and is destroyed.
void lu_solve(std::vector<double>& a, std::vector<double>& b, int n, int nrhs) {
  std::vector<int> piv(n);
  for (int col = 0; col < n; ++col) {
    int best = col;
    double best_abs = std::abs(a[static_cast<size_t>(col) * n + col]);
    for (int r = col + 1; r < n; ++r) {
      double v = std::abs(a[static_cast<size_t>(r) * n + col]);
      if (v > best_abs) {
        best = r;
        best_abs = v;
      }
    }
    if (best_abs == 0.0) throw std::runtime_error("analytic_sr: singular system");
    piv[col] = best;
    if (best != col) {
      for (int k = 0; k < n; ++k) {
        std::swap(a[static_cast<size_t>(col) * n + k], a[static_cast<size_t>(best) * n + k]);
      }
      for (int k = 0; k < nrhs; ++k) {
        std::swap(b[static_cast<size_t>(col) * nrhs + k],
                  b[static_cast<size_t>(best) * nrhs + k]);
      }
    }
    double pivot = a[static_cast<size_t>(col) * n + col];
    for (int r = col + 1; r < n; ++r) {
      double factor = a[static_cast<size_t>(r) * n + col] / pivot;
      if (factor == 0.0) continue;
      a[static_cast<size_t>(r) * n + col] = factor;
      for (int k = col + 1; k < n; ++k) {
        a[static_cast<size_t>(r) * n + k] -= factor * a[static_cast<size_t>(col) * n + k];
      }
      for (int k = 0; k < nrhs; ++k) {
        b[static_cast<size_t>(r) * nrhs + k] -= factor * b[static_cast<size_t>(col) * nrhs + k];
      }
    }
  }
  for (int col = n - 1; col >= 0; --col) {
    double pivot = a[static_cast<size_t>(col) * n + col];
    for (int k = 0; k < nrhs; ++k) {
      double acc = b[static_cast<size_t>(col) * nrhs + k];
      for (int j = col + 1; j < n; ++j) {
        acc -= a[static_cast<size_t>(col) * n + j] * b[static_cast<size_t>(j) * nrhs + k];
      }
      b[static_cast<size_t>(col) * nrhs + k] = acc / pivot;
    }
  }
}

}  // namespace

SrMatrices analytic_sr(const Env& env, double gamma) {
  if (gamma <= 0.0 || gamma >= 1.0) {
    throw std::invalid_argument("analytic_sr: gamma must be in (0, 1)");
  }
  int n = env.num_states();
  int na = env.num_actions();

  // A = I - gamma * P, B = I; solve A M = I
  std::vector<double> a(static_cast<size_t>(n) * n, 0.0);
  std::vector<double> b(static_cast<size_t>(n) * n, 0.0);
  double w = gamma / na;
  for (int s = 0; s < n; ++s) {
    a[static_cast<size_t>(s) * n + s] += 1.0;
    b[static_cast<size_t>(s) * n + s] = 1.0;
    for (int act = 0; act < na; ++act) {
      a[static_cast<size_t>(s) * n + env.step(s, act).next_state] -= w;
    }
  }
  lu_solve(a, b, n, n);

  SrMatrices sr;
  sr.n = n;
  sr.num_actions = na;
  sr.gamma = gamma;
  sr.m = std::move(b);
  sr.m_sa.assign(static_cast<size_t>(n) * na * n, 0.0);
  for (int s = 0; s < n; ++s) {
    for (int act = 0; act < na; ++act) {
      int next = env.step(s, act).next_state;
      double* row = &sr.m_sa[(static_cast<size_t>(s) * na + act) * n];
      const double* mrow = &sr.m[static_cast<size_t>(next) * n];
      for (int j = 0; j < n; ++j) row[j] = gamma * mrow[j];
      row[s] += 1.0;
    }
  }
  return sr;
}

void ReplayBuffer::begin_episode() {
  if (!episodes_.empty() && episodes_.back().empty()) return;
  episodes_.emplace_back();
}

void ReplayBuffer::append(const Transition& t) {
  if (t.source != PolicyTag::Random) {
    throw std::logic_error("replay buffer only accepts random-policy transitions");
  }
  if (episodes_.empty()) episodes_.emplace_back();
  episodes_.back().push_back(t);
  ++total_;
  while (total_ > capacity_ && episodes_.size() > 1) {
    total_ -= static_cast<long>(episodes_.front().size());
    episodes_.pop_front();
  }
}

ReplayBuffer::Segment ReplayBuffer::sample_segment(int n, Rng& rng) const {
  if (total_ == 0) throw std::runtime_error("replay buffer is empty");
  long pick = static_cast<long>(rng.uniform_below(static_cast<uint64_t>(total_)));
  for (const auto& ep : episodes_) {
    long len = static_cast<long>(ep.size());
    if (pick >= len) {
      pick -= len;
      continue;
    }
    Segment seg;
    long end = std::min(pick + n, len);
    for (long t = pick; t < end; ++t) {
      seg.states.push_back(ep[t].state);
      seg.actions.push_back(ep[t].action);
    }
    seg.bootstrap_state = ep[end - 1].next_state;
    return seg;
  }
  throw std::logic_error("replay buffer index out of range");
}

SfLearner::SfLearner(const FeatureEncoder& encoder, int num_actions, SfConfig cfg, Rng rng)
    : encoder_(&encoder),
      num_actions_(num_actions),
      cfg_(std::move(cfg)),
      buffer_(cfg_.buffer_capacity),
      sample_rng_(rng.split("sf-sample")) {
  Rng init = rng.split("sf-init");
  int d = encoder.dim();
  // Random init everywhere, final layer included: a zero head would emit
  // zero SF vectors, which the cosine SFS rejects.
  net_ = Mlp(d, cfg_.hidden, num_actions * d, init, false);
  target_ = net_;
  opt_ = Adam(net_.param_count(), cfg_.lr);
}

std::vector<double> SfLearner::predict_heads(int state) const {
  return net_.forward(encoder_->encode(state));
}

std::vector<double> SfLearner::predict_sf(int state) const {
  std::vector<double> heads = predict_heads(state);
  int d = feature_dim();
  std::vector<double> mean(d, 0.0);
  for (int a = 0; a < num_actions_; ++a) {
    for (int j = 0; j < d; ++j) mean[j] += heads[static_cast<size_t>(a) * d + j];
  }
  for (double& v : mean) v /= num_actions_;
  return mean;
}

std::vector<double> SfLearner::predict_sf_sa(int state, int action) const {
  if (action < 0 || action >= num_actions_) {
    throw std::invalid_argument("predict_sf_sa: action out of range");
  }
  std::vector<double> heads = predict_heads(state);
  int d = feature_dim();
  return {heads.begin() + static_cast<size_t>(action) * d,
          heads.begin() + static_cast<size_t>(action + 1) * d};
}

std::vector<double> SfLearner::target_state_sf(int state) const {
  std::vector<double> heads = target_.forward(encoder_->encode(state));
  int d = feature_dim();
  std::vector<double> mean(d, 0.0);
  for (int a = 0; a < num_actions_; ++a) {
    for (int j = 0; j < d; ++j) mean[j] += heads[static_cast<size_t>(a) * d + j];
  }
  for (double& v : mean) v /= num_actions_;
  return mean;
}

double SfLearner::td_update(const std::vector<ReplayBuffer::Segment>& batch) {
  if (batch.empty()) throw std::invalid_argument("td_update: empty batch");
  int d = feature_dim();
  double inv = 1.0 / (static_cast<double>(batch.size()) * d);
  double loss = 0.0;
  net_.zero_grad();

  std::vector<double> target_vec(d);
  Mlp::Trace trace;
  for (const auto& seg : batch) {
    // n-step target: sum_k gamma^k phi(s_{t+k}) + gamma^m target_sf(s_{t+m})
    std::vector<double> bootstrap = target_state_sf(seg.bootstrap_state);
    double g = 1.0;
    std::fill(target_vec.begin(), target_vec.end(), 0.0);
    for (size_t k = 0; k < seg.states.size(); ++k) {
      std::vector<double> phi = encoder_->encode(seg.states[k]).to_dense();
      for (int j = 0; j < d; ++j) target_vec[j] += g * phi[j];
      g *= cfg_.gamma;
    }
    for (int j = 0; j < d; ++j) target_vec[j] += g * bootstrap[j];

    net_.forward(encoder_->encode(seg.states[0]), trace);
    int a = seg.actions[0];
    std::vector<double> dout(static_cast<size_t>(num_actions_) * d, 0.0);
    for (int j = 0; j < d; ++j) {
      double err = trace.output[static_cast<size_t>(a) * d + j] - target_vec[j];
      loss += err * err * inv;
      dout[static_cast<size_t>(a) * d + j] = 2.0 * err * inv;
    }
    net_.backward(trace, dout);
  }

  if (!std::isfinite(loss)) {
    std::ostringstream os;
    os << "td_update: non-finite loss at update " << updates_ << " (batch "
       << batch.size() << ", gamma " << cfg_.gamma << ")";
    throw std::runtime_error(os.str());
  }

  last_grad_norm_ = clip_global_grad_norm(net_, cfg_.grad_clip);
  opt_.step(net_);
  ++updates_;
  if (updates_ % cfg_.target_update_interval == 0) sync_target();
  return loss;
}

double SfLearner::train_step() {
  std::vector<ReplayBuffer::Segment> batch;
  batch.reserve(cfg_.batch);
  for (int i = 0; i < cfg_.batch; ++i) {
    batch.push_back(buffer_.sample_segment(cfg_.n_step, sample_rng_));
  }
  return td_update(batch);
}

void SfLearner::sync_target() {
  target_ = net_;
  ++syncs_;
}

}  // namespace sfl
