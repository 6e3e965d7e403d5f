#include "sfl/encoder.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sfl {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

Features OneHotEncoder::encode(int state) const {
  if (state < 0 || state >= num_states_) {
    throw std::invalid_argument("OneHotEncoder: unknown state " + std::to_string(state));
  }
  return Features::one_hot(state, num_states_, alpha_);
}

LearnedEncoder::LearnedEncoder(const Env& env, EncoderConfig cfg, Rng rng)
    : env_(env), cfg_(std::move(cfg)) {
  net_ = Mlp(env.obs_dim(), cfg_.hidden, cfg_.feature_dim, rng, false);
}

std::vector<double> LearnedEncoder::embed(const std::vector<double>& obs) const {
  std::vector<double> h = net_.forward(Features::from_dense(obs));
  double norm = 0.0;
  for (double v : h) norm += v * v;
  norm = std::sqrt(norm);
  if (norm < 1e-12) throw std::runtime_error("encoder emitted a zero vector");
  double scale = cfg_.alpha / norm;
  for (double& v : h) v *= scale;
  return h;
}

Features LearnedEncoder::encode(int state) const {
  return Features::from_dense(embed(env_.observation(state)));
}

size_t EpisodeStore::total_states() const {
  size_t n = 0;
  for (const auto& ep : episodes_) n += ep.size();
  return n;
}

TripletBatch sample_triplets(const EpisodeStore& store, const EncoderConfig& cfg,
                             int count, Rng& rng) {
  // Enumerate valid anchors: positions with a non-empty negative window.
  std::vector<std::pair<int, int>> anchors;  // (episode, t)
  const auto& eps = store.episodes();
  for (size_t e = 0; e < eps.size(); ++e) {
    int len = static_cast<int>(eps[e].size());
    for (int t = 0; t < len; ++t) {
      bool left = t - cfg.negative_near >= 0;
      bool right = t + cfg.negative_near <= len - 1;
      if (left || right) anchors.emplace_back(static_cast<int>(e), t);
    }
  }
  if (anchors.empty()) {
    throw std::runtime_error(
        "triplet sampling: no episode long enough for the negative window");
  }

  TripletBatch batch;
  batch.margin = cfg.margin;
  batch.states.reserve(count);
  for (int i = 0; i < count; ++i) {
    auto [e, t] = anchors[rng.uniform_below(anchors.size())];
    const auto& ep = eps[e];
    int len = static_cast<int>(ep.size());

    int plo = std::max(0, t - cfg.positive_window);
    int phi = std::min(len - 1, t + cfg.positive_window);
    int tp = rng.uniform_int(plo, phi);

    std::vector<int> negs;
    for (int u = std::max(0, t - cfg.negative_far); u <= t - cfg.negative_near; ++u) {
      negs.push_back(u);
    }
    for (int u = t + cfg.negative_near; u <= std::min(len - 1, t + cfg.negative_far); ++u) {
      negs.push_back(u);
    }
    int tn = negs[rng.uniform_below(negs.size())];
    batch.states.push_back({ep[t], ep[tp], ep[tn]});
  }
  return batch;
}

double triplet_loss_value(const LearnedEncoder& enc, const TripletBatch& batch) {
  if (batch.states.empty()) throw std::invalid_argument("empty triplet batch");
  double total = 0.0;
  for (const auto& [a, p, n] : batch.states) {
    auto fa = enc.embed(enc.env().observation(a));
    auto fp = enc.embed(enc.env().observation(p));
    auto fn = enc.embed(enc.env().observation(n));
    double h = sq_dist(fa, fp) - sq_dist(fa, fn) + batch.margin;
    if (h > 0.0) total += h;
  }
  return total / static_cast<double>(batch.states.size());
}

namespace {

// Backprop through y = alpha * h / |h| given dL/dy.
std::vector<double> norm_backward(const std::vector<double>& h, double alpha,
                                  const std::vector<double>& dy) {
  double norm2 = 0.0;
  for (double v : h) norm2 += v * v;
  double norm = std::sqrt(norm2);
  double hdy = 0.0;
  for (size_t i = 0; i < h.size(); ++i) hdy += h[i] * dy[i];
  std::vector<double> dh(h.size());
  for (size_t i = 0; i < h.size(); ++i) {
    dh[i] = alpha / norm * (dy[i] - h[i] * hdy / norm2);
  }
  return dh;
}

struct EmbedTrace {
  Mlp::Trace mlp;
  std::vector<double> raw;  // pre-normalization output
  std::vector<double> out;  // normalized
};

EmbedTrace embed_traced(const LearnedEncoder& enc, int state) {
  EmbedTrace t;
  enc.net().forward(Features::from_dense(enc.env().observation(state)), t.mlp);
  t.raw = t.mlp.output;
  double norm = 0.0;
  for (double v : t.raw) norm += v * v;
  norm = std::sqrt(norm);
  if (norm < 1e-12) throw std::runtime_error("encoder emitted a zero vector");
  t.out = t.raw;
  for (double& v : t.out) v *= enc.config().alpha / norm;
  return t;
}

}  // namespace

double triplet_loss(LearnedEncoder& enc, const TripletBatch& batch) {
  if (batch.states.empty()) throw std::invalid_argument("empty triplet batch");
  double total = 0.0;
  double inv = 1.0 / static_cast<double>(batch.states.size());
  double alpha = enc.config().alpha;
  for (const auto& [a, p, n] : batch.states) {
    EmbedTrace ta = embed_traced(enc, a);
    EmbedTrace tp = embed_traced(enc, p);
    EmbedTrace tn = embed_traced(enc, n);
    double h = sq_dist(ta.out, tp.out) - sq_dist(ta.out, tn.out) + batch.margin;
    if (h <= 0.0) continue;  // hinge inactive; subgradient 0 at the corner
    total += h;

    size_t d = ta.out.size();
    std::vector<double> da(d), dp(d), dn(d);
    for (size_t i = 0; i < d; ++i) {
      da[i] = inv * 2.0 * (tn.out[i] - tp.out[i]);
      dp[i] = inv * 2.0 * (tp.out[i] - ta.out[i]);
      dn[i] = inv * 2.0 * (ta.out[i] - tn.out[i]);
    }
    enc.net().backward(ta.mlp, norm_backward(ta.raw, alpha, da));
    enc.net().backward(tp.mlp, norm_backward(tp.raw, alpha, dp));
    enc.net().backward(tn.mlp, norm_backward(tn.raw, alpha, dn));
  }
  return total * inv;
}

double triplet_accuracy(const LearnedEncoder& enc, const TripletBatch& batch) {
  int hits = 0;
  for (const auto& [a, p, n] : batch.states) {
    auto fa = enc.embed(enc.env().observation(a));
    auto fp = enc.embed(enc.env().observation(p));
    auto fn = enc.embed(enc.env().observation(n));
    if (sq_dist(fa, fp) < sq_dist(fa, fn)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(batch.states.size());
}

EncoderTrainReport train_encoder(LearnedEncoder& enc, const EpisodeStore& store,
                                 long steps, Rng& rng) {
  EncoderTrainReport report;
  const EncoderConfig& cfg = enc.config();
  Rng eval_rng = rng.split("encoder-heldout");
  TripletBatch heldout = sample_triplets(store, cfg, 256, eval_rng);
  report.initial_loss = triplet_loss_value(enc, heldout);
  report.final_loss = report.initial_loss;
  if (steps <= 0) return report;

  Adam opt(enc.net().param_count(), cfg.lr);
  for (long s = 0; s < steps; ++s) {
    TripletBatch batch = sample_triplets(store, cfg, cfg.batch, rng);
    enc.net().zero_grad();
    double loss = triplet_loss(enc, batch);
    if (!std::isfinite(loss) || loss > 10.0 * std::max(report.initial_loss, cfg.margin)) {
      std::ostringstream os;
      os << "encoder training diverged at step " << s << ": loss " << loss
         << " (initial " << report.initial_loss << ")";
      throw std::runtime_error(os.str());
    }
    opt.step(enc.net());
  }
  report.steps = steps;
  report.final_loss = triplet_loss_value(enc, heldout);
  return report;
}

}  // namespace sfl
