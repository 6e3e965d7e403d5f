#include "sfl/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace sfl {

Features Features::one_hot(int index, int dim, double scale) {
  Features f;
  f.hot = index;
  f.hot_scale = scale;
  f.size = dim;
  return f;
}

Features Features::from_dense(std::vector<double> v) {
  Features f;
  f.size = static_cast<int>(v.size());
  f.dense = std::move(v);
  return f;
}

std::vector<double> Features::to_dense() const {
  if (hot < 0) return dense;
  std::vector<double> v(size, 0.0);
  v[hot] = hot_scale;
  return v;
}

void Linear::init(int in_dim, int out_dim, Rng& rng, bool zero) {
  in = in_dim;
  out = out_dim;
  w.assign(static_cast<size_t>(in) * out, 0.0);
  b.assign(out, 0.0);
  gw.assign(w.size(), 0.0);
  gb.assign(b.size(), 0.0);
  if (!zero) {
    double stddev = std::sqrt(2.0 / in);
    for (auto& x : w) x = rng.normal(0.0, stddev);
  }
}

void Linear::forward(const Features& x, std::vector<double>& y) const {
  y.assign(out, 0.0);
  if (x.hot >= 0) {
    for (int o = 0; o < out; ++o) {
      y[o] = b[o] + x.hot_scale * w[static_cast<size_t>(o) * in + x.hot];
    }
    return;
  }
  for (int o = 0; o < out; ++o) {
    const double* row = &w[static_cast<size_t>(o) * in];
    double acc = b[o];
    for (int i = 0; i < in; ++i) acc += row[i] * x.dense[i];
    y[o] = acc;
  }
}

void Linear::backward(const Features& x, const std::vector<double>& dy,
                      std::vector<double>* dx) {
  if (x.hot >= 0) {
    for (int o = 0; o < out; ++o) {
      gw[static_cast<size_t>(o) * in + x.hot] += dy[o] * x.hot_scale;
      gb[o] += dy[o];
    }
    if (dx) {
      dx->assign(in, 0.0);
      for (int o = 0; o < out; ++o) {
        const double* row = &w[static_cast<size_t>(o) * in];
        for (int i = 0; i < in; ++i) (*dx)[i] += row[i] * dy[o];
      }
    }
    return;
  }
  for (int o = 0; o < out; ++o) {
    double* grow = &gw[static_cast<size_t>(o) * in];
    double d = dy[o];
    for (int i = 0; i < in; ++i) grow[i] += d * x.dense[i];
    gb[o] += d;
  }
  if (dx) {
    dx->assign(in, 0.0);
    for (int o = 0; o < out; ++o) {
      const double* row = &w[static_cast<size_t>(o) * in];
      double d = dy[o];
      for (int i = 0; i < in; ++i) (*dx)[i] += row[i] * d;
    }
  }
}

void Linear::zero_grad() {
  gw.assign(gw.size(), 0.0);
  gb.assign(gb.size(), 0.0);
}

Mlp::Mlp(int input, const std::vector<int>& hidden, int output, Rng& rng, bool zero_last) {
  int prev = input;
  layers_.resize(hidden.size() + 1);
  for (size_t i = 0; i < hidden.size(); ++i) {
    layers_[i].init(prev, hidden[i], rng, false);
    prev = hidden[i];
  }
  layers_.back().init(prev, output, rng, zero_last);
}

std::vector<double> Mlp::forward(const Features& x) const {
  std::vector<double> cur;
  layers_[0].forward(x, cur);
  for (size_t l = 1; l < layers_.size(); ++l) {
    for (auto& v : cur) v = v > 0.0 ? v : 0.0;  // ReLU
    std::vector<double> next;
    layers_[l].forward(Features::from_dense(std::move(cur)), next);
    cur = std::move(next);
  }
  return cur;
}

void Mlp::forward(const Features& x, Trace& trace) const {
  trace.input = x;
  trace.activations.clear();
  std::vector<double> cur;
  layers_[0].forward(x, cur);
  for (size_t l = 1; l < layers_.size(); ++l) {
    for (auto& v : cur) v = v > 0.0 ? v : 0.0;
    trace.activations.push_back(cur);
    std::vector<double> next;
    layers_[l].forward(Features::from_dense(std::move(cur)), next);
    cur = std::move(next);
  }
  trace.output = std::move(cur);
}

void Mlp::backward(const Trace& trace, const std::vector<double>& dout) {
  std::vector<double> dy = dout;
  for (size_t l = layers_.size(); l-- > 0;) {
    if (l == 0) {
      layers_[0].backward(trace.input, dy, nullptr);
      break;
    }
    const std::vector<double>& act = trace.activations[l - 1];
    std::vector<double> dx;
    layers_[l].backward(Features::from_dense(act), dy, &dx);
    // ReLU subgradient: zero where the activation was clamped
    for (size_t i = 0; i < dx.size(); ++i) {
      if (act[i] <= 0.0) dx[i] = 0.0;
    }
    dy = std::move(dx);
  }
}

void Mlp::zero_grad() {
  for (auto& l : layers_) l.zero_grad();
}

size_t Mlp::param_count() const {
  size_t n = 0;
  for (const auto& l : layers_) n += l.param_count();
  return n;
}

double clip_global_grad_norm(Mlp& net, double max_norm) {
  double sq = 0.0;
  for (const auto& l : net.layers()) {
    for (double g : l.gw) sq += g * g;
    for (double g : l.gb) sq += g * g;
  }
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    double scale = max_norm / norm;
    for (auto& l : net.layers()) {
      for (double& g : l.gw) g *= scale;
      for (double& g : l.gb) g *= scale;
    }
  }
  return norm;
}

Adam::Adam(size_t param_count, double lr_in, double b1, double b2, double eps_in)
    : lr(lr_in), beta1(b1), beta2(b2), eps(eps_in) {
  m.assign(param_count, 0.0);
  v.assign(param_count, 0.0);
}

void Adam::step(Mlp& net) {
  ++t_;
  double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  size_t k = 0;
  auto update = [&](double& p, double g) {
    m[k] = beta1 * m[k] + (1.0 - beta1) * g;
    v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
    double mh = m[k] / c1;
    double vh = v[k] / c2;
    p -= lr * mh / (std::sqrt(vh) + eps);
    ++k;
  };
  for (auto& l : net.layers()) {
    for (size_t i = 0; i < l.w.size(); ++i) update(l.w[i], l.gw[i]);
    for (size_t i = 0; i < l.b.size(); ++i) update(l.b[i], l.gb[i]);
  }
  if (k != m.size()) throw std::logic_error("Adam: parameter count mismatch");
}

}  // namespace sfl
