#pragma once

#include <cstddef>
#include <vector>

#include "sfl/rng.hpp"

namespace sfl {

// Input feature vector. One-hot inputs carry a sparse tag so the first
// linear layer can skip the dense matvec; the result is bit-identical to
// the dense path.
struct Features {
  std::vector<double> dense;
  int hot = -1;
  double hot_scale = 1.0;
  int size = 0;

  static Features one_hot(int index, int dim, double scale);
  static Features from_dense(std::vector<double> v);
  std::vector<double> to_dense() const;
};

struct Linear {
  int in = 0;
  int out = 0;
  std::vector<double> w;   // out x in, row-major
  std::vector<double> b;
  std::vector<double> gw;
  std::vector<double> gb;

  void init(int in_dim, int out_dim, Rng& rng, bool zero);
  void forward(const Features& x, std::vector<double>& y) const;
  // Accumulates gw/gb; writes dx when non-null (dx is skipped for one-hot
  // inputs at the first layer since nothing upstream consumes it).
  void backward(const Features& x, const std::vector<double>& dy,
                std::vector<double>* dx);
  void zero_grad();
  size_t param_count() const { return w.size() + b.size(); }
};

// Fully-connected net with ReLU between layers; the output layer is linear.
class Mlp {
 public:
  Mlp() = default;
  Mlp(int input, const std::vector<int>& hidden, int output, Rng& rng,
      bool zero_last = false);

  struct Trace {
    Features input;
    // per layer: post-activation input to the next layer
    std::vector<std::vector<double>> activations;
    std::vector<double> output;
  };

  std::vector<double> forward(const Features& x) const;
  void forward(const Features& x, Trace& trace) const;
  // dout = dLoss/d(output); accumulates parameter gradients.
  void backward(const Trace& trace, const std::vector<double>& dout);

  void zero_grad();
  size_t param_count() const;
  int input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  int output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }

  std::vector<Linear>& layers() { return layers_; }
  const std::vector<Linear>& layers() const { return layers_; }

 private:
  std::vector<Linear> layers_;
};

// Scales gradients so their global L2 norm is at most max_norm; returns the
// pre-clip norm.
double clip_global_grad_norm(Mlp& net, double max_norm);

class Adam {
 public:
  Adam() = default;
  Adam(size_t param_count, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  void step(Mlp& net);
  long steps_taken() const { return t_; }
  void set_steps_taken(long t) { t_ = t; }

  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<double> m;
  std::vector<double> v;

 private:
  long t_ = 0;
};

}  // namespace sfl
