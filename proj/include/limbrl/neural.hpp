#pragma once

// Small fully connected networks with hand-written reverse mode, an Adam
// optimizer and a central-difference gradient checker. All parameters of a
// network live in one flat vector so optimizers, norm clipping and
// checkpoints treat them uniformly.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "limbrl/error.hpp"

namespace limbrl {

enum class Activation { Tanh, Identity };

inline const char* to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "identity"; }

inline Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + s + "'");
}

struct LayerShape {
  int inputs = 0;
  int outputs = 0;
  Activation activation = Activation::Identity;

  bool operator==(const LayerShape&) const = default;
};

struct ForwardCache {
  std::vector<Eigen::VectorXd> inputs;  // input to each layer
  std::vector<Eigen::VectorXd> pre;     // pre-activation of each layer
  std::uint64_t revision = 0;
  std::size_t num_params = 0;
};

// Gradient of a scalar with respect to every parameter (same layout as
// Network::params()) and to the network input.
struct Gradient {
  Eigen::VectorXd params;
  Eigen::VectorXd input;
};

class Network {
 public:
  Network() = default;

  explicit Network(std::vector<LayerShape> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ShapeError("network needs at least one layer");
    std::size_t n = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      if (l.inputs <= 0 || l.outputs <= 0) throw ShapeError("layer sizes must be positive");
      if (i > 0 && layers_[i - 1].outputs != l.inputs)
        throw ShapeError("layer " + std::to_string(i) + " input size does not match previous output size");
      offsets_.push_back(n);
      n += static_cast<std::size_t>(l.inputs) * l.outputs + l.outputs;
    }
    params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  }

  // Hidden layers of `hidden` width with `hidden_act`, identity output layer.
  static Network mlp(int inputs, const std::vector<int>& hidden, int outputs,
                     Activation hidden_act = Activation::Tanh) {
    std::vector<LayerShape> shapes;
    int prev = inputs;
    for (int h : hidden) {
      shapes.push_back({prev, h, hidden_act});
      prev = h;
    }
    shapes.push_back({prev, outputs, Activation::Identity});
    return Network(std::move(shapes));
  }

  const std::vector<LayerShape>& layers() const { return layers_; }
  int input_size() const { return layers_.front().inputs; }
  int output_size() const { return layers_.back().outputs; }
  std::size_t num_params() const { return static_cast<std::size_t>(params_.size()); }

  const Eigen::VectorXd& params() const { return params_; }
  // Any caller taking mutable access invalidates outstanding caches.
  Eigen::VectorXd& mutable_params() {
    ++revision_;
    return params_;
  }
  std::uint64_t revision() const { return revision_; }

  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t i) const {
    return {params_.data() + offsets_[i], layers_[i].outputs, layers_[i].inputs};
  }
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t i) const {
    return {params_.data() + offsets_[i] + static_cast<std::size_t>(layers_[i].inputs) * layers_[i].outputs,
            layers_[i].outputs};
  }
  Eigen::Map<Eigen::MatrixXd> mutable_weight(std::size_t i) {
    ++revision_;
    return {params_.data() + offsets_[i], layers_[i].outputs, layers_[i].inputs};
  }
  Eigen::Map<Eigen::VectorXd> mutable_bias(std::size_t i) {
    ++revision_;
    return {params_.data() + offsets_[i] + static_cast<std::size_t>(layers_[i].inputs) * layers_[i].outputs,
            layers_[i].outputs};
  }

  std::size_t weight_offset(std::size_t i) const { return offsets_[i]; }
  std::size_t bias_offset(std::size_t i) const {
    return offsets_[i] + static_cast<std::size_t>(layers_[i].inputs) * layers_[i].outputs;
  }

  // Uniform fan-in initialisation: W ~ U(-a, a) with a = gain * sqrt(3 / fan_in),
  // so Var(W) = gain^2 / fan_in. Biases start at zero.
  template <class Rng>
  void init_uniform(Rng& rng, double hidden_gain, double output_gain) {
    auto& p = mutable_params();
    p.setZero();
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const double gain = (i + 1 == layers_.size()) ? output_gain : hidden_gain;
      const double a = gain * std::sqrt(3.0 / layers_[i].inputs);
      std::uniform_real_distribution<double> dist(-a, a);
      const std::size_t n = static_cast<std::size_t>(layers_[i].inputs) * layers_[i].outputs;
      for (std::size_t k = 0; k < n; ++k) p[static_cast<Eigen::Index>(offsets_[i] + k)] = dist(rng);
    }
  }

 private:
  std::vector<LayerShape> layers_;
  std::vector<std::size_t> offsets_;
  Eigen::VectorXd params_;
  std::uint64_t revision_ = 0;
};

struct ForwardResult {
  Eigen::VectorXd output;
  ForwardCache cache;
};

inline ForwardResult forward(const Network& net, const Eigen::VectorXd& input) {
  if (input.size() != net.input_size())
    throw ShapeError("network expects input of size " + std::to_string(net.input_size()) + ", got " +
                     std::to_string(input.size()));
  ForwardResult r;
  r.cache.revision = net.revision();
  r.cache.num_params = net.num_params();
  Eigen::VectorXd x = input;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    r.cache.inputs.push_back(x);
    Eigen::VectorXd z = net.weight(i) * x + net.bias(i);
    r.cache.pre.push_back(z);
    x = net.layers()[i].activation == Activation::Tanh ? Eigen::VectorXd(z.array().tanh()) : z;
  }
  r.output = std::move(x);
  return r;
}

// Output only; skips building the cache.
inline Eigen::VectorXd evaluate(const Network& net, const Eigen::VectorXd& input) {
  if (input.size() != net.input_size()) throw ShapeError("network input size mismatch");
  Eigen::VectorXd x = input;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    Eigen::VectorXd z = net.weight(i) * x + net.bias(i);
    x = net.layers()[i].activation == Activation::Tanh ? Eigen::VectorXd(z.array().tanh()) : z;
  }
  return x;
}

// Reverse pass for the scalar output . output_grad.
inline Gradient backward(const Network& net, const ForwardCache& cache, const Eigen::VectorXd& output_grad) {
  if (cache.revision != net.revision() || cache.num_params != net.num_params() ||
      cache.pre.size() != net.layers().size())
    throw UsageError("forward cache is stale: network parameters changed since forward()");
  if (output_grad.size() != net.output_size()) throw ShapeError("output gradient size mismatch");

  Gradient g;
  g.params = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.num_params()));
  Eigen::VectorXd delta = output_grad;
  for (std::size_t k = net.layers().size(); k-- > 0;) {
    const auto& shape = net.layers()[k];
    if (shape.activation == Activation::Tanh) {
      const Eigen::ArrayXd t = cache.pre[k].array().tanh();
      delta = (delta.array() * (1.0 - t * t)).matrix();
    }
    Eigen::Map<Eigen::MatrixXd> dw(g.params.data() + net.weight_offset(k), shape.outputs, shape.inputs);
    dw.noalias() = delta * cache.inputs[k].transpose();
    g.params.segment(static_cast<Eigen::Index>(net.bias_offset(k)), shape.outputs) = delta;
    delta = net.weight(k).transpose() * delta;
  }
  g.input = std::move(delta);
  return g;
}

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_size(std::size_t n, double lr) {
    AdamState s;
    s.m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    s.v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    s.lr = lr;
    return s;
  }
};

// One bias-corrected Adam descent step on `params`.
inline void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state) {
  if (params.size() != grad.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw ShapeError("adam: parameter, gradient and moment sizes differ");
  ++state.step;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  params.array() -= state.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
}

inline void adam_step(Network& net, const Eigen::VectorXd& grad, AdamState& state) {
  adam_step(net.mutable_params(), grad, state);
}

// Loss of a network output; writes dLoss/dOutput into `grad`.
using LossFn = std::function<double(const Eigen::VectorXd& output, Eigen::VectorXd& grad)>;
using BackwardFn = std::function<Gradient(const Network&, const ForwardCache&, const Eigen::VectorXd&)>;

// Largest relative disagreement between the analytic parameter gradient and a
// central difference (step h) over all parameters. The denominator is floored
// at 1e-6 * max(1, |loss|): below that, round-off in the difference quotient
// (about eps * |loss| / h) is larger than the gradient itself.
inline double gradient_check(const Network& net, const LossFn& loss, const Eigen::VectorXd& input,
                             const BackwardFn& backward_fn = backward, double h = 1e-5) {
  Eigen::VectorXd dout;
  const auto fwd = forward(net, input);
  const double base = loss(fwd.output, dout);
  const double floor = 1e-6 * std::max(1.0, std::abs(base));
  const Gradient analytic = backward_fn(net, fwd.cache, dout);
  if (analytic.params.size() != static_cast<Eigen::Index>(net.num_params()))
    throw ShapeError("gradient has wrong size");

  Network probe = net;
  Eigen::VectorXd scratch;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.params.size(); ++i) {
    const double orig = net.params()[i];
    probe.mutable_params()[i] = orig + h;
    const double up = loss(evaluate(probe, input), scratch);
    probe.mutable_params()[i] = orig - h;
    const double down = loss(evaluate(probe, input), scratch);
    probe.mutable_params()[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic.params[i];
    const double err = std::abs(a - numeric) / std::max(floor, std::abs(a) + std::abs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

inline bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

// Scales the concatenated gradients down so their joint L2 norm is at most
// `max_norm`. Returns the norm before clipping.
inline double clip_global_norm(std::vector<Eigen::VectorXd*> grads, double max_norm) {
  double sq = 0.0;
  for (const auto* g : grads) sq += g->squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / (norm + 1e-6);
    for (auto* g : grads) *g *= scale;
  }
  return norm;
}

}  // namespace limbrl
