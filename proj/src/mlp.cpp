#include "dynsleuth/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dynsleuth::nn {
namespace {

void check_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw std::invalid_argument("mlp: need at least input and output dims");
  for (int d : dims) {
    if (d <= 0) throw std::invalid_argument("mlp: layer dims must be positive");
  }
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

MlpGrads MlpGrads::zeros_like(const MlpParams& params) {
  MlpGrads g;
  g.weights.resize(params.weights.size());
  g.biases.resize(params.biases.size());
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    g.weights[l].assign(params.weights[l].size(), 0.0);
    g.biases[l].assign(params.biases[l].size(), 0.0);
  }
  return g;
}

void MlpGrads::fill_zero() {
  for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

void MlpGrads::scale(double factor) {
  for (auto& w : weights)
    for (double& x : w) x *= factor;
  for (auto& b : biases)
    for (double& x : b) x *= factor;
}

MlpParams mlp_init(const std::vector<int>& dims, RngStream& rng) {
  check_dims(dims);
  MlpParams params;
  params.dims = dims;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l], fan_out = dims[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> w(static_cast<std::size_t>(fan_in) * fan_out);
    for (double& x : w) x = rng.uniform_real(-scale, scale);
    params.weights.push_back(std::move(w));
    params.biases.emplace_back(fan_out, 0.0);
  }
  return params;
}

std::vector<double> forward(const MlpParams& params, const std::vector<double>& x) {
  ForwardTrace trace;
  return forward_trace(params, x, trace);
}

std::vector<double> forward_trace(const MlpParams& params, const std::vector<double>& x,
                                  ForwardTrace& trace) {
  if (static_cast<int>(x.size()) != params.input_dim()) {
    throw std::invalid_argument("forward: input size mismatch");
  }
  trace.activations.clear();
  trace.activations.reserve(params.weights.size() + 1);
  trace.activations.push_back(x);
  const int layers = params.layer_count();
  for (int l = 0; l < layers; ++l) {
    const std::vector<double>& in = trace.activations.back();
    const int fan_in = params.dims[l], fan_out = params.dims[l + 1];
    std::vector<double> out(params.biases[l]);
    const double* w = params.weights[l].data();
    for (int i = 0; i < fan_in; ++i) {
      const double xi = in[i];
      if (xi == 0.0) continue;
      const double* row = w + static_cast<std::size_t>(i) * fan_out;
      for (int j = 0; j < fan_out; ++j) out[j] += xi * row[j];
    }
    if (l + 1 < layers) {
      for (double& v : out) v = v > 0.0 ? v : 0.0;
    }
    trace.activations.push_back(std::move(out));
  }
  return trace.activations.back();
}

void backward(const MlpParams& params, const ForwardTrace& trace,
              const std::vector<double>& upstream, MlpGrads& grads) {
  const int layers = params.layer_count();
  if (static_cast<int>(trace.activations.size()) != layers + 1) {
    throw std::invalid_argument("backward: trace does not match network");
  }
  if (static_cast<int>(upstream.size()) != params.output_dim()) {
    throw std::invalid_argument("backward: upstream gradient size mismatch");
  }
  std::vector<double> delta = upstream;
  for (int l = layers - 1; l >= 0; --l) {
    const std::vector<double>& in = trace.activations[l];
    const int fan_in = params.dims[l], fan_out = params.dims[l + 1];
    double* gw = grads.weights[l].data();
    double* gb = grads.biases[l].data();
    for (int j = 0; j < fan_out; ++j) gb[j] += delta[j];
    for (int i = 0; i < fan_in; ++i) {
      const double xi = in[i];
      if (xi == 0.0) continue;
      double* row = gw + static_cast<std::size_t>(i) * fan_out;
      for (int j = 0; j < fan_out; ++j) row[j] += xi * delta[j];
    }
    if (l == 0) break;
    std::vector<double> prev(fan_in, 0.0);
    const double* w = params.weights[l].data();
    for (int i = 0; i < fan_in; ++i) {
      // ReLU gate: the input to this layer is the previous layer's
      // post-activation, so a zero value means a closed gate.
      if (in[i] <= 0.0) continue;
      const double* row = w + static_cast<std::size_t>(i) * fan_out;
      double acc = 0.0;
      for (int j = 0; j < fan_out; ++j) acc += row[j] * delta[j];
      prev[i] = acc;
    }
    delta = std::move(prev);
  }
}

OptimizerState OptimizerState::zeros_like(const MlpParams& params) {
  OptimizerState state;
  state.first_moment = MlpGrads::zeros_like(params);
  state.second_moment = MlpGrads::zeros_like(params);
  return state;
}

void optimizer_step(MlpParams& params, const MlpGrads& grads, const OptimizerConfig& cfg,
                    OptimizerState& state) {
  for (const auto& w : grads.weights)
    if (!all_finite(w)) throw std::invalid_argument("optimizer_step: non-finite gradient");
  for (const auto& b : grads.biases)
    if (!all_finite(b)) throw std::invalid_argument("optimizer_step: non-finite gradient");

  if (cfg.algo == OptAlgo::Sgd) {
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      for (std::size_t i = 0; i < params.weights[l].size(); ++i)
        params.weights[l][i] -= cfg.lr * grads.weights[l][i];
      for (std::size_t i = 0; i < params.biases[l].size(); ++i)
        params.biases[l][i] -= cfg.lr * grads.biases[l][i];
    }
    return;
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  auto adam = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                  std::vector<double>& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  };
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    adam(params.weights[l], grads.weights[l], state.first_moment.weights[l],
         state.second_moment.weights[l]);
    adam(params.biases[l], grads.biases[l], state.first_moment.biases[l],
         state.second_moment.biases[l]);
  }
}

std::vector<double> softmax(const std::vector<double>& logits) {
  std::vector<double> p(logits.size());
  const double hi = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - hi);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

std::pair<double, std::vector<double>> softmax_cross_entropy(const std::vector<double>& logits,
                                                             int target_index) {
  if (target_index < 0 || target_index >= static_cast<int>(logits.size())) {
    throw std::invalid_argument("softmax_cross_entropy: target index out of range");
  }
  std::vector<double> grad = softmax(logits);
  const double loss = -std::log(std::max(grad[target_index], 1e-300));
  grad[target_index] -= 1.0;
  return {loss, std::move(grad)};
}

std::pair<double, std::vector<double>> mse_loss(const std::vector<double>& pred,
                                                const std::vector<double>& target) {
  if (pred.size() != target.size()) throw std::invalid_argument("mse_loss: size mismatch");
  const double n = static_cast<double>(pred.size());
  double loss = 0.0;
  std::vector<double> grad(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    loss += d * d;
    grad[i] = 2.0 * d / n;
  }
  return {loss / n, std::move(grad)};
}

}  // namespace dynsleuth::nn
