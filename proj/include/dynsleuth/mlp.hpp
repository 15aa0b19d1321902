#pragma once

#include <utility>
#include <vector>

#include "dynsleuth/rng.hpp"

namespace dynsleuth::nn {

/// Fully-connected network parameters. Layer l maps dims[l] -> dims[l+1];
/// weights are stored row-major by input index (w[i * fan_out + j]). ReLU
/// follows every layer except the last.
struct MlpParams {
  std::vector<int> dims;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  int layer_count() const { return static_cast<int>(weights.size()); }
  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  std::size_t parameter_count() const;
  bool operator==(const MlpParams&) const = default;
};

/// Gradient (or optimizer-moment) buffers shaped like MlpParams.
struct MlpGrads {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  static MlpGrads zeros_like(const MlpParams& params);
  void fill_zero();
  void scale(double factor);
};

/// Zero-mean scaled-uniform init: weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
/// biases zero. Deterministic per rng stream.
MlpParams mlp_init(const std::vector<int>& dims, RngStream& rng);

std::vector<double> forward(const MlpParams& params, const std::vector<double>& x);

/// Post-activation values per layer, including the input; activations[k] is
/// the input to layer k, activations.back() is the network output.
struct ForwardTrace {
  std::vector<std::vector<double>> activations;
};

std::vector<double> forward_trace(const MlpParams& params, const std::vector<double>& x,
                                  ForwardTrace& trace);

/// Accumulates exact reverse-mode gradients of upstream . d(output)/d(params)
/// into `grads` (call MlpGrads::fill_zero first for a fresh gradient).
void backward(const MlpParams& params, const ForwardTrace& trace,
              const std::vector<double>& upstream, MlpGrads& grads);

enum class OptAlgo { Sgd, Adam };

struct OptimizerConfig {
  OptAlgo algo = OptAlgo::Adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  MlpGrads first_moment;
  MlpGrads second_moment;
  long step = 0;

  static OptimizerState zeros_like(const MlpParams& params);
};

/// Applies one update in place. Throws std::invalid_argument on non-finite
/// gradients (the step is rejected, parameters untouched).
void optimizer_step(MlpParams& params, const MlpGrads& grads, const OptimizerConfig& cfg,
                    OptimizerState& state);

std::vector<double> softmax(const std::vector<double>& logits);

/// Returns (loss, d loss / d logits).
std::pair<double, std::vector<double>> softmax_cross_entropy(const std::vector<double>& logits,
                                                             int target_index);

/// Mean squared error over components; returns (loss, d loss / d pred).
std::pair<double, std::vector<double>> mse_loss(const std::vector<double>& pred,
                                                const std::vector<double>& target);

}  // namespace dynsleuth::nn
