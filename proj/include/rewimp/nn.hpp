#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

namespace rewimp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Dense MLP parameters. weights[l] has shape (layer_sizes[l+1], layer_sizes[l]),
// biases[l] has length layer_sizes[l+1]. Hidden layers are ReLU, the final
// layer is linear.
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int num_layers() const { return static_cast<int>(weights.size()); }
};

// Same shape tree as MlpParams.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

// Adam moments plus hyperparameters. step_count advances by one per step.
struct AdamState {
  std::vector<Matrix> m_weights, v_weights;
  std::vector<Vector> m_biases, v_biases;
  std::int64_t step_count = 0;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Activations cached by a forward pass; cache.layers[0] is the input batch,
// cache.layers[l] the post-activation output of layer l-1.
struct ForwardCache {
  std::vector<Matrix> layers;
  const Matrix& output() const { return layers.back(); }
};

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases.
// Identical (layer_sizes, seed) gives bit-identical parameters.
MlpParams mlp_init(const std::vector<int>& layer_sizes, std::uint64_t seed);

// Batch-rows convention: inputs is B x in, output is B x out.
Matrix mlp_forward(const MlpParams& params, const Matrix& inputs);
ForwardCache mlp_forward_cached(const MlpParams& params, const Matrix& inputs);

// Backprop of sum_b <output_grad_b, output_b> w.r.t. parameters. The caller
// folds any 1/B loss normalization into output_grad. When input_grad is
// non-null it receives d/d(inputs), which lets composite objectives chain
// through networks (e.g. dQ/da into the actor).
Gradients mlp_backward(const MlpParams& params, const ForwardCache& cache,
                       const Matrix& output_grad, Matrix* input_grad = nullptr);
Gradients mlp_backward(const MlpParams& params, const Matrix& inputs,
                       const Matrix& output_grad, Matrix* input_grad = nullptr);

// loss = mean((pred - target)^2), grad_i = 2 (pred_i - target_i) / N.
std::pair<double, Vector> mse_loss(const Vector& pred, const Vector& target);

// Asymmetric squared loss: mean(|tau - 1[u<0]| u^2) with u = target - pred.
// tau = 0.5 is half the MSE.
std::pair<double, Vector> expectile_loss(const Vector& pred,
                                         const Vector& target, double tau);

AdamState adam_init(const MlpParams& params, double lr, double beta1 = 0.9,
                    double beta2 = 0.999, double epsilon = 1e-8);

// Standard bias-corrected Adam. Inputs are untouched; returns the updated
// (params, state) pair.
std::pair<MlpParams, AdamState> adam_step(const MlpParams& params,
                                          const Gradients& grads,
                                          const AdamState& state);

// In-place variant used by training loops to avoid copying every step.
void adam_step_inplace(MlpParams& params, const Gradients& grads,
                       AdamState& state);

}  // namespace rewimp
