#include "rewimp/nn.hpp"

#include <cmath>
#include <string>

#include "rewimp/error.hpp"
#include "rewimp/rng.hpp"

namespace rewimp {

MlpParams mlp_init(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) {
    fail(ErrorKind::invalid_argument,
         "mlp_init: need at least an input and an output layer");
  }
  for (int s : layer_sizes) {
    if (s < 1) {
      fail(ErrorKind::invalid_argument,
           "mlp_init: non-positive layer size " + std::to_string(s));
    }
  }
  MlpParams params;
  params.layer_sizes = layer_sizes;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) {
        w(r, c) = rng.uniform(-bound, bound);
      }
    }
    params.weights.push_back(std::move(w));
    params.biases.push_back(Vector::Zero(fan_out));
  }
  return params;
}

namespace {

void check_input_dim(const MlpParams& params, const Matrix& inputs) {
  if (inputs.cols() != params.input_dim()) {
    fail(ErrorKind::shape, "mlp_forward: input has " +
                               std::to_string(inputs.cols()) +
                               " columns, network expects " +
                               std::to_string(params.input_dim()));
  }
}

}  // namespace

ForwardCache mlp_forward_cached(const MlpParams& params, const Matrix& inputs) {
  check_input_dim(params, inputs);
  ForwardCache cache;
  cache.layers.reserve(params.weights.size() + 1);
  cache.layers.push_back(inputs);
  for (int l = 0; l < params.num_layers(); ++l) {
    Matrix z = cache.layers.back() * params.weights[l].transpose();
    z.rowwise() += params.biases[l].transpose();
    if (l + 1 < params.num_layers()) {
      z = z.cwiseMax(0.0);  // ReLU on hidden layers only
    }
    cache.layers.push_back(std::move(z));
  }
  return cache;
}

Matrix mlp_forward(const MlpParams& params, const Matrix& inputs) {
  return mlp_forward_cached(params, inputs).output();
}

Gradients mlp_backward(const MlpParams& params, const ForwardCache& cache,
                       const Matrix& output_grad, Matrix* input_grad) {
  const int n_layers = params.num_layers();
  if (output_grad.rows() != cache.output().rows() ||
      output_grad.cols() != cache.output().cols()) {
    fail(ErrorKind::shape, "mlp_backward: output_grad shape mismatch");
  }
  Gradients grads;
  grads.weights.resize(n_layers);
  grads.biases.resize(n_layers);
  Matrix delta = output_grad;
  for (int l = n_layers - 1; l >= 0; --l) {
    if (l + 1 < n_layers) {
      // ReLU mask of layer l's post-activation output
      delta = delta.cwiseProduct(
          (cache.layers[l + 1].array() > 0.0).cast<double>().matrix());
    }
    grads.weights[l].noalias() = delta.transpose() * cache.layers[l];
    grads.biases[l] = delta.colwise().sum().transpose();
    if (l > 0 || input_grad != nullptr) {
      delta = delta * params.weights[l];
    }
  }
  if (input_grad != nullptr) {
    *input_grad = std::move(delta);
  }
  return grads;
}

Gradients mlp_backward(const MlpParams& params, const Matrix& inputs,
                       const Matrix& output_grad, Matrix* input_grad) {
  return mlp_backward(params, mlp_forward_cached(params, inputs), output_grad,
                      input_grad);
}

std::pair<double, Vector> mse_loss(const Vector& pred, const Vector& target) {
  if (pred.size() == 0) {
    fail(ErrorKind::invalid_argument, "mse_loss: empty vectors");
  }
  if (pred.size() != target.size()) {
    fail(ErrorKind::shape, "mse_loss: length mismatch");
  }
  const double n = static_cast<double>(pred.size());
  Vector residual = pred - target;
  const double loss = residual.squaredNorm() / n;
  Vector grad = (2.0 / n) * residual;
  return {loss, std::move(grad)};
}

std::pair<double, Vector> expectile_loss(const Vector& pred,
                                         const Vector& target, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    fail(ErrorKind::invalid_argument,
         "expectile_loss: tau must lie in (0,1), got " + std::to_string(tau));
  }
  if (pred.size() == 0) {
    fail(ErrorKind::invalid_argument, "expectile_loss: empty vectors");
  }
  if (pred.size() != target.size()) {
    fail(ErrorKind::shape, "expectile_loss: length mismatch");
  }
  const double n = static_cast<double>(pred.size());
  double loss = 0.0;
  Vector grad(pred.size());
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double u = target[i] - pred[i];
    const double w = (u < 0.0) ? (1.0 - tau) : tau;
    loss += w * u * u;
    grad[i] = -2.0 * w * u;  // d/d pred
  }
  loss /= n;
  grad /= n;
  return {loss, std::move(grad)};
}

AdamState adam_init(const MlpParams& params, double lr, double beta1,
                    double beta2, double epsilon) {
  AdamState state;
  state.lr = lr;
  state.beta1 = beta1;
  state.beta2 = beta2;
  state.epsilon = epsilon;
  for (int l = 0; l < params.num_layers(); ++l) {
    state.m_weights.push_back(Matrix::Zero(params.weights[l].rows(),
                                           params.weights[l].cols()));
    state.v_weights.push_back(Matrix::Zero(params.weights[l].rows(),
                                           params.weights[l].cols()));
    state.m_biases.push_back(Vector::Zero(params.biases[l].size()));
    state.v_biases.push_back(Vector::Zero(params.biases[l].size()));
  }
  return state;
}

namespace {

template <typename T>
void adam_update_tensor(T& param, const T& grad, T& m, T& v, double lr_t,
                        double beta1, double beta2, double epsilon) {
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  param.array() -= lr_t * m.array() / (v.array().sqrt() + epsilon);
}

}  // namespace

void adam_step_inplace(MlpParams& params, const Gradients& grads,
                       AdamState& state) {
  const int n_layers = params.num_layers();
  if (static_cast<int>(grads.weights.size()) != n_layers ||
      static_cast<int>(state.m_weights.size()) != n_layers) {
    fail(ErrorKind::shape, "adam_step: layer count mismatch");
  }
  for (int l = 0; l < n_layers; ++l) {
    if (grads.weights[l].rows() != params.weights[l].rows() ||
        grads.weights[l].cols() != params.weights[l].cols() ||
        grads.biases[l].size() != params.biases[l].size()) {
      fail(ErrorKind::shape,
           "adam_step: gradient shape mismatch at layer " + std::to_string(l));
    }
    if (!grads.weights[l].allFinite() || !grads.biases[l].allFinite()) {
      fail(ErrorKind::numeric,
           "adam_step: non-finite gradient at layer " + std::to_string(l));
    }
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  // fold both bias corrections into the step size
  const double lr_t = state.lr * std::sqrt(1.0 - std::pow(state.beta2, t)) /
                      (1.0 - std::pow(state.beta1, t));
  // epsilon is applied to the bias-corrected sqrt(v); rescale so the
  // folded form stays algebraically identical
  const double eps_t = state.epsilon * std::sqrt(1.0 - std::pow(state.beta2, t));
  for (int l = 0; l < n_layers; ++l) {
    adam_update_tensor(params.weights[l], grads.weights[l], state.m_weights[l],
                       state.v_weights[l], lr_t, state.beta1, state.beta2,
                       eps_t);
    adam_update_tensor(params.biases[l], grads.biases[l], state.m_biases[l],
                       state.v_biases[l], lr_t, state.beta1, state.beta2,
                       eps_t);
  }
}

std::pair<MlpParams, AdamState> adam_step(const MlpParams& params,
                                          const Gradients& grads,
                                          const AdamState& state) {
  MlpParams new_params = params;
  AdamState new_state = state;
  adam_step_inplace(new_params, grads, new_state);
  return {std::move(new_params), std::move(new_state)};
}

}  // namespace rewimp
