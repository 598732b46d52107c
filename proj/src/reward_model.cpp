#include "rewimp/reward_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rewimp/checkpoint.hpp"
#include "rewimp/error.hpp"
#include "rewimp/rng.hpp"

namespace rewimp {

using nlohmann::json;

Matrix NormStats::apply(const Matrix& rows) const {
  Matrix out = rows;
  out.rowwise() -= mean.transpose();
  out.array().rowwise() /= stddev.transpose().array();
  return out;
}

Vector NormStats::apply(const Vector& row) const {
  return (row - mean).cwiseQuotient(stddev);
}

NormStats compute_norm_stats(const Matrix& rows) {
  NormStats stats;
  const double n = static_cast<double>(rows.rows());
  stats.mean = rows.colwise().mean().transpose();
  Matrix centered = rows;
  centered.rowwise() -= stats.mean.transpose();
  stats.stddev =
      (centered.array().square().colwise().sum() / n).sqrt().transpose();
  stats.stddev = stats.stddev.cwiseMax(1e-6);
  return stats;
}

namespace {

// (state || action) design matrix and reward targets of a labeled set
void build_regression_data(const TransitionSet& labeled, Matrix& inputs,
                           Vector& targets) {
  const std::size_t n = labeled.size();
  if (n == 0) {
    fail(ErrorKind::invalid_argument, "train_reward_model: empty dataset");
  }
  const Eigen::Index sd = labeled.transitions.front().state.size();
  const Eigen::Index ad = labeled.transitions.front().action.size();
  inputs.resize(n, sd + ad);
  targets.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = labeled.transitions[i];
    if (!t.reward.has_value()) {
      fail(ErrorKind::invalid_argument,
           "train_reward_model: transition " + std::to_string(i) +
               " has no reward; impute expects a fully labeled input");
    }
    inputs.row(i).head(sd) = t.state.transpose();
    inputs.row(i).tail(ad) = t.action.transpose();
    targets[i] = *t.reward;
  }
}

}  // namespace

RewardModel train_reward_model(const TransitionSet& labeled,
                               const RewardModelConfig& cfg,
                               RewardTrainingLog* log) {
  if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.learning_rate <= 0.0) {
    fail(ErrorKind::invalid_argument, "train_reward_model: bad config");
  }
  Matrix inputs;
  Vector targets;
  build_regression_data(labeled, inputs, targets);
  const std::size_t n = labeled.size();
  const Eigen::Index in_dim = inputs.cols();

  RewardModel model;
  model.config = cfg;
  if (cfg.input_normalization) {
    model.norm_stats = compute_norm_stats(inputs);
  } else {
    model.norm_stats.mean = Vector::Zero(in_dim);
    model.norm_stats.stddev = Vector::Ones(in_dim);
  }
  const Matrix x = model.norm_stats.apply(inputs);

  std::vector<int> layer_sizes;
  layer_sizes.push_back(static_cast<int>(in_dim));
  layer_sizes.insert(layer_sizes.end(), cfg.hidden_sizes.begin(),
                     cfg.hidden_sizes.end());
  layer_sizes.push_back(1);
  model.params = mlp_init(layer_sizes, derive_seed(cfg.seed, "reward-model"));
  AdamState opt = adam_init(model.params, cfg.learning_rate);

  const std::size_t batch =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed(cfg.seed, "reward-model-shuffle"));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates reshuffle each epoch
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const std::size_t j = i + shuffle_rng.uniform_int(n - i);
      std::swap(order[i], order[j]);
    }
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t count = std::min(batch, n - start);
      Matrix bx(count, in_dim);
      Vector by(count);
      for (std::size_t i = 0; i < count; ++i) {
        bx.row(i) = x.row(order[start + i]);
        by[i] = targets[order[start + i]];
      }
      ForwardCache cache = mlp_forward_cached(model.params, bx);
      auto [loss, grad] = mse_loss(cache.output().col(0), by);
      if (!std::isfinite(loss)) {
        fail(ErrorKind::numeric,
             "train_reward_model: non-finite loss at epoch " +
                 std::to_string(epoch));
      }
      Gradients grads = mlp_backward(model.params, cache, grad);
      adam_step_inplace(model.params, grads, opt);
      epoch_loss += loss;
      ++n_batches;
    }
    if (log != nullptr) {
      log->epoch_loss.push_back(epoch_loss / static_cast<double>(n_batches));
    }
  }
  return model;
}

double predict_reward(const RewardModel& model, const Vector& state,
                      const Vector& action) {
  if (state.size() + action.size() != model.params.input_dim()) {
    fail(ErrorKind::shape, "predict_reward: state+action dimension mismatch");
  }
  Vector input(state.size() + action.size());
  input << state, action;
  Matrix row = model.norm_stats.apply(input).transpose();
  return mlp_forward(model.params, row)(0, 0);
}

Vector predict_rewards(const RewardModel& model, const TransitionSet& data) {
  const std::size_t n = data.size();
  Vector out(n);
  if (n == 0) return out;
  const Eigen::Index sd = data.transitions.front().state.size();
  const Eigen::Index ad = data.transitions.front().action.size();
  if (sd + ad != model.params.input_dim()) {
    fail(ErrorKind::shape, "predict_rewards: dimension mismatch");
  }
  // row-at-a-time so outputs are bit-identical to predict_reward (batched
  // GEMM changes the accumulation order at the ULP level)
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = data.transitions[i];
    out[i] = predict_reward(model, t.state, t.action);
  }
  return out;
}

TransitionSet build_imputed_dataset(const TransitionSet& labeled,
                                    const TransitionSet& unlabeled,
                                    const RewardModel& model) {
  if (labeled.env_id != unlabeled.env_id) {
    fail(ErrorKind::validation, "build_imputed_dataset: env_id mismatch (" +
                                    labeled.env_id + " vs " +
                                    unlabeled.env_id + ")");
  }
  if (!labeled.fully_labeled()) {
    fail(ErrorKind::validation,
         "build_imputed_dataset: labeled set has missing rewards");
  }
  if (!unlabeled.fully_unlabeled()) {
    fail(ErrorKind::validation,
         "build_imputed_dataset: unlabeled set already carries rewards");
  }
  TransitionSet out;
  out.env_id = labeled.env_id;
  out.tier = labeled.tier;
  out.generation_seed = labeled.generation_seed;
  out.policy_descriptor = labeled.policy_descriptor + " + " +
                          std::to_string(unlabeled.size()) + " imputed";
  out.transitions = labeled.transitions;  // ground-truth rewards untouched
  Vector imputed = predict_rewards(model, unlabeled);
  out.transitions.reserve(labeled.size() + unlabeled.size());
  for (std::size_t i = 0; i < unlabeled.size(); ++i) {
    Transition t = unlabeled.transitions[i];
    t.reward = imputed[i];
    out.transitions.push_back(std::move(t));
  }
  return out;
}

ImputationReport imputation_report(const RewardModel& model,
                                   const TransitionSet& holdout) {
  if (holdout.size() == 0) {
    fail(ErrorKind::invalid_argument, "imputation_report: empty holdout");
  }
  if (!holdout.fully_labeled()) {
    fail(ErrorKind::invalid_argument,
         "imputation_report: holdout must carry ground-truth rewards");
  }
  const std::size_t n = holdout.size();
  Vector pred = predict_rewards(model, holdout);
  Vector truth(n);
  for (std::size_t i = 0; i < n; ++i) truth[i] = *holdout.transitions[i].reward;

  ImputationReport report;
  report.n = n;
  Vector err = pred - truth;
  report.mse = err.squaredNorm() / static_cast<double>(n);
  report.mae = err.cwiseAbs().mean();

  const double pm = pred.mean();
  const double tm = truth.mean();
  Vector pc = pred.array() - pm;
  Vector tc = truth.array() - tm;
  const double pv = pc.squaredNorm();
  const double tv = tc.squaredNorm();
  if (pv <= 0.0 || tv <= 0.0) {
    report.pearson = 0.0;
    report.correlation_degenerate = true;
  } else {
    report.pearson = pc.dot(tc) / std::sqrt(pv * tv);
  }
  return report;
}

void save_reward_model(const RewardModel& model, const std::string& path) {
  json header = {
      {"format", "rewimp-reward-model"},
      {"layer_sizes", model.params.layer_sizes},
      {"norm_mean", vector_to_json(model.norm_stats.mean)},
      {"norm_stddev", vector_to_json(model.norm_stats.stddev)},
      {"config",
       {{"hidden_sizes", model.config.hidden_sizes},
        {"epochs", model.config.epochs},
        {"learning_rate", model.config.learning_rate},
        {"batch_size", model.config.batch_size},
        {"seed", model.config.seed},
        {"input_normalization", model.config.input_normalization}}},
  };
  NamedTensorWriter tensors;
  add_mlp_tensors(tensors, "rm", model.params);
  write_checkpoint(path, header, tensors);
}

RewardModel load_reward_model(const std::string& path) {
  Checkpoint ckpt = read_checkpoint(path, "rewimp-reward-model");
  RewardModel model;
  const auto layer_sizes =
      ckpt.header.at("layer_sizes").get<std::vector<int>>();
  model.params = mlp_from_checkpoint(ckpt, "rm", layer_sizes);
  model.norm_stats.mean = vector_from_json(ckpt.header.at("norm_mean"));
  model.norm_stats.stddev = vector_from_json(ckpt.header.at("norm_stddev"));
  const json& cfg = ckpt.header.at("config");
  model.config.hidden_sizes = cfg.at("hidden_sizes").get<std::vector<int>>();
  model.config.epochs = cfg.at("epochs").get<int>();
  model.config.learning_rate = cfg.at("learning_rate").get<double>();
  model.config.batch_size = cfg.at("batch_size").get<int>();
  model.config.seed = cfg.at("seed").get<std::uint64_t>();
  model.config.input_normalization =
      cfg.at("input_normalization").get<bool>();
  return model;
}

}  // namespace rewimp
