#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rewimp/dataset.hpp"
#include "rewimp/nn.hpp"

namespace rewimp {

struct RewardModelConfig {
  std::vector<int> hidden_sizes = {256, 256};
  int epochs = 300;
  double learning_rate = 1e-4;
  int batch_size = 256;
  std::uint64_t seed = 0;
  bool input_normalization = true;
};

// z-score statistics of the training inputs; stddev floored at 1e-6
struct NormStats {
  Vector mean;
  Vector stddev;

  Matrix apply(const Matrix& rows) const;
  Vector apply(const Vector& row) const;
};

NormStats compute_norm_stats(const Matrix& rows);

// f(state, action) -> reward, trained by MSE regression on the labeled
// subset. Targets are raw rewards; only inputs are normalized.
struct RewardModel {
  MlpParams params;
  NormStats norm_stats;
  RewardModelConfig config;
};

struct RewardTrainingLog {
  std::vector<double> epoch_loss;  // mean minibatch loss per epoch
};

RewardModel train_reward_model(const TransitionSet& labeled,
                               const RewardModelConfig& cfg,
                               RewardTrainingLog* log = nullptr);

double predict_reward(const RewardModel& model, const Vector& state,
                      const Vector& action);
Vector predict_rewards(const RewardModel& model, const TransitionSet& data);

// Union of the labeled set (ground-truth rewards untouched) and the
// unlabeled set with model-imputed rewards.
TransitionSet build_imputed_dataset(const TransitionSet& labeled,
                                    const TransitionSet& unlabeled,
                                    const RewardModel& model);

struct ImputationReport {
  double mse = 0.0;
  double mae = 0.0;
  double pearson = 0.0;
  bool correlation_degenerate = false;  // zero variance on either side
  std::size_t n = 0;
};

// Compare imputed vs ground-truth rewards on a labeled holdout set.
ImputationReport imputation_report(const RewardModel& model,
                                   const TransitionSet& holdout);

void save_reward_model(const RewardModel& model, const std::string& path);
RewardModel load_reward_model(const std::string& path);

}  // namespace rewimp
