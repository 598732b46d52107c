#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rewimp/dataset.hpp"
#include "rewimp/nn.hpp"
#include "rewimp/reward_model.hpp"

namespace rewimp {

enum class Algorithm { td3bc, iql, bc };

std::string algorithm_name(Algorithm algo);
Algorithm algorithm_from_name(const std::string& name);

struct AgentConfig {
  Algorithm algorithm = Algorithm::td3bc;
  double gamma = 0.99;
  int training_steps = 100000;
  int batch_size = 256;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double polyak_tau = 0.005;
  std::vector<int> hidden_sizes = {256, 256};
  // td3bc
  double td3bc_alpha = 2.5;
  double policy_noise = 0.2;
  double noise_clip = 0.5;
  int policy_delay = 2;
  // iql
  double expectile_tau = 0.7;
  double awr_beta = 3.0;
  double awr_weight_clip = 100.0;  // cap on exp(beta * advantage)
  std::uint64_t seed = 0;
};

// Trained policy plus whatever auxiliary networks the algorithm carries.
// The actor outputs pre-squash values; policy_act applies tanh scaled to
// the action bounds.
struct AgentArtifact {
  std::string env_id;
  Algorithm algorithm = Algorithm::bc;
  MlpParams actor;
  std::vector<MlpParams> critics;   // td3bc/iql: twin critics
  std::optional<MlpParams> value_net;  // iql only
  NormStats state_norm;
  AgentConfig config;
  std::vector<double> training_log;  // one entry per gradient step
};

AgentArtifact train_bc(const TransitionSet& data, const AgentConfig& cfg);
AgentArtifact train_td3bc(const TransitionSet& data, const AgentConfig& cfg);
AgentArtifact train_iql(const TransitionSet& data, const AgentConfig& cfg);
AgentArtifact train_agent(const TransitionSet& data, const AgentConfig& cfg);

// Deterministic evaluation action, always inside the action bounds.
Vector policy_act(const AgentArtifact& artifact, const Vector& state);

void save_agent(const AgentArtifact& artifact, const std::string& path);
AgentArtifact load_agent(const std::string& path);

// --- composite-objective building blocks, shared by the training loops and
// --- the finite-difference gradient harness

// tanh squashing to [low, high]; rows are batch entries
Matrix squash_actions(const Matrix& pre, const Vector& low, const Vector& high);
// chain an upstream d/d(action) through the squashing into d/d(pre)
Matrix squash_backward(const Matrix& pre, const Matrix& action_grad,
                       const Vector& low, const Vector& high);

// TD3BC actor objective on a frozen critic:
//   L = -lambda * mean(Q(s, pi(s))) + mean((pi(s) - a)^2),
//   lambda = alpha / mean|Q(s, pi(s))| (treated as a constant of the batch).
// Returns the loss and the actor gradients.
std::pair<double, Gradients> td3bc_actor_loss(
    const MlpParams& actor, const MlpParams& critic, const Matrix& states,
    const Matrix& actions, const Vector& low, const Vector& high, double alpha);

// Advantage-weighted regression actor objective with fixed per-row weights:
//   L = mean_b w_b * mean_dims (pi(s_b) - a_b)^2
std::pair<double, Gradients> awr_actor_loss(const MlpParams& actor,
                                            const Matrix& states,
                                            const Matrix& actions,
                                            const Vector& weights,
                                            const Vector& low,
                                            const Vector& high);

// Clipped double-Q TD targets: r + gamma * (1 - done) * min(Q1', Q2')(s', a')
Vector td_targets(const MlpParams& critic1_t, const MlpParams& critic2_t,
                  const Matrix& next_states, const Matrix& next_actions,
                  const Vector& rewards, const Vector& dones, double gamma);

void polyak_update(MlpParams& target, const MlpParams& source, double tau);

}  // namespace rewimp
