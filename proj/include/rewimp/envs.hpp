#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rewimp/nn.hpp"

namespace rewimp {

// Analytic desk-scale continuous-control environments. Both are pure
// functions of (state, action); all randomness enters through explicit
// seeds at reset.
struct EnvSpec {
  std::string env_id;
  int state_dim = 0;
  int action_dim = 0;
  Vector action_low;
  Vector action_high;
  int max_episode_steps = 0;
  double random_return = 0.0;  // normalization anchors (D4RL convention)
  double expert_return = 0.0;
  double gamma = 0.99;
};

struct StepResult {
  Vector next_state;
  double reward = 0.0;
  bool done = false;
};

// env_id in {"pointmass-v0", "pendulum-v0"}; unknown ids raise not_found.
EnvSpec make_env(const std::string& env_id);

std::vector<std::string> env_ids();

// Draw an initial state from the environment's d0, deterministic per seed.
Vector env_reset(const EnvSpec& spec, std::uint64_t seed);

// Apply one step of the analytic dynamics. The action is clipped to
// [action_low, action_high] before the dynamics; reward depends on the
// (state, clipped action) pair only, never on next_state.
StepResult env_step(const EnvSpec& spec, const Vector& state,
                    const Vector& action);

// 100 * (raw - random) / (expert - random)
double normalized_score(const EnvSpec& spec, double raw_return);

// wrap to [-pi, pi]
double angle_normalize(double theta);

}  // namespace rewimp
