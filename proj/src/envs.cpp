#include "rewimp/envs.hpp"

#include <algorithm>
#include <cmath>

#include "rewimp/error.hpp"
#include "rewimp/rng.hpp"

namespace rewimp {

namespace {

constexpr double kPointmassDt = 0.05;
constexpr double kPointmassVelLimit = 2.0;
constexpr double kPointmassGoalX = 1.0;
constexpr double kPointmassGoalY = 1.0;
constexpr double kPointmassGoalRadius = 0.05;
constexpr double kPointmassActionCost = 0.01;

constexpr double kPendulumDt = 0.05;
constexpr double kPendulumG = 10.0;
constexpr double kPendulumM = 1.0;
constexpr double kPendulumL = 1.0;
constexpr double kPendulumSpeedLimit = 8.0;

// Normalization anchors, computed once from reference rollouts: 100
// episodes of the uniform-random policy (reset seeds
// derive_seed(20260826, "anchor-random", i)) and 100 episodes of the
// scripted expert (derive_seed(20260826, "anchor-expert", i)).
// Regenerate with tools/compute_anchors.
constexpr double kPointmassRandomReturn = -409.42624860556606;
constexpr double kPointmassExpertReturn = -43.794163480335811;
constexpr double kPendulumRandomReturn = -1223.8617589011237;
constexpr double kPendulumExpertReturn = -149.36980771179583;

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

double angle_normalize(double theta) {
  double t = std::fmod(theta + M_PI, 2.0 * M_PI);
  if (t < 0.0) t += 2.0 * M_PI;
  return t - M_PI;
}

std::vector<std::string> env_ids() { return {"pointmass-v0", "pendulum-v0"}; }

EnvSpec make_env(const std::string& env_id) {
  EnvSpec spec;
  spec.env_id = env_id;
  if (env_id == "pointmass-v0") {
    spec.state_dim = 4;
    spec.action_dim = 2;
    spec.action_low = vec2(-1.0, -1.0);
    spec.action_high = vec2(1.0, 1.0);
    spec.max_episode_steps = 200;
    spec.random_return = kPointmassRandomReturn;
    spec.expert_return = kPointmassExpertReturn;
  } else if (env_id == "pendulum-v0") {
    spec.state_dim = 3;
    spec.action_dim = 1;
    spec.action_low = Vector::Constant(1, -2.0);
    spec.action_high = Vector::Constant(1, 2.0);
    spec.max_episode_steps = 200;
    spec.random_return = kPendulumRandomReturn;
    spec.expert_return = kPendulumExpertReturn;
  } else {
    fail(ErrorKind::not_found, "unknown env_id '" + env_id +
                                   "'; valid ids: pointmass-v0, pendulum-v0");
  }
  spec.gamma = 0.99;
  return spec;
}

Vector env_reset(const EnvSpec& spec, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "env-reset"));
  if (spec.env_id == "pointmass-v0") {
    Vector s(4);
    s << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 0.0, 0.0;
    return s;
  }
  if (spec.env_id == "pendulum-v0") {
    const double theta = rng.uniform(-M_PI, M_PI);
    const double theta_dot = rng.uniform(-1.0, 1.0);
    Vector s(3);
    s << std::cos(theta), std::sin(theta), theta_dot;
    return s;
  }
  fail(ErrorKind::not_found, "env_reset: unknown env_id " + spec.env_id);
}

StepResult env_step(const EnvSpec& spec, const Vector& state,
                    const Vector& action) {
  if (state.size() != spec.state_dim || action.size() != spec.action_dim) {
    fail(ErrorKind::shape, "env_step: state/action dimension mismatch");
  }
  if (!state.allFinite() || !action.allFinite()) {
    fail(ErrorKind::numeric, "env_step: non-finite state or action");
  }
  Vector a = action.cwiseMax(spec.action_low).cwiseMin(spec.action_high);

  StepResult result;
  if (spec.env_id == "pointmass-v0") {
    const Vector pos = state.head(2);
    const Vector vel = state.tail(2);
    const Vector goal = vec2(kPointmassGoalX, kPointmassGoalY);
    const double dist = (pos - goal).norm();
    result.reward = -dist - kPointmassActionCost * a.squaredNorm();

    Vector new_vel = (vel + a * kPointmassDt)
                         .cwiseMax(-kPointmassVelLimit)
                         .cwiseMin(kPointmassVelLimit);
    Vector new_pos = pos + new_vel * kPointmassDt;
    result.next_state.resize(4);
    result.next_state << new_pos, new_vel;
    result.done = (new_pos - goal).norm() < kPointmassGoalRadius;
  } else if (spec.env_id == "pendulum-v0") {
    const double theta = std::atan2(state[1], state[0]);
    const double theta_dot = state[2];
    const double u = a[0];
    result.reward = -(angle_normalize(theta) * angle_normalize(theta) +
                      0.1 * theta_dot * theta_dot + 0.001 * u * u);

    // semi-implicit Euler, theta = 0 is upright
    const double accel =
        3.0 * kPendulumG / (2.0 * kPendulumL) * std::sin(theta) +
        3.0 / (kPendulumM * kPendulumL * kPendulumL) * u;
    double new_theta_dot = theta_dot + accel * kPendulumDt;
    new_theta_dot = std::clamp(new_theta_dot, -kPendulumSpeedLimit,
                               kPendulumSpeedLimit);
    const double new_theta = theta + new_theta_dot * kPendulumDt;
    result.next_state.resize(3);
    result.next_state << std::cos(new_theta), std::sin(new_theta),
        new_theta_dot;
    result.done = false;  // no early termination
  } else {
    fail(ErrorKind::not_found, "env_step: unknown env_id " + spec.env_id);
  }
  return result;
}

double normalized_score(const EnvSpec& spec, double raw_return) {
  return 100.0 * (raw_return - spec.random_return) /
         (spec.expert_return - spec.random_return);
}

}  // namespace rewimp
