#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rewimp/envs.hpp"

namespace rewimp {

enum class Tier { medium_replay, medium, medium_expert, expert, random };

std::string tier_name(Tier tier);
Tier tier_from_name(const std::string& name);

struct Transition {
  Vector state;
  Vector action;
  Vector next_state;
  std::optional<double> reward;
  bool done = false;
};

// An ordered collection of transitions from one environment; episodes are
// contiguous in collection order.
struct TransitionSet {
  std::string env_id;
  Tier tier = Tier::random;
  std::vector<Transition> transitions;
  std::uint64_t generation_seed = 0;
  std::string policy_descriptor;

  std::size_t size() const { return transitions.size(); }
  bool fully_labeled() const;
  bool fully_unlabeled() const;
};

struct SplitDataset {
  TransitionSet labeled;    // all rewards present
  TransitionSet unlabeled;  // all rewards absent
  double label_fraction = 0.0;
  std::uint64_t split_seed = 0;
  // original indices of the labeled picks, in emission order; lets callers
  // rebuild a ground-truth holdout for imputation diagnostics
  std::vector<std::size_t> labeled_indices;
};

// Scripted per-environment experts used to emulate D4RL's behavior-policy
// tiers. Exposed for the normalization-anchor computation and tests.
Vector scripted_expert_action(const EnvSpec& spec, const Vector& state);

// Roll out the tier's behavior policy until exactly n_transitions are
// collected. Rewards are ground truth from env_step; deterministic per seed.
TransitionSet generate_dataset(const EnvSpec& spec, Tier tier,
                               std::size_t n_transitions, std::uint64_t seed);

// Choose round(fraction * N) labeled indices uniformly at random without
// replacement; unlabeled copies have their reward removed.
SplitDataset split_labels(const TransitionSet& data, double fraction,
                          std::uint64_t seed);

// JSON-lines on disk: a header record followed by one record per transition.
void save_dataset(const TransitionSet& data, const std::string& path);
TransitionSet load_dataset(const std::string& path);

// Undiscounted return of one policy rollout; used by anchors and tier checks.
template <typename Policy>
double rollout_return(const EnvSpec& spec, Policy&& policy,
                      std::uint64_t reset_seed) {
  Vector state = env_reset(spec, reset_seed);
  double total = 0.0;
  for (int t = 0; t < spec.max_episode_steps; ++t) {
    StepResult step = env_step(spec, state, policy(state, t));
    total += step.reward;
    if (step.done) break;
    state = step.next_state;
  }
  return total;
}

}  // namespace rewimp
