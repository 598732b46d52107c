#include "rewimp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "rewimp/error.hpp"
#include "rewimp/rng.hpp"

namespace rewimp {

using nlohmann::json;

std::string tier_name(Tier tier) {
  switch (tier) {
    case Tier::medium_replay: return "medium_replay";
    case Tier::medium: return "medium";
    case Tier::medium_expert: return "medium_expert";
    case Tier::expert: return "expert";
    case Tier::random: return "random";
  }
  fail(ErrorKind::invalid_argument, "unknown tier");
}

Tier tier_from_name(const std::string& name) {
  if (name == "medium_replay") return Tier::medium_replay;
  if (name == "medium") return Tier::medium;
  if (name == "medium_expert") return Tier::medium_expert;
  if (name == "expert") return Tier::expert;
  if (name == "random") return Tier::random;
  fail(ErrorKind::invalid_argument,
       "unknown tier '" + name +
           "'; valid: medium_replay, medium, medium_expert, expert, random");
}

bool TransitionSet::fully_labeled() const {
  return std::all_of(transitions.begin(), transitions.end(),
                     [](const Transition& t) { return t.reward.has_value(); });
}

bool TransitionSet::fully_unlabeled() const {
  return std::all_of(transitions.begin(), transitions.end(),
                     [](const Transition& t) { return !t.reward.has_value(); });
}

Vector scripted_expert_action(const EnvSpec& spec, const Vector& state) {
  if (spec.env_id == "pointmass-v0") {
    // PD controller toward the goal, gains kp=2, kd=1
    Vector goal(2);
    goal << 1.0, 1.0;
    Vector a = 2.0 * (goal - state.head(2)) - 1.0 * state.tail(2);
    return a.cwiseMax(spec.action_low).cwiseMin(spec.action_high);
  }
  if (spec.env_id == "pendulum-v0") {
    const double theta = std::atan2(state[1], state[0]);
    const double theta_dot = state[2];
    const double th = angle_normalize(theta);
    double u;
    if (std::abs(th) < 0.3 && std::abs(theta_dot) < 2.0) {
      u = -10.0 * th - 2.0 * theta_dot;  // PD near upright
    } else {
      // energy shaping: pump toward the upright-at-rest energy level
      const double a_g = 15.0;  // 3g/(2l)
      const double energy = 0.5 * theta_dot * theta_dot + a_g * std::cos(theta);
      double pump = 2.0 * theta_dot * (a_g - energy);
      if (std::abs(theta_dot) < 1e-3 && std::cos(theta) < 0.0) {
        pump = 2.0;  // kick out of the hanging equilibrium
      }
      u = pump;
    }
    Vector a(1);
    a << std::clamp(u, spec.action_low[0], spec.action_high[0]);
    return a;
  }
  fail(ErrorKind::not_found, "scripted_expert_action: unknown env " + spec.env_id);
}

namespace {

Vector random_action(const EnvSpec& spec, Rng& rng) {
  Vector a(spec.action_dim);
  for (int i = 0; i < spec.action_dim; ++i) {
    a[i] = rng.uniform(spec.action_low[i], spec.action_high[i]);
  }
  return a;
}

Vector noisy_expert_action(const EnvSpec& spec, const Vector& state,
                           double sigma, Rng& rng) {
  Vector a = scripted_expert_action(spec, state);
  for (int i = 0; i < spec.action_dim; ++i) {
    a[i] += sigma * rng.normal();
  }
  return a.cwiseMax(spec.action_low).cwiseMin(spec.action_high);
}

// "medium": expert with sigma=1.0 noise plus 60% uniform-random steps
Vector medium_action(const EnvSpec& spec, const Vector& state, Rng& rng) {
  if (rng.uniform01() < 0.6) return random_action(spec, rng);
  return noisy_expert_action(spec, state, 1.0, rng);
}

enum class Behavior { random, medium, expert };

Vector behavior_action(Behavior b, const EnvSpec& spec, const Vector& state,
                       Rng& rng) {
  switch (b) {
    case Behavior::random: return random_action(spec, rng);
    case Behavior::medium: return medium_action(spec, state, rng);
    case Behavior::expert: return scripted_expert_action(spec, state);
  }
  fail(ErrorKind::invalid_argument, "unknown behavior");
}

void collect(const EnvSpec& spec, Behavior behavior, std::size_t count,
             Rng& rng, std::vector<Transition>& out) {
  std::size_t collected = 0;
  while (collected < count) {
    Vector state = env_reset(spec, rng.next_u64());
    for (int t = 0; t < spec.max_episode_steps && collected < count; ++t) {
      Vector action = behavior_action(behavior, spec, state, rng);
      StepResult step = env_step(spec, state, action);
      out.push_back(Transition{state, action, step.next_state, step.reward,
                               step.done});
      ++collected;
      if (step.done) break;
      state = step.next_state;
    }
  }
}

std::string behavior_descriptor(Tier tier) {
  switch (tier) {
    case Tier::medium_replay:
      return "50% random + 50% medium";
    case Tier::medium:
      return "scripted expert, sigma=1.0 noise, 60% random steps";
    case Tier::medium_expert:
      return "50% medium + 50% scripted expert";
    case Tier::expert:
      return "scripted expert";
    case Tier::random:
      return "uniform random";
  }
  return "";
}

}  // namespace

TransitionSet generate_dataset(const EnvSpec& spec, Tier tier,
                               std::size_t n_transitions, std::uint64_t seed) {
  if (n_transitions < 1) {
    fail(ErrorKind::invalid_argument, "generate_dataset: n_transitions < 1");
  }
  TransitionSet set;
  set.env_id = spec.env_id;
  set.tier = tier;
  set.generation_seed = seed;
  set.policy_descriptor = behavior_descriptor(tier);
  set.transitions.reserve(n_transitions);
  Rng rng(derive_seed(seed, "generate-dataset"));

  const std::size_t n = n_transitions;
  switch (tier) {
    case Tier::random:
      collect(spec, Behavior::random, n, rng, set.transitions);
      break;
    case Tier::medium:
      collect(spec, Behavior::medium, n, rng, set.transitions);
      break;
    case Tier::expert:
      collect(spec, Behavior::expert, n, rng, set.transitions);
      break;
    case Tier::medium_expert: {
      const std::size_t half = n / 2;
      collect(spec, Behavior::medium, half, rng, set.transitions);
      collect(spec, Behavior::expert, n - half, rng, set.transitions);
      break;
    }
    case Tier::medium_replay: {
      // replay buffer of a policy trained up to medium: no expert-grade data
      const std::size_t n_random = n / 2;
      collect(spec, Behavior::random, n_random, rng, set.transitions);
      collect(spec, Behavior::medium, n - n_random, rng, set.transitions);
      break;
    }
  }
  return set;
}

SplitDataset split_labels(const TransitionSet& data, double fraction,
                          std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    fail(ErrorKind::invalid_argument,
         "split_labels: fraction must lie in (0,1], got " +
             std::to_string(fraction));
  }
  const std::size_t n = data.size();
  const std::size_t n_labeled = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(n)));
  if (n_labeled < 1) {
    fail(ErrorKind::invalid_argument,
         "split_labels: fraction too small, no labeled transitions");
  }

  std::vector<std::size_t> indices(n);
  std::iota(indices.begin(), indices.end(), 0);
  Rng rng(derive_seed(seed, "split-labels"));
  // partial Fisher-Yates: the first n_labeled entries become the labeled set
  for (std::size_t i = 0; i < n_labeled && i + 1 < n; ++i) {
    const std::size_t j = i + rng.uniform_int(n - i);
    std::swap(indices[i], indices[j]);
  }
  std::vector<bool> is_labeled(n, false);
  for (std::size_t i = 0; i < n_labeled; ++i) is_labeled[indices[i]] = true;

  SplitDataset split;
  split.label_fraction = fraction;
  split.split_seed = seed;
  split.labeled.env_id = split.unlabeled.env_id = data.env_id;
  split.labeled.tier = split.unlabeled.tier = data.tier;
  split.labeled.generation_seed = split.unlabeled.generation_seed =
      data.generation_seed;
  split.labeled.policy_descriptor = data.policy_descriptor + " [labeled split]";
  split.unlabeled.policy_descriptor =
      data.policy_descriptor + " [unlabeled split]";
  for (std::size_t i = 0; i < n; ++i) {
    if (is_labeled[i]) {
      split.labeled.transitions.push_back(data.transitions[i]);
      split.labeled_indices.push_back(i);
    } else {
      Transition t = data.transitions[i];
      t.reward.reset();
      split.unlabeled.transitions.push_back(std::move(t));
    }
  }
  return split;
}

namespace {

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const json& arr) {
  Vector v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
  return v;
}

}  // namespace

void save_dataset(const TransitionSet& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "save_dataset: cannot open " + path);
  json header = {
      {"format", "rewimp-dataset"},
      {"env_id", data.env_id},
      {"tier", tier_name(data.tier)},
      {"n", data.size()},
      {"generation_seed", data.generation_seed},
      {"policy", data.policy_descriptor},
  };
  out << header.dump() << "\n";
  for (const Transition& t : data.transitions) {
    json rec = {
        {"state", vector_to_json(t.state)},
        {"action", vector_to_json(t.action)},
        {"next_state", vector_to_json(t.next_state)},
        {"done", t.done},
    };
    if (t.reward.has_value()) rec["reward"] = *t.reward;
    out << rec.dump() << "\n";
  }
  if (!out) fail(ErrorKind::io, "save_dataset: write failed for " + path);
}

TransitionSet load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "load_dataset: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) {
    fail(ErrorKind::parse, "load_dataset: empty file " + path);
  }
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, "load_dataset: bad header: " + std::string(e.what()));
  }
  if (header.value("format", "") != "rewimp-dataset") {
    fail(ErrorKind::parse, "load_dataset: not a rewimp dataset file: " + path);
  }
  TransitionSet set;
  set.env_id = header.at("env_id").get<std::string>();
  set.tier = tier_from_name(header.at("tier").get<std::string>());
  set.generation_seed = header.value("generation_seed", std::uint64_t{0});
  set.policy_descriptor = header.value("policy", "");
  const std::size_t expected = header.at("n").get<std::size_t>();
  set.transitions.reserve(expected);

  const EnvSpec spec = make_env(set.env_id);
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorKind::parse, "load_dataset: record " + std::to_string(index) +
                                 ": " + std::string(e.what()));
    }
    Transition t;
    try {
      t.state = vector_from_json(rec.at("state"));
      t.action = vector_from_json(rec.at("action"));
      t.next_state = vector_from_json(rec.at("next_state"));
      t.done = rec.at("done").get<bool>();
      if (rec.contains("reward")) t.reward = rec.at("reward").get<double>();
    } catch (const json::exception& e) {
      fail(ErrorKind::parse, "load_dataset: record " + std::to_string(index) +
                                 ": " + std::string(e.what()));
    }
    if (t.state.size() != spec.state_dim ||
        t.next_state.size() != spec.state_dim ||
        t.action.size() != spec.action_dim) {
      fail(ErrorKind::validation,
           "load_dataset: record " + std::to_string(index) +
               ": dimensions do not match env " + set.env_id);
    }
    set.transitions.push_back(std::move(t));
    ++index;
  }
  if (set.size() != expected) {
    fail(ErrorKind::parse, "load_dataset: expected " +
                               std::to_string(expected) + " records, got " +
                               std::to_string(set.size()) +
                               "; file truncated at record " +
                               std::to_string(index));
  }
  return set;
}

}  // namespace rewimp
