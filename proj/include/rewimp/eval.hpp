#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rewimp/agents.hpp"
#include "rewimp/envs.hpp"

namespace rewimp {

struct EvalProtocol {
  int n_episodes = 10;
  int episode_steps = 1000;  // clipped to the env's max_episode_steps
  int n_seeds = 5;
  int tail_window = 10;
};

// One evaluation seed: per-episode undiscounted returns plus the mean reward
// over each episode's final tail_window steps.
struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<double> episode_returns;
  std::vector<double> episode_tail_means;
  double mean_return = 0.0;
  double mean_tail = 0.0;
};

struct EvalReport {
  std::string env_id;
  std::string algorithm;
  std::string arm;
  EvalProtocol protocol;
  int effective_episode_steps = 0;
  std::vector<SeedResult> seeds;
  double mean_raw_return = 0.0;       // across-seed mean of per-seed means
  double normalized_score = 0.0;      // primary metric
  double score_std_across_seeds = 0.0;
  double mean_tail_reward = 0.0;      // secondary, tail-window reading
  double normalized_tail_score = 0.0;
};

SeedResult evaluate_policy(const EnvSpec& spec, const AgentArtifact& artifact,
                           const EvalProtocol& protocol, std::uint64_t seed);

EvalReport aggregate_seeds(const std::vector<SeedResult>& results,
                           const EnvSpec& spec, const EvalProtocol& protocol,
                           const std::string& algorithm,
                           const std::string& arm);

// Convenience: run n_seeds evaluations (seeds derived from base_seed) and
// aggregate.
EvalReport evaluate_agent(const EnvSpec& spec, const AgentArtifact& artifact,
                          const EvalProtocol& protocol, std::uint64_t base_seed,
                          const std::string& arm);

// Plain average of already-normalized per-environment scores; the cross-
// environment aggregation row of the report tables.
double average_scores(const std::vector<double>& scores);

nlohmann::json eval_report_to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

}  // namespace rewimp
