#include "rewimp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rewimp/error.hpp"
#include "rewimp/rng.hpp"

namespace rewimp {

using nlohmann::json;

SeedResult evaluate_policy(const EnvSpec& spec, const AgentArtifact& artifact,
                           const EvalProtocol& protocol, std::uint64_t seed) {
  if (artifact.env_id != spec.env_id) {
    fail(ErrorKind::validation, "evaluate_policy: artifact trained on " +
                                    artifact.env_id + ", env is " +
                                    spec.env_id);
  }
  const int horizon = std::min(protocol.episode_steps, spec.max_episode_steps);
  SeedResult result;
  result.seed = seed;
  for (int ep = 0; ep < protocol.n_episodes; ++ep) {
    const std::uint64_t episode_seed = derive_seed(seed, "episode", ep);
    Vector state = env_reset(spec, episode_seed);
    double ret = 0.0;
    std::vector<double> rewards;
    rewards.reserve(horizon);
    for (int t = 0; t < horizon; ++t) {
      StepResult step = env_step(spec, state, policy_act(artifact, state));
      ret += step.reward;
      rewards.push_back(step.reward);
      if (step.done) break;
      state = step.next_state;
    }
    const int tail = std::min<int>(protocol.tail_window,
                                   static_cast<int>(rewards.size()));
    double tail_sum = 0.0;
    for (int t = static_cast<int>(rewards.size()) - tail;
         t < static_cast<int>(rewards.size()); ++t) {
      tail_sum += rewards[t];
    }
    result.episode_returns.push_back(ret);
    result.episode_tail_means.push_back(tail > 0 ? tail_sum / tail : 0.0);
  }
  result.mean_return =
      std::accumulate(result.episode_returns.begin(),
                      result.episode_returns.end(), 0.0) /
      result.episode_returns.size();
  result.mean_tail =
      std::accumulate(result.episode_tail_means.begin(),
                      result.episode_tail_means.end(), 0.0) /
      result.episode_tail_means.size();
  return result;
}

EvalReport aggregate_seeds(const std::vector<SeedResult>& results,
                           const EnvSpec& spec, const EvalProtocol& protocol,
                           const std::string& algorithm,
                           const std::string& arm) {
  if (results.empty()) {
    fail(ErrorKind::invalid_argument, "aggregate_seeds: no results");
  }
  EvalReport report;
  report.env_id = spec.env_id;
  report.algorithm = algorithm;
  report.arm = arm;
  report.protocol = protocol;
  report.effective_episode_steps =
      std::min(protocol.episode_steps, spec.max_episode_steps);
  report.seeds = results;

  const double n = static_cast<double>(results.size());
  double sum_return = 0.0, sum_tail = 0.0;
  for (const SeedResult& r : results) {
    sum_return += r.mean_return;
    sum_tail += r.mean_tail;
  }
  report.mean_raw_return = sum_return / n;
  report.mean_tail_reward = sum_tail / n;
  report.normalized_score = normalized_score(spec, report.mean_raw_return);
  // tail reading: normalize what a full episode at that per-step reward
  // would return
  report.normalized_tail_score = normalized_score(
      spec, report.mean_tail_reward * report.effective_episode_steps);

  double var = 0.0;
  for (const SeedResult& r : results) {
    const double s = normalized_score(spec, r.mean_return);
    const double d = s - normalized_score(spec, report.mean_raw_return);
    var += d * d;
  }
  report.score_std_across_seeds = std::sqrt(var / n);
  return report;
}

EvalReport evaluate_agent(const EnvSpec& spec, const AgentArtifact& artifact,
                          const EvalProtocol& protocol, std::uint64_t base_seed,
                          const std::string& arm) {
  std::vector<SeedResult> results;
  for (int s = 0; s < protocol.n_seeds; ++s) {
    results.push_back(evaluate_policy(spec, artifact, protocol,
                                      derive_seed(base_seed, "eval-seed", s)));
  }
  return aggregate_seeds(results, spec, protocol,
                         algorithm_name(artifact.algorithm), arm);
}

double average_scores(const std::vector<double>& scores) {
  if (scores.empty()) {
    fail(ErrorKind::invalid_argument, "average_scores: empty input");
  }
  return std::accumulate(scores.begin(), scores.end(), 0.0) /
         static_cast<double>(scores.size());
}

json eval_report_to_json(const EvalReport& r) {
  json seeds = json::array();
  for (const SeedResult& s : r.seeds) {
    seeds.push_back({{"seed", s.seed},
                     {"episode_returns", s.episode_returns},
                     {"episode_tail_means", s.episode_tail_means},
                     {"mean_return", s.mean_return},
                     {"mean_tail", s.mean_tail}});
  }
  return {
      {"env_id", r.env_id},
      {"algorithm", r.algorithm},
      {"arm", r.arm},
      {"protocol",
       {{"n_episodes", r.protocol.n_episodes},
        {"episode_steps", r.protocol.episode_steps},
        {"n_seeds", r.protocol.n_seeds},
        {"tail_window", r.protocol.tail_window}}},
      {"effective_episode_steps", r.effective_episode_steps},
      {"seeds", seeds},
      {"mean_raw_return", r.mean_raw_return},
      {"normalized_score", r.normalized_score},
      {"score_std_across_seeds", r.score_std_across_seeds},
      {"mean_tail_reward", r.mean_tail_reward},
      {"normalized_tail_score", r.normalized_tail_score},
  };
}

EvalReport eval_report_from_json(const json& j) {
  EvalReport r;
  r.env_id = j.at("env_id").get<std::string>();
  r.algorithm = j.at("algorithm").get<std::string>();
  r.arm = j.at("arm").get<std::string>();
  const json& p = j.at("protocol");
  r.protocol.n_episodes = p.at("n_episodes").get<int>();
  r.protocol.episode_steps = p.at("episode_steps").get<int>();
  r.protocol.n_seeds = p.at("n_seeds").get<int>();
  r.protocol.tail_window = p.at("tail_window").get<int>();
  r.effective_episode_steps = j.at("effective_episode_steps").get<int>();
  for (const json& s : j.at("seeds")) {
    SeedResult sr;
    sr.seed = s.at("seed").get<std::uint64_t>();
    sr.episode_returns = s.at("episode_returns").get<std::vector<double>>();
    sr.episode_tail_means =
        s.at("episode_tail_means").get<std::vector<double>>();
    sr.mean_return = s.at("mean_return").get<double>();
    sr.mean_tail = s.at("mean_tail").get<double>();
    r.seeds.push_back(std::move(sr));
  }
  r.mean_raw_return = j.at("mean_raw_return").get<double>();
  r.normalized_score = j.at("normalized_score").get<double>();
  r.score_std_across_seeds = j.at("score_std_across_seeds").get<double>();
  r.mean_tail_reward = j.at("mean_tail_reward").get<double>();
  r.normalized_tail_score = j.at("normalized_tail_score").get<double>();
  return r;
}

}  // namespace rewimp
