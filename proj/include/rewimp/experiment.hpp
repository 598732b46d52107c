#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rewimp/agents.hpp"
#include "rewimp/eval.hpp"
#include "rewimp/reward_model.hpp"

namespace rewimp {

// One three-arm experiment: Baseline (all ground-truth rewards),
// fraction_only (the labeled subset alone), fraction_imputed (labeled subset
// plus model-imputed rewards on the rest).
struct ExperimentConfig {
  std::string env_id = "pointmass-v0";
  Tier tier = Tier::medium;
  std::size_t dataset_size = 100000;
  double label_fraction = 0.01;
  std::vector<double> sweep_fractions;  // extra fraction_only arms
  std::string dataset_path;             // optional: reuse a saved dataset
  RewardModelConfig reward_model;
  AgentConfig td3bc_config;
  AgentConfig iql_config;
  AgentConfig bc_config;
  std::vector<Algorithm> algorithms = {Algorithm::td3bc, Algorithm::iql};
  bool include_bc_baseline = true;  // BC runs on the baseline arm only
  EvalProtocol protocol;
  std::uint64_t master_seed = 0;
};

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<EvalReport> reports;  // one per (arm, algorithm)
  ImputationReport imputation;
  std::string out_dir;

  const EvalReport* find(const std::string& arm,
                         const std::string& algorithm) const;
};

// Executes the full pipeline and persists every artifact under out_dir:
// dataset, splits, reward model, imputed dataset, agent checkpoints,
// per-(arm, algo) reports, a result summary, and a run manifest. All stage
// seeds derive from master_seed; reruns are byte-identical except for the
// manifest's timings.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::string& out_dir);

ExperimentResult load_experiment_result(const std::string& result_dir);

// "table": human-readable grid mirroring the report layout, one row per
// result dir, plus an average row when there are several. "csv": same data
// as CSV. "plotdata": per-fraction series for sweep plots.
std::string emit_report(const std::vector<ExperimentResult>& results,
                        const std::string& format);

}  // namespace rewimp
