#include "rewimp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "rewimp/checkpoint.hpp"
#include "rewimp/error.hpp"
#include "rewimp/rng.hpp"

namespace rewimp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json reward_model_config_to_json(const RewardModelConfig& cfg) {
  return {{"hidden_sizes", cfg.hidden_sizes},
          {"epochs", cfg.epochs},
          {"learning_rate", cfg.learning_rate},
          {"batch_size", cfg.batch_size},
          {"seed", cfg.seed},
          {"input_normalization", cfg.input_normalization}};
}

RewardModelConfig reward_model_config_from_json(const json& j) {
  RewardModelConfig cfg;
  cfg.hidden_sizes = j.value("hidden_sizes", cfg.hidden_sizes);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.input_normalization =
      j.value("input_normalization", cfg.input_normalization);
  return cfg;
}

json agent_overrides_to_json(const AgentConfig& cfg) {
  return {{"gamma", cfg.gamma},
          {"training_steps", cfg.training_steps},
          {"batch_size", cfg.batch_size},
          {"actor_lr", cfg.actor_lr},
          {"critic_lr", cfg.critic_lr},
          {"polyak_tau", cfg.polyak_tau},
          {"hidden_sizes", cfg.hidden_sizes},
          {"td3bc_alpha", cfg.td3bc_alpha},
          {"policy_noise", cfg.policy_noise},
          {"noise_clip", cfg.noise_clip},
          {"policy_delay", cfg.policy_delay},
          {"expectile_tau", cfg.expectile_tau},
          {"awr_beta", cfg.awr_beta},
          {"awr_weight_clip", cfg.awr_weight_clip}};
}

AgentConfig agent_overrides_from_json(const json& j, Algorithm algo) {
  AgentConfig cfg;
  cfg.algorithm = algo;
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.training_steps = j.value("training_steps", cfg.training_steps);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.actor_lr = j.value("actor_lr", cfg.actor_lr);
  cfg.critic_lr = j.value("critic_lr", cfg.critic_lr);
  cfg.polyak_tau = j.value("polyak_tau", cfg.polyak_tau);
  cfg.hidden_sizes = j.value("hidden_sizes", cfg.hidden_sizes);
  cfg.td3bc_alpha = j.value("td3bc_alpha", cfg.td3bc_alpha);
  cfg.policy_noise = j.value("policy_noise", cfg.policy_noise);
  cfg.noise_clip = j.value("noise_clip", cfg.noise_clip);
  cfg.policy_delay = j.value("policy_delay", cfg.policy_delay);
  cfg.expectile_tau = j.value("expectile_tau", cfg.expectile_tau);
  cfg.awr_beta = j.value("awr_beta", cfg.awr_beta);
  cfg.awr_weight_clip = j.value("awr_weight_clip", cfg.awr_weight_clip);
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot open " + path);
  out << text;
  if (!out) fail(ErrorKind::io, "write failed for " + path);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, path + ": " + e.what());
  }
}

std::string fraction_tag(double fraction) {
  std::ostringstream os;
  os << fraction;
  return os.str();
}

}  // namespace

json experiment_config_to_json(const ExperimentConfig& cfg) {
  json algos = json::array();
  for (Algorithm a : cfg.algorithms) algos.push_back(algorithm_name(a));
  return {{"env_id", cfg.env_id},
          {"tier", tier_name(cfg.tier)},
          {"dataset_size", cfg.dataset_size},
          {"label_fraction", cfg.label_fraction},
          {"sweep_fractions", cfg.sweep_fractions},
          {"dataset_path", cfg.dataset_path},
          {"reward_model", reward_model_config_to_json(cfg.reward_model)},
          {"td3bc", agent_overrides_to_json(cfg.td3bc_config)},
          {"iql", agent_overrides_to_json(cfg.iql_config)},
          {"bc", agent_overrides_to_json(cfg.bc_config)},
          {"algorithms", algos},
          {"include_bc_baseline", cfg.include_bc_baseline},
          {"protocol",
           {{"n_episodes", cfg.protocol.n_episodes},
            {"episode_steps", cfg.protocol.episode_steps},
            {"n_seeds", cfg.protocol.n_seeds},
            {"tail_window", cfg.protocol.tail_window}}},
          {"master_seed", cfg.master_seed}};
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.env_id = j.value("env_id", cfg.env_id);
  if (j.contains("tier")) cfg.tier = tier_from_name(j.at("tier"));
  cfg.dataset_size = j.value("dataset_size", cfg.dataset_size);
  cfg.label_fraction = j.value("label_fraction", cfg.label_fraction);
  cfg.sweep_fractions = j.value("sweep_fractions", cfg.sweep_fractions);
  cfg.dataset_path = j.value("dataset_path", cfg.dataset_path);
  if (j.contains("reward_model")) {
    cfg.reward_model = reward_model_config_from_json(j.at("reward_model"));
  }
  cfg.td3bc_config = agent_overrides_from_json(j.value("td3bc", json::object()),
                                               Algorithm::td3bc);
  cfg.iql_config =
      agent_overrides_from_json(j.value("iql", json::object()), Algorithm::iql);
  cfg.bc_config =
      agent_overrides_from_json(j.value("bc", json::object()), Algorithm::bc);
  if (j.contains("algorithms")) {
    cfg.algorithms.clear();
    for (const auto& a : j.at("algorithms")) {
      cfg.algorithms.push_back(algorithm_from_name(a.get<std::string>()));
    }
  }
  cfg.include_bc_baseline =
      j.value("include_bc_baseline", cfg.include_bc_baseline);
  if (j.contains("protocol")) {
    const json& p = j.at("protocol");
    cfg.protocol.n_episodes = p.value("n_episodes", cfg.protocol.n_episodes);
    cfg.protocol.episode_steps =
        p.value("episode_steps", cfg.protocol.episode_steps);
    cfg.protocol.n_seeds = p.value("n_seeds", cfg.protocol.n_seeds);
    cfg.protocol.tail_window = p.value("tail_window", cfg.protocol.tail_window);
  }
  cfg.master_seed = j.value("master_seed", cfg.master_seed);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from_json(read_json_file(path));
}

const EvalReport* ExperimentResult::find(const std::string& arm,
                                         const std::string& algorithm) const {
  for (const EvalReport& r : reports) {
    if (r.arm == arm && r.algorithm == algorithm) return &r;
  }
  return nullptr;
}

namespace {

const AgentConfig& config_for(const ExperimentConfig& cfg, Algorithm algo) {
  switch (algo) {
    case Algorithm::td3bc: return cfg.td3bc_config;
    case Algorithm::iql: return cfg.iql_config;
    case Algorithm::bc: return cfg.bc_config;
  }
  fail(ErrorKind::invalid_argument, "unknown algorithm");
}

// train + evaluate + persist one (arm, algorithm) cell
EvalReport run_cell(const ExperimentConfig& cfg, const EnvSpec& spec,
                    const TransitionSet& data, Algorithm algo,
                    const std::string& arm, const fs::path& out_dir) {
  AgentConfig acfg = config_for(cfg, algo);
  acfg.algorithm = algo;
  const std::string cell = arm + "_" + algorithm_name(algo);
  acfg.seed = derive_seed(cfg.master_seed, "agent-" + cell);
  AgentArtifact artifact = train_agent(data, acfg);
  save_agent(artifact, (out_dir / "agents" / (cell + ".ckpt")).string());
  EvalReport report =
      evaluate_agent(spec, artifact, cfg.protocol,
                     derive_seed(cfg.master_seed, "eval-" + cell), arm);
  write_text((out_dir / "reports" / (cell + ".json")).string(),
             eval_report_to_json(report).dump(2) + "\n");
  return report;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::string& out_dir) {
  const auto t_start = std::chrono::steady_clock::now();
  fs::create_directories(fs::path(out_dir) / "agents");
  fs::create_directories(fs::path(out_dir) / "reports");
  const fs::path dir(out_dir);

  std::string stage = "configure";
  json timings = json::object();
  auto elapsed = [&t_start] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t_start)
        .count();
  };
  ExperimentResult result;
  result.config = cfg;
  result.out_dir = out_dir;
  try {
    write_text((dir / "config_resolved.json").string(),
               experiment_config_to_json(cfg).dump(2) + "\n");
    const EnvSpec spec = make_env(cfg.env_id);

    stage = "generate-dataset";
    TransitionSet dataset;
    if (!cfg.dataset_path.empty()) {
      dataset = load_dataset(cfg.dataset_path);
      if (dataset.env_id != cfg.env_id) {
        fail(ErrorKind::validation, "dataset_path env_id mismatch");
      }
    } else {
      dataset = generate_dataset(spec, cfg.tier, cfg.dataset_size,
                                 derive_seed(cfg.master_seed, "dataset"));
      save_dataset(dataset, (dir / "dataset.jsonl").string());
    }
    timings["generate_dataset_s"] = elapsed();

    stage = "split-labels";
    SplitDataset split = split_labels(dataset, cfg.label_fraction,
                                      derive_seed(cfg.master_seed, "split"));
    save_dataset(split.labeled, (dir / "labeled.jsonl").string());
    save_dataset(split.unlabeled, (dir / "unlabeled.jsonl").string());

    stage = "train-reward-model";
    RewardModelConfig rm_cfg = cfg.reward_model;
    rm_cfg.seed = derive_seed(cfg.master_seed, "reward-model");
    RewardTrainingLog rm_log;
    RewardModel model = train_reward_model(split.labeled, rm_cfg, &rm_log);
    save_reward_model(model, (dir / "reward_model.ckpt").string());
    timings["train_reward_model_s"] = elapsed();

    stage = "imputation-diagnostics";
    // ground-truth holdout: the unlabeled picks with their original rewards
    TransitionSet holdout;
    holdout.env_id = dataset.env_id;
    holdout.tier = dataset.tier;
    std::vector<bool> labeled_mask(dataset.size(), false);
    for (std::size_t i : split.labeled_indices) labeled_mask[i] = true;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (!labeled_mask[i]) holdout.transitions.push_back(dataset.transitions[i]);
    }
    result.imputation = imputation_report(model, holdout);
    write_text((dir / "imputation_report.json").string(),
               json{{"mse", result.imputation.mse},
                    {"mae", result.imputation.mae},
                    {"pearson", result.imputation.pearson},
                    {"correlation_degenerate",
                     result.imputation.correlation_degenerate},
                    {"n", result.imputation.n},
                    {"rm_final_epoch_loss",
                     rm_log.epoch_loss.empty() ? 0.0 : rm_log.epoch_loss.back()}}
                       .dump(2) +
                   "\n");

    stage = "impute";
    TransitionSet imputed =
        build_imputed_dataset(split.labeled, split.unlabeled, model);
    save_dataset(imputed, (dir / "imputed.jsonl").string());
    timings["impute_s"] = elapsed();

    stage = "train-and-evaluate";
    for (Algorithm algo : cfg.algorithms) {
      result.reports.push_back(
          run_cell(cfg, spec, dataset, algo, "baseline", dir));
      result.reports.push_back(
          run_cell(cfg, spec, split.labeled, algo, "fraction_only", dir));
      result.reports.push_back(
          run_cell(cfg, spec, imputed, algo, "fraction_imputed", dir));
    }
    if (cfg.include_bc_baseline) {
      result.reports.push_back(
          run_cell(cfg, spec, dataset, Algorithm::bc, "baseline", dir));
    }
    timings["train_and_evaluate_s"] = elapsed();

    stage = "sweep";
    for (double f : cfg.sweep_fractions) {
      if (std::abs(f - cfg.label_fraction) < 1e-12) continue;
      SplitDataset s = split_labels(dataset, f,
                                    derive_seed(cfg.master_seed, "split"));
      const std::string arm = "fraction_only@" + fraction_tag(f);
      for (Algorithm algo : cfg.algorithms) {
        result.reports.push_back(run_cell(cfg, spec, s.labeled, algo, arm, dir));
      }
    }
    timings["total_s"] = elapsed();

    stage = "persist-result";
    json summary = json::array();
    for (const EvalReport& r : result.reports) {
      summary.push_back(
          {{"arm", r.arm},
           {"algorithm", r.algorithm},
           {"normalized_score", r.normalized_score},
           {"score_std_across_seeds", r.score_std_across_seeds},
           {"normalized_tail_score", r.normalized_tail_score},
           {"report_path",
            "reports/" + r.arm + "_" + r.algorithm + ".json"}});
    }
    json result_doc = {
        {"config", experiment_config_to_json(cfg)},
        {"env_id", cfg.env_id},
        {"tier", tier_name(cfg.tier)},
        {"imputation",
         {{"mse", result.imputation.mse},
          {"mae", result.imputation.mae},
          {"pearson", result.imputation.pearson},
          {"correlation_degenerate", result.imputation.correlation_degenerate},
          {"n", result.imputation.n}}},
        {"reports", summary},
    };
    write_text((dir / "result.json").string(), result_doc.dump(2) + "\n");
    // timings live outside result.json so reruns stay byte-identical
    write_text((dir / "manifest.json").string(), timings.dump(2) + "\n");
  } catch (const std::exception& e) {
    json failure = {{"failed_stage", stage}, {"error", e.what()}};
    write_text((dir / "failure_manifest.json").string(),
               failure.dump(2) + "\n");
    fail(ErrorKind::validation,
         "run_experiment: stage '" + stage + "' failed: " + e.what());
  }
  return result;
}

ExperimentResult load_experiment_result(const std::string& result_dir) {
  const fs::path dir(result_dir);
  json doc = read_json_file((dir / "result.json").string());
  ExperimentResult result;
  result.out_dir = result_dir;
  result.config = experiment_config_from_json(doc.at("config"));
  const json& imp = doc.at("imputation");
  result.imputation.mse = imp.at("mse").get<double>();
  result.imputation.mae = imp.at("mae").get<double>();
  result.imputation.pearson = imp.at("pearson").get<double>();
  result.imputation.correlation_degenerate =
      imp.at("correlation_degenerate").get<bool>();
  result.imputation.n = imp.at("n").get<std::size_t>();
  for (const json& r : doc.at("reports")) {
    result.reports.push_back(eval_report_from_json(read_json_file(
        (dir / r.at("report_path").get<std::string>()).string())));
  }
  return result;
}

namespace {

struct TableColumns {
  // Table-1 style column order
  static const std::vector<std::pair<std::string, std::string>>& layout() {
    static const std::vector<std::pair<std::string, std::string>> cols = {
        {"baseline", "td3bc"},         {"baseline", "iql"},
        {"baseline", "bc"},            {"fraction_only", "td3bc"},
        {"fraction_only", "iql"},      {"fraction_imputed", "td3bc"},
        {"fraction_imputed", "iql"},
    };
    return cols;
  }
};

std::string missing_arms_message(const ExperimentResult& result) {
  std::string missing;
  for (const auto& [arm, algo] : TableColumns::layout()) {
    if (algo == "bc" && !result.config.include_bc_baseline) continue;
    if (algo != "bc" &&
        std::find(result.config.algorithms.begin(),
                  result.config.algorithms.end(),
                  algorithm_from_name(algo)) == result.config.algorithms.end()) {
      continue;  // column not configured; rendered as "-"
    }
    if (result.find(arm, algo) == nullptr) {
      if (!missing.empty()) missing += ", ";
      missing += arm + "/" + algo;
    }
  }
  return missing;
}

std::string format_score(const EvalReport* r) {
  if (r == nullptr) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << r->normalized_score;
  return os.str();
}

}  // namespace

std::string emit_report(const std::vector<ExperimentResult>& results,
                        const std::string& format) {
  if (results.empty()) {
    fail(ErrorKind::invalid_argument, "emit_report: no results");
  }
  for (const ExperimentResult& r : results) {
    const std::string missing = missing_arms_message(r);
    if (!missing.empty()) {
      fail(ErrorKind::validation,
           "emit_report: incomplete result for " + r.config.env_id + "/" +
               tier_name(r.config.tier) + "; missing arms: " + missing);
    }
  }
  const auto& cols = TableColumns::layout();

  if (format == "csv" || format == "table") {
    std::ostringstream os;
    const char sep = (format == "csv") ? ',' : '|';
    os << "environment" << sep << "baseline_td3bc" << sep << "baseline_iql"
       << sep << "baseline_bc" << sep << "fraction_td3bc" << sep
       << "fraction_iql" << sep << "imputed_td3bc" << sep << "imputed_iql"
       << "\n";
    std::vector<std::vector<double>> col_values(cols.size());
    for (const ExperimentResult& r : results) {
      os << r.config.env_id << "-" << tier_name(r.config.tier);
      for (std::size_t c = 0; c < cols.size(); ++c) {
        const EvalReport* rep = r.find(cols[c].first, cols[c].second);
        os << sep << format_score(rep);
        if (rep != nullptr) col_values[c].push_back(rep->normalized_score);
      }
      os << "\n";
    }
    if (results.size() > 1) {
      os << "average";
      for (std::size_t c = 0; c < cols.size(); ++c) {
        if (col_values[c].empty()) {
          os << sep << "-";
        } else {
          std::ostringstream v;
          v << std::fixed << std::setprecision(2)
            << average_scores(col_values[c]);
          os << sep << v.str();
        }
      }
      os << "\n";
    }
    return os.str();
  }

  if (format == "plotdata") {
    // one series per algorithm per arm type; sweep arms keyed by fraction
    json series = json::object();
    for (const ExperimentResult& r : results) {
      const std::string row =
          r.config.env_id + "-" + tier_name(r.config.tier);
      for (const EvalReport& rep : r.reports) {
        std::string arm = rep.arm;
        double fraction = r.config.label_fraction;
        const auto at = arm.find('@');
        if (at != std::string::npos) {
          fraction = std::stod(arm.substr(at + 1));
          arm = arm.substr(0, at);
        }
        if (arm == "baseline") fraction = 1.0;
        series[arm + "/" + rep.algorithm].push_back(
            {{"row", row},
             {"fraction", fraction},
             {"score", rep.normalized_score},
             {"score_std", rep.score_std_across_seeds}});
      }
    }
    return series.dump(2) + "\n";
  }

  fail(ErrorKind::invalid_argument,
       "emit_report: unknown format '" + format +
           "'; valid: table, csv, plotdata");
}

}  // namespace rewimp
