// Command-line front end; every subcommand drives the rewimp C API.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rewimp.h"

namespace {

int report_failure(const char* stage, rewimp_status status) {
  std::cerr << "rewimp: " << stage << " failed (status " << status
            << "): " << rewimp_last_error() << "\n";
  return 1;
}

std::string read_file_or_die(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "rewimp: cannot open config file " << path << "\n";
    std::exit(1);
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// merge simple --flag overrides into a config JSON string without pulling a
// JSON library into the CLI: emitted as a wrapper object the library merges
std::string with_override(std::string config, const std::string& key,
                          const std::string& value, bool quote) {
  // configs are JSON objects; inject the key before the closing brace
  const auto pos = config.find_last_of('}');
  if (pos == std::string::npos) return config;
  std::string entry = "\"" + key + "\":" + (quote ? "\"" + value + "\"" : value);
  const bool empty_object = config.find_first_of('"') == std::string::npos &&
                            config.find(':') == std::string::npos;
  config.insert(pos, (empty_object ? "" : ",") + entry);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rewimp: reward imputation for offline RL"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate an offline dataset");
  std::string env_id = "pointmass-v0";
  std::string tier = "medium";
  std::int64_t n_transitions = 100000;
  std::uint64_t seed = 0;
  std::string out_path;
  gen->add_option("--env", env_id, "environment id")->capture_default_str();
  gen->add_option("--tier", tier,
                  "random|medium|medium_replay|medium_expert|expert")
      ->capture_default_str();
  gen->add_option("--n", n_transitions, "number of transitions")
      ->capture_default_str();
  gen->add_option("--seed", seed, "generation seed")->capture_default_str();
  gen->add_option("--out", out_path, "output dataset path")->required();

  // split
  auto* split = app.add_subcommand(
      "split", "split a dataset into labeled/unlabeled parts");
  std::string dataset_path;
  double fraction = 0.01;
  std::string labeled_out, unlabeled_out;
  split->add_option("--data", dataset_path, "input dataset")->required();
  split->add_option("--fraction", fraction, "label fraction in (0,1]")
      ->capture_default_str();
  split->add_option("--seed", seed, "split seed");
  split->add_option("--labeled-out", labeled_out, "labeled output path")
      ->required();
  split->add_option("--unlabeled-out", unlabeled_out, "unlabeled output path")
      ->required();

  // train-rm
  auto* train_rm =
      app.add_subcommand("train-rm", "train a reward model on labeled data");
  std::string config_path;
  std::string model_out;
  train_rm->add_option("--data", dataset_path, "labeled dataset")->required();
  train_rm->add_option("--config", config_path,
                       "reward-model config JSON file (optional)");
  train_rm->add_option("--seed", seed, "training seed");
  train_rm->add_option("--out", model_out, "model checkpoint path")->required();

  // impute
  auto* impute = app.add_subcommand(
      "impute", "impute rewards on unlabeled data with a trained model");
  std::string labeled_path, unlabeled_path, model_path, imputed_out;
  impute->add_option("--labeled", labeled_path, "labeled dataset")->required();
  impute->add_option("--unlabeled", unlabeled_path, "unlabeled dataset")
      ->required();
  impute->add_option("--model", model_path, "reward-model checkpoint")
      ->required();
  impute->add_option("--out", imputed_out, "imputed dataset path")->required();

  // train-agent
  auto* train_ag =
      app.add_subcommand("train-agent", "train an offline RL agent");
  std::string algo = "td3bc";
  std::string agent_out;
  train_ag->add_option("--data", dataset_path, "training dataset")->required();
  train_ag->add_option("--algo", algo, "td3bc|iql|bc")->capture_default_str();
  train_ag->add_option("--config", config_path, "agent config JSON file");
  train_ag->add_option("--seed", seed, "training seed");
  train_ag->add_option("--out", agent_out, "agent checkpoint path")->required();

  // eval
  auto* eval_cmd =
      app.add_subcommand("eval", "evaluate an agent checkpoint in its env");
  std::string agent_path, report_out;
  eval_cmd->add_option("--agent", agent_path, "agent checkpoint")->required();
  eval_cmd->add_option("--config", config_path, "protocol JSON file");
  eval_cmd->add_option("--seed", seed, "evaluation base seed");
  eval_cmd->add_option("--out", report_out, "report output path")->required();

  // run-experiment
  auto* run = app.add_subcommand(
      "run-experiment", "run the full three-arm experiment pipeline");
  std::string out_dir;
  run->add_option("--config", config_path, "experiment config JSON file");
  run->add_option("--env", env_id, "environment id (config override)");
  run->add_option("--tier", tier, "dataset tier (config override)");
  double run_fraction = -1.0;
  run->add_option("--fraction", run_fraction, "label fraction override");
  std::int64_t master_seed = -1;
  run->add_option("--seed", master_seed, "master seed override");
  run->add_option("--out", out_dir, "output directory")->required();

  // report
  auto* report = app.add_subcommand(
      "report", "render reports from experiment output directories");
  std::vector<std::string> result_dirs;
  std::string format = "table";
  report->add_option("--results", result_dirs, "experiment output dirs")
      ->required();
  report->add_option("--format", format, "table|csv|plotdata")
      ->capture_default_str();
  report->add_option("--out", report_out, "write to file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    rewimp_status s = rewimp_generate_dataset(env_id.c_str(), tier.c_str(),
                                              n_transitions, seed,
                                              out_path.c_str());
    return s == REWIMP_OK ? 0 : report_failure("gen-data", s);
  }
  if (split->parsed()) {
    rewimp_status s =
        rewimp_split_dataset(dataset_path.c_str(), fraction, seed,
                             labeled_out.c_str(), unlabeled_out.c_str());
    return s == REWIMP_OK ? 0 : report_failure("split", s);
  }
  if (train_rm->parsed()) {
    std::string cfg =
        config_path.empty() ? "{}" : read_file_or_die(config_path);
    if (train_rm->count("--seed") > 0) {
      cfg = with_override(cfg, "seed", std::to_string(seed), false);
    }
    rewimp_status s = rewimp_train_reward_model(dataset_path.c_str(),
                                                cfg.c_str(), model_out.c_str());
    return s == REWIMP_OK ? 0 : report_failure("train-rm", s);
  }
  if (impute->parsed()) {
    rewimp_status s =
        rewimp_impute_rewards(labeled_path.c_str(), unlabeled_path.c_str(),
                              model_path.c_str(), imputed_out.c_str());
    return s == REWIMP_OK ? 0 : report_failure("impute", s);
  }
  if (train_ag->parsed()) {
    std::string cfg =
        config_path.empty() ? "{}" : read_file_or_die(config_path);
    cfg = with_override(cfg, "algorithm", algo, true);
    if (train_ag->count("--seed") > 0) {
      cfg = with_override(cfg, "seed", std::to_string(seed), false);
    }
    rewimp_status s = rewimp_train_agent(dataset_path.c_str(), cfg.c_str(),
                                         agent_out.c_str());
    return s == REWIMP_OK ? 0 : report_failure("train-agent", s);
  }
  if (eval_cmd->parsed()) {
    std::string cfg =
        config_path.empty() ? "{}" : read_file_or_die(config_path);
    rewimp_status s = rewimp_evaluate_agent(agent_path.c_str(), cfg.c_str(),
                                            seed, report_out.c_str());
    return s == REWIMP_OK ? 0 : report_failure("eval", s);
  }
  if (run->parsed()) {
    std::string cfg =
        config_path.empty() ? "{}" : read_file_or_die(config_path);
    if (run->count("--env") > 0) {
      cfg = with_override(cfg, "env_id", env_id, true);
    }
    if (run->count("--tier") > 0) {
      cfg = with_override(cfg, "tier", tier, true);
    }
    if (run_fraction > 0.0) {
      cfg = with_override(cfg, "label_fraction", std::to_string(run_fraction),
                          false);
    }
    if (master_seed >= 0) {
      cfg = with_override(cfg, "master_seed", std::to_string(master_seed),
                          false);
    }
    rewimp_status s = rewimp_run_experiment(cfg.c_str(), out_dir.c_str());
    return s == REWIMP_OK ? 0 : report_failure("run-experiment", s);
  }
  if (report->parsed()) {
    std::vector<const char*> dirs;
    for (const std::string& d : result_dirs) dirs.push_back(d.c_str());
    dirs.push_back(nullptr);
    rewimp_status s = rewimp_emit_report(
        dirs.data(), format.c_str(),
        report_out.empty() ? nullptr : report_out.c_str());
    if (s != REWIMP_OK) return report_failure("report", s);
    if (report_out.empty()) std::cout << rewimp_report_text();
    return 0;
  }
  return 0;
}
