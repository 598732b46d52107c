#include "rewimp.h"

#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "rewimp/agents.hpp"
#include "rewimp/dataset.hpp"
#include "rewimp/error.hpp"
#include "rewimp/eval.hpp"
#include "rewimp/experiment.hpp"
#include "rewimp/reward_model.hpp"
#include "rewimp/rng.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;
thread_local std::string g_report_text;

rewimp_status status_from_kind(rewimp::ErrorKind kind) {
  using rewimp::ErrorKind;
  switch (kind) {
    case ErrorKind::invalid_argument: return REWIMP_ERR_INVALID_ARGUMENT;
    case ErrorKind::not_found: return REWIMP_ERR_NOT_FOUND;
    case ErrorKind::shape: return REWIMP_ERR_SHAPE;
    case ErrorKind::numeric: return REWIMP_ERR_NUMERIC;
    case ErrorKind::io: return REWIMP_ERR_IO;
    case ErrorKind::parse: return REWIMP_ERR_PARSE;
    case ErrorKind::validation: return REWIMP_ERR_VALIDATION;
  }
  return REWIMP_ERR_INTERNAL;
}

template <typename Fn>
rewimp_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return REWIMP_OK;
  } catch (const rewimp::Error& e) {
    g_last_error = e.what();
    return status_from_kind(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return REWIMP_ERR_INTERNAL;
  }
}

rewimp_status require(bool ok, const char* message) {
  if (ok) return REWIMP_OK;
  g_last_error = message;
  return REWIMP_ERR_INVALID_ARGUMENT;
}

json parse_config(const char* config_json) {
  if (config_json == nullptr || std::strlen(config_json) == 0) {
    return json::object();
  }
  try {
    return json::parse(config_json);
  } catch (const json::exception& e) {
    rewimp::fail(rewimp::ErrorKind::parse,
                 std::string("config JSON: ") + e.what());
  }
}

}  // namespace

struct rewimp_dataset {
  rewimp::TransitionSet set;
};
struct rewimp_reward_model {
  rewimp::RewardModel model;
};
struct rewimp_agent {
  rewimp::AgentArtifact artifact;
};

extern "C" {

const char* rewimp_last_error(void) { return g_last_error.c_str(); }

rewimp_status rewimp_generate_dataset(const char* env_id, const char* tier,
                                      int64_t n_transitions, uint64_t seed,
                                      const char* out_path) {
  if (rewimp_status s = require(env_id && tier && out_path,
                                "null argument to rewimp_generate_dataset")) {
    return s;
  }
  return guarded([&] {
    if (n_transitions < 1) {
      rewimp::fail(rewimp::ErrorKind::invalid_argument,
                   "n_transitions must be >= 1");
    }
    rewimp::EnvSpec spec = rewimp::make_env(env_id);
    rewimp::TransitionSet set = rewimp::generate_dataset(
        spec, rewimp::tier_from_name(tier),
        static_cast<std::size_t>(n_transitions), seed);
    rewimp::save_dataset(set, out_path);
  });
}

rewimp_status rewimp_split_dataset(const char* dataset_path, double fraction,
                                   uint64_t seed, const char* labeled_out,
                                   const char* unlabeled_out) {
  if (rewimp_status s =
          require(dataset_path && labeled_out && unlabeled_out,
                  "null argument to rewimp_split_dataset")) {
    return s;
  }
  return guarded([&] {
    rewimp::TransitionSet set = rewimp::load_dataset(dataset_path);
    rewimp::SplitDataset split = rewimp::split_labels(set, fraction, seed);
    rewimp::save_dataset(split.labeled, labeled_out);
    rewimp::save_dataset(split.unlabeled, unlabeled_out);
  });
}

rewimp_status rewimp_train_reward_model(const char* labeled_path,
                                        const char* config_json,
                                        const char* model_out) {
  if (rewimp_status s = require(labeled_path && model_out,
                                "null argument to rewimp_train_reward_model")) {
    return s;
  }
  return guarded([&] {
    json j = parse_config(config_json);
    rewimp::RewardModelConfig cfg;
    cfg.hidden_sizes = j.value("hidden_sizes", cfg.hidden_sizes);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.input_normalization =
        j.value("input_normalization", cfg.input_normalization);
    rewimp::TransitionSet labeled = rewimp::load_dataset(labeled_path);
    rewimp::RewardModel model = rewimp::train_reward_model(labeled, cfg);
    rewimp::save_reward_model(model, model_out);
  });
}

rewimp_status rewimp_impute_rewards(const char* labeled_path,
                                    const char* unlabeled_path,
                                    const char* model_path,
                                    const char* dataset_out) {
  if (rewimp_status s =
          require(labeled_path && unlabeled_path && model_path && dataset_out,
                  "null argument to rewimp_impute_rewards")) {
    return s;
  }
  return guarded([&] {
    rewimp::TransitionSet labeled = rewimp::load_dataset(labeled_path);
    rewimp::TransitionSet unlabeled = rewimp::load_dataset(unlabeled_path);
    rewimp::RewardModel model = rewimp::load_reward_model(model_path);
    rewimp::TransitionSet imputed =
        rewimp::build_imputed_dataset(labeled, unlabeled, model);
    rewimp::save_dataset(imputed, dataset_out);
  });
}

rewimp_status rewimp_train_agent(const char* dataset_path,
                                 const char* config_json,
                                 const char* agent_out) {
  if (rewimp_status s = require(dataset_path && agent_out,
                                "null argument to rewimp_train_agent")) {
    return s;
  }
  return guarded([&] {
    json j = parse_config(config_json);
    if (!j.contains("algorithm")) {
      rewimp::fail(rewimp::ErrorKind::invalid_argument,
                   "agent config must name an algorithm (td3bc, iql, bc)");
    }
    rewimp::Algorithm algo =
        rewimp::algorithm_from_name(j.at("algorithm").get<std::string>());
    rewimp::AgentConfig cfg;
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
    cfg.seed = j.value("seed", cfg.seed);
    rewimp::TransitionSet data = rewimp::load_dataset(dataset_path);
    rewimp::AgentArtifact artifact = rewimp::train_agent(data, cfg);
    rewimp::save_agent(artifact, agent_out);
  });
}

rewimp_status rewimp_evaluate_agent(const char* agent_path,
                                    const char* protocol_json, uint64_t seed,
                                    const char* report_out) {
  if (rewimp_status s = require(agent_path && report_out,
                                "null argument to rewimp_evaluate_agent")) {
    return s;
  }
  return guarded([&] {
    json j = parse_config(protocol_json);
    rewimp::EvalProtocol protocol;
    protocol.n_episodes = j.value("n_episodes", protocol.n_episodes);
    protocol.episode_steps = j.value("episode_steps", protocol.episode_steps);
    protocol.n_seeds = j.value("n_seeds", protocol.n_seeds);
    protocol.tail_window = j.value("tail_window", protocol.tail_window);
    const std::string arm = j.value("arm", "adhoc");
    rewimp::AgentArtifact artifact = rewimp::load_agent(agent_path);
    rewimp::EnvSpec spec = rewimp::make_env(artifact.env_id);
    rewimp::EvalReport report =
        rewimp::evaluate_agent(spec, artifact, protocol, seed, arm);
    std::ofstream out(report_out);
    if (!out) {
      rewimp::fail(rewimp::ErrorKind::io,
                   std::string("cannot open ") + report_out);
    }
    out << rewimp::eval_report_to_json(report).dump(2) << "\n";
  });
}

rewimp_status rewimp_run_experiment(const char* config_json,
                                    const char* out_dir) {
  if (rewimp_status s = require(config_json && out_dir,
                                "null argument to rewimp_run_experiment")) {
    return s;
  }
  return guarded([&] {
    rewimp::ExperimentConfig cfg =
        rewimp::experiment_config_from_json(parse_config(config_json));
    rewimp::run_experiment(cfg, out_dir);
  });
}

rewimp_status rewimp_emit_report(const char* const* result_dirs,
                                 const char* format, const char* out_path) {
  if (rewimp_status s = require(result_dirs && format,
                                "null argument to rewimp_emit_report")) {
    return s;
  }
  return guarded([&] {
    std::vector<rewimp::ExperimentResult> results;
    for (const char* const* dir = result_dirs; *dir != nullptr; ++dir) {
      results.push_back(rewimp::load_experiment_result(*dir));
    }
    const std::string text = rewimp::emit_report(results, format);
    g_report_text = text;
    if (out_path != nullptr) {
      std::ofstream out(out_path);
      if (!out) {
        rewimp::fail(rewimp::ErrorKind::io,
                     std::string("cannot open ") + out_path);
      }
      out << text;
    }
  });
}

const char* rewimp_report_text(void) { return g_report_text.c_str(); }

rewimp_status rewimp_dataset_open(const char* path, rewimp_dataset** out) {
  if (rewimp_status s =
          require(path && out, "null argument to rewimp_dataset_open")) {
    return s;
  }
  return guarded([&] {
    auto* handle = new rewimp_dataset{rewimp::load_dataset(path)};
    *out = handle;
  });
}

void rewimp_dataset_close(rewimp_dataset* dataset) { delete dataset; }

int64_t rewimp_dataset_size(const rewimp_dataset* dataset) {
  return dataset == nullptr ? -1 : static_cast<int64_t>(dataset->set.size());
}

const char* rewimp_dataset_env_id(const rewimp_dataset* dataset) {
  return dataset == nullptr ? "" : dataset->set.env_id.c_str();
}

int rewimp_dataset_fully_labeled(const rewimp_dataset* dataset) {
  return dataset != nullptr && dataset->set.fully_labeled() ? 1 : 0;
}

rewimp_status rewimp_reward_model_open(const char* path,
                                       rewimp_reward_model** out) {
  if (rewimp_status s =
          require(path && out, "null argument to rewimp_reward_model_open")) {
    return s;
  }
  return guarded([&] {
    auto* handle = new rewimp_reward_model{rewimp::load_reward_model(path)};
    *out = handle;
  });
}

void rewimp_reward_model_close(rewimp_reward_model* model) { delete model; }

rewimp_status rewimp_reward_model_predict(const rewimp_reward_model* model,
                                          const double* state, int state_dim,
                                          const double* action, int action_dim,
                                          double* reward_out) {
  if (rewimp_status s =
          require(model && state && action && reward_out && state_dim > 0 &&
                      action_dim > 0,
                  "bad argument to rewimp_reward_model_predict")) {
    return s;
  }
  return guarded([&] {
    rewimp::Vector s = Eigen::Map<const rewimp::Vector>(state, state_dim);
    rewimp::Vector a = Eigen::Map<const rewimp::Vector>(action, action_dim);
    *reward_out = rewimp::predict_reward(model->model, s, a);
  });
}

rewimp_status rewimp_agent_open(const char* path, rewimp_agent** out) {
  if (rewimp_status s =
          require(path && out, "null argument to rewimp_agent_open")) {
    return s;
  }
  return guarded([&] {
    auto* handle = new rewimp_agent{rewimp::load_agent(path)};
    *out = handle;
  });
}

void rewimp_agent_close(rewimp_agent* agent) { delete agent; }

const char* rewimp_agent_env_id(const rewimp_agent* agent) {
  return agent == nullptr ? "" : agent->artifact.env_id.c_str();
}

rewimp_status rewimp_agent_act(const rewimp_agent* agent, const double* state,
                               int state_dim, double* action_out,
                               int action_dim) {
  if (rewimp_status s =
          require(agent && state && action_out && state_dim > 0,
                  "bad argument to rewimp_agent_act")) {
    return s;
  }
  return guarded([&] {
    rewimp::Vector s = Eigen::Map<const rewimp::Vector>(state, state_dim);
    rewimp::Vector a = rewimp::policy_act(agent->artifact, s);
    if (a.size() != action_dim) {
      rewimp::fail(rewimp::ErrorKind::shape,
                   "action buffer size does not match the policy output");
    }
    for (int i = 0; i < action_dim; ++i) action_out[i] = a[i];
  });
}

}  // extern "C"
