#include "rewimp/agents.hpp"

#include <algorithm>
#include <cmath>

#include "rewimp/checkpoint.hpp"
#include "rewimp/error.hpp"
#include "rewimp/rng.hpp"

namespace rewimp {

using nlohmann::json;

std::string algorithm_name(Algorithm algo) {
  switch (algo) {
    case Algorithm::td3bc: return "td3bc";
    case Algorithm::iql: return "iql";
    case Algorithm::bc: return "bc";
  }
  fail(ErrorKind::invalid_argument, "unknown algorithm");
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "td3bc") return Algorithm::td3bc;
  if (name == "iql") return Algorithm::iql;
  if (name == "bc") return Algorithm::bc;
  fail(ErrorKind::invalid_argument,
       "unknown algorithm '" + name + "'; valid: td3bc, iql, bc");
}

Matrix squash_actions(const Matrix& pre, const Vector& low,
                      const Vector& high) {
  const Vector center = (high + low) / 2.0;
  const Vector half = (high - low) / 2.0;
  Matrix out = pre.array().tanh();
  out.array().rowwise() *= half.transpose().array();
  out.rowwise() += center.transpose();
  return out;
}

Matrix squash_backward(const Matrix& pre, const Matrix& action_grad,
                       const Vector& low, const Vector& high) {
  const Vector half = (high - low) / 2.0;
  Matrix t = pre.array().tanh();
  Matrix jac = (1.0 - t.array().square()).matrix();
  jac.array().rowwise() *= half.transpose().array();
  return action_grad.cwiseProduct(jac);
}

void polyak_update(MlpParams& target, const MlpParams& source, double tau) {
  for (int l = 0; l < target.num_layers(); ++l) {
    target.weights[l] = (1.0 - tau) * target.weights[l] + tau * source.weights[l];
    target.biases[l] = (1.0 - tau) * target.biases[l] + tau * source.biases[l];
  }
}

namespace {

Matrix concat_cols(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

struct TrainingData {
  Matrix states;       // normalized
  Matrix actions;
  Matrix next_states;  // normalized with the same stats
  Vector rewards;
  Vector dones;
  NormStats state_norm;
  EnvSpec spec;
};

TrainingData prepare_training_data(const TransitionSet& data,
                                   bool need_rewards) {
  if (data.size() == 0) {
    fail(ErrorKind::invalid_argument, "train_agent: empty dataset");
  }
  TrainingData td;
  td.spec = make_env(data.env_id);
  const std::size_t n = data.size();
  const int sd = td.spec.state_dim;
  const int ad = td.spec.action_dim;
  Matrix raw_states(n, sd);
  td.actions.resize(n, ad);
  Matrix raw_next(n, sd);
  td.rewards.resize(n);
  td.dones.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = data.transitions[i];
    raw_states.row(i) = t.state.transpose();
    td.actions.row(i) = t.action.transpose();
    raw_next.row(i) = t.next_state.transpose();
    td.dones[i] = t.done ? 1.0 : 0.0;
    if (t.reward.has_value()) {
      td.rewards[i] = *t.reward;
    } else if (need_rewards) {
      fail(ErrorKind::invalid_argument,
           "train_agent: transition " + std::to_string(i) +
               " has no reward; impute rewards first (rewimp impute)");
    } else {
      td.rewards[i] = 0.0;
    }
  }
  td.state_norm = compute_norm_stats(raw_states);
  td.states = td.state_norm.apply(raw_states);
  td.next_states = td.state_norm.apply(raw_next);
  return td;
}

std::vector<int> net_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes;
  sizes.push_back(in);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

struct Batch {
  Matrix states, actions, next_states;
  Vector rewards, dones;
};

Batch sample_batch(const TrainingData& td, int batch_size, Rng& rng) {
  const std::size_t n = static_cast<std::size_t>(td.states.rows());
  const int b = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(batch_size), n));
  Batch batch;
  batch.states.resize(b, td.states.cols());
  batch.actions.resize(b, td.actions.cols());
  batch.next_states.resize(b, td.next_states.cols());
  batch.rewards.resize(b);
  batch.dones.resize(b);
  for (int i = 0; i < b; ++i) {
    const std::size_t k = rng.uniform_int(n);
    batch.states.row(i) = td.states.row(k);
    batch.actions.row(i) = td.actions.row(k);
    batch.next_states.row(i) = td.next_states.row(k);
    batch.rewards[i] = td.rewards[k];
    batch.dones[i] = td.dones[k];
  }
  return batch;
}

void check_finite_loss(double loss, int step, const char* what) {
  if (!std::isfinite(loss)) {
    fail(ErrorKind::numeric, std::string(what) +
                                 ": training diverged (non-finite loss) at "
                                 "step " +
                                 std::to_string(step));
  }
}

}  // namespace

Vector td_targets(const MlpParams& critic1_t, const MlpParams& critic2_t,
                  const Matrix& next_states, const Matrix& next_actions,
                  const Vector& rewards, const Vector& dones, double gamma) {
  const Matrix input = concat_cols(next_states, next_actions);
  Vector q1 = mlp_forward(critic1_t, input).col(0);
  Vector q2 = mlp_forward(critic2_t, input).col(0);
  Vector q_min = q1.cwiseMin(q2);
  return rewards.array() + gamma * (1.0 - dones.array()) * q_min.array();
}

std::pair<double, Gradients> td3bc_actor_loss(
    const MlpParams& actor, const MlpParams& critic, const Matrix& states,
    const Matrix& actions, const Vector& low, const Vector& high,
    double alpha) {
  const double b = static_cast<double>(states.rows());
  const double dims = b * static_cast<double>(actions.cols());

  ForwardCache actor_cache = mlp_forward_cached(actor, states);
  Matrix pi = squash_actions(actor_cache.output(), low, high);
  ForwardCache critic_cache =
      mlp_forward_cached(critic, concat_cols(states, pi));
  const Vector q = critic_cache.output().col(0);
  const double lambda = alpha / (q.cwiseAbs().mean() + 1e-12);

  const Matrix diff = pi - actions;
  const double loss = -lambda * q.mean() + diff.squaredNorm() / dims;

  // dL/dQ = -lambda / b per row; pull dQ/d(action) out of the critic
  Matrix critic_out_grad = Matrix::Constant(states.rows(), 1, -lambda / b);
  Matrix critic_in_grad;
  mlp_backward(critic, critic_cache, critic_out_grad, &critic_in_grad);
  Matrix action_grad = critic_in_grad.rightCols(actions.cols());
  action_grad += (2.0 / dims) * diff;

  Matrix pre_grad =
      squash_backward(actor_cache.output(), action_grad, low, high);
  Gradients grads = mlp_backward(actor, actor_cache, pre_grad);
  return {loss, std::move(grads)};
}

std::pair<double, Gradients> awr_actor_loss(const MlpParams& actor,
                                            const Matrix& states,
                                            const Matrix& actions,
                                            const Vector& weights,
                                            const Vector& low,
                                            const Vector& high) {
  const double b = static_cast<double>(states.rows());
  const double ad = static_cast<double>(actions.cols());

  ForwardCache actor_cache = mlp_forward_cached(actor, states);
  Matrix pi = squash_actions(actor_cache.output(), low, high);
  Matrix diff = pi - actions;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < diff.rows(); ++i) {
    loss += weights[i] * diff.row(i).squaredNorm() / ad;
  }
  loss /= b;

  Matrix action_grad = diff;
  action_grad.array().colwise() *= (2.0 / (b * ad)) * weights.array();
  Matrix pre_grad =
      squash_backward(actor_cache.output(), action_grad, low, high);
  Gradients grads = mlp_backward(actor, actor_cache, pre_grad);
  return {loss, std::move(grads)};
}

AgentArtifact train_bc(const TransitionSet& data, const AgentConfig& cfg) {
  TrainingData td = prepare_training_data(data, /*need_rewards=*/false);
  const EnvSpec& spec = td.spec;

  AgentArtifact art;
  art.env_id = data.env_id;
  art.algorithm = Algorithm::bc;
  art.config = cfg;
  art.state_norm = td.state_norm;
  art.actor = mlp_init(
      net_sizes(spec.state_dim, cfg.hidden_sizes, spec.action_dim),
      derive_seed(cfg.seed, "bc-actor"));
  AdamState opt = adam_init(art.actor, cfg.actor_lr);
  Rng rng(derive_seed(cfg.seed, "bc-train"));

  for (int step = 0; step < cfg.training_steps; ++step) {
    Batch batch = sample_batch(td, cfg.batch_size, rng);
    Vector ones = Vector::Ones(batch.states.rows());
    auto [loss, grads] =
        awr_actor_loss(art.actor, batch.states, batch.actions, ones,
                       spec.action_low, spec.action_high);
    check_finite_loss(loss, step, "train_bc");
    adam_step_inplace(art.actor, grads, opt);
    art.training_log.push_back(loss);
  }
  return art;
}

AgentArtifact train_td3bc(const TransitionSet& data, const AgentConfig& cfg) {
  if (!data.fully_labeled()) {
    fail(ErrorKind::invalid_argument,
         "train_td3bc: dataset has missing rewards; impute rewards first");
  }
  TrainingData td = prepare_training_data(data, /*need_rewards=*/true);
  const EnvSpec& spec = td.spec;
  const int sd = spec.state_dim;
  const int ad = spec.action_dim;

  AgentArtifact art;
  art.env_id = data.env_id;
  art.algorithm = Algorithm::td3bc;
  art.config = cfg;
  art.state_norm = td.state_norm;
  art.actor = mlp_init(net_sizes(sd, cfg.hidden_sizes, ad),
                       derive_seed(cfg.seed, "td3bc-actor"));
  art.critics.push_back(mlp_init(net_sizes(sd + ad, cfg.hidden_sizes, 1),
                                 derive_seed(cfg.seed, "td3bc-critic1")));
  art.critics.push_back(mlp_init(net_sizes(sd + ad, cfg.hidden_sizes, 1),
                                 derive_seed(cfg.seed, "td3bc-critic2")));
  MlpParams actor_t = art.actor;
  MlpParams critic1_t = art.critics[0];
  MlpParams critic2_t = art.critics[1];
  AdamState actor_opt = adam_init(art.actor, cfg.actor_lr);
  AdamState critic1_opt = adam_init(art.critics[0], cfg.critic_lr);
  AdamState critic2_opt = adam_init(art.critics[1], cfg.critic_lr);
  Rng rng(derive_seed(cfg.seed, "td3bc-train"));

  for (int step = 0; step < cfg.training_steps; ++step) {
    Batch batch = sample_batch(td, cfg.batch_size, rng);
    const int b = static_cast<int>(batch.states.rows());

    // target action: squashed target policy plus clipped smoothing noise
    Matrix next_pre = mlp_forward(actor_t, batch.next_states);
    Matrix next_actions =
        squash_actions(next_pre, spec.action_low, spec.action_high);
    for (int i = 0; i < b; ++i) {
      for (int j = 0; j < ad; ++j) {
        const double noise =
            std::clamp(cfg.policy_noise * rng.normal(), -cfg.noise_clip,
                       cfg.noise_clip);
        next_actions(i, j) = std::clamp(next_actions(i, j) + noise,
                                        spec.action_low[j],
                                        spec.action_high[j]);
      }
    }
    Vector y = td_targets(critic1_t, critic2_t, batch.next_states,
                          next_actions, batch.rewards, batch.dones, cfg.gamma);

    const Matrix sa = concat_cols(batch.states, batch.actions);
    double critic_loss_total = 0.0;
    for (int c = 0; c < 2; ++c) {
      MlpParams& critic = art.critics[c];
      ForwardCache cache = mlp_forward_cached(critic, sa);
      auto [loss, grad] = mse_loss(cache.output().col(0), y);
      critic_loss_total += loss;
      Matrix out_grad = grad;
      out_grad.resize(b, 1);
      Gradients grads = mlp_backward(critic, cache, out_grad);
      adam_step_inplace(critic, grads, c == 0 ? critic1_opt : critic2_opt);
    }
    check_finite_loss(critic_loss_total, step, "train_td3bc");
    art.training_log.push_back(critic_loss_total);

    if ((step + 1) % cfg.policy_delay == 0) {
      auto [actor_loss, actor_grads] = td3bc_actor_loss(
          art.actor, art.critics[0], batch.states, batch.actions,
          spec.action_low, spec.action_high, cfg.td3bc_alpha);
      check_finite_loss(actor_loss, step, "train_td3bc(actor)");
      adam_step_inplace(art.actor, actor_grads, actor_opt);
      polyak_update(actor_t, art.actor, cfg.polyak_tau);
      polyak_update(critic1_t, art.critics[0], cfg.polyak_tau);
      polyak_update(critic2_t, art.critics[1], cfg.polyak_tau);
    }
  }
  return art;
}

AgentArtifact train_iql(const TransitionSet& data, const AgentConfig& cfg) {
  if (!data.fully_labeled()) {
    fail(ErrorKind::invalid_argument,
         "train_iql: dataset has missing rewards; impute rewards first");
  }
  if (!(cfg.expectile_tau > 0.0 && cfg.expectile_tau < 1.0)) {
    fail(ErrorKind::invalid_argument, "train_iql: expectile_tau not in (0,1)");
  }
  TrainingData td = prepare_training_data(data, /*need_rewards=*/true);
  const EnvSpec& spec = td.spec;
  const int sd = spec.state_dim;
  const int ad = spec.action_dim;

  AgentArtifact art;
  art.env_id = data.env_id;
  art.algorithm = Algorithm::iql;
  art.config = cfg;
  art.state_norm = td.state_norm;
  art.actor = mlp_init(net_sizes(sd, cfg.hidden_sizes, ad),
                       derive_seed(cfg.seed, "iql-actor"));
  art.critics.push_back(mlp_init(net_sizes(sd + ad, cfg.hidden_sizes, 1),
                                 derive_seed(cfg.seed, "iql-critic1")));
  art.critics.push_back(mlp_init(net_sizes(sd + ad, cfg.hidden_sizes, 1),
                                 derive_seed(cfg.seed, "iql-critic2")));
  art.value_net = mlp_init(net_sizes(sd, cfg.hidden_sizes, 1),
                           derive_seed(cfg.seed, "iql-value"));
  MlpParams critic1_t = art.critics[0];
  MlpParams critic2_t = art.critics[1];
  AdamState actor_opt = adam_init(art.actor, cfg.actor_lr);
  AdamState critic1_opt = adam_init(art.critics[0], cfg.critic_lr);
  AdamState critic2_opt = adam_init(art.critics[1], cfg.critic_lr);
  AdamState value_opt = adam_init(*art.value_net, cfg.critic_lr);
  Rng rng(derive_seed(cfg.seed, "iql-train"));

  for (int step = 0; step < cfg.training_steps; ++step) {
    Batch batch = sample_batch(td, cfg.batch_size, rng);
    const int b = static_cast<int>(batch.states.rows());
    const Matrix sa = concat_cols(batch.states, batch.actions);

    // targets from the pre-update networks
    Vector q_t = mlp_forward(critic1_t, sa)
                     .col(0)
                     .cwiseMin(mlp_forward(critic2_t, sa).col(0));
    Vector v_next = mlp_forward(*art.value_net, batch.next_states).col(0);
    Vector q_y = batch.rewards.array() +
                 cfg.gamma * (1.0 - batch.dones.array()) * v_next.array();

    // value net: expectile regression of V(s) toward min target-Q(s,a)
    ForwardCache v_cache = mlp_forward_cached(*art.value_net, batch.states);
    Vector v = v_cache.output().col(0);
    auto [v_loss, v_grad] = expectile_loss(v, q_t, cfg.expectile_tau);
    check_finite_loss(v_loss, step, "train_iql(value)");
    Matrix v_out_grad = v_grad;
    v_out_grad.resize(b, 1);
    adam_step_inplace(*art.value_net,
                      mlp_backward(*art.value_net, v_cache, v_out_grad),
                      value_opt);

    // critics toward r + gamma (1-d) V(s')
    double critic_loss_total = 0.0;
    for (int c = 0; c < 2; ++c) {
      MlpParams& critic = art.critics[c];
      ForwardCache cache = mlp_forward_cached(critic, sa);
      auto [loss, grad] = mse_loss(cache.output().col(0), q_y);
      critic_loss_total += loss;
      Matrix out_grad = grad;
      out_grad.resize(b, 1);
      adam_step_inplace(critic, mlp_backward(critic, cache, out_grad),
                        c == 0 ? critic1_opt : critic2_opt);
    }
    check_finite_loss(critic_loss_total, step, "train_iql(critic)");
    art.training_log.push_back(critic_loss_total);

    // advantage-weighted regression on the actor
    Vector advantage = q_t - v;
    Vector weights(b);
    for (int i = 0; i < b; ++i) {
      weights[i] =
          std::min(std::exp(cfg.awr_beta * advantage[i]), cfg.awr_weight_clip);
    }
    auto [a_loss, a_grads] =
        awr_actor_loss(art.actor, batch.states, batch.actions, weights,
                       spec.action_low, spec.action_high);
    check_finite_loss(a_loss, step, "train_iql(actor)");
    adam_step_inplace(art.actor, a_grads, actor_opt);

    polyak_update(critic1_t, art.critics[0], cfg.polyak_tau);
    polyak_update(critic2_t, art.critics[1], cfg.polyak_tau);
  }
  return art;
}

AgentArtifact train_agent(const TransitionSet& data, const AgentConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::td3bc: return train_td3bc(data, cfg);
    case Algorithm::iql: return train_iql(data, cfg);
    case Algorithm::bc: return train_bc(data, cfg);
  }
  fail(ErrorKind::invalid_argument, "train_agent: unknown algorithm");
}

Vector policy_act(const AgentArtifact& artifact, const Vector& state) {
  if (state.size() != artifact.actor.input_dim()) {
    fail(ErrorKind::shape, "policy_act: state dimension mismatch");
  }
  const EnvSpec spec = make_env(artifact.env_id);
  Matrix row = artifact.state_norm.apply(state).transpose();
  Matrix pre = mlp_forward(artifact.actor, row);
  return squash_actions(pre, spec.action_low, spec.action_high)
      .row(0)
      .transpose();
}

namespace {

json agent_config_json(const AgentConfig& cfg) {
  return {
      {"algorithm", algorithm_name(cfg.algorithm)},
      {"gamma", cfg.gamma},
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
      {"awr_weight_clip", cfg.awr_weight_clip},
      {"seed", cfg.seed},
  };
}

AgentConfig agent_config_from_json(const json& j) {
  AgentConfig cfg;
  cfg.algorithm = algorithm_from_name(j.at("algorithm").get<std::string>());
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
  return cfg;
}

}  // namespace

void save_agent(const AgentArtifact& artifact, const std::string& path) {
  json header = {
      {"format", "rewimp-agent"},
      {"env_id", artifact.env_id},
      {"algorithm", algorithm_name(artifact.algorithm)},
      {"actor_layer_sizes", artifact.actor.layer_sizes},
      {"n_critics", artifact.critics.size()},
      {"has_value_net", artifact.value_net.has_value()},
      {"norm_mean", vector_to_json(artifact.state_norm.mean)},
      {"norm_stddev", vector_to_json(artifact.state_norm.stddev)},
      {"config", agent_config_json(artifact.config)},
      {"training_log", artifact.training_log},
  };
  if (!artifact.critics.empty()) {
    header["critic_layer_sizes"] = artifact.critics.front().layer_sizes;
  }
  if (artifact.value_net.has_value()) {
    header["value_layer_sizes"] = artifact.value_net->layer_sizes;
  }
  NamedTensorWriter tensors;
  add_mlp_tensors(tensors, "actor", artifact.actor);
  for (std::size_t c = 0; c < artifact.critics.size(); ++c) {
    add_mlp_tensors(tensors, "critic" + std::to_string(c),
                    artifact.critics[c]);
  }
  if (artifact.value_net.has_value()) {
    add_mlp_tensors(tensors, "value", *artifact.value_net);
  }
  write_checkpoint(path, header, tensors);
}

AgentArtifact load_agent(const std::string& path) {
  Checkpoint ckpt = read_checkpoint(path, "rewimp-agent");
  AgentArtifact art;
  art.env_id = ckpt.header.at("env_id").get<std::string>();
  art.algorithm =
      algorithm_from_name(ckpt.header.at("algorithm").get<std::string>());
  art.actor = mlp_from_checkpoint(
      ckpt, "actor", ckpt.header.at("actor_layer_sizes").get<std::vector<int>>());
  const std::size_t n_critics = ckpt.header.at("n_critics").get<std::size_t>();
  for (std::size_t c = 0; c < n_critics; ++c) {
    art.critics.push_back(mlp_from_checkpoint(
        ckpt, "critic" + std::to_string(c),
        ckpt.header.at("critic_layer_sizes").get<std::vector<int>>()));
  }
  if (ckpt.header.value("has_value_net", false)) {
    art.value_net = mlp_from_checkpoint(
        ckpt, "value", ckpt.header.at("value_layer_sizes").get<std::vector<int>>());
  }
  art.state_norm.mean = vector_from_json(ckpt.header.at("norm_mean"));
  art.state_norm.stddev = vector_from_json(ckpt.header.at("norm_stddev"));
  art.config = agent_config_from_json(ckpt.header.at("config"));
  art.training_log = ckpt.header.value("training_log", std::vector<double>{});
  return art;
}

}  // namespace rewimp
