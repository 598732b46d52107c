// Acceptance gate: runs every primary criterion and prints one PASS/FAIL
// line each. Exits nonzero if any criterion fails.
//
// Usage: acceptance [--cli <path-to-cli-binary>] [--out <scratch-dir>]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "rewimp/agents.hpp"
#include "rewimp/dataset.hpp"
#include "rewimp/envs.hpp"
#include "rewimp/eval.hpp"
#include "rewimp/experiment.hpp"
#include "rewimp/nn.hpp"
#include "rewimp/reward_model.hpp"
#include "rewimp/rng.hpp"

namespace fs = std::filesystem;
using namespace rewimp;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& what, bool ok,
            const std::string& detail = "") {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << criterion << ": "
            << what;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << std::endl;
  if (!ok) ++g_failures;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal();
  }
  return m;
}

// max relative FD error across every weight of `params` for a scalar loss
template <typename LossFn>
double max_fd_error(MlpParams params, const Gradients& analytic,
                    LossFn loss_fn) {
  const double h = 1e-5;
  double worst = 0.0;
  for (int l = 0; l < params.num_layers(); ++l) {
    for (int r = 0; r < params.weights[l].rows(); ++r) {
      for (int c = 0; c < params.weights[l].cols(); ++c) {
        const double saved = params.weights[l](r, c);
        params.weights[l](r, c) = saved + h;
        const double up = loss_fn(params);
        params.weights[l](r, c) = saved - h;
        const double down = loss_fn(params);
        params.weights[l](r, c) = saved;
        const double fd = (up - down) / (2.0 * h);
        const double g = analytic.weights[l](r, c);
        if (std::abs(fd) > 1e-7 || std::abs(g) > 1e-7) {
          worst = std::max(worst, rel_err(fd, g));
        }
      }
    }
  }
  return worst;
}

// ---- criterion 1 ----------------------------------------------------------

void criterion_table_arithmetic() {
  const std::vector<std::vector<double>> columns = {
      {48.30, 59.30, 83.70, 44.60, 60.90, 81.80, 90.70, 98.00, 110.10},
      {47.40, 66.30, 78.30, 44.20, 94.70, 73.90, 86.70, 91.50, 109.60},
      {42.60, 52.90, 75.30, 36.60, 18.10, 26.00, 55.20, 52.50, 107.50},
      {10.03, 11.32, 6.00, 2.60, 5.11, 5.37, 21.84, 11.62, 8.77},
      {18.28, 15.53, 1.21, 13.38, 4.56, 1.44, 19.28, 21.84, 8.04},
      {48.50, 58.13, 82.81, 44.71, 52.46, 69.15, 87.88, 83.65, 89.30},
      {44.46, 36.47, 69.87, 32.73, 26.42, 47.38, 51.77, 22.94, 107.38},
  };
  // published averages; the BC and TD3BC-1% entries of the source table's
  // average row are inconsistent with the plain mean of its own printed
  // per-task scores (51.77 vs 51.8556, 9.19 vs 9.1844, presumably averaged
  // before rounding), so those two columns are checked against the exact
  // means of the printed values
  const std::vector<double> expected = {75.27, 76.96, 466.7 / 9.0,
                                        82.66 / 9.0, 11.51, 68.51, 48.82};
  bool ok = true;
  std::ostringstream detail;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const double got = average_scores(columns[i]);
    if (std::abs(got - expected[i]) > 0.005) ok = false;
    if (i) detail << " ";
    detail << got;
  }
  report(1, "table-arithmetic averages reproduce the reference row", ok,
         detail.str());
}

// ---- criterion 2 ----------------------------------------------------------

void criterion_gradients() {
  Rng rng(101);
  double worst = 0.0;

  // plain MLP under MSE and expectile losses, 4 layers x 8 units
  {
    MlpParams net = mlp_init({5, 8, 8, 8, 1}, 11);
    Matrix x = random_matrix(12, 5, rng);
    Vector target = random_matrix(12, 1, rng).col(0);
    for (double tau : {0.5, 0.7, 0.9}) {
      ForwardCache cache = mlp_forward_cached(net, x);
      auto [loss, dpred] = expectile_loss(cache.output().col(0), target, tau);
      Gradients grads = mlp_backward(net, cache, dpred);
      auto loss_of = [&](const MlpParams& p) {
        return expectile_loss(mlp_forward(p, x).col(0), target, tau).first;
      };
      worst = std::max(worst, max_fd_error(net, grads, loss_of));
    }
    {
      ForwardCache cache = mlp_forward_cached(net, x);
      auto [loss, dpred] = mse_loss(cache.output().col(0), target);
      Gradients grads = mlp_backward(net, cache, dpred);
      auto loss_of = [&](const MlpParams& p) {
        return mse_loss(mlp_forward(p, x).col(0), target).first;
      };
      worst = std::max(worst, max_fd_error(net, grads, loss_of));
    }
  }

  // composite TD3BC actor loss on a frozen critic
  {
    MlpParams actor = mlp_init({3, 8, 8, 2}, 12);
    MlpParams critic = mlp_init({5, 8, 1}, 13);
    Matrix states = random_matrix(10, 3, rng);
    Matrix actions = random_matrix(10, 2, rng) * 0.5;
    Vector low = Vector::Constant(2, -1.0);
    Vector high = Vector::Constant(2, 1.0);
    auto [loss, grads] =
        td3bc_actor_loss(actor, critic, states, actions, low, high, 2.5);
    Matrix pi0 = squash_actions(mlp_forward(actor, states), low, high);
    Matrix sa0(10, 5);
    sa0 << states, pi0;
    const double lambda =
        2.5 / (mlp_forward(critic, sa0).col(0).cwiseAbs().mean() + 1e-12);
    auto loss_of = [&](const MlpParams& a) {
      Matrix pi = squash_actions(mlp_forward(a, states), low, high);
      Matrix sa(10, 5);
      sa << states, pi;
      return -lambda * mlp_forward(critic, sa).col(0).mean() +
             (pi - actions).squaredNorm() / (10.0 * 2.0);
    };
    worst = std::max(worst, max_fd_error(actor, grads, loss_of));
  }

  // composite AWR (IQL policy extraction) actor loss
  {
    MlpParams actor = mlp_init({3, 8, 8, 2}, 14);
    Matrix states = random_matrix(10, 3, rng);
    Matrix actions = random_matrix(10, 2, rng) * 0.5;
    Vector weights(10);
    for (int i = 0; i < 10; ++i) weights[i] = std::exp(rng.normal());
    Vector low = Vector::Constant(2, -1.0);
    Vector high = Vector::Constant(2, 1.0);
    auto [loss, grads] =
        awr_actor_loss(actor, states, actions, weights, low, high);
    auto loss_of = [&](const MlpParams& a) {
      Matrix pi = squash_actions(mlp_forward(a, states), low, high);
      double acc = 0.0;
      for (int i = 0; i < 10; ++i) {
        acc += weights[i] * (pi.row(i) - actions.row(i)).squaredNorm() / 2.0;
      }
      return acc / 10.0;
    };
    worst = std::max(worst, max_fd_error(actor, grads, loss_of));
  }

  report(2, "analytic gradients match finite differences within 1e-4",
         worst < 1e-4, "max rel err " + std::to_string(worst));
}

// ---- criterion 3 ----------------------------------------------------------

void criterion_adam_oracle() {
  // single-parameter net driven against an independent scalar recurrence
  MlpParams net = mlp_init({1, 1}, 0);
  net.weights[0](0, 0) = 0.4;
  net.biases[0][0] = -0.3;
  const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  AdamState state = adam_init(net, lr);

  double w = 0.4, bb = -0.3;
  double mw = 0, vw = 0, mb = 0, vb = 0;
  double worst = 0.0;
  for (int t = 1; t <= 10; ++t) {
    const double gw = 0.1 * t * w + 0.05;  // arbitrary deterministic grads
    const double gb = -0.2 * bb + 0.01 * t;
    Gradients grads;
    grads.weights = {Matrix::Constant(1, 1, gw)};
    grads.biases = {Vector::Constant(1, gb)};
    adam_step_inplace(net, grads, state);

    auto scalar = [&](double& p, double& m, double& v, double g) {
      m = b1 * m + (1 - b1) * g;
      v = b2 * v + (1 - b2) * g * g;
      const double mhat = m / (1 - std::pow(b1, t));
      const double vhat = v / (1 - std::pow(b2, t));
      p -= lr * mhat / (std::sqrt(vhat) + eps);
    };
    scalar(w, mw, vw, gw);
    scalar(bb, mb, vb, gb);
    worst = std::max(worst, std::abs(net.weights[0](0, 0) - w));
    worst = std::max(worst, std::abs(net.biases[0][0] - bb));
  }
  report(3, "adam matches the scalar recurrence over 10 steps to 1e-12",
         worst < 1e-12, "max abs err " + std::to_string(worst));
}

// ---- criterion 4 ----------------------------------------------------------

void criterion_expectile_property() {
  Rng rng(102);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 16);
    Vector pred(n), target(n);
    for (int i = 0; i < n; ++i) {
      pred[i] = rng.normal() * 3.0;
      target[i] = rng.normal() * 3.0;
    }
    const double e = expectile_loss(pred, target, 0.5).first;
    const double m = mse_loss(pred, target).first;
    worst = std::max(worst, std::abs(e - 0.5 * m));
  }
  report(4, "expectile(0.5) equals half the MSE on 1000 random vectors",
         worst < 1e-12, "max abs err " + std::to_string(worst));
}

// ---- criterion 5 ----------------------------------------------------------

void criterion_imputed_union() {
  EnvSpec spec = make_env("pointmass-v0");
  TransitionSet data = generate_dataset(spec, Tier::medium, 10000, 103);
  SplitDataset split = split_labels(data, 0.01, 104);
  bool ok = split.labeled.size() == 100 && split.unlabeled.size() == 9900;

  RewardModelConfig cfg;
  cfg.hidden_sizes = {64, 64};
  cfg.epochs = 60;
  cfg.seed = 105;
  RewardModel model = train_reward_model(split.labeled, cfg);
  TransitionSet imputed =
      build_imputed_dataset(split.labeled, split.unlabeled, model);
  ok = ok && imputed.size() == 10000;
  for (std::size_t i = 0; i < split.labeled.size() && ok; ++i) {
    ok = imputed.transitions[i].reward.has_value() &&
         *imputed.transitions[i].reward == *split.labeled.transitions[i].reward;
  }
  for (std::size_t i = 0; i < split.unlabeled.size() && ok; ++i) {
    const Transition& t = imputed.transitions[split.labeled.size() + i];
    ok = t.reward.has_value() &&
         *t.reward == predict_reward(model, t.state, t.action);
  }
  report(5, "imputed union: 100 exact labels + 9900 model predictions", ok);
}

// ---- criterion 6 ----------------------------------------------------------

void criterion_imputation_quality() {
  EnvSpec spec = make_env("pointmass-v0");
  TransitionSet data = generate_dataset(spec, Tier::medium, 100000, 106);
  SplitDataset split = split_labels(data, 0.01, 107);

  RewardModelConfig cfg;  // spec defaults
  cfg.seed = 108;
  RewardModel model = train_reward_model(split.labeled, cfg);

  std::vector<bool> mask(data.size(), false);
  for (std::size_t i : split.labeled_indices) mask[i] = true;
  TransitionSet holdout;
  holdout.env_id = data.env_id;
  holdout.tier = data.tier;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!mask[i]) holdout.transitions.push_back(data.transitions[i]);
  }
  ImputationReport rep = imputation_report(model, holdout);

  double mean = 0.0;
  for (const Transition& t : holdout.transitions) mean += *t.reward;
  mean /= static_cast<double>(holdout.size());
  double var = 0.0;
  for (const Transition& t : holdout.transitions) {
    var += (*t.reward - mean) * (*t.reward - mean);
  }
  var /= static_cast<double>(holdout.size());

  const bool ok = rep.pearson >= 0.9 && rep.mse <= 0.1 * var;
  std::ostringstream detail;
  detail << "pearson " << rep.pearson << ", mse " << rep.mse
         << ", 10% of variance " << 0.1 * var;
  report(6, "1% reward model: holdout pearson >= 0.9, mse <= 10% variance",
         ok, detail.str());
}

// ---- criteria 7 & 8 -------------------------------------------------------

struct Cell {
  std::string env;
  std::string tier;
  std::string algo;
  double baseline = 0.0;
  double fraction_only = 0.0;
  double imputed = 0.0;
  bool pass = false;
};

void criteria_central_claim_and_sweep(const fs::path& scratch) {
  const std::vector<std::string> envs = {"pointmass-v0", "pendulum-v0"};
  const std::vector<Tier> tiers = {Tier::medium, Tier::medium_replay,
                                   Tier::medium_expert};
  std::vector<Cell> cells;
  const ExperimentResult* sweep_result = nullptr;
  std::vector<ExperimentResult> results;
  results.reserve(envs.size() * tiers.size());

  for (const std::string& env : envs) {
    for (Tier tier : tiers) {
      ExperimentConfig cfg;
      cfg.env_id = env;
      cfg.tier = tier;
      cfg.master_seed = 20260826;
      if (env == "pointmass-v0" && tier == Tier::medium_replay) {
        cfg.sweep_fractions = {0.05};  // criterion 8 rides on this cell
      }
      const fs::path dir =
          scratch / (env.substr(0, env.find('-')) + "_" + tier_name(tier));
      const auto t0 = std::chrono::steady_clock::now();
      results.push_back(run_experiment(cfg, dir.string()));
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      std::cout << "  [grid] " << env << " / " << tier_name(tier) << " done in "
                << static_cast<int>(secs) << "s" << std::endl;
      const ExperimentResult& res = results.back();
      for (const std::string& algo : {std::string("td3bc"), std::string("iql")}) {
        Cell cell;
        cell.env = env;
        cell.tier = tier_name(tier);
        cell.algo = algo;
        cell.baseline = res.find("baseline", algo)->normalized_score;
        cell.fraction_only = res.find("fraction_only", algo)->normalized_score;
        cell.imputed = res.find("fraction_imputed", algo)->normalized_score;
        cell.pass = cell.imputed >= 0.75 * cell.baseline &&
                    cell.imputed >= cell.fraction_only + 10.0;
        cells.push_back(cell);
      }
      if (!cfg.sweep_fractions.empty()) sweep_result = &results.back();
    }
  }

  int passing = 0;
  for (const Cell& c : cells) {
    std::cout << "  [cell] " << c.env << " / " << c.tier << " / " << c.algo
              << ": baseline " << c.baseline << ", fraction_only "
              << c.fraction_only << ", imputed " << c.imputed << " -> "
              << (c.pass ? "ok" : "miss") << std::endl;
    if (c.pass) ++passing;
  }
  report(7,
         "central ordering (imputed >= 0.75x baseline and >= fraction_only "
         "+ 10) in >= 10/12 cells",
         passing >= 10, std::to_string(passing) + "/12");

  const double f1 =
      sweep_result->find("fraction_only", "td3bc")->normalized_score;
  const double f5 =
      sweep_result->find("fraction_only@0.05", "td3bc")->normalized_score;
  const double imp =
      sweep_result->find("fraction_imputed", "td3bc")->normalized_score;
  std::ostringstream detail;
  detail << "td3bc fraction_only 0.01 " << f1 << ", 0.05 " << f5
         << ", 0.01+imputed " << imp;
  report(8, "sweep: 5% labels beat 1%, and 1%+imputed beats 5% (td3bc)",
         f5 > f1 && imp > f5, detail.str());

  // leave a combined report behind for inspection
  std::ofstream out(scratch / "grid_report.txt");
  out << emit_report(results, "table");
}

// ---- criterion 9 ----------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_reproducibility(const std::string& cli, const fs::path& scratch) {
  const fs::path cfg_path = scratch / "repro_config.json";
  {
    std::ofstream out(cfg_path);
    out << R"({
  "env_id": "pointmass-v0",
  "tier": "medium",
  "dataset_size": 4000,
  "label_fraction": 0.05,
  "algorithms": ["td3bc"],
  "include_bc_baseline": false,
  "master_seed": 99,
  "reward_model": {"hidden_sizes": [32, 32], "epochs": 40},
  "td3bc": {"training_steps": 1000, "hidden_sizes": [32, 32]},
  "protocol": {"n_episodes": 3, "n_seeds": 2}
})";
  }
  const fs::path dir_a = scratch / "repro_a";
  const fs::path dir_b = scratch / "repro_b";
  for (const fs::path& dir : {dir_a, dir_b}) {
    const std::string cmd = "\"" + cli + "\" run-experiment --config \"" +
                            cfg_path.string() + "\" --out \"" + dir.string() +
                            "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) {
      report(9, "byte-identical reruns of run-experiment", false,
             "cli invocation failed");
      return;
    }
  }
  bool ok = true;
  std::string first_diff;
  for (const auto& entry : fs::recursive_directory_iterator(dir_a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), dir_a);
    if (rel.filename() == "manifest.json") continue;  // timings differ
    if (slurp(entry.path()) != slurp(dir_b / rel)) {
      ok = false;
      first_diff = rel.string();
      break;
    }
  }
  report(9, "byte-identical reruns of run-experiment", ok,
         ok ? "all artifacts identical" : "differs: " + first_diff);
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  fs::path scratch = fs::temp_directory_path() / "rewimp_acceptance";
  for (int i = 1; i < argc - 1; ++i) {
    if (std::string(argv[i]) == "--cli") cli = argv[i + 1];
    if (std::string(argv[i]) == "--out") scratch = argv[i + 1];
  }
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  try {
    criterion_table_arithmetic();
    criterion_gradients();
    criterion_adam_oracle();
    criterion_expectile_property();
    criterion_imputed_union();
    criterion_imputation_quality();
    criteria_central_claim_and_sweep(scratch);
    if (cli.empty()) {
      report(9, "byte-identical reruns of run-experiment", false,
             "no --cli path given");
    } else {
      criterion_reproducibility(cli, scratch);
    }
  } catch (const std::exception& e) {
    std::cout << "FAIL unhandled exception: " << e.what() << std::endl;
    return 2;
  }

  std::cout << (g_failures == 0 ? "ACCEPTANCE PASSED"
                                : "ACCEPTANCE FAILED (" +
                                      std::to_string(g_failures) +
                                      " criteria)")
            << std::endl;
  return g_failures == 0 ? 0 : 1;
}
