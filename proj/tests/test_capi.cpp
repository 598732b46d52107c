#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include <rewimp.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / "rewimp_capi_test";
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

}  // namespace

TEST_CASE("error codes and last_error messages") {
  TempDir tmp;
  CHECK(rewimp_generate_dataset("nonexistent-v0", "medium", 100, 1,
                                tmp.file("x.jsonl").c_str()) ==
        REWIMP_ERR_NOT_FOUND);
  CHECK(std::strlen(rewimp_last_error()) > 0);

  CHECK(rewimp_generate_dataset("pointmass-v0", "not_a_tier", 100, 1,
                                tmp.file("x.jsonl").c_str()) ==
        REWIMP_ERR_INVALID_ARGUMENT);

  CHECK(rewimp_generate_dataset(nullptr, "medium", 100, 1,
                                tmp.file("x.jsonl").c_str()) ==
        REWIMP_ERR_INVALID_ARGUMENT);

  CHECK(rewimp_generate_dataset("pointmass-v0", "medium", -5, 1,
                                tmp.file("x.jsonl").c_str()) ==
        REWIMP_ERR_INVALID_ARGUMENT);

  rewimp_dataset* ds = nullptr;
  CHECK(rewimp_dataset_open(tmp.file("missing.jsonl").c_str(), &ds) ==
        REWIMP_ERR_IO);
  CHECK(ds == nullptr);

  // malformed file -> parse error
  {
    std::ofstream out(tmp.file("garbage.jsonl"));
    out << "this is not json\n";
  }
  CHECK(rewimp_dataset_open(tmp.file("garbage.jsonl").c_str(), &ds) ==
        REWIMP_ERR_PARSE);
}

TEST_CASE("full pipeline through the C API") {
  TempDir tmp;
  const std::string data = tmp.file("data.jsonl");
  const std::string labeled = tmp.file("labeled.jsonl");
  const std::string unlabeled = tmp.file("unlabeled.jsonl");
  const std::string model = tmp.file("rm.ckpt");
  const std::string imputed = tmp.file("imputed.jsonl");
  const std::string agent = tmp.file("agent.ckpt");
  const std::string report = tmp.file("report.json");

  REQUIRE(rewimp_generate_dataset("pointmass-v0", "medium", 2000, 9, // NOLINT
                                  data.c_str()) == REWIMP_OK);

  rewimp_dataset* ds = nullptr;
  REQUIRE(rewimp_dataset_open(data.c_str(), &ds) == REWIMP_OK);
  CHECK(rewimp_dataset_size(ds) == 2000);
  CHECK(std::string(rewimp_dataset_env_id(ds)) == "pointmass-v0");
  CHECK(rewimp_dataset_fully_labeled(ds) == 1);
  rewimp_dataset_close(ds);

  REQUIRE(rewimp_split_dataset(data.c_str(), 0.1, 9, labeled.c_str(),
                               unlabeled.c_str()) == REWIMP_OK);
  rewimp_dataset* unl = nullptr;
  REQUIRE(rewimp_dataset_open(unlabeled.c_str(), &unl) == REWIMP_OK);
  CHECK(rewimp_dataset_size(unl) == 1800);
  CHECK(rewimp_dataset_fully_labeled(unl) == 0);
  rewimp_dataset_close(unl);

  const char* rm_cfg = R"({"hidden_sizes":[32,32],"epochs":40})";
  REQUIRE(rewimp_train_reward_model(labeled.c_str(), rm_cfg, model.c_str()) ==
          REWIMP_OK);

  rewimp_reward_model* rm = nullptr;
  REQUIRE(rewimp_reward_model_open(model.c_str(), &rm) == REWIMP_OK);
  const double state[4] = {0.2, 0.3, 0.0, 0.0};
  const double action[2] = {0.1, -0.1};
  double reward = 0.0;
  CHECK(rewimp_reward_model_predict(rm, state, 4, action, 2, &reward) ==
        REWIMP_OK);
  CHECK(std::isfinite(reward));
  CHECK(rewimp_reward_model_predict(rm, state, 3, action, 2, &reward) ==
        REWIMP_ERR_SHAPE);
  rewimp_reward_model_close(rm);

  REQUIRE(rewimp_impute_rewards(labeled.c_str(), unlabeled.c_str(),
                                model.c_str(), imputed.c_str()) == REWIMP_OK);
  rewimp_dataset* imp = nullptr;
  REQUIRE(rewimp_dataset_open(imputed.c_str(), &imp) == REWIMP_OK);
  CHECK(rewimp_dataset_size(imp) == 2000);
  CHECK(rewimp_dataset_fully_labeled(imp) == 1);
  rewimp_dataset_close(imp);

  const char* agent_cfg =
      R"({"algorithm":"bc","training_steps":200,"hidden_sizes":[32,32]})";
  REQUIRE(rewimp_train_agent(imputed.c_str(), agent_cfg, agent.c_str()) ==
          REWIMP_OK);

  rewimp_agent* ag = nullptr;
  REQUIRE(rewimp_agent_open(agent.c_str(), &ag) == REWIMP_OK);
  CHECK(std::string(rewimp_agent_env_id(ag)) == "pointmass-v0");
  double act_out[2] = {0.0, 0.0};
  CHECK(rewimp_agent_act(ag, state, 4, act_out, 2) == REWIMP_OK);
  CHECK(act_out[0] >= -1.0);
  CHECK(act_out[0] <= 1.0);
  CHECK(rewimp_agent_act(ag, state, 4, act_out, 1) == REWIMP_ERR_SHAPE);
  rewimp_agent_close(ag);

  const char* protocol =
      R"({"n_episodes":2,"episode_steps":50,"n_seeds":2,"arm":"smoke"})";
  REQUIRE(rewimp_evaluate_agent(agent.c_str(), protocol, 3,
                                report.c_str()) == REWIMP_OK);
  std::ifstream in(report);
  json rep = json::parse(in);
  CHECK(rep.at("arm") == "smoke");
  CHECK(rep.at("seeds").size() == 2);

  // training an rl agent on unlabeled data fails with a clear code
  CHECK(rewimp_train_agent(unlabeled.c_str(),
                           R"({"algorithm":"td3bc","training_steps":5})",
                           agent.c_str()) == REWIMP_ERR_INVALID_ARGUMENT);
}

TEST_CASE("run_experiment and emit_report through the C API") {
  TempDir tmp;
  const std::string out_dir = tmp.file("exp");
  json cfg = {
      {"env_id", "pointmass-v0"},
      {"tier", "medium"},
      {"dataset_size", 1500},
      {"label_fraction", 0.1},
      {"sweep_fractions", json::array()},
      {"algorithms", {"td3bc"}},
      {"include_bc_baseline", false},
      {"master_seed", 17},
      {"reward_model", {{"hidden_sizes", {32, 32}}, {"epochs", 30}}},
      {"td3bc", {{"training_steps", 300}, {"hidden_sizes", {32, 32}}}},
      {"protocol",
       {{"n_episodes", 2}, {"episode_steps", 60}, {"n_seeds", 2}}},
  };
  const std::string cfg_str = cfg.dump();
  REQUIRE(rewimp_run_experiment(cfg_str.c_str(), out_dir.c_str()) ==
          REWIMP_OK);
  CHECK(fs::exists(fs::path(out_dir) / "result.json"));
  CHECK(fs::exists(fs::path(out_dir) / "reward_model.ckpt"));

  const char* dirs[] = {out_dir.c_str(), nullptr};
  REQUIRE(rewimp_emit_report(dirs, "table", nullptr) == REWIMP_OK);
  std::string text = rewimp_report_text();
  CHECK(text.find("pointmass") != std::string::npos);

  const std::string csv_path = tmp.file("report.csv");
  REQUIRE(rewimp_emit_report(dirs, "csv", csv_path.c_str()) == REWIMP_OK);
  CHECK(fs::exists(csv_path));

  CHECK(rewimp_emit_report(dirs, "nonsense", nullptr) ==
        REWIMP_ERR_INVALID_ARGUMENT);
  const char* empty[] = {nullptr};
  CHECK(rewimp_emit_report(empty, "table", nullptr) ==
        REWIMP_ERR_INVALID_ARGUMENT);
}
