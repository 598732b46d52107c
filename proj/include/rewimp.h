/* C interface to the reward-imputation offline-RL toolkit.
 *
 * All functions return REWIMP_OK on success; on failure they return a
 * status code and leave a human-readable message retrievable through
 * rewimp_last_error() (thread-local). Handles are opaque and must be
 * released with the matching *_close function.
 */
#ifndef REWIMP_H
#define REWIMP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rewimp_status {
  REWIMP_OK = 0,
  REWIMP_ERR_INVALID_ARGUMENT = 1,
  REWIMP_ERR_NOT_FOUND = 2,
  REWIMP_ERR_SHAPE = 3,
  REWIMP_ERR_NUMERIC = 4,
  REWIMP_ERR_IO = 5,
  REWIMP_ERR_PARSE = 6,
  REWIMP_ERR_VALIDATION = 7,
  REWIMP_ERR_INTERNAL = 8
} rewimp_status;

/* Message for the most recent failure on this thread; empty string if none. */
const char* rewimp_last_error(void);

/* ---- pipeline stages (file based) ------------------------------------- */

/* env_id: "pointmass-v0" or "pendulum-v0";
 * tier: random|medium|medium_replay|medium_expert|expert */
rewimp_status rewimp_generate_dataset(const char* env_id, const char* tier,
                                      int64_t n_transitions, uint64_t seed,
                                      const char* out_path);

rewimp_status rewimp_split_dataset(const char* dataset_path, double fraction,
                                   uint64_t seed, const char* labeled_out,
                                   const char* unlabeled_out);

/* config_json may be NULL or "{}" for defaults; keys mirror the
 * reward_model section of the experiment config. */
rewimp_status rewimp_train_reward_model(const char* labeled_path,
                                        const char* config_json,
                                        const char* model_out);

rewimp_status rewimp_impute_rewards(const char* labeled_path,
                                    const char* unlabeled_path,
                                    const char* model_path,
                                    const char* dataset_out);

/* config_json must name the algorithm: {"algorithm":"td3bc", ...} */
rewimp_status rewimp_train_agent(const char* dataset_path,
                                 const char* config_json,
                                 const char* agent_out);

/* protocol_json may be NULL for defaults
 * ({"n_episodes":10,"episode_steps":1000,"n_seeds":5,"tail_window":10,
 *   "arm":"adhoc"}). */
rewimp_status rewimp_evaluate_agent(const char* agent_path,
                                    const char* protocol_json, uint64_t seed,
                                    const char* report_out);

/* Full three-arm experiment; config_json is the experiment config document. */
rewimp_status rewimp_run_experiment(const char* config_json,
                                    const char* out_dir);

/* result_dirs: NULL-terminated array of experiment output directories;
 * format: "table", "csv" or "plotdata". Writes to out_path, or returns the
 * text through rewimp_report_text when out_path is NULL. */
rewimp_status rewimp_emit_report(const char* const* result_dirs,
                                 const char* format, const char* out_path);
const char* rewimp_report_text(void);

/* ---- opaque handles ---------------------------------------------------- */

typedef struct rewimp_dataset rewimp_dataset;
typedef struct rewimp_reward_model rewimp_reward_model;
typedef struct rewimp_agent rewimp_agent;

rewimp_status rewimp_dataset_open(const char* path, rewimp_dataset** out);
void rewimp_dataset_close(rewimp_dataset* dataset);
int64_t rewimp_dataset_size(const rewimp_dataset* dataset);
const char* rewimp_dataset_env_id(const rewimp_dataset* dataset);
/* 1 if every transition carries a reward, else 0 */
int rewimp_dataset_fully_labeled(const rewimp_dataset* dataset);

rewimp_status rewimp_reward_model_open(const char* path,
                                       rewimp_reward_model** out);
void rewimp_reward_model_close(rewimp_reward_model* model);
rewimp_status rewimp_reward_model_predict(const rewimp_reward_model* model,
                                          const double* state, int state_dim,
                                          const double* action, int action_dim,
                                          double* reward_out);

rewimp_status rewimp_agent_open(const char* path, rewimp_agent** out);
void rewimp_agent_close(rewimp_agent* agent);
const char* rewimp_agent_env_id(const rewimp_agent* agent);
rewimp_status rewimp_agent_act(const rewimp_agent* agent, const double* state,
                               int state_dim, double* action_out,
                               int action_dim);

#ifdef __cplusplus
}
#endif

#endif /* REWIMP_H */
