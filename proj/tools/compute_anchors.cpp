// Computes the normalization anchors (random_return, expert_return) for each
// environment: mean return over 100 episodes of the uniform-random policy and
// of the scripted expert. The resulting constants are frozen in src/envs.cpp.
#include <cstdio>

#include "rewimp/dataset.hpp"
#include "rewimp/envs.hpp"
#include "rewimp/rng.hpp"

using namespace rewimp;

int main() {
  constexpr int kEpisodes = 100;
  constexpr std::uint64_t kBaseSeed = 20260826;
  for (const std::string& env_id : env_ids()) {
    const EnvSpec spec = make_env(env_id);
    Rng action_rng(derive_seed(kBaseSeed, "anchor-actions"));
    double random_sum = 0.0;
    for (int ep = 0; ep < kEpisodes; ++ep) {
      random_sum += rollout_return(
          spec,
          [&](const Vector&, int) {
            Vector a(spec.action_dim);
            for (int i = 0; i < spec.action_dim; ++i) {
              a[i] = action_rng.uniform(spec.action_low[i], spec.action_high[i]);
            }
            return a;
          },
          derive_seed(kBaseSeed, "anchor-random", ep));
    }
    double expert_sum = 0.0;
    for (int ep = 0; ep < kEpisodes; ++ep) {
      expert_sum += rollout_return(
          spec,
          [&](const Vector& s, int) { return scripted_expert_action(spec, s); },
          derive_seed(kBaseSeed, "anchor-expert", ep));
    }
    std::printf("%s random_return=%.17g expert_return=%.17g\n", env_id.c_str(),
                random_sum / kEpisodes, expert_sum / kEpisodes);
  }
  return 0;
}
