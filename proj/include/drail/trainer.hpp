#ifndef DRAIL_TRAINER_HPP_
#define DRAIL_TRAINER_HPP_

// The adversarial imitation loop: collect a rollout, update the
// discriminator, relabel rewards, GAE, PPO. Also evaluation, behavior
// cloning and reward-landscape export.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "drail/config.hpp"
#include "drail/discriminators.hpp"
#include "drail/envs.hpp"
#include "drail/policy.hpp"
#include "drail/rng.hpp"

namespace drail::train {

// Steps the policy for n transitions, resetting the env whenever an episode
// ends. Rewards are left at zero; values has a trailing bootstrap entry.
rl::RolloutBuffer collect_rollout(env::Environment& environment,
                                  const rl::GaussianPolicy& policy,
                                  const nn::Mlp& critic, size_t n_steps,
                                  Rng& rng);

// Fills buffer.rewards with discriminator rewards clamped to +-20.
disc::RewardStats label_rewards(rl::RolloutBuffer& buffer,
                                const disc::Discriminator& discriminator,
                                Rng& rng, int threads = 1);

struct SeedResult {
  uint64_t seed = 0;
  int episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_return = 0.0;
};

struct EvalReport {
  double success_rate = 0.0;
  double mean_return = 0.0;
  int episodes = 0;
  int successes = 0;
  std::vector<SeedResult> per_seed;
};

// Runs n_episodes with the mean action (or sampled actions when
// `stochastic`); returns are task rewards.
EvalReport evaluate(const rl::GaussianPolicy& policy, const env::EnvConfig& config,
                    int n_episodes, uint64_t seed, bool stochastic = false);
// Pools one evaluation per seed.
EvalReport evaluate_seeds(const rl::GaussianPolicy& policy,
                          const env::EnvConfig& config, int episodes_per_seed,
                          const std::vector<uint64_t>& seeds,
                          bool stochastic = false);

// The point-reach PD expert written as a linear policy; the env's action
// clamp reproduces env::scripted_expert exactly.
rl::GaussianPolicy scripted_expert_policy();

// Mean-squared-error regression of the policy mean onto expert actions.
struct BcResult {
  rl::GaussianPolicy policy;
  std::vector<double> epoch_losses;  // loss of each epoch's minibatches
};

BcResult bc_train(const env::ExpertDataset& dataset,
                  const rl::GaussianPolicy& initial, int epochs, double lr,
                  int minibatch, Rng& rng);

enum class GridValue : uint8_t { kProbability, kLogit };

struct RewardGrid {
  std::vector<double> s_axis;
  std::vector<double> a_axis;
  std::vector<double> values;  // row-major, s outer
  disc::Kind method = disc::Kind::kDrail;
  GridValue value = GridValue::kProbability;

  double at(size_t i, size_t j) const { return values[i * a_axis.size() + j]; }
};

// Cell = mean over `samples` draws of D (or of the clamped reward).
RewardGrid reward_map(const disc::Discriminator& discriminator,
                      const env::GridAxes& axes, Rng& rng, int samples,
                      GridValue value = GridValue::kProbability);
std::string reward_grid_csv(const RewardGrid& grid);

struct Counters {
  int64_t iterations = 0;
  int64_t rollouts = 0;
  int64_t disc_passes = 0;
  int64_t disc_minibatches = 0;
  int64_t labelings = 0;
  int64_t gae_passes = 0;
  int64_t ppo_epochs = 0;
  int64_t evaluations = 0;
};

struct TrainOptions {
  int threads = 1;
  bool verbose = false;  // progress lines on stderr
};

struct TrainResult {
  rl::GaussianPolicy policy;
  nn::Mlp critic;
  std::optional<disc::Discriminator> discriminator;
  std::optional<disc::Discriminator> initial_discriminator;
  std::string metrics_csv;
  Counters counters;
  EvalReport final_eval;
  int64_t env_steps = 0;
};

inline constexpr const char* kMetricsHeader =
    "env_steps,iter,disc_loss,ppo_loss,mean_reward,success_rate,mean_return,"
    "clip_frac,clamped_rewards";

// Builds the method's discriminator for the config's env dims.
disc::Discriminator make_discriminator(const TrainConfig& config);

// Loads the expert file named by the config and trains.
TrainResult train(const TrainConfig& config, const TrainOptions& options = {});
TrainResult train_with_dataset(const TrainConfig& config,
                               const env::ExpertDataset& expert,
                               const TrainOptions& options = {});

// Writes policy.drlp, discriminator(_init).drlp, metrics.csv and
// manifest.json into `run_dir` (created if missing).
void write_run(const TrainConfig& config, const TrainResult& result,
               const std::filesystem::path& run_dir);

}  // namespace drail::train

#endif  // DRAIL_TRAINER_HPP_
