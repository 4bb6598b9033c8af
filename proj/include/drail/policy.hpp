#ifndef DRAIL_POLICY_HPP_
#define DRAIL_POLICY_HPP_

// Diagonal-Gaussian MLP policy, value critic, GAE and the clipped-surrogate
// PPO update.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "drail/nn.hpp"
#include "drail/rng.hpp"

namespace drail::rl {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

struct GaussianPolicy {
  int state_dim = 0;
  int action_dim = 0;
  nn::Mlp mean_net;
  std::vector<double> log_std;

  // Flat [mean-net params || log_std] view used by the optimizer.
  size_t num_params() const { return mean_net.params.size() + log_std.size(); }
};

GaussianPolicy make_policy(int state_dim, int action_dim, int hidden_dim,
                           int n_hidden, double init_log_std, uint64_t seed);

// Value network: state -> scalar.
nn::Mlp make_critic(int state_dim, int hidden_dim, int n_hidden, uint64_t seed);

std::vector<double> policy_mean(const GaussianPolicy& policy,
                                std::span<const double> s);

struct ActionSample {
  std::vector<double> action;
  double log_prob = 0.0;
};

ActionSample policy_sample(const GaussianPolicy& policy,
                           std::span<const double> s, Rng& rng);

struct LogpEntropy {
  double log_prob = 0.0;
  double entropy = 0.0;
};

LogpEntropy policy_logp_entropy(const GaussianPolicy& policy,
                                std::span<const double> s,
                                std::span<const double> a);

// d log_prob / d [mean params || log_std].
std::vector<double> policy_logp_grad(const GaussianPolicy& policy,
                                     std::span<const double> s,
                                     std::span<const double> a);

double gaussian_entropy(std::span<const double> log_std);

void set_policy_params(GaussianPolicy& policy, std::span<const double> flat);
std::vector<double> policy_params(const GaussianPolicy& policy);

struct PpoConfig {
  double clip = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double value_coef = 0.5;
  double entropy_coef = 0.001;
  int epochs = 10;
  int minibatch = 64;
  int rollout_length = 2048;
  double lr = 3e-4;
  double max_grad_norm = 0.5;
  bool normalize_advantages = true;

  void validate() const;
};

// Column j of the matrices is step j.
struct RolloutBuffer {
  int state_dim = 0;
  int action_dim = 0;
  Eigen::MatrixXd states;       // state_dim x n
  Eigen::MatrixXd actions;      // sampled (unclamped) actions, for log-probs
  Eigen::MatrixXd env_actions;  // actions as executed by the env
  std::vector<double> log_probs;
  std::vector<double> values;   // n + 1, trailing bootstrap value
  std::vector<double> rewards;
  std::vector<uint8_t> dones;
  std::vector<uint8_t> successes;
  std::vector<double> advantages;
  std::vector<double> returns;

  size_t size() const { return rewards.size(); }
  // [s; env_action] columns, the discriminator's view of the rollout.
  Eigen::MatrixXd pairs() const;
};

RolloutBuffer make_buffer(int state_dim, int action_dim, size_t n);

struct Gae {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// delta_t = r_t + gamma (1 - done_t) V_{t+1} - V_t,
// A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}, returns = A + V[0..n).
Gae compute_gae(std::span<const double> rewards, std::span<const double> values,
                std::span<const uint8_t> dones, double gamma, double lambda);

// Mean 0, std 1 (population std); constant inputs map to all zeros.
std::vector<double> normalize_advantages(std::span<const double> advantages);

// min(ratio A, clip(ratio, 1 - eps, 1 + eps) A)
double clipped_surrogate(double ratio, double advantage, double clip);

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total_loss = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double first_ratio_max_dev = 0.0;  // max |ratio - 1| on epoch 0 minibatch 0
  int64_t minibatches = 0;
  int64_t epochs = 0;
};

// Joint Adam state over [policy params || log_std || critic params].
struct PpoOptimizer {
  nn::AdamState adam;
  static PpoOptimizer create(const GaussianPolicy& policy, const nn::Mlp& critic,
                             double lr);
};

struct PpoResult {
  GaussianPolicy policy;
  nn::Mlp critic;
  PpoStats stats;
};

// Requires buffer.advantages / returns to be filled (see compute_gae).
PpoResult ppo_update(const GaussianPolicy& policy, const nn::Mlp& critic,
                     const RolloutBuffer& buffer, const PpoConfig& config,
                     PpoOptimizer& optimizer, Rng& rng, double lr_scale = 1.0);

// Loss (to be minimized) on a minibatch and its gradient over
// [policy params || log_std || critic params]. Exposed for gradient checks.
struct PpoLossTerms {
  double total = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double max_ratio_dev = 0.0;
  std::vector<double> grad;
};

PpoLossTerms ppo_loss(const GaussianPolicy& policy, const nn::Mlp& critic,
                      const RolloutBuffer& buffer,
                      std::span<const size_t> indices,
                      std::span<const double> advantages,
                      const PpoConfig& config);

}  // namespace drail::rl

#endif  // DRAIL_POLICY_HPP_
