#include "drail/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "drail/error.hpp"

namespace drail::rl {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void check_state(const GaussianPolicy& policy, std::span<const double> s) {
  if (static_cast<int>(s.size()) != policy.state_dim) {
    throw_invalid("state has length " + std::to_string(s.size()) +
                  ", policy expects " + std::to_string(policy.state_dim));
  }
}

void check_action(const GaussianPolicy& policy, std::span<const double> a) {
  if (static_cast<int>(a.size()) != policy.action_dim) {
    throw_invalid("action has length " + std::to_string(a.size()) +
                  ", policy expects " + std::to_string(policy.action_dim));
  }
}

double clamp_log_std(double v) { return std::clamp(v, kLogStdMin, kLogStdMax); }

}  // namespace

GaussianPolicy make_policy(int state_dim, int action_dim, int hidden_dim,
                           int n_hidden, double init_log_std, uint64_t seed) {
  GaussianPolicy policy;
  policy.state_dim = state_dim;
  policy.action_dim = action_dim;
  policy.mean_net = nn::make_mlp(
      nn::mlp_specs(state_dim, hidden_dim, n_hidden, action_dim,
                    nn::Activation::kTanh),
      seed);
  policy.log_std.assign(action_dim, clamp_log_std(init_log_std));
  return policy;
}

nn::Mlp make_critic(int state_dim, int hidden_dim, int n_hidden, uint64_t seed) {
  return nn::make_mlp(
      nn::mlp_specs(state_dim, hidden_dim, n_hidden, 1, nn::Activation::kTanh),
      seed);
}

std::vector<double> policy_mean(const GaussianPolicy& policy,
                                std::span<const double> s) {
  check_state(policy, s);
  std::vector<double> mean =
      nn::forward(policy.mean_net.params, policy.mean_net.specs, s);
  for (double m : mean) {
    if (!std::isfinite(m)) throw_numeric("policy mean is not finite");
  }
  return mean;
}

ActionSample policy_sample(const GaussianPolicy& policy,
                           std::span<const double> s, Rng& rng) {
  const std::vector<double> mean = policy_mean(policy, s);
  ActionSample out;
  out.action.resize(policy.action_dim);
  out.log_prob = 0.0;
  for (int i = 0; i < policy.action_dim; ++i) {
    const double z = rng.normal();
    out.action[i] = mean[i] + std::exp(policy.log_std[i]) * z;
    out.log_prob += -0.5 * z * z - policy.log_std[i] - kHalfLog2Pi;
  }
  return out;
}

double gaussian_entropy(std::span<const double> log_std) {
  double h = 0.0;
  for (double ls : log_std) h += 0.5 + kHalfLog2Pi + ls;
  return h;
}

LogpEntropy policy_logp_entropy(const GaussianPolicy& policy,
                                std::span<const double> s,
                                std::span<const double> a) {
  check_action(policy, a);
  const std::vector<double> mean = policy_mean(policy, s);
  LogpEntropy out;
  for (int i = 0; i < policy.action_dim; ++i) {
    const double z = (a[i] - mean[i]) / std::exp(policy.log_std[i]);
    out.log_prob += -0.5 * z * z - policy.log_std[i] - kHalfLog2Pi;
  }
  out.entropy = gaussian_entropy(policy.log_std);
  return out;
}

std::vector<double> policy_logp_grad(const GaussianPolicy& policy,
                                     std::span<const double> s,
                                     std::span<const double> a) {
  check_action(policy, a);
  const std::vector<double> mean = policy_mean(policy, s);
  std::vector<double> upstream(policy.action_dim);
  std::vector<double> dlogstd(policy.action_dim);
  for (int i = 0; i < policy.action_dim; ++i) {
    const double var = std::exp(2.0 * policy.log_std[i]);
    const double diff = a[i] - mean[i];
    upstream[i] = diff / var;
    dlogstd[i] = diff * diff / var - 1.0;
  }
  std::vector<double> grad =
      nn::backward(policy.mean_net.params, policy.mean_net.specs, s, upstream);
  grad.insert(grad.end(), dlogstd.begin(), dlogstd.end());
  return grad;
}

std::vector<double> policy_params(const GaussianPolicy& policy) {
  std::vector<double> flat = policy.mean_net.params.values;
  flat.insert(flat.end(), policy.log_std.begin(), policy.log_std.end());
  return flat;
}

void set_policy_params(GaussianPolicy& policy, std::span<const double> flat) {
  if (flat.size() != policy.num_params()) {
    throw_invalid("flat policy parameter vector has wrong length");
  }
  const size_t n = policy.mean_net.params.size();
  std::copy(flat.begin(), flat.begin() + n, policy.mean_net.params.values.begin());
  for (size_t i = 0; i < policy.log_std.size(); ++i) {
    policy.log_std[i] = clamp_log_std(flat[n + i]);
  }
}

void PpoConfig::validate() const {
  if (!(clip > 0.0 && clip < 1.0)) throw_invalid("ppo.clip must lie in (0, 1)");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw_invalid("ppo.gamma must lie in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw_invalid("ppo.gae_lambda must lie in [0, 1]");
  }
  if (epochs < 0) throw_invalid("ppo.epochs must be >= 0");
  if (minibatch < 1) throw_invalid("ppo.minibatch must be >= 1");
  if (rollout_length < 1) throw_invalid("ppo.rollout_length must be >= 1");
  if (!(lr >= 0.0)) throw_invalid("ppo.lr must be >= 0");
  if (!(max_grad_norm > 0.0)) throw_invalid("ppo.max_grad_norm must be > 0");
}

RolloutBuffer make_buffer(int state_dim, int action_dim, size_t n) {
  RolloutBuffer buf;
  buf.state_dim = state_dim;
  buf.action_dim = action_dim;
  buf.states.resize(state_dim, static_cast<Eigen::Index>(n));
  buf.actions.resize(action_dim, static_cast<Eigen::Index>(n));
  buf.env_actions.resize(action_dim, static_cast<Eigen::Index>(n));
  buf.log_probs.assign(n, 0.0);
  buf.values.assign(n + 1, 0.0);
  buf.rewards.assign(n, 0.0);
  buf.dones.assign(n, 0);
  buf.successes.assign(n, 0);
  return buf;
}

Eigen::MatrixXd RolloutBuffer::pairs() const {
  Eigen::MatrixXd out(state_dim + action_dim, states.cols());
  out << states, env_actions;
  return out;
}

Gae compute_gae(std::span<const double> rewards, std::span<const double> values,
                std::span<const uint8_t> dones, double gamma, double lambda) {
  const size_t n = rewards.size();
  if (values.size() != n + 1) {
    throw_invalid("GAE needs n + 1 values (bootstrap), got " +
                  std::to_string(values.size()) + " for n = " + std::to_string(n));
  }
  if (dones.size() != n) throw_invalid("GAE dones length differs from rewards");
  Gae out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_adv = 0.0;
  for (size_t k = n; k-- > 0;) {
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * live * values[k + 1] - values[k];
    next_adv = delta + gamma * lambda * live * next_adv;
    out.advantages[k] = next_adv;
    out.returns[k] = next_adv + values[k];
  }
  return out;
}

std::vector<double> normalize_advantages(std::span<const double> advantages) {
  const size_t n = advantages.size();
  std::vector<double> out(advantages.begin(), advantages.end());
  if (n == 0) return out;
  const double mean = std::accumulate(out.begin(), out.end(), 0.0) / n;
  double var = 0.0;
  for (double a : out) var += (a - mean) * (a - mean);
  const double std = std::sqrt(var / n);
  for (double& a : out) a = std > 1e-12 ? (a - mean) / (std + 1e-8) : 0.0;
  return out;
}

double clipped_surrogate(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return std::min(ratio * advantage, clipped * advantage);
}

PpoOptimizer PpoOptimizer::create(const GaussianPolicy& policy,
                                  const nn::Mlp& critic, double lr) {
  return {nn::AdamState::for_size(policy.num_params() + critic.params.size(), lr)};
}

PpoLossTerms ppo_loss(const GaussianPolicy& policy, const nn::Mlp& critic,
                      const RolloutBuffer& buffer,
                      std::span<const size_t> indices,
                      std::span<const double> advantages,
                      const PpoConfig& config) {
  const Eigen::Index b = static_cast<Eigen::Index>(indices.size());
  if (b == 0) throw_invalid("empty PPO minibatch");
  if (advantages.size() != buffer.size() || buffer.returns.size() != buffer.size()) {
    throw_invalid("buffer advantages/returns are not populated");
  }
  const int ad = policy.action_dim;
  Eigen::MatrixXd states(policy.state_dim, b);
  Eigen::MatrixXd actions(ad, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    states.col(j) = buffer.states.col(indices[j]);
    actions.col(j) = buffer.actions.col(indices[j]);
  }

  nn::ForwardCache mean_cache;
  const Eigen::MatrixXd mean = nn::forward_batch(
      policy.mean_net.params, policy.mean_net.specs, states, &mean_cache);
  nn::ForwardCache value_cache;
  const Eigen::MatrixXd value =
      nn::forward_batch(critic.params, critic.specs, states, &value_cache);

  Eigen::VectorXd inv_var(ad);
  double log_std_sum = 0.0;
  for (int i = 0; i < ad; ++i) {
    inv_var[i] = std::exp(-2.0 * policy.log_std[i]);
    log_std_sum += policy.log_std[i];
  }

  PpoLossTerms out;
  const double inv_b = 1.0 / static_cast<double>(b);
  Eigen::MatrixXd mean_upstream(ad, b);
  Eigen::MatrixXd value_upstream(1, b);
  std::vector<double> dlogstd(ad, 0.0);
  int64_t clipped = 0;
  for (Eigen::Index j = 0; j < b; ++j) {
    const size_t k = indices[j];
    const Eigen::VectorXd diff = actions.col(j) - mean.col(j);
    const double logp = -0.5 * diff.cwiseProduct(diff).dot(inv_var) - log_std_sum -
                        ad * kHalfLog2Pi;
    const double ratio = std::exp(logp - buffer.log_probs[k]);
    const double adv = advantages[k];
    const double unclipped = ratio * adv;
    const double clipped_ratio =
        std::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip);
    const double surrogate = std::min(unclipped, clipped_ratio * adv);
    out.policy_loss -= surrogate * inv_b;
    out.mean_ratio += ratio * inv_b;
    out.max_ratio_dev = std::max(out.max_ratio_dev, std::abs(ratio - 1.0));
    if (std::abs(ratio - 1.0) > config.clip) ++clipped;

    // d(-surrogate / b) / d logp
    const double g = unclipped <= clipped_ratio * adv ? -unclipped * inv_b : 0.0;
    mean_upstream.col(j) = g * diff.cwiseProduct(inv_var);
    for (int i = 0; i < ad; ++i) {
      dlogstd[i] += g * (diff[i] * diff[i] * inv_var[i] - 1.0);
    }

    const double verr = value(0, j) - buffer.returns[k];
    out.value_loss += verr * verr * inv_b;
    value_upstream(0, j) = 2.0 * config.value_coef * verr * inv_b;
  }
  out.entropy = gaussian_entropy(policy.log_std);
  out.clip_fraction = static_cast<double>(clipped) * inv_b;
  out.total = out.policy_loss + config.value_coef * out.value_loss -
              config.entropy_coef * out.entropy;
  if (!std::isfinite(out.total)) {
    throw_numeric("PPO loss is NaN (policy " + std::to_string(out.policy_loss) +
                  ", value " + std::to_string(out.value_loss) + ")");
  }

  const size_t np = policy.mean_net.params.size();
  out.grad.assign(policy.num_params() + critic.params.size(), 0.0);
  nn::backward_batch(policy.mean_net.params, policy.mean_net.specs, mean_cache,
                     mean_upstream, std::span<double>(out.grad).subspan(0, np));
  for (int i = 0; i < ad; ++i) {
    out.grad[np + i] = dlogstd[i] - config.entropy_coef;
  }
  nn::backward_batch(critic.params, critic.specs, value_cache, value_upstream,
                     std::span<double>(out.grad).subspan(policy.num_params()));
  return out;
}

PpoResult ppo_update(const GaussianPolicy& policy, const nn::Mlp& critic,
                     const RolloutBuffer& buffer, const PpoConfig& config,
                     PpoOptimizer& optimizer, Rng& rng, double lr_scale) {
  config.validate();
  const size_t n = buffer.size();
  if (n == 0) throw_invalid("empty rollout buffer");
  if (buffer.advantages.size() != n) {
    throw_invalid("compute GAE before the PPO update");
  }
  const std::vector<double> advantages =
      config.normalize_advantages ? normalize_advantages(buffer.advantages)
                                  : buffer.advantages;

  PpoResult result{policy, critic, {}};
  std::vector<double> flat = policy_params(policy);
  flat.insert(flat.end(), critic.params.values.begin(), critic.params.values.end());
  const size_t np = policy.num_params();

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  const size_t mb = std::min<size_t>(config.minibatch, n);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (size_t start = 0; start < n; start += mb) {
      const size_t len = std::min(mb, n - start);
      const std::span<const size_t> idx(order.data() + start, len);
      PpoLossTerms terms = ppo_loss(result.policy, result.critic, buffer, idx,
                                    advantages, config);
      if (result.stats.minibatches == 0) {
        result.stats.first_ratio_max_dev = terms.max_ratio_dev;
      }
      nn::clip_grad_norm(terms.grad, config.max_grad_norm);
      nn::adam_update(optimizer.adam, flat, terms.grad, lr_scale);
      set_policy_params(result.policy, std::span<const double>(flat).subspan(0, np));
      // keep the optimizer's view consistent with the clamped log-std
      for (size_t i = 0; i < result.policy.log_std.size(); ++i) {
        flat[result.policy.mean_net.params.size() + i] = result.policy.log_std[i];
      }
      std::copy(flat.begin() + np, flat.end(), result.critic.params.values.begin());

      ++result.stats.minibatches;
      result.stats.policy_loss += terms.policy_loss;
      result.stats.value_loss += terms.value_loss;
      result.stats.entropy += terms.entropy;
      result.stats.total_loss += terms.total;
      result.stats.mean_ratio += terms.mean_ratio;
      result.stats.clip_fraction += terms.clip_fraction;
    }
    ++result.stats.epochs;
  }
  if (result.stats.minibatches > 0) {
    const double k = static_cast<double>(result.stats.minibatches);
    result.stats.policy_loss /= k;
    result.stats.value_loss /= k;
    result.stats.entropy /= k;
    result.stats.total_loss /= k;
    result.stats.mean_ratio /= k;
    result.stats.clip_fraction /= k;
  }
  return result;
}

}  // namespace drail::rl
