#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "drail/error.hpp"
#include "drail/policy.hpp"
#include "test_util.hpp"

namespace rl = drail::rl;
using drail::test::max_rel_error;
using drail::test::numeric_grad;

namespace {

// Advantage of step t by explicit summation of discounted TD errors within
// the episode.
std::vector<double> brute_gae(const std::vector<double>& r, const std::vector<double>& v,
                              const std::vector<uint8_t>& done, double gamma, double lambda) {
  const size_t n = r.size();
  std::vector<double> out(n, 0.0);
  for (size_t t = 0; t < n; ++t) {
    double coef = 1.0;
    for (size_t k = t; k < n; ++k) {
      const double next = done[k] ? 0.0 : v[k + 1];
      out[t] += coef * (r[k] + gamma * next - v[k]);
      if (done[k]) break;
      coef *= gamma * lambda;
    }
  }
  return out;
}

rl::RolloutBuffer random_buffer(const rl::GaussianPolicy& behaviour, int n, drail::Rng& rng) {
  rl::RolloutBuffer buf = rl::make_buffer(behaviour.state_dim, behaviour.action_dim, n);
  for (int j = 0; j < n; ++j) {
    std::vector<double> s(behaviour.state_dim);
    for (double& x : s) x = rng.uniform(-1.0, 1.0);
    const rl::ActionSample a = rl::policy_sample(behaviour, s, rng);
    for (int i = 0; i < behaviour.state_dim; ++i) buf.states(i, j) = s[i];
    for (int i = 0; i < behaviour.action_dim; ++i) {
      buf.actions(i, j) = a.action[i];
      buf.env_actions(i, j) = a.action[i];
    }
    buf.log_probs[j] = a.log_prob;
    buf.rewards[j] = rng.normal();
  }
  buf.advantages.resize(n);
  buf.returns.resize(n);
  for (int j = 0; j < n; ++j) {
    buf.advantages[j] = rng.normal();
    buf.returns[j] = rng.normal();
  }
  return buf;
}

}  // namespace

TEST_SUITE("policy") {

TEST_CASE("GAE matches explicit summation across episode boundaries") {
  drail::Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = static_cast<int>(rng.integer(1, 40));
    std::vector<double> r(n);
    std::vector<double> v(n + 1);
    std::vector<uint8_t> done(n);
    for (int t = 0; t < n; ++t) {
      r[t] = rng.normal();
      v[t] = rng.normal();
      done[t] = rng.uniform() < 0.15;
    }
    v[n] = rng.normal();
    const double gamma = rng.uniform(0.8, 1.0);
    const double lambda = rng.uniform(0.0, 1.0);
    const rl::Gae g = rl::compute_gae(r, v, done, gamma, lambda);
    const std::vector<double> expected = brute_gae(r, v, done, gamma, lambda);
    for (int t = 0; t < n; ++t) {
      CHECK(std::fabs(g.advantages[t] - expected[t]) < 1e-12);
      CHECK(g.returns[t] == doctest::Approx(g.advantages[t] + v[t]).epsilon(1e-14));
    }
  }
}

TEST_CASE("GAE special cases") {
  const std::vector<double> r{1.0, 2.0, 3.0};
  const std::vector<double> v{0.0, 0.0, 0.0, 10.0};
  const std::vector<uint8_t> open{0, 0, 0};
  // lambda = 1, V = 0 before the end: discounted return plus the bootstrap.
  const rl::Gae g = rl::compute_gae(r, v, open, 0.5, 1.0);
  CHECK(g.advantages[0] == doctest::Approx(1.0 + 0.5 * 2.0 + 0.25 * 3.0 + 0.125 * 10.0));
  // lambda = 0 is the one-step TD error.
  const rl::Gae td = rl::compute_gae(r, v, open, 0.5, 0.0);
  CHECK(td.advantages[2] == doctest::Approx(3.0 + 0.5 * 10.0));
  CHECK(td.advantages[0] == doctest::Approx(1.0));
  // A terminal step ignores the bootstrap value.
  const std::vector<uint8_t> end{0, 0, 1};
  CHECK(rl::compute_gae(r, v, end, 0.5, 1.0).advantages[2] == doctest::Approx(3.0));
}

TEST_CASE("advantage normalization") {
  const std::vector<double> a{1.0, 2.0, 3.0, 6.0};
  const std::vector<double> z = rl::normalize_advantages(a);
  const double mean = std::accumulate(z.begin(), z.end(), 0.0) / 4.0;
  double var = 0.0;
  for (double x : z) var += (x - mean) * (x - mean) / 4.0;
  CHECK(std::fabs(mean) < 1e-12);
  CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
  for (double x : rl::normalize_advantages(std::vector<double>{5.0, 5.0, 5.0})) CHECK(x == 0.0);
}

TEST_CASE("clipped surrogate") {
  CHECK(rl::clipped_surrogate(1.5, 2.0, 0.2) == doctest::Approx(1.2 * 2.0));
  CHECK(rl::clipped_surrogate(0.5, 2.0, 0.2) == doctest::Approx(0.5 * 2.0));
  CHECK(rl::clipped_surrogate(0.5, -2.0, 0.2) == doctest::Approx(0.8 * -2.0));
  CHECK(rl::clipped_surrogate(1.5, -2.0, 0.2) == doctest::Approx(1.5 * -2.0));
  CHECK(rl::clipped_surrogate(1.1, 3.0, 0.2) == doctest::Approx(1.1 * 3.0));
}

TEST_CASE("Gaussian log-probability and entropy closed forms") {
  rl::GaussianPolicy p = rl::make_policy(3, 2, 8, 1, -0.5, 4);
  p.log_std = {-0.3, 0.2};
  const std::vector<double> s{0.1, 0.2, -0.3};
  const std::vector<double> mean = rl::policy_mean(p, s);
  const std::vector<double> a{mean[0] + 0.4, mean[1] - 1.0};
  const rl::LogpEntropy le = rl::policy_logp_entropy(p, s, a);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const double expected = -0.5 * std::pow(0.4 / std::exp(-0.3), 2) + 0.3 - half_log_2pi -
                          0.5 * std::pow(1.0 / std::exp(0.2), 2) - 0.2 - half_log_2pi;
  CHECK(le.log_prob == doctest::Approx(expected).epsilon(1e-12));
  CHECK(le.entropy == doctest::Approx(2.0 * (0.5 + half_log_2pi) - 0.3 + 0.2).epsilon(1e-12));
}

TEST_CASE("policy samples have the policy mean and std") {
  rl::GaussianPolicy p = rl::make_policy(2, 1, 8, 1, 0.0, 4);
  p.log_std = {std::log(0.5)};
  const std::vector<double> s{0.3, -0.2};
  const double mean = rl::policy_mean(p, s)[0];
  drail::Rng rng(9);
  const int n = 100000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const rl::ActionSample a = rl::policy_sample(p, s, rng);
    CHECK(a.log_prob == doctest::Approx(rl::policy_logp_entropy(p, s, a.action).log_prob));
    sum += a.action[0];
    sq += a.action[0] * a.action[0];
  }
  const double m = sum / n;
  CHECK(std::fabs(m - mean) < 5.0 * 0.5 / std::sqrt(n));
  CHECK(std::sqrt(sq / n - m * m) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("log-probability gradient matches finite differences") {
  const rl::GaussianPolicy p = rl::make_policy(3, 2, 6, 2, -0.2, 5);
  const std::vector<double> s{0.4, -0.1, 0.7};
  const std::vector<double> a{0.3, -0.5};
  const auto f = [&](const std::vector<double>& flat) {
    rl::GaussianPolicy q = p;
    rl::set_policy_params(q, flat);
    return rl::policy_logp_entropy(q, s, a).log_prob;
  };
  CHECK(max_rel_error(rl::policy_logp_grad(p, s, a), numeric_grad(f, rl::policy_params(p))) <
        1e-6);
}

TEST_CASE("policy parameter round trip and log-std clamp") {
  rl::GaussianPolicy p = rl::make_policy(2, 2, 4, 1, -0.5, 1);
  std::vector<double> flat = rl::policy_params(p);
  CHECK(flat.size() == p.num_params());
  flat.back() = 10.0;
  flat[flat.size() - 2] = -10.0;
  rl::set_policy_params(p, flat);
  CHECK(p.log_std[0] == rl::kLogStdMin);
  CHECK(p.log_std[1] == rl::kLogStdMax);
  CHECK_THROWS_AS(rl::set_policy_params(p, std::vector<double>(3, 0.0)), drail::Error);
}

TEST_CASE("PPO loss gradient matches finite differences") {
  const rl::GaussianPolicy behaviour = rl::make_policy(3, 2, 6, 1, -0.3, 6);
  rl::GaussianPolicy current = behaviour;
  std::vector<double> shifted = rl::policy_params(current);
  for (size_t i = 0; i < shifted.size(); ++i) shifted[i] += 0.05 * std::sin(1.0 + i);
  rl::set_policy_params(current, shifted);
  const drail::nn::Mlp critic = rl::make_critic(3, 5, 1, 7);
  drail::Rng rng(8);
  const rl::RolloutBuffer buf = random_buffer(behaviour, 12, rng);
  std::vector<size_t> idx(12);
  std::iota(idx.begin(), idx.end(), size_t{0});
  rl::PpoConfig cfg;
  cfg.clip = 0.3;
  cfg.entropy_coef = 0.01;

  const rl::PpoLossTerms terms = rl::ppo_loss(current, critic, buf, idx, buf.advantages, cfg);
  const size_t np = current.num_params();
  std::vector<double> flat = rl::policy_params(current);
  flat.insert(flat.end(), critic.params.values.begin(), critic.params.values.end());
  const auto f = [&](const std::vector<double>& x) {
    rl::GaussianPolicy q = current;
    rl::set_policy_params(q, std::span<const double>(x).subspan(0, np));
    drail::nn::Mlp c = critic;
    std::copy(x.begin() + static_cast<std::ptrdiff_t>(np), x.end(), c.params.values.begin());
    return rl::ppo_loss(q, c, buf, idx, buf.advantages, cfg).total;
  };
  CHECK(max_rel_error(terms.grad, numeric_grad(f, flat)) < 1e-6);
  CHECK(terms.total == doctest::Approx(terms.policy_loss + cfg.value_coef * terms.value_loss -
                                       cfg.entropy_coef * terms.entropy));
}

TEST_CASE("PPO update starts on-policy and counts its work") {
  const rl::GaussianPolicy policy = rl::make_policy(3, 2, 8, 1, -0.5, 2);
  const drail::nn::Mlp critic = rl::make_critic(3, 8, 1, 3);
  drail::Rng rng(4);
  rl::RolloutBuffer buf = random_buffer(policy, 40, rng);
  rl::PpoConfig cfg;
  cfg.epochs = 3;
  cfg.minibatch = 16;
  cfg.rollout_length = 40;
  rl::PpoOptimizer opt = rl::PpoOptimizer::create(policy, critic, cfg.lr);
  const rl::PpoResult res = rl::ppo_update(policy, critic, buf, cfg, opt, rng);
  CHECK(res.stats.first_ratio_max_dev < 1e-12);
  CHECK(res.stats.epochs == 3);
  CHECK(res.stats.minibatches == 3 * 3);
  CHECK(opt.adam.step == 9);
  CHECK(rl::policy_params(res.policy) != rl::policy_params(policy));

  rl::RolloutBuffer no_gae = buf;
  no_gae.advantages.clear();
  CHECK_THROWS_AS(rl::ppo_update(policy, critic, no_gae, cfg, opt, rng), drail::Error);
}

TEST_CASE("PPO config validation") {
  rl::PpoConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.clip = 0.0;
  CHECK_THROWS_AS(cfg.validate(), drail::Error);
  cfg = {};
  cfg.gamma = 1.5;
  CHECK_THROWS_AS(cfg.validate(), drail::Error);
  cfg = {};
  cfg.minibatch = 0;
  CHECK_THROWS_AS(cfg.validate(), drail::Error);
}

}  // TEST_SUITE
