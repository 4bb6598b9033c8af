#include "drail/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>

#include "bytes.hpp"
#include "drail/checkpoint.hpp"
#include "drail/error.hpp"

namespace drail::train {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

Eigen::MatrixXd expert_pairs(const env::ExpertDataset& ds) {
  const int sd = ds.state_dim;
  const int ad = ds.action_dim;
  Eigen::MatrixXd out(sd + ad, static_cast<Eigen::Index>(ds.size()));
  for (size_t j = 0; j < ds.size(); ++j) {
    const env::Transition& tr = ds.transitions[j];
    for (int i = 0; i < sd; ++i) out(i, j) = tr.state[i];
    for (int i = 0; i < ad; ++i) out(sd + i, j) = tr.action[i];
  }
  return out;
}

// Re-raises numeric failures with the loop position attached.
template <typename Fn>
auto guarded(int64_t iteration, const char* module, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNumeric) throw;
    throw Error(ErrorCode::kNumeric, "NaN abort at iteration " +
                                         std::to_string(iteration) + " in " +
                                         module + ": " + e.what());
  }
}

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw_numeric(std::string(what) + " is not finite");
  }
}

}  // namespace

rl::RolloutBuffer collect_rollout(env::Environment& environment,
                                  const rl::GaussianPolicy& policy,
                                  const nn::Mlp& critic, size_t n_steps,
                                  Rng& rng) {
  const env::EnvConfig& cfg = environment.config();
  if (policy.state_dim != cfg.state_dim() || policy.action_dim != cfg.action_dim()) {
    throw_invalid("policy dims do not match the environment");
  }
  if (n_steps == 0) throw_invalid("rollout needs at least one step");
  rl::RolloutBuffer buf = rl::make_buffer(policy.state_dim, policy.action_dim, n_steps);
  auto value_of = [&](std::span<const double> s) {
    return nn::forward(critic.params, critic.specs, s)[0];
  };
  for (size_t k = 0; k < n_steps; ++k) {
    if (environment.needs_reset()) environment.reset(rng);
    const std::vector<double> obs = environment.observation();
    const rl::ActionSample act = rl::policy_sample(policy, obs, rng);
    const env::EnvStep st = environment.step(act.action);
    const Eigen::Index c = static_cast<Eigen::Index>(k);
    for (int i = 0; i < policy.state_dim; ++i) buf.states(i, c) = obs[i];
    for (int i = 0; i < policy.action_dim; ++i) {
      buf.actions(i, c) = act.action[i];
      buf.env_actions(i, c) = st.env_action[i];
    }
    buf.log_probs[k] = act.log_prob;
    buf.values[k] = value_of(obs);
    buf.dones[k] = st.done ? 1 : 0;
    buf.successes[k] = st.success ? 1 : 0;
  }
  // Bootstrap from wherever the env stopped; ignored by GAE if that was a
  // terminal step.
  buf.values[n_steps] = environment.needs_reset() ? 0.0 : value_of(environment.observation());
  check_finite(buf.values, "critic value");
  return buf;
}

disc::RewardStats label_rewards(rl::RolloutBuffer& buffer,
                                const disc::Discriminator& discriminator,
                                Rng& rng, int threads) {
  if (discriminator.state_dim() != buffer.state_dim ||
      discriminator.action_dim() != buffer.action_dim) {
    throw_invalid("discriminator dims do not match the rollout");
  }
  disc::RewardStats stats;
  const Eigen::VectorXd raw = discriminator.rewards(buffer.pairs(), rng, &stats, threads);
  for (Eigen::Index j = 0; j < raw.size(); ++j) {
    if (!std::isfinite(raw[j])) throw_numeric("discriminator reward is not finite");
    buffer.rewards[j] = disc::clamp_reward(raw[j], &stats);
  }
  return stats;
}

// ------------------------------------------------------------ evaluation ---

EvalReport evaluate(const rl::GaussianPolicy& policy, const env::EnvConfig& config,
                    int n_episodes, uint64_t seed, bool stochastic) {
  if (n_episodes < 1) throw_invalid("evaluation needs at least one episode");
  env::Environment environment(config);
  Rng rng(seed, Stream::kEval);
  Rng action_rng(seed, Stream::kPolicy);
  EvalReport report;
  double total_return = 0.0;
  for (int ep = 0; ep < n_episodes; ++ep) {
    std::vector<double> obs = environment.reset(rng);
    bool success = false;
    for (;;) {
      const std::vector<double> a =
          stochastic ? rl::policy_sample(policy, obs, action_rng).action
                     : rl::policy_mean(policy, obs);
      const env::EnvStep st = environment.step(a);
      total_return += st.task_reward;
      success = success || st.success;
      obs = st.observation;
      if (st.done) break;
    }
    if (success) ++report.successes;
  }
  report.episodes = n_episodes;
  report.success_rate = static_cast<double>(report.successes) / n_episodes;
  report.mean_return = total_return / n_episodes;
  report.per_seed.push_back(
      {seed, n_episodes, report.successes, report.success_rate, report.mean_return});
  return report;
}

EvalReport evaluate_seeds(const rl::GaussianPolicy& policy,
                          const env::EnvConfig& config, int episodes_per_seed,
                          const std::vector<uint64_t>& seeds, bool stochastic) {
  if (seeds.empty()) throw_invalid("need at least one evaluation seed");
  EvalReport out;
  double total_return = 0.0;
  for (uint64_t s : seeds) {
    const EvalReport r = evaluate(policy, config, episodes_per_seed, s, stochastic);
    out.episodes += r.episodes;
    out.successes += r.successes;
    total_return += r.mean_return * r.episodes;
    out.per_seed.push_back(r.per_seed.front());
  }
  out.success_rate = static_cast<double>(out.successes) / out.episodes;
  out.mean_return = total_return / out.episodes;
  return out;
}

rl::GaussianPolicy scripted_expert_policy() {
  rl::GaussianPolicy p;
  p.state_dim = env::kPointStateDim;
  p.action_dim = env::kPointActionDim;
  p.mean_net = nn::make_mlp({{env::kPointStateDim, env::kPointActionDim,
                              nn::Activation::kIdentity}},
                            0);
  const double w[2][6] = {{-4, 0, -6, 0, 4, 0}, {0, -4, 0, -6, 0, 4}};
  auto weight = p.mean_net.params.weight(0);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 6; ++c) weight(r, c) = w[r][c];
  }
  p.mean_net.params.bias(0).setZero();
  p.log_std.assign(2, rl::kLogStdMin);
  return p;
}

// ---------------------------------------------------------------- bc -------

BcResult bc_train(const env::ExpertDataset& dataset,
                  const rl::GaussianPolicy& initial, int epochs, double lr,
                  int minibatch, Rng& rng) {
  if (dataset.size() == 0) throw_invalid("behavior cloning needs a non-empty dataset");
  if (dataset.state_dim != initial.state_dim || dataset.action_dim != initial.action_dim) {
    throw_invalid("dataset dims do not match the policy");
  }
  if (epochs < 0 || minibatch < 1) throw_invalid("bad behavior cloning settings");
  BcResult out{initial, {}};
  nn::Mlp& net = out.policy.mean_net;
  nn::AdamState adam = nn::AdamState::for_size(net.params.size(), lr);
  const Eigen::MatrixXd pairs = expert_pairs(dataset);
  const int sd = dataset.state_dim;
  const int ad = dataset.action_dim;
  const size_t n = dataset.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  const size_t mb = std::min<size_t>(minibatch, n);
  std::vector<double> grad(net.params.size());
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    double epoch_loss = 0.0;
    for (size_t start = 0; start < n; start += mb) {
      const Eigen::Index len = static_cast<Eigen::Index>(std::min(mb, n - start));
      Eigen::MatrixXd s(sd, len);
      Eigen::MatrixXd a(ad, len);
      for (Eigen::Index j = 0; j < len; ++j) {
        s.col(j) = pairs.col(order[start + j]).head(sd);
        a.col(j) = pairs.col(order[start + j]).tail(ad);
      }
      nn::ForwardCache cache;
      const Eigen::MatrixXd pred = nn::forward_batch(net.params, net.specs, s, &cache);
      const Eigen::MatrixXd diff = pred - a;
      const double scale = 1.0 / static_cast<double>(len * ad);
      epoch_loss += diff.squaredNorm() * scale * static_cast<double>(len);
      std::fill(grad.begin(), grad.end(), 0.0);
      nn::backward_batch(net.params, net.specs, cache, 2.0 * scale * diff, grad);
      nn::adam_update(adam, net.params.values, grad);
    }
    out.epoch_losses.push_back(epoch_loss / static_cast<double>(n));
  }
  return out;
}

// ---------------------------------------------------------- reward map ----

RewardGrid reward_map(const disc::Discriminator& discriminator,
                      const env::GridAxes& axes, Rng& rng, int samples,
                      GridValue value) {
  if (axes.s_axis.empty() || axes.a_axis.empty()) throw_invalid("empty reward grid");
  if (samples < 1) throw_invalid("reward map needs at least one sample per cell");
  if (discriminator.state_dim() != 1 || discriminator.action_dim() != 1) {
    throw_invalid("reward maps need a 1-D state / 1-D action discriminator");
  }
  RewardGrid grid;
  grid.s_axis = axes.s_axis;
  grid.a_axis = axes.a_axis;
  grid.method = discriminator.kind();
  grid.value = value;
  const Eigen::Index ns = static_cast<Eigen::Index>(axes.s_axis.size());
  const Eigen::Index na = static_cast<Eigen::Index>(axes.a_axis.size());
  Eigen::MatrixXd pairs(2, ns * na);
  for (Eigen::Index i = 0; i < ns; ++i) {
    for (Eigen::Index j = 0; j < na; ++j) {
      pairs(0, i * na + j) = axes.s_axis[i];
      pairs(1, i * na + j) = axes.a_axis[j];
    }
  }
  Eigen::VectorXd cells;
  if (value == GridValue::kProbability) {
    cells = discriminator.probabilities(pairs, rng, samples);
  } else {
    cells = Eigen::VectorXd::Zero(pairs.cols());
    for (int k = 0; k < samples; ++k) {
      const Eigen::VectorXd r = discriminator.rewards(pairs, rng);
      for (Eigen::Index j = 0; j < r.size(); ++j) cells[j] += disc::clamp_reward(r[j]);
    }
    cells /= static_cast<double>(samples);
  }
  grid.values.assign(cells.data(), cells.data() + cells.size());
  check_finite(grid.values, "reward grid");
  return grid;
}

std::string reward_grid_csv(const RewardGrid& grid) {
  std::string out = "s\\a";
  for (double a : grid.a_axis) out += "," + fmt(a);
  out += "\n";
  for (size_t i = 0; i < grid.s_axis.size(); ++i) {
    out += fmt(grid.s_axis[i]);
    for (size_t j = 0; j < grid.a_axis.size(); ++j) out += "," + fmt(grid.at(i, j));
    out += "\n";
  }
  return out;
}

// ------------------------------------------------------------- training ---

disc::Discriminator make_discriminator(const TrainConfig& config) {
  const uint64_t seed = derive_seed(config.seed, static_cast<uint64_t>(Stream::kDiscriminator));
  const DiscConfig& d = config.disc;
  switch (config.method) {
    case Method::kGail:
      return disc::Discriminator(disc::make_gail(config.env.state_dim(),
                                                 config.env.action_dim(),
                                                 d.gail_hidden_dim, d.gail_n_hidden,
                                                 d.lr, seed));
    case Method::kDiffail:
      return disc::Discriminator(
          disc::make_diffail(config.denoiser_config(), d.sample_count, d.lr, seed));
    case Method::kDrail:
      return disc::Discriminator(
          disc::make_drail(config.denoiser_config(), d.sample_count, d.lr, seed));
    case Method::kBc:
      break;
  }
  throw_invalid("behavior cloning has no discriminator");
}

namespace {

env::ExpertDataset limit_expert(const TrainConfig& config, const env::ExpertDataset& expert) {
  env::validate_dataset(expert);
  if (expert.state_dim != config.env.state_dim() ||
      expert.action_dim != config.env.action_dim()) {
    throw_invalid("expert dataset dims (" + std::to_string(expert.state_dim) + ", " +
                  std::to_string(expert.action_dim) + ") do not match env " +
                  env::env_name(config.env.kind));
  }
  if (config.expert_limit > 0) {
    return env::truncate_trajectories(expert, static_cast<size_t>(config.expert_limit));
  }
  return expert;
}

struct MetricsRow {
  int64_t env_steps = 0;
  int64_t iter = 0;
  std::optional<double> disc_loss;
  double ppo_loss = 0.0;
  double mean_reward = 0.0;
  std::optional<EvalReport> eval;
  double clip_frac = 0.0;
  int64_t clamped = 0;
};

std::string csv_row(const MetricsRow& r) {
  std::string out = std::to_string(r.env_steps) + "," + std::to_string(r.iter) + ",";
  out += r.disc_loss ? fmt(*r.disc_loss) : "";
  out += "," + fmt(r.ppo_loss) + "," + fmt(r.mean_reward) + ",";
  if (r.eval) out += fmt(r.eval->success_rate) + "," + fmt(r.eval->mean_return);
  else out += ",";
  out += "," + fmt(r.clip_frac) + "," + std::to_string(r.clamped) + "\n";
  return out;
}

TrainResult train_bc(const TrainConfig& config, const env::ExpertDataset& expert,
                     rl::GaussianPolicy policy, nn::Mlp critic) {
  Rng rng(config.seed, Stream::kShuffle);
  BcResult bc = bc_train(expert, policy, config.bc.epochs, config.bc.lr,
                         config.bc.minibatch, rng);
  TrainResult out;
  out.policy = std::move(bc.policy);
  out.critic = std::move(critic);
  out.final_eval = evaluate(out.policy, config.env, config.eval_episodes,
                            derive_seed(config.seed, static_cast<uint64_t>(Stream::kEval)),
                            config.eval_stochastic);
  out.counters.evaluations = 1;
  MetricsRow row;
  row.ppo_loss = bc.epoch_losses.empty() ? 0.0 : bc.epoch_losses.back();
  row.eval = out.final_eval;
  out.metrics_csv = std::string(kMetricsHeader) + "\n" + csv_row(row);
  return out;
}

}  // namespace

TrainResult train(const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  const env::ExpertDataset expert = env::dataset_load(config.expert_path);
  return train_with_dataset(config, expert, options);
}

TrainResult train_with_dataset(const TrainConfig& config,
                               const env::ExpertDataset& expert_all,
                               const TrainOptions& options) {
  config.validate();
  const env::ExpertDataset expert = limit_expert(config, expert_all);
  const int sd = config.env.state_dim();
  const int ad = config.env.action_dim();

  rl::GaussianPolicy policy = rl::make_policy(
      sd, ad, config.policy.hidden_dim, config.policy.n_hidden, config.policy.init_log_std,
      derive_seed(config.seed, static_cast<uint64_t>(Stream::kPolicy)));
  nn::Mlp critic = rl::make_critic(
      sd, config.policy.critic_hidden_dim, config.policy.critic_n_hidden,
      derive_seed(config.seed, static_cast<uint64_t>(Stream::kPolicy) + 100));
  if (config.method == Method::kBc) {
    return train_bc(config, expert, std::move(policy), std::move(critic));
  }

  disc::Discriminator discriminator = make_discriminator(config);
  TrainResult out;
  out.initial_discriminator = discriminator;

  const Eigen::MatrixXd expert_mat = expert_pairs(expert);
  const Eigen::Index n_expert = expert_mat.cols();
  env::Environment environment(config.env);
  Rng env_rng(config.seed, Stream::kEnv);
  Rng disc_rng(config.seed, Stream::kDiscriminator);
  Rng draw_rng(config.seed, Stream::kDraws);
  Rng expert_rng(config.seed, Stream::kExpert);
  Rng shuffle_rng(config.seed, Stream::kShuffle);
  const uint64_t eval_seed = derive_seed(config.seed, static_cast<uint64_t>(Stream::kEval));
  rl::PpoOptimizer ppo_opt = rl::PpoOptimizer::create(policy, critic, config.ppo.lr);

  const size_t rollout = static_cast<size_t>(config.ppo.rollout_length);
  const int64_t iters = config.total_env_steps / config.ppo.rollout_length;
  const int half = config.disc.minibatch / 2;
  std::string csv = std::string(kMetricsHeader) + "\n";
  int64_t env_steps = 0;
  int64_t next_eval = config.eval_interval;

  for (int64_t it = 0; it < iters; ++it) {
    rl::RolloutBuffer buf = guarded(it, "rollout", [&] {
      return collect_rollout(environment, policy, critic, rollout, env_rng);
    });
    ++out.counters.rollouts;
    env_steps += static_cast<int64_t>(rollout);

    // One epoch over the fresh rollout; expert halves drawn with replacement.
    const Eigen::MatrixXd agent_mat = buf.pairs();
    double disc_loss = 0.0;
    int64_t disc_batches = 0;
    guarded(it, "discriminator", [&] {
      std::vector<Eigen::Index> order(agent_mat.cols());
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      for (int epoch = 0; epoch < config.disc.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
        for (size_t start = 0; start + half <= order.size(); start += half) {
          Eigen::MatrixXd agent(agent_mat.rows(), half);
          Eigen::MatrixXd exp(expert_mat.rows(), half);
          for (int j = 0; j < half; ++j) {
            agent.col(j) = agent_mat.col(order[start + j]);
            exp.col(j) = expert_mat.col(expert_rng.integer(0, n_expert - 1));
          }
          disc_loss += discriminator.update(exp, agent, disc_rng);
          ++disc_batches;
        }
      }
      return 0;
    });
    ++out.counters.disc_passes;
    out.counters.disc_minibatches += disc_batches;

    const disc::RewardStats rstats = guarded(it, "reward", [&] {
      return label_rewards(buf, discriminator, draw_rng, options.threads);
    });
    ++out.counters.labelings;

    const rl::Gae gae = rl::compute_gae(buf.rewards, buf.values, buf.dones,
                                        config.ppo.gamma, config.ppo.gae_lambda);
    buf.advantages = gae.advantages;
    buf.returns = gae.returns;
    ++out.counters.gae_passes;

    const double lr_scale = 1.0 - static_cast<double>(it) / static_cast<double>(iters);
    rl::PpoResult upd = guarded(it, "ppo", [&] {
      return rl::ppo_update(policy, critic, buf, config.ppo, ppo_opt, shuffle_rng, lr_scale);
    });
    policy = std::move(upd.policy);
    critic = std::move(upd.critic);
    out.counters.ppo_epochs += upd.stats.epochs;
    ++out.counters.iterations;

    MetricsRow row;
    row.env_steps = env_steps;
    row.iter = it;
    if (disc_batches > 0) row.disc_loss = disc_loss / static_cast<double>(disc_batches);
    row.ppo_loss = upd.stats.total_loss;
    row.mean_reward = std::accumulate(buf.rewards.begin(), buf.rewards.end(), 0.0) /
                      static_cast<double>(buf.size());
    row.clip_frac = upd.stats.clip_fraction;
    row.clamped = rstats.clamped;
    if (env_steps >= next_eval || it + 1 == iters) {
      row.eval = evaluate(policy, config.env, config.eval_episodes, eval_seed,
                          config.eval_stochastic);
      ++out.counters.evaluations;
      while (next_eval <= env_steps) next_eval += config.eval_interval;
      out.final_eval = *row.eval;
    }
    csv += csv_row(row);
    if (options.verbose) {
      std::fprintf(stderr, "iter %lld steps %lld disc %.4f reward %.4f%s\n",
                   static_cast<long long>(it), static_cast<long long>(env_steps),
                   row.disc_loss.value_or(0.0), row.mean_reward,
                   row.eval ? (" success " + fmt(row.eval->success_rate)).c_str() : "");
    }
  }

  out.policy = std::move(policy);
  out.critic = std::move(critic);
  out.discriminator = std::move(discriminator);
  out.metrics_csv = std::move(csv);
  out.env_steps = env_steps;
  return out;
}

void write_run(const TrainConfig& config, const TrainResult& result,
               const std::filesystem::path& run_dir) {
  std::error_code ec;
  std::filesystem::create_directories(run_dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot create run directory " + run_dir.string() +
                                    ": " + ec.message());
  }
  RunManifest manifest{config, {}};
  ckpt::save_policy(result.policy, run_dir / "policy.drlp");
  manifest.artifacts.emplace_back("policy", "policy.drlp");
  if (result.discriminator) {
    ckpt::save_discriminator(*result.discriminator, run_dir / "discriminator.drlp");
    manifest.artifacts.emplace_back("discriminator", "discriminator.drlp");
  }
  if (result.initial_discriminator) {
    ckpt::save_discriminator(*result.initial_discriminator,
                             run_dir / "discriminator_init.drlp");
    manifest.artifacts.emplace_back("discriminator_init", "discriminator_init.drlp");
  }
  detail::write_file(run_dir / "metrics.csv", result.metrics_csv);
  manifest.artifacts.emplace_back("metrics", "metrics.csv");
  detail::write_file(run_dir / "manifest.json", manifest_to_json(manifest) + "\n");
}

}  // namespace drail::train
