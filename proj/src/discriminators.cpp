#include "drail/discriminators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <thread>

#include "drail/error.hpp"

namespace drail::disc {

const char* kind_name(Kind kind) {
  switch (kind) {
    case Kind::kGail:
      return "gail";
    case Kind::kDiffail:
      return "diffail";
    case Kind::kDrail:
      return "drail";
  }
  return "unknown";
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double clamp_reward(double r, RewardStats* stats) {
  if (r > kRewardClamp || r < -kRewardClamp) {
    if (stats) ++stats->clamped;
    return std::clamp(r, -kRewardClamp, kRewardClamp);
  }
  return r;
}

Eigen::MatrixXd make_pairs(std::span<const double> s, std::span<const double> a) {
  Eigen::MatrixXd x(s.size() + a.size(), 1);
  for (size_t i = 0; i < s.size(); ++i) x(i, 0) = s[i];
  for (size_t i = 0; i < a.size(); ++i) x(s.size() + i, 0) = a[i];
  return x;
}

DrawBatch sample_draws(const diffusion::Denoiser& model, Eigen::Index pairs,
                       int per_pair, Rng& rng) {
  if (per_pair < 1) throw_invalid("sample count M must be >= 1");
  DrawBatch draws;
  draws.per_pair = per_pair;
  const Eigen::Index n = pairs * per_pair;
  draws.ts.resize(n);
  draws.eps.resize(model.data_dim(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    draws.ts[j] = static_cast<int>(rng.integer(1, model.schedule.T));
    for (int i = 0; i < model.data_dim(); ++i) draws.eps(i, j) = rng.normal();
  }
  return draws;
}

DrawBatch slice_draws(const DrawBatch& draws, Eigen::Index first_pair,
                      Eigen::Index n_pairs) {
  DrawBatch out;
  out.per_pair = draws.per_pair;
  const Eigen::Index begin = first_pair * draws.per_pair;
  const Eigen::Index n = n_pairs * draws.per_pair;
  out.ts.assign(draws.ts.begin() + begin, draws.ts.begin() + begin + n);
  out.eps = draws.eps.middleCols(begin, n);
  return out;
}

namespace {

void check_pairs(const diffusion::Denoiser& model, const Eigen::MatrixXd& pairs,
                 const DrawBatch& draws) {
  if (pairs.rows() != model.data_dim()) {
    throw_invalid("pair batch has " + std::to_string(pairs.rows()) +
                  " rows, model expects " + std::to_string(model.data_dim()));
  }
  if (static_cast<Eigen::Index>(draws.ts.size()) != pairs.cols() * draws.per_pair) {
    throw_invalid("draw batch does not match pair count");
  }
}

// Repeats each pair column M times to line up with the draw columns.
Eigen::MatrixXd repeat_pairs(const Eigen::MatrixXd& pairs, int per_pair) {
  if (per_pair == 1) return pairs;
  Eigen::MatrixXd out(pairs.rows(), pairs.cols() * per_pair);
  for (Eigen::Index j = 0; j < pairs.cols(); ++j) {
    for (int m = 0; m < per_pair; ++m) out.col(j * per_pair + m) = pairs.col(j);
  }
  return out;
}

// Averages groups of M consecutive entries.
Eigen::VectorXd group_mean(const Eigen::VectorXd& v, int per_pair) {
  if (per_pair == 1) return v;
  const Eigen::Index n = v.size() / per_pair;
  Eigen::VectorXd out(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out[j] = v.segment(j * per_pair, per_pair).mean();
  }
  return out;
}

// Plus-branch columns first, then minus-branch columns, both over the same
// repeated pairs and draws.
diffusion::BatchInput drail_input(const DrailClassifier& clf,
                                  const Eigen::MatrixXd& pairs,
                                  const DrawBatch& draws) {
  const diffusion::Denoiser& model = clf.denoiser;
  check_pairs(model, pairs, draws);
  const Eigen::MatrixXd x0 = repeat_pairs(pairs, draws.per_pair);
  const Eigen::Index n = x0.cols();
  Eigen::MatrixXd x0_both(x0.rows(), 2 * n);
  x0_both << x0, x0;
  Eigen::MatrixXd eps_both(draws.eps.rows(), 2 * n);
  eps_both << draws.eps, draws.eps;
  std::vector<int> ts_both(draws.ts);
  ts_both.insert(ts_both.end(), draws.ts.begin(), draws.ts.end());
  std::vector<double> labels(2 * n, 0.0);
  std::fill(labels.begin(), labels.begin() + n, 1.0);
  return diffusion::make_batch_input(model, x0_both, ts_both, eps_both, labels);
}

template <typename Fn>
void parallel_chunks(Eigen::Index n, int threads, Fn&& fn) {
  threads = std::max(1, std::min<int>(threads, static_cast<int>(n / 64) + 1));
  if (threads == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> workers;
  const Eigen::Index chunk = (n + threads - 1) / threads;
  for (int k = 0; k < threads; ++k) {
    const Eigen::Index begin = k * chunk;
    const Eigen::Index len = std::min(chunk, n - begin);
    if (len <= 0) break;
    workers.emplace_back([&fn, begin, len] { fn(begin, len); });
  }
  for (auto& w : workers) w.join();
}

}  // namespace

// ---------------------------------------------------------------- DRAIL ---

DrailClassifier make_drail(const diffusion::DenoiserConfig& config,
                           int sample_count, double lr, uint64_t seed) {
  if (sample_count < 1) throw_invalid("sample count M must be >= 1");
  DrailClassifier clf;
  clf.denoiser = diffusion::make_denoiser(config, seed);
  clf.optimizer = nn::AdamState::for_size(clf.denoiser.net.params.size(), lr);
  clf.sample_count = sample_count;
  return clf;
}

BranchLosses drail_branch_losses(const DrailClassifier& clf,
                                 const Eigen::MatrixXd& pairs,
                                 const DrawBatch& draws) {
  const diffusion::BatchLoss bl =
      diffusion::batch_loss(clf.denoiser, drail_input(clf, pairs, draws));
  const Eigen::Index n = bl.loss.size() / 2;
  return {group_mean(bl.loss.head(n), draws.per_pair),
          group_mean(bl.loss.tail(n), draws.per_pair)};
}

Eigen::VectorXd drail_deltas(const DrailClassifier& clf,
                             const Eigen::MatrixXd& pairs,
                             const DrawBatch& draws) {
  const BranchLosses bl = drail_branch_losses(clf, pairs, draws);
  return bl.fake - bl.real;
}

double drail_logit_with(const DrailClassifier& clf, std::span<const double> s,
                        std::span<const double> a,
                        std::span<const diffusion::Draw> draws) {
  if (draws.empty()) throw_invalid("drail_logit needs at least one draw");
  const auto real = diffusion::ConditionLabel::real(clf.denoiser.label_dim);
  const auto fake = diffusion::ConditionLabel::fake(clf.denoiser.label_dim);
  double sum = 0.0;
  for (const diffusion::Draw& d : draws) {
    const double lp =
        diffusion::diffusion_loss_single(clf.denoiser, s, a, real, d.t, d.eps);
    const double lm =
        diffusion::diffusion_loss_single(clf.denoiser, s, a, fake, d.t, d.eps);
    sum += lm - lp;
  }
  const double delta = sum / static_cast<double>(draws.size());
  if (!std::isfinite(delta)) throw_numeric("drail logit is not finite");
  return delta;
}

LogitResult drail_logit(const DrailClassifier& clf, std::span<const double> s,
                        std::span<const double> a, Rng& rng) {
  LogitResult out;
  for (int m = 0; m < clf.sample_count; ++m) {
    out.draws.push_back(diffusion::sample_draw(clf.denoiser, rng));
  }
  out.delta = drail_logit_with(clf, s, a, out.draws);
  return out;
}

double drail_prob(double delta) { return sigmoid(delta); }

double drail_reward(const DrailClassifier& clf, std::span<const double> s,
                    std::span<const double> a, Rng& rng) {
  return drail_logit(clf, s, a, rng).delta;
}

double drail_loss_from_deltas(const Eigen::VectorXd& expert_deltas,
                              const Eigen::VectorXd& agent_deltas) {
  if (expert_deltas.size() == 0 || agent_deltas.size() == 0) {
    throw_invalid("discriminator loss needs non-empty expert and agent batches");
  }
  double e = 0.0;
  for (double d : expert_deltas) e += softplus(-d);
  double g = 0.0;
  for (double d : agent_deltas) g += softplus(d);
  return e / expert_deltas.size() + g / agent_deltas.size();
}

LossAndGrad drail_disc_loss_with(const DrailClassifier& clf,
                                 const Eigen::MatrixXd& expert,
                                 const Eigen::MatrixXd& agent,
                                 const DrawBatch& expert_draws,
                                 const DrawBatch& agent_draws) {
  if (expert.cols() == 0 || agent.cols() == 0) {
    throw_invalid("discriminator loss needs non-empty expert and agent batches");
  }
  if (expert_draws.per_pair != agent_draws.per_pair) {
    throw_invalid("expert and agent draws use different M");
  }
  const int m = expert_draws.per_pair;
  const Eigen::Index ne = expert.cols();
  const Eigen::Index na = agent.cols();
  Eigen::MatrixXd pairs(expert.rows(), ne + na);
  pairs << expert, agent;
  DrawBatch draws;
  draws.per_pair = m;
  draws.ts = expert_draws.ts;
  draws.ts.insert(draws.ts.end(), agent_draws.ts.begin(), agent_draws.ts.end());
  draws.eps.resize(expert_draws.eps.rows(),
                   expert_draws.eps.cols() + agent_draws.eps.cols());
  draws.eps << expert_draws.eps, agent_draws.eps;

  const diffusion::BatchLoss bl =
      diffusion::batch_loss(clf.denoiser, drail_input(clf, pairs, draws));
  const Eigen::Index n = bl.loss.size() / 2;
  const Eigen::VectorXd delta =
      group_mean(bl.loss.tail(n), m) - group_mean(bl.loss.head(n), m);

  LossAndGrad out;
  out.loss = drail_loss_from_deltas(delta.head(ne), delta.tail(na));
  if (!std::isfinite(out.loss)) throw_numeric("drail discriminator loss is NaN");

  // dLoss/d delta_j, spread over the M draw columns of both branches.
  Eigen::VectorXd weights(2 * n);
  for (Eigen::Index j = 0; j < ne + na; ++j) {
    const double g = j < ne ? -sigmoid(-delta[j]) / static_cast<double>(ne)
                            : sigmoid(delta[j]) / static_cast<double>(na);
    for (int k = 0; k < m; ++k) {
      weights[j * m + k] = -g / m;    // real branch: delta = ... - L_real
      weights[n + j * m + k] = g / m;  // fake branch
    }
  }
  out.grad.assign(clf.denoiser.net.params.size(), 0.0);
  diffusion::accumulate_loss_grad(clf.denoiser, bl, weights, out.grad);
  return out;
}

LossAndGrad drail_disc_loss(const DrailClassifier& clf,
                            const Eigen::MatrixXd& expert,
                            const Eigen::MatrixXd& agent, Rng& rng) {
  const DrawBatch de =
      sample_draws(clf.denoiser, expert.cols(), clf.sample_count, rng);
  const DrawBatch da =
      sample_draws(clf.denoiser, agent.cols(), clf.sample_count, rng);
  return drail_disc_loss_with(clf, expert, agent, de, da);
}

DrailClassifier drail_update(const DrailClassifier& clf,
                             const Eigen::MatrixXd& expert,
                             const Eigen::MatrixXd& agent, Rng& rng) {
  DrailClassifier next = clf;
  const LossAndGrad lg = drail_disc_loss(clf, expert, agent, rng);
  nn::adam_update(next.optimizer, next.denoiser.net.params.values, lg.grad);
  return next;
}

// ----------------------------------------------------------------- GAIL ---

GailDiscriminator make_gail(int state_dim, int action_dim, int hidden_dim,
                            int n_hidden, double lr, uint64_t seed) {
  GailDiscriminator disc;
  disc.state_dim = state_dim;
  disc.action_dim = action_dim;
  disc.net = nn::make_mlp(nn::mlp_specs(state_dim + action_dim, hidden_dim,
                                        n_hidden, 1, nn::Activation::kTanh),
                          seed);
  disc.optimizer = nn::AdamState::for_size(disc.net.params.size(), lr);
  return disc;
}

Eigen::VectorXd gail_logits(const GailDiscriminator& disc,
                            const Eigen::MatrixXd& pairs) {
  const Eigen::MatrixXd out =
      nn::forward_batch(disc.net.params, disc.net.specs, pairs);
  if (!out.allFinite()) throw_numeric("gail discriminator output is not finite");
  return out.row(0).transpose();
}

double gail_prob(const GailDiscriminator& disc, std::span<const double> s,
                 std::span<const double> a) {
  return sigmoid(gail_reward(disc, s, a));
}

double gail_reward(const GailDiscriminator& disc, std::span<const double> s,
                   std::span<const double> a) {
  if (static_cast<int>(s.size()) != disc.state_dim ||
      static_cast<int>(a.size()) != disc.action_dim) {
    throw_invalid("state/action dims do not match gail discriminator");
  }
  return gail_logits(disc, make_pairs(s, a))[0];
}

double gail_loss_from_logits(const Eigen::VectorXd& expert_logits,
                             const Eigen::VectorXd& agent_logits) {
  return drail_loss_from_deltas(expert_logits, agent_logits);
}

LossAndGrad gail_disc_loss(const GailDiscriminator& disc,
                           const Eigen::MatrixXd& expert,
                           const Eigen::MatrixXd& agent) {
  if (expert.cols() == 0 || agent.cols() == 0) {
    throw_invalid("discriminator loss needs non-empty expert and agent batches");
  }
  const Eigen::Index ne = expert.cols();
  const Eigen::Index na = agent.cols();
  Eigen::MatrixXd pairs(expert.rows(), ne + na);
  pairs << expert, agent;
  nn::ForwardCache cache;
  const Eigen::MatrixXd z =
      nn::forward_batch(disc.net.params, disc.net.specs, pairs, &cache);
  const Eigen::VectorXd logits = z.row(0).transpose();
  LossAndGrad out;
  out.loss = gail_loss_from_logits(logits.head(ne), logits.tail(na));
  if (!std::isfinite(out.loss)) throw_numeric("gail discriminator loss is NaN");
  Eigen::MatrixXd upstream(1, ne + na);
  for (Eigen::Index j = 0; j < ne + na; ++j) {
    upstream(0, j) = j < ne ? -sigmoid(-logits[j]) / static_cast<double>(ne)
                            : sigmoid(logits[j]) / static_cast<double>(na);
  }
  out.grad.assign(disc.net.params.size(), 0.0);
  nn::backward_batch(disc.net.params, disc.net.specs, cache, upstream, out.grad);
  return out;
}

GailDiscriminator gail_update(const GailDiscriminator& disc,
                              const Eigen::MatrixXd& expert,
                              const Eigen::MatrixXd& agent) {
  GailDiscriminator next = disc;
  const LossAndGrad lg = gail_disc_loss(disc, expert, agent);
  nn::adam_update(next.optimizer, next.net.params.values, lg.grad);
  return next;
}

// -------------------------------------------------------------- DiffAIL ---

DiffailDiscriminator make_diffail(diffusion::DenoiserConfig config,
                                  int sample_count, double lr, uint64_t seed) {
  if (sample_count < 1) throw_invalid("sample count M must be >= 1");
  config.label_dim = 0;
  DiffailDiscriminator disc;
  disc.denoiser = diffusion::make_denoiser(config, seed);
  disc.optimizer = nn::AdamState::for_size(disc.denoiser.net.params.size(), lr);
  disc.sample_count = sample_count;
  return disc;
}

namespace {

diffusion::BatchInput diffail_input(const DiffailDiscriminator& disc,
                                    const Eigen::MatrixXd& pairs,
                                    const DrawBatch& draws) {
  check_pairs(disc.denoiser, pairs, draws);
  const Eigen::MatrixXd x0 = repeat_pairs(pairs, draws.per_pair);
  const std::vector<double> labels(x0.cols(), 0.0);
  return diffusion::make_batch_input(disc.denoiser, x0, draws.ts, draws.eps,
                                     labels);
}

}  // namespace

Eigen::VectorXd diffail_losses(const DiffailDiscriminator& disc,
                               const Eigen::MatrixXd& pairs,
                               const DrawBatch& draws) {
  const diffusion::BatchLoss bl =
      diffusion::batch_loss(disc.denoiser, diffail_input(disc, pairs, draws));
  return group_mean(bl.loss, draws.per_pair);
}

double diffail_prob_from_loss(double loss, RewardStats* stats) {
  if (loss < kMinDiffusionLoss) {
    if (stats) ++stats->saturated;
    loss = kMinDiffusionLoss;
  }
  return std::exp(-loss);
}

bool diffail_is_expert(double loss) { return loss < std::numbers::ln2; }

double diffail_reward_from_loss(double loss, RewardStats* stats) {
  if (loss < kMinDiffusionLoss) {
    if (stats) ++stats->saturated;
    loss = kMinDiffusionLoss;
  }
  // log(1 - e^{-L}) = log(-expm1(-L))
  const double r = -loss - std::log(-std::expm1(-loss));
  return clamp_reward(r, stats);
}

DiffailProb diffail_prob(const DiffailDiscriminator& disc,
                         std::span<const double> s, std::span<const double> a,
                         Rng& rng) {
  if (static_cast<int>(s.size()) != disc.denoiser.state_dim ||
      static_cast<int>(a.size()) != disc.denoiser.action_dim) {
    throw_invalid("state/action dims do not match diffail discriminator");
  }
  const DrawBatch draws =
      sample_draws(disc.denoiser, 1, disc.sample_count, rng);
  const double loss = diffail_losses(disc, make_pairs(s, a), draws)[0];
  return {diffail_prob_from_loss(loss), loss};
}

double diffail_reward(const DiffailDiscriminator& disc,
                      std::span<const double> s, std::span<const double> a,
                      Rng& rng, RewardStats* stats) {
  return diffail_reward_from_loss(diffail_prob(disc, s, a, rng).loss, stats);
}

double diffail_loss_from_losses(const Eigen::VectorXd& expert_losses,
                                const Eigen::VectorXd& agent_losses) {
  if (expert_losses.size() == 0 || agent_losses.size() == 0) {
    throw_invalid("discriminator loss needs non-empty expert and agent batches");
  }
  double e = 0.0;
  for (double l : expert_losses) e += std::max(l, kMinDiffusionLoss);
  double g = 0.0;
  for (double l : agent_losses) {
    g += -std::log(-std::expm1(-std::max(l, kMinDiffusionLoss)));
  }
  return e / expert_losses.size() + g / agent_losses.size();
}

LossAndGrad diffail_disc_loss_with(const DiffailDiscriminator& disc,
                                   const Eigen::MatrixXd& expert,
                                   const Eigen::MatrixXd& agent,
                                   const DrawBatch& expert_draws,
                                   const DrawBatch& agent_draws) {
  if (expert.cols() == 0 || agent.cols() == 0) {
    throw_invalid("discriminator loss needs non-empty expert and agent batches");
  }
  if (expert_draws.per_pair != agent_draws.per_pair) {
    throw_invalid("expert and agent draws use different M");
  }
  const int m = expert_draws.per_pair;
  const Eigen::Index ne = expert.cols();
  const Eigen::Index na = agent.cols();
  Eigen::MatrixXd pairs(expert.rows(), ne + na);
  pairs << expert, agent;
  DrawBatch draws;
  draws.per_pair = m;
  draws.ts = expert_draws.ts;
  draws.ts.insert(draws.ts.end(), agent_draws.ts.begin(), agent_draws.ts.end());
  draws.eps.resize(expert_draws.eps.rows(),
                   expert_draws.eps.cols() + agent_draws.eps.cols());
  draws.eps << expert_draws.eps, agent_draws.eps;

  const diffusion::BatchLoss bl =
      diffusion::batch_loss(disc.denoiser, diffail_input(disc, pairs, draws));
  const Eigen::VectorXd losses = group_mean(bl.loss, m);

  LossAndGrad out;
  out.loss = diffail_loss_from_losses(losses.head(ne), losses.tail(na));
  if (!std::isfinite(out.loss)) throw_numeric("diffail discriminator loss is NaN");

  Eigen::VectorXd weights(bl.loss.size());
  for (Eigen::Index j = 0; j < ne + na; ++j) {
    double g = 0.0;
    if (losses[j] >= kMinDiffusionLoss) {
      g = j < ne ? 1.0 / static_cast<double>(ne)
                 : -1.0 / std::expm1(losses[j]) / static_cast<double>(na);
    }
    for (int k = 0; k < m; ++k) weights[j * m + k] = g / m;
  }
  out.grad.assign(disc.denoiser.net.params.size(), 0.0);
  diffusion::accumulate_loss_grad(disc.denoiser, bl, weights, out.grad);
  return out;
}

LossAndGrad diffail_disc_loss(const DiffailDiscriminator& disc,
                              const Eigen::MatrixXd& expert,
                              const Eigen::MatrixXd& agent, Rng& rng) {
  const DrawBatch de =
      sample_draws(disc.denoiser, expert.cols(), disc.sample_count, rng);
  const DrawBatch da =
      sample_draws(disc.denoiser, agent.cols(), disc.sample_count, rng);
  return diffail_disc_loss_with(disc, expert, agent, de, da);
}

DiffailDiscriminator diffail_update(const DiffailDiscriminator& disc,
                                    const Eigen::MatrixXd& expert,
                                    const Eigen::MatrixXd& agent, Rng& rng) {
  DiffailDiscriminator next = disc;
  const LossAndGrad lg = diffail_disc_loss(disc, expert, agent, rng);
  nn::adam_update(next.optimizer, next.denoiser.net.params.values, lg.grad);
  return next;
}

// ------------------------------------------------------------ any kind ---

int Discriminator::state_dim() const {
  return std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, GailDiscriminator>) {
          return d.state_dim;
        } else {
          return d.denoiser.state_dim;
        }
      },
      impl_);
}

int Discriminator::action_dim() const {
  return std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, GailDiscriminator>) {
          return d.action_dim;
        } else {
          return d.denoiser.action_dim;
        }
      },
      impl_);
}

Eigen::VectorXd Discriminator::rewards(const Eigen::MatrixXd& pairs, Rng& rng,
                                       RewardStats* stats, int threads) const {
  const Eigen::Index n = pairs.cols();
  Eigen::VectorXd out(n);
  if (const auto* g = std::get_if<GailDiscriminator>(&impl_)) {
    parallel_chunks(n, threads, [&](Eigen::Index b, Eigen::Index len) {
      out.segment(b, len) = gail_logits(*g, pairs.middleCols(b, len));
    });
    return out;
  }
  if (const auto* d = std::get_if<DrailClassifier>(&impl_)) {
    const DrawBatch draws = sample_draws(d->denoiser, n, d->sample_count, rng);
    parallel_chunks(n, threads, [&](Eigen::Index b, Eigen::Index len) {
      out.segment(b, len) = drail_deltas(*d, pairs.middleCols(b, len),
                                         slice_draws(draws, b, len));
    });
    return out;
  }
  const auto& f = std::get<DiffailDiscriminator>(impl_);
  const DrawBatch draws = sample_draws(f.denoiser, n, f.sample_count, rng);
  Eigen::VectorXd losses(n);
  parallel_chunks(n, threads, [&](Eigen::Index b, Eigen::Index len) {
    losses.segment(b, len) =
        diffail_losses(f, pairs.middleCols(b, len), slice_draws(draws, b, len));
  });
  // Floor only; the symmetric clamp is applied by the caller.
  for (Eigen::Index j = 0; j < n; ++j) {
    double loss = losses[j];
    if (loss < kMinDiffusionLoss) {
      if (stats) ++stats->saturated;
      loss = kMinDiffusionLoss;
    }
    out[j] = std::max(-loss - std::log(-std::expm1(-loss)), -kRewardClamp);
  }
  return out;
}

Eigen::VectorXd Discriminator::probabilities(const Eigen::MatrixXd& pairs,
                                             Rng& rng, int samples) const {
  if (samples < 1) throw_invalid("need at least one sample per cell");
  const Eigen::Index n = pairs.cols();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < samples; ++k) {
    if (const auto* g = std::get_if<GailDiscriminator>(&impl_)) {
      const Eigen::VectorXd z = gail_logits(*g, pairs);
      for (Eigen::Index j = 0; j < n; ++j) acc[j] += sigmoid(z[j]);
    } else if (const auto* d = std::get_if<DrailClassifier>(&impl_)) {
      const DrawBatch draws = sample_draws(d->denoiser, n, d->sample_count, rng);
      const Eigen::VectorXd delta = drail_deltas(*d, pairs, draws);
      for (Eigen::Index j = 0; j < n; ++j) acc[j] += drail_prob(delta[j]);
    } else {
      const auto& f = std::get<DiffailDiscriminator>(impl_);
      const DrawBatch draws = sample_draws(f.denoiser, n, f.sample_count, rng);
      const Eigen::VectorXd losses = diffail_losses(f, pairs, draws);
      for (Eigen::Index j = 0; j < n; ++j) acc[j] += diffail_prob_from_loss(losses[j]);
    }
  }
  return acc / static_cast<double>(samples);
}

double Discriminator::loss(const Eigen::MatrixXd& expert,
                           const Eigen::MatrixXd& agent, Rng& rng) const {
  return std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, GailDiscriminator>) {
          return gail_disc_loss(d, expert, agent).loss;
        } else if constexpr (std::is_same_v<T, DrailClassifier>) {
          return drail_disc_loss(d, expert, agent, rng).loss;
        } else {
          return diffail_disc_loss(d, expert, agent, rng).loss;
        }
      },
      impl_);
}

double Discriminator::update(const Eigen::MatrixXd& expert,
                             const Eigen::MatrixXd& agent, Rng& rng) {
  return std::visit(
      [&](auto& d) {
        using T = std::decay_t<decltype(d)>;
        LossAndGrad lg;
        if constexpr (std::is_same_v<T, GailDiscriminator>) {
          lg = gail_disc_loss(d, expert, agent);
          nn::adam_update(d.optimizer, d.net.params.values, lg.grad);
        } else if constexpr (std::is_same_v<T, DrailClassifier>) {
          lg = drail_disc_loss(d, expert, agent, rng);
          nn::adam_update(d.optimizer, d.denoiser.net.params.values, lg.grad);
        } else {
          lg = diffail_disc_loss(d, expert, agent, rng);
          nn::adam_update(d.optimizer, d.denoiser.net.params.values, lg.grad);
        }
        return lg.loss;
      },
      impl_);
}

double Discriminator::accuracy(const Eigen::MatrixXd& expert,
                               const Eigen::MatrixXd& agent, Rng& rng) const {
  const Eigen::VectorXd pe = probabilities(expert, rng, 1);
  const Eigen::VectorXd pa = probabilities(agent, rng, 1);
  Eigen::Index correct = 0;
  for (double p : pe) correct += p > 0.5 ? 1 : 0;
  for (double p : pa) correct += p > 0.5 ? 0 : 1;
  return static_cast<double>(correct) / static_cast<double>(pe.size() + pa.size());
}

}  // namespace drail::disc
