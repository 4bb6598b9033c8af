// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 3 6        run only criteria 3 and 6
//
// Exit status is non-zero if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "drail/checkpoint.hpp"
#include "drail/config.hpp"
#include "drail/diffusion.hpp"
#include "drail/discriminators.hpp"
#include "drail/envs.hpp"
#include "drail/policy.hpp"
#include "drail/trainer.hpp"

namespace {

using namespace drail;

// ------------------------------------------------------------ tolerances ---

constexpr double kIdentityTol = 1e-9;       // criterion 1
constexpr int kIdentityCases = 1000;
constexpr double kIdentityBudgetSec = 5.0;
constexpr int kBoundaryCases = 1000;        // criterion 2
constexpr double kGradRelTol = 1e-5;        // criterion 3
constexpr double kGradStep = 1e-6;
constexpr double kGradBudgetSec = 60.0;
constexpr double kGaeTol = 1e-12;           // criterion 4
constexpr int kGaeEpisodes = 200;
constexpr int kGaeMaxLen = 32;
constexpr double kSymmetricLossTol = 1e-6;  // criterion 5
constexpr double kUninformedRewardMax = 0.5;
constexpr int kSineSteps = 2000;            // criterion 6
constexpr int kSineExpertPairs = 5000;
constexpr int kSineHeldOut = 2000;
constexpr int kSineHalfBatch = 128;
constexpr double kSineDrailAcc = 0.95;
constexpr double kSineBaselineAcc = 0.90;
constexpr double kSineBudgetSec = 180.0;
constexpr double kSineGailLr = 3e-3;        // best of a small lr / width sweep
constexpr double kSineDiffusionLr = 2e-3;
constexpr int kSineGailWidth = 128;
constexpr int kSineGailDepth = 3;
constexpr int kSineEvalDraws = 32;          // D is an expectation over draws
constexpr double kSmoothTieTol = 0.02;      // criterion 7
constexpr double kSmoothGap = 0.2;
constexpr int kSmoothSamples = 16;
constexpr int kE2eSeeds = 3;                // criteria 8, 9
constexpr int64_t kE2eSteps = 300000;
constexpr double kE2eSuccess = 0.90;
constexpr double kLowDataSuccess = 0.75;
constexpr double kE2eBudgetSec = 45.0 * 60.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

std::vector<double> random_vec(Rng& rng, int n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

diffusion::DenoiserConfig random_denoiser_config(Rng& rng, int max_hidden = 32) {
  diffusion::DenoiserConfig c;
  c.state_dim = static_cast<int>(rng.integer(1, 4));
  c.action_dim = static_cast<int>(rng.integer(1, 3));
  c.label_dim = 10;
  c.zero_init_output = false;
  c.hidden_dim = static_cast<int>(rng.integer(4, max_hidden));
  c.n_hidden = static_cast<int>(rng.integer(1, 2));
  const int ts[] = {4, 10, 100, 1000};
  c.T = ts[rng.integer(0, 3)];
  if (rng.uniform() < 0.5) {
    c.time_mode = diffusion::TimeMode::kScalar;
  } else {
    c.time_embed_dim = 2 * static_cast<int>(rng.integer(1, 8));
  }
  return c;
}

// ---------------------------------------------------------- criterion 1 ---

Outcome identity_check() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int k = 0; k < kIdentityCases; ++k) {
    const diffusion::DenoiserConfig cfg = random_denoiser_config(rng);
    const disc::DrailClassifier clf = disc::make_drail(
        cfg, static_cast<int>(rng.integer(1, 4)), 1e-3, rng.next_u64());
    const auto s = random_vec(rng, cfg.state_dim);
    const auto a = random_vec(rng, cfg.action_dim);
    const uint64_t draw_seed = rng.next_u64();

    Rng r1(draw_seed);
    const double reward = disc::drail_reward(clf, s, a, r1);

    // Same draws through the batched path, then D from the branch losses.
    Rng r2(draw_seed);
    const Eigen::MatrixXd pair = disc::make_pairs(s, a);
    disc::DrawBatch draws;
    draws.per_pair = clf.sample_count;
    for (int m = 0; m < clf.sample_count; ++m) {
      const diffusion::Draw d = diffusion::sample_draw(clf.denoiser, r2);
      draws.ts.push_back(d.t);
      draws.eps.conservativeResize(cfg.state_dim + cfg.action_dim, m + 1);
      for (size_t i = 0; i < d.eps.size(); ++i) draws.eps(i, m) = d.eps[i];
    }
    const disc::BranchLosses bl = disc::drail_branch_losses(clf, pair, draws);
    const double lp = bl.real[0];
    const double lm = bl.fake[0];
    const double d_prob = std::exp(-lp) / (std::exp(-lp) + std::exp(-lm));
    const double oracle = std::log(d_prob) - std::log1p(-d_prob);
    worst = std::max(worst, std::abs(reward - oracle));
  }
  const double secs = seconds_since(t0);
  return {worst < kIdentityTol && secs < kIdentityBudgetSec,
          fmt("max |r - (log D - log(1-D))| = %.3g over %d cases, %.2f s", worst,
              kIdentityCases, secs)};
}

// ---------------------------------------------------------- criterion 2 ---

Outcome boundary_check() {
  Rng rng(202);
  int drail_bad = 0;
  int diffail_bad = 0;
  for (int k = 0; k < kBoundaryCases; ++k) {
    const diffusion::DenoiserConfig cfg = random_denoiser_config(rng);
    const disc::DrailClassifier clf = disc::make_drail(cfg, 1, 1e-3, rng.next_u64());
    const Eigen::MatrixXd pair =
        disc::make_pairs(random_vec(rng, cfg.state_dim), random_vec(rng, cfg.action_dim));
    const disc::DrawBatch draws = disc::sample_draws(clf.denoiser, 1, 1, rng);
    const disc::BranchLosses bl = disc::drail_branch_losses(clf, pair, draws);
    const double delta = disc::drail_deltas(clf, pair, draws)[0];
    const bool predicted_expert = disc::drail_prob(delta) > 0.5;
    if (predicted_expert != (bl.real[0] < bl.fake[0])) ++drail_bad;

    // DiffAIL: half the cases from real model losses, half straddling ln 2.
    double loss;
    if (k % 2 == 0) {
      disc::DiffailDiscriminator f = disc::make_diffail(cfg, 1, 1e-3, rng.next_u64());
      loss = disc::diffail_losses(f, pair, disc::sample_draws(f.denoiser, 1, 1, rng))[0];
    } else {
      loss = std::numbers::ln2 * (1.0 + 0.5 * rng.uniform(-1.0, 1.0));
    }
    const bool diff_expert = disc::diffail_prob_from_loss(loss) > 0.5;
    if (diff_expert != (loss < std::numbers::ln2) ||
        disc::diffail_is_expert(loss) != (loss < std::numbers::ln2)) {
      ++diffail_bad;
    }
  }
  return {drail_bad == 0 && diffail_bad == 0,
          fmt("DRAIL mismatches %d/%d, DiffAIL mismatches %d/%d", drail_bad,
              kBoundaryCases, diffail_bad, kBoundaryCases)};
}

// ---------------------------------------------------------- criterion 3 ---

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

std::vector<double> central_diff(std::vector<double>& params,
                                 const std::function<double()>& f) {
  std::vector<double> g(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + kGradStep;
    const double up = f();
    params[i] = keep - kGradStep;
    const double down = f();
    params[i] = keep;
    g[i] = (up - down) / (2.0 * kGradStep);
  }
  return g;
}

diffusion::DenoiserConfig grad_config(int sd, int ad) {
  diffusion::DenoiserConfig c;
  c.state_dim = sd;
  c.action_dim = ad;
  c.hidden_dim = 32;
  c.n_hidden = 2;  // three weight layers
  c.T = 100;
  c.zero_init_output = false;
  return c;
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  Rng rng(303);
  std::vector<std::pair<std::string, double>> errs;

  {  // denoiser loss
    diffusion::Denoiser model = diffusion::make_denoiser(grad_config(3, 2), 7);
    const auto s = random_vec(rng, 3);
    const auto a = random_vec(rng, 2);
    const auto label = diffusion::ConditionLabel::real(model.label_dim);
    const diffusion::Draw d = diffusion::sample_draw(model, rng);
    const auto g = diffusion::diffusion_loss_grad(model, s, a, label, d.t, d.eps);
    const auto fd = central_diff(model.net.params.values, [&] {
      return diffusion::diffusion_loss_single(model, s, a, label, d.t, d.eps);
    });
    errs.emplace_back("denoiser", rel_error(g, fd));
  }
  const Eigen::MatrixXd expert = Eigen::MatrixXd::Random(5, 6);
  const Eigen::MatrixXd agent = Eigen::MatrixXd::Random(5, 5);
  {  // DRAIL classifier loss
    disc::DrailClassifier clf = disc::make_drail(grad_config(3, 2), 2, 1e-3, 11);
    const auto de = disc::sample_draws(clf.denoiser, expert.cols(), 2, rng);
    const auto da = disc::sample_draws(clf.denoiser, agent.cols(), 2, rng);
    const auto g = disc::drail_disc_loss_with(clf, expert, agent, de, da).grad;
    const auto fd = central_diff(clf.denoiser.net.params.values, [&] {
      return disc::drail_disc_loss_with(clf, expert, agent, de, da).loss;
    });
    errs.emplace_back("drail", rel_error(g, fd));
  }
  {  // GAIL
    disc::GailDiscriminator gd = disc::make_gail(3, 2, 32, 2, 1e-3, 13);
    const auto g = disc::gail_disc_loss(gd, expert, agent).grad;
    const auto fd = central_diff(gd.net.params.values, [&] {
      return disc::gail_disc_loss(gd, expert, agent).loss;
    });
    errs.emplace_back("gail", rel_error(g, fd));
  }
  {  // DiffAIL
    disc::DiffailDiscriminator f = disc::make_diffail(grad_config(3, 2), 1, 1e-3, 17);
    const auto de = disc::sample_draws(f.denoiser, expert.cols(), 1, rng);
    const auto da = disc::sample_draws(f.denoiser, agent.cols(), 1, rng);
    const auto g = disc::diffail_disc_loss_with(f, expert, agent, de, da).grad;
    const auto fd = central_diff(f.denoiser.net.params.values, [&] {
      return disc::diffail_disc_loss_with(f, expert, agent, de, da).loss;
    });
    errs.emplace_back("diffail", rel_error(g, fd));
  }
  rl::GaussianPolicy policy = rl::make_policy(4, 2, 32, 2, -0.3, 19);
  {  // policy log-prob
    const auto s = random_vec(rng, 4);
    const auto a = random_vec(rng, 2);
    const auto g = rl::policy_logp_grad(policy, s, a);
    std::vector<double> flat = rl::policy_params(policy);
    const auto fd = central_diff(flat, [&] {
      rl::GaussianPolicy p = policy;
      rl::set_policy_params(p, flat);
      return rl::policy_logp_entropy(p, s, a).log_prob;
    });
    errs.emplace_back("log-prob", rel_error(g, fd));
  }
  {  // PPO surrogate (+ value and entropy terms)
    nn::Mlp critic = rl::make_critic(4, 32, 2, 23);
    const size_t n = 16;
    rl::RolloutBuffer buf = rl::make_buffer(4, 2, n);
    for (size_t k = 0; k < n; ++k) {
      const auto s = random_vec(rng, 4);
      const rl::ActionSample act = rl::policy_sample(policy, s, rng);
      for (int i = 0; i < 4; ++i) buf.states(i, k) = s[i];
      for (int i = 0; i < 2; ++i) buf.actions(i, k) = buf.env_actions(i, k) = act.action[i];
      // Old log-probs shifted so ratios sit off 1 but inside the clip band.
      buf.log_probs[k] = act.log_prob + 0.1 * rng.uniform(-1.0, 1.0);
    }
    buf.advantages = random_vec(rng, n);
    buf.returns = random_vec(rng, n);
    std::vector<size_t> idx(n);
    for (size_t k = 0; k < n; ++k) idx[k] = k;
    rl::PpoConfig cfg;
    const auto g = rl::ppo_loss(policy, critic, buf, idx, buf.advantages, cfg).grad;
    std::vector<double> flat = rl::policy_params(policy);
    flat.insert(flat.end(), critic.params.values.begin(), critic.params.values.end());
    const size_t np = policy.num_params();
    const auto fd = central_diff(flat, [&] {
      rl::GaussianPolicy p = policy;
      nn::Mlp c = critic;
      rl::set_policy_params(p, std::span<const double>(flat).subspan(0, np));
      std::copy(flat.begin() + np, flat.end(), c.params.values.begin());
      return rl::ppo_loss(p, c, buf, idx, buf.advantages, cfg).total;
    });
    errs.emplace_back("ppo", rel_error(g, fd));
  }
  bool ok = true;
  std::string detail;
  for (const auto& [name, e] : errs) {
    ok = ok && e < kGradRelTol;
    detail += fmt("%s %.2e  ", name.c_str(), e);
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < kGradBudgetSec;
  return {ok, detail + fmt("(%.1f s)", secs)};
}

// ---------------------------------------------------------- criterion 4 ---

Outcome gae_check() {
  Rng rng(404);
  double worst = 0.0;
  for (int ep = 0; ep < kGaeEpisodes; ++ep) {
    const int n = static_cast<int>(rng.integer(1, kGaeMaxLen));
    const double gamma = rng.uniform(0.8, 1.0);
    const double lambda = rng.uniform(0.0, 1.0);
    std::vector<double> r = random_vec(rng, n);
    std::vector<double> v = random_vec(rng, n + 1);
    std::vector<uint8_t> done(n, 0);
    if (rng.uniform() < 0.5) done[n - 1] = 1;
    const rl::Gae gae = rl::compute_gae(r, v, done, gamma, lambda);
    for (int t = 0; t < n; ++t) {
      double sum = 0.0;
      for (int l = 0; t + l < n; ++l) {
        const int k = t + l;
        const double next = done[k] ? 0.0 : v[k + 1];
        sum += std::pow(gamma * lambda, l) * (r[k] + gamma * next - v[k]);
      }
      worst = std::max(worst, std::abs(sum - gae.advantages[t]));
    }
  }
  return {worst < kGaeTol, fmt("max |A_rec - A_brute| = %.3g over %d episodes", worst,
                               kGaeEpisodes)};
}

// ---------------------------------------------------------- criterion 5 ---

Outcome uninformed_check() {
  Rng rng(505);
  const double target = 2.0 * std::numbers::ln2;
  const Eigen::MatrixXd expert = Eigen::MatrixXd::Random(3, 32);
  const Eigen::MatrixXd agent = Eigen::MatrixXd::Random(3, 32);

  // Zeroed output layers make each model exactly indifferent.
  disc::GailDiscriminator g = disc::make_gail(2, 1, 16, 2, 1e-3, 1);
  g.net.params.weight(g.net.specs.size() - 1).setZero();
  g.net.params.bias(g.net.specs.size() - 1).setZero();
  const double gail_loss = disc::gail_disc_loss(g, expert, agent).loss;

  diffusion::DenoiserConfig cfg = grad_config(2, 1);
  disc::DrailClassifier clf = disc::make_drail(cfg, 1, 1e-3, 2);
  const size_t last = clf.denoiser.net.specs.size() - 1;
  clf.denoiser.net.params.weight(last).setZero();
  clf.denoiser.net.params.bias(last).setZero();
  const double drail_loss = disc::drail_disc_loss(clf, expert, agent, rng).loss;

  // DiffAIL is indifferent at L = ln 2: zero predictor, noise scaled so that
  // mean(eps^2) = ln 2 for every draw.
  disc::DiffailDiscriminator f = disc::make_diffail(cfg, 1, 1e-3, 3);
  f.denoiser.net.params.weight(last).setZero();
  f.denoiser.net.params.bias(last).setZero();
  auto scaled = [&](Eigen::Index n) {
    disc::DrawBatch d = disc::sample_draws(f.denoiser, n, 1, rng);
    for (Eigen::Index j = 0; j < d.eps.cols(); ++j) {
      const double ms = d.eps.col(j).squaredNorm() / d.eps.rows();
      d.eps.col(j) *= std::sqrt(std::numbers::ln2 / ms);
    }
    return d;
  };
  const double diffail_loss =
      disc::diffail_disc_loss_with(f, expert, agent, scaled(32), scaled(32)).loss;

  const double worst = std::max({std::abs(gail_loss - target), std::abs(drail_loss - target),
                                 std::abs(diffail_loss - target)});

  // Freshly initialized (Glorot) small DRAIL net on random inputs.
  double max_r = 0.0;
  for (int k = 0; k < 20; ++k) {
    diffusion::DenoiserConfig c = grad_config(static_cast<int>(rng.integer(1, 6)),
                                              static_cast<int>(rng.integer(1, 3)));
    c.T = 1000;
    c.zero_init_output = true;
    const disc::Discriminator d(disc::make_drail(c, 1, 1e-3, rng.next_u64()));
    rl::RolloutBuffer buf = rl::make_buffer(c.state_dim, c.action_dim, 256);
    buf.states = Eigen::MatrixXd::Random(c.state_dim, 256);
    buf.env_actions = Eigen::MatrixXd::Random(c.action_dim, 256);
    train::label_rewards(buf, d, rng);
    for (double r : buf.rewards) max_r = std::max(max_r, std::abs(r));
  }
  return {worst < kSymmetricLossTol && max_r < kUninformedRewardMax,
          fmt("losses gail %.9f drail %.9f diffail %.9f (2 ln 2 = %.9f); "
              "max |r| uninformed = %.3f",
              gail_loss, drail_loss, diffail_loss, target, max_r)};
}

// ---------------------------------------------------------- criterion 6 ---

struct SineData {
  env::SineWorldSpec spec;
  Eigen::MatrixXd expert;
  Eigen::MatrixXd held_expert;
  Eigen::MatrixXd held_agent;
};

Eigen::MatrixXd to_pairs(const env::ExpertDataset& ds) {
  Eigen::MatrixXd out(2, static_cast<Eigen::Index>(ds.size()));
  for (size_t j = 0; j < ds.size(); ++j) {
    out(0, j) = ds.transitions[j].state[0];
    out(1, j) = ds.transitions[j].action[0];
  }
  return out;
}

// Uniform agent over the plotted region s in [0, 1], a in [-1.5, 1.5].
Eigen::MatrixXd uniform_agent(Eigen::Index n, Rng& rng) {
  Eigen::MatrixXd out(2, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out(0, j) = rng.uniform();
    out(1, j) = rng.uniform(-1.5, 1.5);
  }
  return out;
}

const SineData& sine_data() {
  static const SineData data = [] {
    SineData d;
    Rng rng(606, Stream::kExpert);
    d.expert = to_pairs(env::sine_expert_sample(d.spec, kSineExpertPairs, rng));
    d.held_expert = to_pairs(env::sine_expert_sample(d.spec, kSineHeldOut, rng));
    d.held_agent = uniform_agent(kSineHeldOut, rng);
    return d;
  }();
  return data;
}

// Copy whose diffusion losses average kSineEvalDraws draws per pair.
disc::Discriminator with_eval_draws(const disc::Discriminator& d) {
  disc::Discriminator out = d;
  std::visit(
      [](auto& impl) {
        if constexpr (!std::is_same_v<std::decay_t<decltype(impl)>, disc::GailDiscriminator>) {
          impl.sample_count = kSineEvalDraws;
        }
      },
      out.impl());
  return out;
}

double train_sine(disc::Discriminator& d, uint64_t seed) {
  const SineData& data = sine_data();
  Rng rng(seed);
  for (int step = 0; step < kSineSteps; ++step) {
    Eigen::MatrixXd e(2, kSineHalfBatch);
    for (int j = 0; j < kSineHalfBatch; ++j) {
      e.col(j) = data.expert.col(rng.integer(0, data.expert.cols() - 1));
    }
    d.update(e, uniform_agent(kSineHalfBatch, rng), rng);
  }
  Rng eval_rng(seed + 1);
  return with_eval_draws(d).accuracy(data.held_expert, data.held_agent, eval_rng);
}

TrainConfig sine_config(Method method) {
  TrainConfig c;
  c.method = method;
  c.env.kind = env::EnvKind::kSine;
  c.expert_path = "<memory>";
  c.disc.lr = method == Method::kGail ? kSineGailLr : kSineDiffusionLr;
  c.disc.gail_hidden_dim = kSineGailWidth;
  c.disc.gail_n_hidden = kSineGailDepth;
  return c;
}

disc::Discriminator& trained_sine_drail() {
  static std::optional<disc::Discriminator> d;
  if (!d) {
    d = train::make_discriminator(sine_config(Method::kDrail));
    train_sine(*d, 61);
  }
  return *d;
}

Outcome sine_classification_check() {
  bool ok = true;
  std::string detail;
  const std::pair<Method, double> runs[] = {{Method::kDrail, kSineDrailAcc},
                                            {Method::kDiffail, kSineBaselineAcc},
                                            {Method::kGail, kSineBaselineAcc}};
  for (const auto& [method, need] : runs) {
    const auto t0 = Clock::now();
    double acc;
    if (method == Method::kDrail) {
      trained_sine_drail();
      Rng eval_rng(62);
      const SineData& data = sine_data();
      acc = with_eval_draws(trained_sine_drail())
                .accuracy(data.held_expert, data.held_agent, eval_rng);
    } else {
      disc::Discriminator d = train::make_discriminator(sine_config(method));
      acc = train_sine(d, 61);
    }
    const double secs = seconds_since(t0);
    ok = ok && acc >= need && secs < kSineBudgetSec;
    detail += fmt("%s %.4f (need %.2f, %.0f s)  ", method_name(method), acc, need, secs);
  }
  return {ok, detail};
}

// ---------------------------------------------------------- criterion 7 ---

Outcome smoothness_check() {
  const disc::Discriminator& d = trained_sine_drail();
  const env::SineWorldSpec spec;
  const double dists[] = {0.0, 0.25, 0.5, 1.0};
  double means[4];
  Rng rng(707);
  for (int k = 0; k < 4; ++k) {
    std::vector<std::pair<double, double>> pts;
    for (const env::Interval& iv : spec.support) {
      for (int i = 0; i <= 200; ++i) {
        const double s = iv.lo + (iv.hi - iv.lo) * i / 200.0;
        for (double sign : {-1.0, 1.0}) {
          const double a = spec.expert_mean(s) + sign * dists[k];
          if (std::abs(a) <= 1.5) pts.emplace_back(s, a);
          if (dists[k] == 0.0) break;
        }
      }
    }
    Eigen::MatrixXd pairs(2, static_cast<Eigen::Index>(pts.size()));
    for (size_t j = 0; j < pts.size(); ++j) {
      pairs(0, j) = pts[j].first;
      pairs(1, j) = pts[j].second;
    }
    means[k] = d.probabilities(pairs, rng, kSmoothSamples).mean();
  }
  bool ok = means[0] - means[3] >= kSmoothGap;
  for (int k = 1; k < 4; ++k) ok = ok && means[k] <= means[k - 1] + kSmoothTieTol;
  return {ok, fmt("mean D at d=0/0.25/0.5/1.0: %.3f %.3f %.3f %.3f", means[0], means[1],
                  means[2], means[3])};
}

// ------------------------------------------------------- criteria 8 / 9 ---

const env::ExpertDataset& point_expert() {
  static const env::ExpertDataset ds = [] {
    env::EnvConfig cfg;
    Rng rng(808, Stream::kExpert);
    return env::gen_expert_dataset(cfg, 100, rng);
  }();
  return ds;
}

TrainConfig point_config(Method method, uint64_t seed, int64_t expert_limit) {
  TrainConfig c;
  c.method = method;
  c.env.kind = env::EnvKind::kPointReach;
  c.expert_path = "<memory>";
  c.total_env_steps = kE2eSteps;
  c.seed = seed;
  c.expert_limit = expert_limit;
  return c;
}

struct SeedRuns {
  std::vector<double> success;
  double mean = 0.0;
  double secs = 0.0;
};

SeedRuns run_seeds(Method method, int64_t expert_limit, int n_seeds) {
  SeedRuns out;
  const auto t0 = Clock::now();
  for (int s = 0; s < n_seeds; ++s) {
    const train::TrainResult r = train::train_with_dataset(
        point_config(method, 1 + s, expert_limit), point_expert());
    out.success.push_back(r.final_eval.success_rate);
    out.mean += r.final_eval.success_rate / n_seeds;
  }
  out.secs = seconds_since(t0);
  return out;
}

std::string list(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += fmt("%s%.2f", s.empty() ? "" : "/", x);
  return s;
}

double g_e2e_secs = 0.0;

Outcome end_to_end_check() {
  const SeedRuns drail_runs = run_seeds(Method::kDrail, 0, kE2eSeeds);
  const SeedRuns gail_runs = run_seeds(Method::kGail, 0, 1);
  g_e2e_secs = drail_runs.secs + gail_runs.secs;
  const bool ok = drail_runs.mean >= kE2eSuccess && g_e2e_secs <= kE2eBudgetSec;
  return {ok, fmt("DRAIL success %s mean %.3f (need %.2f); GAIL completed, success %s; "
                  "%.0f s",
                  list(drail_runs.success).c_str(), drail_runs.mean, kE2eSuccess,
                  list(gail_runs.success).c_str(), g_e2e_secs)};
}

Outcome low_data_check() {
  const SeedRuns runs = run_seeds(Method::kDrail, 10, kE2eSeeds);
  const bool ok = runs.mean >= kLowDataSuccess && runs.secs <= kE2eBudgetSec;
  return {ok, fmt("10 trajectories (%zu transitions): success %s mean %.3f (need %.2f); "
                  "%.0f s",
                  env::truncate_trajectories(point_expert(), 10).size(),
                  list(runs.success).c_str(), runs.mean, kLowDataSuccess, runs.secs)};
}

// --------------------------------------------------------- criterion 10 ---

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism_check() {
  std::vector<std::string> failures;
  const auto tmp = std::filesystem::temp_directory_path() / "drail_acceptance_c10";
  std::filesystem::remove_all(tmp);
  std::filesystem::create_directories(tmp);

  // Point-reach run from a config, then again from the manifest it wrote.
  Rng rng(1010, Stream::kExpert);
  const env::ExpertDataset ds = env::gen_expert_dataset(env::EnvConfig{}, 20, rng);
  env::dataset_save(ds, tmp / "expert.drld");
  TrainConfig cfg = point_config(Method::kDrail, 5, 0);
  cfg.expert_path = (tmp / "expert.drld").string();
  cfg.total_env_steps = 4 * cfg.ppo.rollout_length;
  cfg.eval_interval = 2 * cfg.ppo.rollout_length;
  cfg.eval_episodes = 20;
  const train::TrainResult first = train::train(cfg);
  train::write_run(cfg, first, tmp / "run1");
  const TrainConfig again = config_from_json(read_all(tmp / "run1" / "manifest.json"));
  const train::TrainResult second = train::train(again);
  train::write_run(again, second, tmp / "run2");
  if (read_all(tmp / "run1" / "metrics.csv") != read_all(tmp / "run2" / "metrics.csv")) {
    failures.push_back("metrics differ");
  }
  for (const char* f : {"policy.drlp", "discriminator.drlp", "manifest.json"}) {
    if (read_all(tmp / "run1" / f) != read_all(tmp / "run2" / f)) {
      failures.push_back(std::string(f) + " differs");
    }
  }

  // Bit-exact round trips.
  const std::string enc = env::encode_dataset(ds);
  if (env::encode_dataset(env::decode_dataset(enc)) != enc) failures.push_back("dataset");
  const env::ExpertDataset back = env::dataset_load(tmp / "expert.drld");
  for (size_t j = 0; j < ds.size(); ++j) {
    if (back.transitions[j].state != ds.transitions[j].state ||
        back.transitions[j].action != ds.transitions[j].action ||
        back.transitions[j].done != ds.transitions[j].done) {
      failures.push_back("dataset values");
      break;
    }
  }
  for (Method m : {Method::kDrail, Method::kGail, Method::kDiffail}) {
    cfg.method = m;
    const disc::Discriminator d = train::make_discriminator(cfg);
    const std::string bytes = ckpt::encode_discriminator(d);
    if (ckpt::encode_discriminator(ckpt::decode_discriminator(bytes)) != bytes) {
      failures.push_back(std::string("checkpoint ") + method_name(m));
    }
  }
  const std::string pol = ckpt::encode_policy(first.policy);
  const rl::GaussianPolicy pol_back = ckpt::decode_policy(pol);
  if (ckpt::encode_policy(pol_back) != pol ||
      pol_back.mean_net.params.values != first.policy.mean_net.params.values) {
    failures.push_back("policy checkpoint");
  }

  // Schedule endpoints and monotonicity.
  for (int T : {4, 100, 1000}) {
    const diffusion::NoiseSchedule sch = diffusion::build_cosine_schedule(T);
    bool good = sch.alpha_bar.size() == static_cast<size_t>(T + 1) &&
                sch.alpha_bar[0] == 1.0 && sch.alpha_bar[T] < 1e-3 && sch.alpha_bar[T] >= 0.0;
    for (int t = 1; good && t <= T; ++t) {
      good = sch.alpha_bar[t] < sch.alpha_bar[t - 1] && sch.beta(t) > 0.0 &&
             sch.beta(t) <= diffusion::kMaxBeta + 1e-12;
    }
    if (!good) failures.push_back("schedule T=" + std::to_string(T));
  }
  std::filesystem::remove_all(tmp);
  std::string detail = failures.empty() ? "metrics, artifacts, round trips, schedules ok"
                                        : "failed:";
  for (const auto& f : failures) detail += " " + f + ";";
  return {failures.empty(), detail};
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "reward identity", identity_check},
    {2, "decision boundaries", boundary_check},
    {3, "gradient suite", gradient_check},
    {4, "GAE oracle", gae_check},
    {5, "uninformed baseline", uninformed_check},
    {6, "sine classification", sine_classification_check},
    {7, "reward smoothness", smoothness_check},
    {8, "end-to-end imitation", end_to_end_check},
    {9, "data efficiency", low_data_check},
    {10, "determinism and formats", determinism_check},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  int failed = 0;
  for (const Criterion& c : kCriteria) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.id) == selected.end()) {
      continue;
    }
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("[%s] criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id,
                c.name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
