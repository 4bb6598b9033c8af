#ifndef DRAIL_DISCRIMINATORS_HPP_
#define DRAIL_DISCRIMINATORS_HPP_

// Reward-providing discriminators.
//
//   DRAIL:   D = sigmoid(L_fake - L_real) from one conditional denoiser; the
//            reward log D - log(1 - D) is exactly L_fake - L_real.
//   GAIL:    D = sigmoid(f(s, a)) from an MLP logit; reward = f(s, a).
//   DiffAIL: D = exp(-L) from an unconditional denoiser, which fixes the
//            decision boundary at L = ln 2.
//
// All three use expert -> target 1. Batches of (s, a) pairs are matrices with
// one column per pair, rows = [s; a].

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "drail/diffusion.hpp"
#include "drail/nn.hpp"
#include "drail/rng.hpp"

namespace drail::disc {

inline constexpr double kRewardClamp = 20.0;
inline constexpr double kMinDiffusionLoss = 1e-7;

enum class Kind : uint8_t { kGail = 0, kDiffail = 1, kDrail = 2 };

const char* kind_name(Kind kind);

struct RewardStats {
  int64_t clamped = 0;    // rewards clipped to +-kRewardClamp
  int64_t saturated = 0;  // DiffAIL losses raised to kMinDiffusionLoss
};

double sigmoid(double x);
double softplus(double x);
double clamp_reward(double r, RewardStats* stats = nullptr);

Eigen::MatrixXd make_pairs(std::span<const double> s, std::span<const double> a);

// (t, eps) draws for a batch, M per pair; column j * M + m belongs to pair j.
struct DrawBatch {
  int per_pair = 1;
  std::vector<int> ts;
  Eigen::MatrixXd eps;
};

DrawBatch sample_draws(const diffusion::Denoiser& model, Eigen::Index pairs,
                       int per_pair, Rng& rng);
DrawBatch slice_draws(const DrawBatch& draws, Eigen::Index first_pair,
                      Eigen::Index n_pairs);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// ---------------------------------------------------------------- DRAIL ---

struct DrailClassifier {
  diffusion::Denoiser denoiser;
  nn::AdamState optimizer;
  int sample_count = 1;
};

DrailClassifier make_drail(const diffusion::DenoiserConfig& config,
                           int sample_count, double lr, uint64_t seed);

struct BranchLosses {
  Eigen::VectorXd real;  // L(s, a, c+)
  Eigen::VectorXd fake;  // L(s, a, c-)
};

// Both branches evaluated with the same draws.
BranchLosses drail_branch_losses(const DrailClassifier& clf,
                                 const Eigen::MatrixXd& pairs,
                                 const DrawBatch& draws);

struct LogitResult {
  double delta = 0.0;
  std::vector<diffusion::Draw> draws;
};

// delta = L_fake - L_real under a shared draw (averaged over M draws).
LogitResult drail_logit(const DrailClassifier& clf, std::span<const double> s,
                        std::span<const double> a, Rng& rng);
double drail_logit_with(const DrailClassifier& clf, std::span<const double> s,
                        std::span<const double> a,
                        std::span<const diffusion::Draw> draws);

double drail_prob(double delta);

// log D - log(1 - D), computed as the branch-loss difference. Unclamped.
double drail_reward(const DrailClassifier& clf, std::span<const double> s,
                    std::span<const double> a, Rng& rng);

Eigen::VectorXd drail_deltas(const DrailClassifier& clf,
                             const Eigen::MatrixXd& pairs,
                             const DrawBatch& draws);

// mean softplus(-delta) over expert + mean softplus(delta) over agent.
double drail_loss_from_deltas(const Eigen::VectorXd& expert_deltas,
                              const Eigen::VectorXd& agent_deltas);

LossAndGrad drail_disc_loss_with(const DrailClassifier& clf,
                                 const Eigen::MatrixXd& expert,
                                 const Eigen::MatrixXd& agent,
                                 const DrawBatch& expert_draws,
                                 const DrawBatch& agent_draws);
LossAndGrad drail_disc_loss(const DrailClassifier& clf,
                            const Eigen::MatrixXd& expert,
                            const Eigen::MatrixXd& agent, Rng& rng);

DrailClassifier drail_update(const DrailClassifier& clf,
                             const Eigen::MatrixXd& expert,
                             const Eigen::MatrixXd& agent, Rng& rng);

// ----------------------------------------------------------------- GAIL ---

struct GailDiscriminator {
  int state_dim = 0;
  int action_dim = 0;
  nn::Mlp net;
  nn::AdamState optimizer;
};

GailDiscriminator make_gail(int state_dim, int action_dim, int hidden_dim,
                            int n_hidden, double lr, uint64_t seed);

Eigen::VectorXd gail_logits(const GailDiscriminator& disc,
                            const Eigen::MatrixXd& pairs);
double gail_prob(const GailDiscriminator& disc, std::span<const double> s,
                 std::span<const double> a);
double gail_reward(const GailDiscriminator& disc, std::span<const double> s,
                   std::span<const double> a);
double gail_loss_from_logits(const Eigen::VectorXd& expert_logits,
                             const Eigen::VectorXd& agent_logits);
LossAndGrad gail_disc_loss(const GailDiscriminator& disc,
                           const Eigen::MatrixXd& expert,
                           const Eigen::MatrixXd& agent);
GailDiscriminator gail_update(const GailDiscriminator& disc,
                              const Eigen::MatrixXd& expert,
                              const Eigen::MatrixXd& agent);

// -------------------------------------------------------------- DiffAIL ---

struct DiffailDiscriminator {
  diffusion::Denoiser denoiser;  // label_dim == 0
  nn::AdamState optimizer;
  int sample_count = 1;
};

DiffailDiscriminator make_diffail(diffusion::DenoiserConfig config,
                                  int sample_count, double lr, uint64_t seed);

// Single-draw (or M-averaged) unconditional diffusion loss per pair.
Eigen::VectorXd diffail_losses(const DiffailDiscriminator& disc,
                               const Eigen::MatrixXd& pairs,
                               const DrawBatch& draws);

struct DiffailProb {
  double prob = 0.0;
  double loss = 0.0;
};

DiffailProb diffail_prob(const DiffailDiscriminator& disc,
                         std::span<const double> s, std::span<const double> a,
                         Rng& rng);
double diffail_prob_from_loss(double loss, RewardStats* stats = nullptr);
// Expert iff L < ln 2.
bool diffail_is_expert(double loss);
// -L - log(1 - exp(-L)), clamped to [-kRewardClamp, kRewardClamp].
double diffail_reward_from_loss(double loss, RewardStats* stats = nullptr);
double diffail_reward(const DiffailDiscriminator& disc,
                      std::span<const double> s, std::span<const double> a,
                      Rng& rng, RewardStats* stats = nullptr);
// Expert: -log D = L; agent: -log(1 - exp(-L)); means over each side.
double diffail_loss_from_losses(const Eigen::VectorXd& expert_losses,
                                const Eigen::VectorXd& agent_losses);
LossAndGrad diffail_disc_loss_with(const DiffailDiscriminator& disc,
                                   const Eigen::MatrixXd& expert,
                                   const Eigen::MatrixXd& agent,
                                   const DrawBatch& expert_draws,
                                   const DrawBatch& agent_draws);
LossAndGrad diffail_disc_loss(const DiffailDiscriminator& disc,
                              const Eigen::MatrixXd& expert,
                              const Eigen::MatrixXd& agent, Rng& rng);
DiffailDiscriminator diffail_update(const DiffailDiscriminator& disc,
                                    const Eigen::MatrixXd& expert,
                                    const Eigen::MatrixXd& agent, Rng& rng);

// ------------------------------------------------------------ any kind ---

// Type-erased discriminator used by the training loop and reward maps.
class Discriminator {
 public:
  using Variant =
      std::variant<GailDiscriminator, DiffailDiscriminator, DrailClassifier>;

  explicit Discriminator(Variant impl) : impl_(std::move(impl)) {}

  Kind kind() const { return static_cast<Kind>(impl_.index()); }
  int state_dim() const;
  int action_dim() const;
  const Variant& impl() const { return impl_; }
  Variant& impl() { return impl_; }

  // Raw rewards (DiffAIL already floored), one per column. Draws are taken
  // sequentially from `rng`, then evaluated in up to `threads` chunks, so the
  // result does not depend on the thread count.
  Eigen::VectorXd rewards(const Eigen::MatrixXd& pairs, Rng& rng,
                          RewardStats* stats = nullptr, int threads = 1) const;

  // Probability D per column, averaged over `samples` independent draws.
  Eigen::VectorXd probabilities(const Eigen::MatrixXd& pairs, Rng& rng,
                                int samples) const;

  // Loss on the batch without updating.
  double loss(const Eigen::MatrixXd& expert, const Eigen::MatrixXd& agent,
              Rng& rng) const;

  // One optimizer step; returns the pre-step loss.
  double update(const Eigen::MatrixXd& expert, const Eigen::MatrixXd& agent,
                Rng& rng);

  // Fraction of pairs classified correctly (expert iff D > 0.5).
  double accuracy(const Eigen::MatrixXd& expert, const Eigen::MatrixXd& agent,
                  Rng& rng) const;

 private:
  Variant impl_;
};

}  // namespace drail::disc

#endif  // DRAIL_DISCRIMINATORS_HPP_
