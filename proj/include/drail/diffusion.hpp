#ifndef DRAIL_DIFFUSION_HPP_
#define DRAIL_DIFFUSION_HPP_

// DDPM pieces for state-action data: cosine schedule, forward noising, the
// label/time-conditioned noise predictor and its single-draw denoising loss.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "drail/nn.hpp"
#include "drail/rng.hpp"

namespace drail::diffusion {

inline constexpr double kMaxBeta = 0.999;

struct NoiseSchedule {
  int T = 0;
  double s_offset = 0.008;
  std::vector<double> alpha_bar;  // T + 1 entries, alpha_bar[0] == 1

  double beta(int t) const { return 1.0 - alpha_bar[t] / alpha_bar[t - 1]; }
};

// alpha_bar_t = f(t) / f(0) with f(t) = cos^2(((t/T + s) / (1 + s)) * pi/2).
// Steps whose beta would exceed kMaxBeta are clipped and continued as a
// cumulative product.
NoiseSchedule build_cosine_schedule(int T, double s_offset = 0.008);

// sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps, for t in [0, T].
std::vector<double> noising(std::span<const double> x0, int t,
                            std::span<const double> eps,
                            const NoiseSchedule& schedule);

enum class TimeMode : uint8_t { kSinusoidal = 0, kScalar = 1 };

// [sin(w_i t/T) ..., cos(w_i t/T) ...] with dim/2 frequencies spaced
// geometrically in [1, 1000].
std::vector<double> time_embedding(int t, int T, int dim);

enum class LabelKind : uint8_t { kReal = 0, kFake = 1 };

struct ConditionLabel {
  LabelKind kind = LabelKind::kReal;
  std::vector<double> embedding;

  static ConditionLabel real(int label_dim);  // all ones
  static ConditionLabel fake(int label_dim);  // all zeros
};

struct DenoiserConfig {
  int state_dim = 1;
  int action_dim = 1;
  int label_dim = 10;
  int time_embed_dim = 16;
  TimeMode time_mode = TimeMode::kSinusoidal;
  int hidden_dim = 128;
  int n_hidden = 3;
  int T = 1000;
  double s_offset = 0.008;
  // Zero output layer: eps_hat = 0 for every input at initialization, so a
  // fresh classifier is exactly indifferent between labels.
  bool zero_init_output = true;
};

struct Denoiser {
  int state_dim = 0;
  int action_dim = 0;
  int label_dim = 0;
  int time_embed_dim = 0;
  TimeMode time_mode = TimeMode::kSinusoidal;
  NoiseSchedule schedule;
  nn::Mlp net;

  int data_dim() const { return state_dim + action_dim; }
  int input_dim() const { return data_dim() + label_dim + time_embed_dim; }
};

Denoiser make_denoiser(const DenoiserConfig& config, uint64_t seed);

// Checks the network widths against the declared dims.
void validate_denoiser(const Denoiser& model);

std::vector<double> time_features(const Denoiser& model, int t);

// Forward pass on [x_t || label || time features]. `s` and `a` only fix the
// expected data width.
std::vector<double> predict_noise(const Denoiser& model,
                                  std::span<const double> s,
                                  std::span<const double> a,
                                  std::span<const double> x_t, int t,
                                  const ConditionLabel& label);

// Mean over coordinates of (eps_hat - eps)^2 for one (t, eps) draw.
double diffusion_loss_single(const Denoiser& model, std::span<const double> s,
                             std::span<const double> a,
                             const ConditionLabel& label, int t,
                             std::span<const double> eps);

// Gradient of diffusion_loss_single with respect to the denoiser parameters.
std::vector<double> diffusion_loss_grad(const Denoiser& model,
                                        std::span<const double> s,
                                        std::span<const double> a,
                                        const ConditionLabel& label, int t,
                                        std::span<const double> eps);

struct Draw {
  int t = 1;
  std::vector<double> eps;
};

// t uniform on {1..T}, eps ~ N(0, I).
Draw sample_draw(const Denoiser& model, Rng& rng);

// Batched evaluation: one column per (sample, draw, label) triple.
struct BatchInput {
  Eigen::MatrixXd input;  // input_dim x B
  Eigen::MatrixXd eps;    // data_dim x B
};

// x0: data_dim x B. label_values: per column, the constant every label
// coordinate takes (1 for real, 0 for fake).
BatchInput make_batch_input(const Denoiser& model, const Eigen::MatrixXd& x0,
                            std::span<const int> ts, const Eigen::MatrixXd& eps,
                            std::span<const double> label_values);

struct BatchLoss {
  Eigen::VectorXd loss;        // per column
  Eigen::MatrixXd residual;    // eps_hat - eps
  nn::ForwardCache cache;
};

BatchLoss batch_loss(const Denoiser& model, const BatchInput& batch);

// grad += d(sum_j weights_j * loss_j) / d params.
void accumulate_loss_grad(const Denoiser& model, const BatchLoss& loss,
                          const Eigen::VectorXd& weights,
                          std::span<double> grad);

}  // namespace drail::diffusion

#endif  // DRAIL_DIFFUSION_HPP_
