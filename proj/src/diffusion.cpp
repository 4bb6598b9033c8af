#include "drail/diffusion.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "drail/error.hpp"

namespace drail::diffusion {

NoiseSchedule build_cosine_schedule(int T, double s_offset) {
  if (T < 1) throw_invalid("schedule needs T >= 1, got " + std::to_string(T));
  if (!(s_offset > 0.0 && s_offset < 1.0)) {
    throw_invalid("cosine offset must lie in (0, 1)");
  }
  auto f = [&](int t) {
    const double u = (static_cast<double>(t) / T + s_offset) / (1.0 + s_offset);
    const double c = std::cos(u * std::numbers::pi / 2.0);
    return c * c;
  };
  NoiseSchedule schedule;
  schedule.T = T;
  schedule.s_offset = s_offset;
  schedule.alpha_bar.resize(T + 1);
  const double f0 = f(0);
  schedule.alpha_bar[0] = 1.0;
  for (int t = 1; t <= T; ++t) {
    const double prev = schedule.alpha_bar[t - 1];
    const double raw = f(t) / f0;
    if (1.0 - raw / prev > kMaxBeta) {
      schedule.alpha_bar[t] = prev * (1.0 - kMaxBeta);
    } else {
      schedule.alpha_bar[t] = raw;
    }
  }
  return schedule;
}

std::vector<double> noising(std::span<const double> x0, int t,
                            std::span<const double> eps,
                            const NoiseSchedule& schedule) {
  if (t < 0 || t > schedule.T) {
    throw_invalid("diffusion step " + std::to_string(t) + " outside [0, " +
                  std::to_string(schedule.T) + "]");
  }
  if (x0.size() != eps.size()) throw_invalid("noise length differs from data");
  const double a = std::sqrt(schedule.alpha_bar[t]);
  const double b = std::sqrt(1.0 - schedule.alpha_bar[t]);
  std::vector<double> out(x0.size());
  for (size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + b * eps[i];
  return out;
}

namespace {

void fill_time_embedding(int t, int T, int dim, double* out) {
  const int half = dim / 2;
  const double u = static_cast<double>(t) / T;
  for (int i = 0; i < half; ++i) {
    const double w =
        half > 1 ? std::exp(std::log(1000.0) * i / (half - 1)) : 1.0;
    out[i] = std::sin(w * u);
    out[half + i] = std::cos(w * u);
  }
}

void fill_time_features(const Denoiser& model, int t, double* out) {
  if (model.time_mode == TimeMode::kScalar) {
    out[0] = static_cast<double>(t) / model.schedule.T;
  } else {
    fill_time_embedding(t, model.schedule.T, model.time_embed_dim, out);
  }
}

}  // namespace

std::vector<double> time_embedding(int t, int T, int dim) {
  if (dim < 2 || dim % 2 != 0) {
    throw_invalid("time embedding dim must be even and positive, got " +
                  std::to_string(dim));
  }
  if (T < 1) throw_invalid("time embedding needs T >= 1");
  std::vector<double> out(dim);
  fill_time_embedding(t, T, dim, out.data());
  return out;
}

ConditionLabel ConditionLabel::real(int label_dim) {
  return {LabelKind::kReal, std::vector<double>(label_dim, 1.0)};
}
ConditionLabel ConditionLabel::fake(int label_dim) {
  return {LabelKind::kFake, std::vector<double>(label_dim, 0.0)};
}

Denoiser make_denoiser(const DenoiserConfig& config, uint64_t seed) {
  if (config.state_dim < 1 || config.action_dim < 1 || config.label_dim < 0) {
    throw_invalid("denoiser dims must be positive");
  }
  Denoiser model;
  model.state_dim = config.state_dim;
  model.action_dim = config.action_dim;
  model.label_dim = config.label_dim;
  model.time_mode = config.time_mode;
  if (config.time_mode == TimeMode::kScalar) {
    model.time_embed_dim = 1;
  } else {
    if (config.time_embed_dim < 2 || config.time_embed_dim % 2 != 0) {
      throw_invalid("time embedding dim must be even and positive");
    }
    model.time_embed_dim = config.time_embed_dim;
  }
  model.schedule = build_cosine_schedule(config.T, config.s_offset);
  model.net = nn::make_mlp(
      nn::mlp_specs(model.input_dim(), config.hidden_dim, config.n_hidden,
                    model.data_dim(), nn::Activation::kRelu),
      seed);
  if (config.zero_init_output) {
    const size_t last = model.net.specs.size() - 1;
    model.net.params.weight(last).setZero();
  }
  return model;
}

void validate_denoiser(const Denoiser& model) {
  nn::validate_specs(model.net.specs);
  if (model.net.in_dim() != model.input_dim() ||
      model.net.out_dim() != model.data_dim()) {
    throw_invalid("denoiser network widths do not match its declared dims");
  }
}

std::vector<double> time_features(const Denoiser& model, int t) {
  std::vector<double> out(model.time_embed_dim);
  fill_time_features(model, t, out.data());
  return out;
}

namespace {

void check_pair(const Denoiser& model, std::span<const double> s,
                std::span<const double> a) {
  if (static_cast<int>(s.size()) != model.state_dim ||
      static_cast<int>(a.size()) != model.action_dim) {
    throw_invalid("state/action dims (" + std::to_string(s.size()) + ", " +
                  std::to_string(a.size()) + ") do not match denoiser (" +
                  std::to_string(model.state_dim) + ", " +
                  std::to_string(model.action_dim) + ")");
  }
}

void check_step(const Denoiser& model, int t) {
  if (t < 1 || t > model.schedule.T) {
    throw_invalid("diffusion step " + std::to_string(t) + " outside [1, " +
                  std::to_string(model.schedule.T) + "]");
  }
}

std::vector<double> assemble_input(const Denoiser& model,
                                   std::span<const double> x_t, int t,
                                   const ConditionLabel& label) {
  if (static_cast<int>(x_t.size()) != model.data_dim()) {
    throw_invalid("noised input has length " + std::to_string(x_t.size()) +
                  ", expected " + std::to_string(model.data_dim()));
  }
  if (static_cast<int>(label.embedding.size()) != model.label_dim) {
    throw_invalid("label embedding has length " +
                  std::to_string(label.embedding.size()) + ", expected " +
                  std::to_string(model.label_dim));
  }
  std::vector<double> input(x_t.begin(), x_t.end());
  input.insert(input.end(), label.embedding.begin(), label.embedding.end());
  const std::vector<double> tf = time_features(model, t);
  input.insert(input.end(), tf.begin(), tf.end());
  return input;
}

std::vector<double> concat(std::span<const double> s, std::span<const double> a) {
  std::vector<double> x(s.begin(), s.end());
  x.insert(x.end(), a.begin(), a.end());
  return x;
}

}  // namespace

std::vector<double> predict_noise(const Denoiser& model,
                                  std::span<const double> s,
                                  std::span<const double> a,
                                  std::span<const double> x_t, int t,
                                  const ConditionLabel& label) {
  check_pair(model, s, a);
  return nn::forward(model.net.params, model.net.specs,
                     assemble_input(model, x_t, t, label));
}

double diffusion_loss_single(const Denoiser& model, std::span<const double> s,
                             std::span<const double> a,
                             const ConditionLabel& label, int t,
                             std::span<const double> eps) {
  check_pair(model, s, a);
  check_step(model, t);
  if (static_cast<int>(eps.size()) != model.data_dim()) {
    throw_invalid("noise length does not match state+action dim");
  }
  nn::require_finite(s, "state");
  nn::require_finite(a, "action");
  nn::require_finite(eps, "noise");
  const std::vector<double> x_t = noising(concat(s, a), t, eps, model.schedule);
  const std::vector<double> pred = predict_noise(model, s, a, x_t, t, label);
  double sum = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double r = pred[i] - eps[i];
    sum += r * r;
  }
  return sum / static_cast<double>(pred.size());
}

std::vector<double> diffusion_loss_grad(const Denoiser& model,
                                        std::span<const double> s,
                                        std::span<const double> a,
                                        const ConditionLabel& label, int t,
                                        std::span<const double> eps) {
  check_pair(model, s, a);
  check_step(model, t);
  const std::vector<double> x_t = noising(concat(s, a), t, eps, model.schedule);
  const std::vector<double> input = assemble_input(model, x_t, t, label);
  const std::vector<double> pred =
      nn::forward(model.net.params, model.net.specs, input);
  std::vector<double> upstream(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    upstream[i] = 2.0 * (pred[i] - eps[i]) / static_cast<double>(pred.size());
  }
  return nn::backward(model.net.params, model.net.specs, input, upstream);
}

Draw sample_draw(const Denoiser& model, Rng& rng) {
  Draw draw;
  draw.t = static_cast<int>(rng.integer(1, model.schedule.T));
  draw.eps.resize(model.data_dim());
  for (double& e : draw.eps) e = rng.normal();
  return draw;
}

BatchInput make_batch_input(const Denoiser& model, const Eigen::MatrixXd& x0,
                            std::span<const int> ts, const Eigen::MatrixXd& eps,
                            std::span<const double> label_values) {
  const Eigen::Index n = x0.cols();
  if (x0.rows() != model.data_dim() || eps.rows() != model.data_dim() ||
      eps.cols() != n || static_cast<Eigen::Index>(ts.size()) != n ||
      static_cast<Eigen::Index>(label_values.size()) != n) {
    throw_invalid("diffusion batch pieces have inconsistent shapes");
  }
  BatchInput batch;
  batch.eps = eps;
  batch.input.resize(model.input_dim(), n);
  const int d = model.data_dim();
  for (Eigen::Index j = 0; j < n; ++j) {
    const int t = ts[j];
    check_step(model, t);
    const double a = std::sqrt(model.schedule.alpha_bar[t]);
    const double b = std::sqrt(1.0 - model.schedule.alpha_bar[t]);
    auto col = batch.input.col(j);
    col.head(d) = a * x0.col(j) + b * eps.col(j);
    col.segment(d, model.label_dim).setConstant(label_values[j]);
    fill_time_features(model, t, col.data() + d + model.label_dim);
  }
  return batch;
}

BatchLoss batch_loss(const Denoiser& model, const BatchInput& batch) {
  BatchLoss out;
  const Eigen::MatrixXd pred = nn::forward_batch(
      model.net.params, model.net.specs, batch.input, &out.cache);
  if (!pred.allFinite()) throw_numeric("denoiser produced a non-finite output");
  out.residual = pred - batch.eps;
  out.loss = out.residual.colwise().squaredNorm().transpose() /
             static_cast<double>(model.data_dim());
  return out;
}

void accumulate_loss_grad(const Denoiser& model, const BatchLoss& loss,
                          const Eigen::VectorXd& weights,
                          std::span<double> grad) {
  if (weights.size() != loss.residual.cols()) {
    throw_invalid("loss weights do not match batch width");
  }
  const Eigen::MatrixXd upstream =
      loss.residual * (2.0 / model.data_dim() * weights).asDiagonal();
  nn::backward_batch(model.net.params, model.net.specs, loss.cache, upstream,
                     grad);
}

}  // namespace drail::diffusion
