#include "drail/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "drail/error.hpp"
#include "drail/rng.hpp"

namespace drail::nn {

void validate_specs(std::span<const LayerSpec> specs) {
  if (specs.empty()) throw_invalid("network needs at least one layer");
  for (size_t k = 0; k < specs.size(); ++k) {
    if (specs[k].in_dim < 1 || specs[k].out_dim < 1) {
      throw_invalid("layer " + std::to_string(k) + " has a non-positive dimension");
    }
    if (k + 1 < specs.size() && specs[k].out_dim != specs[k + 1].in_dim) {
      throw_invalid("chain mismatch: layer " + std::to_string(k) + " out_dim " +
                    std::to_string(specs[k].out_dim) + " != layer " +
                    std::to_string(k + 1) + " in_dim " +
                    std::to_string(specs[k + 1].in_dim));
    }
  }
}

std::vector<LayerSpec> mlp_specs(int in_dim, int hidden_dim, int n_hidden,
                                 int out_dim, Activation hidden_activation) {
  std::vector<LayerSpec> specs;
  int prev = in_dim;
  for (int k = 0; k < n_hidden; ++k) {
    specs.push_back({prev, hidden_dim, hidden_activation});
    prev = hidden_dim;
  }
  specs.push_back({prev, out_dim, Activation::kIdentity});
  return specs;
}

Eigen::Map<const RowMatrix> ParamStore::weight(size_t layer) const {
  const LayerView& v = layout[layer];
  return {values.data() + v.weight_offset, v.rows, v.cols};
}
Eigen::Map<RowMatrix> ParamStore::weight(size_t layer) {
  const LayerView& v = layout[layer];
  return {values.data() + v.weight_offset, v.rows, v.cols};
}
Eigen::Map<const Eigen::VectorXd> ParamStore::bias(size_t layer) const {
  const LayerView& v = layout[layer];
  return {values.data() + v.bias_offset, v.bias_size};
}
Eigen::Map<Eigen::VectorXd> ParamStore::bias(size_t layer) {
  const LayerView& v = layout[layer];
  return {values.data() + v.bias_offset, v.bias_size};
}

ParamStore zero_params(std::span<const LayerSpec> specs) {
  validate_specs(specs);
  ParamStore store;
  size_t offset = 0;
  for (size_t k = 0; k < specs.size(); ++k) {
    LayerView view;
    view.name = "layer" + std::to_string(k);
    view.rows = specs[k].out_dim;
    view.cols = specs[k].in_dim;
    view.weight_offset = offset;
    offset += static_cast<size_t>(view.rows) * view.cols;
    view.bias_offset = offset;
    view.bias_size = view.rows;
    offset += view.rows;
    store.layout.push_back(std::move(view));
  }
  store.values.assign(offset, 0.0);
  return store;
}

ParamStore init_params(std::span<const LayerSpec> specs, uint64_t seed) {
  ParamStore store = zero_params(specs);
  store.seed = seed;
  Rng rng(seed);
  for (size_t k = 0; k < specs.size(); ++k) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(specs[k].in_dim + specs[k].out_dim));
    const LayerView& view = store.layout[k];
    const size_t n = static_cast<size_t>(view.rows) * view.cols;
    for (size_t i = 0; i < n; ++i) {
      store.values[view.weight_offset + i] = rng.uniform(-limit, limit);
    }
  }
  return store;
}

Mlp make_mlp(std::vector<LayerSpec> specs, uint64_t seed) {
  Mlp net;
  net.params = init_params(specs, seed);
  net.specs = std::move(specs);
  return net;
}

void require_finite(std::span<const double> values, const char* what) {
  for (size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw_numeric(std::string(what) + ": non-finite value at index " +
                    std::to_string(i));
    }
  }
}

namespace {

void check_store(const ParamStore& params, std::span<const LayerSpec> specs) {
  validate_specs(specs);
  if (params.layout.size() != specs.size()) {
    throw_invalid("parameter layout has " + std::to_string(params.layout.size()) +
                  " layers, specs have " + std::to_string(specs.size()));
  }
  for (size_t k = 0; k < specs.size(); ++k) {
    if (params.layout[k].rows != specs[k].out_dim ||
        params.layout[k].cols != specs[k].in_dim) {
      throw_invalid("parameter layout does not match layer " + std::to_string(k));
    }
  }
}

void apply_activation(Eigen::MatrixXd& z, Activation act) {
  switch (act) {
    case Activation::kTanh:
      z = z.array().tanh().matrix();
      break;
    case Activation::kRelu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::kIdentity:
      break;
  }
}

// Multiplies delta in place by the activation derivative expressed through
// the post-activation output y.
void apply_activation_grad(Eigen::MatrixXd& delta, const Eigen::MatrixXd& y,
                           Activation act) {
  switch (act) {
    case Activation::kTanh:
      delta.array() *= 1.0 - y.array().square();
      break;
    case Activation::kRelu:
      delta.array() *= (y.array() > 0.0).cast<double>();
      break;
    case Activation::kIdentity:
      break;
  }
}

}  // namespace

Eigen::MatrixXd forward_batch(const ParamStore& params,
                              std::span<const LayerSpec> specs,
                              const Eigen::MatrixXd& input,
                              ForwardCache* cache) {
  check_store(params, specs);
  if (input.rows() != specs.front().in_dim) {
    throw_invalid("input has " + std::to_string(input.rows()) +
                  " rows, network expects " +
                  std::to_string(specs.front().in_dim));
  }
  if (!input.allFinite()) throw_numeric("forward: non-finite input");
  if (cache) {
    cache->outputs.resize(specs.size() + 1);
    cache->outputs[0] = input;
  }
  Eigen::MatrixXd h = input;
  for (size_t k = 0; k < specs.size(); ++k) {
    Eigen::MatrixXd z = params.weight(k) * h;
    z.colwise() += params.bias(k);
    apply_activation(z, specs[k].activation);
    h = std::move(z);
    if (cache) cache->outputs[k + 1] = h;
  }
  return h;
}

void backward_batch(const ParamStore& params, std::span<const LayerSpec> specs,
                    const ForwardCache& cache, const Eigen::MatrixXd& upstream,
                    std::span<double> grad, Eigen::MatrixXd* input_grad) {
  check_store(params, specs);
  if (grad.size() != params.size()) {
    throw_invalid("gradient buffer has wrong length");
  }
  if (cache.outputs.size() != specs.size() + 1) {
    throw_invalid("forward cache does not match network depth");
  }
  if (upstream.rows() != specs.back().out_dim ||
      upstream.cols() != cache.result().cols()) {
    throw_invalid("upstream shape does not match network output");
  }
  Eigen::MatrixXd delta = upstream;
  for (size_t k = specs.size(); k-- > 0;) {
    apply_activation_grad(delta, cache.outputs[k + 1], specs[k].activation);
    const LayerView& view = params.layout[k];
    Eigen::Map<RowMatrix> dw(grad.data() + view.weight_offset, view.rows,
                             view.cols);
    Eigen::Map<Eigen::VectorXd> db(grad.data() + view.bias_offset,
                                   view.bias_size);
    dw.noalias() += delta * cache.outputs[k].transpose();
    db += delta.rowwise().sum();
    if (k > 0 || input_grad) {
      Eigen::MatrixXd next = params.weight(k).transpose() * delta;
      delta = std::move(next);
    }
  }
  if (input_grad) *input_grad = std::move(delta);
}

std::vector<double> forward(const ParamStore& params,
                            std::span<const LayerSpec> specs,
                            std::span<const double> input) {
  require_finite(input, "forward input");
  check_store(params, specs);
  if (static_cast<int>(input.size()) != specs.front().in_dim) {
    throw_invalid("input length " + std::to_string(input.size()) +
                  " != network in_dim " + std::to_string(specs.front().in_dim));
  }
  const Eigen::MatrixXd x =
      Eigen::Map<const Eigen::VectorXd>(input.data(), input.size());
  const Eigen::MatrixXd y = forward_batch(params, specs, x);
  return {y.data(), y.data() + y.size()};
}

std::vector<double> backward(const ParamStore& params,
                             std::span<const LayerSpec> specs,
                             std::span<const double> input,
                             std::span<const double> upstream) {
  check_store(params, specs);
  if (static_cast<int>(input.size()) != specs.front().in_dim) {
    throw_invalid("input length does not match network in_dim");
  }
  if (static_cast<int>(upstream.size()) != specs.back().out_dim) {
    throw_invalid("upstream length " + std::to_string(upstream.size()) +
                  " != network out_dim " + std::to_string(specs.back().out_dim));
  }
  ForwardCache cache;
  const Eigen::MatrixXd x =
      Eigen::Map<const Eigen::VectorXd>(input.data(), input.size());
  forward_batch(params, specs, x, &cache);
  const Eigen::MatrixXd u =
      Eigen::Map<const Eigen::VectorXd>(upstream.data(), upstream.size());
  std::vector<double> grad(params.size(), 0.0);
  backward_batch(params, specs, cache, u, grad);
  return grad;
}

AdamState AdamState::for_size(size_t n, double lr) {
  AdamState st;
  st.m.assign(n, 0.0);
  st.v.assign(n, 0.0);
  st.lr = lr;
  return st;
}

void adam_update(AdamState& state, std::span<double> params,
                 std::span<const double> grads, double lr_scale) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw_invalid("adam: parameter, gradient and moment lengths differ");
  }
  for (size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw_numeric("adam: non-finite gradient at index " + std::to_string(i));
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const double lr = state.lr * lr_scale;
  for (size_t i = 0; i < grads.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

std::pair<ParamStore, AdamState> adam_step(const AdamState& state,
                                           const ParamStore& params,
                                           std::span<const double> grads) {
  ParamStore next_params = params;
  AdamState next_state = state;
  adam_update(next_state, next_params.values, grads);
  return {std::move(next_params), std::move(next_state)};
}

double clip_grad_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (double& g : grads) g *= scale;
  }
  return norm;
}

}  // namespace drail::nn
