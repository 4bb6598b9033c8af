#ifndef DRAIL_NN_HPP_
#define DRAIL_NN_HPP_

// Dense MLP substrate: parameter storage, batched forward/backward and Adam.
// Batches are column-major matrices with one sample per column.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace drail::nn {

enum class Activation : uint8_t { kTanh = 0, kRelu = 1, kIdentity = 2 };

struct LayerSpec {
  int in_dim = 1;
  int out_dim = 1;
  Activation activation = Activation::kIdentity;

  bool operator==(const LayerSpec&) const = default;
};

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Throws "chain mismatch" when consecutive layers do not line up.
void validate_specs(std::span<const LayerSpec> specs);

// in -> hidden x n_hidden -> out, hidden activation as given, identity output.
std::vector<LayerSpec> mlp_specs(int in_dim, int hidden_dim, int n_hidden,
                                 int out_dim, Activation hidden_activation);

struct LayerView {
  std::string name;
  size_t weight_offset = 0;
  int rows = 0;  // out_dim
  int cols = 0;  // in_dim
  size_t bias_offset = 0;
  int bias_size = 0;
};

// Flat parameter vector with one (weight, bias) view per layer. Weights are
// stored row-major as [out_dim x in_dim].
struct ParamStore {
  std::vector<double> values;
  std::vector<LayerView> layout;
  uint64_t seed = 0;

  size_t size() const { return values.size(); }
  Eigen::Map<const RowMatrix> weight(size_t layer) const;
  Eigen::Map<RowMatrix> weight(size_t layer);
  Eigen::Map<const Eigen::VectorXd> bias(size_t layer) const;
  Eigen::Map<Eigen::VectorXd> bias(size_t layer);
};

// Builds the layout for `specs` with all values zero.
ParamStore zero_params(std::span<const LayerSpec> specs);

// Glorot-uniform weights, zero biases. Bit-identical for identical inputs.
ParamStore init_params(std::span<const LayerSpec> specs, uint64_t seed);

std::vector<double> forward(const ParamStore& params,
                            std::span<const LayerSpec> specs,
                            std::span<const double> input);

// Gradient of dot(upstream, forward(input)) with respect to every parameter.
std::vector<double> backward(const ParamStore& params,
                             std::span<const LayerSpec> specs,
                             std::span<const double> input,
                             std::span<const double> upstream);

// Post-activation outputs of every layer; outputs[0] is the input batch.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> outputs;
  const Eigen::MatrixXd& result() const { return outputs.back(); }
};

Eigen::MatrixXd forward_batch(const ParamStore& params,
                              std::span<const LayerSpec> specs,
                              const Eigen::MatrixXd& input,
                              ForwardCache* cache = nullptr);

// Accumulates (+=) the parameter gradient of sum_ij upstream_ij * out_ij into
// `grad`. If `input_grad` is non-null it receives d/d input.
void backward_batch(const ParamStore& params, std::span<const LayerSpec> specs,
                    const ForwardCache& cache, const Eigen::MatrixXd& upstream,
                    std::span<double> grad,
                    Eigen::MatrixXd* input_grad = nullptr);

// A network is its topology plus its parameters.
struct Mlp {
  std::vector<LayerSpec> specs;
  ParamStore params;

  int in_dim() const { return specs.front().in_dim; }
  int out_dim() const { return specs.back().out_dim; }
};

Mlp make_mlp(std::vector<LayerSpec> specs, uint64_t seed);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  int64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_size(size_t n, double lr);
};

// Value-semantics Adam step: returns updated copies, inputs untouched.
std::pair<ParamStore, AdamState> adam_step(const AdamState& state,
                                           const ParamStore& params,
                                           std::span<const double> grads);

// In-place variant used by the training loops. `lr_scale` multiplies the
// configured learning rate (linear decay).
void adam_update(AdamState& state, std::span<double> params,
                 std::span<const double> grads, double lr_scale = 1.0);

// Rescales `grads` so its L2 norm is at most `max_norm`; returns the original
// norm.
double clip_grad_norm(std::span<double> grads, double max_norm);

void require_finite(std::span<const double> values, const char* what);

}  // namespace drail::nn

#endif  // DRAIL_NN_HPP_
