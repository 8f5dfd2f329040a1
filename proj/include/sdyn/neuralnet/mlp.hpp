#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "sdyn/datagen/rng.hpp"

namespace sdyn {

// Dense network: Tanh on hidden layers, identity on the output layer.
//
// Parameters live in one flat vector. Layer l occupies
// [offset(l), offset(l) + out * in) for its column-major (out x in) weight,
// followed by `out` biases.
class Mlp {
 public:
  Mlp() = default;
  // Zero-initialized. Throws Error(InvalidArgument) for fewer than two dims
  // or a zero width.
  explicit Mlp(std::vector<std::size_t> layer_dims);

  // Xavier-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static Mlp xavier(std::vector<std::size_t> layer_dims, Rng& rng);

  const std::vector<std::size_t>& layer_dims() const { return dims_; }
  std::size_t layer_count() const { return dims_.empty() ? 0 : dims_.size() - 1; }
  std::size_t input_size() const { return dims_.front(); }
  std::size_t output_size() const { return dims_.back(); }
  std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  std::size_t offset(std::size_t layer) const { return offsets_[layer]; }
  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t layer) const;
  Eigen::Map<Eigen::MatrixXd> weight(std::size_t layer);
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;
  Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  Eigen::VectorXd params_;
};

std::size_t mlp_parameter_count(const std::vector<std::size_t>& layer_dims);

// Activations of one forward pass, one column per sample. activations[0] is
// the input and activations.back() the output; hidden entries are post-Tanh
// values, from which backward recovers the derivative 1 - a^2.
struct MlpTape {
  std::vector<Eigen::MatrixXd> activations;
  const Eigen::MatrixXd& output() const { return activations.back(); }
};

// Throws Error(ShapeMismatch) when the input height differs from the input
// width.
MlpTape forward_batch(const Mlp& mlp, const Eigen::MatrixXd& inputs);

// Adds parameter gradients of sum_k <output_grad_k, output_k> into
// `param_grads` (sized to parameter_count) and returns the input gradients,
// or an empty matrix when `want_input_grad` is false.
Eigen::MatrixXd backward_batch(const Mlp& mlp, const MlpTape& tape,
                               const Eigen::MatrixXd& output_grad, Eigen::VectorXd& param_grads,
                               bool want_input_grad = true);

struct MlpForward {
  Eigen::VectorXd output;
  MlpTape tape;
};
MlpForward forward(const Mlp& mlp, const Eigen::VectorXd& input);

struct MlpGradients {
  Eigen::VectorXd params;
  Eigen::VectorXd input;
};
MlpGradients backward(const Mlp& mlp, const MlpTape& tape, const Eigen::VectorXd& output_grad);

// Single-precision copy for inference only.
class MlpF32 {
 public:
  MlpF32() = default;
  explicit MlpF32(const Mlp& mlp);

  std::size_t input_size() const { return weights_.front().cols(); }
  std::size_t output_size() const { return weights_.back().rows(); }
  // Evaluates into `out`; `scratch` holds the two ping-pong hidden buffers.
  void forward(const Eigen::MatrixXf& inputs, Eigen::MatrixXf& out,
               Eigen::MatrixXf scratch[2]) const;

 private:
  std::vector<Eigen::MatrixXf> weights_;
  std::vector<Eigen::VectorXf> biases_;
};

// Tanh evaluated through the vectorized exponential; absolute error is a few
// ulps, and a short series takes over near zero.
void tanh_inplace(Eigen::MatrixXd& m);
void tanh_inplace(Eigen::MatrixXf& m);

}  // namespace sdyn
