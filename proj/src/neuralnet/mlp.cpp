#include "sdyn/neuralnet/mlp.hpp"

#include <cmath>

#include "sdyn/error.hpp"

namespace sdyn {

namespace {

template <typename Matrix>
void tanh_impl(Matrix& m) {
  using S = typename Matrix::Scalar;
  auto a = m.array();
  const auto e = (S(-2) * a.abs()).exp().eval();
  const auto big = ((S(1) - e) / (S(1) + e)) * a.sign();
  const auto a2 = (a * a).eval();
  const auto small = a * (S(1) - a2 * (S(1) / S(3) - a2 * S(2.0 / 15.0)));
  a = (a.abs() < S(1e-3)).select(small, big).eval();
}

void check_dims(const std::vector<std::size_t>& dims) {
  if (dims.size() < 2) throw Error(Errc::InvalidArgument, "an MLP needs at least two layer widths");
  for (std::size_t d : dims) {
    if (d == 0) throw Error(Errc::InvalidArgument, "MLP layer widths must be positive");
  }
}

}  // namespace

void tanh_inplace(Eigen::MatrixXd& m) { tanh_impl(m); }
void tanh_inplace(Eigen::MatrixXf& m) { m = m.array().tanh().matrix(); }

std::size_t mlp_parameter_count(const std::vector<std::size_t>& dims) {
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) count += dims[l + 1] * (dims[l] + 1);
  return count;
}

Mlp::Mlp(std::vector<std::size_t> layer_dims) : dims_(std::move(layer_dims)) {
  check_dims(dims_);
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    offsets_.push_back(off);
    off += dims_[l + 1] * (dims_[l] + 1);
  }
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(off));
}

Mlp Mlp::xavier(std::vector<std::size_t> layer_dims, Rng& rng) {
  Mlp mlp(std::move(layer_dims));
  for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
    auto w = mlp.weight(l);
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-bound, bound);
    }
  }
  return mlp;
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(std::size_t l) const {
  return {params_.data() + offsets_[l], static_cast<Eigen::Index>(dims_[l + 1]),
          static_cast<Eigen::Index>(dims_[l])};
}
Eigen::Map<Eigen::MatrixXd> Mlp::weight(std::size_t l) {
  return {params_.data() + offsets_[l], static_cast<Eigen::Index>(dims_[l + 1]),
          static_cast<Eigen::Index>(dims_[l])};
}
Eigen::Map<const Eigen::VectorXd> Mlp::bias(std::size_t l) const {
  return {params_.data() + offsets_[l] + dims_[l + 1] * dims_[l],
          static_cast<Eigen::Index>(dims_[l + 1])};
}
Eigen::Map<Eigen::VectorXd> Mlp::bias(std::size_t l) {
  return {params_.data() + offsets_[l] + dims_[l + 1] * dims_[l],
          static_cast<Eigen::Index>(dims_[l + 1])};
}

MlpTape forward_batch(const Mlp& mlp, const Eigen::MatrixXd& inputs) {
  if (static_cast<std::size_t>(inputs.rows()) != mlp.input_size()) {
    throw Error(Errc::ShapeMismatch, "MLP input has " + std::to_string(inputs.rows()) +
                                         " rows, expected " + std::to_string(mlp.input_size()));
  }
  MlpTape tape;
  tape.activations.reserve(mlp.layer_count() + 1);
  tape.activations.push_back(inputs);
  for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
    Eigen::MatrixXd z = mlp.weight(l) * tape.activations.back();
    z.colwise() += mlp.bias(l);
    if (l + 1 < mlp.layer_count()) tanh_inplace(z);
    tape.activations.push_back(std::move(z));
  }
  return tape;
}

Eigen::MatrixXd backward_batch(const Mlp& mlp, const MlpTape& tape,
                               const Eigen::MatrixXd& output_grad, Eigen::VectorXd& param_grads,
                               bool want_input_grad) {
  const std::size_t layers = mlp.layer_count();
  if (tape.activations.size() != layers + 1 || tape.activations.front().rows() !=
                                                    static_cast<Eigen::Index>(mlp.input_size())) {
    throw Error(Errc::ShapeMismatch, "tape does not belong to this MLP");
  }
  if (output_grad.rows() != static_cast<Eigen::Index>(mlp.output_size()) ||
      output_grad.cols() != tape.output().cols()) {
    throw Error(Errc::ShapeMismatch, "output gradient shape does not match the tape");
  }
  if (param_grads.size() != static_cast<Eigen::Index>(mlp.parameter_count())) {
    throw Error(Errc::ShapeMismatch, "parameter gradient buffer has the wrong length");
  }
  Eigen::MatrixXd delta = output_grad;
  for (std::size_t l = layers; l-- > 0;) {
    if (l + 1 < layers) {
      delta.array() *= 1.0 - tape.activations[l + 1].array().square();
    }
    const std::size_t out = mlp.layer_dims()[l + 1], in = mlp.layer_dims()[l];
    Eigen::Map<Eigen::MatrixXd> gw(param_grads.data() + mlp.offset(l), out, in);
    Eigen::Map<Eigen::VectorXd> gb(param_grads.data() + mlp.offset(l) + out * in, out);
    gw.noalias() += delta * tape.activations[l].transpose();
    gb += delta.rowwise().sum();
    if (l == 0 && !want_input_grad) return {};
    Eigen::MatrixXd prev = mlp.weight(l).transpose() * delta;
    delta = std::move(prev);
  }
  return delta;
}

MlpForward forward(const Mlp& mlp, const Eigen::VectorXd& input) {
  MlpForward f;
  f.tape = forward_batch(mlp, input);
  f.output = f.tape.output().col(0);
  return f;
}

MlpGradients backward(const Mlp& mlp, const MlpTape& tape, const Eigen::VectorXd& output_grad) {
  MlpGradients g;
  g.params = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mlp.parameter_count()));
  g.input = backward_batch(mlp, tape, output_grad, g.params).col(0);
  return g;
}

MlpF32::MlpF32(const Mlp& mlp) {
  for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
    weights_.push_back(mlp.weight(l).cast<float>());
    biases_.push_back(mlp.bias(l).cast<float>());
  }
}

void MlpF32::forward(const Eigen::MatrixXf& inputs, Eigen::MatrixXf& out,
                     Eigen::MatrixXf scratch[2]) const {
  const Eigen::MatrixXf* src = &inputs;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXf& dst = l + 1 == weights_.size() ? out : scratch[l % 2];
    dst.noalias() = weights_[l] * *src;
    dst.colwise() += biases_[l];
    if (l + 1 < weights_.size()) tanh_inplace(dst);
    src = &dst;
  }
}

}  // namespace sdyn
