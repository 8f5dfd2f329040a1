#include "sdyn/neuralnet/adam.hpp"

#include <cmath>

#include "sdyn/error.hpp"

namespace sdyn {

AdamState::AdamState(std::size_t n, const AdamConfig& c)
    : m(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
      v(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
      lr(c.lr),
      beta1(c.beta1),
      beta2(c.beta2),
      epsilon(c.epsilon),
      lr_decay(c.lr_decay) {}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& s) {
  if (params.size() != grads.size() || s.m.size() != params.size() || s.v.size() != params.size()) {
    throw Error(Errc::ShapeMismatch, "Adam buffers do not match the parameter vector");
  }
  ++s.step;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grads;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grads.cwiseAbs2();
  const double t = static_cast<double>(s.step);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  params.array() -= s.lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + s.epsilon);
}

}  // namespace sdyn
