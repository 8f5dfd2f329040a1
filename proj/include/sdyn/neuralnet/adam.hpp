#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace sdyn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double lr_decay = 0.96;  // applied at every epoch boundary
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double lr_decay = 0.96;

  AdamState() = default;
  AdamState(std::size_t parameter_count, const AdamConfig& config = {});

  void end_epoch() {
    lr *= lr_decay;
    ++epoch;
  }
};

// Bias-corrected Adam update. Throws Error(ShapeMismatch).
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state);

}  // namespace sdyn
