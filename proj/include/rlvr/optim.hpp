#pragma once

#include <cstdint>

#include "rlvr/policy.hpp"

namespace rlvr::optim {

struct AdamConfig {
  double learning_rate = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

struct OptimizerState {
  policy::ParamVector first_moment;
  policy::ParamVector second_moment;
  std::int64_t step = 0;

  static OptimizerState zeros(const policy::PolicyDims& dims) {
    return OptimizerState{policy::ParamVector::zeros(dims),
                          policy::ParamVector::zeros(dims), 0};
  }
};

// Adaptive-moment descent step with bias correction; grad is d(loss)/d(w).
void adam_update(policy::ParamVector& weights, OptimizerState& state,
                 const policy::ParamVector& grad, const AdamConfig& config);

}  // namespace rlvr::optim
