#include "rlvr/optim.hpp"

#include <cmath>
#include <vector>

namespace rlvr::optim {

namespace {

void update_block(std::vector<double>& w, std::vector<double>& m,
                  std::vector<double>& v, const std::vector<double>& g,
                  const AdamConfig& c, double bc1, double bc2) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
    double mhat = m[i] / bc1;
    double vhat = v[i] / bc2;
    w[i] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
  }
}

}  // namespace

void adam_update(policy::ParamVector& weights, OptimizerState& state,
                 const policy::ParamVector& grad, const AdamConfig& config) {
  ++state.step;
  double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  update_block(weights.ctx, state.first_moment.ctx, state.second_moment.ctx,
               grad.ctx, config, bc1, bc2);
  update_block(weights.feat, state.first_moment.feat, state.second_moment.feat,
               grad.feat, config, bc1, bc2);
  update_block(weights.bias, state.first_moment.bias, state.second_moment.bias,
               grad.bias, config, bc1, bc2);
}

}  // namespace rlvr::optim
