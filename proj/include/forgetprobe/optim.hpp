#pragma once

#include <vector>

#include "forgetprobe/network.hpp"

namespace fp {

// Adam with bias correction. One state per parameter group (NetworkState);
// moments are laid out exactly like the weights they track.
struct OptimizerState {
    float learning_rate = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;
    long step_count = 0;
    std::vector<Matrix> m;
    std::vector<Matrix> v;
};

OptimizerState make_adam(const NetworkState& net, float learning_rate = 1e-3f,
                         float beta1 = 0.9f, float beta2 = 0.999f, float epsilon = 1e-8f);

// For parameters that do not live in a NetworkState (e.g. probe weights).
OptimizerState make_adam_for(const std::vector<const Matrix*>& params,
                             float learning_rate = 1e-3f, float beta1 = 0.9f,
                             float beta2 = 0.999f, float epsilon = 1e-8f);

// One update of arbitrary parameter matrices; `params[i]` is stepped with
// `gradients[i]`, moments live in `opt` in the same order.
void adam_update(OptimizerState& opt, const std::vector<Matrix*>& params,
                 const std::vector<const Matrix*>& gradients);

// In-place update of net.weights from gradients (same layout as net.weights).
void adam_step(OptimizerState& opt, NetworkState& net, const std::vector<Matrix>& gradients);

}  // namespace fp
