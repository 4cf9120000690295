#include "forgetprobe/optim.hpp"

#include <cmath>

#include "forgetprobe/errors.hpp"

namespace fp {

namespace {
OptimizerState make_state(float learning_rate, float beta1, float beta2, float epsilon) {
    OptimizerState opt;
    opt.learning_rate = learning_rate;
    opt.beta1 = beta1;
    opt.beta2 = beta2;
    opt.epsilon = epsilon;
    return opt;
}
}  // namespace

OptimizerState make_adam(const NetworkState& net, float learning_rate, float beta1,
                         float beta2, float epsilon) {
    OptimizerState opt = make_state(learning_rate, beta1, beta2, epsilon);
    opt.m.reserve(net.weights.size());
    opt.v.reserve(net.weights.size());
    for (const Matrix& w : net.weights) {
        opt.m.emplace_back(w.rows, w.cols, 0.0f);
        opt.v.emplace_back(w.rows, w.cols, 0.0f);
    }
    return opt;
}

OptimizerState make_adam_for(const std::vector<const Matrix*>& params, float learning_rate,
                             float beta1, float beta2, float epsilon) {
    OptimizerState opt = make_state(learning_rate, beta1, beta2, epsilon);
    for (const Matrix* w : params) {
        opt.m.emplace_back(w->rows, w->cols, 0.0f);
        opt.v.emplace_back(w->rows, w->cols, 0.0f);
    }
    return opt;
}

void adam_update(OptimizerState& opt, const std::vector<Matrix*>& params,
                 const std::vector<const Matrix*>& gradients) {
    if (gradients.size() != params.size())
        throw DimensionError("adam_update: " + std::to_string(gradients.size()) +
                             " gradients for " + std::to_string(params.size()) + " parameters");
    if (opt.m.size() != params.size())
        throw DimensionError("adam_update: optimizer tracks " + std::to_string(opt.m.size()) +
                             " matrices, got " + std::to_string(params.size()));

    opt.step_count += 1;
    const float b1 = opt.beta1;
    const float b2 = opt.beta2;
    // Classic bias-corrected form (not the folded step-size variant, which
    // rescales epsilon).
    const float inv_bc1 =
        static_cast<float>(1.0 / (1.0 - std::pow(static_cast<double>(b1), opt.step_count)));
    const float inv_bc2 =
        static_cast<float>(1.0 / (1.0 - std::pow(static_cast<double>(b2), opt.step_count)));

    for (std::size_t p = 0; p < params.size(); ++p) {
        Matrix& w = *params[p];
        const Matrix& g = *gradients[p];
        if (!w.same_shape(g))
            throw DimensionError("adam_update: gradient " + g.shape_str() + " for weight " +
                                 w.shape_str());
        Matrix& m = opt.m[p];
        Matrix& v = opt.v[p];
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            float gi = g.data[i];
            m.data[i] = b1 * m.data[i] + (1.0f - b1) * gi;
            v.data[i] = b2 * v.data[i] + (1.0f - b2) * gi * gi;
            float mhat = m.data[i] * inv_bc1;
            float vhat = v.data[i] * inv_bc2;
            w.data[i] -= opt.learning_rate * mhat / (std::sqrt(vhat) + opt.epsilon);
        }
    }
}

void adam_step(OptimizerState& opt, NetworkState& net, const std::vector<Matrix>& gradients) {
    std::vector<Matrix*> params;
    std::vector<const Matrix*> grads;
    params.reserve(net.weights.size());
    grads.reserve(gradients.size());
    for (Matrix& w : net.weights) params.push_back(&w);
    for (const Matrix& g : gradients) grads.push_back(&g);
    adam_update(opt, params, grads);
}

}  // namespace fp
