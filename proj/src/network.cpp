#include "forgetprobe/network.hpp"

#include <cmath>

#include "forgetprobe/errors.hpp"
#include "forgetprobe/rng.hpp"

namespace fp {

std::size_t NetworkState::param_count() const {
    std::size_t n = 0;
    for (const Matrix& w : weights) n += w.size();
    return n;
}

NetworkState init_weights(const std::vector<LayerSpec>& layers, std::uint64_t seed) {
    if (layers.empty()) throw DimensionError("init_weights: empty layer list");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].in_width <= 0 || layers[i].out_width <= 0)
            throw DimensionError("init_weights: non-positive width in layer " + std::to_string(i));
        if (i > 0 && layers[i].in_width != layers[i - 1].out_width)
            throw DimensionError("init_weights: layer " + std::to_string(i) + " expects input width " +
                                 std::to_string(layers[i].in_width) + " but layer " +
                                 std::to_string(i - 1) + " outputs " +
                                 std::to_string(layers[i - 1].out_width));
    }

    NetworkState net;
    net.layers = layers;
    net.weights.reserve(layers.size() * 2);
    Rng rng(seed);
    for (const LayerSpec& spec : layers) {
        Matrix w(spec.in_width, spec.out_width);
        // Uniform bounds chosen so Var(w) matches the classic normal-variant
        // fan rules: He for relu, Xavier for identity.
        float bound = spec.activation == Activation::relu
                          ? std::sqrt(6.0f / static_cast<float>(spec.in_width))
                          : std::sqrt(6.0f / static_cast<float>(spec.in_width + spec.out_width));
        for (float& x : w.data) x = rng.uniform(-bound, bound);
        net.weights.push_back(std::move(w));
        net.weights.emplace_back(1, spec.out_width, 0.0f);
    }
    return net;
}

std::vector<Matrix> forward(const NetworkState& net, const Matrix& batch) {
    if (net.layers.empty()) throw DimensionError("forward: empty network");
    if (batch.cols != net.layers.front().in_width)
        throw DimensionError("forward: batch width " + std::to_string(batch.cols) +
                             " != layer 0 input width " +
                             std::to_string(net.layers.front().in_width));

    std::vector<Matrix> activations;
    activations.reserve(net.layers.size() + 1);
    activations.push_back(batch);
    for (int l = 0; l < net.n_layers(); ++l) {
        Matrix z = matmul(activations.back(), net.weight(l));
        add_row_inplace(z, net.bias(l));
        if (net.layers[l].activation == Activation::relu)
            for (float& x : z.data) x = x > 0.0f ? x : 0.0f;
        activations.push_back(std::move(z));
    }
    return activations;
}

BackwardResult backward(const NetworkState& net, const std::vector<Matrix>& activations,
                        const Matrix& output_grad) {
    if (activations.size() != net.layers.size() + 1)
        throw DimensionError("backward: expected " + std::to_string(net.layers.size() + 1) +
                             " activations, got " + std::to_string(activations.size()));
    if (!output_grad.same_shape(activations.back()))
        throw DimensionError("backward: output_grad " + output_grad.shape_str() +
                             " vs output " + activations.back().shape_str());

    BackwardResult result;
    result.weight_grads.resize(net.weights.size());
    Matrix delta = output_grad;  // d loss / d post-activation of current layer
    for (int l = net.n_layers() - 1; l >= 0; --l) {
        const Matrix& out = activations[static_cast<std::size_t>(l) + 1];
        if (net.layers[l].activation == Activation::relu) {
            // Post-activation is zero exactly where the pre-activation was
            // clamped, so it doubles as the mask.
            for (std::size_t i = 0; i < delta.data.size(); ++i)
                if (out.data[i] <= 0.0f) delta.data[i] = 0.0f;
        }
        const Matrix& input = activations[static_cast<std::size_t>(l)];
        result.weight_grads[2 * static_cast<std::size_t>(l)] = matmul_tn(input, delta);
        result.weight_grads[2 * static_cast<std::size_t>(l) + 1] = column_sums(delta);
        if (l > 0)
            delta = matmul_nt(delta, net.weight(l));
        else
            result.input_grad = matmul_nt(delta, net.weight(0));
    }
    return result;
}

}  // namespace fp
