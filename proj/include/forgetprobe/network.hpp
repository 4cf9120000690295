#pragma once

#include <cstdint>
#include <vector>

#include "forgetprobe/matrix.hpp"

namespace fp {

enum class Activation { relu, identity };

struct LayerSpec {
    int in_width = 0;
    int out_width = 0;
    Activation activation = Activation::relu;
};

// A plain dense MLP: weights[2i] is layer i's weight (in x out), weights[2i+1]
// its bias (1 x out). Kept as a flat vector so optimizers and serialisation
// can treat parameters uniformly.
struct NetworkState {
    std::vector<LayerSpec> layers;
    std::vector<Matrix> weights;

    int n_layers() const { return static_cast<int>(layers.size()); }
    Matrix& weight(int layer) { return weights[2 * static_cast<std::size_t>(layer)]; }
    Matrix& bias(int layer) { return weights[2 * static_cast<std::size_t>(layer) + 1]; }
    const Matrix& weight(int layer) const { return weights[2 * static_cast<std::size_t>(layer)]; }
    const Matrix& bias(int layer) const { return weights[2 * static_cast<std::size_t>(layer) + 1]; }
    std::size_t param_count() const;
    int input_width() const { return layers.empty() ? 0 : layers.front().in_width; }
    int output_width() const { return layers.empty() ? 0 : layers.back().out_width; }
};

// He-uniform for relu layers (matches the variance of He-normal), Xavier-uniform
// for identity layers; biases zero. Consumes `seed` via the shared Rng.
NetworkState init_weights(const std::vector<LayerSpec>& layers, std::uint64_t seed);

// Returns per-layer post-activation outputs, with the input batch prepended:
// result[0] = batch, result[i] = output of layer i-1, result.back() = network
// output. Keeping the input in the list lets backward() consume the same
// vector without re-threading the batch.
std::vector<Matrix> forward(const NetworkState& net, const Matrix& batch);

struct BackwardResult {
    std::vector<Matrix> weight_grads;  // same layout/shapes as net.weights
    Matrix input_grad;                 // d loss / d batch, for chaining segments
};

// output_grad is d loss / d output (same shape as activations.back()).
// ReLU subgradient at 0 is taken as 0.
BackwardResult backward(const NetworkState& net, const std::vector<Matrix>& activations,
                        const Matrix& output_grad);

}  // namespace fp
