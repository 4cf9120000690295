#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "forgetprobe/network.hpp"
#include "forgetprobe/optim.hpp"
#include "forgetprobe/rng.hpp"

namespace fp {

enum class ModelKind { discriminative, autoencoder, vae };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

// All three model kinds share one trunk shape,
//
//   input -> h1 -> h2 -> bottleneck -> h2 -> h1
//
// (h1 = 512, h2 = 256 by default), so their representations are directly
// comparable. The representation read out by probes and CKA is always the
// final h1-wide trunk activation. On top of the trunk:
//   discriminative: one 2-way linear head per task (task-incremental)
//   autoencoder:    one linear head back to input_dim
//   vae:            same, but the bottleneck map is a linear mu map and a
//                   parallel linear logvar map feeds the reparameterisation
struct ModelState {
    ModelKind kind = ModelKind::autoencoder;
    int input_dim = 0;
    int bottleneck = 0;
    int n_tasks = 0;
    std::uint64_t seed = 0;

    NetworkState encoder;         // input -> h1 -> h2 (relu)
    NetworkState bottleneck_map;  // h2 -> B (d: relu; ae/vae: linear code, doubles as vae mu)
    NetworkState logvar_map;      // h2 -> B (linear; vae only, else empty)
    NetworkState decoder;         // B -> h2 -> h1 (relu)
    std::vector<NetworkState> heads;

    int rep_width() const { return decoder.output_width(); }
};

// `h1`/`h2` override the trunk widths; production code uses the defaults,
// tests and gradient checks shrink them.
ModelState build_model(ModelKind kind, int input_dim, int n_tasks, int bottleneck,
                       std::uint64_t seed, int h1 = 512, int h2 = 256);

struct ModelLoss {
    double loss = 0.0;        // the training objective
    double recon_term = 0.0;  // generative models only
    double kl_term = 0.0;     // vae only
};

// Gradients for one step, segment by segment. Only head `head_index` is
// populated (and stepped); the other heads are untouched.
struct ModelGradients {
    std::vector<Matrix> encoder;
    std::vector<Matrix> bottleneck;
    std::vector<Matrix> logvar;
    std::vector<Matrix> decoder;
    std::vector<Matrix> head;
    int head_index = 0;
};

// Loss (and, if `grads` is non-null, gradients) of the model's objective on a
// batch. `local_labels` are task-local ids and only read by the
// discriminative model; `active_task` is 1-based and selects its head. VAE
// noise is drawn from `noise`. Throws NumericError if the loss is not finite.
ModelLoss model_loss(const ModelState& model, const Matrix& batch,
                     const std::vector<int>& local_labels, int active_task, Rng& noise,
                     ModelGradients* grads = nullptr);

// Same, with the VAE's reparameterisation noise injected explicitly (rows x
// bottleneck); ignored by the other kinds. This is the deterministic core
// that gradient checks exercise.
ModelLoss model_loss_with_eps(const ModelState& model, const Matrix& batch,
                              const std::vector<int>& local_labels, int active_task,
                              const Matrix* eps, ModelGradients* grads = nullptr);

// Per-segment Adam states.
struct ModelOptimizer {
    OptimizerState encoder;
    OptimizerState bottleneck;
    OptimizerState logvar;
    OptimizerState decoder;
    std::vector<OptimizerState> heads;
};

ModelOptimizer make_model_optimizer(const ModelState& model, float learning_rate = 1e-3f,
                                    float beta1 = 0.9f, float beta2 = 0.999f,
                                    float epsilon = 1e-8f);

void apply_gradients(ModelState& model, ModelOptimizer& opt, const ModelGradients& grads);

// Deterministic trunk representations (VAE uses z = mu; no sampling at
// measurement time). Returns inputs.rows x rep_width; runs in bounded-size
// slices internally.
Matrix extract_representations(const ModelState& model, const Matrix& inputs);

// Reconstruction objective on a whole set: mean squared error over entries
// for the autoencoder; for the VAE, the ELBO reconstruction term with z = mu.
// Undefined for the discriminative model (throws ConfigError).
double reconstruction_loss(const ModelState& model, const Matrix& inputs);

void save_checkpoint(const ModelState& model, const std::string& path);
ModelState load_checkpoint(const std::string& path);

// FNV-1a over the serialised model; equal hashes == byte-identical weights.
std::uint64_t checkpoint_hash(const ModelState& model);

}  // namespace fp
