#include "forgetprobe/models.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "forgetprobe/errors.hpp"
#include "forgetprobe/losses.hpp"

namespace fp {

const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::discriminative: return "d";
        case ModelKind::autoencoder: return "ae";
        case ModelKind::vae: return "vae";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "d") return ModelKind::discriminative;
    if (name == "ae") return ModelKind::autoencoder;
    if (name == "vae") return ModelKind::vae;
    throw ConfigError("unknown model '" + name + "' (want d, ae or vae)");
}

namespace {
// Stable per-segment seed streams, so e.g. adding the vae's logvar map does
// not shift any other segment's draw.
enum SegmentStream : std::uint64_t {
    kEncoderStream = 1,
    kBottleneckStream = 2,
    kLogvarStream = 3,
    kDecoderStream = 4,
    kHeadStream = 5,
};
}  // namespace

ModelState build_model(ModelKind kind, int input_dim, int n_tasks, int bottleneck,
                       std::uint64_t seed, int h1, int h2) {
    if (input_dim <= 0) throw ConfigError("build_model: input_dim must be positive");
    if (n_tasks <= 0) throw ConfigError("build_model: n_tasks must be positive");
    if (bottleneck <= 0) throw ConfigError("build_model: bottleneck must be positive");
    if (h1 <= 0 || h2 <= 0) throw ConfigError("build_model: trunk widths must be positive");

    ModelState m;
    m.kind = kind;
    m.input_dim = input_dim;
    m.bottleneck = bottleneck;
    m.n_tasks = n_tasks;
    m.seed = seed;

    m.encoder = init_weights({{input_dim, h1, Activation::relu}, {h1, h2, Activation::relu}},
                             derive_seed(seed, kEncoderStream));
    // The bottleneck activation is the one place the trunks differ. The
    // generative models expose a linear code: a gaussian vae's mu layer is
    // linear by definition, and the autoencoder reads the same linear code so
    // both measure the same geometry. Clamping that code with a ReLU would
    // collapse inputs far from the training manifold onto a near-constant
    // code and destroy the transfer the generative objectives are being
    // measured for. The discriminative net, by contrast, is a plain ReLU
    // classifier through and through — its waist is just another hidden
    // layer, and that ReLU is what lets its objective discard everything the
    // current pair of classes does not need.
    const Activation code_act =
        kind == ModelKind::discriminative ? Activation::relu : Activation::identity;
    m.bottleneck_map =
        init_weights({{h2, bottleneck, code_act}}, derive_seed(seed, kBottleneckStream));
    if (kind == ModelKind::vae)
        m.logvar_map = init_weights({{h2, bottleneck, Activation::identity}},
                                    derive_seed(seed, kLogvarStream));
    m.decoder = init_weights({{bottleneck, h2, Activation::relu}, {h2, h1, Activation::relu}},
                             derive_seed(seed, kDecoderStream));

    if (kind == ModelKind::discriminative) {
        for (int t = 0; t < n_tasks; ++t)
            m.heads.push_back(init_weights({{h1, 2, Activation::identity}},
                                           derive_seed(seed, kHeadStream, static_cast<std::uint64_t>(t))));
    } else {
        m.heads.push_back(init_weights({{h1, input_dim, Activation::identity}},
                                       derive_seed(seed, kHeadStream)));
    }
    return m;
}

ModelLoss model_loss(const ModelState& model, const Matrix& batch,
                     const std::vector<int>& local_labels, int active_task, Rng& noise,
                     ModelGradients* grads) {
    if (model.kind != ModelKind::vae)
        return model_loss_with_eps(model, batch, local_labels, active_task, nullptr, grads);
    Matrix eps(batch.rows, model.bottleneck);
    for (float& x : eps.data) x = noise.normal();
    return model_loss_with_eps(model, batch, local_labels, active_task, &eps, grads);
}

ModelLoss model_loss_with_eps(const ModelState& model, const Matrix& batch,
                              const std::vector<int>& local_labels, int active_task,
                              const Matrix* eps, ModelGradients* grads) {
    if (batch.rows == 0) throw DimensionError("model_loss: empty batch");
    const bool is_d = model.kind == ModelKind::discriminative;
    if (is_d) {
        if (active_task < 1 || active_task > model.n_tasks)
            throw ConfigError("model_loss: active_task " + std::to_string(active_task) +
                              " out of range [1, " + std::to_string(model.n_tasks) + "]");
        if (static_cast<int>(local_labels.size()) != batch.rows)
            throw DimensionError("model_loss: " + std::to_string(local_labels.size()) +
                                 " labels for " + std::to_string(batch.rows) + " rows");
    }
    const int head_index = is_d ? active_task - 1 : 0;
    const NetworkState& head = model.heads[static_cast<std::size_t>(head_index)];

    std::vector<Matrix> enc_acts = forward(model.encoder, batch);
    std::vector<Matrix> mu_acts = forward(model.bottleneck_map, enc_acts.back());

    ModelLoss result;
    std::vector<Matrix> lv_acts;
    Matrix z;
    if (model.kind == ModelKind::vae) {
        if (!eps || eps->rows != batch.rows || eps->cols != model.bottleneck)
            throw DimensionError("model_loss: vae noise must be batch x bottleneck");
        lv_acts = forward(model.logvar_map, enc_acts.back());
        const Matrix& mu = mu_acts.back();
        const Matrix& lv = lv_acts.back();
        z = Matrix(mu.rows, mu.cols);
        for (std::size_t i = 0; i < z.data.size(); ++i)
            z.data[i] = mu.data[i] + std::exp(0.5f * lv.data[i]) * eps->data[i];
    } else {
        z = mu_acts.back();
    }

    std::vector<Matrix> dec_acts = forward(model.decoder, z);
    std::vector<Matrix> head_acts = forward(head, dec_acts.back());
    const Matrix& output = head_acts.back();

    Matrix output_grad;
    ElboResult eb;
    if (is_d) {
        LossGrad ce = cross_entropy(output, local_labels);
        result.loss = ce.loss;
        output_grad = std::move(ce.grad);
    } else if (model.kind == ModelKind::autoencoder) {
        LossGrad rec = mse(output, batch);
        result.loss = rec.loss;
        result.recon_term = rec.loss;
        output_grad = std::move(rec.grad);
    } else {
        eb = elbo(output, batch, mu_acts.back(), lv_acts.back());
        result.loss = eb.loss;
        result.recon_term = eb.recon_term;
        result.kl_term = eb.kl_term;
        output_grad = std::move(eb.recon_grad);
    }
    if (!std::isfinite(result.loss))
        throw NumericError(std::string("model_loss: non-finite ") + to_string(model.kind) +
                           " loss at task " + std::to_string(active_task));
    if (!grads) return result;

    BackwardResult head_back = backward(head, head_acts, output_grad);
    BackwardResult dec_back = backward(model.decoder, dec_acts, head_back.input_grad);

    Matrix enc_out_grad;
    if (model.kind == ModelKind::vae) {
        // z = mu + exp(lv/2) * eps; route dz into both bottleneck maps and add
        // the KL terms that hit mu / logvar directly.
        const Matrix& lv = lv_acts.back();
        Matrix mu_grad = dec_back.input_grad;
        add_inplace(mu_grad, eb.mu_grad);
        Matrix lv_grad(lv.rows, lv.cols);
        for (std::size_t i = 0; i < lv_grad.data.size(); ++i)
            lv_grad.data[i] = dec_back.input_grad.data[i] * eps->data[i] * 0.5f *
                                  std::exp(0.5f * lv.data[i]) +
                              eb.logvar_grad.data[i];
        BackwardResult mu_back = backward(model.bottleneck_map, mu_acts, mu_grad);
        BackwardResult lv_back = backward(model.logvar_map, lv_acts, lv_grad);
        grads->bottleneck = std::move(mu_back.weight_grads);
        grads->logvar = std::move(lv_back.weight_grads);
        enc_out_grad = std::move(mu_back.input_grad);
        add_inplace(enc_out_grad, lv_back.input_grad);
    } else {
        BackwardResult bot_back = backward(model.bottleneck_map, mu_acts, dec_back.input_grad);
        grads->bottleneck = std::move(bot_back.weight_grads);
        grads->logvar.clear();
        enc_out_grad = std::move(bot_back.input_grad);
    }
    BackwardResult enc_back = backward(model.encoder, enc_acts, enc_out_grad);

    grads->encoder = std::move(enc_back.weight_grads);
    grads->decoder = std::move(dec_back.weight_grads);
    grads->head = std::move(head_back.weight_grads);
    grads->head_index = head_index;
    return result;
}

ModelOptimizer make_model_optimizer(const ModelState& model, float learning_rate, float beta1,
                                    float beta2, float epsilon) {
    ModelOptimizer opt;
    opt.encoder = make_adam(model.encoder, learning_rate, beta1, beta2, epsilon);
    opt.bottleneck = make_adam(model.bottleneck_map, learning_rate, beta1, beta2, epsilon);
    if (model.kind == ModelKind::vae)
        opt.logvar = make_adam(model.logvar_map, learning_rate, beta1, beta2, epsilon);
    opt.decoder = make_adam(model.decoder, learning_rate, beta1, beta2, epsilon);
    for (const NetworkState& head : model.heads)
        opt.heads.push_back(make_adam(head, learning_rate, beta1, beta2, epsilon));
    return opt;
}

void apply_gradients(ModelState& model, ModelOptimizer& opt, const ModelGradients& grads) {
    adam_step(opt.encoder, model.encoder, grads.encoder);
    adam_step(opt.bottleneck, model.bottleneck_map, grads.bottleneck);
    if (!grads.logvar.empty()) adam_step(opt.logvar, model.logvar_map, grads.logvar);
    adam_step(opt.decoder, model.decoder, grads.decoder);
    if (grads.head_index < 0 || grads.head_index >= static_cast<int>(model.heads.size()))
        throw ConfigError("apply_gradients: head index " + std::to_string(grads.head_index) +
                          " out of range");
    adam_step(opt.heads[static_cast<std::size_t>(grads.head_index)],
              model.heads[static_cast<std::size_t>(grads.head_index)], grads.head);
}

Matrix extract_representations(const ModelState& model, const Matrix& inputs) {
    if (inputs.cols != model.input_dim)
        throw DimensionError("extract_representations: input width " +
                             std::to_string(inputs.cols) + " != model input_dim " +
                             std::to_string(model.input_dim));
    constexpr int kSlice = 1024;
    Matrix reps(inputs.rows, model.rep_width());
    for (int start = 0; start < inputs.rows; start += kSlice) {
        int take = std::min(kSlice, inputs.rows - start);
        Matrix slice(take, inputs.cols);
        std::memcpy(slice.data.data(), inputs.row(start),
                    static_cast<std::size_t>(take) * inputs.cols * sizeof(float));
        Matrix h2 = forward(model.encoder, slice).back();
        Matrix z = forward(model.bottleneck_map, h2).back();  // vae: z = mu
        Matrix rep = forward(model.decoder, z).back();
        std::memcpy(reps.row(start), rep.data.data(),
                    static_cast<std::size_t>(take) * reps.cols * sizeof(float));
    }
    return reps;
}

double reconstruction_loss(const ModelState& model, const Matrix& inputs) {
    if (model.kind == ModelKind::discriminative)
        throw ConfigError("reconstruction_loss: undefined for the discriminative model");
    if (inputs.rows == 0) throw DimensionError("reconstruction_loss: empty set");
    constexpr int kSlice = 1024;
    double total_sq = 0.0;
    for (int start = 0; start < inputs.rows; start += kSlice) {
        int take = std::min(kSlice, inputs.rows - start);
        Matrix slice(take, inputs.cols);
        std::memcpy(slice.data.data(), inputs.row(start),
                    static_cast<std::size_t>(take) * inputs.cols * sizeof(float));
        Matrix h2 = forward(model.encoder, slice).back();
        Matrix z = forward(model.bottleneck_map, h2).back();
        Matrix rep = forward(model.decoder, z).back();
        Matrix recon = forward(model.heads[0], rep).back();
        for (std::size_t i = 0; i < recon.data.size(); ++i) {
            float d = recon.data[i] - slice.data[i];
            total_sq += static_cast<double>(d) * d;
        }
    }
    double result = model.kind == ModelKind::autoencoder
                        ? total_sq / (static_cast<double>(inputs.rows) * inputs.cols)
                        : total_sq / static_cast<double>(inputs.rows);
    if (!std::isfinite(result)) throw NumericError("reconstruction_loss: non-finite value");
    return result;
}

// ---- checkpointing ---------------------------------------------------------

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x4650434bu;  // "FPCK" little-endian
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<char*>(&v), 4); }
void put_u64(std::string& out, std::uint64_t v) { out.append(reinterpret_cast<char*>(&v), 8); }
void put_i32(std::string& out, std::int32_t v) { out.append(reinterpret_cast<char*>(&v), 4); }

void put_network(std::string& out, const NetworkState& net) {
    put_u32(out, static_cast<std::uint32_t>(net.layers.size()));
    for (const LayerSpec& l : net.layers) {
        put_i32(out, l.in_width);
        put_i32(out, l.out_width);
        put_u32(out, l.activation == Activation::relu ? 0u : 1u);
    }
    for (const Matrix& w : net.weights)
        out.append(reinterpret_cast<const char*>(w.data.data()), w.data.size() * sizeof(float));
}

struct ByteReader {
    const std::string& bytes;
    std::size_t pos = 0;
    std::string where;

    void need(std::size_t n) {
        if (pos + n > bytes.size())
            throw FormatError(where + ": truncated checkpoint at byte " + std::to_string(pos));
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, bytes.data() + pos, 4);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v;
        std::memcpy(&v, bytes.data() + pos, 8);
        pos += 8;
        return v;
    }
    std::int32_t i32() {
        need(4);
        std::int32_t v;
        std::memcpy(&v, bytes.data() + pos, 4);
        pos += 4;
        return v;
    }
};

NetworkState read_network(ByteReader& r) {
    NetworkState net;
    std::uint32_t n_layers = r.u32();
    if (n_layers > 64) throw FormatError(r.where + ": implausible layer count");
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        LayerSpec spec;
        spec.in_width = r.i32();
        spec.out_width = r.i32();
        std::uint32_t act = r.u32();
        if (spec.in_width <= 0 || spec.out_width <= 0 || act > 1)
            throw FormatError(r.where + ": bad layer spec at byte " + std::to_string(r.pos));
        spec.activation = act == 0 ? Activation::relu : Activation::identity;
        net.layers.push_back(spec);
    }
    for (const LayerSpec& spec : net.layers) {
        Matrix w(spec.in_width, spec.out_width);
        r.need(w.data.size() * sizeof(float));
        std::memcpy(w.data.data(), r.bytes.data() + r.pos, w.data.size() * sizeof(float));
        r.pos += w.data.size() * sizeof(float);
        net.weights.push_back(std::move(w));
        Matrix b(1, spec.out_width);
        r.need(b.data.size() * sizeof(float));
        std::memcpy(b.data.data(), r.bytes.data() + r.pos, b.data.size() * sizeof(float));
        r.pos += b.data.size() * sizeof(float);
        net.weights.push_back(std::move(b));
    }
    return net;
}

std::string serialize_model(const ModelState& model) {
    std::string out;
    put_u32(out, kCheckpointMagic);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(model.kind));
    put_i32(out, model.input_dim);
    put_i32(out, model.bottleneck);
    put_i32(out, model.n_tasks);
    put_u64(out, model.seed);
    put_network(out, model.encoder);
    put_network(out, model.bottleneck_map);
    put_u32(out, model.kind == ModelKind::vae ? 1u : 0u);
    if (model.kind == ModelKind::vae) put_network(out, model.logvar_map);
    put_network(out, model.decoder);
    put_u32(out, static_cast<std::uint32_t>(model.heads.size()));
    for (const NetworkState& head : model.heads) put_network(out, head);
    return out;
}

}  // namespace

void save_checkpoint(const ModelState& model, const std::string& path) {
    std::string bytes = serialize_model(model);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open " + path + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw FormatError("short write to " + path);
}

ModelState load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    ByteReader r{bytes, 0, path};
    if (r.u32() != kCheckpointMagic) throw FormatError(path + ": bad checkpoint magic at byte 0");
    std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));

    ModelState m;
    std::uint32_t kind = r.u32();
    if (kind > 2) throw FormatError(path + ": bad model kind " + std::to_string(kind));
    m.kind = static_cast<ModelKind>(kind);
    m.input_dim = r.i32();
    m.bottleneck = r.i32();
    m.n_tasks = r.i32();
    m.seed = r.u64();
    m.encoder = read_network(r);
    m.bottleneck_map = read_network(r);
    if (r.u32() == 1u) m.logvar_map = read_network(r);
    m.decoder = read_network(r);
    std::uint32_t n_heads = r.u32();
    if (n_heads == 0 || n_heads > 1024) throw FormatError(path + ": bad head count");
    for (std::uint32_t i = 0; i < n_heads; ++i) m.heads.push_back(read_network(r));
    if (r.pos != bytes.size())
        throw FormatError(path + ": " + std::to_string(bytes.size() - r.pos) +
                          " trailing bytes after checkpoint payload");
    return m;
}

std::uint64_t checkpoint_hash(const ModelState& model) {
    std::string bytes = serialize_model(model);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace fp
