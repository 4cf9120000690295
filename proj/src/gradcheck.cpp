#include "forgetprobe/gradcheck.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

#include "forgetprobe/losses.hpp"
#include "forgetprobe/models.hpp"
#include "forgetprobe/rng.hpp"

namespace fp {

namespace {

using dvec = std::vector<double>;

dvec widen(const Matrix& m) {
    dvec out(m.data.size());
    for (std::size_t i = 0; i < m.data.size(); ++i) out[i] = static_cast<double>(m.data[i]);
    return out;
}

// ---- independent double-precision forward oracle ---------------------------
// Straight-line re-implementations: none of this calls the float code paths
// it is checking.

struct OracleNet {
    std::vector<LayerSpec> layers;
    dvec params;  // w0 row-major, b0, w1, b1, ...
};

OracleNet widen_net(const NetworkState& net) {
    OracleNet o;
    o.layers = net.layers;
    for (const Matrix& w : net.weights) {
        dvec part = widen(w);
        o.params.insert(o.params.end(), part.begin(), part.end());
    }
    return o;
}

// Forward through one oracle net; `x` is rows x in_width flattened row-major.
// Tracks the smallest |pre-activation| seen at any relu unit.
dvec oracle_forward(const OracleNet& net, const dvec& x, int rows, double& min_relu_preact) {
    dvec cur = x;
    std::size_t p = 0;
    for (const LayerSpec& layer : net.layers) {
        dvec next(static_cast<std::size_t>(rows) * layer.out_width, 0.0);
        const double* w = net.params.data() + p;
        const double* b = w + static_cast<std::size_t>(layer.in_width) * layer.out_width;
        for (int i = 0; i < rows; ++i) {
            const double* xin = cur.data() + static_cast<std::size_t>(i) * layer.in_width;
            double* xout = next.data() + static_cast<std::size_t>(i) * layer.out_width;
            for (int j = 0; j < layer.out_width; ++j) {
                double z = b[j];
                for (int k = 0; k < layer.in_width; ++k)
                    z += xin[k] * w[static_cast<std::size_t>(k) * layer.out_width + j];
                if (layer.activation == Activation::relu) {
                    min_relu_preact = std::min(min_relu_preact, std::abs(z));
                    xout[j] = z > 0.0 ? z : 0.0;
                } else {
                    xout[j] = z;
                }
            }
        }
        p += static_cast<std::size_t>(layer.in_width) * layer.out_width + layer.out_width;
        cur = std::move(next);
    }
    return cur;
}

double oracle_cross_entropy(const dvec& logits, int rows, int cols,
                            const std::vector<int>& labels) {
    double total = 0.0;
    for (int i = 0; i < rows; ++i) {
        const double* row = logits.data() + static_cast<std::size_t>(i) * cols;
        double mx = row[0];
        for (int j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (int j = 0; j < cols; ++j) denom += std::exp(row[j] - mx);
        total += std::log(denom) - (row[labels[static_cast<std::size_t>(i)]] - mx);
    }
    return total / rows;
}

double oracle_mse(const dvec& out, const dvec& target) {
    double total = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        double d = out[i] - target[i];
        total += d * d;
    }
    return total / static_cast<double>(out.size());
}

double oracle_elbo(const dvec& recon, const dvec& target, const dvec& mu, const dvec& logvar,
                   int rows) {
    double recon_total = 0.0;
    for (std::size_t i = 0; i < recon.size(); ++i) {
        double d = recon[i] - target[i];
        recon_total += d * d;
    }
    double kl_total = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        kl_total += -0.5 * (1.0 + logvar[i] - mu[i] * mu[i] - std::exp(logvar[i]));
    return recon_total / rows + kl_total / rows;
}

// The full composite objective in double. `segments` are the oracle copies of
// the model's parts in flattening order; which parts exist depends on `kind`.
struct OracleModel {
    ModelKind kind = ModelKind::autoencoder;
    OracleNet encoder, bottleneck, logvar, decoder, head;

    // Concatenated parameter vector in the same order the analytic gradients
    // are flattened: encoder, bottleneck, (logvar,) decoder, head.
    dvec all_params() const {
        dvec out = encoder.params;
        out.insert(out.end(), bottleneck.params.begin(), bottleneck.params.end());
        if (kind == ModelKind::vae)
            out.insert(out.end(), logvar.params.begin(), logvar.params.end());
        out.insert(out.end(), decoder.params.begin(), decoder.params.end());
        out.insert(out.end(), head.params.begin(), head.params.end());
        return out;
    }

    void load_params(const dvec& flat) {
        std::size_t p = 0;
        auto take = [&](OracleNet& net) {
            std::copy(flat.begin() + static_cast<std::ptrdiff_t>(p),
                      flat.begin() + static_cast<std::ptrdiff_t>(p + net.params.size()),
                      net.params.begin());
            p += net.params.size();
        };
        take(encoder);
        take(bottleneck);
        if (kind == ModelKind::vae) take(logvar);
        take(decoder);
        take(head);
    }

    double loss(const dvec& batch, int rows, const std::vector<int>& labels,
                const dvec& eps, double& min_relu_preact) const {
        dvec h = oracle_forward(encoder, batch, rows, min_relu_preact);
        dvec mu = oracle_forward(bottleneck, h, rows, min_relu_preact);
        dvec z = mu;
        dvec lv;
        if (kind == ModelKind::vae) {
            lv = oracle_forward(logvar, h, rows, min_relu_preact);
            for (std::size_t i = 0; i < z.size(); ++i)
                z[i] = mu[i] + std::exp(0.5 * lv[i]) * eps[i];
        }
        dvec rep = oracle_forward(decoder, z, rows, min_relu_preact);
        dvec out = oracle_forward(head, rep, rows, min_relu_preact);
        switch (kind) {
            case ModelKind::discriminative:
                return oracle_cross_entropy(out, rows, head.layers.back().out_width, labels);
            case ModelKind::autoencoder:
                return oracle_mse(out, batch);
            case ModelKind::vae:
                return oracle_elbo(out, batch, mu, lv, rows);
        }
        return 0.0;
    }
};

// ---- comparison harness -----------------------------------------------------

struct Harness {
    double step;
    double rel_tol;
    GradCheckReport report;

    void compare(const std::string& where, double analytic, double fd) {
        report.comparisons += 1;
        double err = std::abs(analytic - fd);
        double denom = std::max(std::abs(analytic), std::abs(fd));
        double rel = err / std::max(denom, 1e-5);
        report.max_rel_err = std::max(report.max_rel_err, rel);
        if (err <= std::max(rel_tol * denom, 1e-5)) return;
        report.failures += 1;
        if (report.messages.size() < 64) {
            char buf[192];
            std::snprintf(buf, sizeof(buf), "%s: analytic=%.8g fd=%.8g rel=%.3g",
                          where.c_str(), analytic, fd, rel);
            report.messages.emplace_back(buf);
        }
    }
};

constexpr double kKinkMargin = 5e-3;

std::vector<int> random_labels(Rng& rng, int n, int classes) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int& l : labels) l = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(classes)));
    return labels;
}

Matrix random_matrix(Rng& rng, int rows, int cols, float lo, float hi) {
    Matrix m(rows, cols);
    for (float& x : m.data) x = rng.uniform(lo, hi);
    return m;
}

// FD sweep of `loss` (a double function of the flat parameter vector) against
// `analytic`, both `n` long.
void fd_sweep(Harness& h, const std::string& family, int instance,
              const std::function<double(const dvec&)>& loss, dvec params,
              const dvec& analytic) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        double saved = params[i];
        params[i] = saved + h.step;
        double up = loss(params);
        params[i] = saved - h.step;
        double down = loss(params);
        params[i] = saved;
        double fd = (up - down) / (2.0 * h.step);
        h.compare(family + " #" + std::to_string(instance) + " p" + std::to_string(i),
                  analytic[i], fd);
    }
}

dvec flatten_mats(const std::vector<Matrix>& mats) {
    dvec out;
    for (const Matrix& m : mats) {
        dvec part = widen(m);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

// ---- families ---------------------------------------------------------------

void check_direct_losses(Harness& h, int instances, Rng& rng) {
    for (int inst = 0; inst < instances; ++inst) {
        int n = 2 + static_cast<int>(rng.bounded(3));
        int c = 2 + static_cast<int>(rng.bounded(3));

        {  // ce-direct: d loss / d logits
            Matrix logits = random_matrix(rng, n, c, -2.0f, 2.0f);
            std::vector<int> labels = random_labels(rng, n, c);
            LossGrad an = cross_entropy(logits, labels);
            auto loss = [&](const dvec& p) { return oracle_cross_entropy(p, n, c, labels); };
            fd_sweep(h, "ce-direct", inst, loss, widen(logits), widen(an.grad));
        }
        {  // mse-direct: d loss / d output
            Matrix out = random_matrix(rng, n, c, -2.0f, 2.0f);
            Matrix target = random_matrix(rng, n, c, -2.0f, 2.0f);
            LossGrad an = mse(out, target);
            dvec tgt = widen(target);
            auto loss = [&](const dvec& p) { return oracle_mse(p, tgt); };
            fd_sweep(h, "mse-direct", inst, loss, widen(out), widen(an.grad));
        }
        {  // elbo-direct: d loss / d (recon, mu, logvar) jointly
            int d = 2 + static_cast<int>(rng.bounded(3));
            int b = 1 + static_cast<int>(rng.bounded(3));
            Matrix recon = random_matrix(rng, n, d, -1.5f, 1.5f);
            Matrix target = random_matrix(rng, n, d, -1.5f, 1.5f);
            Matrix mu = random_matrix(rng, n, b, -1.5f, 1.5f);
            Matrix logvar = random_matrix(rng, n, b, -1.0f, 1.0f);
            ElboResult an = elbo(recon, target, mu, logvar);
            dvec tgt = widen(target);
            std::size_t nr = recon.data.size(), nm = mu.data.size();
            auto loss = [&](const dvec& p) {
                dvec r(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(nr));
                dvec m(p.begin() + static_cast<std::ptrdiff_t>(nr),
                       p.begin() + static_cast<std::ptrdiff_t>(nr + nm));
                dvec lv(p.begin() + static_cast<std::ptrdiff_t>(nr + nm), p.end());
                return oracle_elbo(r, tgt, m, lv, n);
            };
            dvec params = widen(recon);
            dvec part = widen(mu);
            params.insert(params.end(), part.begin(), part.end());
            part = widen(logvar);
            params.insert(params.end(), part.begin(), part.end());
            dvec an_flat = widen(an.recon_grad);
            part = widen(an.mu_grad);
            an_flat.insert(an_flat.end(), part.begin(), part.end());
            part = widen(an.logvar_grad);
            an_flat.insert(an_flat.end(), part.begin(), part.end());
            fd_sweep(h, "elbo-direct", inst, loss, params, an_flat);
        }
    }
}

void check_net_family(Harness& h, const std::string& family, int instances, Rng& rng,
                      bool use_ce) {
    for (int inst = 0; inst < instances; ++inst) {
        for (int attempt = 0;; ++attempt) {
            int n_layers = 1 + static_cast<int>(rng.bounded(3));
            std::vector<LayerSpec> layers;
            int width = 2 + static_cast<int>(rng.bounded(4));
            for (int l = 0; l < n_layers; ++l) {
                int out = 2 + static_cast<int>(rng.bounded(4));
                Activation act =
                    rng.bounded(2) == 0 ? Activation::relu : Activation::identity;
                layers.push_back({width, out, act});
                width = out;
            }
            // CE needs at least 2 classes at the output.
            if (use_ce && layers.back().out_width < 2) layers.back().out_width = 2;

            NetworkState net = init_weights(layers, rng.next_u64());
            int rows = 2 + static_cast<int>(rng.bounded(3));
            Matrix input = random_matrix(rng, rows, layers.front().in_width, -1.5f, 1.5f);
            std::vector<int> labels = random_labels(rng, rows, layers.back().out_width);
            Matrix target = random_matrix(rng, rows, layers.back().out_width, -1.5f, 1.5f);

            OracleNet oracle = widen_net(net);
            dvec batch = widen(input);
            dvec tgt = widen(target);
            auto loss_at = [&](const dvec& params, const dvec& in, double& margin) {
                OracleNet o = oracle;
                o.params = params;
                dvec out = oracle_forward(o, in, rows, margin);
                return use_ce ? oracle_cross_entropy(out, rows, layers.back().out_width, labels)
                              : oracle_mse(out, tgt);
            };

            // Kink guard on the unperturbed point.
            double margin = std::numeric_limits<double>::infinity();
            loss_at(oracle.params, batch, margin);
            if (margin < kKinkMargin && attempt < 200) continue;

            std::vector<Matrix> acts = forward(net, input);
            LossGrad lg = use_ce ? cross_entropy(acts.back(), labels) : mse(acts.back(), target);
            BackwardResult back = backward(net, acts, lg.grad);

            auto loss_params = [&](const dvec& p) {
                double m = std::numeric_limits<double>::infinity();
                return loss_at(p, batch, m);
            };
            fd_sweep(h, family, inst, loss_params, oracle.params, flatten_mats(back.weight_grads));

            auto loss_input = [&](const dvec& in) {
                double m = std::numeric_limits<double>::infinity();
                return loss_at(oracle.params, in, m);
            };
            fd_sweep(h, family + "-input", inst, loss_input, batch, widen(back.input_grad));
            break;
        }
    }
}

void check_model_family(Harness& h, const std::string& family, int instances, Rng& rng,
                        ModelKind kind) {
    for (int inst = 0; inst < instances; ++inst) {
        for (int attempt = 0;; ++attempt) {
            int input_dim = 3 + static_cast<int>(rng.bounded(3));
            int h1 = 4 + static_cast<int>(rng.bounded(3));
            int h2 = 3 + static_cast<int>(rng.bounded(3));
            int bottleneck = 2 + static_cast<int>(rng.bounded(2));
            int n_tasks = 2;
            ModelState model =
                build_model(kind, input_dim, n_tasks, bottleneck, rng.next_u64(), h1, h2);
            int rows = 2 + static_cast<int>(rng.bounded(3));
            int active_task = 1 + static_cast<int>(rng.bounded(2));
            Matrix batch = random_matrix(rng, rows, input_dim, 0.0f, 1.0f);
            std::vector<int> labels = random_labels(rng, rows, 2);
            Matrix eps = random_matrix(rng, rows, bottleneck, -1.0f, 1.0f);

            OracleModel oracle;
            oracle.kind = kind;
            oracle.encoder = widen_net(model.encoder);
            oracle.bottleneck = widen_net(model.bottleneck_map);
            if (kind == ModelKind::vae) oracle.logvar = widen_net(model.logvar_map);
            oracle.decoder = widen_net(model.decoder);
            oracle.head = widen_net(
                model.heads[static_cast<std::size_t>(kind == ModelKind::discriminative
                                                         ? active_task - 1
                                                         : 0)]);

            dvec batch_d = widen(batch);
            dvec eps_d = widen(eps);

            double margin = std::numeric_limits<double>::infinity();
            oracle.loss(batch_d, rows, labels, eps_d, margin);
            if (margin < kKinkMargin && attempt < 200) continue;

            ModelGradients grads;
            model_loss_with_eps(model, batch, labels, active_task,
                                kind == ModelKind::vae ? &eps : nullptr, &grads);
            dvec an_flat = flatten_mats(grads.encoder);
            dvec part = flatten_mats(grads.bottleneck);
            an_flat.insert(an_flat.end(), part.begin(), part.end());
            if (kind == ModelKind::vae) {
                part = flatten_mats(grads.logvar);
                an_flat.insert(an_flat.end(), part.begin(), part.end());
            }
            part = flatten_mats(grads.decoder);
            an_flat.insert(an_flat.end(), part.begin(), part.end());
            part = flatten_mats(grads.head);
            an_flat.insert(an_flat.end(), part.begin(), part.end());

            OracleModel scratch = oracle;
            auto loss = [&](const dvec& p) {
                scratch.load_params(p);
                double m = std::numeric_limits<double>::infinity();
                return scratch.loss(batch_d, rows, labels, eps_d, m);
            };
            fd_sweep(h, family, inst, loss, oracle.all_params(), an_flat);
            break;
        }
    }
}

}  // namespace

GradCheckReport run_gradient_checks(int instances_per_family, std::uint64_t seed, double step,
                                    double rel_tol) {
    Harness h;
    h.step = step;
    h.rel_tol = rel_tol;

    Rng rng(derive_seed(seed, /*stream=*/0x96adc));
    check_direct_losses(h, instances_per_family, rng);
    h.report.instances += instances_per_family * 3;
    check_net_family(h, "ce-net", instances_per_family, rng, /*use_ce=*/true);
    h.report.instances += instances_per_family;
    check_net_family(h, "mse-net", instances_per_family, rng, /*use_ce=*/false);
    h.report.instances += instances_per_family;
    check_model_family(h, "d-model", instances_per_family, rng, ModelKind::discriminative);
    check_model_family(h, "ae-model", instances_per_family, rng, ModelKind::autoencoder);
    check_model_family(h, "vae-model", instances_per_family, rng, ModelKind::vae);
    h.report.instances += instances_per_family * 3;
    return h.report;
}

}  // namespace fp
