#include "forgetprobe/losses.hpp"

#include <cmath>

#include "forgetprobe/errors.hpp"

namespace fp {

Matrix softmax_rows(const Matrix& logits) {
    Matrix p(logits.rows, logits.cols);
    for (int i = 0; i < logits.rows; ++i) {
        const float* in = logits.row(i);
        float* out = p.row(i);
        float mx = in[0];
        for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, in[j]);
        float denom = 0.0f;
        for (int j = 0; j < logits.cols; ++j) {
            out[j] = std::exp(in[j] - mx);
            denom += out[j];
        }
        for (int j = 0; j < logits.cols; ++j) out[j] /= denom;
    }
    return p;
}

LossGrad cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
    if (logits.rows != static_cast<int>(labels.size()))
        throw DimensionError("cross_entropy: " + std::to_string(logits.rows) + " rows vs " +
                             std::to_string(labels.size()) + " labels");
    if (logits.rows == 0) throw DimensionError("cross_entropy: empty batch");
    for (int i = 0; i < logits.rows; ++i)
        if (labels[i] < 0 || labels[i] >= logits.cols)
            throw DimensionError("cross_entropy: label " + std::to_string(labels[i]) +
                                 " out of range for " + std::to_string(logits.cols) + " classes");

    LossGrad result;
    result.grad = softmax_rows(logits);
    double total = 0.0;
    const float inv_n = 1.0f / static_cast<float>(logits.rows);
    for (int i = 0; i < logits.rows; ++i) {
        float* row = result.grad.row(i);
        // log(p[label]) recomputed stably from the logits rather than from the
        // clipped probability.
        const float* in = logits.row(i);
        float mx = in[0];
        for (int j = 1; j < logits.cols; ++j) mx = std::max(mx, in[j]);
        double denom = 0.0;
        for (int j = 0; j < logits.cols; ++j) denom += std::exp(static_cast<double>(in[j] - mx));
        total += std::log(denom) - static_cast<double>(in[labels[i]] - mx);
        row[labels[i]] -= 1.0f;
        for (int j = 0; j < logits.cols; ++j) row[j] *= inv_n;
    }
    result.loss = total / logits.rows;
    return result;
}

LossGrad mse(const Matrix& output, const Matrix& target) {
    if (!output.same_shape(target))
        throw DimensionError("mse: " + output.shape_str() + " vs " + target.shape_str());
    if (output.rows == 0) throw DimensionError("mse: empty batch");
    LossGrad result;
    result.grad = Matrix(output.rows, output.cols);
    double total = 0.0;
    const float scale = 2.0f / static_cast<float>(output.size());
    for (std::size_t i = 0; i < output.data.size(); ++i) {
        float d = output.data[i] - target.data[i];
        total += static_cast<double>(d) * d;
        result.grad.data[i] = scale * d;
    }
    result.loss = total / static_cast<double>(output.size());
    return result;
}

ElboResult elbo(const Matrix& recon, const Matrix& target, const Matrix& mu,
                const Matrix& logvar) {
    if (!recon.same_shape(target))
        throw DimensionError("elbo: recon " + recon.shape_str() + " vs target " +
                             target.shape_str());
    if (!mu.same_shape(logvar))
        throw DimensionError("elbo: mu " + mu.shape_str() + " vs logvar " + logvar.shape_str());
    if (recon.rows != mu.rows)
        throw DimensionError("elbo: recon has " + std::to_string(recon.rows) + " rows, mu has " +
                             std::to_string(mu.rows));
    if (recon.rows == 0) throw DimensionError("elbo: empty batch");

    ElboResult result;
    const int n = recon.rows;
    const float inv_n = 1.0f / static_cast<float>(n);

    result.recon_grad = Matrix(recon.rows, recon.cols);
    double recon_total = 0.0;
    for (std::size_t i = 0; i < recon.data.size(); ++i) {
        float d = recon.data[i] - target.data[i];
        recon_total += static_cast<double>(d) * d;
        result.recon_grad.data[i] = 2.0f * inv_n * d;
    }
    result.recon_term = recon_total / n;

    result.mu_grad = Matrix(mu.rows, mu.cols);
    result.logvar_grad = Matrix(mu.rows, mu.cols);
    double kl_total = 0.0;
    for (std::size_t i = 0; i < mu.data.size(); ++i) {
        float m = mu.data[i];
        float lv = logvar.data[i];
        float ev = std::exp(lv);
        kl_total += -0.5 * (1.0 + static_cast<double>(lv) - static_cast<double>(m) * m -
                            static_cast<double>(ev));
        result.mu_grad.data[i] = inv_n * m;
        result.logvar_grad.data[i] = 0.5f * inv_n * (ev - 1.0f);
    }
    result.kl_term = kl_total / n;
    result.loss = result.recon_term + result.kl_term;
    return result;
}

}  // namespace fp
