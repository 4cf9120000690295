#pragma once

#include <vector>

#include "forgetprobe/matrix.hpp"

namespace fp {

struct LossGrad {
    double loss = 0.0;
    Matrix grad;  // d loss / d first argument
};

// Mean over rows of -log softmax(logits)[label]. Stable (row-max shifted);
// labels must lie in [0, logits.cols).
LossGrad cross_entropy(const Matrix& logits, const std::vector<int>& labels);

// Mean squared error over all entries.
LossGrad mse(const Matrix& output, const Matrix& target);

struct ElboResult {
    double loss = 0.0;        // recon_term + kl_term
    double recon_term = 0.0;  // mean over rows of the summed squared error
    double kl_term = 0.0;     // mean over rows of -1/2 sum(1 + lv - mu^2 - exp(lv))
    Matrix recon_grad;        // d loss / d recon
    Matrix mu_grad;           // d loss / d mu      (KL path; recon is a separate input)
    Matrix logvar_grad;       // d loss / d logvar
};

// Negative ELBO for a unit-variance Gaussian decoder and a standard-normal
// prior, as a pure function of its four matrix arguments.
ElboResult elbo(const Matrix& recon, const Matrix& target, const Matrix& mu,
                const Matrix& logvar);

// Row-wise softmax; shared by cross_entropy and the probes.
Matrix softmax_rows(const Matrix& logits);

}  // namespace fp
