#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fp {

struct GradCheckReport {
    int instances = 0;    // random instances exercised across all families
    int comparisons = 0;  // individual derivative comparisons
    int failures = 0;
    double max_rel_err = 0.0;
    std::vector<std::string> messages;  // one line per failing comparison (capped)

    bool passed() const { return instances > 0 && failures == 0; }
};

// Validates every analytic gradient path against central finite differences
// computed by an independent double-precision re-implementation of the
// forward computations (the only 64-bit code in the stack). Families:
//   ce-direct / mse-direct / elbo-direct  — loss input gradients
//   ce-net / mse-net                      — MLP weight + input gradients
//   d-model / ae-model / vae-model        — full composite segment gradients
// Each family draws `instances_per_family` small random instances; instances
// whose ReLU pre-activations sit within 5e-3 of the kink are redrawn so the
// difference quotient stays on one linear piece. A comparison passes when
// |analytic - fd| <= max(rel_tol * max(|analytic|, |fd|), 1e-5); the absolute
// floor absorbs float32 rounding on near-zero derivatives.
GradCheckReport run_gradient_checks(int instances_per_family = 50, std::uint64_t seed = 1,
                                    double step = 1e-4, double rel_tol = 1e-3);

}  // namespace fp
