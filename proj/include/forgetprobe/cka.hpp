#pragma once

#include <vector>

#include "forgetprobe/matrix.hpp"

namespace fp {

// Linear centered kernel alignment between two representation matrices with
// matched rows (same examples):
//
//   CKA(X, Y) = ||Xc^T Yc||_F^2 / (||Xc^T Xc||_F ||Yc^T Yc||_F)
//
// where Xc, Yc are column-centered. All products and reductions accumulate in
// 64-bit, so the result is invariant (to ~1e-6) under orthogonal maps and
// isotropic scaling as the definition promises. Throws DimensionError on row
// mismatch or fewer than 2 rows, NumericError on non-finite inputs, and
// DegenerateInputError when either matrix has zero variance after centering.
double linear_cka(const Matrix& x, const Matrix& y);

// Per-task representation references and their drift curves. At the final
// epoch of task k, `set_reference(k, reps_k)` stores (up to `max_samples`
// rows of) the representations of task k's val examples; from then on,
// `compare` scores the current model's representations of the same rows
// against each stored reference.
class DriftProtocol {
public:
    explicit DriftProtocol(int n_tasks, int max_samples = 2000);

    void set_reference(int task_k, const Matrix& reps);
    bool has_reference(int task_k) const;
    int reference_rows(int task_k) const;

    // current[j-1] must hold representations of task j's val examples in the
    // same fixed order used for the references. Returns (task, cka) for every
    // task with a reference.
    std::vector<std::pair<int, double>> compare(
        const std::vector<const Matrix*>& current) const;

    int n_tasks() const { return static_cast<int>(references_.size()); }
    int max_samples() const { return max_samples_; }

private:
    std::vector<Matrix> references_;  // empty until set
    int max_samples_;
};

}  // namespace fp
