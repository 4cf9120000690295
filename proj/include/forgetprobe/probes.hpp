#pragma once

#include <vector>

#include "forgetprobe/matrix.hpp"

namespace fp {

// Linear softmax probe over frozen representations. Weights are stored one
// row per class (classes x rep_width) so that scoring a batch is a single
// matmul_nt over contiguous rows.
struct Probe {
    Matrix weights;  // classes x rep_width, zero before training
    Matrix bias;     // 1 x classes
    int classes = 0;

    bool is_zero() const;
};

Probe make_probe(int classes, int rep_width);

struct ProbeTrainConfig {
    int steps = 200;
    float learning_rate = 1e-2f;
};

// Full-batch softmax regression from a zero start: `steps` Adam steps on the
// cross-entropy over (reps, labels). Deterministic — no randomness anywhere.
Probe train_probe(const Matrix& reps, const std::vector<int>& labels, int classes,
                  const ProbeTrainConfig& cfg = {});

// Mean argmax accuracy; ties resolve to the lowest class id, so an untrained
// (all-zero) probe predicts class 0 everywhere.
double evaluate_probe(const Probe& probe, const Matrix& reps, const std::vector<int>& labels);

// The per-epoch measurement discipline:
//   - while task k is being learned, probe k is retrained from scratch each
//     epoch on the current train-split representations;
//   - when task k ends its probe freezes, and any further retraining attempt
//     is a ProtocolError;
//   - every probe (trained or not) is evaluated every epoch, so curves for
//     later tasks start at the untrained baseline.
class FrozenProbeProtocol {
public:
    FrozenProbeProtocol(int n_tasks, int rep_width, int classes_per_task,
                        const ProbeTrainConfig& cfg = {});

    // Retrains probe `task_k` (1-based) and returns accuracy of probe j on
    // val_reps[j-1] / val_labels[j-1] for every task j.
    std::vector<double> on_epoch_end(int task_k, const Matrix& train_reps,
                                     const std::vector<int>& train_labels,
                                     const std::vector<const Matrix*>& val_reps,
                                     const std::vector<const std::vector<int>*>& val_labels);

    void end_task(int task_k);

    const Probe& probe(int task_j) const;
    bool frozen(int task_j) const;
    int n_tasks() const { return static_cast<int>(probes_.size()); }

private:
    std::vector<Probe> probes_;
    std::vector<bool> frozen_;
    ProbeTrainConfig cfg_;
};

}  // namespace fp
