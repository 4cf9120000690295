#include "forgetprobe/probes.hpp"

#include "forgetprobe/errors.hpp"
#include "forgetprobe/losses.hpp"
#include "forgetprobe/optim.hpp"

namespace fp {

bool Probe::is_zero() const {
    for (float x : weights.data)
        if (x != 0.0f) return false;
    for (float x : bias.data)
        if (x != 0.0f) return false;
    return true;
}

Probe make_probe(int classes, int rep_width) {
    if (classes < 2) throw ConfigError("make_probe: need at least 2 classes");
    if (rep_width <= 0) throw ConfigError("make_probe: rep_width must be positive");
    Probe p;
    p.classes = classes;
    p.weights = Matrix(classes, rep_width, 0.0f);
    p.bias = Matrix(1, classes, 0.0f);
    return p;
}

Probe train_probe(const Matrix& reps, const std::vector<int>& labels, int classes,
                  const ProbeTrainConfig& cfg) {
    if (reps.rows != static_cast<int>(labels.size()))
        throw DimensionError("train_probe: " + std::to_string(reps.rows) + " rows vs " +
                             std::to_string(labels.size()) + " labels");
    if (reps.rows == 0) throw DimensionError("train_probe: empty representation set");
    for (int lab : labels)
        if (lab < 0 || lab >= classes)
            throw DimensionError("train_probe: label " + std::to_string(lab) +
                                 " out of range for " + std::to_string(classes) + " classes");

    Probe p = make_probe(classes, reps.cols);
    OptimizerState opt = make_adam_for({&p.weights, &p.bias}, cfg.learning_rate);
    for (int step = 0; step < cfg.steps; ++step) {
        Matrix logits = matmul_nt(reps, p.weights);
        add_row_inplace(logits, p.bias);
        LossGrad ce = cross_entropy(logits, labels);
        Matrix w_grad = matmul_tn(ce.grad, reps);  // classes x rep_width
        Matrix b_grad = column_sums(ce.grad);
        adam_update(opt, {&p.weights, &p.bias}, {&w_grad, &b_grad});
    }
    return p;
}

double evaluate_probe(const Probe& probe, const Matrix& reps, const std::vector<int>& labels) {
    if (reps.rows != static_cast<int>(labels.size()))
        throw DimensionError("evaluate_probe: " + std::to_string(reps.rows) + " rows vs " +
                             std::to_string(labels.size()) + " labels");
    if (reps.cols != probe.weights.cols)
        throw DimensionError("evaluate_probe: rep width " + std::to_string(reps.cols) +
                             " != probe width " + std::to_string(probe.weights.cols));
    if (reps.rows == 0) throw DimensionError("evaluate_probe: empty set");
    for (int lab : labels)
        if (lab < 0 || lab >= probe.classes)
            throw DimensionError("evaluate_probe: label " + std::to_string(lab) +
                                 " out of range for " + std::to_string(probe.classes) +
                                 " classes");

    Matrix logits = matmul_nt(reps, probe.weights);
    add_row_inplace(logits, probe.bias);
    int correct = 0;
    for (int i = 0; i < logits.rows; ++i) {
        const float* row = logits.row(i);
        int best = 0;
        for (int c = 1; c < logits.cols; ++c)
            if (row[c] > row[best]) best = c;  // ties keep the lowest class id
        if (best == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / logits.rows;
}

FrozenProbeProtocol::FrozenProbeProtocol(int n_tasks, int rep_width, int classes_per_task,
                                         const ProbeTrainConfig& cfg)
    : cfg_(cfg) {
    if (n_tasks <= 0) throw ConfigError("FrozenProbeProtocol: n_tasks must be positive");
    for (int t = 0; t < n_tasks; ++t) probes_.push_back(make_probe(classes_per_task, rep_width));
    frozen_.assign(static_cast<std::size_t>(n_tasks), false);
}

std::vector<double> FrozenProbeProtocol::on_epoch_end(
    int task_k, const Matrix& train_reps, const std::vector<int>& train_labels,
    const std::vector<const Matrix*>& val_reps,
    const std::vector<const std::vector<int>*>& val_labels) {
    if (task_k < 1 || task_k > n_tasks())
        throw ConfigError("FrozenProbeProtocol: task " + std::to_string(task_k) +
                          " out of range");
    if (static_cast<int>(val_reps.size()) != n_tasks() || val_labels.size() != val_reps.size())
        throw DimensionError("FrozenProbeProtocol: need one val set per task");
    if (frozen_[static_cast<std::size_t>(task_k - 1)])
        throw ProtocolError("FrozenProbeProtocol: probe " + std::to_string(task_k) +
                            " is frozen and may not be retrained");

    Probe& active = probes_[static_cast<std::size_t>(task_k - 1)];
    active = train_probe(train_reps, train_labels, active.classes, cfg_);

    std::vector<double> accuracies(static_cast<std::size_t>(n_tasks()));
    for (int j = 0; j < n_tasks(); ++j)
        accuracies[static_cast<std::size_t>(j)] = evaluate_probe(
            probes_[static_cast<std::size_t>(j)], *val_reps[static_cast<std::size_t>(j)],
            *val_labels[static_cast<std::size_t>(j)]);
    return accuracies;
}

void FrozenProbeProtocol::end_task(int task_k) {
    if (task_k < 1 || task_k > n_tasks())
        throw ConfigError("FrozenProbeProtocol: task " + std::to_string(task_k) +
                          " out of range");
    if (frozen_[static_cast<std::size_t>(task_k - 1)])
        throw ProtocolError("FrozenProbeProtocol: task " + std::to_string(task_k) +
                            " already ended");
    frozen_[static_cast<std::size_t>(task_k - 1)] = true;
}

const Probe& FrozenProbeProtocol::probe(int task_j) const {
    if (task_j < 1 || task_j > n_tasks())
        throw ConfigError("FrozenProbeProtocol: task " + std::to_string(task_j) +
                          " out of range");
    return probes_[static_cast<std::size_t>(task_j - 1)];
}

bool FrozenProbeProtocol::frozen(int task_j) const {
    if (task_j < 1 || task_j > n_tasks())
        throw ConfigError("FrozenProbeProtocol: task " + std::to_string(task_j) +
                          " out of range");
    return frozen_[static_cast<std::size_t>(task_j - 1)];
}

}  // namespace fp
