#include "forgetprobe/experiments.hpp"

#include <algorithm>

#include "forgetprobe/cka.hpp"
#include "forgetprobe/errors.hpp"

namespace fp {

namespace {
enum RunStream : std::uint64_t {
    kModelStream = 11,
    kNoiseStream = 12,
    kBatchStream = 13,
};
}  // namespace

int RunConfig::resolved_epochs_per_task() const {
    return epochs_per_task > 0 ? epochs_per_task : dataset_default_epochs_per_task(dataset);
}

int RunConfig::resolved_bottleneck() const {
    return bottleneck > 0 ? bottleneck : dataset_default_bottleneck(dataset);
}

void RunConfig::validate() const {
    if (!is_known_dataset(dataset)) throw ConfigError("unknown dataset '" + dataset + "'");
    if (epochs_per_task < 0) throw ConfigError("epochs-per-task must be positive");
    if (batch_size <= 0) throw ConfigError("batch-size must be positive");
    if (bottleneck < 0) throw ConfigError("bottleneck must be positive");
    if (learning_rate <= 0.0f) throw ConfigError("learning-rate must be positive");
    if (n_tasks <= 0 || classes_per_task <= 0)
        throw ConfigError("n_tasks and classes_per_task must be positive");
    if (n_tasks * classes_per_task > 10)
        throw ConfigError("n_tasks * classes_per_task exceeds the 10 available classes");
    if (h1 <= 0 || h2 <= 0) throw ConfigError("trunk widths must be positive");
    if (probe.steps <= 0 || probe.learning_rate <= 0.0f)
        throw ConfigError("probe steps and learning rate must be positive");
    if (cka_max_samples < 2) throw ConfigError("cka-max-samples must be at least 2");
}

std::set<std::string> parse_experiment_list(const std::string& spec) {
    std::set<std::string> out;
    if (spec == "all") return {"e1", "e2", "e3", "e4"};
    std::size_t start = 0;
    while (start <= spec.size()) {
        std::size_t comma = spec.find(',', start);
        std::string item = spec.substr(
            start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!item.empty()) {
            if (item != "e1" && item != "e2" && item != "e3" && item != "e4")
                throw ConfigError("unknown experiment '" + item +
                                  "' (want e1..e4 or all)");
            out.insert(item);
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) throw ConfigError("no experiments selected");
    return out;
}

TaskSequence prepare_tasks(const RunConfig& cfg) {
    cfg.validate();
    DatasetPair pair = load_dataset(cfg.dataset, cfg.data_dir);
    TaskSequence seq =
        split_tasks(pair.train, pair.test, cfg.n_tasks, cfg.classes_per_task, cfg.seed);
    seq.dataset = cfg.dataset;
    return seq;
}

ModelState run_training_pass(const RunConfig& cfg, const TaskSequence& seq,
                             const HookSet& hooks, MetricSink& sink, int train_tasks,
                             ModelState* task1_out) {
    cfg.validate();
    if (seq.n_tasks() != cfg.n_tasks)
        throw ConfigError("run_training_pass: sequence has " + std::to_string(seq.n_tasks()) +
                          " tasks, config expects " + std::to_string(cfg.n_tasks));
    if (hooks.recon && cfg.model == ModelKind::discriminative)
        throw ConfigError("reconstruction hook requires a generative model");
    if (train_tasks < 0 || train_tasks > cfg.n_tasks)
        throw ConfigError("run_training_pass: train_tasks " + std::to_string(train_tasks) +
                          " out of range for " + std::to_string(cfg.n_tasks) + " tasks");
    const int last_task = train_tasks == 0 ? cfg.n_tasks : train_tasks;

    const int input_dim = seq.tasks.front().train.dim();
    const int epochs = cfg.resolved_epochs_per_task();
    ModelState model = build_model(cfg.model, input_dim, cfg.n_tasks, cfg.resolved_bottleneck(),
                                   derive_seed(cfg.seed, kModelStream), cfg.h1, cfg.h2);
    ModelOptimizer opt = make_model_optimizer(model, cfg.learning_rate, cfg.beta1, cfg.beta2,
                                              cfg.epsilon);
    Rng noise(derive_seed(cfg.seed, kNoiseStream));

    FrozenProbeProtocol probes(cfg.n_tasks, model.rep_width(), cfg.classes_per_task, cfg.probe);
    DriftProtocol drift(cfg.n_tasks, cfg.cka_max_samples);

    // train_loss rows ride on whichever curve experiment is active.
    const std::string primary = hooks.probes ? "e1" : (hooks.cka ? "e2" : "e4");
    const std::string ds = seq.dataset.empty() ? cfg.dataset : seq.dataset;
    const std::string model_name = to_string(cfg.model);
    const bool any_hook = hooks.probes || hooks.cka || hooks.recon;

    int global_epoch = 0;
    for (int k = 1; k <= last_task; ++k) {
        const Task& task = seq.tasks[static_cast<std::size_t>(k - 1)];
        BatchStream stream(task.train.inputs, task.train_local, cfg.batch_size,
                           derive_seed(cfg.seed, kBatchStream, static_cast<std::uint64_t>(k)));
        for (int e = 0; e < epochs; ++e) {
            ++global_epoch;
            stream.begin_epoch(e);
            ModelGradients grads;
            Matrix x;
            std::vector<int> y;
            double loss_sum = 0.0;
            int n_batches = 0;
            while (stream.next(x, y)) {
                ModelLoss loss = model_loss(model, x, y, k, noise, &grads);
                apply_gradients(model, opt, grads);
                loss_sum += loss.loss;
                ++n_batches;
            }

            if (!any_hook) continue;
            sink.emit({primary, model_name, ds, cfg.seed, k, global_epoch, "train_loss",
                       loss_sum / n_batches});

            // One extraction of every task's val representations serves both
            // probes and CKA; CKA-only passes extract just the capped prefix.
            std::vector<Matrix> val_reps;
            if (hooks.probes || hooks.cka) {
                val_reps.reserve(static_cast<std::size_t>(cfg.n_tasks));
                for (const Task& tj : seq.tasks) {
                    if (hooks.probes) {
                        val_reps.push_back(extract_representations(model, tj.val.inputs));
                    } else {
                        int take = std::min(cfg.cka_max_samples, tj.val.size());
                        Matrix prefix(take, tj.val.dim());
                        std::copy(tj.val.inputs.data.begin(),
                                  tj.val.inputs.data.begin() +
                                      static_cast<std::size_t>(take) * tj.val.dim(),
                                  prefix.data.begin());
                        val_reps.push_back(extract_representations(model, prefix));
                    }
                }
            }

            if (hooks.probes) {
                Matrix train_reps = extract_representations(model, task.train.inputs);
                std::vector<const Matrix*> val_ptrs;
                std::vector<const std::vector<int>*> label_ptrs;
                for (int j = 0; j < cfg.n_tasks; ++j) {
                    val_ptrs.push_back(&val_reps[static_cast<std::size_t>(j)]);
                    label_ptrs.push_back(&seq.tasks[static_cast<std::size_t>(j)].val_local);
                }
                std::vector<double> accs =
                    probes.on_epoch_end(k, train_reps, task.train_local, val_ptrs, label_ptrs);
                for (int j = 1; j <= cfg.n_tasks; ++j)
                    sink.emit({"e1", model_name, ds, cfg.seed, j, global_epoch, "accuracy",
                               accs[static_cast<std::size_t>(j - 1)]});
            }

            // Reconstruction is tracked while the model learns task 1: every
            // task's val split, no finetuning, so the curves show how far the
            // task-1 solution already transfers.
            if (hooks.recon && k == 1)
                for (int j = 1; j <= cfg.n_tasks; ++j)
                    sink.emit({"e4", model_name, ds, cfg.seed, j, global_epoch, "recon_loss",
                               reconstruction_loss(
                                   model, seq.tasks[static_cast<std::size_t>(j - 1)].val.inputs)});

            if (hooks.cka) {
                if (e == epochs - 1)
                    drift.set_reference(k, val_reps[static_cast<std::size_t>(k - 1)]);
                std::vector<const Matrix*> cur;
                for (const Matrix& m : val_reps) cur.push_back(&m);
                for (const auto& [j, value] : drift.compare(cur))
                    sink.emit({"e2", model_name, ds, cfg.seed, j, global_epoch, "cka", value});
            }
        }
        if (hooks.probes) probes.end_task(k);
        if (k == 1 && task1_out) *task1_out = model;
    }
    return model;
}

void probe_transfer(const RunConfig& cfg, const ModelState& model, const TaskSequence& seq,
                    MetricSink& sink) {
    const int final_epoch = cfg.resolved_epochs_per_task();  // last task-1 epoch
    const std::string ds = seq.dataset.empty() ? cfg.dataset : seq.dataset;
    const std::string model_name = to_string(model.kind);

    for (const Task& task : seq.tasks) {
        Matrix train_reps = extract_representations(model, task.train.inputs);
        Probe probe = train_probe(train_reps, task.train_local,
                                  static_cast<int>(task.classes.size()), cfg.probe);
        Matrix val_reps = extract_representations(model, task.val.inputs);
        double acc = evaluate_probe(probe, val_reps, task.val_local);
        sink.emit({"e3", model_name, ds, cfg.seed, task.index, final_epoch, "accuracy", acc});
    }

    // Joint probe over the union of all tasks, original class labels.
    int n_train = 0, n_val = 0, n_classes = 0;
    for (const Task& task : seq.tasks) {
        n_train += task.train.size();
        n_val += task.val.size();
        n_classes += static_cast<int>(task.classes.size());
    }
    const int dim = seq.tasks.front().train.dim();
    Matrix train_union(n_train, dim);
    std::vector<int> train_labels;
    train_labels.reserve(static_cast<std::size_t>(n_train));
    Matrix val_union(n_val, dim);
    std::vector<int> val_labels;
    val_labels.reserve(static_cast<std::size_t>(n_val));
    int tr = 0, vr = 0;
    for (const Task& task : seq.tasks) {
        std::copy(task.train.inputs.data.begin(), task.train.inputs.data.end(),
                  train_union.row(tr));
        train_labels.insert(train_labels.end(), task.train.labels.begin(),
                            task.train.labels.end());
        tr += task.train.size();
        std::copy(task.val.inputs.data.begin(), task.val.inputs.data.end(), val_union.row(vr));
        val_labels.insert(val_labels.end(), task.val.labels.begin(), task.val.labels.end());
        vr += task.val.size();
    }

    Matrix train_reps = extract_representations(model, train_union);
    Probe joint = train_probe(train_reps, train_labels, n_classes, cfg.probe);
    Matrix val_reps = extract_representations(model, val_union);
    double acc = evaluate_probe(joint, val_reps, val_labels);
    sink.emit({"e3", model_name, ds, cfg.seed, 0, final_epoch, "accuracy", acc});
}

ModelState run_experiments_on(const RunConfig& cfg, const TaskSequence& seq,
                              const std::set<std::string>& experiments, MetricSink& sink) {
    cfg.validate();
    if (experiments.empty()) throw ConfigError("no experiments selected");
    for (const std::string& e : experiments)
        if (e != "e1" && e != "e2" && e != "e3" && e != "e4")
            throw ConfigError("unknown experiment '" + e + "'");
    if (experiments.count("e4") && cfg.model == ModelKind::discriminative)
        throw ConfigError("e4 measures reconstruction and requires a generative model (ae|vae)");

    HookSet hooks;
    hooks.probes = experiments.count("e1") > 0;
    hooks.cka = experiments.count("e2") > 0;
    hooks.recon = experiments.count("e4") > 0;
    const bool full_sequence = hooks.probes || hooks.cka;
    const bool wants_task1 = experiments.count("e3") > 0 || hooks.recon;

    if (full_sequence) {
        ModelState task1;
        ModelState model = run_training_pass(cfg, seq, hooks, sink, 0,
                                             wants_task1 ? &task1 : nullptr);
        if (experiments.count("e3")) probe_transfer(cfg, task1, seq, sink);
        return model;
    }
    ModelState model = run_training_pass(cfg, seq, hooks, sink, /*train_tasks=*/1);
    if (experiments.count("e3")) probe_transfer(cfg, model, seq, sink);
    return model;
}

void run_experiments(const RunConfig& cfg, const std::set<std::string>& experiments,
                     MetricSink& sink) {
    TaskSequence seq = prepare_tasks(cfg);
    run_experiments_on(cfg, seq, experiments, sink);
}

}  // namespace fp
