#pragma once

#include <cstdint>
#include <set>
#include <string>

#include "forgetprobe/datasets.hpp"
#include "forgetprobe/metrics.hpp"
#include "forgetprobe/models.hpp"
#include "forgetprobe/probes.hpp"

namespace fp {

// Everything one run needs. Zeros mean "dataset default" where noted.
struct RunConfig {
    std::string dataset = "mnist";
    ModelKind model = ModelKind::autoencoder;
    std::uint64_t seed = 1;
    int epochs_per_task = 0;  // 0 -> 20 (mnist/fashion) or 40 (cifar10)
    int batch_size = 128;
    float learning_rate = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;
    int bottleneck = 0;  // 0 -> 8 (mnist/fashion) or 128 (cifar10)
    int n_tasks = 5;
    int classes_per_task = 2;
    int h1 = 512;  // trunk widths; production values, shrinkable for studies
    int h2 = 256;
    ProbeTrainConfig probe;
    int cka_max_samples = 2000;
    std::string data_dir;

    int resolved_epochs_per_task() const;
    int resolved_bottleneck() const;
    void validate() const;  // throws ConfigError
};

// Parses "e1,e3" / "all" into a validated set.
std::set<std::string> parse_experiment_list(const std::string& spec);

// Loads the configured dataset and builds the task sequence (val = the
// canonical test split, so the sequence is seed-independent and shareable
// across runs).
TaskSequence prepare_tasks(const RunConfig& cfg);

// Which per-epoch measurements run during the training pass.
struct HookSet {
    bool probes = false;  // e1: frozen-probe accuracy curves
    bool cka = false;     // e2: representation drift curves
    bool recon = false;   // e4: all tasks' val reconstruction loss (task-1 epochs)
};

// Trains the configured model through the first `train_tasks` tasks of the
// sequence (0 = all of them), invoking the enabled measurement hooks at the
// end of every epoch (hooks see a const model and perturb nothing), and
// returns the trained model. If `task1_out` is non-null it receives a copy of
// the model as it stood at the end of task 1. Record layout:
//   e1: metric=accuracy, task=j (probe), epoch=global epoch, all probes every
//       epoch; metric=train_loss, task=current, one row per epoch
//   e2: metric=cka, task=j (reference task), epoch=global epoch, emitted once
//       task j's reference exists (its curve starts at 1 by construction)
//   e4: metric=recon_loss, task=j (the val split measured), epoch=global
//       epoch, one row per task per epoch while task 1 trains; later tasks'
//       epochs emit nothing, so e4 rows are identical whether or not training
//       continues past task 1
// Global epochs are 1-based across the sequence.
ModelState run_training_pass(const RunConfig& cfg, const TaskSequence& seq,
                             const HookSet& hooks, MetricSink& sink, int train_tasks = 0,
                             ModelState* task1_out = nullptr);

// e3: on a model trained through task 1 only, trains per-task 2-way probes
// (task=j rows) and one joint probe over the union of all tasks with the
// original class labels (task=0 row), evaluating on the val splits. The
// backbone is never updated. epoch = last task-1 epoch.
void probe_transfer(const RunConfig& cfg, const ModelState& model, const TaskSequence& seq,
                    MetricSink& sink);

// Runs the requested experiments on a prepared sequence. e1/e2 need the full
// task sequence; e3/e4 concern the model as trained on task 1 only. One
// training pass serves every requested experiment: when e1 or e2 is present
// the pass covers all tasks and e3/e4 read the task-1 snapshot of that same
// trajectory; otherwise training stops after task 1. Returns the pass's
// final model.
ModelState run_experiments_on(const RunConfig& cfg, const TaskSequence& seq,
                              const std::set<std::string>& experiments, MetricSink& sink);

// Convenience: prepare_tasks + run_experiments_on.
void run_experiments(const RunConfig& cfg, const std::set<std::string>& experiments,
                     MetricSink& sink);

}  // namespace fp
