// Acceptance gate: drives the real pipeline against the staged datasets and
// checks the headline results, printing one PASS/FAIL line per criterion.
// Progress goes to stderr; the verdict block and the derived tables go to
// stdout. Exit 0 iff every criterion passes.
//
// Criteria:
//   1 per-task probe ordering after task-1 training (ae > d, vae > d) on all
//     three datasets
//   2 per-task probe magnitudes on mnist/fashion
//   3 joint probe ordering (ae > vae > d) everywhere, ae-d gap on mnist
//   4 frozen-probe endpoint behaviour on mnist (d collapses to chance, ae/vae
//     hold, ae average stays high)
//   5 CKA drift endpoints and drop location on mnist
//   6 every task's reconstruction improves over task-1 training (ae, mnist)
//   7 property suite: gradients, CKA invariances, KL sign, task splits,
//     probe freezing, backbone non-perturbation, pipeline determinism

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "forgetprobe/cka.hpp"
#include "forgetprobe/datasets.hpp"
#include "forgetprobe/errors.hpp"
#include "forgetprobe/experiments.hpp"
#include "forgetprobe/gradcheck.hpp"
#include "forgetprobe/losses.hpp"
#include "forgetprobe/metrics_io.hpp"
#include "forgetprobe/models.hpp"
#include "forgetprobe/probes.hpp"
#include "forgetprobe/report.hpp"
#include "forgetprobe/rng.hpp"

namespace fs = std::filesystem;
using namespace fp;

namespace {

std::vector<MetricRecord> g_records;  // every sweep run's records

struct Verdict {
    bool pass = false;
    std::string detail;
};

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v * 100.0);
    return buf;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

void progress(const std::string& line) {
    std::fprintf(stderr, "[acceptance] %s\n", line.c_str());
    std::fflush(stderr);
}

// ---------------------------------------------------------------------------
// Criterion 7 helpers

std::uint64_t fnv64(const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

Matrix random_matrix(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    for (float& v : m.data) v = rng.normal();
    return m;
}

// Double-precision Gram-Schmidt orthogonal matrix (two passes).
std::vector<double> random_orthogonal(int n, Rng& rng) {
    std::vector<double> q(static_cast<std::size_t>(n) * n);
    for (double& v : q) v = rng.normal();
    for (int c = 0; c < n; ++c) {
        for (int pass = 0; pass < 2; ++pass)
            for (int prev = 0; prev < c; ++prev) {
                double dot = 0.0;
                for (int r = 0; r < n; ++r)
                    dot += q[static_cast<std::size_t>(r) * n + c] *
                           q[static_cast<std::size_t>(r) * n + prev];
                for (int r = 0; r < n; ++r)
                    q[static_cast<std::size_t>(r) * n + c] -=
                        dot * q[static_cast<std::size_t>(r) * n + prev];
            }
        double norm = 0.0;
        for (int r = 0; r < n; ++r) {
            double v = q[static_cast<std::size_t>(r) * n + c];
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (int r = 0; r < n; ++r) q[static_cast<std::size_t>(r) * n + c] /= norm;
    }
    return q;
}

// Independent HSIC/Gram-matrix formulation of linear CKA, all in double.
double cka_gram_oracle(const Matrix& x, const Matrix& y) {
    const int n = x.rows;
    auto gram = [n](const Matrix& m) {
        std::vector<double> g(static_cast<std::size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double dot = 0.0;
                for (int k = 0; k < m.cols; ++k)
                    dot += static_cast<double>(m(i, k)) * static_cast<double>(m(j, k));
                g[static_cast<std::size_t>(i) * n + j] = dot;
            }
        return g;
    };
    auto center = [n](std::vector<double>& g) {
        std::vector<double> row_mean(static_cast<std::size_t>(n), 0.0);
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) row_mean[static_cast<std::size_t>(i)] +=
                g[static_cast<std::size_t>(i) * n + j];
            row_mean[static_cast<std::size_t>(i)] /= n;
            total += row_mean[static_cast<std::size_t>(i)];
        }
        total /= n;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                g[static_cast<std::size_t>(i) * n + j] +=
                    total - row_mean[static_cast<std::size_t>(i)] -
                    row_mean[static_cast<std::size_t>(j)];
    };
    std::vector<double> k = gram(x), l = gram(y);
    center(k);
    center(l);
    double kl = 0.0, kk = 0.0, ll = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        kl += k[i] * l[i];
        kk += k[i] * k[i];
        ll += l[i] * l[i];
    }
    return kl / std::sqrt(kk * ll);
}

struct PropertyResult {
    bool pass = true;
    std::vector<std::string> notes;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            notes.push_back(what);
        }
    }
};

void property_gradients(PropertyResult& out) {
    GradCheckReport report = run_gradient_checks(50, 1);
    out.check(report.passed(),
              "gradient checks: " + std::to_string(report.failures) + " failures in " +
                  std::to_string(report.comparisons) + " comparisons");
    progress("gradcheck: " + std::to_string(report.instances) + " instances, " +
             std::to_string(report.comparisons) + " comparisons, max rel err " +
             num(report.max_rel_err));
}

void property_cka(PropertyResult& out) {
    const double tol = 1e-5;
    Rng rng(20240816);
    double worst_identity = 0.0, worst_sym = 0.0, worst_orth = 0.0, worst_scale = 0.0,
           worst_oracle = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 60 + 10 * trial, p = 24, q = 17;
        Matrix x = random_matrix(n, p, rng);
        Matrix y = random_matrix(n, q, rng);

        worst_identity = std::max(worst_identity, std::abs(linear_cka(x, x) - 1.0));
        worst_sym = std::max(worst_sym, std::abs(linear_cka(x, y) - linear_cka(y, x)));

        std::vector<double> rot = random_orthogonal(p, rng);
        Matrix xr(n, p);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p; ++j) {
                double acc = 0.0;
                for (int k = 0; k < p; ++k)
                    acc += static_cast<double>(x(i, k)) * rot[static_cast<std::size_t>(k) * p + j];
                xr(i, j) = static_cast<float>(acc);
            }
        worst_orth = std::max(worst_orth,
                              std::abs(linear_cka(xr, y) - linear_cka(x, y)));

        Matrix xs = x;
        scale_inplace(xs, 3.25f);
        worst_scale = std::max(worst_scale,
                               std::abs(linear_cka(xs, y) - linear_cka(x, y)));

        worst_oracle = std::max(worst_oracle,
                                std::abs(linear_cka(x, y) - cka_gram_oracle(x, y)));
    }
    out.check(worst_identity <= tol, "cka identity off by " + num(worst_identity));
    out.check(worst_sym <= tol, "cka symmetry off by " + num(worst_sym));
    out.check(worst_orth <= tol, "cka orthogonal invariance off by " + num(worst_orth));
    out.check(worst_scale <= tol, "cka scaling invariance off by " + num(worst_scale));
    out.check(worst_oracle <= tol, "cka vs gram oracle off by " + num(worst_oracle));
    progress("cka invariances: worst deviations identity " + num(worst_identity) + ", sym " +
             num(worst_sym) + ", orth " + num(worst_orth) + ", scale " + num(worst_scale) +
             ", oracle " + num(worst_oracle));
}

void property_kl(PropertyResult& out) {
    Rng rng(97);
    const int dim = 6;
    Matrix zero(1, dim, 0.0f);
    double min_kl = 1e300;
    for (int i = 0; i < 1000; ++i) {
        Matrix mu(1, dim), logvar(1, dim);
        for (int j = 0; j < dim; ++j) {
            mu(0, j) = rng.uniform(-4.0f, 4.0f);
            logvar(0, j) = rng.uniform(-6.0f, 6.0f);
        }
        min_kl = std::min(min_kl, elbo(zero, zero, mu, logvar).kl_term);
    }
    out.check(min_kl >= 0.0, "kl went negative: " + num(min_kl));
    progress("kl sign: minimum over 1000 draws = " + num(min_kl));
}

void property_split(PropertyResult& out, const LabeledSet& train) {
    // Carving overload: 10% of each task's examples go to val. Partition is
    // checked as row-hash multisets so no example is dropped or duplicated.
    TaskSequence seq = split_tasks(train, 5, 2, 1);
    auto row_hash = [](const Matrix& m, int i, int label) {
        std::uint64_t h = fnv64(m.row(i), sizeof(float) * static_cast<std::size_t>(m.cols));
        return h ^ (static_cast<std::uint64_t>(label) * 0x9e3779b97f4a7c15ull);
    };
    std::vector<std::uint64_t> original, pieces;
    for (int i = 0; i < train.size(); ++i)
        original.push_back(row_hash(train.inputs, i, train.labels[static_cast<std::size_t>(i)]));

    std::set<int> seen_classes;
    bool labels_ok = true, classes_ok = true, val_fraction_ok = true;
    for (const Task& task : seq.tasks) {
        for (int c : task.classes) classes_ok = classes_ok && seen_classes.insert(c).second;
        for (int i = 0; i < task.train.size(); ++i) {
            int lab = task.train.labels[static_cast<std::size_t>(i)];
            labels_ok = labels_ok &&
                        std::find(task.classes.begin(), task.classes.end(), lab) !=
                            task.classes.end();
            pieces.push_back(row_hash(task.train.inputs, i, lab));
        }
        for (int i = 0; i < task.val.size(); ++i) {
            int lab = task.val.labels[static_cast<std::size_t>(i)];
            labels_ok = labels_ok &&
                        std::find(task.classes.begin(), task.classes.end(), lab) !=
                            task.classes.end();
            pieces.push_back(row_hash(task.val.inputs, i, lab));
        }
        int total = task.train.size() + task.val.size();
        int expect_val = total / 10;
        val_fraction_ok = val_fraction_ok && std::abs(task.val.size() - expect_val) <= 1;
    }
    std::sort(original.begin(), original.end());
    std::sort(pieces.begin(), pieces.end());
    out.check(original == pieces, "task split is not a partition of the source examples");
    out.check(labels_ok, "task split leaked a label outside its task's classes");
    out.check(classes_ok, "task class groups overlap");
    out.check(val_fraction_ok, "val split is not ~10% per task");
    progress("task split: partition over " + std::to_string(train.size()) + " examples, 5 x 2 "
             "classes, ~10% val per task");
}

void property_probe_freeze(PropertyResult& out) {
    // Synthetic clusters; the protocol itself is what is under test.
    const int dim = 16, per_class = 40;
    Rng rng(7);
    auto clusters = [&](int class_a, int class_b) {
        Matrix reps(per_class * 2, dim, 0.0f);
        std::vector<int> labels(static_cast<std::size_t>(per_class) * 2);
        for (int i = 0; i < reps.rows; ++i) {
            int local = i % 2;
            labels[static_cast<std::size_t>(i)] = local;
            for (int j = 0; j < dim; ++j) reps(i, j) = 0.05f * rng.normal();
            reps(i, local == 0 ? class_a : class_b) += 2.0f;
        }
        return std::pair{reps, labels};
    };
    auto [t1_reps, t1_labels] = clusters(0, 1);
    auto [t2_reps, t2_labels] = clusters(2, 3);

    ProbeTrainConfig cfg;
    cfg.steps = 80;
    FrozenProbeProtocol protocol(2, dim, 2, cfg);
    std::vector<const Matrix*> vals{&t1_reps, &t2_reps};
    std::vector<const std::vector<int>*> val_labels{&t1_labels, &t2_labels};

    protocol.on_epoch_end(1, t1_reps, t1_labels, vals, val_labels);
    protocol.end_task(1);
    auto probe_hash = [](const Probe& p) {
        std::uint64_t h = fnv64(p.weights.data.data(), p.weights.data.size() * sizeof(float));
        return h ^ fnv64(p.bias.data.data(), p.bias.data.size() * sizeof(float));
    };
    std::uint64_t frozen_hash = probe_hash(protocol.probe(1));

    protocol.on_epoch_end(2, t2_reps, t2_labels, vals, val_labels);
    out.check(probe_hash(protocol.probe(1)) == frozen_hash,
              "frozen probe weights changed while task 2 trained");
    bool threw = false;
    try {
        protocol.on_epoch_end(1, t1_reps, t1_labels, vals, val_labels);
    } catch (const ProtocolError&) {
        threw = true;
    }
    out.check(threw, "retraining a frozen probe was not rejected");
    progress("probe freeze: frozen weights byte-stable, retrain attempt rejected");
}

RunConfig small_config(std::uint64_t seed) {
    RunConfig cfg;
    cfg.dataset = "mnist";
    cfg.model = ModelKind::autoencoder;
    cfg.seed = seed;
    cfg.epochs_per_task = 1;
    cfg.bottleneck = 4;
    cfg.h1 = 32;
    cfg.h2 = 16;
    cfg.probe.steps = 50;
    return cfg;
}

void property_hooks_inert(PropertyResult& out, const TaskSequence& seq) {
    // Backbone non-perturbation, checked by checkpoint hash: a silent pass
    // and a fully-hooked pass land on byte-identical weights.
    RunConfig cfg = small_config(1);
    MetricSink quiet_sink, hooked_sink;
    ModelState quiet = run_training_pass(cfg, seq, HookSet{}, quiet_sink);
    HookSet all;
    all.probes = all.cka = all.recon = true;
    ModelState hooked = run_training_pass(cfg, seq, all, hooked_sink);
    out.check(checkpoint_hash(quiet) == checkpoint_hash(hooked),
              "measurement hooks perturbed the autoencoder backbone");

    RunConfig d_cfg = small_config(1);
    d_cfg.model = ModelKind::discriminative;
    MetricSink dq, dh;
    ModelState d_quiet = run_training_pass(d_cfg, seq, HookSet{}, dq);
    HookSet d_hooks;
    d_hooks.probes = d_hooks.cka = true;
    ModelState d_hooked = run_training_pass(d_cfg, seq, d_hooks, dh);
    out.check(checkpoint_hash(d_quiet) == checkpoint_hash(d_hooked),
              "measurement hooks perturbed the discriminative backbone");
    progress("hook inertness: checkpoint hashes match with and without hooks");
}

void property_determinism(PropertyResult& out, const TaskSequence& seq, const fs::path& dir) {
    RunConfig cfg = small_config(1);
    cfg.epochs_per_task = 2;
    std::set<std::string> all{"e1", "e2", "e3", "e4"};
    fs::path a_path = dir / "determinism_a.csv";
    fs::path b_path = dir / "determinism_b.csv";
    MetricSink a, b;
    run_experiments_on(cfg, seq, all, a);
    write_metrics_csv(a_path.string(), a.records());
    run_experiments_on(cfg, seq, all, b);
    write_metrics_csv(b_path.string(), b.records());

    auto slurp = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(f), {});
    };
    std::string bytes_a = slurp(a_path), bytes_b = slurp(b_path);
    out.check(!bytes_a.empty() && bytes_a == bytes_b,
              "two seed-1 runs produced different metrics files");
    progress("determinism: two seed-1 pipeline runs -> byte-identical csv (" +
             std::to_string(bytes_a.size()) + " bytes, " +
             std::to_string(a.records().size()) + " records)");
}

// ---------------------------------------------------------------------------
// Sweep bookkeeping

// Per-seed summaries of e3 rows for one (dataset, model).
struct TransferStats {
    std::vector<double> per_task_means;  // over tasks 1..5, one per seed
    std::vector<double> joints;          // task 0 row, one per seed
};

TransferStats transfer_stats(const std::string& dataset, const std::string& model) {
    std::map<std::uint64_t, std::vector<double>> per_task;
    std::map<std::uint64_t, double> joint;
    for (const MetricRecord& r : g_records) {
        if (r.experiment != "e3" || r.dataset != dataset || r.model != model) continue;
        if (r.task == 0)
            joint[r.seed] = r.value;
        else
            per_task[r.seed].push_back(r.value);
    }
    TransferStats out;
    for (const auto& [seed, values] : per_task) out.per_task_means.push_back(mean_of(values));
    for (const auto& [seed, value] : joint) out.joints.push_back(value);
    return out;
}

// Mean-over-seeds curve of one (experiment, dataset, model, metric, task).
std::map<int, double> mean_curve(const std::string& experiment, const std::string& dataset,
                                 const std::string& model, const std::string& metric, int task) {
    std::map<int, std::pair<double, int>> acc;
    for (const MetricRecord& r : g_records) {
        if (r.experiment != experiment || r.dataset != dataset || r.model != model ||
            r.metric != metric || r.task != task)
            continue;
        acc[r.epoch].first += r.value;
        acc[r.epoch].second += 1;
    }
    std::map<int, double> out;
    for (const auto& [epoch, sum_n] : acc) out[epoch] = sum_n.first / sum_n.second;
    return out;
}

void run_sweep(const std::string& dataset, const std::string& data_dir, int epochs_per_task,
               const std::vector<std::uint64_t>& seeds, bool full_sequence) {
    RunConfig base;
    base.dataset = dataset;
    base.data_dir = data_dir;
    base.epochs_per_task = epochs_per_task;
    progress(dataset + ": loading and splitting");
    TaskSequence seq = prepare_tasks(base);

    for (ModelKind kind : {ModelKind::discriminative, ModelKind::autoencoder, ModelKind::vae}) {
        for (std::uint64_t seed : seeds) {
            RunConfig cfg = base;
            cfg.model = kind;
            cfg.seed = seed;
            std::set<std::string> exps;
            if (full_sequence) {
                exps = {"e1", "e2", "e3"};
                if (kind != ModelKind::discriminative) exps.insert("e4");
            } else {
                exps = {"e3"};
            }
            std::string label = dataset + " " + to_string(kind) + " seed " +
                                std::to_string(seed);
            progress(label + " starting");
            auto t0 = std::chrono::steady_clock::now();
            MetricSink sink;
            run_experiments_on(cfg, seq, exps, sink);
            auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
            g_records.insert(g_records.end(), sink.records().begin(), sink.records().end());
            progress(label + " done in " + num(dt.count()) + " s (" +
                     std::to_string(sink.records().size()) + " records)");
        }
    }
}

// ---------------------------------------------------------------------------
// Criteria 1..6

Verdict criterion1() {
    Verdict v;
    v.pass = true;
    std::string detail;
    for (const char* ds : {"mnist", "fashion", "cifar10"}) {
        double d = mean_of(transfer_stats(ds, "d").per_task_means);
        double ae = mean_of(transfer_stats(ds, "ae").per_task_means);
        double vae = mean_of(transfer_stats(ds, "vae").per_task_means);
        bool ok = ae > d && vae > d;
        v.pass = v.pass && ok;
        detail += std::string(ds) + " d=" + pct(d) + " ae=" + pct(ae) + " vae=" + pct(vae) +
                  (ok ? "" : " (ordering violated)") + "; ";
    }
    v.detail = detail;
    return v;
}

Verdict criterion2() {
    Verdict v;
    struct Check {
        const char* ds;
        const char* model;
        double center;
        double tol;
    };
    const Check checks[] = {{"mnist", "ae", 0.968, 0.07},
                            {"fashion", "ae", 0.921, 0.07},
                            {"mnist", "d", 0.768, 0.10},
                            {"fashion", "d", 0.743, 0.10}};
    v.pass = true;
    for (const Check& c : checks) {
        double got = mean_of(transfer_stats(c.ds, c.model).per_task_means);
        bool ok = std::abs(got - c.center) <= c.tol;
        v.pass = v.pass && ok;
        v.detail += std::string(c.ds) + "/" + c.model + "=" + pct(got) + " (want " +
                    pct(c.center) + "+-" + pct(c.tol) + ")" + (ok ? "" : " MISS") + "; ";
    }
    return v;
}

Verdict criterion3() {
    Verdict v;
    v.pass = true;
    double mnist_gap = 0.0;
    for (const char* ds : {"mnist", "fashion", "cifar10"}) {
        double d = mean_of(transfer_stats(ds, "d").joints);
        double ae = mean_of(transfer_stats(ds, "ae").joints);
        double vae = mean_of(transfer_stats(ds, "vae").joints);
        bool ok = ae > vae && vae > d;
        if (std::string(ds) == "mnist") {
            mnist_gap = ae - d;
            ok = ok && mnist_gap >= 0.20;
        }
        v.pass = v.pass && ok;
        v.detail += std::string(ds) + " d=" + pct(d) + " vae=" + pct(vae) + " ae=" + pct(ae) +
                    (ok ? "" : " (violated)") + "; ";
    }
    v.detail += "mnist ae-d gap=" + pct(mnist_gap) + " pts";
    return v;
}

Verdict criterion4(int final_epoch) {
    Verdict v;
    auto end_acc = [&](const char* model, int task) {
        std::map<int, double> curve = mean_curve("e1", "mnist", model, "accuracy", task);
        auto it = curve.find(final_epoch);
        return it == curve.end() ? -1.0 : it->second;
    };
    double d1 = end_acc("d", 1);
    double ae1 = end_acc("ae", 1);
    double vae1 = end_acc("vae", 1);
    double ae_all = 0.0;
    for (int task = 1; task <= 5; ++task) ae_all += end_acc("ae", task);
    ae_all /= 5.0;

    bool d_ok = std::abs(d1 - 0.5) <= 0.10;
    bool hold_ok = ae1 > 0.85 && vae1 > 0.85;
    bool avg_ok = ae_all > 0.90;
    v.pass = d_ok && hold_ok && avg_ok;
    v.detail = "d task1 end=" + pct(d1) + " (chance band 40-60)" + (d_ok ? "" : " MISS") +
               "; ae task1 end=" + pct(ae1) + ", vae task1 end=" + pct(vae1) + " (>85)" +
               (hold_ok ? "" : " MISS") + "; ae mean over tasks=" + pct(ae_all) + " (>90)" +
               (avg_ok ? "" : " MISS");
    return v;
}

Verdict criterion5(int epochs_per_task, int final_epoch) {
    Verdict v;
    std::map<int, double> d_curve = mean_curve("e2", "mnist", "d", "cka", 1);
    std::map<int, double> ae_curve = mean_curve("e2", "mnist", "ae", "cka", 1);
    if (d_curve.empty() || ae_curve.empty()) {
        v.detail = "missing e2 curves";
        return v;
    }
    double d_end = d_curve.count(final_epoch) ? d_curve[final_epoch] : -1.0;
    double ae_end = ae_curve.count(final_epoch) ? ae_curve[final_epoch] : -1.0;
    bool end_ok = d_end < ae_end;

    // Largest drop between consecutive recorded epochs of d's task-1 curve.
    int drop_epoch = 0;
    double worst_drop = -1e300;
    double prev_value = 0.0;
    int prev_epoch = -1;
    for (const auto& [epoch, value] : d_curve) {
        if (prev_epoch >= 0) {
            double drop = prev_value - value;
            if (drop > worst_drop) {
                worst_drop = drop;
                drop_epoch = epoch;
            }
        }
        prev_epoch = epoch;
        prev_value = value;
    }
    bool drop_ok = drop_epoch > epochs_per_task && drop_epoch <= 2 * epochs_per_task;
    v.pass = end_ok && drop_ok;
    v.detail = "d task1 cka end=" + num(d_end) + " < ae end=" + num(ae_end) +
               (end_ok ? "" : " MISS") + "; d largest drop " + num(worst_drop) +
               " into epoch " + std::to_string(drop_epoch) + " (task 2 is epochs " +
               std::to_string(epochs_per_task + 1) + "-" + std::to_string(2 * epochs_per_task) +
               ")" + (drop_ok ? "" : " MISS");
    return v;
}

Verdict criterion6(int epochs_per_task, const fs::path& out_dir) {
    Verdict v;
    v.pass = true;
    for (int task = 1; task <= 5; ++task) {
        std::map<int, double> curve = mean_curve("e4", "mnist", "ae", "recon_loss", task);
        if (!curve.count(1) || !curve.count(epochs_per_task)) {
            v.pass = false;
            v.detail += "task " + std::to_string(task) + " curve incomplete; ";
            continue;
        }
        double first = curve[1], last = curve[epochs_per_task];
        bool ok = last < first;
        v.pass = v.pass && ok;
        v.detail += "task" + std::to_string(task) + " " + num(first) + "->" + num(last) +
                    (ok ? "" : " MISS") + "; ";
    }
    // Std bands: the emitted fig5 panel carries one std column per curve.
    std::ifstream fig5(out_dir / "fig5_mnist_ae.csv");
    std::string header;
    std::getline(fig5, header);
    bool bands = header.find("task1_std") != std::string::npos &&
                 header.find("task5_std") != std::string::npos;
    v.pass = v.pass && bands;
    v.detail += bands ? "std bands emitted" : "fig5 std bands missing";
    return v;
}

}  // namespace

int main() {
    const char* env = std::getenv("FORGETPROBE_DATA_DIR");
    const std::string data_dir = env && *env ? env : "data";
    const fs::path out_dir = "acceptance_out";
    std::error_code ec;
    fs::create_directories(out_dir, ec);

    bool data_ok = true;
    for (const char* ds : {"mnist", "fashion", "cifar10"}) {
        try {
            DatasetSummary s = verify_dataset(ds, data_dir);
            progress(std::string(ds) + ": " + std::to_string(s.n_train) + " train / " +
                     std::to_string(s.n_test) + " test examples");
        } catch (const std::exception& e) {
            std::printf("FAIL criterion 0: dataset %s unusable under '%s': %s\n", ds,
                        data_dir.c_str(), e.what());
            data_ok = false;
        }
    }
    if (!data_ok) return 1;

    std::vector<std::pair<int, Verdict>> verdicts;
    try {
        // ---- Criterion 7: property suite (no full-size training) ----
        PropertyResult props;
        property_gradients(props);
        property_cka(props);
        property_kl(props);
        property_probe_freeze(props);
        {
            DatasetPair mnist = load_dataset("mnist", data_dir);
            property_split(props, mnist.train);
            RunConfig small = small_config(1);
            small.data_dir = data_dir;
            TaskSequence small_seq = prepare_tasks(small);
            property_hooks_inert(props, small_seq);
            property_determinism(props, small_seq, out_dir);
        }
        Verdict c7;
        c7.pass = props.pass;
        c7.detail = props.pass ? "gradients, cka invariances, kl sign, task splits, probe "
                                 "freezing, hook inertness, determinism"
                               : "";
        for (const std::string& note : props.notes) c7.detail += note + "; ";
        verdicts.push_back({7, c7});

        // ---- Training sweeps ----
        const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
        const int mnist_epochs = 20;
        const int final_epoch = mnist_epochs * 5;
        run_sweep("mnist", data_dir, mnist_epochs, seeds, /*full_sequence=*/true);
        run_sweep("fashion", data_dir, 20, seeds, /*full_sequence=*/false);
        run_sweep("cifar10", data_dir, 10, seeds, /*full_sequence=*/false);

        // Persist every record and derive the reports from the same file the
        // criteria are judged on.
        fs::path metrics_path = out_dir / "metrics_all.csv";
        write_metrics_csv(metrics_path.string(), g_records);
        ReportOptions ropts;
        ropts.metrics_paths = {metrics_path.string()};
        ropts.out_dir = out_dir.string();
        ropts.target = "all";
        ropts.svg = true;
        ropts.provenance = true;
        write_report(ropts, std::cout);

        verdicts.push_back({1, criterion1()});
        verdicts.push_back({2, criterion2()});
        verdicts.push_back({3, criterion3()});
        verdicts.push_back({4, criterion4(final_epoch)});
        verdicts.push_back({5, criterion5(mnist_epochs, final_epoch)});
        verdicts.push_back({6, criterion6(mnist_epochs, out_dir)});
    } catch (const std::exception& e) {
        std::printf("FAIL criterion 0: pipeline error: %s\n", e.what());
        return 1;
    }

    std::sort(verdicts.begin(), verdicts.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    bool all_pass = true;
    for (const auto& [id, verdict] : verdicts) {
        std::printf("%s criterion %d: %s\n", verdict.pass ? "PASS" : "FAIL", id,
                    verdict.detail.c_str());
        all_pass = all_pass && verdict.pass;
    }
    std::fflush(stdout);
    return all_pass ? 0 : 1;
}
