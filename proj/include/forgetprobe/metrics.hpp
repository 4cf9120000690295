#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fp {

// One measurement. `task` is 1-based (0 is reserved for quantities spanning
// all tasks, e.g. the joint probe); `epoch` counts globally across the whole
// task sequence, 1-based (0 for end-of-training quantities with no epoch
// axis... e3 uses the final epoch instead, so in practice epoch >= 1).
struct MetricRecord {
    std::string experiment;  // e1 | e2 | e3 | e4
    std::string model;       // d | ae | vae
    std::string dataset;     // mnist | fashion | cifar10
    std::uint64_t seed = 0;
    int task = 0;
    int epoch = 0;
    std::string metric;      // accuracy | cka | recon_loss | train_loss
    double value = 0.0;
};

// Collects records for one run. Deliberately dumb: a run appends in order,
// callers merge sinks afterwards.
class MetricSink {
public:
    void emit(MetricRecord record) { records_.push_back(std::move(record)); }
    const std::vector<MetricRecord>& records() const { return records_; }
    std::vector<MetricRecord> take() { return std::move(records_); }
    void append(const std::vector<MetricRecord>& records);

private:
    std::vector<MetricRecord> records_;
};

// Which fields define an aggregation group. Seed is the usual axis collapsed.
struct Grouping {
    bool by_experiment = true;
    bool by_model = true;
    bool by_dataset = true;
    bool by_seed = false;
    bool by_task = true;
    bool by_epoch = true;
    bool by_metric = true;
};

// Group key with non-grouped fields left at their defaults, plus summary
// statistics: mean and population standard deviation (n denominator; 0 when
// n == 1).
struct AggregateResult {
    MetricRecord key;
    double mean = 0.0;
    double stddev = 0.0;
    int n = 0;
};

// Deterministic order: groups sorted by (experiment, model, dataset, seed,
// task, epoch, metric).
std::vector<AggregateResult> aggregate(const std::vector<MetricRecord>& records,
                                       const Grouping& grouping = {});

}  // namespace fp
