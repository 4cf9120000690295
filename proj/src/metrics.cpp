#include "forgetprobe/metrics.hpp"

#include <cmath>
#include <map>
#include <tuple>

namespace fp {

void MetricSink::append(const std::vector<MetricRecord>& records) {
    records_.insert(records_.end(), records.begin(), records.end());
}

std::vector<AggregateResult> aggregate(const std::vector<MetricRecord>& records,
                                       const Grouping& grouping) {
    using Key = std::tuple<std::string, std::string, std::string, std::uint64_t, int, int,
                           std::string>;
    std::map<Key, std::vector<double>> groups;
    for (const MetricRecord& r : records) {
        Key key{grouping.by_experiment ? r.experiment : std::string{},
                grouping.by_model ? r.model : std::string{},
                grouping.by_dataset ? r.dataset : std::string{},
                grouping.by_seed ? r.seed : 0,
                grouping.by_task ? r.task : 0,
                grouping.by_epoch ? r.epoch : 0,
                grouping.by_metric ? r.metric : std::string{}};
        groups[key].push_back(r.value);
    }

    std::vector<AggregateResult> out;
    out.reserve(groups.size());
    for (const auto& [key, values] : groups) {
        AggregateResult a;
        a.key.experiment = std::get<0>(key);
        a.key.model = std::get<1>(key);
        a.key.dataset = std::get<2>(key);
        a.key.seed = std::get<3>(key);
        a.key.task = std::get<4>(key);
        a.key.epoch = std::get<5>(key);
        a.key.metric = std::get<6>(key);
        a.n = static_cast<int>(values.size());
        double sum = 0.0;
        for (double v : values) sum += v;
        a.mean = sum / a.n;
        // Population standard deviation, two-pass for numerical stability.
        double ss = 0.0;
        for (double v : values) ss += (v - a.mean) * (v - a.mean);
        a.stddev = std::sqrt(ss / a.n);
        a.key.value = a.mean;
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace fp
