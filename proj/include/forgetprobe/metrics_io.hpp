#pragma once

#include <string>
#include <vector>

#include "forgetprobe/metrics.hpp"

namespace fp {

// CSV with a fixed header
//   experiment,model,dataset,seed,task,epoch,metric,value
// CRLF line endings, values printed with six significant digits (%.6g).
void write_metrics_csv(const std::string& path, const std::vector<MetricRecord>& records);

// Strict reader for the same format (accepts LF as well as CRLF). Errors
// carry the 1-based line number.
std::vector<MetricRecord> read_metrics_csv(const std::string& path);

// Formats one value exactly as the CSV writer does.
std::string format_metric_value(double value);

}  // namespace fp
