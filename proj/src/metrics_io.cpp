#include "forgetprobe/metrics_io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "forgetprobe/errors.hpp"

namespace fp {

namespace {
constexpr const char* kHeader = "experiment,model,dataset,seed,task,epoch,metric,value";

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

long parse_int(const std::string& s, const std::string& path, int line_no, const char* what) {
    errno = 0;
    char* end = nullptr;
    long v = std::strtol(s.c_str(), &end, 10);
    if (errno != 0 || end == s.c_str() || *end != '\0')
        throw FormatError(path + ":" + std::to_string(line_no) + ": bad " + what + " '" + s +
                          "'");
    return v;
}
}  // namespace

std::string format_metric_value(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return buf;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricRecord>& records) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open " + path + " for writing");
    f << kHeader << "\r\n";
    for (const MetricRecord& r : records) {
        f << r.experiment << ',' << r.model << ',' << r.dataset << ',' << r.seed << ','
          << r.task << ',' << r.epoch << ',' << r.metric << ',' << format_metric_value(r.value)
          << "\r\n";
    }
    if (!f) throw FormatError("short write to " + path);
}

std::vector<MetricRecord> read_metrics_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open " + path);

    std::vector<MetricRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            if (f.eof()) break;
            throw FormatError(path + ":" + std::to_string(line_no) + ": empty line");
        }
        if (line_no == 1) {
            if (line != kHeader)
                throw FormatError(path + ":1: bad header '" + line + "' (want '" + kHeader +
                                  "')");
            continue;
        }
        std::vector<std::string> fields = split_fields(line);
        if (fields.size() != 8)
            throw FormatError(path + ":" + std::to_string(line_no) + ": expected 8 fields, got " +
                              std::to_string(fields.size()));
        MetricRecord r;
        r.experiment = fields[0];
        r.model = fields[1];
        r.dataset = fields[2];
        {
            // strtoull would wrap a leading '-', so require plain digits.
            if (fields[3].empty() ||
                fields[3].find_first_not_of("0123456789") != std::string::npos)
                throw FormatError(path + ":" + std::to_string(line_no) + ": bad seed '" +
                                  fields[3] + "'");
            errno = 0;
            char* end = nullptr;
            unsigned long long seed = std::strtoull(fields[3].c_str(), &end, 10);
            if (errno != 0 || end == fields[3].c_str() || *end != '\0')
                throw FormatError(path + ":" + std::to_string(line_no) + ": bad seed '" +
                                  fields[3] + "'");
            r.seed = seed;
        }
        r.task = static_cast<int>(parse_int(fields[4], path, line_no, "task"));
        r.epoch = static_cast<int>(parse_int(fields[5], path, line_no, "epoch"));
        r.metric = fields[6];
        {
            errno = 0;
            char* end = nullptr;
            r.value = std::strtod(fields[7].c_str(), &end);
            if (errno != 0 || end == fields[7].c_str() || *end != '\0')
                throw FormatError(path + ":" + std::to_string(line_no) + ": bad value '" +
                                  fields[7] + "'");
        }
        records.push_back(std::move(r));
    }
    if (line_no == 0) throw FormatError(path + ": empty file (missing header)");
    return records;
}

}  // namespace fp
