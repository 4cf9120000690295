#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "forgetprobe/errors.hpp"
#include "forgetprobe/metrics.hpp"
#include "forgetprobe/metrics_io.hpp"

using namespace fp;
namespace fs = std::filesystem;

namespace {

fs::path make_temp_dir() {
    static int counter = 0;
    fs::path dir = fs::temp_directory_path() /
                   ("fp_metrics_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
    fs::create_directories(dir);
    return dir;
}

MetricRecord rec(const std::string& exp, const std::string& model, std::uint64_t seed,
                 int task, int epoch, const std::string& metric, double value) {
    MetricRecord r;
    r.experiment = exp;
    r.model = model;
    r.dataset = "mnist";
    r.seed = seed;
    r.task = task;
    r.epoch = epoch;
    r.metric = metric;
    r.value = value;
    return r;
}

std::string slurp(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
}

}  // namespace

TEST_CASE("aggregate collapses seeds with sample statistics") {
    std::vector<MetricRecord> records{
        rec("e1", "ae", 1, 1, 5, "accuracy", 0.8),
        rec("e1", "ae", 2, 1, 5, "accuracy", 0.9),
        rec("e1", "ae", 1, 2, 5, "accuracy", 0.4),
    };
    auto agg = aggregate(records);
    REQUIRE(agg.size() == 2);

    CHECK(agg[0].key.task == 1);
    CHECK(agg[0].mean == doctest::Approx(0.85).epsilon(1e-12));
    // Population std of {0.8, 0.9}: both values sit 0.05 from the mean.
    CHECK(agg[0].stddev == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(agg[0].n == 2);
    CHECK(agg[0].key.seed == 0);  // collapsed fields stay at defaults

    CHECK(agg[1].key.task == 2);
    CHECK(agg[1].mean == doctest::Approx(0.4));
    CHECK(agg[1].stddev == 0.0);  // n == 1
    CHECK(agg[1].n == 1);
}

TEST_CASE("aggregate respects the grouping request") {
    std::vector<MetricRecord> records{
        rec("e1", "ae", 1, 1, 1, "accuracy", 1.0),
        rec("e1", "d", 1, 1, 1, "accuracy", 0.0),
        rec("e1", "ae", 2, 1, 1, "accuracy", 0.5),
    };
    Grouping g;
    g.by_model = false;
    auto agg = aggregate(records, g);
    REQUIRE(agg.size() == 1);
    CHECK(agg[0].n == 3);
    CHECK(agg[0].mean == doctest::Approx(0.5));
    CHECK(agg[0].key.model.empty());

    Grouping by_seed;
    by_seed.by_seed = true;
    auto per_seed = aggregate(records, by_seed);
    CHECK(per_seed.size() == 3);

    // Deterministic output order: sorted by model then seed here.
    CHECK(per_seed[0].key.model == "ae");
    CHECK(per_seed[0].key.seed == 1);
    CHECK(per_seed[1].key.model == "ae");
    CHECK(per_seed[1].key.seed == 2);
    CHECK(per_seed[2].key.model == "d");
}

TEST_CASE("aggregate of identical values has zero stddev") {
    std::vector<MetricRecord> records;
    for (int s = 1; s <= 5; ++s) records.push_back(rec("e1", "ae", s, 1, 1, "accuracy", 0.75));
    auto agg = aggregate(records);
    REQUIRE(agg.size() == 1);
    CHECK(agg[0].mean == 0.75);
    CHECK(agg[0].stddev == 0.0);  // two-pass form keeps this exact
    CHECK(agg[0].n == 5);
}

TEST_CASE("metric sink appends in order") {
    MetricSink sink;
    sink.emit(rec("e1", "ae", 1, 1, 1, "accuracy", 0.5));
    sink.emit(rec("e2", "ae", 1, 1, 1, "cka", 0.9));
    CHECK(sink.records().size() == 2);
    MetricSink other;
    other.append(sink.records());
    other.append(sink.records());
    CHECK(other.records().size() == 4);
    CHECK(other.records()[2].experiment == "e1");
    auto taken = sink.take();
    CHECK(taken.size() == 2);
    CHECK(sink.records().empty());
}

TEST_CASE("format_metric_value uses six significant digits") {
    CHECK(format_metric_value(0.5) == "0.5");
    CHECK(format_metric_value(1.0) == "1");
    CHECK(format_metric_value(0.123456789) == "0.123457");
    CHECK(format_metric_value(1234567.0) == "1.23457e+06");
    CHECK(format_metric_value(0.0000123456789) == "1.23457e-05");
    CHECK(format_metric_value(-3.5) == "-3.5");
    CHECK(format_metric_value(0.693147180559945) == "0.693147");
}

TEST_CASE("csv round-trips records byte-exactly with crlf endings") {
    fs::path dir = make_temp_dir();
    fs::path path = dir / "m.csv";
    std::vector<MetricRecord> records{
        rec("e1", "ae", 1, 1, 1, "accuracy", 0.98),
        rec("e2", "vae", 12345678901ull, 3, 40, "cka", 0.123456789),
        rec("e4", "ae", 2, 5, 100, "recon_loss", 17.25),
    };
    write_metrics_csv(path.string(), records);

    std::string bytes = slurp(path);
    CHECK(bytes.substr(0, 49) == "experiment,model,dataset,seed,task,epoch,metric,v");
    // Every line, header included, ends with CRLF.
    std::size_t lf_count = 0, crlf_count = 0;
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        if (bytes[i] == '\n') {
            ++lf_count;
            if (i > 0 && bytes[i - 1] == '\r') ++crlf_count;
        }
    }
    CHECK(lf_count == 4);
    CHECK(crlf_count == 4);
    CHECK(bytes.find("e2,vae,mnist,12345678901,3,40,cka,0.123457\r\n") != std::string::npos);

    auto back = read_metrics_csv(path.string());
    REQUIRE(back.size() == 3);
    CHECK(back[0].experiment == "e1");
    CHECK(back[0].value == 0.98);
    CHECK(back[1].seed == 12345678901ull);
    CHECK(back[1].task == 3);
    CHECK(back[1].epoch == 40);
    CHECK(back[1].metric == "cka");
    CHECK(back[1].value == doctest::Approx(0.123457).epsilon(1e-12));
    CHECK(back[2].value == 17.25);

    // Plain-LF input is accepted too.
    std::string lf_version = bytes;
    std::string no_cr;
    for (char c : lf_version)
        if (c != '\r') no_cr.push_back(c);
    std::ofstream(dir / "lf.csv", std::ios::binary) << no_cr;
    auto lf_back = read_metrics_csv((dir / "lf.csv").string());
    CHECK(lf_back.size() == 3);
    CHECK(lf_back[2].value == 17.25);
    fs::remove_all(dir);
}

TEST_CASE("csv reader rejects malformed input with line numbers") {
    fs::path dir = make_temp_dir();
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream(dir / name, std::ios::binary) << text;
        return (dir / name).string();
    };
    const std::string header = "experiment,model,dataset,seed,task,epoch,metric,value\r\n";

    CHECK_THROWS_WITH_AS(read_metrics_csv(write("empty.csv", "")),
                         doctest::Contains("empty"), FormatError);
    CHECK_THROWS_WITH_AS(read_metrics_csv(write("hdr.csv", "a,b,c\r\n")),
                         doctest::Contains("header"), FormatError);
    CHECK_THROWS_WITH_AS(
        read_metrics_csv(write("fields.csv", header + "e1,ae,mnist,1,1,1,accuracy\r\n")),
        doctest::Contains(":2:"), FormatError);
    CHECK_THROWS_WITH_AS(
        read_metrics_csv(write("value.csv", header + "e1,ae,mnist,1,1,1,accuracy,abc\r\n")),
        doctest::Contains(":2:"), FormatError);
    CHECK_THROWS_WITH_AS(
        read_metrics_csv(write("seed.csv", header + "e1,ae,mnist,-3,1,1,accuracy,0.5\r\n")),
        doctest::Contains("bad seed"), FormatError);
    CHECK_THROWS_WITH_AS(
        read_metrics_csv(
            write("late.csv", header + "e1,ae,mnist,1,1,1,accuracy,0.5\r\ne1,ae,mnist,1,1,1\r\n")),
        doctest::Contains(":3:"), FormatError);
    CHECK_THROWS_AS(read_metrics_csv((dir / "missing.csv").string()), FormatError);
    fs::remove_all(dir);
}
