#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "forgetprobe/errors.hpp"
#include "forgetprobe/experiments.hpp"
#include "forgetprobe/gradcheck.hpp"
#include "forgetprobe/metrics_io.hpp"
#include "forgetprobe/report.hpp"

namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "1.0.0";

// Exit taxonomy: 0 success, 2 usage/config, 3 data/format, 4 numeric.
int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const fp::ConfigError*>(&e)) return 2;
    if (dynamic_cast<const fp::FormatError*>(&e)) return 3;
    if (dynamic_cast<const fp::NumericError*>(&e)) return 4;
    if (dynamic_cast<const fp::DegenerateInputError*>(&e)) return 4;
    return 1;
}

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
    std::vector<std::uint64_t> seeds;
    std::size_t start = 0;
    while (start <= spec.size()) {
        std::size_t comma = spec.find(',', start);
        std::string item = spec.substr(
            start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!item.empty()) {
            std::size_t dash = item.find('-');
            try {
                if (dash == std::string::npos) {
                    seeds.push_back(std::stoull(item));
                } else {
                    std::uint64_t lo = std::stoull(item.substr(0, dash));
                    std::uint64_t hi = std::stoull(item.substr(dash + 1));
                    if (hi < lo) throw fp::ConfigError("seed range '" + item + "' is reversed");
                    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
                }
            } catch (const std::invalid_argument&) {
                throw fp::ConfigError("bad seed '" + item + "'");
            } catch (const std::out_of_range&) {
                throw fp::ConfigError("seed '" + item + "' out of range");
            }
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (seeds.empty()) throw fp::ConfigError("no seeds given");
    return seeds;
}

std::string utc_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::string default_data_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("FORGETPROBE_DATA_DIR"); env && *env) return env;
    return "data";
}

struct RunArgs {
    std::string data_dir;
    std::string out_dir = "out";
    std::string dataset = "mnist";
    std::string model = "ae";
    std::string experiments = "all";
    std::string seeds = "1";
    int epochs_per_task = 0;
    int batch_size = 128;
    int bottleneck = 0;
    int jobs = 1;
};

int cmd_run(const RunArgs& args) {
    auto t0 = std::chrono::steady_clock::now();

    fp::RunConfig cfg;
    cfg.dataset = args.dataset;
    cfg.model = fp::model_kind_from_string(args.model);
    cfg.epochs_per_task = args.epochs_per_task;
    cfg.batch_size = args.batch_size;
    cfg.bottleneck = args.bottleneck;
    cfg.data_dir = default_data_dir(args.data_dir);
    std::set<std::string> experiments = fp::parse_experiment_list(args.experiments);
    std::vector<std::uint64_t> seeds = parse_seeds(args.seeds);
    if (args.jobs < 1) throw fp::ConfigError("--jobs must be at least 1");
    cfg.seed = seeds.front();
    cfg.validate();

    fs::create_directories(args.out_dir);
    // The task sequence uses the canonical test split as val, so it is
    // seed-independent and shared across all runs (and worker threads).
    fp::TaskSequence seq = fp::prepare_tasks(cfg);

    std::vector<std::string> files(seeds.size());
    std::vector<std::size_t> counts(seeds.size());
    std::vector<std::exception_ptr> errors(seeds.size());
    std::atomic<std::size_t> cursor{0};
    std::mutex io_mutex;

    auto worker = [&] {
        for (;;) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= seeds.size()) return;
            auto run_t0 = std::chrono::steady_clock::now();
            try {
                fp::RunConfig run_cfg = cfg;
                run_cfg.seed = seeds[i];
                fp::MetricSink sink;
                fp::run_experiments_on(run_cfg, seq, experiments, sink);
                fs::path path = fs::path(args.out_dir) /
                                ("metrics_" + cfg.dataset + "_" + args.model + "_seed" +
                                 std::to_string(seeds[i]) + ".csv");
                fp::write_metrics_csv(path.string(), sink.records());
                files[i] = path.string();
                counts[i] = sink.records().size();
                double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                            run_t0)
                                  .count();
                std::lock_guard<std::mutex> lock(io_mutex);
                std::printf("run dataset=%s model=%s seed=%llu: %zu records -> %s (%.1fs)\n",
                            cfg.dataset.c_str(), args.model.c_str(),
                            static_cast<unsigned long long>(seeds[i]), counts[i],
                            files[i].c_str(), secs);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    int jobs = std::min<int>(args.jobs, static_cast<int>(seeds.size()));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);

    double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::json manifest{
        {"command", "run"},
        {"version", kVersion},
        {"created", utc_now()},
        {"dataset", cfg.dataset},
        {"model", args.model},
        {"experiments", std::vector<std::string>(experiments.begin(), experiments.end())},
        {"seeds", seeds},
        {"epochs_per_task", cfg.resolved_epochs_per_task()},
        {"batch_size", cfg.batch_size},
        {"bottleneck", cfg.resolved_bottleneck()},
        {"n_tasks", cfg.n_tasks},
        {"classes_per_task", cfg.classes_per_task},
        {"probe_steps", cfg.probe.steps},
        {"probe_learning_rate", cfg.probe.learning_rate},
        {"cka_max_samples", cfg.cka_max_samples},
        {"data_dir", cfg.data_dir},
        {"out_dir", args.out_dir},
        {"jobs", args.jobs},
        {"wall_seconds", wall},
        {"files", files},
    };
    fs::path manifest_path = fs::path(args.out_dir) / "run_manifest.json";
    std::ofstream mf(manifest_path, std::ios::trunc);
    if (!mf) throw fp::FormatError("cannot open " + manifest_path.string() + " for writing");
    mf << manifest.dump(2) << "\n";
    std::printf("manifest -> %s (%.1fs total)\n", manifest_path.string().c_str(), wall);
    return 0;
}

int cmd_verify_data(const std::string& data_dir_flag, const std::string& dataset) {
    fp::DatasetSummary s = fp::verify_dataset(dataset, default_data_dir(data_dir_flag));
    std::printf("%s: ok\n", s.name.c_str());
    std::printf("  train: %d examples, dim %d\n", s.n_train, s.dim);
    std::printf("  test:  %d examples\n", s.n_test);
    std::printf("  train class counts:");
    for (int c = 0; c < 10; ++c) std::printf(" %d", s.train_class_counts[c]);
    std::printf("\n  test class counts: ");
    for (int c = 0; c < 10; ++c) std::printf(" %d", s.test_class_counts[c]);
    std::printf("\n");
    return 0;
}

int cmd_gradcheck(int instances, std::uint64_t seed) {
    fp::GradCheckReport report = fp::run_gradient_checks(instances, seed);
    std::printf("gradcheck: %d instances, %d comparisons, %d failures, max rel err %.3g\n",
                report.instances, report.comparisons, report.failures, report.max_rel_err);
    for (const std::string& msg : report.messages) std::printf("  %s\n", msg.c_str());
    if (!report.passed()) {
        std::fprintf(stderr, "error: gradient check failed\n");
        return 4;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Continual-learning representation measurement toolkit"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "Read options from a TOML/INI config file");
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "Train models and record metrics");
    run->add_option("--data-dir", run_args.data_dir,
                    "Dataset root (default: $FORGETPROBE_DATA_DIR, then ./data)");
    run->add_option("--out-dir", run_args.out_dir, "Output directory for metrics CSVs");
    run->add_option("--dataset", run_args.dataset, "mnist | fashion | cifar10");
    run->add_option("--model", run_args.model, "d | ae | vae");
    run->add_option("--experiment", run_args.experiments,
                    "Comma-separated subset of e1,e2,e3,e4, or 'all'");
    run->add_option("--seeds", run_args.seeds, "Seed list/range, e.g. '1,2,3' or '1-5'");
    run->add_option("--epochs-per-task", run_args.epochs_per_task,
                    "Epochs per task (0 = dataset default)");
    run->add_option("--batch-size", run_args.batch_size, "Minibatch size");
    run->add_option("--bottleneck", run_args.bottleneck,
                    "Bottleneck width (0 = dataset default)");
    run->add_option("--jobs", run_args.jobs, "Seeds to run in parallel");

    fp::ReportOptions report_opts;
    CLI::App* report = app.add_subcommand("report", "Derive figures/tables from metrics CSVs");
    report->add_option("--metrics", report_opts.metrics_paths, "Input metrics CSV(s)")
        ->required();
    report->add_option("--out-dir", report_opts.out_dir, "Output directory")->required();
    report->add_option("--target", report_opts.target,
                       "all | fig3 | fig4 | fig5 | table1 | table2");
    report->add_flag("--svg", report_opts.svg, "Also draw SVG charts");
    report->add_flag("--provenance", report_opts.provenance,
                     "Also write report_provenance.json");

    std::string vd_data_dir, vd_dataset;
    CLI::App* verify = app.add_subcommand("verify-data", "Check dataset files on disk");
    verify->add_option("--data-dir", vd_data_dir,
                       "Dataset root (default: $FORGETPROBE_DATA_DIR, then ./data)");
    verify->add_option("--dataset", vd_dataset, "mnist | fashion | cifar10")->required();

    int gc_instances = 50;
    std::uint64_t gc_seed = 1;
    CLI::App* gradcheck = app.add_subcommand("gradcheck",
                                             "Finite-difference gradient validation");
    gradcheck->add_option("--instances", gc_instances, "Random instances per family");
    gradcheck->add_option("--seed", gc_seed, "Base seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (report->parsed()) {
            fp::write_report(report_opts, std::cout);
            return 0;
        }
        if (verify->parsed()) return cmd_verify_data(vd_data_dir, vd_dataset);
        if (gradcheck->parsed()) return cmd_gradcheck(gc_instances, gc_seed);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e);
    }
    return 2;
}
