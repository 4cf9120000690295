#include "forgetprobe/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "forgetprobe/errors.hpp"
#include "forgetprobe/metrics_io.hpp"

namespace fp {

namespace {

namespace fs = std::filesystem;

struct SeriesPoint {
    double x = 0.0;
    double y = 0.0;
};

struct Series {
    std::string name;
    std::vector<SeriesPoint> points;
};

const char* kPalette[] = {"#4363d8", "#e6194b", "#3cb44b", "#f58231", "#911eb4",
                          "#46f0f0", "#808000", "#000075"};

std::string fmt(double v) { return format_metric_value(v); }

// Minimal self-contained line chart; enough to eyeball the curves.
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::vector<Series>& series) {
    const double W = 640, H = 420, L = 64, R = 150, T = 40, B = 48;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const Series& s : series)
        for (const SeriesPoint& p : s.points) {
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
    if (xmin > xmax) return;  // nothing to draw
    if (xmax == xmin) xmax = xmin + 1;
    double pad = (ymax - ymin) * 0.05;
    if (pad == 0.0) pad = std::abs(ymax) * 0.05 + 0.01;
    ymin -= pad;
    ymax += pad;

    auto X = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
    auto Y = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

    std::ofstream f(path, std::ios::trunc);
    if (!f) throw FormatError("cannot open " + path + " for writing");
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << (L + (W - L - R) / 2) << "\" y=\"22\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
    // axes
    f << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << (H - B)
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << L << "\" y1=\"" << (H - B) << "\" x2=\"" << (W - R) << "\" y2=\""
      << (H - B) << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        double xv = xmin + (xmax - xmin) * t / 4.0;
        double yv = ymin + (ymax - ymin) * t / 4.0;
        f << "<text x=\"" << X(xv) << "\" y=\"" << (H - B + 18)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(xv)
          << "</text>\n"
          << "<line x1=\"" << X(xv) << "\" y1=\"" << (H - B) << "\" x2=\"" << X(xv) << "\" y2=\""
          << (H - B + 4) << "\" stroke=\"black\"/>\n"
          << "<text x=\"" << (L - 8) << "\" y=\"" << (Y(yv) + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(yv)
          << "</text>\n"
          << "<line x1=\"" << (L - 4) << "\" y1=\"" << Y(yv) << "\" x2=\"" << L << "\" y2=\""
          << Y(yv) << "\" stroke=\"black\"/>\n";
    }
    f << "<text x=\"" << (L + (W - L - R) / 2) << "\" y=\"" << (H - 10)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xlabel
      << "</text>\n"
      << "<text x=\"16\" y=\"" << (T + (H - T - B) / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 16 " << (T + (H - T - B) / 2) << ")\">" << ylabel
      << "</text>\n";
    // series
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        f << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const SeriesPoint& p : series[s].points) f << X(p.x) << "," << Y(p.y) << " ";
        f << "\"/>\n";
        double ly = T + 14 + 16 * static_cast<double>(s);
        f << "<line x1=\"" << (W - R + 10) << "\" y1=\"" << ly << "\" x2=\"" << (W - R + 30)
          << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n"
          << "<text x=\"" << (W - R + 36) << "\" y=\"" << (ly + 4)
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << series[s].name << "</text>\n";
    }
    f << "</svg>\n";
}

// One fig panel per (dataset, model), wide format: an epoch column plus one
// mean/std column pair per task curve. Curves that start late (fig 4) or end
// early leave their cells empty.
std::vector<std::string> write_fig(const std::vector<AggregateResult>& agg,
                                   const std::string& experiment, const std::string& metric,
                                   const std::string& stem, const std::string& ylabel,
                                   const ReportOptions& opts) {
    struct Panel {
        std::set<int> tasks;
        std::map<int, std::map<int, std::pair<double, double>>> cells;  // epoch -> task
    };
    std::map<std::pair<std::string, std::string>, Panel> panels;
    for (const AggregateResult& a : agg) {
        if (a.key.experiment != experiment || a.key.metric != metric) continue;
        Panel& p = panels[{a.key.dataset, a.key.model}];
        p.tasks.insert(a.key.task);
        p.cells[a.key.epoch][a.key.task] = {a.mean, a.stddev};
    }
    std::vector<std::string> written;
    for (auto& [key, panel] : panels) {
        std::string base = stem + "_" + key.first + "_" + key.second;
        fs::path csv_path = fs::path(opts.out_dir) / (base + ".csv");
        std::ofstream f(csv_path, std::ios::binary | std::ios::trunc);
        if (!f) throw FormatError("cannot open " + csv_path.string() + " for writing");
        f << "epoch";
        for (int t : panel.tasks) f << ",task" << t << "_mean,task" << t << "_std";
        f << "\r\n";
        for (const auto& [epoch, row] : panel.cells) {
            f << epoch;
            for (int t : panel.tasks) {
                auto it = row.find(t);
                if (it == row.end())
                    f << ",,";
                else
                    f << ',' << fmt(it->second.first) << ',' << fmt(it->second.second);
            }
            f << "\r\n";
        }
        written.push_back(csv_path.string());

        if (opts.svg) {
            std::vector<Series> series;
            for (int t : panel.tasks) {
                Series s;
                s.name = "task " + std::to_string(t);
                for (const auto& [epoch, row] : panel.cells) {
                    auto it = row.find(t);
                    if (it != row.end())
                        s.points.push_back({static_cast<double>(epoch), it->second.first});
                }
                series.push_back(std::move(s));
            }
            fs::path svg_path = fs::path(opts.out_dir) / (base + ".svg");
            write_svg_chart(svg_path.string(), stem + " " + key.first + " / " + key.second,
                            "epoch", ylabel, series);
            written.push_back(svg_path.string());
        }
    }
    return written;
}

struct TableCell {
    double mean = 0.0;
    double std_tasks = 0.0;  // spread across tasks within a run, averaged over runs
    double std_seeds = 0.0;  // spread across seeds of the per-run mean
    int n = 0;               // seeds
    bool present = false;
};

// dataset -> model -> cell, with deterministic row/column order.
using TableData = std::map<std::string, std::map<std::string, TableCell>>;

double population_std(const std::vector<double>& values, double mean) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size()));
}

double mean_of(const std::vector<double>& values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

// per_task tables print "mean +- std_tasks" (the across-task spread is the
// informative number; across-seed spread is tiny and kept as a second CSV
// column). Joint tables have one value per run, so only the seed spread.
std::vector<std::string> write_table(const TableData& table, bool per_task,
                                     const std::string& stem, const std::string& caption,
                                     const ReportOptions& opts, std::ostream& text) {
    std::vector<std::string> written;
    fs::path csv_path = fs::path(opts.out_dir) / (stem + ".csv");
    std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
    if (!csv) throw FormatError("cannot open " + csv_path.string() + " for writing");
    csv << (per_task ? "dataset,model,mean,std_tasks,std_seeds,n"
                     : "dataset,model,mean,std,n")
        << "\r\n";

    const std::vector<std::string> model_order = {"d", "ae", "vae"};
    std::string txt = caption + "\n";
    char buf[64];
    txt += "dataset    ";
    for (const std::string& m : model_order) {
        std::snprintf(buf, sizeof(buf), "%-14s", m.c_str());
        txt += buf;
    }
    txt += "\n";
    for (const auto& [dataset, row] : table) {
        std::snprintf(buf, sizeof(buf), "%-11s", dataset.c_str());
        txt += buf;
        for (const std::string& m : model_order) {
            auto it = row.find(m);
            if (it == row.end() || !it->second.present) {
                std::snprintf(buf, sizeof(buf), "%-14s", "-");
                txt += buf;
                continue;
            }
            const TableCell& cell = it->second;
            csv << dataset << ',' << m << ',' << fmt(cell.mean) << ',';
            if (per_task)
                csv << fmt(cell.std_tasks) << ',' << fmt(cell.std_seeds);
            else
                csv << fmt(cell.std_seeds);
            csv << ',' << cell.n << "\r\n";
            const double headline = per_task ? cell.std_tasks : cell.std_seeds;
            std::snprintf(buf, sizeof(buf), "%4.1f +- %-6.1f", cell.mean * 100.0,
                          headline * 100.0);
            std::string text_cell = buf;
            text_cell.resize(14, ' ');
            txt += text_cell;
        }
        txt += "\n";
    }
    written.push_back(csv_path.string());

    fs::path txt_path = fs::path(opts.out_dir) / (stem + ".txt");
    std::ofstream tf(txt_path, std::ios::trunc);
    if (!tf) throw FormatError("cannot open " + txt_path.string() + " for writing");
    tf << txt;
    written.push_back(txt_path.string());
    text << txt << "\n";
    return written;
}

// Build both tables from e3 rows. Per run (seed): table 1 takes mean and std
// over the per-task rows, table 2 the task=0 row. Cells then carry the mean
// over runs, the mean per-run task std, and the std of per-run means.
TableData build_table(const std::vector<MetricRecord>& records, bool joint) {
    std::map<std::tuple<std::string, std::string, std::uint64_t>, std::vector<double>> per_seed;
    for (const MetricRecord& r : records) {
        if (r.experiment != "e3" || r.metric != "accuracy") continue;
        if (joint != (r.task == 0)) continue;
        per_seed[{r.dataset, r.model, r.seed}].push_back(r.value);
    }
    struct RunStats {
        std::vector<double> means;
        std::vector<double> task_stds;
    };
    std::map<std::tuple<std::string, std::string>, RunStats> by_cell;
    for (const auto& [key, values] : per_seed) {
        RunStats& rs = by_cell[{std::get<0>(key), std::get<1>(key)}];
        double m = mean_of(values);
        rs.means.push_back(m);
        rs.task_stds.push_back(population_std(values, m));
    }

    TableData table;
    for (const auto& [key, rs] : by_cell) {
        TableCell cell;
        cell.n = static_cast<int>(rs.means.size());
        cell.mean = mean_of(rs.means);
        cell.std_seeds = population_std(rs.means, cell.mean);
        cell.std_tasks = mean_of(rs.task_stds);
        cell.present = true;
        table[std::get<0>(key)][std::get<1>(key)] = cell;
    }
    return table;
}

}  // namespace

std::vector<std::string> write_report(const ReportOptions& opts, std::ostream& text) {
    static const std::set<std::string> kTargets = {"all",  "fig3",   "fig4",
                                                   "fig5", "table1", "table2"};
    if (!kTargets.count(opts.target))
        throw ConfigError("unknown report target '" + opts.target + "'");
    if (opts.metrics_paths.empty()) throw ConfigError("report: no metrics files given");
    if (opts.out_dir.empty()) throw ConfigError("report: out_dir is required");
    fs::create_directories(opts.out_dir);

    std::vector<MetricRecord> records;
    for (const std::string& path : opts.metrics_paths) {
        std::vector<MetricRecord> part = read_metrics_csv(path);
        records.insert(records.end(), part.begin(), part.end());
    }
    if (records.empty()) throw FormatError("report: no data in the given metrics files");
    static const std::map<std::string, std::string> kNeeds = {
        {"fig3", "e1"}, {"fig4", "e2"}, {"fig5", "e4"}, {"table1", "e3"}, {"table2", "e3"}};
    if (opts.target != "all") {
        const std::string& need = kNeeds.at(opts.target);
        bool found = false;
        for (const MetricRecord& r : records)
            if (r.experiment == need) {
                found = true;
                break;
            }
        if (!found)
            throw FormatError("report: metrics contain no " + need + " records (required for " +
                              opts.target + ")");
    }

    std::vector<AggregateResult> agg = aggregate(records);
    std::vector<std::string> written;
    auto want = [&](const char* t) { return opts.target == "all" || opts.target == t; };

    if (want("fig3")) {
        auto files = write_fig(agg, "e1", "accuracy", "fig3", "probe accuracy", opts);
        written.insert(written.end(), files.begin(), files.end());
    }
    if (want("fig4")) {
        auto files = write_fig(agg, "e2", "cka", "fig4", "CKA to reference", opts);
        written.insert(written.end(), files.begin(), files.end());
    }
    if (want("fig5")) {
        auto files = write_fig(agg, "e4", "recon_loss", "fig5", "val reconstruction loss", opts);
        written.insert(written.end(), files.begin(), files.end());
    }
    if (want("table1")) {
        auto files = write_table(build_table(records, /*joint=*/false), /*per_task=*/true,
                                 "table1",
                                 "Probe accuracy after task 1, mean over tasks "
                                 "(% +- std across tasks)",
                                 opts, text);
        written.insert(written.end(), files.begin(), files.end());
    }
    if (want("table2")) {
        auto files = write_table(build_table(records, /*joint=*/true), /*per_task=*/false,
                                 "table2", "Joint all-class probe accuracy (% +- std over seeds)",
                                 opts, text);
        written.insert(written.end(), files.begin(), files.end());
    }

    if (opts.provenance) {
        nlohmann::json runs = nlohmann::json::array();
        std::map<std::tuple<std::string, std::string, std::string, std::uint64_t>, int> counts;
        for (const MetricRecord& r : records)
            counts[{r.experiment, r.dataset, r.model, r.seed}] += 1;
        for (const auto& [key, n] : counts)
            runs.push_back({{"experiment", std::get<0>(key)},
                            {"dataset", std::get<1>(key)},
                            {"model", std::get<2>(key)},
                            {"seed", std::get<3>(key)},
                            {"records", n}});
        nlohmann::json j{{"inputs", opts.metrics_paths},
                         {"total_records", records.size()},
                         {"runs", runs}};
        fs::path path = fs::path(opts.out_dir) / "report_provenance.json";
        std::ofstream f(path, std::ios::trunc);
        if (!f) throw FormatError("cannot open " + path.string() + " for writing");
        f << j.dump(2) << "\n";
        written.push_back(path.string());
    }

    text << "wrote " << written.size() << " file(s):\n";
    for (const std::string& p : written) text << "  " << p << "\n";
    return written;
}

}  // namespace fp
