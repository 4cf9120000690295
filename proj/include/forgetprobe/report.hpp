#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "forgetprobe/metrics.hpp"

namespace fp {

struct ReportOptions {
    std::vector<std::string> metrics_paths;  // input CSVs (merged)
    std::string out_dir;
    std::string target = "all";  // all | fig3 | fig4 | fig5 | table1 | table2
    bool svg = false;            // also draw each figure panel as an SVG
    bool provenance = false;     // also write report_provenance.json
};

// Derives the figures and tables from raw metric records. Figure panels are
// wide CSVs, one file per (dataset, model): an epoch column plus one
// taskJ_mean,taskJ_std column pair per curve, aggregated over seeds:
//   fig3_<dataset>_<model>.csv   e1 probe accuracy
//   fig4_<dataset>_<model>.csv   e2 cka
//   fig5_<dataset>_<model>.csv   e4 reconstruction loss
// Tables come from e3 rows:
//   table1.csv / table1.txt      dataset,model,mean,std_tasks,std_seeds,n —
//                                per-run mean/std over the per-task probes,
//                                aggregated over seeds; the printed +- is the
//                                across-task spread
//   table2.csv / table2.txt      dataset,model,mean,std,n — joint probe,
//                                mean/std over seeds
// An explicitly requested target whose experiment id is absent from the
// metrics is a FormatError naming the id; metrics with no rows at all are a
// FormatError. Writes into opts.out_dir, prints the tables and the file list
// to `text`, and returns the files written.
std::vector<std::string> write_report(const ReportOptions& opts, std::ostream& text);

}  // namespace fp
