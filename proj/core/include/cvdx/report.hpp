// report.hpp - deterministic output artifacts: CSV/markdown tables, loss and
// frame-score line charts as standalone SVG files
#pragma once

#include <map>
#include <string>
#include <vector>

namespace cvdx::harness {
struct AblationResult;
struct RunRecord;
}  // namespace cvdx::harness

namespace cvdx::report {

void write_curve_csv(const std::string& path, const std::string& header,
                     const std::vector<double>& values);

void write_metrics_table(const std::string& path, const std::map<std::string, double>& metrics,
                         const std::map<std::string, std::pair<double, double>>& fold_stats);

// ablation.csv + ablation.md in the component/rule row layout
void write_ablation_tables(const std::string& out_dir, const harness::AblationResult& result);

// simple polyline chart; one series per inner vector
void write_line_chart_svg(const std::string& path, const std::vector<std::vector<double>>& series,
                          const std::string& title);
void write_frame_score_plot(const std::string& path,
                            const std::vector<std::vector<double>>& per_video_scores);

// markdown + csv + svg bundle for a set of completed runs; creates out_dir
void write_run_report(const std::vector<harness::RunRecord>& records, const std::string& out_dir);

}  // namespace cvdx::report
