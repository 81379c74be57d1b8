#include "cvdx/report.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cvdx/errors.hpp"
#include "cvdx/harness.hpp"

namespace fs = std::filesystem;

namespace cvdx::report {

namespace {
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}
}  // namespace

void write_curve_csv(const std::string& path, const std::string& header,
                     const std::vector<double>& values) {
    std::ofstream f(path);
    if (!f) throw LoadError("write_curve_csv: cannot open " + path);
    f << header << "\n";
    for (size_t i = 0; i < values.size(); ++i) f << i << "," << fmt(values[i]) << "\n";
}

void write_metrics_table(const std::string& path, const std::map<std::string, double>& metrics,
                         const std::map<std::string, std::pair<double, double>>& fold_stats) {
    std::ofstream f(path);
    if (!f) throw LoadError("write_metrics_table: cannot open " + path);
    size_t w = 12;
    for (const auto& [k, v] : metrics) w = std::max(w, k.size() + 2);
    f << std::string(w, ' ').replace(0, 6, "metric") << "value       fold mean   fold std\n";
    for (const auto& [k, v] : metrics) {
        std::string line = k + std::string(w - k.size(), ' ');
        char buf[96];
        auto it = fold_stats.find(k);
        if (it != fold_stats.end())
            std::snprintf(buf, sizeof(buf), "%-12.4f%-12.4f%-12.4f", v, it->second.first,
                          it->second.second);
        else
            std::snprintf(buf, sizeof(buf), "%-12.4f", v);
        f << line << buf << "\n";
    }
}

void write_ablation_tables(const std::string& out_dir, const harness::AblationResult& result) {
    fs::create_directories(out_dir);
    {
        std::ofstream csv(fs::path(out_dir) / "ablation.csv");
        csv << "grid,name,crs,ddp," << result.primary_metric << "_mean,"
            << result.primary_metric << "_std,seeds\n";
        for (const auto& r : result.rows) {
            csv << r.grid << "," << r.name << "," << (r.crs ? 1 : 0) << "," << (r.ddp ? 1 : 0)
                << "," << fmt(r.mean) << "," << fmt(r.std) << "," << r.per_seed.size() << "\n";
        }
    }
    std::ofstream md(fs::path(out_dir) / "ablation.md");
    md << "## Key components\n\n";
    md << "| # | CRs | DDP | " << result.primary_metric << " |\n|---|-----|-----|------|\n";
    int i = 1;
    for (const auto& r : result.rows) {
        if (r.grid != "components") continue;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.3f ± %.3f", r.mean, r.std);
        md << "| " << i++ << " | " << (r.crs ? "yes" : "no") << " | " << (r.ddp ? "yes" : "no")
           << " | " << buf << " |\n";
    }
    md << "\n## Individual rules (dual prediction on)\n\n";
    md << "| # | Temp. | Sep. | Align. | " << result.primary_metric
       << " |\n|---|-------|------|--------|------|\n";
    i = 1;
    for (const auto& r : result.rows) {
        if (r.grid != "rules") continue;
        bool temp = r.name == "temp" || r.name == "all";
        bool sep = r.name == "sep" || r.name == "all";
        bool align = r.name == "align" || r.name == "all";
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.3f ± %.3f", r.mean, r.std);
        md << "| " << i++ << " | " << (temp ? "yes" : "no") << " | " << (sep ? "yes" : "no")
           << " | " << (align ? "yes" : "no") << " | " << buf << " |\n";
    }
}

void write_line_chart_svg(const std::string& path, const std::vector<std::vector<double>>& series,
                          const std::string& title) {
    std::ofstream f(path);
    if (!f) throw LoadError("write_line_chart_svg: cannot open " + path);
    const int W = 720, H = 240, pad = 28;
    double lo = 0, hi = 1e-12;
    size_t max_n = 1;
    for (const auto& s : series)
        for (size_t i = 0; i < s.size(); ++i) {
            lo = std::min(lo, s[i]);
            hi = std::max(hi, s[i]);
        }
    for (const auto& s : series) max_n = std::max(max_n, s.size());
    if (hi <= lo) hi = lo + 1.0;

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"};
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<text x=\"" << pad << "\" y=\"16\" font-size=\"12\" font-family=\"monospace\">" << title
      << "</text>\n";
    for (size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        if (s.empty()) continue;
        f << "<polyline fill=\"none\" stroke=\"" << colors[si % 5]
          << "\" stroke-width=\"1\" points=\"";
        for (size_t i = 0; i < s.size(); ++i) {
            double x = pad + (W - 2.0 * pad) * (max_n > 1 ? double(i) / (max_n - 1) : 0.0);
            double y = H - pad - (H - 2.0 * pad) * (s[i] - lo) / (hi - lo);
            char buf[48];
            std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", x, y);
            f << buf;
        }
        f << "\"/>\n";
    }
    f << "</svg>\n";
}

void write_frame_score_plot(const std::string& path,
                            const std::vector<std::vector<double>>& per_video_scores) {
    std::vector<std::vector<double>> first;
    for (size_t i = 0; i < per_video_scores.size() && i < 5; ++i)
        first.push_back(per_video_scores[i]);
    write_line_chart_svg(path, first, "per-frame anomaly scores");
}

void write_run_report(const std::vector<harness::RunRecord>& records, const std::string& out_dir) {
    if (records.empty()) throw ValueError("write_run_report: empty input");
    fs::create_directories(out_dir);

    // collect union of metric keys in deterministic order
    std::vector<std::string> keys;
    for (const auto& r : records)
        for (const auto& [k, v] : r.final_metrics)
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    std::sort(keys.begin(), keys.end());

    {
        std::ofstream csv(fs::path(out_dir) / "runs.csv");
        csv << "config_hash";
        for (const auto& k : keys) csv << "," << k;
        csv << "\n";
        for (const auto& r : records) {
            csv << r.config_hash;
            for (const auto& k : keys) {
                auto it = r.final_metrics.find(k);
                csv << "," << (it == r.final_metrics.end() ? "" : fmt(it->second));
            }
            csv << "\n";
        }
    }
    {
        std::ofstream md(fs::path(out_dir) / "runs.md");
        md << "| run |";
        for (const auto& k : keys) md << " " << k << " |";
        md << "\n|-----|";
        for (size_t i = 0; i < keys.size(); ++i) md << "------|";
        md << "\n";
        for (const auto& r : records) {
            md << "| " << r.config_hash << " |";
            for (const auto& k : keys) {
                auto it = r.final_metrics.find(k);
                md << " " << (it == r.final_metrics.end() ? "-" : fmt(it->second)) << " |";
            }
            md << "\n";
        }
    }
    std::vector<std::vector<double>> curves;
    for (const auto& r : records)
        if (!r.joint_loss_curve.empty()) curves.push_back(r.joint_loss_curve);
        else if (!r.cg_loss_curve.empty()) curves.push_back(r.cg_loss_curve);
    if (!curves.empty())
        write_line_chart_svg((fs::path(out_dir) / "loss_curves.svg").string(), curves,
                             "training loss");
}

}  // namespace cvdx::report
