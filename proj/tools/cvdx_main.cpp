// cvdx_main.cpp - command line interface
//
// Subcommands: synth, pretrain-cg, train, eval, ablate, report.
// Configuration comes from --config (JSON) plus CVDX_* environment overrides;
// every default is part of the run snapshot. Exit code 0 on success, nonzero
// with a one-line machine-parseable error on stderr otherwise.
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cvdx/dataset_io.hpp"
#include "cvdx/errors.hpp"
#include "cvdx/harness.hpp"
#include "cvdx/report.hpp"

namespace fs = std::filesystem;
using namespace cvdx;

namespace {

harness::ExperimentConfig load_config(const std::string& path) {
    harness::ExperimentConfig cfg;
    if (!path.empty()) cfg = harness::ExperimentConfig::from_file(path);
    cfg.apply_env_overrides();
    cfg.validate();
    return cfg;
}

int fail(const std::string& code, const std::string& message) {
    nlohmann::json j{{"error", code}, {"message", message}};
    std::cerr << j.dump() << "\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"counterfactual video diagnosis pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", cg_path, learner_path, dataset_dir;
    std::vector<std::string> run_dirs;
    int count = 0, seeds = 3;

    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory");

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset to --out");
    synth->add_option("--count", count, "number of cases (0 = train+eval split sizes)");

    app.add_subcommand("pretrain-cg", "pretrain the counterfactual generator");

    auto* train = app.add_subcommand("train", "joint training of learner and head");
    train->add_option("--cg", cg_path, "generator checkpoint from pretrain-cg");

    auto* eval = app.add_subcommand("eval", "evaluate trained checkpoints");
    eval->add_option("--cg", cg_path, "generator checkpoint");
    eval->add_option("--learner", learner_path, "learner checkpoint")->required();
    eval->add_option("--dataset", dataset_dir, "evaluate a persisted dataset directory");

    auto* ablate = app.add_subcommand("ablate", "component and rule ablation grids");
    ablate->add_option("--seeds", seeds, "seeds per configuration (>= 3)");

    auto* report = app.add_subcommand("report", "tables and plots from finished runs");
    report->add_option("--runs", run_dirs, "run directories containing run_record.json");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        harness::ExperimentConfig cfg = load_config(config_path);

        if (synth->parsed()) {
            int n = count > 0 ? count : cfg.data.train_cases + cfg.data.eval_cases;
            std::vector<world::VideoRecord> records;
            if (cfg.mode == harness::Mode::weak_anomaly) {
                for (int i = 0; i < n; ++i)
                    records.push_back(world::generate_anomaly_case(
                        cfg.anomaly, derive_seed(cfg.anomaly.seed, i), i % 2 == 1));
            } else {
                records = world::make_dataset(cfg.world, n);
            }
            auto manifest = io::persist_dataset(records, out_dir);
            std::cout << "wrote " << records.size() << " cases, manifest " << manifest << "\n";
            return 0;
        }

        if (app.get_subcommand("pretrain-cg")->parsed()) {
            auto run_dir = harness::make_run_dir(out_dir, cfg);
            auto rec = harness::run_pretrain_cg(cfg, run_dir);
            std::cout << "run " << run_dir << "\n"
                      << "final cg loss " << rec.cg_loss_curve.back() << "\n";
            return 0;
        }

        if (train->parsed()) {
            auto run_dir = harness::make_run_dir(out_dir, cfg);
            auto rec = harness::run_train(cfg, run_dir, cg_path);
            std::cout << "run " << run_dir << "\n";
            if (!rec.joint_loss_curve.empty())
                std::cout << "final joint loss " << rec.joint_loss_curve.back() << "\n";
            return 0;
        }

        if (eval->parsed()) {
            auto run_dir = harness::make_run_dir(out_dir, cfg);
            std::vector<world::VideoRecord> loaded;
            const std::vector<world::VideoRecord>* records = nullptr;
            if (!dataset_dir.empty()) {
                loaded = io::load_dataset(dataset_dir);
                records = &loaded;
            }
            auto rec = harness::run_eval(cfg, run_dir, cg_path, learner_path, records);
            std::cout << "run " << run_dir << "\n";
            for (const auto& [k, v] : rec.final_metrics) std::cout << k << " " << v << "\n";
            return 0;
        }

        if (ablate->parsed()) {
            auto result = harness::run_ablation(cfg, out_dir, seeds);
            std::cout << "grid rows " << result.rows.size() << " (" << result.primary_metric
                      << ")\n";
            for (const auto& r : result.rows)
                std::cout << r.grid << "/" << r.name << " " << r.mean << " +- " << r.std << "\n";
            return 0;
        }

        if (report->parsed()) {
            std::vector<harness::RunRecord> records;
            for (const auto& dir : run_dirs) {
                std::ifstream f(fs::path(dir) / "run_record.json");
                if (!f) throw LoadError("report: missing run_record.json in " + dir);
                std::string text((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
                records.push_back(harness::RunRecord::from_json_text(text));
            }
            report::write_run_report(records, out_dir);
            std::cout << "report written to " << out_dir << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        return fail("config", e.what());
    } catch (const LoadError& e) {
        return fail("io", e.what());
    } catch (const ValueError& e) {
        return fail("value", e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
    return fail("usage", "no subcommand executed");
}
