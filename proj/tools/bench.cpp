// Benchmark harness: trains one model configuration per `run` invocation and
// summarizes archived reports with `compare`.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "odernn/odernn.hpp"

namespace {

int cmd_run(const odernn::ExperimentConfig& cfg) {
    odernn::RunReport report = odernn::run_experiment(cfg);
    std::cout << "model=" << report.config.model;
    if (report.config.model == "odernn") std::cout << " mode=" << report.config.mode;
    std::cout << " epochs=" << report.total_epochs << " best_epoch=" << report.best_epoch
              << " test_mse=" << odernn::detail::fmt(report.test_mse, "%.8g")
              << " wall_mean_s=" << odernn::detail::fmt(report.wall_mean, "%.6f")
              << " wall_sd_s=" << odernn::detail::fmt(report.wall_sd, "%.6f") << '\n';
    if (!cfg.out.empty()) std::cout << "report written to " << cfg.out << '\n';
    if (report.diverged) {
        std::cerr << "training diverged; report is partial\n";
        return 3;
    }
    return 0;
}

int cmd_compare(const std::vector<std::string>& paths, const std::string& csv_path) {
    std::vector<odernn::RunReport> reports;
    reports.reserve(paths.size());
    for (const std::string& p : paths) reports.push_back(odernn::read_report(p));
    auto rows = odernn::compare_reports(reports, paths);
    std::cout << odernn::render_compare_table(rows);
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) throw odernn::DataError("cannot open CSV path '" + csv_path + "'");
        out << odernn::render_compare_csv(rows);
        std::cout << "csv written to " << csv_path << '\n';
    }
    return 0;
}

int cmd_gen(const odernn::SineDatasetConfig& cfg, const std::string& out) {
    auto data = odernn::generate_sine_dataset(cfg);
    odernn::write_dataset(data, out);
    std::cout << data.size() << " sequences written to " << out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"batch-efficient ODE-RNN benchmark"};
    app.require_subcommand(1);

    // --- run ---
    odernn::ExperimentConfig cfg;
    cfg.out = "report.jsonl";
    double lr_flag = 0.0;
    auto* run = app.add_subcommand("run", "train one configuration and write a report");
    run->add_option("--dataset", cfg.dataset, "sine | file:PATH")->capture_default_str();
    run->add_option("--rounding", cfg.rounding, "time rounding grid for sine data (0.1 | 0.001)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    run->add_option("--num-sequences", cfg.num_sequences, "sine sequences to generate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    run->add_option("--points", cfg.points, "points per sine sequence")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    run->add_option("--model", cfg.model, "simple-rnn | odernn | combined-time")
        ->check(CLI::IsMember({"simple-rnn", "odernn", "combined-time"}))
        ->capture_default_str();
    auto* mode_opt =
        run->add_option("--mode", cfg.mode, "fixed-dt | adaptive-fixed | adaptive-geometric")
            ->check(CLI::IsMember({"fixed-dt", "adaptive-fixed", "adaptive-geometric"}))
            ->capture_default_str();
    auto* step_opt = run->add_option("--step-size", cfg.step_size,
                                     "Euler step (odernn fixed-dt, combined-time)")
                         ->check(CLI::PositiveNumber)
                         ->capture_default_str();
    auto* nsteps_opt =
        run->add_option("--num-steps", cfg.num_steps, "steps per jump (adaptive-fixed)")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
    auto* s0_opt = run->add_option("--s0", cfg.s0, "initial step (adaptive-geometric)")
                       ->check(CLI::PositiveNumber)
                       ->capture_default_str();
    auto* growth_opt =
        run->add_option("--growth", cfg.growth, "step growth factor (adaptive-geometric)")
            ->capture_default_str();
    run->add_option("--hidden", cfg.hidden, "hidden state size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    run->add_option("--batch", cfg.batch_size, "mini-batch size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    auto* lr_opt = run->add_option(
        "--lr", lr_flag, "learning rate (default 0.01 for combined-time, 0.001 otherwise)");
    run->add_option("--min-epochs", cfg.min_epochs, "minimum epochs before early stopping")
        ->capture_default_str();
    run->add_option("--max-epochs", cfg.max_epochs, "maximum epochs")->capture_default_str();
    run->add_option("--patience", cfg.patience, "early stopping patience (epochs)")
        ->capture_default_str();
    run->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    run->add_option("--out", cfg.out, "report output path")->capture_default_str();

    // --- compare ---
    std::vector<std::string> report_paths;
    std::string csv_path = "compare.csv";
    auto* cmp = app.add_subcommand("compare", "summarize reports; first one is the baseline");
    cmp->add_option("reports", report_paths, "report files (at least 2)")->required();
    cmp->add_option("--csv", csv_path, "summary CSV path")->capture_default_str();

    // --- gen ---
    odernn::SineDatasetConfig gen_cfg;
    std::string gen_out = "dataset.jsonl";
    auto* gen = app.add_subcommand("gen", "generate a sine dataset file");
    gen->add_option("--rounding", gen_cfg.rounding_grid, "time rounding grid")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gen->add_option("--num-sequences", gen_cfg.num_sequences, "sequences to generate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gen->add_option("--points", gen_cfg.points_per_sequence, "points per sequence")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gen->add_option("--seed", gen_cfg.seed, "random seed")->capture_default_str();
    gen->add_option("--out", gen_out, "dataset output path")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            // Evolver flags belong to the matching model/mode only.
            const bool is_ode = cfg.model == "odernn";
            const bool is_combined = cfg.model == "combined-time";
            if (mode_opt->count() > 0 && !is_ode) {
                throw odernn::ConfigError("--mode applies to --model odernn only");
            }
            if (step_opt->count() > 0 && !(is_combined || (is_ode && cfg.mode == "fixed-dt"))) {
                throw odernn::ConfigError(
                    "--step-size applies to combined-time or odernn fixed-dt only");
            }
            if (nsteps_opt->count() > 0 && !(is_ode && cfg.mode == "adaptive-fixed")) {
                throw odernn::ConfigError("--num-steps applies to odernn adaptive-fixed only");
            }
            if ((s0_opt->count() > 0 || growth_opt->count() > 0) &&
                !(is_ode && cfg.mode == "adaptive-geometric")) {
                throw odernn::ConfigError(
                    "--s0/--growth apply to odernn adaptive-geometric only");
            }
            if (lr_opt->count() > 0) cfg.lr = lr_flag;
            return cmd_run(cfg);
        }
        if (cmp->parsed()) {
            if (report_paths.size() < 2) {
                throw odernn::ConfigError("compare: need at least 2 report files");
            }
            return cmd_compare(report_paths, csv_path);
        }
        if (gen->parsed()) {
            return cmd_gen(gen_cfg, gen_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
