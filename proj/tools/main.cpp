#include <cstdio>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "batchlab/config.hpp"
#include "batchlab/runner.hpp"
#include "batchlab/svg.hpp"

namespace {

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(static_cast<std::size_t>(std::stoul(cell)));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"batchlab: instrumented large-batch training experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir, csv_path, x_col, y_col, out_svg, title;
    std::string ratios_arg = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
    std::string sigmas_arg = "0.5,1,2", ns_arg = "1,16,256";
    long seed_override = -1;
    std::size_t mc_trials = 1000000;
    int measure_layer = 1;
    bool loglog = false, logx = false, logy = false;

    auto* train_cmd = app.add_subcommand("train", "run one instrumented training");
    train_cmd->add_option("--config", config_path, "run config (ini or summary.json)")
        ->required();
    train_cmd->add_option("--seed", seed_override, "override the config seed");
    train_cmd->add_option("--out", out_dir, "override the output directory");

    auto* sweep_cmd = app.add_subcommand("sweep", "batch-size scaling sweep");
    sweep_cmd->add_option("--config", config_path, "sweep config (ini)")->required();
    sweep_cmd->add_option("--seed", seed_override, "override the config seed");
    sweep_cmd->add_option("--out", out_dir, "override the output directory");

    auto* discard_cmd = app.add_subcommand("discard-sweep", "loss-discard ratio sweep");
    discard_cmd->add_option("--config", config_path, "run config (ini)")->required();
    discard_cmd->add_option("--ratios", ratios_arg, "comma-separated discard ratios");
    discard_cmd->add_option("--layer", measure_layer, "layer whose gradient is measured");
    discard_cmd->add_option("--seed", seed_override, "override the config seed");
    discard_cmd->add_option("--out", out_dir, "override the output directory");

    auto* theory_cmd = app.add_subcommand("theory-check",
                                          "closed-form predictors vs Monte-Carlo oracles");
    theory_cmd->add_option("--sigmas", sigmas_arg, "comma-separated sigma values");
    theory_cmd->add_option("--ns", ns_arg, "comma-separated batch sizes");
    theory_cmd->add_option("--k", mc_trials, "Monte-Carlo trials per cell");
    theory_cmd->add_option("--seed", seed_override, "sampling seed");
    theory_cmd->add_option("--out", out_dir, "output directory for report.json");

    auto* plot_cmd = app.add_subcommand("plot", "render a CSV column pair as an SVG chart");
    plot_cmd->add_option("--csv", csv_path, "input csv file")->required();
    plot_cmd->add_option("--x", x_col, "x column name")->required();
    plot_cmd->add_option("--y", y_col, "y column name")->required();
    plot_cmd->add_option("--out", out_svg, "output svg path")->required();
    plot_cmd->add_option("--title", title, "chart title");
    plot_cmd->add_flag("--loglog", loglog, "log scale on both axes");
    plot_cmd->add_flag("--logx", logx, "log scale x axis");
    plot_cmd->add_flag("--logy", logy, "log scale y axis");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd) {
            batchlab::RunConfig cfg = batchlab::load_run_config(config_path);
            if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
            if (!out_dir.empty()) cfg.output_dir = out_dir;
            auto result = batchlab::run_train(cfg);
            std::cout << "final_loss=" << result.final_loss
                      << " final_accuracy=" << result.final_accuracy << " outputs in "
                      << cfg.output_dir << "\n";
        } else if (*sweep_cmd) {
            batchlab::SweepConfig cfg = batchlab::load_sweep_config(config_path);
            if (seed_override >= 0) cfg.base.seed = static_cast<std::uint64_t>(seed_override);
            if (!out_dir.empty()) cfg.base.output_dir = out_dir;
            auto result = batchlab::run_sweep(cfg);
            std::cout << result.slopes.dump(2) << "\n";
        } else if (*discard_cmd) {
            batchlab::RunConfig cfg = batchlab::load_run_config(config_path);
            if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
            if (!out_dir.empty()) cfg.output_dir = out_dir;
            auto result =
                batchlab::run_discard_sweep(cfg, parse_double_list(ratios_arg), measure_layer);
            std::cout << "spearman=" << result.spearman << " rows=" << result.rows.size()
                      << " outputs in " << cfg.output_dir << "\n";
        } else if (*theory_cmd) {
            std::uint64_t seed = seed_override >= 0 ? static_cast<std::uint64_t>(seed_override) : 7;
            std::string dir = out_dir.empty() ? "out" : out_dir;
            auto report = batchlab::run_theory_check(parse_double_list(sigmas_arg),
                                                     parse_size_list(ns_arg), mc_trials, seed,
                                                     dir + "/report.json");
            std::cout << "all_pass=" << (report["all_pass"].get<bool>() ? "true" : "false")
                      << " report in " << dir << "/report.json\n";
            if (!report["all_pass"].get<bool>()) return 1;
        } else if (*plot_cmd) {
            batchlab::PlotOptions opts;
            opts.log_x = loglog || logx;
            opts.log_y = loglog || logy;
            opts.title = title;
            batchlab::emit_plot(csv_path, x_col, y_col, opts, out_svg);
            std::cout << "wrote " << out_svg << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
