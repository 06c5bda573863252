#pragma once

#include <optional>
#include <string>
#include <vector>

#include "batchlab/config.hpp"
#include "batchlab/data.hpp"
#include "batchlab/stats.hpp"
#include "batchlab/theory.hpp"

#include "json.hpp"

namespace batchlab {

Dataset build_dataset(const DatasetSpec& spec);

// Hidden widths from the config plus an identity output layer sized by the
// dataset's class count.
Network build_network(const RunConfig& cfg, const Dataset& ds);

struct EpochSummary {
    int epoch{0};
    std::size_t batch_size{0};
    double lr{0.0};
    double mean_loss{0.0};
    double accuracy{0.0};
};

struct TrainResult {
    std::vector<StatsRecord> stats;
    std::vector<EpochSummary> epochs;
    double final_loss{0.0};
    double final_accuracy{0.0};
    nlohmann::json summary;
};

// Full instrumented training loop; deterministic per config.
TrainResult train(const RunConfig& cfg);

// train() plus stats.csv and summary.json under cfg.output_dir.
TrainResult run_train(const RunConfig& cfg);

struct SweepRow {
    std::size_t batch_size{0};
    double lr{0.0};
    double first_step_mean_abs_grad{0.0};
    double first_step_mean_abs_grad_std{0.0};
    double first_epoch_mean_abs_grad{0.0};
    double first_epoch_mean_abs_grad_std{0.0};
    double first_step_normalized_param_stride{0.0};
    double first_epoch_normalized_param_stride{0.0};
    double first_step_normalized_loss_stride{0.0};
    double first_step_normalized_loss_stride_std{0.0};
    double first_epoch_normalized_loss_stride{0.0};
    double first_epoch_normalized_loss_stride_std{0.0};
};

struct SweepResult {
    std::vector<SweepRow> rows;
    // absent with fewer than 3 batch sizes
    std::optional<SlopeFit> slope_first_step_grad;
    std::optional<SlopeFit> slope_first_epoch_grad;
    std::optional<SlopeFit> slope_first_step_loss_stride;
    std::optional<SlopeFit> slope_first_epoch_loss_stride;
    nlohmann::json slopes;
};

SweepResult sweep(const SweepConfig& cfg);
SweepResult run_sweep(const SweepConfig& cfg);  // writes sweep.csv + slopes.json

struct DiscardRow {
    double ratio{0.0};
    std::size_t survivors{0};
    double mean_abs_grad{0.0};
    double mean_loss{0.0};
};

struct DiscardSweepResult {
    std::vector<DiscardRow> rows;
    double spearman{0.0};
};

// One forward + discard + backward per ratio at a fixed initialization and
// fixed first batch; the gradient is read from measure_layer.
DiscardSweepResult discard_sweep(const RunConfig& cfg, const std::vector<double>& ratios,
                                 int measure_layer);
DiscardSweepResult run_discard_sweep(const RunConfig& cfg, const std::vector<double>& ratios,
                                     int measure_layer);  // writes discard.csv + discard.json

// Closed-form predictors against their Monte-Carlo oracles; every cell must
// sit within 3 sampling standard errors and 1% relative error.
nlohmann::json theory_check(const std::vector<double>& sigmas,
                            const std::vector<std::size_t>& ns, std::size_t k,
                            std::uint64_t seed);
nlohmann::json run_theory_check(const std::vector<double>& sigmas,
                                const std::vector<std::size_t>& ns, std::size_t k,
                                std::uint64_t seed, const std::string& out_path);

// Average-rank Spearman correlation.
double spearman_rank_correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace batchlab
