#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "batchlab/network.hpp"
#include "batchlab/optim.hpp"

namespace batchlab {

// One measurement row per (step, layer). Curvature fields are NaN when every
// radius estimate in the layer was guarded.
struct StatsRecord {
    long step{0};
    int epoch{0};
    int layer{0};
    std::size_t batch_size{0};
    double lr{0.0};
    double mean_abs_grad{0.0};
    double mean_abs_param_stride{0.0};
    double normalized_param_stride{0.0};
    double mean_loss_stride{0.0};
    double normalized_loss_stride{0.0};
    double mean_loss{0.0};
    double curvature_median{0.0};
    double curvature_p25{0.0};
    double curvature_p75{0.0};
    std::size_t survivors{0};
};

struct LayerCurvatureProfile {
    std::optional<double> median;
    std::optional<double> p25;
    std::optional<double> p75;
    std::size_t excluded{0};  // guarded estimates left out of the percentiles
};

// Order-statistic percentiles of the |w|/|g| radius over one layer's
// parameters; guarded estimates are excluded.
std::vector<LayerCurvatureProfile> curvature_profile(const Network& net,
                                                     const OptimizerConfig& cfg);

// Snapshot of the current gradients, taken before the parameter update.
// mean_abs_grad is the L1 norm of the layer gradients over the parameter
// count; the stride fields follow from it and lr.
std::vector<StatsRecord> measure_step(const Network& net, double lr, long step, int epoch,
                                      std::size_t batch_size, std::size_t survivors,
                                      double mean_loss, const OptimizerConfig& cfg);

void export_csv(const std::vector<StatsRecord>& records, const std::string& path);
std::vector<StatsRecord> parse_stats_csv(const std::string& path);

extern const char* const kStatsCsvHeader;

}  // namespace batchlab
