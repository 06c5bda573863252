#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "batchlab/data.hpp"
#include "batchlab/network.hpp"
#include "batchlab/optim.hpp"

#include "json.hpp"

namespace batchlab {

struct DatasetSpec {
    enum class Kind { kTeacher, kCsv };
    Kind kind{Kind::kTeacher};
    std::uint64_t seed{1};
    std::size_t n_samples{8192};
    // High-dimensional inputs keep the first training steps in the
    // noise-dominated regime where the batch-size scaling laws are visible.
    std::size_t input_dim{1024};
    std::size_t n_classes{4};
    std::string csv_path;
};

struct NetworkSpec {
    std::vector<std::size_t> hidden{32, 16};  // output layer width comes from the dataset
    Activation activation{Activation::kRelu};
    LossKind loss{LossKind::kSoftmaxCrossEntropy};
};

struct RunConfig {
    DatasetSpec dataset;
    NetworkSpec network;
    OptimizerConfig optimizer;
    ScheduleSpec schedule{{{0, 64, 0.05}}};
    std::optional<DiscardPolicy> discard;
    int epochs{1};
    std::uint64_t seed{1};
    std::string output_dir{"out"};

    void validate() const;
};

enum class LrRule { kFixed, kLinearInN };

struct SweepConfig {
    RunConfig base;
    std::vector<std::size_t> batch_sizes{32, 64, 128, 256, 512, 1024, 2048, 4096};
    LrRule lr_rule{LrRule::kFixed};
    int repeats{1};
    int measure_layer{0};

    void validate() const;
};

// Flat [section] key = value files; '#' starts a comment.
using IniData = std::map<std::string, std::map<std::string, std::string>>;
IniData parse_ini(const std::string& text);
IniData parse_ini_file(const std::string& path);

RunConfig run_config_from_ini(const IniData& ini);
SweepConfig sweep_config_from_ini(const IniData& ini);

nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

// Accepts either an ini file or a summary.json/config json (sniffed from the
// first non-space character).
RunConfig load_run_config(const std::string& path);
SweepConfig load_sweep_config(const std::string& path);

}  // namespace batchlab
