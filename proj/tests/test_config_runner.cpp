#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <stdexcept>

#include "doctest.h"

#include "batchlab/config.hpp"
#include "batchlab/runner.hpp"

using namespace batchlab;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("batchlab-runner-" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// small, fast run config
RunConfig tiny_config(const std::string& out_dir) {
    RunConfig cfg;
    cfg.dataset.seed = 3;
    cfg.dataset.n_samples = 64;
    cfg.dataset.input_dim = 6;
    cfg.dataset.n_classes = 3;
    cfg.network.hidden = {8};
    cfg.schedule.phases = {{0, 64, 0.05}};
    cfg.epochs = 1;
    cfg.seed = 5;
    cfg.output_dir = out_dir;
    return cfg;
}

const char* kSampleIni = R"(
# sample config
[dataset]
kind = teacher
seed = 3
n_samples = 64
input_dim = 6
n_classes = 3

[network]
hidden = 8
activation = relu
loss = softmax_cross_entropy

[optimizer]
kind = sgd
lr = 0.05

[schedule]
phases = 0:64:0.05

[run]
epochs = 1
seed = 5
output_dir = OUTDIR
)";

}  // namespace

TEST_CASE("ini parsing: sections, comments, typed values") {
    IniData ini = parse_ini("[a]\nx = 1 # trailing\n\n[b]\ny = hello\n");
    CHECK(ini["a"]["x"] == "1");
    CHECK(ini["b"]["y"] == "hello");
    CHECK_THROWS_AS(parse_ini("[a]\nbroken line\n"), std::runtime_error);
}

TEST_CASE("run config from ini and json echo round-trip") {
    IniData ini = parse_ini(kSampleIni);
    RunConfig cfg = run_config_from_ini(ini);
    CHECK(cfg.dataset.n_samples == 64);
    CHECK(cfg.network.hidden == std::vector<std::size_t>{8});
    CHECK(cfg.schedule.phases.size() == 1);
    CHECK(cfg.optimizer.kind == OptimizerKind::kSgd);

    RunConfig back = run_config_from_json(run_config_to_json(cfg));
    CHECK(run_config_to_json(back) == run_config_to_json(cfg));
}

TEST_CASE("invalid configs are rejected before any training") {
    RunConfig cfg = tiny_config("unused");
    cfg.epochs = 0;
    CHECK_THROWS_AS(train(cfg), std::invalid_argument);

    cfg = tiny_config("unused");
    cfg.schedule.phases = {{0, 0, 0.05}};
    CHECK_THROWS_AS(train(cfg), std::invalid_argument);
}

TEST_CASE("run_train: 1 epoch at full batch records exactly one step") {
    TempDir tmp;
    RunConfig cfg = tiny_config(tmp.file("run"));
    TrainResult result = run_train(cfg);
    long max_step = -1;
    for (const auto& r : result.stats) max_step = std::max(max_step, r.step);
    CHECK(max_step == 0);
    CHECK(result.stats.size() == 2);  // one record per layer
    CHECK(std::filesystem::exists(tmp.file("run") + "/stats.csv"));
    CHECK(std::filesystem::exists(tmp.file("run") + "/summary.json"));
}

TEST_CASE("run_train: summary shows the schedule phase change at epoch 1") {
    TempDir tmp;
    RunConfig cfg = tiny_config(tmp.file("sched"));
    cfg.schedule.phases = {{0, 8, 0.005}, {1, 32, 0.05}};
    cfg.epochs = 2;
    TrainResult result = run_train(cfg);
    CHECK(result.summary["epochs"][0]["batch_size"] == 8);
    CHECK(result.summary["epochs"][0]["lr"] == 0.005);
    CHECK(result.summary["epochs"][1]["batch_size"] == 32);
    CHECK(result.summary["epochs"][1]["lr"] == 0.05);
}

TEST_CASE("run_train is deterministic and reproducible from the summary echo") {
    TempDir tmp;
    RunConfig cfg = tiny_config(tmp.file("a"));
    cfg.epochs = 2;
    cfg.schedule.phases = {{0, 16, 0.05}};
    run_train(cfg);

    cfg.output_dir = tmp.file("b");
    run_train(cfg);
    CHECK(slurp(tmp.file("a") + "/stats.csv") == slurp(tmp.file("b") + "/stats.csv"));

    // re-run from the summary.json config echo
    RunConfig echoed = load_run_config(tmp.file("a") + "/summary.json");
    echoed.output_dir = tmp.file("c");
    run_train(echoed);
    CHECK(slurp(tmp.file("a") + "/stats.csv") == slurp(tmp.file("c") + "/stats.csv"));
}

TEST_CASE("run_train applies the discard policy in its active epochs") {
    TempDir tmp;
    RunConfig cfg = tiny_config(tmp.file("disc"));
    cfg.epochs = 2;
    cfg.schedule.phases = {{0, 16, 0.05}};
    cfg.discard = DiscardPolicy{0.25, 0, 0};  // active only in epoch 0
    TrainResult result = run_train(cfg);
    for (const auto& r : result.stats) {
        if (r.epoch == 0)
            CHECK(r.survivors == 12);
        else
            CHECK(r.survivors == r.batch_size);
    }
}

TEST_CASE("layer-wise optimizers run end to end") {
    TempDir tmp;
    for (auto kind : {OptimizerKind::kMclr, OptimizerKind::kLars, OptimizerKind::kPercentDelta}) {
        RunConfig cfg = tiny_config(tmp.file("opt"));
        cfg.optimizer.kind = kind;
        cfg.optimizer.gamma = 0.001;
        TrainResult result = train(cfg);
        CHECK(std::isfinite(result.final_loss));
    }
}

TEST_CASE("cblr optimizer runs end to end on a tiny net") {
    RunConfig cfg = tiny_config("unused");
    cfg.dataset.n_samples = 16;
    cfg.dataset.input_dim = 3;
    cfg.network.hidden = {4};
    cfg.schedule.phases = {{0, 16, 0.05}};
    cfg.optimizer.kind = OptimizerKind::kCblr;
    cfg.optimizer.gamma = 1e-4;
    TrainResult result = train(cfg);
    CHECK(std::isfinite(result.final_loss));
}

TEST_CASE("sweep: isolation means only n varies; short sweeps flag slopes absent") {
    SweepConfig sw;
    sw.base = tiny_config("unused");
    sw.base.dataset.n_samples = 128;
    sw.batch_sizes = {16, 32};
    sw.measure_layer = 0;
    SweepResult result = sweep(sw);
    REQUIRE(result.rows.size() == 2);
    CHECK(result.slopes["status"] == "absent");
    CHECK_FALSE(result.slope_first_step_grad.has_value());
    // smaller batch sees the larger first-step gradient
    CHECK(result.rows[0].first_step_mean_abs_grad > result.rows[1].first_step_mean_abs_grad);
}

TEST_CASE("sweep: oversized batch sizes are listed in the error") {
    SweepConfig sw;
    sw.base = tiny_config("unused");
    sw.base.dataset.n_samples = 64;
    sw.batch_sizes = {32, 128, 256};
    CHECK_THROWS_WITH_AS(sweep(sw), doctest::Contains("128, 256"), std::invalid_argument);
}

TEST_CASE("sweep: repeats populate the dispersion column") {
    SweepConfig sw;
    sw.base = tiny_config("unused");
    sw.base.dataset.n_samples = 128;
    sw.batch_sizes = {16, 32, 64};
    sw.repeats = 3;
    SweepResult result = sweep(sw);
    for (const auto& row : result.rows) CHECK(row.first_step_mean_abs_grad_std > 0.0);
    CHECK(result.slope_first_step_grad.has_value());
}

TEST_CASE("discard_sweep: ratio 0 equals the unfiltered baseline") {
    RunConfig cfg = tiny_config("unused");
    cfg.schedule.phases = {{0, 32, 0.05}};
    auto result = discard_sweep(cfg, {0.0, 0.3, 0.6}, 1);
    REQUIRE(result.rows.size() == 3);
    CHECK(result.rows[0].survivors == 32);

    auto baseline = discard_sweep(cfg, {0.0}, 1);
    CHECK(result.rows[0].mean_abs_grad == baseline.rows[0].mean_abs_grad);
}

TEST_CASE("discard_sweep writes csv rows per ratio") {
    TempDir tmp;
    RunConfig cfg = tiny_config(tmp.file("ds"));
    cfg.schedule.phases = {{0, 32, 0.05}};
    std::vector<double> ratios{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    auto result = run_discard_sweep(cfg, ratios, 1);
    CHECK(result.rows.size() == 9);
    std::string csv = slurp(tmp.file("ds") + "/discard.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
}

TEST_CASE("spearman: monotone series score 1, ties handled by average ranks") {
    CHECK(spearman_rank_correlation({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman_rank_correlation({1, 2, 3, 4}, {40, 30, 20, 10}) == doctest::Approx(-1.0));
    double with_ties = spearman_rank_correlation({1, 2, 3, 4}, {5, 5, 6, 7});
    CHECK(with_ties > 0.8);
}

TEST_CASE("theory_check report structure at small k") {
    auto report = theory_check({1.0}, {1, 16}, 20000, 3);
    CHECK(report["cells"].size() == 8);  // 2 cells x 4 predictors
    for (const auto& cell : report["cells"]) {
        CHECK(cell.contains("rel_error"));
        CHECK(cell["within_3se"].is_boolean());
    }
}
