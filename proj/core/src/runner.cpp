#include "batchlab/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "batchlab/optim.hpp"

namespace batchlab {

namespace {

constexpr double kHessianProbeEps = 1e-4;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

Batch whole_dataset_batch(const Dataset& ds) {
    Batch b;
    b.inputs = ds.inputs;
    b.targets = ds.targets;
    b.sample_ids.resize(ds.size());
    std::iota(b.sample_ids.begin(), b.sample_ids.end(), 0);
    return b;
}

void apply_update(Network& net, const Batch& batch, const SchedulePhase& phase,
                  const OptimizerConfig& opt) {
    switch (opt.kind) {
        case OptimizerKind::kSgd:
            for (auto& layer : net.layers) sgd_step(layer, phase.lr, opt.weight_decay);
            break;
        case OptimizerKind::kCblr: {
            auto hess = hessian_diagonal(net, batch, kHessianProbeEps);
            for (std::size_t li = 0; li < net.layers.size(); ++li)
                cblr_step(net.layers[li], hess[li], opt);
            break;
        }
        case OptimizerKind::kMclr:
            for (auto& layer : net.layers)
                layerwise_step(layer, mclr_layer_lr(layer, opt), opt.weight_decay);
            break;
        case OptimizerKind::kLars:
            for (auto& layer : net.layers)
                layerwise_step(layer, lars_layer_lr(layer, opt), opt.weight_decay);
            break;
        case OptimizerKind::kPercentDelta:
            for (auto& layer : net.layers)
                layerwise_step(layer, percent_delta_layer_lr(layer, opt), opt.weight_decay);
            break;
    }
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Dataset build_dataset(const DatasetSpec& spec) {
    if (spec.kind == DatasetSpec::Kind::kCsv) return load_csv_dataset(spec.csv_path);
    return gen_teacher_dataset(spec.seed, spec.n_samples, spec.input_dim, spec.n_classes);
}

Network build_network(const RunConfig& cfg, const Dataset& ds) {
    std::vector<std::size_t> widths = cfg.network.hidden;
    widths.push_back(ds.num_classes());
    std::vector<Activation> acts(cfg.network.hidden.size(), cfg.network.activation);
    acts.push_back(Activation::kIdentity);
    return make_network(ds.input_dim(), widths, acts, cfg.network.loss, cfg.seed);
}

TrainResult train(const RunConfig& cfg) {
    cfg.validate();
    Dataset ds = build_dataset(cfg.dataset);
    Network net = build_network(cfg, ds);

    TrainResult result;
    Batch eval_batch = whole_dataset_batch(ds);
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        SchedulePhase phase = schedule_lookup(cfg.schedule, epoch);
        if (phase.batch_size > ds.size())
            throw std::invalid_argument("schedule batch size " +
                                        std::to_string(phase.batch_size) +
                                        " exceeds dataset size " + std::to_string(ds.size()));
        Batcher batcher(ds, phase.batch_size, mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
        std::size_t steps_per_epoch =
            (ds.size() + phase.batch_size - 1) / phase.batch_size;
        for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
            Batch batch = batcher.next();
            std::size_t full_size = batch.size();
            if (cfg.discard && cfg.discard->active(epoch) && cfg.discard->ratio > 0.0) {
                ForwardResult fr = forward(net, batch);
                batch = discard_small_loss(batch, fr.per_sample_losses, cfg.discard->ratio);
            }
            ForwardResult res = backward(net, batch);
            auto records = measure_step(net, phase.lr, step, epoch, full_size, batch.size(),
                                        res.mean_loss, cfg.optimizer);
            result.stats.insert(result.stats.end(), records.begin(), records.end());
            apply_update(net, batch, phase, cfg.optimizer);
        }

        EpochSummary es;
        es.epoch = epoch;
        es.batch_size = phase.batch_size;
        es.lr = phase.lr;
        Evaluation ev = evaluate(net, eval_batch);
        es.mean_loss = ev.mean_loss;
        es.accuracy = ev.accuracy;
        result.epochs.push_back(es);
    }
    result.final_loss = result.epochs.back().mean_loss;
    result.final_accuracy = result.epochs.back().accuracy;

    nlohmann::json j;
    j["config"] = run_config_to_json(cfg);
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : result.epochs)
        epochs.push_back({{"epoch", e.epoch},
                          {"batch_size", e.batch_size},
                          {"lr", e.lr},
                          {"mean_loss", e.mean_loss},
                          {"accuracy", e.accuracy}});
    j["epochs"] = epochs;
    j["final_loss"] = result.final_loss;
    j["final_accuracy"] = result.final_accuracy;
    j["steps"] = step;
    result.summary = j;
    return result;
}

TrainResult run_train(const RunConfig& cfg) {
    TrainResult result = train(cfg);
    std::filesystem::create_directories(cfg.output_dir);
    export_csv(result.stats, cfg.output_dir + "/stats.csv");
    std::ofstream out(cfg.output_dir + "/summary.json");
    if (!out) throw std::runtime_error("cannot write summary.json under " + cfg.output_dir);
    out << result.summary.dump(2) << "\n";
    return result;
}

namespace {

struct Accum {
    std::vector<double> values;
    void add(double v) { values.push_back(v); }
    double mean() const {
        double s = 0;
        for (double v : values) s += v;
        return s / static_cast<double>(values.size());
    }
    double stddev() const {
        if (values.size() < 2) return 0.0;
        double m = mean(), s = 0;
        for (double v : values) s += (v - m) * (v - m);
        return std::sqrt(s / static_cast<double>(values.size() - 1));
    }
};

nlohmann::json slope_json(const SlopeFit& fit) {
    return {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}};
}

}  // namespace

SweepResult sweep(const SweepConfig& cfg) {
    cfg.validate();
    Dataset ds = build_dataset(cfg.base.dataset);

    std::string offenders;
    for (std::size_t n : cfg.batch_sizes)
        if (n > ds.size()) offenders += (offenders.empty() ? "" : ", ") + std::to_string(n);
    if (!offenders.empty())
        throw std::invalid_argument("batch sizes exceed dataset size " +
                                    std::to_string(ds.size()) + ": " + offenders);

    double base_lr = cfg.base.schedule.phases.front().lr;
    SweepResult result;
    for (std::size_t n : cfg.batch_sizes) {
        double lr = base_lr;
        if (cfg.lr_rule == LrRule::kLinearInN)
            lr = base_lr * static_cast<double>(n) / static_cast<double>(cfg.batch_sizes.front());

        Accum fs_grad, fe_grad, fs_loss, fe_loss;
        for (int rep = 0; rep < cfg.repeats; ++rep) {
            RunConfig run_cfg = cfg.base;
            run_cfg.seed = cfg.base.seed + static_cast<std::uint64_t>(rep);
            run_cfg.epochs = 1;
            run_cfg.schedule.phases = {{0, n, lr}};
            run_cfg.discard.reset();
            TrainResult tr = train(run_cfg);

            double fsg = 0, feg = 0, fsl = 0, fel = 0;
            std::size_t steps = 0;
            bool found = false;
            for (const auto& rec : tr.stats) {
                if (rec.layer != cfg.measure_layer) continue;
                found = true;
                if (rec.step == 0) {
                    fsg = rec.mean_abs_grad;
                    fsl = rec.normalized_loss_stride;
                }
                feg += rec.mean_abs_grad;
                fel += rec.normalized_loss_stride;
                ++steps;
            }
            if (!found)
                throw std::invalid_argument("measure_layer " +
                                            std::to_string(cfg.measure_layer) +
                                            " does not exist in the network");
            fs_grad.add(fsg);
            fe_grad.add(feg / static_cast<double>(steps));
            fs_loss.add(fsl);
            fe_loss.add(fel / static_cast<double>(steps));
        }

        SweepRow row;
        row.batch_size = n;
        row.lr = lr;
        row.first_step_mean_abs_grad = fs_grad.mean();
        row.first_step_mean_abs_grad_std = fs_grad.stddev();
        row.first_epoch_mean_abs_grad = fe_grad.mean();
        row.first_epoch_mean_abs_grad_std = fe_grad.stddev();
        row.first_step_normalized_param_stride = row.first_step_mean_abs_grad;
        row.first_epoch_normalized_param_stride = row.first_epoch_mean_abs_grad;
        row.first_step_normalized_loss_stride = fs_loss.mean();
        row.first_step_normalized_loss_stride_std = fs_loss.stddev();
        row.first_epoch_normalized_loss_stride = fe_loss.mean();
        row.first_epoch_normalized_loss_stride_std = fe_loss.stddev();
        result.rows.push_back(row);
    }

    if (cfg.batch_sizes.size() >= 3) {
        auto fit_of = [&](auto getter) {
            std::vector<std::pair<double, double>> pts;
            for (const auto& row : result.rows)
                pts.emplace_back(static_cast<double>(row.batch_size), getter(row));
            return fit_loglog_slope(pts);
        };
        result.slope_first_step_grad =
            fit_of([](const SweepRow& r) { return r.first_step_mean_abs_grad; });
        result.slope_first_epoch_grad =
            fit_of([](const SweepRow& r) { return r.first_epoch_mean_abs_grad; });
        result.slope_first_step_loss_stride =
            fit_of([](const SweepRow& r) { return r.first_step_normalized_loss_stride; });
        result.slope_first_epoch_loss_stride =
            fit_of([](const SweepRow& r) { return r.first_epoch_normalized_loss_stride; });
        result.slopes = {
            {"first_step_mean_abs_grad", slope_json(*result.slope_first_step_grad)},
            {"first_epoch_mean_abs_grad", slope_json(*result.slope_first_epoch_grad)},
            {"first_step_normalized_loss_stride",
             slope_json(*result.slope_first_step_loss_stride)},
            {"first_epoch_normalized_loss_stride",
             slope_json(*result.slope_first_epoch_loss_stride)},
        };
    } else {
        result.slopes = {{"status", "absent"},
                         {"reason", "need at least 3 batch sizes for a slope fit"}};
    }
    return result;
}

SweepResult run_sweep(const SweepConfig& cfg) {
    SweepResult result = sweep(cfg);
    std::filesystem::create_directories(cfg.base.output_dir);
    std::ofstream csv(cfg.base.output_dir + "/sweep.csv");
    if (!csv) throw std::runtime_error("cannot write sweep.csv under " + cfg.base.output_dir);
    csv << "batch_size,lr,first_step_mean_abs_grad,first_step_mean_abs_grad_std,"
           "first_epoch_mean_abs_grad,first_epoch_mean_abs_grad_std,"
           "first_step_normalized_param_stride,first_epoch_normalized_param_stride,"
           "first_step_normalized_loss_stride,first_step_normalized_loss_stride_std,"
           "first_epoch_normalized_loss_stride,first_epoch_normalized_loss_stride_std\n";
    for (const auto& r : result.rows) {
        csv << r.batch_size << ',' << fmt(r.lr) << ',' << fmt(r.first_step_mean_abs_grad) << ','
            << fmt(r.first_step_mean_abs_grad_std) << ',' << fmt(r.first_epoch_mean_abs_grad)
            << ',' << fmt(r.first_epoch_mean_abs_grad_std) << ','
            << fmt(r.first_step_normalized_param_stride) << ','
            << fmt(r.first_epoch_normalized_param_stride) << ','
            << fmt(r.first_step_normalized_loss_stride) << ','
            << fmt(r.first_step_normalized_loss_stride_std) << ','
            << fmt(r.first_epoch_normalized_loss_stride) << ','
            << fmt(r.first_epoch_normalized_loss_stride_std) << "\n";
    }
    std::ofstream js(cfg.base.output_dir + "/slopes.json");
    js << result.slopes.dump(2) << "\n";
    return result;
}

double spearman_rank_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("spearman needs two equal-length series of >= 2 points");
    auto ranks = [](const std::vector<double>& v) {
        std::size_t n = v.size();
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
        std::vector<double> r(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
            double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;  // average rank over ties
            i = j + 1;
        }
        return r;
    };
    std::vector<double> ra = ranks(a), rb = ranks(b);
    double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) { ma += ra[i]; mb += rb[i]; }
    ma /= n;
    mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

DiscardSweepResult discard_sweep(const RunConfig& cfg, const std::vector<double>& ratios,
                                 int measure_layer) {
    cfg.validate();
    if (ratios.empty()) throw std::invalid_argument("discard sweep needs ratios");
    Dataset ds = build_dataset(cfg.dataset);
    Network reference = build_network(cfg, ds);
    SchedulePhase phase = schedule_lookup(cfg.schedule, 0);
    Batcher batcher(ds, phase.batch_size, mix_seed(cfg.seed, 0));
    Batch batch = batcher.next();
    ForwardResult base_losses = forward(reference, batch);

    DiscardSweepResult result;
    for (double ratio : ratios) {
        Network net = reference;  // fixed initialization per ratio
        Batch kept = discard_small_loss(batch, base_losses.per_sample_losses, ratio);
        ForwardResult res = backward(net, kept);
        if (measure_layer < 0 || static_cast<std::size_t>(measure_layer) >= net.layers.size())
            throw std::invalid_argument("measure_layer out of range");
        const auto& layer = net.layers[static_cast<std::size_t>(measure_layer)];
        double l1 = 0;
        for (double g : layer.grad_weights.data) l1 += std::abs(g);
        for (double g : layer.grad_bias.data) l1 += std::abs(g);

        DiscardRow row;
        row.ratio = ratio;
        row.survivors = kept.size();
        row.mean_abs_grad = l1 / static_cast<double>(layer.param_count());
        row.mean_loss = res.mean_loss;
        result.rows.push_back(row);
    }
    std::vector<double> xs, ys;
    for (const auto& r : result.rows) {
        xs.push_back(r.ratio);
        ys.push_back(r.mean_abs_grad);
    }
    result.spearman = result.rows.size() >= 2 ? spearman_rank_correlation(xs, ys) : 0.0;
    return result;
}

DiscardSweepResult run_discard_sweep(const RunConfig& cfg, const std::vector<double>& ratios,
                                     int measure_layer) {
    DiscardSweepResult result = discard_sweep(cfg, ratios, measure_layer);
    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream csv(cfg.output_dir + "/discard.csv");
    if (!csv) throw std::runtime_error("cannot write discard.csv under " + cfg.output_dir);
    csv << "ratio,survivors,mean_abs_grad,mean_loss\n";
    for (const auto& r : result.rows)
        csv << fmt(r.ratio) << ',' << r.survivors << ',' << fmt(r.mean_abs_grad) << ','
            << fmt(r.mean_loss) << "\n";
    std::ofstream js(cfg.output_dir + "/discard.json");
    js << nlohmann::json{{"spearman", result.spearman},
                         {"measure_layer", measure_layer}}.dump(2)
       << "\n";
    return result;
}

nlohmann::json theory_check(const std::vector<double>& sigmas,
                            const std::vector<std::size_t>& ns, std::size_t k,
                            std::uint64_t seed) {
    constexpr double kLr = 0.1;
    constexpr double kA = 0.5;

    nlohmann::json cells = nlohmann::json::array();
    bool all_pass = true;
    std::uint64_t cell_id = 0;
    for (double sigma : sigmas) {
        for (std::size_t n : ns) {
            GradientMoments m = mc_gradient_moments(sigma, n, k, mix_seed(seed, cell_id++));
            struct Entry {
                const char* predictor;
                double predicted, mc, se;
            };
            Entry entries[] = {
                {"mean_abs_gradient", predict_mean_abs_gradient(sigma, n), m.abs_mean.mean,
                 m.abs_mean.std_error},
                {"param_stride", predict_param_stride(sigma, kLr, n), kLr * m.abs_mean.mean,
                 kLr * m.abs_mean.std_error},
                {"loss_stride", predict_loss_stride(sigma, kLr, n), kLr * m.square_mean.mean,
                 kLr * m.square_mean.std_error},
                {"mean_distance", predict_mean_distance(sigma, kA, n),
                 m.abs_mean.mean / (2.0 * kA), m.abs_mean.std_error / (2.0 * kA)},
            };
            for (const auto& e : entries) {
                double rel = std::abs(e.mc - e.predicted) / e.predicted;
                bool within_3se = std::abs(e.mc - e.predicted) <= 3.0 * e.se;
                bool within_1pct = rel <= 0.01;
                bool pass = within_3se && within_1pct;
                all_pass = all_pass && pass;
                cells.push_back({{"sigma", sigma},
                                 {"n", n},
                                 {"predictor", e.predictor},
                                 {"predicted", e.predicted},
                                 {"mc", e.mc},
                                 {"std_error", e.se},
                                 {"rel_error", rel},
                                 {"within_3se", within_3se},
                                 {"within_1pct", within_1pct},
                                 {"pass", pass}});
            }
        }
    }
    return {{"k", k}, {"seed", seed}, {"lr", kLr}, {"a", kA},
            {"cells", cells}, {"all_pass", all_pass}};
}

nlohmann::json run_theory_check(const std::vector<double>& sigmas,
                                const std::vector<std::size_t>& ns, std::size_t k,
                                std::uint64_t seed, const std::string& out_path) {
    nlohmann::json report = theory_check(sigmas, ns, k, seed);
    std::filesystem::path p(out_path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write report: " + out_path);
    out << report.dump(2) << "\n";
    return report;
}

}  // namespace batchlab
