#include "batchlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace batchlab {

const char* const kStatsCsvHeader =
    "step,epoch,layer,batch_size,lr,mean_abs_grad,mean_abs_param_stride,"
    "normalized_param_stride,mean_loss_stride,normalized_loss_stride,mean_loss,"
    "curvature_median,curvature_p25,curvature_p75,survivors";

namespace {

double order_statistic(std::vector<double>& values, double q) {
    std::size_t idx = static_cast<std::size_t>(q * static_cast<double>(values.size() - 1));
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(idx),
                     values.end());
    return values[idx];
}

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::vector<LayerCurvatureProfile> curvature_profile(const Network& net,
                                                     const OptimizerConfig& cfg) {
    std::vector<LayerCurvatureProfile> out;
    for (const auto& layer : net.layers) {
        LayerCurvatureProfile prof;
        std::vector<double> radii;
        radii.reserve(layer.param_count());
        auto collect = [&](const Tensor& w, const Tensor& g) {
            for (std::size_t i = 0; i < w.size(); ++i) {
                auto est = curvature_radius_approx(w.data[i], g.data[i], cfg);
                if (est.guarded)
                    ++prof.excluded;
                else
                    radii.push_back(est.radius);
            }
        };
        collect(layer.weights, layer.grad_weights);
        collect(layer.bias, layer.grad_bias);
        if (!radii.empty()) {
            prof.median = order_statistic(radii, 0.5);
            prof.p25 = order_statistic(radii, 0.25);
            prof.p75 = order_statistic(radii, 0.75);
        }
        out.push_back(std::move(prof));
    }
    return out;
}

std::vector<StatsRecord> measure_step(const Network& net, double lr, long step, int epoch,
                                      std::size_t batch_size, std::size_t survivors,
                                      double mean_loss, const OptimizerConfig& cfg) {
    auto profiles = curvature_profile(net, cfg);
    std::vector<StatsRecord> records;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const auto& layer = net.layers[li];
        if (layer.grad_weights.size() != layer.weights.size())
            throw std::runtime_error("measure_step: gradients not populated");
        double l1 = 0.0, sq = 0.0;
        for (double g : layer.grad_weights.data) { l1 += std::abs(g); sq += g * g; }
        for (double g : layer.grad_bias.data) { l1 += std::abs(g); sq += g * g; }
        double count = static_cast<double>(layer.param_count());

        StatsRecord rec;
        rec.step = step;
        rec.epoch = epoch;
        rec.layer = static_cast<int>(li);
        rec.batch_size = batch_size;
        rec.lr = lr;
        rec.mean_abs_grad = l1 / count;
        rec.normalized_param_stride = rec.mean_abs_grad;
        rec.mean_abs_param_stride = lr * rec.mean_abs_grad;
        rec.normalized_loss_stride = sq / count;
        rec.mean_loss_stride = lr * rec.normalized_loss_stride;
        rec.mean_loss = mean_loss;
        rec.curvature_median = profiles[li].median.value_or(kNan);
        rec.curvature_p25 = profiles[li].p25.value_or(kNan);
        rec.curvature_p75 = profiles[li].p75.value_or(kNan);
        rec.survivors = survivors;
        records.push_back(rec);
    }
    return records;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void export_csv(const std::vector<StatsRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write stats file: " + path);
    out << kStatsCsvHeader << "\n";
    for (const auto& r : records) {
        out << r.step << ',' << r.epoch << ',' << r.layer << ',' << r.batch_size << ','
            << fmt(r.lr) << ',' << fmt(r.mean_abs_grad) << ',' << fmt(r.mean_abs_param_stride)
            << ',' << fmt(r.normalized_param_stride) << ',' << fmt(r.mean_loss_stride) << ','
            << fmt(r.normalized_loss_stride) << ',' << fmt(r.mean_loss) << ','
            << fmt(r.curvature_median) << ',' << fmt(r.curvature_p25) << ','
            << fmt(r.curvature_p75) << ',' << r.survivors << "\n";
    }
}

std::vector<StatsRecord> parse_stats_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open stats file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != kStatsCsvHeader)
        throw std::runtime_error(path + ": unexpected stats header");
    std::vector<StatsRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 15)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed row");
        StatsRecord r;
        r.step = std::stol(cells[0]);
        r.epoch = std::stoi(cells[1]);
        r.layer = std::stoi(cells[2]);
        r.batch_size = std::stoul(cells[3]);
        r.lr = std::stod(cells[4]);
        r.mean_abs_grad = std::stod(cells[5]);
        r.mean_abs_param_stride = std::stod(cells[6]);
        r.normalized_param_stride = std::stod(cells[7]);
        r.mean_loss_stride = std::stod(cells[8]);
        r.normalized_loss_stride = std::stod(cells[9]);
        r.mean_loss = std::stod(cells[10]);
        r.curvature_median = std::stod(cells[11]);
        r.curvature_p25 = std::stod(cells[12]);
        r.curvature_p75 = std::stod(cells[13]);
        r.survivors = std::stoul(cells[14]);
        out.push_back(r);
    }
    return out;
}

}  // namespace batchlab
