#include "batchlab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace batchlab {

double predict_mean_abs_gradient(double sigma, std::size_t n) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (n < 1) throw std::invalid_argument("n must be at least 1");
    return sigma * std::sqrt(2.0 / std::numbers::pi) / std::sqrt(static_cast<double>(n));
}

double predict_param_stride(double sigma, double lr, std::size_t n) {
    return lr * predict_mean_abs_gradient(sigma, n);
}

double predict_loss_stride(double sigma, double lr, std::size_t n) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (n < 1) throw std::invalid_argument("n must be at least 1");
    return sigma * sigma * lr / static_cast<double>(n);
}

double predict_mean_distance(double sigma, double a, std::size_t n) {
    if (!(a > 0.0)) throw std::invalid_argument("a must be positive");
    return predict_mean_abs_gradient(sigma, n) / (2.0 * a);
}

GradientMoments mc_gradient_moments(double sigma, std::size_t n, std::size_t k,
                                    std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    if (n < 1) throw std::invalid_argument("n must be at least 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sigma);

    double sum_abs = 0.0, sum_abs2 = 0.0;
    double sum_sq = 0.0, sum_sq2 = 0.0;
    double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t t = 0; t < k; ++t) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += normal(rng);
        double g = acc * inv_n;
        double a = std::abs(g), s = g * g;
        sum_abs += a;
        sum_abs2 += a * a;
        sum_sq += s;
        sum_sq2 += s * s;
    }
    double dk = static_cast<double>(k);
    auto finish = [&](double sum, double sum2) {
        McEstimate e;
        e.mean = sum / dk;
        double var = sum2 / dk - e.mean * e.mean;
        e.std_error = std::sqrt(std::max(var, 0.0) / dk);
        return e;
    };
    return {finish(sum_abs, sum_abs2), finish(sum_sq, sum_sq2)};
}

McEstimate mc_mean_abs_gradient(double sigma, std::size_t n, std::size_t k,
                                std::uint64_t seed) {
    return mc_gradient_moments(sigma, n, k, seed).abs_mean;
}

McEstimate mc_mean_distance(double sigma, double a, std::size_t n, std::size_t k,
                            std::uint64_t seed) {
    if (!(a > 0.0)) throw std::invalid_argument("a must be positive");
    McEstimate e = mc_mean_abs_gradient(sigma, n, k, seed);
    e.mean /= 2.0 * a;
    e.std_error /= 2.0 * a;
    return e;
}

SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw std::invalid_argument("log-log fit needs at least 3 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<std::pair<double, double>> logs;
    logs.reserve(points.size());
    for (const auto& [x, y] : points) {
        if (!(x > 0.0) || !(y > 0.0))
            throw std::invalid_argument("log-log fit requires positive coordinates");
        logs.emplace_back(std::log(x), std::log(y));
    }
    for (const auto& [lx, ly] : logs) {
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double m = static_cast<double>(points.size());
    double denom = m * sxx - sx * sx;
    if (std::abs(denom) < 1e-300)
        throw std::invalid_argument("log-log fit: degenerate abscissae");

    SlopeFit fit;
    fit.slope = (m * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / m;

    double mean_y = sy / m;
    double ss_res = 0, ss_tot = 0;
    for (const auto& [lx, ly] : logs) {
        double r = ly - (fit.intercept + fit.slope * lx);
        ss_res += r * r;
        double d = ly - mean_y;
        ss_tot += d * d;
    }
    fit.r_squared = ss_tot < 1e-300 ? 1.0 : std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
    return fit;
}

}  // namespace batchlab
