#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace batchlab {

// Zero-mean Gaussian per-sample gradient model; the batch-mean gradient is
// N(0, sigma/sqrt(n)).
struct GaussianGradientModel {
    double sigma{1.0};
    std::size_t n{1};
};

// E|g| = sigma sqrt(2/pi) / sqrt(n), the folded-normal mean of the
// batch-averaged gradient
double predict_mean_abs_gradient(double sigma, std::size_t n);

// lr * E|g|
double predict_param_stride(double sigma, double lr, std::size_t n);

// lr * E(g^2) = sigma^2 lr / n
double predict_loss_stride(double sigma, double lr, std::size_t n);

// E|d| = E|g| / (2a) = sigma / (a sqrt(2 pi) sqrt(n)) on the parabola
// a (w - b)^2
double predict_mean_distance(double sigma, double a, std::size_t n);

struct McEstimate {
    double mean{0.0};
    double std_error{0.0};
};

// Moments of the batch-mean gradient, estimated by drawing n per-sample
// gradients per trial and averaging, k trials. Deterministic per seed.
struct GradientMoments {
    McEstimate abs_mean;     // E|g|
    McEstimate square_mean;  // E(g^2)
};
GradientMoments mc_gradient_moments(double sigma, std::size_t n, std::size_t k,
                                    std::uint64_t seed);

// E|g| only; convenience wrapper over mc_gradient_moments.
McEstimate mc_mean_abs_gradient(double sigma, std::size_t n, std::size_t k, std::uint64_t seed);

// Quadratic-ensemble oracle: d = g / (2a) per trial, mean of |d|.
McEstimate mc_mean_distance(double sigma, double a, std::size_t n, std::size_t k,
                            std::uint64_t seed);

struct SlopeFit {
    double slope{0.0};
    double intercept{0.0};
    double r_squared{0.0};
};

// Least squares on (ln n, ln value); needs >= 3 points, all values positive.
SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

}  // namespace batchlab
