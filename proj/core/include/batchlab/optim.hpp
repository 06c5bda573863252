#pragma once

#include <string>

#include "batchlab/network.hpp"

namespace batchlab {

enum class OptimizerKind { kSgd, kCblr, kMclr, kLars, kPercentDelta };

std::string to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(const std::string& s);

struct OptimizerConfig {
    OptimizerKind kind{OptimizerKind::kSgd};
    double gamma{0.01};        // global multiplier for the curvature-based rules
    double lr{0.01};           // plain SGD only
    double weight_decay{0.0};
    double guard_eps{1e-12};
    double r_min{1e-3};
    double r_max{1e3};

    void validate() const;
};

struct CurvatureEstimate {
    double radius{0.0};
    bool guarded{false};  // a failure guard or clamp fired
};

// w <- w - lr * (g + weight_decay * w), elementwise over weights and bias.
void sgd_step(LayerState& layer, double lr, double weight_decay);

// (1 + g^2)^{3/2} / |h|, clamped into [r_min, r_max]. |h| below guard_eps
// yields r_max with the guard flag set.
CurvatureEstimate curvature_radius_exact(double g, double h, const OptimizerConfig& cfg);

// |w| / |g|, clamped into [r_min, r_max]. Degenerate w or g sets the guard
// flag; a vanishing gradient pins the radius at r_max.
CurvatureEstimate curvature_radius_approx(double w, double g, const OptimizerConfig& cfg);

// Per-parameter update w <- w - gamma * R * g with R from the exact radius
// and the supplied second-derivative diagonal.
void cblr_step(LayerState& layer, const HessianDiag& hess, const OptimizerConfig& cfg);

// Layer learning rates. Weights and biases of the layer form one group.
double mclr_layer_lr(const LayerState& layer, const OptimizerConfig& cfg);
double lars_layer_lr(const LayerState& layer, const OptimizerConfig& cfg);
double percent_delta_layer_lr(const LayerState& layer, const OptimizerConfig& cfg);

// w <- w - eta * (g + weight_decay * w); identical to sgd_step with lr = eta.
void layerwise_step(LayerState& layer, double eta, double weight_decay);

// Median of |v| over weights and bias; even counts take the lower middle
// order statistic.
double median_abs(const Tensor& a, const Tensor& b);

}  // namespace batchlab
