#include "batchlab/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace batchlab {

std::string to_string(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::kSgd: return "sgd";
        case OptimizerKind::kCblr: return "cblr";
        case OptimizerKind::kMclr: return "mclr";
        case OptimizerKind::kLars: return "lars";
        case OptimizerKind::kPercentDelta: return "percent_delta";
    }
    return "?";
}

OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "sgd") return OptimizerKind::kSgd;
    if (s == "cblr") return OptimizerKind::kCblr;
    if (s == "mclr") return OptimizerKind::kMclr;
    if (s == "lars") return OptimizerKind::kLars;
    if (s == "percent_delta") return OptimizerKind::kPercentDelta;
    throw std::invalid_argument("unknown optimizer: " + s);
}

void OptimizerConfig::validate() const {
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be non-negative");
    if (!(guard_eps > 0.0)) throw std::invalid_argument("guard_eps must be positive");
    if (!(r_min > 0.0)) throw std::invalid_argument("r_min must be positive");
    if (!(r_max > r_min)) throw std::invalid_argument("r_max must exceed r_min");
}

namespace {

void check_grads_finite(const LayerState& layer, const char* who) {
    if (!layer.grad_weights.all_finite() || !layer.grad_bias.all_finite())
        throw std::runtime_error(std::string(who) + ": non-finite gradient in layer of width " +
                                 std::to_string(layer.out_dim()));
}

CurvatureEstimate clamp_radius(double radius, bool guarded, const OptimizerConfig& cfg) {
    CurvatureEstimate est{radius, guarded};
    if (est.radius < cfg.r_min) {
        est.radius = cfg.r_min;
        est.guarded = true;
    } else if (est.radius > cfg.r_max) {
        est.radius = cfg.r_max;
        est.guarded = true;
    }
    return est;
}

}  // namespace

void sgd_step(LayerState& layer, double lr, double weight_decay) {
    check_grads_finite(layer, "sgd_step");
    for (std::size_t i = 0; i < layer.weights.size(); ++i)
        layer.weights.data[i] -=
            lr * (layer.grad_weights.data[i] + weight_decay * layer.weights.data[i]);
    for (std::size_t i = 0; i < layer.bias.size(); ++i)
        layer.bias.data[i] -=
            lr * (layer.grad_bias.data[i] + weight_decay * layer.bias.data[i]);
}

CurvatureEstimate curvature_radius_exact(double g, double h, const OptimizerConfig& cfg) {
    if (std::abs(h) < cfg.guard_eps) return {cfg.r_max, true};
    double radius = std::pow(1.0 + g * g, 1.5) / std::abs(h);
    return clamp_radius(radius, false, cfg);
}

CurvatureEstimate curvature_radius_approx(double w, double g, const OptimizerConfig& cfg) {
    if (std::abs(g) < cfg.guard_eps) return {cfg.r_max, true};
    bool guarded = std::abs(w) < cfg.guard_eps;
    return clamp_radius(std::abs(w) / std::abs(g), guarded, cfg);
}

void cblr_step(LayerState& layer, const HessianDiag& hess, const OptimizerConfig& cfg) {
    cfg.validate();
    check_grads_finite(layer, "cblr_step");
    if (!hess.weights.same_shape(layer.weights) || !hess.bias.same_shape(layer.bias))
        throw std::invalid_argument("cblr_step: hessian diagonal shape mismatch");
    for (std::size_t i = 0; i < layer.weights.size(); ++i) {
        double g = layer.grad_weights.data[i];
        auto est = curvature_radius_exact(g, hess.weights.data[i], cfg);
        layer.weights.data[i] -= cfg.gamma * est.radius * g;
    }
    for (std::size_t i = 0; i < layer.bias.size(); ++i) {
        double g = layer.grad_bias.data[i];
        auto est = curvature_radius_exact(g, hess.bias.data[i], cfg);
        layer.bias.data[i] -= cfg.gamma * est.radius * g;
    }
}

double median_abs(const Tensor& a, const Tensor& b) {
    std::vector<double> v;
    v.reserve(a.size() + b.size());
    for (double x : a.data) v.push_back(std::abs(x));
    for (double x : b.data) v.push_back(std::abs(x));
    if (v.empty()) throw std::invalid_argument("median of empty group");
    std::size_t mid = (v.size() - 1) / 2;  // lower middle for even counts
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    return v[mid];
}

double mclr_layer_lr(const LayerState& layer, const OptimizerConfig& cfg) {
    cfg.validate();
    double wm = median_abs(layer.weights, layer.bias);
    double gm = median_abs(layer.grad_weights, layer.grad_bias);
    double denom = gm + cfg.weight_decay * wm;
    CurvatureEstimate est;
    if (denom < cfg.guard_eps) {
        est = {cfg.r_max, true};
    } else {
        bool guarded = wm < cfg.guard_eps;
        est = curvature_radius_approx(wm, denom, cfg);
        est.guarded = est.guarded || guarded;
    }
    return cfg.gamma * est.radius;
}

double lars_layer_lr(const LayerState& layer, const OptimizerConfig& cfg) {
    cfg.validate();
    double wn = 0.0, gn = 0.0;
    for (double x : layer.weights.data) wn += x * x;
    for (double x : layer.bias.data) wn += x * x;
    for (double x : layer.grad_weights.data) gn += x * x;
    for (double x : layer.grad_bias.data) gn += x * x;
    wn = std::sqrt(wn);
    gn = std::sqrt(gn);
    CurvatureEstimate est = curvature_radius_approx(wn, gn, cfg);
    return cfg.gamma * est.radius;
}

double percent_delta_layer_lr(const LayerState& layer, const OptimizerConfig& cfg) {
    cfg.validate();
    double sum = 0.0;
    std::size_t kept = 0;
    auto accumulate = [&](const Tensor& w, const Tensor& g) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (std::abs(w.data[i]) < cfg.guard_eps) continue;  // Eq-18-style term skip
            sum += std::abs(g.data[i] / w.data[i]);
            ++kept;
        }
    };
    accumulate(layer.weights, layer.grad_weights);
    accumulate(layer.bias, layer.grad_bias);
    if (kept == 0 || sum < cfg.guard_eps) return cfg.gamma * cfg.r_max;
    CurvatureEstimate est = clamp_radius(static_cast<double>(kept) / sum, false, cfg);
    return cfg.gamma * est.radius;
}

void layerwise_step(LayerState& layer, double eta, double weight_decay) {
    check_grads_finite(layer, "layerwise_step");
    if (!std::isfinite(eta)) throw std::runtime_error("layerwise_step: non-finite learning rate");
    sgd_step(layer, eta, weight_decay);
}

}  // namespace batchlab
