#include <cmath>
#include <random>

#include <stdexcept>

#include "doctest.h"

#include "batchlab/network.hpp"
#include "batchlab/optim.hpp"

using namespace batchlab;

namespace {

LayerState layer_from(const std::vector<double>& w, const std::vector<double>& g) {
    LayerState layer;
    layer.weights = Tensor(1, w.size());
    layer.weights.data = w;
    layer.grad_weights = Tensor(1, g.size());
    layer.grad_weights.data = g;
    layer.bias = Tensor(1, 0);
    layer.grad_bias = Tensor(1, 0);
    return layer;
}

}  // namespace

TEST_CASE("sgd_step: direct rule, fixed point, decay-only step") {
    LayerState layer = layer_from({1.0}, {0.5});
    sgd_step(layer, 0.1, 0.0);
    CHECK(layer.weights(0, 0) == doctest::Approx(0.95));

    layer = layer_from({1.0}, {0.0});
    sgd_step(layer, 0.1, 0.0);
    CHECK(layer.weights(0, 0) == 1.0);

    layer = layer_from({1.0}, {0.0});
    sgd_step(layer, 0.1, 0.1);
    CHECK(layer.weights(0, 0) == doctest::Approx(0.99));
}

TEST_CASE("sgd_step rejects non-finite gradients") {
    LayerState layer = layer_from({1.0}, {std::nan("")});
    CHECK_THROWS_AS(sgd_step(layer, 0.1, 0.0), std::runtime_error);
}

TEST_CASE("curvature_radius_exact: closed-form values") {
    OptimizerConfig cfg;
    CHECK(curvature_radius_exact(0.0, 1.0, cfg).radius == doctest::Approx(1.0));
    // parabola 0.5 w^2 at the minimum: g = 0, h = 1
    auto at_min = curvature_radius_exact(0.0, 1.0, cfg);
    CHECK(at_min.radius == doctest::Approx(1.0));
    CHECK_FALSE(at_min.guarded);
    CHECK(curvature_radius_exact(0.1, 1.0, cfg).radius ==
          doctest::Approx(std::pow(1.01, 1.5)));
}

TEST_CASE("curvature_radius_exact: vanishing second derivative clamps to r_max") {
    OptimizerConfig cfg;
    auto est = curvature_radius_exact(0.5, 0.0, cfg);
    CHECK(est.guarded);
    CHECK(est.radius == cfg.r_max);
}

TEST_CASE("curvature_radius_approx: parabola value and declared failure modes") {
    OptimizerConfig cfg;
    // L = 0.5 w^2 at w = 0.1: g = 0.1, approximate radius |w/g| = 1
    auto est = curvature_radius_approx(0.1, 0.1, cfg);
    CHECK(est.radius == doctest::Approx(1.0));
    CHECK_FALSE(est.guarded);
    double exact = std::pow(1.01, 1.5);
    CHECK(std::abs(exact - est.radius) / exact == doctest::Approx(0.0149).epsilon(0.05));

    auto w_zero = curvature_radius_approx(0.0, 0.1, cfg);
    CHECK(w_zero.guarded);
    CHECK(w_zero.radius == cfg.r_min);

    auto g_zero = curvature_radius_approx(0.1, 0.0, cfg);
    CHECK(g_zero.guarded);
    CHECK(g_zero.radius == cfg.r_max);
}

TEST_CASE("curvature approximation error stays within the dropped-term bound") {
    // On L = a w^2 the approximation drops the (1 + g^2)^{3/2} factor, so the
    // relative error is 1 - (1+g^2)^{-3/2} <= 1.6 g^2.
    OptimizerConfig cfg;
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> a_dist(0.1, 10.0);
    std::uniform_real_distribution<double> w_dist(1e-3, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        double a = a_dist(rng), w = w_dist(rng);
        double g = 2.0 * a * w, h = 2.0 * a;
        auto exact = curvature_radius_exact(g, h, cfg);
        auto approx = curvature_radius_approx(w, g, cfg);
        if (exact.guarded || approx.guarded) continue;
        double rel = std::abs(exact.radius - approx.radius) / exact.radius;
        CHECK(rel <= 1.6 * g * g + 1e-12);
    }
}

TEST_CASE("curvature approximation error grows with the minimum offset b") {
    OptimizerConfig cfg;
    double a = 0.5, w = 0.2;
    double prev_rel = 0.0;
    for (double b : {0.0, 0.05, 0.1, 0.15}) {
        double g = 2.0 * a * (w - b), h = 2.0 * a;
        auto exact = curvature_radius_exact(g, h, cfg);
        auto approx = curvature_radius_approx(w, g, cfg);
        double rel = std::abs(exact.radius - approx.radius) / exact.radius;
        CHECK(rel >= prev_rel - 1e-12);
        prev_rel = rel;
    }
    CHECK(prev_rel > 0.1);
}

TEST_CASE("cblr_step: hand-evaluated single-parameter quadratic") {
    // L = 0.5 w^2 at w = 3: g = 3, h = 1, R = 10^{1.5}
    OptimizerConfig cfg;
    cfg.gamma = 0.01;
    LayerState layer = layer_from({3.0}, {3.0});
    HessianDiag hess;
    hess.weights = Tensor(1, 1, 1.0);
    hess.bias = Tensor(1, 0);
    cblr_step(layer, hess, cfg);
    double expected = 3.0 - 0.01 * std::pow(10.0, 1.5) * 3.0;
    CHECK(layer.weights(0, 0) == doctest::Approx(expected));
}

TEST_CASE("cblr_step: zero gradient is a fixed point") {
    OptimizerConfig cfg;
    LayerState layer = layer_from({3.0, -2.0}, {0.0, 0.0});
    HessianDiag hess;
    hess.weights = Tensor(1, 2, 1.0);
    hess.bias = Tensor(1, 0);
    cblr_step(layer, hess, cfg);
    CHECK(layer.weights(0, 0) == 3.0);
    CHECK(layer.weights(0, 1) == -2.0);
}

TEST_CASE("cblr_step: loss scaling preserves the update direction") {
    OptimizerConfig cfg;
    cfg.gamma = 0.001;
    LayerState l1 = layer_from({2.0}, {2.0});
    HessianDiag h1;
    h1.weights = Tensor(1, 1, 1.0);
    h1.bias = Tensor(1, 0);
    cblr_step(l1, h1, cfg);
    double d1 = 2.0 - l1.weights(0, 0);

    // 2L doubles both g and h
    LayerState l2 = layer_from({2.0}, {4.0});
    HessianDiag h2;
    h2.weights = Tensor(1, 1, 2.0);
    h2.bias = Tensor(1, 0);
    cblr_step(l2, h2, cfg);
    double d2 = 2.0 - l2.weights(0, 0);

    CHECK(d1 > 0.0);
    CHECK(d2 > 0.0);
}

TEST_CASE("mclr_layer_lr: ratio of medians fixture") {
    OptimizerConfig cfg;
    cfg.gamma = 0.01;
    LayerState layer = layer_from({1.0, -2.0, 3.0}, {0.1, -0.2, 0.4});
    CHECK(mclr_layer_lr(layer, cfg) == doctest::Approx(0.1));

    cfg.weight_decay = 0.05;
    CHECK(mclr_layer_lr(layer, cfg) == doctest::Approx(0.01 * 2.0 / 0.3));
}

TEST_CASE("mclr_layer_lr: all-zero gradients hit the r_max guard") {
    OptimizerConfig cfg;
    cfg.gamma = 0.01;
    LayerState layer = layer_from({1.0, 2.0, 3.0}, {0.0, 0.0, 0.0});
    CHECK(mclr_layer_lr(layer, cfg) == doctest::Approx(cfg.gamma * cfg.r_max));
}

TEST_CASE("median_abs uses the lower middle element for even counts") {
    Tensor a(1, 4);
    a.data = {4.0, -1.0, 3.0, -2.0};
    Tensor empty(1, 0);
    CHECK(median_abs(a, empty) == 2.0);
}

TEST_CASE("lars_layer_lr: norm-ratio fixture and zero-gradient guard") {
    OptimizerConfig cfg;
    cfg.gamma = 0.1;
    LayerState layer = layer_from({3.0, 4.0}, {0.06, 0.08});
    CHECK(lars_layer_lr(layer, cfg) == doctest::Approx(5.0));

    LayerState zero_grad = layer_from({3.0, 4.0}, {0.0, 0.0});
    CHECK(lars_layer_lr(zero_grad, cfg) == doctest::Approx(cfg.gamma * cfg.r_max));
}

TEST_CASE("percent_delta_layer_lr: fixture and per-term guard") {
    OptimizerConfig cfg;
    cfg.gamma = 0.1;
    LayerState layer = layer_from({1.0, 2.0}, {0.1, 0.4});
    CHECK(percent_delta_layer_lr(layer, cfg) == doctest::Approx(0.1 * 2.0 / 0.3));

    LayerState with_zero = layer_from({0.0, 2.0}, {0.1, 0.4});
    CHECK(percent_delta_layer_lr(with_zero, cfg) == doctest::Approx(0.1 * 1.0 / 0.2));

    LayerState all_zero = layer_from({0.0, 0.0}, {0.1, 0.4});
    CHECK(percent_delta_layer_lr(all_zero, cfg) == doctest::Approx(cfg.gamma * cfg.r_max));
}

TEST_CASE("scale invariance: joint rescaling of (w, g) leaves layer LRs unchanged") {
    OptimizerConfig cfg;
    cfg.gamma = 0.02;
    std::mt19937_64 rng(31);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> scale_dist(1e-3, 1e3);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> w(7), g(7);
        for (auto& v : w) v = normal(rng) + 2.0;
        for (auto& v : g) v = normal(rng) * 0.1 + 0.3;
        LayerState layer = layer_from(w, g);
        double lars0 = lars_layer_lr(layer, cfg);
        double pd0 = percent_delta_layer_lr(layer, cfg);
        double mclr0 = mclr_layer_lr(layer, cfg);

        double c = scale_dist(rng);
        std::vector<double> wc = w, gc = g;
        for (auto& v : wc) v *= c;
        for (auto& v : gc) v *= c;
        LayerState scaled = layer_from(wc, gc);
        CHECK(std::abs(lars_layer_lr(scaled, cfg) - lars0) <= 1e-12 * std::abs(lars0) + 1e-12);
        CHECK(std::abs(mclr_layer_lr(scaled, cfg) - mclr0) <= 1e-12 * std::abs(mclr0) + 1e-12);
        // percent-delta's ratio is elementwise, so joint scaling cancels exactly
        CHECK(std::abs(percent_delta_layer_lr(scaled, cfg) - pd0) <=
              1e-9 * std::abs(pd0) + 1e-12);
    }
}

TEST_CASE("layer LRs are positive and bounded by gamma * r_max") {
    OptimizerConfig cfg;
    cfg.gamma = 0.05;
    std::mt19937_64 rng(41);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> w(5), g(5);
        for (auto& v : w) v = normal(rng);
        for (auto& v : g) v = normal(rng);
        LayerState layer = layer_from(w, g);
        for (double eta : {lars_layer_lr(layer, cfg), percent_delta_layer_lr(layer, cfg),
                           mclr_layer_lr(layer, cfg)}) {
            CHECK(eta > 0.0);
            CHECK(eta <= cfg.gamma * cfg.r_max * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("layerwise_step: eta 0 is a fixed point and matches sgd_step at eta = lr") {
    LayerState a = layer_from({1.0, -2.0}, {0.3, 0.7});
    LayerState b = a;
    layerwise_step(a, 0.0, 0.0);
    CHECK(a.weights.data == std::vector<double>{1.0, -2.0});

    layerwise_step(a, 0.25, 0.01);
    sgd_step(b, 0.25, 0.01);
    CHECK(a.weights.data == b.weights.data);
}

TEST_CASE("MCLR on the quadratic 0.5 w^2 steps by gamma * g") {
    // |w_m| / |g_m| = |w| / |w| = 1, so eta = gamma
    OptimizerConfig cfg;
    cfg.gamma = 0.1;
    double w = 4.0;
    for (int step = 0; step < 5; ++step) {
        LayerState layer = layer_from({w}, {w});  // g = w for L = 0.5 w^2
        double eta = mclr_layer_lr(layer, cfg);
        CHECK(eta == doctest::Approx(cfg.gamma));
        layerwise_step(layer, eta, 0.0);
        double expected = w - cfg.gamma * w;
        CHECK(layer.weights(0, 0) == doctest::Approx(expected));
        w = layer.weights(0, 0);
    }
}

TEST_CASE("CBLR decreases loss monotonically on a pure quadratic") {
    // L = 0.5 w^2, h = 1, gamma chosen so gamma * R * h <= 1 near the start
    OptimizerConfig cfg;
    cfg.gamma = 0.005;
    double w = 2.0;
    double prev_loss = 0.5 * w * w;
    for (int step = 0; step < 50; ++step) {
        LayerState layer = layer_from({w}, {w});
        HessianDiag hess;
        hess.weights = Tensor(1, 1, 1.0);
        hess.bias = Tensor(1, 0);
        cblr_step(layer, hess, cfg);
        w = layer.weights(0, 0);
        double loss = 0.5 * w * w;
        CHECK(loss <= prev_loss + 1e-15);
        prev_loss = loss;
    }
}
