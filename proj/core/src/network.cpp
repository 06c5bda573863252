#include "batchlab/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace batchlab {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::kIdentity: return "identity";
        case Activation::kRelu: return "relu";
        case Activation::kTanh: return "tanh";
    }
    return "?";
}

std::string to_string(LossKind l) {
    return l == LossKind::kMse ? "mse" : "softmax_cross_entropy";
}

Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::kIdentity;
    if (s == "relu") return Activation::kRelu;
    if (s == "tanh") return Activation::kTanh;
    throw std::invalid_argument("unknown activation: " + s);
}

LossKind loss_from_string(const std::string& s) {
    if (s == "mse") return LossKind::kMse;
    if (s == "softmax_cross_entropy") return LossKind::kSoftmaxCrossEntropy;
    throw std::invalid_argument("unknown loss kind: " + s);
}

std::size_t Network::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.param_count();
    return n;
}

Network make_network(std::size_t input_dim, const std::vector<std::size_t>& widths,
                     const std::vector<Activation>& activations, LossKind loss,
                     std::uint64_t seed) {
    if (widths.empty()) throw std::invalid_argument("network needs at least one layer");
    if (activations.size() != widths.size())
        throw std::invalid_argument("one activation per layer required");

    std::mt19937_64 rng(seed);
    Network net;
    net.loss_kind = loss;
    std::size_t in = input_dim;
    for (std::size_t k = 0; k < widths.size(); ++k) {
        std::size_t out = widths[k];
        LayerState layer;
        layer.weights = Tensor(in, out);
        layer.bias = Tensor(1, out);
        layer.grad_weights = Tensor(in, out);
        layer.grad_bias = Tensor(1, out);
        layer.activation = activations[k];
        double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& w : layer.weights.data) w = dist(rng);
        net.layers.push_back(std::move(layer));
        in = out;
    }
    return net;
}

namespace {

void check_batch(const Network& net, const Batch& batch) {
    if (batch.inputs.rows != batch.targets.rows)
        throw std::invalid_argument(
            "batch shape mismatch: inputs rows " + std::to_string(batch.inputs.rows) +
            " vs targets rows " + std::to_string(batch.targets.rows));
    if (batch.inputs.cols != net.input_dim())
        throw std::invalid_argument(
            "input width " + std::to_string(batch.inputs.cols) + " does not match network input " +
            std::to_string(net.input_dim()));
    if (batch.targets.cols != net.output_dim())
        throw std::invalid_argument(
            "target width " + std::to_string(batch.targets.cols) +
            " does not match network output " + std::to_string(net.output_dim()));
    if (batch.inputs.rows == 0) throw std::invalid_argument("empty batch");
}

// x [n x in] times W [in x out], plus bias row.
Tensor affine(const Tensor& x, const LayerState& layer) {
    Tensor y(x.rows, layer.out_dim());
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t k = 0; k < x.cols; ++k) {
            double xv = x(i, k);
            if (xv == 0.0) continue;
            const double* wrow = &layer.weights.data[k * layer.weights.cols];
            double* yrow = &y.data[i * y.cols];
            for (std::size_t j = 0; j < y.cols; ++j) yrow[j] += xv * wrow[j];
        }
        for (std::size_t j = 0; j < y.cols; ++j) y(i, j) += layer.bias(0, j);
    }
    return y;
}

void apply_activation(Tensor& t, Activation a) {
    switch (a) {
        case Activation::kIdentity:
            break;
        case Activation::kRelu:
            for (double& v : t.data) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::kTanh:
            for (double& v : t.data) v = std::tanh(v);
            break;
    }
}

// Derivative expressed through the activation output.
double activation_deriv_from_output(double y, Activation a) {
    switch (a) {
        case Activation::kIdentity: return 1.0;
        case Activation::kRelu: return y > 0.0 ? 1.0 : 0.0;  // subgradient 0 at 0
        case Activation::kTanh: return 1.0 - y * y;
    }
    return 1.0;
}

struct ForwardCache {
    std::vector<Tensor> outputs;  // post-activation per layer
};

Tensor run_layers(const Network& net, const Tensor& inputs, ForwardCache* cache) {
    Tensor cur = inputs;
    for (const auto& layer : net.layers) {
        cur = affine(cur, layer);
        apply_activation(cur, layer.activation);
        if (cache) cache->outputs.push_back(cur);
    }
    return cur;
}

ForwardResult compute_losses(const Network& net, const Tensor& outputs, const Tensor& targets) {
    ForwardResult res;
    std::size_t n = outputs.rows, c = outputs.cols;
    res.per_sample_losses.resize(n);
    if (net.loss_kind == LossKind::kMse) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                double d = outputs(i, j) - targets(i, j);
                s += d * d;
            }
            res.per_sample_losses[i] = 0.5 * s / static_cast<double>(c);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            double zmax = outputs(i, 0);
            for (std::size_t j = 1; j < c; ++j) zmax = std::max(zmax, outputs(i, j));
            double denom = 0.0;
            for (std::size_t j = 0; j < c; ++j) denom += std::exp(outputs(i, j) - zmax);
            double logz = std::log(denom) + zmax;
            double loss = 0.0;
            for (std::size_t j = 0; j < c; ++j)
                loss -= targets(i, j) * (outputs(i, j) - logz);
            res.per_sample_losses[i] = loss;
        }
    }
    double sum = 0.0;
    for (double v : res.per_sample_losses) sum += v;
    res.mean_loss = sum / static_cast<double>(n);
    return res;
}

// dL/d(output), L being the batch mean loss.
Tensor loss_output_grad(const Network& net, const Tensor& outputs, const Tensor& targets) {
    std::size_t n = outputs.rows, c = outputs.cols;
    Tensor g(n, c);
    double inv_n = 1.0 / static_cast<double>(n);
    if (net.loss_kind == LossKind::kMse) {
        double scale = inv_n / static_cast<double>(c);
        for (std::size_t i = 0; i < n * c; ++i)
            g.data[i] = (outputs.data[i] - targets.data[i]) * scale;
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            double zmax = outputs(i, 0);
            for (std::size_t j = 1; j < c; ++j) zmax = std::max(zmax, outputs(i, j));
            double denom = 0.0;
            for (std::size_t j = 0; j < c; ++j) denom += std::exp(outputs(i, j) - zmax);
            for (std::size_t j = 0; j < c; ++j) {
                double p = std::exp(outputs(i, j) - zmax) / denom;
                g(i, j) = (p - targets(i, j)) * inv_n;
            }
        }
    }
    return g;
}

}  // namespace

ForwardResult forward(const Network& net, const Batch& batch) {
    check_batch(net, batch);
    Tensor out = run_layers(net, batch.inputs, nullptr);
    return compute_losses(net, out, batch.targets);
}

ForwardResult backward(Network& net, const Batch& batch) {
    check_batch(net, batch);
    ForwardCache cache;
    Tensor out = run_layers(net, batch.inputs, &cache);
    ForwardResult res = compute_losses(net, out, batch.targets);

    // delta starts at dL/d(final output), then walks backwards through
    // activation and affine of each layer.
    Tensor delta = loss_output_grad(net, out, batch.targets);
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        LayerState& layer = net.layers[li];
        const Tensor& y = cache.outputs[li];
        for (std::size_t i = 0; i < delta.size(); ++i)
            delta.data[i] *= activation_deriv_from_output(y.data[i], layer.activation);

        const Tensor& x = li == 0 ? batch.inputs : cache.outputs[li - 1];
        std::fill(layer.grad_weights.data.begin(), layer.grad_weights.data.end(), 0.0);
        std::fill(layer.grad_bias.data.begin(), layer.grad_bias.data.end(), 0.0);
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double* drow = &delta.data[i * delta.cols];
            for (std::size_t k = 0; k < x.cols; ++k) {
                double xv = x(i, k);
                if (xv == 0.0) continue;
                double* grow = &layer.grad_weights.data[k * layer.grad_weights.cols];
                for (std::size_t j = 0; j < delta.cols; ++j) grow[j] += xv * drow[j];
            }
            for (std::size_t j = 0; j < delta.cols; ++j) layer.grad_bias(0, j) += drow[j];
        }

        if (li > 0) {
            Tensor prev(delta.rows, layer.in_dim());
            for (std::size_t i = 0; i < delta.rows; ++i) {
                const double* drow = &delta.data[i * delta.cols];
                for (std::size_t k = 0; k < layer.in_dim(); ++k) {
                    const double* wrow = &layer.weights.data[k * layer.weights.cols];
                    double s = 0.0;
                    for (std::size_t j = 0; j < delta.cols; ++j) s += wrow[j] * drow[j];
                    prev(i, k) = s;
                }
            }
            delta = std::move(prev);
        }
    }
    return res;
}

namespace {

template <typename Fn>
void for_each_param(Network& net, Fn&& fn) {
    for (auto& layer : net.layers) {
        for (std::size_t i = 0; i < layer.weights.size(); ++i)
            fn(layer.weights.data[i], layer.grad_weights.data[i]);
        for (std::size_t i = 0; i < layer.bias.size(); ++i)
            fn(layer.bias.data[i], layer.grad_bias.data[i]);
    }
}

}  // namespace

void finite_diff_gradient(Network& net, const Batch& batch, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    check_batch(net, batch);
    for_each_param(net, [&](double& w, double& g) {
        double saved = w;
        w = saved + epsilon;
        double lp = forward(net, batch).mean_loss;
        w = saved - epsilon;
        double lm = forward(net, batch).mean_loss;
        w = saved;
        g = (lp - lm) / (2.0 * epsilon);
    });
}

std::vector<HessianDiag> hessian_diagonal(Network& net, const Batch& batch, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    check_batch(net, batch);
    double l0 = forward(net, batch).mean_loss;
    std::vector<HessianDiag> out;
    for (auto& layer : net.layers) {
        HessianDiag h;
        h.weights = Tensor(layer.weights.rows, layer.weights.cols);
        h.bias = Tensor(layer.bias.rows, layer.bias.cols);
        out.push_back(std::move(h));
    }
    double inv_e2 = 1.0 / (epsilon * epsilon);
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        auto probe = [&](double& w, double& h) {
            double saved = w;
            w = saved + epsilon;
            double lp = forward(net, batch).mean_loss;
            w = saved - epsilon;
            double lm = forward(net, batch).mean_loss;
            w = saved;
            h = (lp - 2.0 * l0 + lm) * inv_e2;
        };
        auto& layer = net.layers[li];
        for (std::size_t i = 0; i < layer.weights.size(); ++i)
            probe(layer.weights.data[i], out[li].weights.data[i]);
        for (std::size_t i = 0; i < layer.bias.size(); ++i)
            probe(layer.bias.data[i], out[li].bias.data[i]);
    }
    return out;
}

double accuracy(const Network& net, const Batch& batch) {
    check_batch(net, batch);
    Tensor out = run_layers(net, batch.inputs, nullptr);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < out.rows; ++i) {
        std::size_t pred = 0, truth = 0;
        for (std::size_t j = 1; j < out.cols; ++j) {
            if (out(i, j) > out(i, pred)) pred = j;
            if (batch.targets(i, j) > batch.targets(i, truth)) truth = j;
        }
        if (pred == truth) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(out.rows);
}

Evaluation evaluate(const Network& net, const Batch& batch) {
    check_batch(net, batch);
    Tensor out = run_layers(net, batch.inputs, nullptr);
    Evaluation ev;
    ev.mean_loss = compute_losses(net, out, batch.targets).mean_loss;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < out.rows; ++i) {
        std::size_t pred = 0, truth = 0;
        for (std::size_t j = 1; j < out.cols; ++j) {
            if (out(i, j) > out(i, pred)) pred = j;
            if (batch.targets(i, j) > batch.targets(i, truth)) truth = j;
        }
        if (pred == truth) ++hits;
    }
    ev.accuracy = static_cast<double>(hits) / static_cast<double>(out.rows);
    return ev;
}

}  // namespace batchlab
