#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "batchlab/tensor.hpp"

namespace batchlab {

enum class Activation { kIdentity, kRelu, kTanh };
enum class LossKind { kMse, kSoftmaxCrossEntropy };

std::string to_string(Activation a);
std::string to_string(LossKind l);
Activation activation_from_string(const std::string& s);
LossKind loss_from_string(const std::string& s);

// One dense layer: y = act(x W + b), with the last-computed gradients kept
// alongside the parameters.
struct LayerState {
    Tensor weights;      // [in x out]
    Tensor bias;         // [1 x out]
    Activation activation{Activation::kIdentity};
    Tensor grad_weights;
    Tensor grad_bias;

    std::size_t in_dim() const { return weights.rows; }
    std::size_t out_dim() const { return weights.cols; }
    std::size_t param_count() const { return weights.size() + bias.size(); }
};

struct Network {
    std::vector<LayerState> layers;
    LossKind loss_kind{LossKind::kMse};

    std::size_t input_dim() const { return layers.front().in_dim(); }
    std::size_t output_dim() const { return layers.back().out_dim(); }
    std::size_t param_count() const;
};

struct Batch {
    Tensor inputs;   // [n x d]
    Tensor targets;  // [n x c]
    std::vector<int> sample_ids;

    std::size_t size() const { return inputs.rows; }
};

struct ForwardResult {
    std::vector<double> per_sample_losses;
    double mean_loss{0.0};
};

// Seeded construction: weights uniform in +-sqrt(6/(fan_in+fan_out)),
// biases zero.
Network make_network(std::size_t input_dim, const std::vector<std::size_t>& widths,
                     const std::vector<Activation>& activations, LossKind loss,
                     std::uint64_t seed);

// Loss conventions: mse is 1/2 * mean over outputs of (y-t)^2 per sample;
// softmax_cross_entropy is -sum t_j log softmax(z)_j. The batch loss is the
// arithmetic mean of the per-sample losses.
ForwardResult forward(const Network& net, const Batch& batch);

// Fills grad_weights/grad_bias with the analytic derivative of the batch
// mean loss. Returns the same losses as forward.
ForwardResult backward(Network& net, const Batch& batch);

// Central-difference gradient of the mean loss, (L(w+e) - L(w-e)) / 2e per
// parameter. Fills the grad tensors and restores the network to its entry
// state. Independent of backward's code path.
void finite_diff_gradient(Network& net, const Batch& batch, double epsilon);

// Central second difference (L(w+e) - 2 L(w) + L(w-e)) / e^2 per parameter.
// One (weights, bias) pair per layer.
struct HessianDiag {
    Tensor weights;
    Tensor bias;
};
std::vector<HessianDiag> hessian_diagonal(Network& net, const Batch& batch, double epsilon);

// Fraction of samples whose argmax output matches the argmax target.
double accuracy(const Network& net, const Batch& batch);

// Mean loss and accuracy from a single forward pass.
struct Evaluation {
    double mean_loss{0.0};
    double accuracy{0.0};
};
Evaluation evaluate(const Network& net, const Batch& batch);

}  // namespace batchlab
