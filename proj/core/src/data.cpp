#include "batchlab/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace batchlab {

Dataset gen_teacher_dataset(std::uint64_t seed, std::size_t n_samples,
                            std::size_t input_dim, std::size_t n_classes) {
    if (n_classes < 2) throw std::invalid_argument("need at least 2 classes");
    if (n_samples < n_classes)
        throw std::invalid_argument("need at least one sample per class");

    constexpr int kMaxRetries = 32;
    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
        std::uint64_t s = seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(attempt);
        std::mt19937_64 rng(s);
        std::normal_distribution<double> normal(0.0, 1.0);

        Tensor inputs(n_samples, input_dim);
        for (double& v : inputs.data) v = normal(rng);

        std::size_t hidden = std::max<std::size_t>(2 * n_classes, 32);
        Network teacher = make_network(input_dim, {hidden, n_classes},
                                       {Activation::kTanh, Activation::kIdentity},
                                       LossKind::kMse, s ^ 0xabcdef1234567890ull);

        Tensor outs(n_samples, n_classes);
        for (std::size_t i = 0; i < n_samples; ++i) {
            // run the teacher on one row
            std::vector<double> cur(input_dim);
            for (std::size_t j = 0; j < input_dim; ++j) cur[j] = inputs(i, j);
            for (const auto& layer : teacher.layers) {
                std::vector<double> nxt(layer.out_dim(), 0.0);
                for (std::size_t k = 0; k < layer.in_dim(); ++k)
                    for (std::size_t j = 0; j < layer.out_dim(); ++j)
                        nxt[j] += cur[k] * layer.weights(k, j);
                for (std::size_t j = 0; j < layer.out_dim(); ++j) {
                    nxt[j] += layer.bias(0, j);
                    if (layer.activation == Activation::kTanh) nxt[j] = std::tanh(nxt[j]);
                    if (layer.activation == Activation::kRelu && nxt[j] < 0.0) nxt[j] = 0.0;
                }
                cur = std::move(nxt);
            }
            for (std::size_t j = 0; j < n_classes; ++j) outs(i, j) = cur[j];
        }

        // Per-class offsets nudge argmax labels toward balanced class counts,
        // so a random teacher cannot produce a degenerate, heavily skewed task.
        std::vector<double> tau(n_classes, 0.0);
        auto label_of = [&](std::size_t i) {
            std::size_t label = 0;
            for (std::size_t j = 1; j < n_classes; ++j)
                if (outs(i, j) - tau[j] > outs(i, label) - tau[label]) label = j;
            return label;
        };
        for (int iter = 0; iter < 200; ++iter) {
            std::vector<double> frac(n_classes, 0.0);
            for (std::size_t i = 0; i < n_samples; ++i) frac[label_of(i)] += 1.0;
            for (std::size_t j = 0; j < n_classes; ++j)
                tau[j] += 0.5 * (frac[j] / static_cast<double>(n_samples) -
                                 1.0 / static_cast<double>(n_classes));
        }

        Tensor targets(n_samples, n_classes);
        std::vector<std::size_t> counts(n_classes, 0);
        for (std::size_t i = 0; i < n_samples; ++i) {
            std::size_t label = label_of(i);
            targets(i, label) = 1.0;
            ++counts[label];
        }

        if (std::all_of(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; })) {
            Dataset ds;
            ds.inputs = std::move(inputs);
            ds.targets = std::move(targets);
            ds.name = "teacher-" + std::to_string(seed);
            return ds;
        }
    }
    throw std::runtime_error("teacher dataset: could not realize all classes after retries");
}

Dataset load_csv_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    std::size_t d = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')); // d inputs + label

    std::vector<double> values;
    std::vector<long> labels;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                if (col < d) {
                    values.push_back(std::stod(cell, &pos));
                    if (pos != cell.size()) throw std::invalid_argument(cell);
                } else {
                    long lab = std::stol(cell, &pos);
                    if (pos != cell.size() || lab < 0) throw std::invalid_argument(cell);
                    labels.push_back(lab);
                }
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": malformed field '" + cell + "'");
            }
            ++col;
        }
        if (col != d + 1)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected " + std::to_string(d + 1) + " fields, got " +
                                     std::to_string(col));
    }
    if (labels.empty()) throw std::runtime_error(path + ": no data rows");

    std::size_t n = labels.size();
    long max_label = *std::max_element(labels.begin(), labels.end());
    std::size_t c = static_cast<std::size_t>(max_label) + 1;

    Dataset ds;
    ds.inputs = Tensor(n, d);
    std::copy(values.begin(), values.end(), ds.inputs.data.begin());
    ds.targets = Tensor(n, std::max<std::size_t>(c, 2));
    for (std::size_t i = 0; i < n; ++i)
        ds.targets(i, static_cast<std::size_t>(labels[i])) = 1.0;
    ds.name = path;
    return ds;
}

void save_csv_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    for (std::size_t j = 0; j < ds.input_dim(); ++j) out << "x" << j << ",";
    out << "label\n";
    char buf[40];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.input_dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.inputs(i, j));
            out << buf << ",";
        }
        std::size_t label = 0;
        for (std::size_t j = 1; j < ds.num_classes(); ++j)
            if (ds.targets(i, j) > ds.targets(i, label)) label = j;
        out << label << "\n";
    }
}

Batcher::Batcher(const Dataset& ds, std::size_t batch_size, std::uint64_t seed)
    : ds_(&ds), batch_size_(batch_size), rng_(seed) {
    if (batch_size_ < 1 || batch_size_ > ds.size())
        throw std::invalid_argument("batch size " + std::to_string(batch_size_) +
                                    " out of range for dataset of " + std::to_string(ds.size()));
    order_.resize(ds.size());
    std::iota(order_.begin(), order_.end(), 0);
    reshuffle();
}

void Batcher::reshuffle() {
    std::shuffle(order_.begin(), order_.end(), rng_);
    cursor_ = 0;
}

Batch Batcher::next() {
    if (cursor_ >= order_.size()) {
        ++epoch_;
        reshuffle();
    }
    std::size_t take = std::min(batch_size_, order_.size() - cursor_);
    Batch b;
    b.inputs = Tensor(take, ds_->input_dim());
    b.targets = Tensor(take, ds_->num_classes());
    b.sample_ids.resize(take);
    for (std::size_t i = 0; i < take; ++i) {
        std::size_t src = order_[cursor_ + i];
        b.sample_ids[i] = static_cast<int>(src);
        for (std::size_t j = 0; j < ds_->input_dim(); ++j)
            b.inputs(i, j) = ds_->inputs(src, j);
        for (std::size_t j = 0; j < ds_->num_classes(); ++j)
            b.targets(i, j) = ds_->targets(src, j);
    }
    cursor_ += take;
    return b;
}

Batch discard_small_loss(const Batch& batch, const std::vector<double>& per_sample_losses,
                         double ratio) {
    if (!(ratio >= 0.0 && ratio < 1.0))
        throw std::invalid_argument("discard ratio must lie in [0, 1)");
    std::size_t n = batch.size();
    if (per_sample_losses.size() != n)
        throw std::invalid_argument("loss vector length does not match batch size");
    if (ratio == 0.0) return batch;

    std::size_t keep = static_cast<std::size_t>(
        std::ceil((1.0 - ratio) * static_cast<double>(n)));

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (per_sample_losses[a] != per_sample_losses[b])
            return per_sample_losses[a] > per_sample_losses[b];
        return batch.sample_ids[a] < batch.sample_ids[b];
    });
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());  // preserve original order

    Batch out;
    out.inputs = Tensor(keep, batch.inputs.cols);
    out.targets = Tensor(keep, batch.targets.cols);
    out.sample_ids.resize(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        std::size_t src = idx[i];
        out.sample_ids[i] = batch.sample_ids[src];
        for (std::size_t j = 0; j < batch.inputs.cols; ++j)
            out.inputs(i, j) = batch.inputs(src, j);
        for (std::size_t j = 0; j < batch.targets.cols; ++j)
            out.targets(i, j) = batch.targets(src, j);
    }
    return out;
}

void ScheduleSpec::validate() const {
    if (phases.empty()) throw std::invalid_argument("schedule needs at least one phase");
    if (phases.front().start_epoch != 0)
        throw std::invalid_argument("first schedule phase must start at epoch 0");
    for (std::size_t i = 0; i < phases.size(); ++i) {
        if (i > 0 && phases[i].start_epoch <= phases[i - 1].start_epoch)
            throw std::invalid_argument("schedule start epochs must be strictly increasing");
        if (phases[i].batch_size < 1) throw std::invalid_argument("schedule batch size < 1");
        if (!(phases[i].lr > 0.0)) throw std::invalid_argument("schedule lr must be positive");
    }
}

SchedulePhase schedule_lookup(const ScheduleSpec& schedule, int epoch) {
    schedule.validate();
    if (epoch < 0) throw std::invalid_argument("epoch must be non-negative");
    SchedulePhase result = schedule.phases.front();
    for (const auto& p : schedule.phases) {
        if (p.start_epoch <= epoch) result = p;
    }
    return result;
}

}  // namespace batchlab
