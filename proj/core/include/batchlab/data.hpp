#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "batchlab/network.hpp"
#include "batchlab/tensor.hpp"

namespace batchlab {

struct Dataset {
    Tensor inputs;   // [N x d]
    Tensor targets;  // [N x c], one-hot
    std::string name;

    std::size_t size() const { return inputs.rows; }
    std::size_t input_dim() const { return inputs.cols; }
    std::size_t num_classes() const { return targets.cols; }
};

// Synthetic classification set: standard-normal inputs labelled by the
// argmax output of a fixed random teacher network. Reseeds internally until
// every class appears at least once.
Dataset gen_teacher_dataset(std::uint64_t seed, std::size_t n_samples,
                            std::size_t input_dim, std::size_t n_classes);

// Header `x0,...,x{d-1},label`, one integer label per row.
Dataset load_csv_dataset(const std::string& path);
void save_csv_dataset(const Dataset& ds, const std::string& path);

// Without-replacement batching; each epoch reshuffles with the seeded
// generator, the final batch of an epoch may be short.
class Batcher {
  public:
    Batcher(const Dataset& ds, std::size_t batch_size, std::uint64_t seed);

    Batch next();
    int epoch() const { return epoch_; }

  private:
    void reshuffle();

    const Dataset* ds_;
    std::size_t batch_size_;
    std::mt19937_64 rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_{0};
    int epoch_{0};
};

// Keeps the ceil((1-ratio)*n) largest-loss samples. Ties keep the lower
// sample_id; survivor order matches the input batch.
Batch discard_small_loss(const Batch& batch, const std::vector<double>& per_sample_losses,
                         double ratio);

struct SchedulePhase {
    int start_epoch{0};
    std::size_t batch_size{1};
    double lr{0.01};
};

struct ScheduleSpec {
    std::vector<SchedulePhase> phases;
    void validate() const;
};

// Phase with the largest start_epoch <= epoch.
SchedulePhase schedule_lookup(const ScheduleSpec& schedule, int epoch);

struct DiscardPolicy {
    double ratio{0.0};
    int first_epoch{0};
    int last_epoch{0};  // inclusive

    bool active(int epoch) const { return epoch >= first_epoch && epoch <= last_epoch; }
};

}  // namespace batchlab
