#pragma once

#include <cstddef>
#include <vector>

namespace batchlab {

// Dense 2-D array of doubles, row-major. The only numeric carrier in the
// library; shapes are checked by the operations that consume it.
struct Tensor {
    std::size_t rows{0};
    std::size_t cols{0};
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    bool all_finite() const;
};

}  // namespace batchlab
