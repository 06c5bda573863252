#include "batchlab/tensor.hpp"

#include <cmath>

namespace batchlab {

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace batchlab
