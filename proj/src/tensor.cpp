// SPDX-License-Identifier: Apache-2.0

#include "dacq/tensor.hpp"

#include <cmath>

#include "dacq/error.hpp"

namespace dacq {

static void check_finite(const std::vector<float>& v, const std::string& what) {
    for (size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            throw ValueError(what + ": non-finite value at flat index " +
                             std::to_string(i));
        }
    }
}

void WeightTensor::validate() const {
    if (data.size() != rows * cols) {
        throw ShapeError("tensor '" + name + "': data length " +
                         std::to_string(data.size()) + " != rows*cols " +
                         std::to_string(rows * cols));
    }
    check_finite(data, "tensor '" + name + "'");
}

void CalibrationSet::validate() const {
    if (data.size() != tokens * cols) {
        throw ShapeError("calibration '" + layer_name + "': data length " +
                         std::to_string(data.size()) + " != tokens*cols " +
                         std::to_string(tokens * cols));
    }
    check_finite(data, "calibration '" + layer_name + "'");
}

}  // namespace dacq
