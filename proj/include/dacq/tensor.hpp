// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dacq {

// Named 2-D float tensor (out_features x in_features), row-major. The unit of
// quantization throughout the toolkit.
struct WeightTensor {
    std::string name;
    size_t rows = 0;
    size_t cols = 0;
    std::vector<float> data;  // length rows * cols

    WeightTensor() = default;
    WeightTensor(std::string n, size_t r, size_t c)
        : name(std::move(n)), rows(r), cols(c), data(r * c, 0.0f) {}

    size_t size() const { return rows * cols; }
    float& at(size_t r, size_t c) { return data[r * cols + c]; }
    float at(size_t r, size_t c) const { return data[r * cols + c]; }
    std::span<const float> row(size_t r) const { return {data.data() + r * cols, cols}; }

    // Throws ShapeError / ValueError when the buffer disagrees with the shape
    // or contains non-finite values.
    void validate() const;
};

// Cached input activations for one layer (tokens x cols), row-major.
struct CalibrationSet {
    std::string layer_name;
    size_t tokens = 0;
    size_t cols = 0;
    std::vector<float> data;  // length tokens * cols

    CalibrationSet() = default;
    CalibrationSet(std::string n, size_t t, size_t c)
        : layer_name(std::move(n)), tokens(t), cols(c), data(t * c, 0.0f) {}

    float at(size_t t, size_t c) const { return data[t * cols + c]; }
    float& at(size_t t, size_t c) { return data[t * cols + c]; }

    void validate() const;
};

}  // namespace dacq
