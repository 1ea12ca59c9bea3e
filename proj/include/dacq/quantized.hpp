// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dacq {

enum class GridKind : uint8_t { uniform = 0, logistic = 1, hybrid = 2 };

const char* grid_kind_name(GridKind k);

// Per-group parameters, sufficient to regenerate the group's reconstruction
// levels exactly. Stored as f32 in the artifact, so quantization also builds
// its grids from these rounded values; dequantization is then bit-identical.
struct GroupParams {
    float mu = 0.0f;
    float sigma = 0.0f;
    float w_min = 0.0f;
    float w_max = 0.0f;
    float gamma = 0.0f;  // 0 = logistic grid, 1 = uniform grid
    GridKind kind = GridKind::uniform;

    bool degenerate() const { return sigma <= 0.0f || w_min == w_max; }
};

// Packed low-bit indices plus everything needed for exact dequantization.
// Groups tile each row contiguously along the input (column) dimension; the
// last group of a row may be short when cols % group_size != 0.
struct QuantizedTensor {
    std::string name;
    size_t rows = 0;
    size_t cols = 0;
    size_t group_size = 128;
    int bits = 4;
    std::vector<uint8_t> packed;            // nibble-packed for bits<=4, bytes for bits==8
    std::vector<GroupParams> group_params;  // row-major, groups_per_row() per row
    std::vector<float> channel_scales;      // length cols; divided out on dequantization

    size_t groups_per_row() const {
        return group_size == 0 ? 0 : (cols + group_size - 1) / group_size;
    }
    size_t num_groups() const { return rows * groups_per_row(); }
    size_t levels() const { return size_t{1} << bits; }
    size_t packed_size() const {
        const size_t n = rows * cols;
        return bits <= 4 ? (n + 1) / 2 : n;
    }

    // Throws when any type invariant is violated (used by the loader and
    // before serialization).
    void validate() const;
};

}  // namespace dacq
