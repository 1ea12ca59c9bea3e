// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dacq/quantized.hpp"

namespace dacq {

// Summary statistics of one weight group. sigma uses the population (1/N)
// convention, matching the distribution-fit module.
struct GroupStats {
    double mu = 0.0;
    double sigma = 0.0;
    double w_min = 0.0;
    double w_max = 0.0;
    size_t n = 0;

    static GroupStats compute(std::span<const float> values);
};

// Ordered reconstruction levels for one group. gamma follows the convention
// 0 = logistic, 1 = uniform; hybrid grids carry their mixing coefficient.
struct QuantGrid {
    std::vector<double> levels;  // length J, sorted non-decreasing
    GridKind kind = GridKind::uniform;
    double gamma = 1.0;
    bool degenerate = false;  // single repeated level (sigma = 0 / zero range)
};

// lambda_j = w_min + j * (w_max - w_min) / (J - 1); endpoints land exactly on
// the dynamic range.
QuantGrid uniform_levels(const GroupStats& stats, size_t J);

// Inverse-CDF quantiles of a logistic distribution matched to (mu, sigma):
// theta = sigma * sqrt(3) / pi, p_j = (j + 0.5) / J, lambda_j = mu + theta *
// ln(p_j / (1 - p_j)). sigma = 0 degenerates to J copies of mu. Tail levels
// may exceed [w_min, w_max]; they are deliberately not clamped.
QuantGrid logistic_levels(const GroupStats& stats, size_t J);

// Element-wise convex combination (1 - gamma) * logistic + gamma * uniform.
QuantGrid hybrid_levels(const GroupStats& stats, size_t J, double gamma);

// Rounds group statistics to the f32 artifact precision. Grids built from the
// result regenerate identically from a stored artifact.
GroupParams make_group_params(const GroupStats& stats, GridKind kind, double gamma);

// Canonical grid regeneration from stored parameters; the quantizer and the
// dequantizer both build grids through this single path.
QuantGrid grid_from_params(const GroupParams& p, size_t J);

}  // namespace dacq
