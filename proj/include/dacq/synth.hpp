// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "dacq/distributions.hpp"
#include "dacq/tensor.hpp"

namespace dacq {

// Seeded generators for desk-scale experiments; all draws go through the
// portable Rng so outputs are identical across platforms.

// Tensor filled with i.i.d. draws mu + sigma * F (F zero-mean unit-variance).
WeightTensor synth_family_tensor(const std::string& name, size_t rows, size_t cols,
                                 Family family, double mu, double sigma, uint64_t seed);

// Logistic mixture: each group of `group_size` columns gets its own (mu,
// sigma) component, sigma log-uniform in [sigma_lo, sigma_hi].
WeightTensor synth_logistic_mixture(const std::string& name, size_t rows, size_t cols,
                                    size_t group_size, double sigma_lo, double sigma_hi,
                                    uint64_t seed);

// Gaussian calibration activations; listed columns are amplified by
// salient_scale to plant importance structure.
CalibrationSet synth_calibration(const std::string& layer_name, size_t tokens,
                                 size_t cols, uint64_t seed,
                                 std::span<const size_t> salient_cols = {},
                                 double salient_scale = 100.0);

}  // namespace dacq
