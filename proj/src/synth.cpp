// SPDX-License-Identifier: Apache-2.0

#include "dacq/synth.hpp"

#include <algorithm>
#include <cmath>

#include "dacq/error.hpp"
#include "dacq/rng.hpp"

namespace dacq {

WeightTensor synth_family_tensor(const std::string& name, size_t rows, size_t cols,
                                 Family family, double mu, double sigma, uint64_t seed) {
    WeightTensor t(name, rows, cols);
    Rng rng(seed);
    for (auto& v : t.data) {
        v = static_cast<float>(mu + sigma * family_draw(family, rng));
    }
    return t;
}

WeightTensor synth_logistic_mixture(const std::string& name, size_t rows, size_t cols,
                                    size_t group_size, double sigma_lo, double sigma_hi,
                                    uint64_t seed) {
    if (group_size < 1 || sigma_lo <= 0.0 || sigma_hi < sigma_lo) {
        throw ValueError("synth_logistic_mixture: bad parameters");
    }
    WeightTensor t(name, rows, cols);
    Rng rng(seed);
    const double log_lo = std::log(sigma_lo);
    const double log_hi = std::log(sigma_hi);
    for (size_t r = 0; r < rows; ++r) {
        for (size_t c0 = 0; c0 < cols; c0 += group_size) {
            const size_t len = std::min(group_size, cols - c0);
            const double sigma = std::exp(log_lo + (log_hi - log_lo) * rng.uniform01());
            const double mu = 0.25 * sigma * family_draw(Family::normal, rng);
            for (size_t c = c0; c < c0 + len; ++c) {
                t.at(r, c) = static_cast<float>(
                    mu + sigma * family_draw(Family::logistic, rng));
            }
        }
    }
    return t;
}

CalibrationSet synth_calibration(const std::string& layer_name, size_t tokens,
                                 size_t cols, uint64_t seed,
                                 std::span<const size_t> salient_cols,
                                 double salient_scale) {
    CalibrationSet cal(layer_name, tokens, cols);
    Rng rng(seed);
    for (auto& v : cal.data) {
        v = static_cast<float>(family_draw(Family::normal, rng));
    }
    for (size_t c : salient_cols) {
        if (c >= cols) throw ValueError("synth_calibration: salient column out of range");
        for (size_t t = 0; t < tokens; ++t) {
            cal.at(t, c) = static_cast<float>(cal.at(t, c) * salient_scale);
        }
    }
    return cal;
}

}  // namespace dacq
