// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "dacq/grids.hpp"
#include "dacq/quantized.hpp"
#include "dacq/tensor.hpp"

namespace dacq {

// The gamma candidates searched per group: {k/20 : k = 0..20}, endpoints
// included (gamma = 0 is the pure logistic grid, gamma = 1 the uniform one).
std::span<const double> gamma_grid_21();

// Column window [col_start, col_start + len) of a calibration matrix; the
// activations that multiply one weight group.
struct ActivationSlice {
    const CalibrationSet* cal = nullptr;
    size_t col_start = 0;
    size_t len = 0;

    bool empty() const { return cal == nullptr || cal->tokens == 0 || len == 0; }
};

// One weight group within a row, plus its matching activation columns.
struct GroupView {
    size_t row = 0;
    size_t col_start = 0;
    std::span<const float> values;
    const CalibrationSet* cal = nullptr;  // may be null (weight-MSE fallback)

    ActivationSlice activations() const { return {cal, col_start, values.size()}; }
};

struct GammaSearchResult {
    double gamma_star = 0.0;
    double error_star = 0.0;
    std::vector<std::pair<double, double>> errors;  // (gamma, E(gamma)), grid order
    QuantGrid chosen_grid;
    GroupParams chosen_params;
    bool weight_mse_fallback = false;
};

struct GroupQuantResult {
    GammaSearchResult search;
    std::vector<uint8_t> indices;
};

// Nearest reconstruction level for each weight, by binary search over the
// sorted grid. Exact-midpoint ties resolve to the lower index.
std::vector<uint8_t> assign_nearest(std::span<const float> w, const QuantGrid& grid);

// E = sum over tokens of ( sum over columns of (w_c - w_q,c) * x_{t,c} )^2,
// the squared L2 norm of the per-token inner-product residual.
double activation_error(std::span<const float> w, std::span<const float> w_q,
                        const ActivationSlice& x);

// Fallback objective when no activations are available: sum of (w - w_q)^2.
double weight_sq_error(std::span<const float> w, std::span<const float> w_q);

// Builds the candidate grid for every gamma, assigns by nearest neighbor,
// scores E(gamma) on the group's activation columns (or the weight-space
// fallback), and keeps the argmin; equal errors resolve to the smaller gamma.
// Fixed modes pass a single-point grid: uniform -> {1}, logistic -> {0}.
GroupQuantResult quantize_group(const GroupView& view, size_t J, GridKind mode,
                                std::span<const double> gamma_grid);

struct QuantizeConfig {
    int bits = 4;
    size_t group_size = 128;
    GridKind mode = GridKind::hybrid;
};

// Compact per-group evidence retained from the search.
struct GroupLog {
    double gamma_star = 0.0;
    double error_star = 0.0;
    double error_gamma0 = 0.0;  // E at the logistic endpoint (hybrid mode)
    double error_gamma1 = 0.0;  // E at the uniform endpoint (hybrid mode)
    bool fallback = false;
    bool degenerate = false;
};

struct QuantizeStats {
    std::array<uint32_t, 21> gamma_hist{};
    double total_activation_error = 0.0;  // sum of per-group search objectives
    size_t degenerate_groups = 0;
    bool weight_mse_fallback = false;
    std::vector<GroupLog> groups;
};

// Group-wise quantization of a whole tensor. Groups tile each row contiguously
// along the column axis (the last group of a row may be short). mode uniform
// pins gamma = 1, logistic pins gamma = 0, hybrid searches the 21-point grid.
// The artifact's channel scales are set to ones; activation-aware scaling is
// composed on top by the awq module.
QuantizedTensor quantize_tensor(const WeightTensor& t, const CalibrationSet* cal,
                                const QuantizeConfig& cfg,
                                QuantizeStats* stats = nullptr);

// Exact inverse of the stored representation: regenerates each group's grid
// from its parameters, looks up levels by index, and divides out the channel
// scales. Bit-for-bit deterministic.
WeightTensor dequantize(const QuantizedTensor& qt);

// Test oracle: companding through the fitted parametric logistic CDF. Maps
// each weight to u = F(w), quantizes u uniformly into J mid-rise cells, and
// returns the cell indices. Cell centers pulled back through the inverse CDF
// coincide with logistic_levels; decision boundaries differ from real-domain
// nearest-neighbor near cell edges.
std::vector<uint8_t> empirical_companding_oracle(std::span<const float> w, size_t J);

}  // namespace dacq
