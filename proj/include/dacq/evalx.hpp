// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dacq/grids.hpp"
#include "dacq/quantizer.hpp"
#include "dacq/tensor.hpp"

namespace dacq {

// One row of the layer-wise comparison table. activation_error is the sum of
// per-group search objectives (the quantity the gamma search minimizes), so
// hybrid <= uniform holds exactly whenever alpha is shared across modes.
struct EvalRecord {
    std::string tensor_name;
    std::string mode;      // awq-uniform | dacq-logistic | dacq-hybrid
    std::string protocol;  // searched-alpha | fixed-alpha | artifact
    double alpha_star = 0.0;
    double mse = 0.0;
    double mae = 0.0;
    double activation_error = 0.0;
    std::array<uint32_t, 21> gamma_histogram{};
    bool calib_fallback = false;
};

// mse = mean((orig - recon)^2), mae = mean(|orig - recon|), computed in the
// original (unscaled) weight domain.
std::pair<double, double> reconstruction_metrics(const WeightTensor& orig,
                                                 const WeightTensor& recon);

const char* mode_label(GridKind kind);        // uniform -> "awq-uniform", ...
GridKind mode_kind_from_label(const std::string& label);

struct ProfileOptions {
    int bits = 4;
    size_t group_size = 128;
    std::vector<std::string> modes = {"awq-uniform", "dacq-logistic", "dacq-hybrid"};
    bool alpha_search = true;
};

// Quantizes every tensor under every requested mode and emits comparison
// rows. With alpha_search enabled each mode first gets its own alpha search
// ("searched-alpha" rows); a "fixed-alpha" ablation then re-runs all modes
// with the uniform baseline's alpha so grid families can be compared under
// identical scaling. Tensors without calibration fall back to the
// weight-space objective and are flagged.
std::vector<EvalRecord> layer_error_profile(
    std::span<const WeightTensor> tensors,
    const std::function<const CalibrationSet*(const std::string&)>& find_calibration,
    const ProfileOptions& opts);

// Scores a stored artifact against its original. Reconstruction metrics come
// from the dequantized tensor; the activation error is recomputed per group in
// the scaled domain through the same grid-regeneration path the quantizer
// used, so it reproduces the quantize-time log exactly. alpha is not stored in
// artifacts, so alpha_star is NaN on these rows.
EvalRecord evaluate_artifact(const WeightTensor& orig, const QuantizedTensor& qt,
                             const CalibrationSet* cal);

void write_eval_csv(const std::vector<EvalRecord>& records,
                    const std::filesystem::path& path);
void write_eval_json(const std::vector<EvalRecord>& records,
                     const std::filesystem::path& path);

// Small-scale Lloyd-Max iteration (alternating nearest-neighbor partition and
// centroid update from a uniform-grid start), used only to bound how far the
// fixed parametric grids sit from a locally MSE-optimal one. kind on the
// returned grid is nominal.
struct LloydMaxResult {
    QuantGrid grid;
    bool converged = false;
    size_t iterations = 0;
    double mse = 0.0;
};

LloydMaxResult bruteforce_grid_oracle(std::span<const float> w, size_t J);

}  // namespace dacq
