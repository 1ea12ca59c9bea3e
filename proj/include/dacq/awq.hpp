// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dacq/quantizer.hpp"
#include "dacq/tensor.hpp"

namespace dacq {

// Per-input-channel activation statistic S_c = mean over tokens of |A_{t,c}|,
// the channel-importance proxy driving the scale search.
struct ChannelStats {
    std::vector<double> s_vec;  // length cols, entries >= 0
};

ChannelStats channel_stats(const CalibrationSet& cal);

// Candidate scale vector s(alpha) = S^alpha. Channels with S = 0 get scale 1
// for every alpha (dead channels must not collapse columns).
std::vector<float> scale_candidates(const ChannelStats& stats, double alpha);

// Multiplies column c by s_c. Inverse of dividing by the same vector.
WeightTensor apply_scale(const WeightTensor& t, std::span<const float> s);
WeightTensor divide_scale(const WeightTensor& t, std::span<const float> s);

// Scales the tensor, quantizes it, and records the scale vector in the
// artifact so dequantization divides it back out.
QuantizedTensor quantize_scaled(const WeightTensor& t, std::span<const float> scales,
                                const CalibrationSet* cal, const QuantizeConfig& cfg,
                                QuantizeStats* stats = nullptr);

// Frobenius-squared output error || (W_hat - W_ref) A^T ||^2 over all rows and
// calibration tokens.
double output_error(const WeightTensor& w_ref, const WeightTensor& w_hat,
                    const CalibrationSet& cal);

struct AlphaSearchResult {
    double alpha_star = 0.0;
    std::vector<std::pair<double, double>> losses;  // (alpha, L(alpha)), 20 rows
    std::vector<float> scale_star;                  // S^alpha*, zero-guarded
    QuantizeStats stats_star;                       // gamma evidence at alpha*
};

// Grid search over alpha in {k/20 : k = 0..19}: scale, quantize per cfg.mode,
// dequantize (which compensates the scales), and score against the unscaled
// full-precision product W A^T. Ties resolve to the smaller alpha. When
// qt_star is non-null it receives the winning artifact.
AlphaSearchResult alpha_search(const WeightTensor& t, const CalibrationSet& cal,
                               const ChannelStats& stats, const QuantizeConfig& cfg,
                               QuantizedTensor* qt_star = nullptr);

// Salience diagnostic: the column with the highest mean |weight| versus the
// column with the highest mean |activation| (they often differ, which is the
// point of activation-aware scaling).
struct SalienceReport {
    size_t weight_argmax_col = 0;
    size_t activation_argmax_col = 0;
    double weight_mean_abs = 0.0;
    double activation_mean_abs = 0.0;
};

SalienceReport salience_report(const WeightTensor& t, const ChannelStats& stats);

}  // namespace dacq
