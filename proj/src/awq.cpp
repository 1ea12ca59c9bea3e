// SPDX-License-Identifier: Apache-2.0

#include "dacq/awq.hpp"

#include <cmath>

#include "dacq/error.hpp"
#include "dacq/parallel.hpp"

namespace dacq {

ChannelStats channel_stats(const CalibrationSet& cal) {
    cal.validate();
    if (cal.tokens < 1) throw ValueError("channel_stats: empty calibration set");
    ChannelStats st;
    st.s_vec.assign(cal.cols, 0.0);
    for (size_t t = 0; t < cal.tokens; ++t) {
        const float* row = cal.data.data() + t * cal.cols;
        for (size_t c = 0; c < cal.cols; ++c) st.s_vec[c] += std::fabs(row[c]);
    }
    for (auto& v : st.s_vec) v /= static_cast<double>(cal.tokens);
    return st;
}

std::vector<float> scale_candidates(const ChannelStats& stats, double alpha) {
    std::vector<float> s(stats.s_vec.size());
    for (size_t c = 0; c < s.size(); ++c) {
        if (stats.s_vec[c] == 0.0) {
            s[c] = 1.0f;
            continue;
        }
        const auto v = static_cast<float>(std::pow(stats.s_vec[c], alpha));
        s[c] = (std::isfinite(v) && v > 0.0f) ? v : 1.0f;
    }
    return s;
}

static void check_scales(const WeightTensor& t, std::span<const float> s) {
    if (s.size() != t.cols) throw ShapeError("scale vector length != tensor cols");
    for (size_t c = 0; c < s.size(); ++c) {
        if (!(std::isfinite(s[c]) && s[c] > 0.0f)) {
            throw ValueError("non-positive scale at column " + std::to_string(c));
        }
    }
}

WeightTensor apply_scale(const WeightTensor& t, std::span<const float> s) {
    check_scales(t, s);
    WeightTensor out = t;
    for (size_t r = 0; r < t.rows; ++r) {
        float* row = out.data.data() + r * t.cols;
        for (size_t c = 0; c < t.cols; ++c) row[c] *= s[c];
    }
    return out;
}

WeightTensor divide_scale(const WeightTensor& t, std::span<const float> s) {
    check_scales(t, s);
    WeightTensor out = t;
    for (size_t r = 0; r < t.rows; ++r) {
        float* row = out.data.data() + r * t.cols;
        for (size_t c = 0; c < t.cols; ++c) row[c] /= s[c];
    }
    return out;
}

QuantizedTensor quantize_scaled(const WeightTensor& t, std::span<const float> scales,
                                const CalibrationSet* cal, const QuantizeConfig& cfg,
                                QuantizeStats* stats) {
    const WeightTensor scaled = apply_scale(t, scales);
    QuantizedTensor qt = quantize_tensor(scaled, cal, cfg, stats);
    qt.channel_scales.assign(scales.begin(), scales.end());
    qt.validate();
    return qt;
}

double output_error(const WeightTensor& w_ref, const WeightTensor& w_hat,
                    const CalibrationSet& cal) {
    if (w_ref.rows != w_hat.rows || w_ref.cols != w_hat.cols) {
        throw ShapeError("output_error: tensor shapes differ");
    }
    if (cal.cols != w_ref.cols) throw ShapeError("output_error: calibration cols mismatch");

    std::vector<double> per_row(w_ref.rows, 0.0);
    parallel_for(w_ref.rows, [&](size_t begin, size_t end) {
        std::vector<double> diff(w_ref.cols);
        for (size_t r = begin; r < end; ++r) {
            const float* a = w_ref.data.data() + r * w_ref.cols;
            const float* b = w_hat.data.data() + r * w_ref.cols;
            for (size_t c = 0; c < w_ref.cols; ++c) {
                diff[c] = static_cast<double>(b[c]) - a[c];
            }
            double sum = 0.0;
            for (size_t t = 0; t < cal.tokens; ++t) {
                const float* x = cal.data.data() + t * cal.cols;
                double acc = 0.0;
                for (size_t c = 0; c < w_ref.cols; ++c) acc += diff[c] * x[c];
                sum += acc * acc;
            }
            per_row[r] = sum;
        }
    });
    double total = 0.0;
    for (double v : per_row) total += v;  // fixed order, scheduling-independent
    return total;
}

AlphaSearchResult alpha_search(const WeightTensor& t, const CalibrationSet& cal,
                               const ChannelStats& stats, const QuantizeConfig& cfg,
                               QuantizedTensor* qt_star) {
    if (cal.cols != t.cols) throw ShapeError("alpha_search: calibration cols mismatch");
    if (stats.s_vec.size() != t.cols) throw ShapeError("alpha_search: stats length mismatch");

    AlphaSearchResult out;
    out.losses.reserve(20);
    double best_loss = 0.0;
    bool have_best = false;
    for (int k = 0; k < 20; ++k) {
        const double alpha = static_cast<double>(k) / 20.0;
        const auto scales = scale_candidates(stats, alpha);
        QuantizeStats qstats;
        QuantizedTensor qt = quantize_scaled(t, scales, &cal, cfg, &qstats);
        const WeightTensor recon = dequantize(qt);
        const double loss = output_error(t, recon, cal);
        out.losses.emplace_back(alpha, loss);
        // strict improvement only: ties keep the smaller alpha
        if (!have_best || loss < best_loss) {
            have_best = true;
            best_loss = loss;
            out.alpha_star = alpha;
            out.scale_star = scales;
            out.stats_star = std::move(qstats);
            if (qt_star != nullptr) *qt_star = std::move(qt);
        }
    }
    return out;
}

SalienceReport salience_report(const WeightTensor& t, const ChannelStats& stats) {
    if (stats.s_vec.size() != t.cols) throw ShapeError("salience_report: length mismatch");
    SalienceReport rep;
    std::vector<double> col_mean(t.cols, 0.0);
    for (size_t r = 0; r < t.rows; ++r) {
        const float* row = t.data.data() + r * t.cols;
        for (size_t c = 0; c < t.cols; ++c) col_mean[c] += std::fabs(row[c]);
    }
    for (size_t c = 0; c < t.cols; ++c) {
        col_mean[c] /= static_cast<double>(t.rows);
        if (col_mean[c] > rep.weight_mean_abs) {
            rep.weight_mean_abs = col_mean[c];
            rep.weight_argmax_col = c;
        }
        if (stats.s_vec[c] > rep.activation_mean_abs) {
            rep.activation_mean_abs = stats.s_vec[c];
            rep.activation_argmax_col = c;
        }
    }
    return rep;
}

}  // namespace dacq
