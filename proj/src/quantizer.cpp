// SPDX-License-Identifier: Apache-2.0

#include "dacq/quantizer.hpp"

#include <algorithm>
#include <cmath>

#include "dacq/distributions.hpp"
#include "dacq/error.hpp"
#include "dacq/parallel.hpp"
#include "dacq/tensor_io.hpp"

namespace dacq {

std::span<const double> gamma_grid_21() {
    static const std::vector<double> grid = [] {
        std::vector<double> g(21);
        for (int k = 0; k <= 20; ++k) g[k] = static_cast<double>(k) / 20.0;
        return g;
    }();
    return grid;
}

std::vector<uint8_t> assign_nearest(std::span<const float> w, const QuantGrid& grid) {
    if (grid.levels.empty()) throw ValueError("assign_nearest: empty grid");
    std::vector<uint8_t> idx(w.size());
    const auto& levels = grid.levels;
    for (size_t i = 0; i < w.size(); ++i) {
        const double d = w[i];
        auto it = std::lower_bound(levels.begin(), levels.end(), d);
        size_t j;
        if (it == levels.begin()) {
            j = 0;
        } else if (it == levels.end()) {
            j = levels.size() - 1;
        } else {
            const size_t hi = static_cast<size_t>(it - levels.begin());
            const size_t lo = hi - 1;
            // tie at the exact midpoint goes to the lower index
            j = (d - levels[lo] <= levels[hi] - d) ? lo : hi;
        }
        // duplicate levels: the lowest index of an equal-value run wins
        while (j > 0 && levels[j - 1] == levels[j]) --j;
        idx[i] = static_cast<uint8_t>(j);
    }
    return idx;
}

static double residual_output_error(const std::vector<double>& r,
                                    const ActivationSlice& x) {
    const auto& cal = *x.cal;
    const float* base = cal.data.data() + x.col_start;
    double total = 0.0;
    for (size_t t = 0; t < cal.tokens; ++t) {
        const float* a = base + t * cal.cols;
        double acc = 0.0;
        for (size_t c = 0; c < r.size(); ++c) acc += r[c] * a[c];
        total += acc * acc;
    }
    return total;
}

double activation_error(std::span<const float> w, std::span<const float> w_q,
                        const ActivationSlice& x) {
    if (w.size() != w_q.size()) throw ShapeError("activation_error: length mismatch");
    if (x.empty()) throw ShapeError("activation_error: empty activation slice");
    if (x.col_start + x.len > x.cal->cols || x.len != w.size()) {
        throw ShapeError("activation_error: slice does not match group");
    }
    std::vector<double> r(w.size());
    for (size_t i = 0; i < w.size(); ++i) r[i] = static_cast<double>(w[i]) - w_q[i];
    return residual_output_error(r, x);
}

double weight_sq_error(std::span<const float> w, std::span<const float> w_q) {
    if (w.size() != w_q.size()) throw ShapeError("weight_sq_error: length mismatch");
    double total = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
        const double d = static_cast<double>(w[i]) - w_q[i];
        total += d * d;
    }
    return total;
}

namespace {

// Objective for one candidate grid, evaluated from the double-precision
// levels. Used for both the gamma search and the recorded per-group evidence,
// so endpoint-dominance comparisons are exact.
double candidate_error(std::span<const float> w, const QuantGrid& grid,
                       const std::vector<uint8_t>& idx, const ActivationSlice& x,
                       bool use_fallback, std::vector<double>& scratch) {
    scratch.resize(w.size());
    for (size_t i = 0; i < w.size(); ++i) {
        scratch[i] = static_cast<double>(w[i]) - grid.levels[idx[i]];
    }
    if (use_fallback) {
        double total = 0.0;
        for (double d : scratch) total += d * d;
        return total;
    }
    return residual_output_error(scratch, x);
}

}  // namespace

GroupQuantResult quantize_group(const GroupView& view, size_t J, GridKind mode,
                                std::span<const double> gamma_grid) {
    if (view.values.empty()) throw ValueError("quantize_group: empty group");

    const double fixed_uniform[] = {1.0};
    const double fixed_logistic[] = {0.0};
    std::span<const double> candidates;
    switch (mode) {
        case GridKind::uniform: candidates = fixed_uniform; break;
        case GridKind::logistic: candidates = fixed_logistic; break;
        case GridKind::hybrid:
            candidates = gamma_grid.empty() ? gamma_grid_21() : gamma_grid;
            break;
    }

    const GroupStats stats = GroupStats::compute(view.values);
    const ActivationSlice x = view.activations();
    const bool fallback = x.empty();

    GroupQuantResult out;
    out.search.weight_mse_fallback = fallback;
    out.search.errors.reserve(candidates.size());

    std::vector<double> scratch;
    bool have_best = false;
    for (double gamma : candidates) {
        const GroupParams params = make_group_params(stats, mode, gamma);
        QuantGrid grid = grid_from_params(params, J);
        auto idx = assign_nearest(view.values, grid);
        const double err = candidate_error(view.values, grid, idx, x, fallback, scratch);
        out.search.errors.emplace_back(gamma, err);
        // strict improvement only: equal errors keep the smaller gamma
        if (!have_best || err < out.search.error_star) {
            have_best = true;
            out.search.gamma_star = gamma;
            out.search.error_star = err;
            out.search.chosen_grid = std::move(grid);
            out.search.chosen_params = params;
            out.indices = std::move(idx);
        }
    }
    return out;
}

QuantizedTensor quantize_tensor(const WeightTensor& t, const CalibrationSet* cal,
                                const QuantizeConfig& cfg, QuantizeStats* stats) {
    t.validate();
    if (cfg.bits != 2 && cfg.bits != 3 && cfg.bits != 4 && cfg.bits != 8) {
        throw ValueError("quantize_tensor: bits must be one of {2,3,4,8}");
    }
    if (cfg.group_size < 1) throw ValueError("quantize_tensor: group_size must be >= 1");
    if (cal != nullptr && cal->cols != t.cols) {
        throw ShapeError("quantize_tensor: calibration cols " + std::to_string(cal->cols) +
                         " != tensor cols " + std::to_string(t.cols));
    }

    const size_t J = size_t{1} << cfg.bits;
    QuantizedTensor qt;
    qt.name = t.name;
    qt.rows = t.rows;
    qt.cols = t.cols;
    qt.group_size = cfg.group_size;
    qt.bits = cfg.bits;
    qt.channel_scales.assign(t.cols, 1.0f);
    const size_t gpr = qt.groups_per_row();
    qt.group_params.resize(qt.num_groups());

    std::vector<uint8_t> flat_idx(t.size());
    std::vector<GroupLog> logs(qt.num_groups());

    parallel_for(t.rows, [&](size_t row_begin, size_t row_end) {
        for (size_t r = row_begin; r < row_end; ++r) {
            for (size_t k = 0; k < gpr; ++k) {
                const size_t c0 = k * cfg.group_size;
                const size_t len = std::min(cfg.group_size, t.cols - c0);
                GroupView view{r, c0, {t.data.data() + r * t.cols + c0, len}, cal};
                auto res = quantize_group(view, J, cfg.mode, gamma_grid_21());

                const size_t gi = r * gpr + k;
                qt.group_params[gi] = res.search.chosen_params;
                std::copy(res.indices.begin(), res.indices.end(),
                          flat_idx.begin() + r * t.cols + c0);

                GroupLog& log = logs[gi];
                log.gamma_star = res.search.gamma_star;
                log.error_star = res.search.error_star;
                log.fallback = res.search.weight_mse_fallback;
                log.degenerate = res.search.chosen_grid.degenerate;
                if (cfg.mode == GridKind::hybrid) {
                    log.error_gamma0 = res.search.errors.front().second;
                    log.error_gamma1 = res.search.errors.back().second;
                } else {
                    log.error_gamma0 = log.error_gamma1 = res.search.error_star;
                }
            }
        }
    });

    if (cfg.bits <= 4) {
        qt.packed = pack_nibbles(flat_idx);
    } else {
        qt.packed = std::move(flat_idx);
    }

    if (stats != nullptr) {
        stats->gamma_hist.fill(0);
        stats->total_activation_error = 0.0;
        stats->degenerate_groups = 0;
        stats->weight_mse_fallback = false;
        for (const auto& log : logs) {
            const int bucket =
                std::clamp(static_cast<int>(std::lround(log.gamma_star * 20.0)), 0, 20);
            stats->gamma_hist[bucket]++;
            stats->total_activation_error += log.error_star;
            if (log.degenerate) stats->degenerate_groups++;
            if (log.fallback) stats->weight_mse_fallback = true;
        }
        stats->groups = std::move(logs);
    }

    qt.validate();
    return qt;
}

WeightTensor dequantize(const QuantizedTensor& qt) {
    qt.validate();
    const size_t J = qt.levels();
    const size_t n = qt.rows * qt.cols;

    std::vector<uint8_t> idx;
    if (qt.bits <= 4) {
        idx = unpack_nibbles(qt.packed, n);
    } else {
        idx = qt.packed;
    }

    WeightTensor out(qt.name, qt.rows, qt.cols);
    const size_t gpr = qt.groups_per_row();
    parallel_for(qt.rows, [&](size_t row_begin, size_t row_end) {
        for (size_t r = row_begin; r < row_end; ++r) {
            for (size_t k = 0; k < gpr; ++k) {
                const size_t c0 = k * qt.group_size;
                const size_t len = std::min(qt.group_size, qt.cols - c0);
                const QuantGrid grid = grid_from_params(qt.group_params[r * gpr + k], J);
                for (size_t c = c0; c < c0 + len; ++c) {
                    const double level = grid.levels[idx[r * qt.cols + c]];
                    out.data[r * qt.cols + c] = static_cast<float>(
                        level / static_cast<double>(qt.channel_scales[c]));
                }
            }
        }
    });
    return out;
}

std::vector<uint8_t> empirical_companding_oracle(std::span<const float> w, size_t J) {
    if (w.size() > 4096) throw ValueError("companding oracle: group too large");
    if (J < 2) throw ValueError("companding oracle: J < 2");
    const GroupStats stats = GroupStats::compute(w);
    std::vector<uint8_t> idx(w.size());
    if (stats.sigma == 0.0) {
        // constant group: F(mu) = 1/2 lands in the middle cell
        std::fill(idx.begin(), idx.end(), static_cast<uint8_t>(J / 2));
        return idx;
    }
    const double theta = stats.sigma * std::sqrt(3.0) / M_PI;
    for (size_t i = 0; i < w.size(); ++i) {
        const double u = logistic_cdf(w[i], stats.mu, theta);
        auto cell = static_cast<long>(std::floor(u * static_cast<double>(J)));
        cell = std::clamp(cell, 0l, static_cast<long>(J) - 1);
        idx[i] = static_cast<uint8_t>(cell);
    }
    return idx;
}

}  // namespace dacq
