// SPDX-License-Identifier: Apache-2.0

#include "dacq/evalx.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "dacq/awq.hpp"
#include "dacq/error.hpp"
#include "dacq/tensor_io.hpp"

namespace dacq {

std::pair<double, double> reconstruction_metrics(const WeightTensor& orig,
                                                 const WeightTensor& recon) {
    if (orig.rows != recon.rows || orig.cols != recon.cols) {
        throw ShapeError("reconstruction_metrics: shape mismatch");
    }
    if (orig.size() == 0) return {0.0, 0.0};
    double se = 0.0;
    double ae = 0.0;
    for (size_t i = 0; i < orig.data.size(); ++i) {
        const double d = static_cast<double>(orig.data[i]) - recon.data[i];
        se += d * d;
        ae += std::fabs(d);
    }
    const auto n = static_cast<double>(orig.size());
    return {se / n, ae / n};
}

const char* mode_label(GridKind kind) {
    switch (kind) {
        case GridKind::uniform: return "awq-uniform";
        case GridKind::logistic: return "dacq-logistic";
        case GridKind::hybrid: return "dacq-hybrid";
    }
    return "?";
}

GridKind mode_kind_from_label(const std::string& label) {
    if (label == "awq-uniform" || label == "uniform") return GridKind::uniform;
    if (label == "dacq-logistic" || label == "logistic") return GridKind::logistic;
    if (label == "dacq-hybrid" || label == "hybrid") return GridKind::hybrid;
    throw ValueError("unknown mode: " + label);
}

namespace {

EvalRecord make_record(const WeightTensor& t, GridKind kind, const char* protocol,
                       double alpha, const QuantizedTensor& qt,
                       const QuantizeStats& qstats, bool have_cal) {
    EvalRecord rec;
    rec.tensor_name = t.name;
    rec.mode = mode_label(kind);
    rec.protocol = protocol;
    rec.alpha_star = alpha;
    const WeightTensor recon = dequantize(qt);
    std::tie(rec.mse, rec.mae) = reconstruction_metrics(t, recon);
    rec.activation_error = qstats.total_activation_error;
    rec.gamma_histogram = qstats.gamma_hist;
    rec.calib_fallback = !have_cal || qstats.weight_mse_fallback;
    return rec;
}

}  // namespace

std::vector<EvalRecord> layer_error_profile(
    std::span<const WeightTensor> tensors,
    const std::function<const CalibrationSet*(const std::string&)>& find_calibration,
    const ProfileOptions& opts) {
    std::vector<GridKind> kinds;
    kinds.reserve(opts.modes.size());
    for (const auto& m : opts.modes) kinds.push_back(mode_kind_from_label(m));

    std::vector<EvalRecord> records;
    for (const auto& t : tensors) {
        const CalibrationSet* cal = find_calibration(t.name);
        const bool have_cal = cal != nullptr && cal->tokens > 0;
        ChannelStats cs;
        if (have_cal) cs = channel_stats(*cal);

        // The fixed-alpha ablation pins every mode to the uniform baseline's
        // best alpha.
        double fixed_alpha = 0.0;
        if (opts.alpha_search && have_cal) {
            bool have_fixed = false;
            for (GridKind kind : kinds) {
                QuantizeConfig mode_cfg{opts.bits, opts.group_size, kind};
                QuantizedTensor qt;
                AlphaSearchResult ar = alpha_search(t, *cal, cs, mode_cfg, &qt);
                if (kind == GridKind::uniform) {
                    fixed_alpha = ar.alpha_star;
                    have_fixed = true;
                }
                records.push_back(make_record(t, kind, "searched-alpha", ar.alpha_star,
                                              qt, ar.stats_star, have_cal));
            }
            if (!have_fixed) {
                QuantizeConfig cfg{opts.bits, opts.group_size, GridKind::uniform};
                fixed_alpha = alpha_search(t, *cal, cs, cfg).alpha_star;
            }
        }

        const std::vector<float> fixed_scales =
            (opts.alpha_search && have_cal) ? scale_candidates(cs, fixed_alpha)
                                            : std::vector<float>(t.cols, 1.0f);
        for (GridKind kind : kinds) {
            QuantizeConfig mode_cfg{opts.bits, opts.group_size, kind};
            QuantizeStats qstats;
            QuantizedTensor qt = quantize_scaled(t, fixed_scales,
                                                 have_cal ? cal : nullptr, mode_cfg,
                                                 &qstats);
            records.push_back(
                make_record(t, kind, "fixed-alpha", fixed_alpha, qt, qstats, have_cal));
        }
    }
    return records;
}

EvalRecord evaluate_artifact(const WeightTensor& orig, const QuantizedTensor& qt,
                             const CalibrationSet* cal) {
    qt.validate();
    if (orig.rows != qt.rows || orig.cols != qt.cols) {
        throw ShapeError("evaluate_artifact: '" + qt.name + "' shape mismatch");
    }
    if (cal != nullptr && cal->cols != orig.cols) {
        throw ShapeError("evaluate_artifact: calibration cols mismatch");
    }

    EvalRecord rec;
    rec.tensor_name = orig.name;
    rec.mode = qt.group_params.empty() ? "awq-uniform"
                                       : mode_label(qt.group_params[0].kind);
    rec.protocol = "artifact";
    rec.alpha_star = std::numeric_limits<double>::quiet_NaN();

    const WeightTensor recon = dequantize(qt);
    std::tie(rec.mse, rec.mae) = reconstruction_metrics(orig, recon);

    const bool have_cal = cal != nullptr && cal->tokens > 0;
    rec.calib_fallback = !have_cal;

    // Scaled-domain group errors, regenerated exactly as at quantize time.
    const WeightTensor scaled = apply_scale(orig, qt.channel_scales);
    const size_t J = qt.levels();
    const size_t n = qt.rows * qt.cols;
    const auto idx = qt.bits <= 4 ? unpack_nibbles(qt.packed, n) : qt.packed;
    const size_t gpr = qt.groups_per_row();
    double total = 0.0;
    for (size_t r = 0; r < qt.rows; ++r) {
        for (size_t k = 0; k < gpr; ++k) {
            const size_t c0 = k * qt.group_size;
            const size_t len = std::min(qt.group_size, qt.cols - c0);
            const GroupParams& params = qt.group_params[r * gpr + k];
            const QuantGrid grid = grid_from_params(params, J);
            std::vector<double> resid(len);
            for (size_t c = 0; c < len; ++c) {
                const size_t flat = r * qt.cols + c0 + c;
                resid[c] = static_cast<double>(scaled.data[flat]) - grid.levels[idx[flat]];
            }
            double e = 0.0;
            if (have_cal) {
                for (size_t tk = 0; tk < cal->tokens; ++tk) {
                    const float* a = cal->data.data() + tk * cal->cols + c0;
                    double acc = 0.0;
                    for (size_t c = 0; c < len; ++c) acc += resid[c] * a[c];
                    e += acc * acc;
                }
            } else {
                for (double d : resid) e += d * d;
            }
            total += e;
            const int bucket = std::clamp(
                static_cast<int>(std::lround(static_cast<double>(params.gamma) * 20.0)),
                0, 20);
            rec.gamma_histogram[bucket]++;
        }
    }
    rec.activation_error = total;
    return rec;
}

static std::string hist_to_string(const std::array<uint32_t, 21>& h) {
    std::ostringstream os;
    for (size_t i = 0; i < h.size(); ++i) {
        if (i > 0) os << '|';
        os << h[i];
    }
    return os.str();
}

void write_eval_csv(const std::vector<EvalRecord>& records,
                    const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "tensor,mode,protocol,alpha_star,mse,mae,activation_error,"
           "calib_fallback,gamma_hist\n";
    out.precision(17);
    for (const auto& r : records) {
        out << r.tensor_name << ',' << r.mode << ',' << r.protocol << ','
            << r.alpha_star << ',' << r.mse << ',' << r.mae << ','
            << r.activation_error << ',' << (r.calib_fallback ? 1 : 0) << ','
            << hist_to_string(r.gamma_histogram) << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

void write_eval_json(const std::vector<EvalRecord>& records,
                     const std::filesystem::path& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : records) {
        arr.push_back({{"tensor", r.tensor_name},
                       {"mode", r.mode},
                       {"protocol", r.protocol},
                       {"alpha_star", r.alpha_star},
                       {"mse", r.mse},
                       {"mae", r.mae},
                       {"activation_error", r.activation_error},
                       {"calib_fallback", r.calib_fallback},
                       {"gamma_hist", r.gamma_histogram}});
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << arr.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

namespace {

double grid_mse(std::span<const float> w, const QuantGrid& grid) {
    const auto idx = assign_nearest(w, grid);
    double se = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
        const double d = static_cast<double>(w[i]) - grid.levels[idx[i]];
        se += d * d;
    }
    return se / static_cast<double>(w.size());
}

}  // namespace

LloydMaxResult bruteforce_grid_oracle(std::span<const float> w, size_t J) {
    if (w.empty() || w.size() > 512) {
        throw ValueError("bruteforce_grid_oracle: group size must be in [1, 512]");
    }
    if (J < 2 || J > 8) throw ValueError("bruteforce_grid_oracle: J must be in [2, 8]");

    const GroupStats stats = GroupStats::compute(w);
    QuantGrid grid = uniform_levels(stats, J);

    LloydMaxResult res;
    res.grid = grid;
    res.mse = grid_mse(w, grid);

    double prev_mse = std::numeric_limits<double>::infinity();
    for (size_t it = 1; it <= 1000; ++it) {
        res.iterations = it;
        const auto idx = assign_nearest(w, grid);
        std::vector<double> sum(J, 0.0);
        std::vector<size_t> count(J, 0);
        for (size_t i = 0; i < w.size(); ++i) {
            sum[idx[i]] += w[i];
            count[idx[i]]++;
        }
        for (size_t j = 0; j < J; ++j) {
            if (count[j] > 0) grid.levels[j] = sum[j] / static_cast<double>(count[j]);
            // empty cells keep their previous level
        }
        std::sort(grid.levels.begin(), grid.levels.end());

        const double mse = grid_mse(w, grid);
        if (mse < res.mse) {
            res.mse = mse;
            res.grid = grid;
        }
        if (std::fabs(prev_mse - mse) <= 1e-14 * std::max(1.0, mse)) {
            res.converged = true;
            break;
        }
        prev_mse = mse;
    }
    return res;
}

}  // namespace dacq
