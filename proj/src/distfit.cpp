// SPDX-License-Identifier: Apache-2.0

#include "dacq/distfit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dacq/error.hpp"
#include "dacq/rng.hpp"

namespace dacq {

std::vector<float> sample_weights(const WeightTensor& t, size_t n, uint64_t seed) {
    const size_t total = t.size();
    if (total == 0) throw ValueError("sample_weights: empty tensor");
    if (n < 2) throw ValueError("sample_weights: need n >= 2");
    if (n >= total) return t.data;

    // Partial Fisher-Yates over an index vector: the first n slots end up
    // holding a uniform sample without replacement.
    std::vector<uint32_t> idx(total);
    std::iota(idx.begin(), idx.end(), 0u);
    Rng rng(seed);
    std::vector<float> out(n);
    for (size_t i = 0; i < n; ++i) {
        const size_t j = i + static_cast<size_t>(rng.uniform_index(total - i));
        std::swap(idx[i], idx[j]);
        out[i] = t.data[idx[i]];
    }
    return out;
}

StandardizedSample standardize(std::span<const float> x) {
    if (x.size() < 2) throw ValueError("standardize: need at least 2 values");
    double mean = 0.0;
    for (float v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (float v : x) {
        const double d = v - mean;
        var += d * d;
    }
    var /= static_cast<double>(x.size());  // population convention
    const double sd = std::sqrt(var);
    if (!(sd > 0.0)) throw ValueError("standardize: degenerate sample (zero variance)");

    StandardizedSample s;
    s.mu = mean;
    s.sigma = sd;
    s.values.resize(x.size());
    for (size_t i = 0; i < x.size(); ++i) s.values[i] = (x[i] - mean) / sd;
    std::sort(s.values.begin(), s.values.end());
    return s;
}

std::vector<double> theoretical_quantiles(Family f, std::span<const double> probs) {
    std::vector<double> q(probs.size());
    for (size_t i = 0; i < probs.size(); ++i) q[i] = family_quantile(f, probs[i]);
    return q;
}

double empirical_quantile(const std::vector<double>& sorted_values, double p) {
    const size_t n = sorted_values.size();
    // Order statistic i sits at plotting position (i + 0.5) / n.
    const double h = p * static_cast<double>(n) - 0.5;
    if (h <= 0.0) return sorted_values.front();
    if (h >= static_cast<double>(n - 1)) return sorted_values.back();
    const auto i = static_cast<size_t>(h);
    const double frac = h - static_cast<double>(i);
    return sorted_values[i] + frac * (sorted_values[i + 1] - sorted_values[i]);
}

std::pair<double, double> quantile_fit_metrics(const StandardizedSample& s, Family f,
                                               size_t m) {
    if (m < 2) throw ValueError("quantile_fit_metrics: need m >= 2");
    double se = 0.0;
    double ae = 0.0;
    for (size_t k = 0; k < m; ++k) {
        const double p = (static_cast<double>(k) + 0.5) / static_cast<double>(m);
        const double d = empirical_quantile(s.values, p) - family_quantile(f, p);
        se += d * d;
        ae += std::fabs(d);
    }
    const auto dm = static_cast<double>(m);
    return {std::sqrt(se / dm), ae / dm};
}

FitReport best_fit(const WeightTensor& t, size_t n, size_t m, uint64_t seed) {
    const auto sample = sample_weights(t, n, seed);
    const auto s = standardize(sample);

    FitReport report;
    report.tensor_name = t.name;
    report.n_samples = sample.size();
    for (size_t i = 0; i < 3; ++i) {
        const auto f = static_cast<Family>(i);
        const auto [rmse, mae] = quantile_fit_metrics(s, f, m);
        report.fits[i] = {f, rmse, mae};
    }
    // min rmse; ties by mae, then by the fixed order normal < laplace < logistic.
    size_t best = 0;
    for (size_t i = 1; i < 3; ++i) {
        const auto& a = report.fits[i];
        const auto& b = report.fits[best];
        if (a.rmse < b.rmse || (a.rmse == b.rmse && a.mae < b.mae)) best = i;
    }
    report.best_family = static_cast<Family>(best);

    report.qq.reserve(m);
    for (size_t k = 0; k < m; ++k) {
        const double p = (static_cast<double>(k) + 0.5) / static_cast<double>(m);
        report.qq.push_back({p, normal_quantile(p), laplace_quantile(p),
                             logistic_quantile(p), empirical_quantile(s.values, p)});
    }
    return report;
}

}  // namespace dacq
