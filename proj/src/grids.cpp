// SPDX-License-Identifier: Apache-2.0

#include "dacq/grids.hpp"

#include <cmath>

#include "dacq/distributions.hpp"
#include "dacq/error.hpp"

namespace dacq {

GroupStats GroupStats::compute(std::span<const float> values) {
    if (values.empty()) throw ValueError("GroupStats: empty group");
    GroupStats s;
    s.n = values.size();
    double sum = 0.0;
    s.w_min = values[0];
    s.w_max = values[0];
    for (float v : values) {
        sum += v;
        if (v < s.w_min) s.w_min = v;
        if (v > s.w_max) s.w_max = v;
    }
    s.mu = sum / static_cast<double>(s.n);
    double var = 0.0;
    for (float v : values) {
        const double d = v - s.mu;
        var += d * d;
    }
    s.sigma = std::sqrt(var / static_cast<double>(s.n));
    return s;
}

static void check_levels(size_t J) {
    if (J < 2) throw ValueError("quantization grid needs J >= 2 levels");
}

QuantGrid uniform_levels(const GroupStats& stats, size_t J) {
    check_levels(J);
    if (stats.w_min > stats.w_max) throw ValueError("uniform_levels: w_min > w_max");
    QuantGrid g;
    g.kind = GridKind::uniform;
    g.gamma = 1.0;
    g.degenerate = stats.w_min == stats.w_max;
    g.levels.resize(J);
    const double range = stats.w_max - stats.w_min;
    for (size_t j = 0; j < J; ++j) {
        g.levels[j] = stats.w_min + range * (static_cast<double>(j) /
                                             static_cast<double>(J - 1));
    }
    return g;
}

QuantGrid logistic_levels(const GroupStats& stats, size_t J) {
    check_levels(J);
    if (stats.sigma < 0.0) throw ValueError("logistic_levels: sigma < 0");
    QuantGrid g;
    g.kind = GridKind::logistic;
    g.gamma = 0.0;
    g.levels.resize(J);
    if (stats.sigma == 0.0) {
        g.degenerate = true;
        for (auto& l : g.levels) l = stats.mu;
        return g;
    }
    const double theta = stats.sigma * std::sqrt(3.0) / M_PI;
    for (size_t j = 0; j < J; ++j) {
        const double p = (static_cast<double>(j) + 0.5) / static_cast<double>(J);
        g.levels[j] = logistic_icdf(p, stats.mu, theta);
    }
    return g;
}

QuantGrid hybrid_levels(const GroupStats& stats, size_t J, double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw ValueError("hybrid_levels: gamma outside [0,1]");
    }
    const QuantGrid logis = logistic_levels(stats, J);
    const QuantGrid uni = uniform_levels(stats, J);
    QuantGrid g;
    g.kind = GridKind::hybrid;
    g.gamma = gamma;
    g.degenerate = logis.degenerate && uni.degenerate;
    g.levels.resize(J);
    for (size_t j = 0; j < J; ++j) {
        g.levels[j] = (1.0 - gamma) * logis.levels[j] + gamma * uni.levels[j];
    }
    return g;
}

GroupParams make_group_params(const GroupStats& stats, GridKind kind, double gamma) {
    GroupParams p;
    p.mu = static_cast<float>(stats.mu);
    p.sigma = static_cast<float>(stats.sigma);
    p.w_min = static_cast<float>(stats.w_min);
    p.w_max = static_cast<float>(stats.w_max);
    p.gamma = static_cast<float>(gamma);
    p.kind = kind;
    return p;
}

QuantGrid grid_from_params(const GroupParams& p, size_t J) {
    GroupStats st;
    st.mu = p.mu;
    st.sigma = p.sigma;
    st.w_min = p.w_min;
    st.w_max = p.w_max;
    switch (p.kind) {
        case GridKind::uniform: return uniform_levels(st, J);
        case GridKind::logistic: return logistic_levels(st, J);
        case GridKind::hybrid: return hybrid_levels(st, J, p.gamma);
    }
    throw ValueError("grid_from_params: bad grid kind");
}

}  // namespace dacq
