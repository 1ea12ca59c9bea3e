// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dacq/distributions.hpp"
#include "dacq/tensor.hpp"

namespace dacq {

// Sample standardized to zero mean / unit standard deviation (population
// convention), kept sorted ascending for quantile interpolation. mu/sigma are
// the statistics of the raw sample.
struct StandardizedSample {
    std::vector<double> values;
    double mu = 0.0;
    double sigma = 0.0;
};

struct FamilyFit {
    Family family = Family::normal;
    double rmse = 0.0;
    double mae = 0.0;
};

// One probe probability with its theoretical quantiles under all three
// reference families and the empirical quantile of the standardized sample.
struct QqRow {
    double p;
    double q_normal;
    double q_laplace;
    double q_logistic;
    double q_empirical;
};

struct FitReport {
    std::string tensor_name;
    size_t n_samples = 0;
    std::array<FamilyFit, 3> fits{};  // order: normal, laplace, logistic
    Family best_family = Family::normal;
    std::vector<QqRow> qq;

    const FamilyFit& fit(Family f) const { return fits[static_cast<size_t>(f)]; }
};

// Uniform sample without replacement when n < rows*cols, the whole tensor
// otherwise. Deterministic for a fixed seed.
std::vector<float> sample_weights(const WeightTensor& t, size_t n, uint64_t seed);

// (x - mean) / std with the population (1/N) std. Throws ValueError on
// zero-variance input.
StandardizedSample standardize(std::span<const float> x);

std::vector<double> theoretical_quantiles(Family f, std::span<const double> probs);

// Linear interpolation between order statistics at plotting positions
// (i + 0.5) / n; clamps to the extreme order statistics outside that range.
double empirical_quantile(const std::vector<double>& sorted_values, double p);

// RMSE / MAE between empirical and theoretical quantiles at the m probe
// probabilities p_k = (k + 0.5) / m.
std::pair<double, double> quantile_fit_metrics(const StandardizedSample& s, Family f,
                                               size_t m);

// Full per-tensor report: sample, standardize, score all three families, pick
// the winner (min rmse, ties by mae, then by family order normal < laplace <
// logistic), and tabulate Q-Q rows for export.
FitReport best_fit(const WeightTensor& t, size_t n, size_t m, uint64_t seed);

}  // namespace dacq
