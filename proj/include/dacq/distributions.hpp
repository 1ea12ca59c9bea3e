// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "dacq/rng.hpp"

namespace dacq {

// The three zero-mean, unit-variance reference families used for the
// quantile-space goodness-of-fit comparison.
enum class Family : uint8_t { normal = 0, laplace = 1, logistic = 2 };

inline constexpr Family kAllFamilies[] = {Family::normal, Family::laplace,
                                          Family::logistic};

const char* family_name(Family f);
Family family_from_name(const std::string& name);

// Scale parameters that make each reference distribution unit-variance:
// Laplace b = 1/sqrt(2) (var = 2 b^2), logistic s = sqrt(3)/pi (var = s^2 pi^2 / 3).
inline constexpr double kLaplaceScale = 0.70710678118654752440;
inline constexpr double kLogisticScale = 0.55132889542179204100;

// Inverse CDF of N(0,1). Acklam's rational approximation polished with one
// Halley step against std::erfc; accurate to ~1e-15 over (0,1).
double normal_quantile(double p);

// Inverse CDF of the unit-variance Laplace: -b * sign(p-1/2) * ln(1 - 2|p-1/2|).
double laplace_quantile(double p);

// Inverse CDF of the unit-variance logistic: s * ln(p / (1-p)).
double logistic_quantile(double p);

double family_quantile(Family f, double p);

// Location/scale logistic used for companding grids; theta is the classic
// scale parameter (sigma * sqrt(3) / pi for a target standard deviation sigma).
double logistic_cdf(double x, double mu, double theta);
double logistic_icdf(double p, double mu, double theta);

// Zero-mean unit-variance draw via inverse-CDF sampling.
double family_draw(Family f, Rng& rng);

}  // namespace dacq
