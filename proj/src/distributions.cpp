// SPDX-License-Identifier: Apache-2.0

#include "dacq/distributions.hpp"

#include <cmath>

#include "dacq/error.hpp"

namespace dacq {

const char* family_name(Family f) {
    switch (f) {
        case Family::normal: return "normal";
        case Family::laplace: return "laplace";
        case Family::logistic: return "logistic";
    }
    return "?";
}

Family family_from_name(const std::string& name) {
    for (Family f : kAllFamilies) {
        if (name == family_name(f)) return f;
    }
    throw ValueError("unknown distribution family: " + name);
}

static void check_prob(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw ValueError("probability must lie strictly in (0,1)");
    }
}

// Acklam's inverse normal CDF approximation.
// https://web.archive.org/web/20151110174102/http://home.online.no/~pjacklam/notes/invnorm
static double acklam(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;

    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double normal_quantile(double p) {
    check_prob(p);
    double x = acklam(p);
    // One Halley refinement using the exact CDF via erfc brings the
    // approximation to near machine precision. exp(x^2/2) overflows beyond
    // |x| ~ 38 (p below ~1e-316); the raw approximation is returned there.
    if (std::fabs(x) < 38.0) {
        const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
        const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
        x = x - u / (1.0 + x * u / 2.0);
    }
    return x;
}

double laplace_quantile(double p) {
    check_prob(p);
    const double h = p - 0.5;
    const double s = (h > 0.0) ? 1.0 : (h < 0.0 ? -1.0 : 0.0);
    return -kLaplaceScale * s * std::log1p(-2.0 * std::fabs(h));
}

double logistic_quantile(double p) {
    check_prob(p);
    return kLogisticScale * std::log(p / (1.0 - p));
}

double family_quantile(Family f, double p) {
    switch (f) {
        case Family::normal: return normal_quantile(p);
        case Family::laplace: return laplace_quantile(p);
        case Family::logistic: return logistic_quantile(p);
    }
    throw ValueError("bad family");
}

double logistic_cdf(double x, double mu, double theta) {
    return 1.0 / (1.0 + std::exp(-(x - mu) / theta));
}

double logistic_icdf(double p, double mu, double theta) {
    check_prob(p);
    return mu + theta * std::log(p / (1.0 - p));
}

double family_draw(Family f, Rng& rng) {
    return family_quantile(f, rng.uniform_open01());
}

}  // namespace dacq
