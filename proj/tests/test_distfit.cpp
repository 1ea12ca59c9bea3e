// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "dacq/distfit.hpp"
#include "dacq/error.hpp"
#include "dacq/synth.hpp"

using namespace dacq;

// Independent draws through the standard library, so classification checks do
// not share a code path with the library's own samplers.
static WeightTensor std_random_tensor(Family f, size_t n, uint32_t seed) {
    WeightTensor t("t", 1, n);
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> uni(1e-12, 1.0 - 1e-12);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : t.data) {
        double x = 0.0;
        switch (f) {
            case Family::normal: x = normal(gen); break;
            case Family::laplace: {
                // difference of the two exponential tails
                const double u = uni(gen) - 0.5;
                x = -std::copysign(std::log1p(-2.0 * std::fabs(u)), u) / std::sqrt(2.0);
                break;
            }
            case Family::logistic: {
                const double u = uni(gen);
                x = (std::sqrt(3.0) / M_PI) * std::log(u / (1.0 - u));
                break;
            }
        }
        v = static_cast<float>(0.02 * x);  // weight-like scale
    }
    return t;
}

TEST_CASE("standardize hand example {1,2,3}") {
    const float x[] = {1.0f, 2.0f, 3.0f};
    const StandardizedSample s = standardize(x);
    CHECK(s.mu == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(s.sigma == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
    REQUIRE(s.values.size() == 3);
    const double r = std::sqrt(1.5);  // 1.2247...
    CHECK(s.values[0] == doctest::Approx(-r).epsilon(1e-12));
    CHECK(s.values[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.values[2] == doctest::Approx(r).epsilon(1e-12));
}

TEST_CASE("standardize rejects degenerate samples") {
    const float c[] = {5.0f, 5.0f, 5.0f};
    CHECK_THROWS_AS(standardize(c), ValueError);
    const float one[] = {1.0f};
    CHECK_THROWS_AS(standardize(one), ValueError);
}

TEST_CASE("standardize is idempotent and output has mean 0 / std 1") {
    const WeightTensor t = synth_family_tensor("t", 100, 100, Family::normal, 0.0, 1.0, 5);
    const StandardizedSample s = standardize(t.data);

    double mean = 0.0;
    for (double v : s.values) mean += v;
    mean /= static_cast<double>(s.values.size());
    double var = 0.0;
    for (double v : s.values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(s.values.size());
    CHECK(std::fabs(mean) < 1e-6);
    CHECK(std::fabs(std::sqrt(var) - 1.0) < 1e-6);

    std::vector<float> again(s.values.begin(), s.values.end());
    const StandardizedSample s2 = standardize(again);
    for (size_t i = 0; i < s.values.size(); ++i) {
        CHECK(std::fabs(s2.values[i] - s.values[i]) < 1e-6);
    }
}

TEST_CASE("sample_weights returns everything when n exceeds the population") {
    WeightTensor t("t", 2, 2);
    t.data = {1.0f, 2.0f, 3.0f, 4.0f};
    const auto all = sample_weights(t, 10, 1);
    CHECK(all == t.data);
}

TEST_CASE("sample_weights is deterministic and without replacement") {
    WeightTensor t("t", 100, 100);
    for (size_t i = 0; i < t.data.size(); ++i) t.data[i] = static_cast<float>(i);

    const auto a = sample_weights(t, 500, 9);
    const auto b = sample_weights(t, 500, 9);
    CHECK(a == b);
    CHECK(a.size() == 500);
    const std::set<float> uniq(a.begin(), a.end());
    CHECK(uniq.size() == 500);  // distinct population values stay distinct

    const auto c = sample_weights(t, 500, 10);
    CHECK(a != c);
}

TEST_CASE("sample_weights preconditions") {
    WeightTensor t("t", 2, 2);
    CHECK_THROWS_AS(sample_weights(t, 1, 0), ValueError);
    WeightTensor empty("e", 0, 0);
    CHECK_THROWS_AS(sample_weights(empty, 5, 0), ValueError);
}

TEST_CASE("theoretical_quantiles maps a probability vector") {
    const std::vector<double> probs{0.5, 0.75};
    const auto q = theoretical_quantiles(Family::logistic, probs);
    REQUIRE(q.size() == 2);
    CHECK(q[0] == doctest::Approx(0.0));
    CHECK(q[1] == doctest::Approx(0.6057).epsilon(1e-4));
    const std::vector<double> bad{0.5, 1.0};
    CHECK_THROWS_AS(theoretical_quantiles(Family::normal, bad), ValueError);
}

TEST_CASE("empirical quantile interpolates plotting positions") {
    const std::vector<double> v = {0.0, 1.0, 2.0, 3.0};
    // positions (i+0.5)/4 = 0.125, 0.375, 0.625, 0.875
    CHECK(empirical_quantile(v, 0.125) == doctest::Approx(0.0));
    CHECK(empirical_quantile(v, 0.375) == doctest::Approx(1.0));
    CHECK(empirical_quantile(v, 0.25) == doctest::Approx(0.5));
    CHECK(empirical_quantile(v, 0.01) == doctest::Approx(0.0));   // clamps low
    CHECK(empirical_quantile(v, 0.999) == doctest::Approx(3.0));  // clamps high
}

TEST_CASE("fit metrics vanish when the sample sits exactly on the probe quantiles") {
    const size_t m = 200;
    StandardizedSample s;
    s.values.resize(m);
    for (size_t k = 0; k < m; ++k) {
        s.values[k] = logistic_quantile((static_cast<double>(k) + 0.5) / m);
    }
    const auto [rmse, mae] = quantile_fit_metrics(s, Family::logistic, m);
    CHECK(rmse == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(mae == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("normal draws score better under normal than laplace (3 seeds)") {
    for (uint32_t seed : {11u, 22u, 33u}) {
        const WeightTensor t = std_random_tensor(Family::normal, 100000, seed);
        const StandardizedSample s = standardize(t.data);
        const auto [rmse_n, mae_n] = quantile_fit_metrics(s, Family::normal, 1000);
        const auto [rmse_l, mae_l] = quantile_fit_metrics(s, Family::laplace, 1000);
        CHECK(rmse_n < rmse_l);
        CHECK(mae_n < mae_l);
    }
}

TEST_CASE("metrics are invariant under affine rescaling of the raw sample") {
    // values on a 2^-10 grid in [-0.5, 0.5] keep 3x+7 exact in f32, so the
    // only difference between the two pipelines is standardization itself
    WeightTensor t = synth_family_tensor("t", 200, 200, Family::logistic, 0.0, 0.1, 3);
    for (auto& v : t.data) {
        v = std::round(std::clamp(v, -0.5f, 0.5f) * 1024.0f) / 1024.0f;
    }
    std::vector<float> scaled(t.data.size());
    for (size_t i = 0; i < t.data.size(); ++i) scaled[i] = 3.0f * t.data[i] + 7.0f;

    const StandardizedSample s1 = standardize(t.data);
    const StandardizedSample s2 = standardize(scaled);
    for (Family f : kAllFamilies) {
        const auto [r1, m1] = quantile_fit_metrics(s1, f, 500);
        const auto [r2, m2] = quantile_fit_metrics(s2, f, 500);
        CHECK(r1 == doctest::Approx(r2).epsilon(1e-9));
        CHECK(m1 == doctest::Approx(m2).epsilon(1e-9));
    }
}

TEST_CASE("best_fit recovers the generating family (std-library oracle)") {
    for (Family f : kAllFamilies) {
        const WeightTensor t = std_random_tensor(f, 100000, 1234);
        const FitReport r = best_fit(t, 100000, 1000, 0);
        CHECK(r.best_family == f);
        CHECK(r.n_samples == 100000);
        CHECK(r.qq.size() == 1000);
        for (const auto& fit : r.fits) {
            CHECK(fit.rmse >= 0.0);
            CHECK(fit.mae >= 0.0);
        }
    }
}

TEST_CASE("best_fit classification holds in >= 95% of 20 seeded trials per family") {
    for (Family f : kAllFamilies) {
        int hits = 0;
        for (uint32_t seed = 0; seed < 20; ++seed) {
            const WeightTensor t = std_random_tensor(f, 100000, 1000 + seed);
            const FitReport r = best_fit(t, 100000, 1000, seed);
            if (r.best_family == f) hits++;
        }
        CHECK(hits >= 19);
    }
}

TEST_CASE("best_fit winner agrees with the documented tie-break rule") {
    const WeightTensor t = std_random_tensor(Family::logistic, 50000, 77);
    const FitReport r = best_fit(t, 50000, 500, 1);
    size_t best = 0;
    for (size_t i = 1; i < 3; ++i) {
        const auto& a = r.fits[i];
        const auto& b = r.fits[best];
        if (a.rmse < b.rmse || (a.rmse == b.rmse && a.mae < b.mae)) best = i;
    }
    CHECK(r.best_family == static_cast<Family>(best));
}
