#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mimic/ks_test.hpp"

using namespace mimic;

namespace {

/// Evaluates both empirical CDFs at every sample point.
double brute_force_statistic(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    auto cdf = [](const std::vector<double>& s, double x) {
        return static_cast<double>(std::count_if(s.begin(), s.end(), [x](double v) { return v <= x; })) /
               static_cast<double>(s.size());
    };
    for (const auto* s : {&a, &b})
        for (double x : *s) worst = std::max(worst, std::abs(cdf(a, x) - cdf(b, x)));
    return worst;
}

}  // namespace

TEST_SUITE("ks_test") {
    TEST_CASE("statistic matches direct evaluation, ties included") {
        std::mt19937_64 rng(41);
        std::uniform_int_distribution<int> coarse(0, 6);
        std::normal_distribution<double> normal;
        for (int rep = 0; rep < 200; ++rep) {
            std::vector<double> a(1 + rep % 17), b(1 + rep % 11);
            for (double& v : a) v = rep % 2 ? coarse(rng) : normal(rng);
            for (double& v : b) v = rep % 2 ? coarse(rng) : normal(rng) + 0.3;
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            CHECK(ks_statistic(a, b) == doctest::Approx(brute_force_statistic(a, b)).epsilon(1e-15));
            CHECK(ks_statistic(a, a) == 0.0);
        }
        const std::vector<double> a{0.1, 0.4, 0.5, 0.9}, b{0.2, 0.3, 0.35, 0.6, 0.7, 1.2};
        CHECK(ks_statistic(a, b) == doctest::Approx(0.25));
        CHECK_THROWS_AS(ks_statistic({}, b), std::invalid_argument);
    }

    TEST_CASE("Kolmogorov survival function") {
        // Reference values from an independent implementation.
        const std::pair<double, double> table[] = {
            {0.3, 0.9999906941986655},   {0.5, 0.9639452436648751},  {1.0, 0.26999967167735456},
            {1.1, 0.1777181926064012},   {1.18, 0.1234538094297657}, {1.2, 0.11224966667072497},
            {1.5, 0.022217962616525127}, {2.0, 0.0006709252557796953}, {3.0, 3.045995948942526e-08}};
        for (const auto& [lambda, expected] : table)
            CHECK(kolmogorov_survival(lambda) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(kolmogorov_survival(0.0) == 1.0);
        CHECK(kolmogorov_survival(-1.0) == 1.0);
        CHECK(kolmogorov_survival(40.0) == 0.0);
        double previous = 1.0;
        for (double lambda = 0.01; lambda < 4.0; lambda += 0.01) {
            const double p = kolmogorov_survival(lambda);
            CHECK(p <= previous);
            previous = p;
        }
    }

    TEST_CASE("critical values invert the p-value") {
        for (std::size_t n : {10u, 100u, 100000u}) {
            for (double level : {0.05, 0.01, 0.01 / 8.0}) {
                const double c = ks_critical_value(level, n, n);
                CHECK(ks_p_value(c, n, n) == doctest::Approx(level).epsilon(1e-9));
                CHECK(ks_p_value(c * 1.01, n, n) < level);
            }
        }
        const double large = ks_critical_value(0.01, 1'000'000, 1'000'000);
        const double ne = std::sqrt(5e5);
        CHECK(large == doctest::Approx(1.6276236115189504 / (ne + 0.12 + 0.11 / ne)).epsilon(1e-9));
        CHECK_THROWS_AS(ks_critical_value(0.0, 10, 10), std::invalid_argument);
        CHECK_THROWS_AS(ks_p_value(0.1, 0, 10), std::invalid_argument);
    }

    TEST_CASE("false rejection rate under the null") {
        std::mt19937_64 rng(42);
        std::normal_distribution<double> normal;
        int rejections = 0;
        const int reps = 2000;
        for (int rep = 0; rep < reps; ++rep) {
            std::vector<double> a(200), b(300);
            for (double& v : a) v = normal(rng);
            for (double& v : b) v = normal(rng);
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            if (ks_p_value(ks_statistic(a, b), a.size(), b.size()) < 0.05) ++rejections;
        }
        // Binomial(2000, 0.05) has standard deviation below 10.
        CHECK(rejections > 50);
        CHECK(rejections < 150);
    }
}
