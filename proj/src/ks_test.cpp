#include "mimic/ks_test.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mimic {

double ks_statistic(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("KS statistic needs non-empty samples");
    const auto na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double kolmogorov_survival(double lambda) {
    if (lambda <= 0.0) return 1.0;
    using std::numbers::pi;
    if (lambda < 1.18) {
        // Theta-function form, accurate for small arguments.
        const double y = std::exp(-pi * pi / (8.0 * lambda * lambda));
        const double y8 = std::pow(y, 8);
        const double cdf = std::sqrt(2.0 * pi) / lambda * y * (1.0 + y8 * (1.0 + y8 * y8 * (1.0 + y8 * y8 * y8)));
        return 1.0 - cdf;
    }
    double sum = 0.0, sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-17) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_p_value(double d, std::size_t n1, std::size_t n2) {
    if (n1 == 0 || n2 == 0) throw std::invalid_argument("KS p-value needs non-empty samples");
    const double ne = static_cast<double>(n1) * static_cast<double>(n2) / static_cast<double>(n1 + n2);
    const double root = std::sqrt(ne);
    return kolmogorov_survival((root + 0.12 + 0.11 / root) * d);
}

double ks_critical_value(double level, std::size_t n1, std::size_t n2) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0, 1)");
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (ks_p_value(mid, n1, n2) > level ? lo : hi) = mid;
    }
    return hi;
}

}  // namespace mimic
