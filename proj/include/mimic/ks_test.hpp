#pragma once

#include <cstddef>
#include <span>

namespace mimic {

/// sup_x |F_a(x) - F_b(x)| for two sorted samples; ties handled exactly.
double ks_statistic(std::span<const double> sorted_a, std::span<const double> sorted_b);

/// Survival function of the Kolmogorov distribution, P(K > lambda).
double kolmogorov_survival(double lambda);

/// Asymptotic p-value of a two-sample statistic `d` with the usual
/// (sqrt(n) + 0.12 + 0.11 / sqrt(n)) small-sample correction,
/// n = n1 n2 / (n1 + n2).
double ks_p_value(double d, std::size_t n1, std::size_t n2);

/// Smallest statistic whose p-value is at most `level`.
double ks_critical_value(double level, std::size_t n1, std::size_t n2);

}  // namespace mimic
