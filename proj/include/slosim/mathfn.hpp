#pragma once

#include <cstddef>
#include <span>

namespace slosim::math {

// Standard-normal CDF and its inverse. The inverse is a rational
// approximation polished with one Halley step; absolute error < 1e-14 on
// (1e-300, 1 - 1e-16).
double normal_cdf(double z);
double normal_quantile(double p);

double digamma(double x);
double trigamma(double x);

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);

// Linear-interpolation quantile (the "type 7" estimator) over an unsorted
// sample; q in [0, 1].
double quantile_type7(std::span<const double> xs, double q);

// Nearest-rank quantile over an unsorted sample; q in (0, 1].
double quantile_nearest_rank(std::span<const double> xs, double q);

}  // namespace slosim::math
