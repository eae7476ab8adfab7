#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tic {

/// Kahan-compensated sum.
double stable_sum(std::span<const double> xs);

double mean(std::span<const double> xs);
double sample_variance(std::span<const double> xs);
double sample_sd(std::span<const double> xs);
/// Standard error of the sample mean.
double standard_error(std::span<const double> xs);

/// Empirical quantile (linear interpolation between order statistics).
double quantile(std::vector<double> xs, double q);

/// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

/// Slope of log(y) against log(x); all inputs must be positive.
double loglog_slope(std::span<const double> x, std::span<const double> y);

} // namespace tic
