#pragma once

#include <functional>
#include <span>
#include <vector>

namespace fracsub {

/// sup |F_n - F| for the empirical CDF of `samples` (sorted internally).
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);

/// sup |F_n - G_m| between two empirical CDFs.
double ks_distance(std::span<const double> a, std::span<const double> b);

/// Least-squares line through (log x, log y).
struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double std_error = 0.0;  // of the slope; 0 for two points
};

SlopeFit loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace fracsub
