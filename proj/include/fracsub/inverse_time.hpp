#pragma once

#include "fracsub/rng.hpp"
#include "fracsub/subord.hpp"

#include <cstddef>
#include <optional>
#include <span>

namespace fracsub {

/// First-passage time of a subordinator above the horizon T.
struct InverseTimeSample {
    double value = 0.0;
    std::optional<std::size_t> grid_index;  // set for grid-based samples: value == grid_index * h
    double horizon_T = 0.0;
};

/// Smallest t_i = i h with path.values[i] > T.
///
/// Throws InsufficientPathError when the path never crosses T.
InverseTimeSample discrete_inverse(const SubordinatorPath& path, double T);

/// Same law as discrete_inverse on a freshly sampled path, without storing it.
///
/// Throws ResourceError if more than max_steps increments are needed.
InverseTimeSample sample_discrete_inverse(double beta, double h, double T, Stream& rng,
                                          std::size_t max_steps = 1'000'000'000);

/// Exact sample of Z_T for any beta, using Z_T = (T / S_1)^beta in law.
double sample_inverse_marginal(double beta, double T, Stream& rng);

/// Density p_Z(T, u) of the inverse subordinator at time T.
double inverse_density(double beta, double T, double u);

/// P[Z_T <= u] = P[S_u > T].
double inverse_cdf(double beta, double T, double u);

/// Upper envelope (c / T^beta) exp(-c^{-1} (u / T^beta)^{1 / (1 - beta)}).
double theta_bound(double beta, double T, double u, double c);

/// Lower envelope c^{-1} T^{-beta} exp(-c (u / T^beta)^{1 / (1 - beta)}).
double theta_lower_bound(double beta, double T, double u, double c);

struct ThetaConstants {
    double upper = 1.0;  // smallest c >= 1 with density <= theta_bound
    double lower = 1.0;  // smallest c >= 1 with theta_lower_bound <= density
};

/// Fit both envelope constants on the grid u_grid (values >= 0).
///
/// Throws NumericalError if no c below 1e8 works, e.g. when the density
/// underflows at a grid point.
ThetaConstants fit_theta_constants(double beta, double T, std::span<const double> u_grid);

/// Exact sample of Z_T for beta = 2^{-n}: sqrt(2)|B^1(sqrt(2)|B^2(... sqrt(2)|B^n(T)| ...)|)|.
double sample_inverse_dyadic(int n, double T, Stream& rng);

/// Density of the first passage of standard Brownian motion above level a > 0.
double hitting_time_density(double a, double u);

}  // namespace fracsub
