#include "fracsub/inverse_time.hpp"

#include "fracsub/errors.hpp"
#include "fracsub/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace fracsub {

namespace {

void require_beta(double beta)
{
    if (!(beta > 0.0 && beta < 1.0)) {
        throw ParameterError("stability index beta must lie in (0, 1), got " + std::to_string(beta));
    }
}

void require_horizon(double T)
{
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw ParameterError("horizon T must be positive and finite, got " + std::to_string(T));
    }
}

double limit_at_zero(double beta, double T)
{
    return std::pow(T, -beta) / std::tgamma(1.0 - beta);
}

template <class Envelope>
double smallest_constant(Envelope&& holds, const char* what)
{
    // holds(c) is monotone: false below the answer, true above.
    if (holds(1.0)) {
        return 1.0;
    }
    double hi = 2.0;
    while (!holds(hi)) {
        hi *= 2.0;
        if (hi > 1e8) {
            throw NumericalError(std::string(what) + ": no envelope constant below 1e8");
        }
    }
    double lo = hi / 2.0;
    for (int i = 0; i < 100 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (holds(mid) ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace

InverseTimeSample discrete_inverse(const SubordinatorPath& path, double T)
{
    require_horizon(T);
    const auto& values = path.values;
    // values is nondecreasing: first index with values[i] > T.
    const auto it = std::upper_bound(values.begin(), values.end(), T);
    if (it == values.end()) {
        throw InsufficientPathError("subordinator path of " + std::to_string(path.steps()) +
                                    " steps ends at " + std::to_string(values.empty() ? 0.0 : values.back()) +
                                    " without crossing T = " + std::to_string(T));
    }
    const auto index = static_cast<std::size_t>(it - values.begin());
    return {path.time(index), index, T};
}

InverseTimeSample sample_discrete_inverse(double beta, double h, double T, Stream& rng, std::size_t max_steps)
{
    require_horizon(T);
    if (!(h > 0.0)) {
        throw ParameterError("time step h must be positive, got " + std::to_string(h));
    }
    const PositiveStableSampler sampler(beta);
    const double scale = std::pow(h, 1.0 / beta);
    const double level = T / scale;
    double s = 0.0;
    std::size_t i = 0;
    while (s <= level) {
        if (i == max_steps) {
            throw ResourceError("first passage above T = " + std::to_string(T) + " needs more than " +
                                std::to_string(max_steps) + " steps of size " + std::to_string(h));
        }
        s += sampler(rng);
        ++i;
    }
    return {static_cast<double>(i) * h, i, T};
}

double sample_inverse_marginal(double beta, double T, Stream& rng)
{
    require_horizon(T);
    // Z_T <= u iff S_u > T iff u^{1/beta} S_1 > T.
    return std::pow(T / sample_positive_stable(beta, rng), beta);
}

double inverse_density(double beta, double T, double u)
{
    require_beta(beta);
    require_horizon(T);
    if (u < 0.0) {
        return 0.0;
    }
    if (u < 1e-12 * std::pow(T, beta)) {
        return limit_at_zero(beta, T);
    }
    const double v = T * std::pow(u, -1.0 / beta);
    return T / (beta * std::pow(u, 1.0 + 1.0 / beta)) * stable_subordinator_density(beta, v);
}

double inverse_cdf(double beta, double T, double u)
{
    require_beta(beta);
    require_horizon(T);
    if (u <= 0.0) {
        return 0.0;
    }
    return stable_subordinator_ccdf(beta, T * std::pow(u, -1.0 / beta));
}

double theta_bound(double beta, double T, double u, double c)
{
    const double tb = std::pow(T, beta);
    return (c / tb) * std::exp(-std::pow(u / tb, 1.0 / (1.0 - beta)) / c);
}

double theta_lower_bound(double beta, double T, double u, double c)
{
    const double tb = std::pow(T, beta);
    return std::exp(-c * std::pow(u / tb, 1.0 / (1.0 - beta))) / (c * tb);
}

ThetaConstants fit_theta_constants(double beta, double T, std::span<const double> u_grid)
{
    require_beta(beta);
    require_horizon(T);
    if (u_grid.empty()) {
        throw ParameterError("fit_theta_constants: empty grid");
    }
    std::vector<double> density(u_grid.size());
    for (std::size_t i = 0; i < u_grid.size(); ++i) {
        if (u_grid[i] < 0.0) {
            throw ParameterError("fit_theta_constants: negative grid point " + std::to_string(u_grid[i]));
        }
        density[i] = inverse_density(beta, T, u_grid[i]);
    }
    ThetaConstants fit;
    fit.upper = smallest_constant(
        [&](double c) {
            for (std::size_t i = 0; i < u_grid.size(); ++i) {
                if (density[i] > theta_bound(beta, T, u_grid[i], c)) {
                    return false;
                }
            }
            return true;
        },
        "theta upper envelope");
    fit.lower = smallest_constant(
        [&](double c) {
            for (std::size_t i = 0; i < u_grid.size(); ++i) {
                if (theta_lower_bound(beta, T, u_grid[i], c) > density[i]) {
                    return false;
                }
            }
            return true;
        },
        "theta lower envelope");
    return fit;
}

double sample_inverse_dyadic(int n, double T, Stream& rng)
{
    if (n < 1) {
        throw ParameterError("dyadic level n must be >= 1, got " + std::to_string(n));
    }
    require_horizon(T);
    // Innermost Brownian motion first: B^n at time T, then B^{n-1} at time sqrt(2)|B^n(T)|, ...
    double time = T;
    for (int level = 0; level < n; ++level) {
        time = std::numbers::sqrt2 * std::abs(std::sqrt(time) * rng.normal());
    }
    return time;
}

double hitting_time_density(double a, double u)
{
    if (!(a > 0.0)) {
        throw ParameterError("hitting level a must be positive, got " + std::to_string(a));
    }
    if (u <= 0.0) {
        return 0.0;
    }
    return a * std::exp(-0.5 * std::log(2.0 * std::numbers::pi) - 1.5 * std::log(u) - a * a / (2.0 * u));
}

}  // namespace fracsub
