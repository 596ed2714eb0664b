#pragma once

#include "fracsub/spatial.hpp"
#include "fracsub/subord.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fracsub {

/// Monte Carlo mean with its standard error (sample sd / sqrt(n)).
struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    bool zero_variance = false;
};

enum class ClockMode {
    discrete,  // step the subordinator on the h-grid until it crosses T
    dyadic,    // exact Z_T from the dyadic composition, rounded up to the grid (beta = 2^{-n} only)
};

struct SolveOptions {
    unsigned threads = 1;
    ClockMode clock = ClockMode::discrete;
};

using Payoff = std::function<double(std::span<const double>)>;

/// Run `work(begin, end)` over [0, n) in fixed blocks of `block` items on up
/// to `threads` workers. Callers reduce per-block results in block order, so
/// the outcome does not depend on the worker count.
void for_each_block(std::size_t n, std::size_t block, unsigned threads,
                    const std::function<void(std::size_t block_index, std::size_t begin, std::size_t end)>& work);

/// Grid clock Z_T^{beta,h} for path `path_id`, drawn from Stream(seed, path_id).
double sample_grid_clock(const SchemeConfig& cfg, Stream& rng, ClockMode clock);

/// Endpoints X^h_{Z_T^{beta,h}} started at x, one row of d values per path (row-major).
std::vector<double> sample_endpoints(std::span<const double> x, const SchemeConfig& cfg,
                                     const SolveOptions& options = {});

/// E[f(X^h_{Z_T^{beta,h}})] for paths 0..n_paths-1 with path k on Stream(seed, k).
McEstimate solve_fractional_cauchy(const Payoff& f, std::span<const double> x, const SchemeConfig& cfg,
                                   const SolveOptions& options = {});

McEstimate summarize(std::span<const double> values, std::uint64_t seed);

enum class DensityMethod { histogram, kde, quadrature };

std::string to_string(DensityMethod method);

/// Evaluation grid: `points` equally spaced values on [lo, hi]. For histograms
/// the bins partition [lo, hi]; points == 0 selects Freedman-Diaconis widths.
struct GridSpec {
    double lo = -3.0;
    double hi = 3.0;
    std::size_t points = 61;
};

/// One-dimensional density values on a sorted grid.
struct DensityGrid {
    std::vector<double> points;     // evaluation points or bin centres
    std::vector<double> values;     // >= 0
    std::vector<double> std_error;  // pointwise Monte Carlo standard error (empty for quadrature)
    DensityMethod method = DensityMethod::kde;
    double bandwidth = 0.0;         // kde bandwidth or histogram bin width
    double tail_mass = 0.0;         // histogram: sample fraction outside [lo, hi]
    std::size_t n_samples = 0;
};

/// Histogram or Gaussian KDE of one-dimensional samples (at least 1000).
/// The KDE bandwidth follows Silverman's rule unless `bandwidth` is given.
DensityGrid estimate_density(std::span<const double> samples, const GridSpec& grid, DensityMethod method,
                             std::optional<double> bandwidth = std::nullopt);

double silverman_bandwidth(std::span<const double> samples);

/// Density of X_{Z_T} - x for constant coefficients by the subordination integral
///   q(T, z) = int_0^inf p(u, z) p_Z(T, u) du,
/// with p(u, .) Gaussian with drift for alpha = 2 (d = 1, 2, 3) and the
/// isotropic stable law scaled by sigma for alpha < 2 (d = 1).
///
/// The u-integral is taken over a fixed composite Gauss-Legendre rule in
/// s = sqrt(u / T^beta) computed once per (beta, alpha, dim), so q is a smooth
/// function of (T, z) and finite differences of it are meaningful.
class ReferenceDensity {
public:
    ReferenceDensity(double beta, double alpha, int dim, std::vector<double> drift, double sigma);

    [[nodiscard]] double operator()(double T, std::span<const double> z) const;
    [[nodiscard]] double operator()(double T, double z) const;

    [[nodiscard]] double beta() const noexcept { return beta_; }
    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t nodes() const noexcept { return s_.size(); }

    /// Density of the spatial motion at time u, evaluated at displacement z.
    [[nodiscard]] double kernel(double u, std::span<const double> z) const;
    [[nodiscard]] double kernel(double u, double z) const { return kernel(u, std::span<const double>(&z, 1)); }

private:

    double beta_;
    double alpha_;
    int dim_;
    std::vector<double> drift_;
    double sigma_;
    std::vector<double> s_;        // s nodes
    std::vector<double> weight_;   // w_i * p_Z(1, s_i^2) * 2 s_i
    std::optional<SymmetricStableTable> stable_;
};

double reference_density(double beta, double alpha, double T, std::span<const double> z,
                         std::span<const double> drift, double sigma);
double reference_density(double beta, double alpha, double T, double z, double drift = 0.0, double sigma = 1.0);

/// Reference density values on `points` (d = 1), tagged as a quadrature grid.
DensityGrid reference_density_grid(const ReferenceDensity& q, double T, std::span<const double> points);

/// L1 discretization of the Caputo derivative on t_i = i dt; entry 0 is 0.
std::vector<double> caputo_derivative(std::span<const double> g, double dt, double beta);

/// Riemann-Liouville derivative d/dt int_0^t g(s)(t - s)^{-beta} ds / Gamma(1 - beta)
/// of the piecewise-linear interpolant, differentiated exactly; entry 0 is NaN.
std::vector<double> riemann_liouville_derivative(std::span<const double> g, double dt, double beta);

/// Residuals of the fractional Cauchy problem for the reference density.
struct ResidualGrid {
    std::vector<double> t_points;
    std::vector<double> x_points;
    std::vector<double> lhs;       // time-derivative term, t-major
    std::vector<double> residual;  // lhs - L q, t-major
    double max_abs_residual = 0.0;
    double max_abs_lhs = 0.0;

    [[nodiscard]] double relative() const { return max_abs_lhs > 0.0 ? max_abs_residual / max_abs_lhs : 0.0; }
};

/// RL derivative of q minus (-b dq/dz + sigma^2 / 2 d^2q/dz^2) on t in [t_lo, t_hi]
/// (sampled every `t_stride` steps) and the given z points, alpha = 2, d = 1.
/// Time steps run from 0 with q(0, z) = 0 for z != 0.
ResidualGrid pde_residual_check(double beta, double t_lo, double t_hi, std::span<const double> z_points, double dt,
                                double dz, double drift, double sigma, std::size_t t_stride = 1);

/// Same grid for the classical heat equation dq/dt = -b dq/dz + sigma^2 / 2 d^2q/dz^2
/// with centred time differences; used for beta close to 1.
ResidualGrid heat_residual_check(double beta, double t_lo, double t_hi, std::span<const double> z_points, double dt,
                                 double dz, double drift, double sigma, std::size_t t_stride = 1);

}  // namespace fracsub
