#pragma once

#include "fracsub/rng.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace fracsub {

/// One-sided beta-stable subordinator sampled on the grid t_i = i * step_h.
///
/// values[0] == 0 and values is nondecreasing. The Laplace transform of an
/// increment over a step is exp(-step_h * lambda^beta).
struct SubordinatorPath {
    double step_h = 0.0;
    double beta = 0.0;
    std::vector<double> values;

    [[nodiscard]] std::size_t steps() const noexcept { return values.empty() ? 0 : values.size() - 1; }
    [[nodiscard]] double time(std::size_t i) const noexcept { return static_cast<double>(i) * step_h; }
};

/// Symmetric isotropic stable driver in R^dim.
///
/// alpha == 2 is the standard Brownian driver (N(0, I) at unit time).
/// alpha < 2 is normalized so that E exp(i<xi, X_1>) = exp(-|xi|^alpha).
struct StableDriverSpec {
    double alpha = 2.0;
    int dim = 1;

    void validate() const;
    [[nodiscard]] bool brownian() const noexcept { return alpha == 2.0; }
};

/// Exact sampler of S_1 with E exp(-lambda S_1) = exp(-lambda^beta).
///
/// Kanter's representation S = (A(U) / E)^((1 - beta) / beta) with U uniform
/// on (0, pi) and E standard exponential. Constants are precomputed so the
/// sampler can sit inside path-stepping loops.
class PositiveStableSampler {
public:
    explicit PositiveStableSampler(double beta);

    [[nodiscard]] double beta() const noexcept { return beta_; }
    double operator()(Stream& rng) const noexcept;

private:
    double beta_;
    double one_minus_;
    double ratio_;       // beta / (1 - beta)
    double inv_one_minus_;
    double out_power_;   // (1 - beta) / beta
};

double sample_positive_stable(double beta, Stream& rng);

/// Path of n_steps exact increments h^(1/beta) * S_1.
SubordinatorPath sample_subordinator_path(double beta, double h, std::size_t n_steps, Stream& rng);

/// Density p_S(1, v) of S_1; zero for v <= 0.
double stable_subordinator_density(double beta, double v);

/// P[S_1 <= v] and P[S_1 > v], each evaluated without cancellation.
double stable_subordinator_cdf(double beta, double v);
double stable_subordinator_ccdf(double beta, double v);

/// Leading small-v and large-v behaviour of p_S(1, v).
double stable_density_small_v_asymptotic(double beta, double v);
double stable_density_large_v_asymptotic(double beta, double v);

/// Log of Kanter's function A(phi) on (0, pi); increasing in phi.
double log_kanter_function(double beta, double phi);

void sample_symmetric_stable_vector(const StableDriverSpec& spec, Stream& rng, std::span<double> out);
std::vector<double> sample_symmetric_stable_vector(const StableDriverSpec& spec, Stream& rng);

/// Density of the one-dimensional symmetric stable law with characteristic
/// function exp(-|xi|^alpha), alpha in (0, 2].
double symmetric_stable_density(double alpha, double x);

/// Tabulated symmetric_stable_density for one alpha.
///
/// Piecewise Chebyshev interpolation on [0, tail_start) and the tail series
/// beyond; agrees with the direct evaluation to about 1e-13. Construction
/// costs a few thousand direct evaluations; lookups are cheap and reentrant.
class SymmetricStableTable {
public:
    explicit SymmetricStableTable(double alpha);

    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    [[nodiscard]] double tail_start() const noexcept { return tail_start_; }
    double operator()(double x) const;

    static constexpr int kDegree = 24;

private:
    double alpha_;
    double tail_start_ = 0.0;
    double panel_width_ = 0.25;
    std::vector<std::array<double, kDegree>> panels_;
    std::vector<double> tail_coefficients_;  // c_k of sum_k c_k x^{-alpha k - 1}
    std::vector<double> tail_magnitudes_;   // |c_k| without the sine factor
};

}  // namespace fracsub
