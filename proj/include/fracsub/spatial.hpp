#pragma once

#include "fracsub/rng.hpp"
#include "fracsub/subord.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fracsub {

/// Drift b: R^d -> R^d and diffusion sigma: R^d -> R^{d x d} (row-major).
///
/// Callables must be reentrant; they are invoked concurrently from worker
/// threads. Smoothness cannot be checked numerically and is trusted; the
/// declared ellipticity constant is spot-checked by check_ellipticity.
struct CoefficientField {
    using VectorMap = std::function<void(std::span<const double> x, std::span<double> out)>;

    std::string name;
    int dim = 1;
    VectorMap drift;
    VectorMap diffusion;
    bool constant = false;    // b and sigma do not depend on x
    bool zero_drift = false;  // b == 0 identically
    double ellipticity = 1.0; // Lambda >= 1 with Lambda^{-1}|xi|^2 <= <sigma sigma^* xi, xi> <= Lambda |xi|^2

    /// Values at the origin; for constant fields these are the coefficients.
    [[nodiscard]] std::vector<double> drift_at(std::span<const double> x) const;
    [[nodiscard]] std::vector<double> diffusion_at(std::span<const double> x) const;
};

/// Constant drift vector and row-major diffusion matrix.
CoefficientField constant_field(std::vector<double> drift, std::vector<double> sigma);

/// Scalar parameters of the built-in fields.
struct FieldParams {
    double drift = 0.0;  // constant: b_i; sine-drift: amplitude
    double sigma = 1.0;  // diffusion level
    double rate = 1.0;   // ou: mean-reversion speed; sine-vol: modulation depth in [0, 1)
};

/// Built-in fields by name:
///   constant    b_i = drift, sigma = sigma I
///   ou          b(x) = -rate x, sigma = sigma I; mean x e^{-rate t}
///   sine-drift  b_i(x) = drift sin(x_i), sigma = sigma I
///   sine-vol    b = 0, sigma(x) = sigma diag(1 + rate sin(x_i))
CoefficientField make_field(const std::string& name, int dim, const FieldParams& params);
std::vector<std::string> field_names();

/// Checks the declared ellipticity on `samples` random (x, xi) pairs; throws ConfigError.
void check_ellipticity(const CoefficientField& field, Stream& rng, int samples = 256);

enum class InnovationKind { gaussian, polynomial_tail, stable };

/// Law of the normalized innovations eta in the scheme.
///
/// gaussian: N(0, I). stable: isotropic stable with E exp(i<xi, eta>) =
/// exp(-|xi|^alpha). polynomial_tail: multivariate Student-t with integer
/// `dof` degrees of freedom scaled to identity covariance; its density decays
/// like |z|^{-(dof + d)} with all derivatives.
struct InnovationSpec {
    InnovationKind kind = InnovationKind::gaussian;
    int dim = 1;
    double alpha = 2.0;  // stable only
    int order_m = 0;     // polynomial_tail: moment order m of the chain bound
    int dof = 0;         // polynomial_tail: degrees of freedom

    /// Decay order of the density: dof + d for polynomial_tail.
    [[nodiscard]] int decay_order() const noexcept { return dof + dim; }
    void validate() const;
};

InnovationSpec gaussian_innovation(int dim);
InnovationSpec stable_innovation(double alpha, int dim);

/// Student-t innovation for chain order m with the smallest integer dof
/// meeting dof + d > d(2m + 1) + 4. Throws ConfigError when m < 2(d + 1).
InnovationSpec polynomial_tail_innovation(int dim, int order_m);

void sample_innovation(const InnovationSpec& spec, Stream& rng, std::span<double> out);
std::vector<double> sample_innovation(const InnovationSpec& spec, Stream& rng);
double innovation_density(const InnovationSpec& spec, std::span<const double> z);

/// sup over |z| of density(z) (1 + |z|)^M along a radial scan.
double innovation_decay_constant(const InnovationSpec& spec);

/// Full parameterization of one experiment.
struct SchemeConfig {
    double beta = 0.5;
    double alpha = 2.0;
    double h = 1e-3;
    double T = 1.0;
    int dim = 1;
    CoefficientField coefficients = constant_field({0.0}, {1.0});
    InnovationSpec innovation = gaussian_innovation(1);
    std::size_t n_paths = 100'000;
    std::uint64_t seed = 1;
    std::vector<double> x0 = {0.0};
    double epsilon = 0.1;  // Markov-chain regime exponent slack in (0, 1/5)

    /// Checks parameter ranges, dimensions, the zero-drift requirement for
    /// alpha <= 1, and the horizon condition of the active regime. Messages
    /// name the violated inequality.
    void validate() const;

    [[nodiscard]] bool markov_chain() const noexcept
    {
        return innovation.kind == InnovationKind::polynomial_tail;
    }
};

/// Throws ConfigError if |x - y| is below h^{1/alpha} for a stable driver.
void check_evaluation_distance(const SchemeConfig& cfg, double distance);

/// One step x + b(x) h + sigma(x) h^{1/alpha} eta.
std::vector<double> scheme_step(std::span<const double> x, const SchemeConfig& cfg, Stream& rng);

/// X^h at stop_time = k h started from x. Constant coefficients with exact
/// driver innovations are advanced in one draw of size k h, which has the
/// same law as k single steps.
std::vector<double> scheme_path_to_time(std::span<const double> x, const SchemeConfig& cfg, double stop_time,
                                        Stream& rng);

/// Rescaled CTRW n^{-beta/alpha} Gamma_{n t}: Pareto(beta) waits normalized so
/// the clock converges to the beta-stable subordinator, exact stable jumps
/// (standard Gaussian for alpha = 2).
std::vector<double> simulate_ctrw(double beta, double alpha, int dim, double n, double t, Stream& rng);

/// Exact sample of the CTRW limit: Z_t^{1/alpha} eta with Z_t the inverse subordinator.
std::vector<double> sample_subordinated_direct(double beta, double alpha, int dim, double t, Stream& rng);

}  // namespace fracsub
