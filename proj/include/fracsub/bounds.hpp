#pragma once

#include "fracsub/solver.hpp"

#include <ostream>
#include <vector>

namespace fracsub {

/// Constants of the envelope functions. `c` is the common shape constant
/// (c >= 1); m is the Markov-chain moment order and epsilon the slack in the
/// h^{1/5 - epsilon} threshold.
struct EnvelopeParams {
    double c = 1.0;
    double beta = 0.5;
    double alpha = 2.0;
    int dim = 1;
    int m = 4;
    double epsilon = 0.1;

    [[nodiscard]] double omega() const noexcept { return alpha >= 1.0 ? 1.0 / alpha : 1.0; }
    void validate() const;
};

/// Diffusive envelopes at distance r = |x - y|. The hat family is singular at
/// r = 0 for d >= 2 and throws SingularityError there.
double hat_p_beta_diffusive(const EnvelopeParams& p, double T, double r);
double tilde_p_beta_diffusive(const EnvelopeParams& p, double T, double r);

/// Polynomial-tail analogues; the tilde exponent is floor(m / (2 - beta)).
double hat_q_l_beta(const EnvelopeParams& p, int l, double T, double r);
double tilde_q_m_beta(const EnvelopeParams& p, double T, double r);

struct StableEnvelopes {
    double hat = 0.0;
    double tilde = 0.0;
};

/// Stable-driver envelopes, split at r = T^{beta/alpha}.
StableEnvelopes stable_envelopes(const EnvelopeParams& p, double T, double r);

struct ErrorEnvelopes {
    double time = 0.0;
    double space = 0.0;
    double space_llt = 0.0;
    double space_nollt = 0.0;  // already contains its h dependence
    double stable = 0.0;       // NaN unless alpha < 2
    double h = 0.0;

    /// h (time + space)
    [[nodiscard]] double euler_total() const noexcept { return h * (time + space); }
    /// h time + h^{1/2} space_llt + space_nollt
    [[nodiscard]] double markov_total() const noexcept;
    /// h stable
    [[nodiscard]] double stable_total() const noexcept { return h * stable; }
};

ErrorEnvelopes error_envelopes(const EnvelopeParams& p, double T, double r, double h);

enum class Regime { diffusive, stable };

/// Shape functions of the two-sided bounds for the subordinated density,
/// without the outer multiplicative constant. `c` is the shape constant used
/// inside the exponentials and indicators.
double two_sided_upper(Regime regime, const EnvelopeParams& p, double T, double r);
double two_sided_lower(Regime regime, const EnvelopeParams& p, double T, double r);

/// Whether r = 0 is a singular point of the two-sided bounds.
bool two_sided_singular_at_origin(Regime regime, const EnvelopeParams& p);

struct SandwichParams {
    EnvelopeParams envelope;  // beta, alpha, dim and m; `c` is ignored
    double c_upper = 1.0;     // shape constant of the upper bound
    double c_lower = 1.0;     // shape constant of the lower bound
    double T = 1.0;
    double ceiling = 1e6;     // sanity bound on fitted c_up / c_low
};

struct SandwichRow {
    double r = 0.0;
    double density = 0.0;
    double lower_env = 0.0;  // fitted c_low * lower
    double upper_env = 0.0;  // fitted c_up * upper
    double slack_low = 0.0;  // density - lower_env
    double slack_up = 0.0;   // upper_env - density
};

struct SandwichReport {
    std::vector<SandwichRow> rows;
    double c_up = 0.0;   // max density / upper
    double c_low = 0.0;  // min density / lower
    bool pass = false;

    [[nodiscard]] double ratio() const noexcept { return c_up / c_low; }
};

/// Fits c_low * lower <= density <= c_up * upper over the grid (r = |point|).
/// Throws ParameterError if the grid touches a singular r = 0.
SandwichReport two_sided_check(const DensityGrid& density, Regime regime, const SandwichParams& params);

/// CSV with columns r,density,lower_env,upper_env,slack_low,slack_up and a
/// trailing '#' summary line of the fitted constants.
void write_sandwich_csv(std::ostream& out, const SandwichReport& report);

}  // namespace fracsub
