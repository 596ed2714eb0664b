#include "fracsub/bounds.hpp"

#include "fracsub/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace fracsub {

namespace {

void require_positive_time(double T)
{
    if (!(T > 0.0) || !std::isfinite(T)) throw ParameterError("horizon T must be positive and finite");
}

void require_distance(double r)
{
    if (!(r >= 0.0) || !std::isfinite(r)) throw ParameterError("distance r must be finite and >= 0");
}

void require_off_diagonal(double r, const char* what)
{
    if (r == 0.0) {
        std::ostringstream msg;
        msg << what << " is singular at r = 0";
        throw SingularityError(msg.str());
    }
}

// exp(-c^{-1} (r^2 / T^beta)^{1/(2 - beta)})
double stretched(double c_inverse_scale, double beta, double T, double r)
{
    return std::exp(-c_inverse_scale * std::pow(r * r / std::pow(T, beta), 1.0 / (2.0 - beta)));
}

// Dimension prefactor shared by the Gaussian hat envelope and its polynomial analogue.
double hat_prefactor(const EnvelopeParams& p, double T, double r)
{
    const double b = p.beta;
    if (p.dim == 1) return 1.0 / std::pow(T, b / 2.0);
    require_off_diagonal(r, "hat envelope");
    if (p.dim == 2) return 1.0 / (std::pow(T, b / 2.0) * r);
    return 1.0 / (std::pow(T, b) * std::pow(r, p.dim - 2));
}

double stable_exponent(const EnvelopeParams& p)
{
    const double w = p.omega();
    return p.beta * w / (1.0 - w * (1.0 - p.beta));
}

void require_stable(const EnvelopeParams& p)
{
    if (!(p.alpha > 0.0 && p.alpha < 2.0)) throw ParameterError("stable envelopes need alpha in (0, 2)");
}

bool stable_singular(const EnvelopeParams& p) { return static_cast<double>(p.dim) > p.alpha; }

}  // namespace

void EnvelopeParams::validate() const
{
    if (!(c >= 1.0) || !std::isfinite(c)) throw ParameterError("envelope constant c must satisfy c >= 1");
    if (!(beta > 0.0 && beta < 1.0)) throw ParameterError("beta must lie in (0, 1)");
    if (!(alpha > 0.0 && alpha <= 2.0)) throw ParameterError("alpha must lie in (0, 2]");
    if (dim < 1) throw ParameterError("dimension must be >= 1");
    if (m < 1) throw ParameterError("chain order m must be >= 1");
    if (!(epsilon > 0.0 && epsilon < 0.2)) throw ParameterError("epsilon must lie in (0, 1/5)");
}

double hat_p_beta_diffusive(const EnvelopeParams& p, double T, double r)
{
    p.validate();
    require_positive_time(T);
    require_distance(r);
    const double b = p.beta;
    return hat_prefactor(p, T, r) * std::exp(p.c * std::pow(T, b / 2.0)) * std::exp(-r * r / (p.c * std::pow(T, b)));
}

double tilde_p_beta_diffusive(const EnvelopeParams& p, double T, double r)
{
    p.validate();
    require_positive_time(T);
    require_distance(r);
    const double b = p.beta;
    return std::exp(p.c * std::pow(T, b / (1.0 + b))) / std::pow(T, b * p.dim / 2.0) * stretched(1.0 / p.c, b, T, r);
}

double hat_q_l_beta(const EnvelopeParams& p, int l, double T, double r)
{
    p.validate();
    require_positive_time(T);
    require_distance(r);
    if (l < 1) throw ParameterError("polynomial order l must be >= 1");
    const double b = p.beta;
    return hat_prefactor(p, T, r) * std::exp(p.c * std::pow(T, b / 2.0)) *
           std::pow(1.0 + r / std::pow(T, b / 2.0), -static_cast<double>(l));
}

double tilde_q_m_beta(const EnvelopeParams& p, double T, double r)
{
    p.validate();
    require_positive_time(T);
    require_distance(r);
    const double b = p.beta;
    const double order = std::floor(p.m / (2.0 - b));
    return std::exp(p.c * std::pow(T, b / (1.0 + b))) / std::pow(T, b * p.dim / 2.0) *
           std::pow(1.0 + r / std::pow(T, b / 2.0), -order);
}

StableEnvelopes stable_envelopes(const EnvelopeParams& p, double T, double r)
{
    p.validate();
    require_stable(p);
    require_positive_time(T);
    require_distance(r);
    if (stable_singular(p)) require_off_diagonal(r, "stable hat envelope");
    const double b = p.beta;
    const double a = p.alpha;
    const double d = p.dim;
    const double split = std::pow(T, b / a);

    StableEnvelopes out;
    const double front = std::exp(p.c * std::pow(T, b * p.omega()));
    if (r <= split)
        out.hat = front / (std::pow(T, b) * std::pow(r, d - a));
    else
        out.hat = front * std::pow(T, b) / std::pow(r, d + a);
    out.tilde = std::exp(p.c * std::pow(T, stable_exponent(p))) /
                (std::pow(T, b * d / a) * std::pow(1.0 + r / split, d + a));
    return out;
}

double ErrorEnvelopes::markov_total() const noexcept
{
    return h * time + std::sqrt(h) * space_llt + space_nollt;
}

ErrorEnvelopes error_envelopes(const EnvelopeParams& p, double T, double r, double h)
{
    p.validate();
    require_positive_time(T);
    require_distance(r);
    if (!(h > 0.0) || !std::isfinite(h)) throw ParameterError("step h must be positive");
    require_off_diagonal(r, "error envelope");

    const double b = p.beta;
    const int d = p.dim;
    const double low_dim = d <= 2 ? 1.0 : 0.0;
    const double Tb2 = std::pow(T, b / 2.0);
    const double hat = hat_p_beta_diffusive(p, T, r);
    const double tilde = tilde_p_beta_diffusive(p, T, r);

    ErrorEnvelopes e;
    e.h = h;
    e.time = (d <= 2 ? 1.0 / (Tb2 * r) : 1.0 / (r * r)) * hat + tilde / std::pow(T, b);

    const double space_weight = d == 2 ? 1.0 / Tb2 : 1.0 / r;
    e.space = space_weight * hat + tilde / Tb2;

    const int l = p.m - ((d - 1) + (d == 1 ? 1 : 0));
    if (l < 1) throw ParameterError("chain order m too small for the local limit envelope");
    e.space_llt = space_weight * hat_q_l_beta(p, l, T, r) + tilde_q_m_beta(p, T, r) / Tb2;

    const double H = std::pow(h, 0.2 - p.epsilon);
    const double tail_order = -2.0 * (p.m - 1) + (d - 2) + low_dim;
    e.space_nollt = std::pow(H, 0.5 * low_dim) / (std::pow(T, b) * std::pow(r, d - 2 + low_dim)) *
                    std::exp(p.c * Tb2) *
                    (std::exp(-p.c * r * r / H) + std::pow(1.0 + r / std::sqrt(H), tail_order));

    if (p.alpha < 2.0) {
        const double a = p.alpha;
        const double split = std::pow(T, b / a);
        const double near = r <= split ? 1.0 / (std::pow(T, b) * std::pow(r, d)) : 1.0 / std::pow(r, d + a);
        e.stable = std::exp(p.c * std::pow(T, b * p.omega())) * near +
                   std::exp(p.c * std::pow(T, stable_exponent(p))) /
                       std::max(std::pow(T, b * (1.0 + d / a)), std::pow(r, d + a));
    } else {
        e.stable = std::numeric_limits<double>::quiet_NaN();
    }
    return e;
}

bool two_sided_singular_at_origin(Regime regime, const EnvelopeParams& p)
{
    if (regime == Regime::diffusive) return p.dim >= 2;
    if (p.dim == 1 && p.alpha > 1.0) return false;
    return stable_singular(p);
}

double two_sided_upper(Regime regime, const EnvelopeParams& p, double T, double r)
{
    p.validate();
    require_positive_time(T);
    require_distance(r);
    if (two_sided_singular_at_origin(regime, p)) require_off_diagonal(r, "two-sided bound");
    const double b = p.beta;
    const double c = p.c;
    const int d = p.dim;

    if (regime == Regime::stable) {
        require_stable(p);
        const double a = p.alpha;
        const double split = std::pow(T, b / a);
        const double off = std::exp(c * std::pow(T, stable_exponent(p))) /
                           (std::pow(T, b * d / a) * std::pow(1.0 + r / split, d + a));
        if (d == 1 && a > 1.0) return off;
        const double diag = r <= split ? std::exp(c * std::pow(T, b * p.omega())) / (std::pow(T, b) * std::pow(r, d - a))
                                       : 0.0;
        return diag + off;
    }

    const double Tb = std::pow(T, b);
    const double gauss = std::exp(c * std::pow(T, b / 2.0)) * std::exp(-r * r / (c * Tb));
    const double tail = std::exp(c * std::pow(T, b / (1.0 + b))) * stretched(1.0 / c, b, T, r);
    if (d == 1) return (gauss + tail) / std::pow(T, b / 2.0);
    if (d == 2) {
        const double seam = std::sqrt(c) * std::pow(T, b / 2.0);
        const double log_factor = std::abs(std::log(r / seam));
        const double inside = gauss * (log_factor + 1.0);
        double value = r <= seam ? inside : gauss;
        if (r == seam) value = std::max(inside, gauss);
        return (value + tail) / Tb;
    }
    return gauss / (Tb * std::pow(r, d - 2)) + tail / std::pow(T, b * d / 2.0);
}

double two_sided_lower(Regime regime, const EnvelopeParams& p, double T, double r)
{
    p.validate();
    require_positive_time(T);
    require_distance(r);
    if (two_sided_singular_at_origin(regime, p)) require_off_diagonal(r, "two-sided bound");
    const double b = p.beta;
    const double c = p.c;
    const int d = p.dim;

    if (regime == Regime::stable) {
        require_stable(p);
        const double a = p.alpha;
        const double split = std::pow(T, b / a);
        const double damp = std::exp(-c * std::pow(T, b));
        const double off = damp / (std::pow(T, b * d / a) * std::pow(1.0 + r / split, d + a));
        if (d == 1 && a > 1.0) return off;
        const double diag = r <= split ? damp / (std::pow(T, b) * std::pow(r, d - a)) : 0.0;
        return diag + off;
    }

    const double Tb = std::pow(T, b);
    const double gauss = std::exp(-c * Tb) * std::exp(-c * r * r / Tb);
    const double tail = std::exp(-c * T) * stretched(c, b, T, r);
    if (d == 1) return (gauss + tail) / std::pow(T, b / 2.0);
    if (d == 2) {
        const double seam = std::pow(T, b / 2.0) / std::sqrt(c);
        const double log_factor = r <= seam ? std::abs(std::log(std::sqrt(c) * r / std::pow(T, b / 2.0))) : 0.0;
        return (gauss * (log_factor + 1.0) + tail) / Tb;
    }
    return gauss / (Tb * std::pow(r, d - 2)) + tail / std::pow(T, b * d / 2.0);
}

SandwichReport two_sided_check(const DensityGrid& density, Regime regime, const SandwichParams& params)
{
    if (density.points.size() != density.values.size() || density.points.empty())
        throw ParameterError("density grid must have matching, non-empty points and values");
    if (!(params.c_upper >= 1.0) || !(params.c_lower >= 1.0))
        throw ParameterError("shape constants must satisfy c >= 1");

    EnvelopeParams up = params.envelope;
    up.c = params.c_upper;
    EnvelopeParams low = params.envelope;
    low.c = params.c_lower;
    const bool singular = two_sided_singular_at_origin(regime, up);

    SandwichReport report;
    report.rows.reserve(density.points.size());
    std::vector<double> upper(density.points.size());
    std::vector<double> lower(density.points.size());
    double c_up = 0.0;
    double c_low = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < density.points.size(); ++i) {
        const double r = std::abs(density.points[i]);
        if (singular && r == 0.0)
            throw ParameterError("density grid touches the singular point r = 0 of the two-sided bound");
        upper[i] = two_sided_upper(regime, up, params.T, r);
        lower[i] = two_sided_lower(regime, low, params.T, r);
        const double q = density.values[i];
        c_up = std::max(c_up, q / upper[i]);
        c_low = std::min(c_low, q / lower[i]);
    }
    report.c_up = c_up;
    report.c_low = c_low;
    report.pass = std::isfinite(c_up) && std::isfinite(c_low) && c_up > 0.0 && c_low > 0.0 &&
                  c_up / c_low <= params.ceiling;

    for (std::size_t i = 0; i < density.points.size(); ++i) {
        SandwichRow row;
        row.r = std::abs(density.points[i]);
        row.density = density.values[i];
        row.lower_env = c_low * lower[i];
        row.upper_env = c_up * upper[i];
        row.slack_low = row.density - row.lower_env;
        row.slack_up = row.upper_env - row.density;
        report.rows.push_back(row);
    }
    return report;
}

void write_sandwich_csv(std::ostream& out, const SandwichReport& report)
{
    out << "r,density,lower_env,upper_env,slack_low,slack_up\n";
    out << std::setprecision(17);
    for (const auto& row : report.rows)
        out << row.r << ',' << row.density << ',' << row.lower_env << ',' << row.upper_env << ',' << row.slack_low
            << ',' << row.slack_up << '\n';
    out << "# c_up=" << report.c_up << ",c_low=" << report.c_low << ",ratio=" << report.ratio()
        << ",pass=" << (report.pass ? "true" : "false") << '\n';
}

}  // namespace fracsub
