#include "fracsub/spatial.hpp"

#include "fracsub/errors.hpp"
#include "fracsub/inverse_time.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace fracsub {

namespace {

std::string fmt_double(double value)
{
    std::ostringstream out;
    out.precision(6);
    out << value;
    return out.str();
}

void require_finite(std::span<const double> values, std::span<const double> state, const char* what)
{
    for (const double v : values) {
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << what << " returned a non-finite value at x = (";
            for (std::size_t i = 0; i < state.size(); ++i) {
                msg << (i ? ", " : "") << state[i];
            }
            msg << ")";
            throw NumericalError(msg.str());
        }
    }
}

double chi_square_integer(int dof, Stream& rng)
{
    double sum = 0.0;
    for (int i = 0; i < dof; ++i) {
        const double g = rng.normal();
        sum += g * g;
    }
    return sum;
}

// log of the Student-t normalizing constant Gamma((nu + d)/2) / (Gamma(nu/2) (nu pi)^{d/2}).
double log_student_constant(int dof, int dim)
{
    const double nu = dof;
    return std::lgamma(0.5 * (nu + dim)) - std::lgamma(0.5 * nu) - 0.5 * dim * std::log(nu * std::numbers::pi);
}

bool exact_driver(const SchemeConfig& cfg)
{
    return cfg.innovation.kind != InnovationKind::polynomial_tail;
}

}  // namespace

std::vector<double> CoefficientField::drift_at(std::span<const double> x) const
{
    std::vector<double> out(static_cast<std::size_t>(dim));
    drift(x, out);
    return out;
}

std::vector<double> CoefficientField::diffusion_at(std::span<const double> x) const
{
    std::vector<double> out(static_cast<std::size_t>(dim * dim));
    diffusion(x, out);
    return out;
}

CoefficientField constant_field(std::vector<double> drift, std::vector<double> sigma)
{
    const auto d = drift.size();
    if (d == 0 || sigma.size() != d * d) {
        throw ParameterError("constant_field: drift has " + std::to_string(d) + " entries but sigma has " +
                             std::to_string(sigma.size()) + ", expected d and d*d");
    }
    CoefficientField field;
    field.name = "constant";
    field.dim = static_cast<int>(d);
    field.constant = true;
    field.zero_drift = std::all_of(drift.begin(), drift.end(), [](double b) { return b == 0.0; });
    field.drift = [drift](std::span<const double>, std::span<double> out) {
        std::copy(drift.begin(), drift.end(), out.begin());
    };
    field.diffusion = [sigma](std::span<const double>, std::span<double> out) {
        std::copy(sigma.begin(), sigma.end(), out.begin());
    };
    // Ellipticity from the extreme eigenvalues of sigma sigma^*, via Gershgorin discs.
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double diag = 0.0;
        double off = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double a = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                a += sigma[i * d + k] * sigma[j * d + k];
            }
            (i == j ? diag : off) += (i == j ? a : std::abs(a));
        }
        lo = std::min(lo, diag - off);
        hi = std::max(hi, diag + off);
    }
    field.ellipticity = lo > 0.0 ? std::max({1.0, hi, 1.0 / lo}) : std::numeric_limits<double>::infinity();
    return field;
}

std::vector<std::string> field_names()
{
    return {"constant", "ou", "sine-drift", "sine-vol"};
}

CoefficientField make_field(const std::string& name, int dim, const FieldParams& params)
{
    if (dim < 1) {
        throw ParameterError("field dimension must be >= 1, got " + std::to_string(dim));
    }
    const auto d = static_cast<std::size_t>(dim);
    std::vector<double> identity(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        identity[i * d + i] = params.sigma;
    }
    if (name == "constant") {
        return constant_field(std::vector<double>(d, params.drift), identity);
    }
    CoefficientField field;
    field.name = name;
    field.dim = dim;
    const double s = params.sigma;
    const double s2 = s * s;
    auto scaled_identity = [d, s](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            out[i * d + i] = s;
        }
    };
    if (name == "ou") {
        const double rate = params.rate;
        field.drift = [rate](std::span<const double> x, std::span<double> out) {
            for (std::size_t i = 0; i < x.size(); ++i) {
                out[i] = -rate * x[i];
            }
        };
        field.diffusion = scaled_identity;
        field.zero_drift = rate == 0.0;
        field.ellipticity = std::max({1.0, s2, 1.0 / s2});
    } else if (name == "sine-drift") {
        const double amplitude = params.drift;
        field.drift = [amplitude](std::span<const double> x, std::span<double> out) {
            for (std::size_t i = 0; i < x.size(); ++i) {
                out[i] = amplitude * std::sin(x[i]);
            }
        };
        field.diffusion = scaled_identity;
        field.zero_drift = amplitude == 0.0;
        field.ellipticity = std::max({1.0, s2, 1.0 / s2});
    } else if (name == "sine-vol") {
        const double depth = params.rate;
        if (!(depth >= 0.0 && depth < 1.0)) {
            throw ConfigError("sine-vol modulation depth must lie in [0, 1), got " + fmt_double(depth));
        }
        field.drift = [](std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
        field.diffusion = [d, s, depth](std::span<const double> x, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            for (std::size_t i = 0; i < d; ++i) {
                out[i * d + i] = s * (1.0 + depth * std::sin(x[i]));
            }
        };
        field.zero_drift = true;
        const double lo = s2 * (1.0 - depth) * (1.0 - depth);
        const double hi = s2 * (1.0 + depth) * (1.0 + depth);
        field.ellipticity = std::max({1.0, hi, 1.0 / lo});
    } else {
        throw ConfigError("unknown coefficient field '" + name + "'");
    }
    return field;
}

void check_ellipticity(const CoefficientField& field, Stream& rng, int samples)
{
    const auto d = static_cast<std::size_t>(field.dim);
    std::vector<double> x(d);
    std::vector<double> xi(d);
    std::vector<double> sigma(d * d);
    for (int n = 0; n < samples; ++n) {
        for (std::size_t i = 0; i < d; ++i) {
            x[i] = 10.0 * (2.0 * rng.uniform() - 1.0);
            xi[i] = rng.normal();
        }
        field.diffusion(x, sigma);
        double norm2 = 0.0;
        double quad = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            double proj = 0.0;  // (sigma^* xi)_k
            for (std::size_t i = 0; i < d; ++i) {
                proj += sigma[i * d + k] * xi[i];
            }
            quad += proj * proj;
            norm2 += xi[k] * xi[k];
        }
        const double lambda = field.ellipticity;
        if (quad < norm2 / lambda * (1.0 - 1e-12) || quad > lambda * norm2 * (1.0 + 1e-12)) {
            throw ConfigError("field '" + field.name + "' violates ellipticity with Lambda = " + fmt_double(lambda) +
                              ": <sigma sigma^* xi, xi> / |xi|^2 = " + fmt_double(quad / norm2));
        }
    }
}

void InnovationSpec::validate() const
{
    if (dim < 1) {
        throw ParameterError("innovation dimension must be >= 1, got " + std::to_string(dim));
    }
    switch (kind) {
    case InnovationKind::gaussian:
        return;
    case InnovationKind::stable:
        if (!(alpha > 0.0 && alpha < 2.0)) {
            throw ParameterError("stable innovation index must lie in (0, 2), got " + fmt_double(alpha));
        }
        return;
    case InnovationKind::polynomial_tail: {
        if (order_m < 2 * (dim + 1)) {
            throw ConfigError("chain order m = " + std::to_string(order_m) + " violates m >= 2(d + 1) = " +
                              std::to_string(2 * (dim + 1)));
        }
        const int required = dim * (2 * order_m + 1) + 4;
        if (dof <= 2 || decay_order() <= required) {
            throw ConfigError("decay order M = " + std::to_string(decay_order()) +
                              " violates M > d(2m + 1) + 4 = " + std::to_string(required));
        }
        return;
    }
    }
}

InnovationSpec gaussian_innovation(int dim)
{
    InnovationSpec spec;
    spec.kind = InnovationKind::gaussian;
    spec.dim = dim;
    spec.validate();
    return spec;
}

InnovationSpec stable_innovation(double alpha, int dim)
{
    InnovationSpec spec;
    spec.kind = InnovationKind::stable;
    spec.dim = dim;
    spec.alpha = alpha;
    spec.validate();
    return spec;
}

InnovationSpec polynomial_tail_innovation(int dim, int order_m)
{
    InnovationSpec spec;
    spec.kind = InnovationKind::polynomial_tail;
    spec.dim = dim;
    spec.order_m = order_m;
    spec.dof = 2 * dim * order_m + 5;
    spec.validate();
    return spec;
}

void sample_innovation(const InnovationSpec& spec, Stream& rng, std::span<double> out)
{
    if (out.size() != static_cast<std::size_t>(spec.dim)) {
        throw ParameterError("innovation output has size " + std::to_string(out.size()) + ", expected " +
                             std::to_string(spec.dim));
    }
    switch (spec.kind) {
    case InnovationKind::gaussian:
        for (double& x : out) {
            x = rng.normal();
        }
        return;
    case InnovationKind::stable:
        sample_symmetric_stable_vector({spec.alpha, spec.dim}, rng, out);
        return;
    case InnovationKind::polynomial_tail: {
        // t_nu scaled by sqrt((nu - 2) / nu) has identity covariance.
        const double scale = std::sqrt((spec.dof - 2.0) / chi_square_integer(spec.dof, rng));
        for (double& x : out) {
            x = scale * rng.normal();
        }
        return;
    }
    }
}

std::vector<double> sample_innovation(const InnovationSpec& spec, Stream& rng)
{
    std::vector<double> out(static_cast<std::size_t>(spec.dim));
    sample_innovation(spec, rng, out);
    return out;
}

double innovation_density(const InnovationSpec& spec, std::span<const double> z)
{
    if (z.size() != static_cast<std::size_t>(spec.dim)) {
        throw ParameterError("innovation_density: point has dimension " + std::to_string(z.size()) +
                             ", expected " + std::to_string(spec.dim));
    }
    double r2 = 0.0;
    for (const double v : z) {
        r2 += v * v;
    }
    const int d = spec.dim;
    switch (spec.kind) {
    case InnovationKind::gaussian:
        return std::exp(-0.5 * r2 - 0.5 * d * std::log(2.0 * std::numbers::pi));
    case InnovationKind::stable:
        if (d != 1) {
            throw ParameterError("stable innovation density is available for d = 1 only");
        }
        return symmetric_stable_density(spec.alpha, z[0]);
    case InnovationKind::polynomial_tail: {
        const double nu = spec.dof;
        // Covariance (nu - 2)/nu * shape = I, so shape = nu / (nu - 2) I.
        const double log_det_scale = 0.5 * d * std::log((nu - 2.0) / nu);
        return std::exp(log_student_constant(spec.dof, d) - log_det_scale -
                        0.5 * (nu + d) * std::log1p(r2 / (nu - 2.0)));
    }
    }
    return 0.0;
}

double innovation_decay_constant(const InnovationSpec& spec)
{
    spec.validate();
    const double order = spec.kind == InnovationKind::polynomial_tail ? spec.decay_order() : 0.0;
    std::vector<double> z(static_cast<std::size_t>(spec.dim), 0.0);
    double sup = 0.0;
    // Beyond 1e6 the product is within (1 + 1/r)^M of its limit.
    for (double log_r = -6.0; log_r <= 6.0; log_r += 0.001) {
        const double r = std::pow(10.0, log_r);
        z[0] = r;
        sup = std::max(sup, innovation_density(spec, z) * std::pow(1.0 + r, order));
    }
    z[0] = 0.0;
    return std::max(sup, innovation_density(spec, z));
}

void SchemeConfig::validate() const
{
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (!(beta > 0.0 && beta < 1.0)) {
        fail("beta must lie in (0, 1), got " + fmt_double(beta));
    }
    if (!(alpha > 0.0 && alpha <= 2.0)) {
        fail("alpha must lie in (0, 2], got " + fmt_double(alpha));
    }
    if (!(h > 0.0) || !(T > 0.0)) {
        fail("h and T must be positive, got h = " + fmt_double(h) + ", T = " + fmt_double(T));
    }
    if (dim < 1 || coefficients.dim != dim || innovation.dim != dim || x0.size() != static_cast<std::size_t>(dim)) {
        fail("dimension mismatch: dim = " + std::to_string(dim) + ", field " + std::to_string(coefficients.dim) +
             ", innovation " + std::to_string(innovation.dim) + ", start point " + std::to_string(x0.size()));
    }
    if (n_paths == 0) {
        fail("n_paths must be positive");
    }
    innovation.validate();
    if (alpha <= 1.0 && !coefficients.zero_drift) {
        fail("drift must vanish when alpha <= 1 (alpha = " + fmt_double(alpha) + ")");
    }
    if (alpha < 2.0) {
        if (innovation.kind != InnovationKind::stable || innovation.alpha != alpha) {
            fail("a stable driver with alpha = " + fmt_double(alpha) + " needs stable innovations of the same index");
        }
        if (!(T > std::pow(h, 1.0 / beta))) {
            fail("T > h^{1/beta} violated: T = " + fmt_double(T) + ", h^{1/beta} = " + fmt_double(std::pow(h, 1.0 / beta)));
        }
        return;
    }
    if (innovation.kind == InnovationKind::stable) {
        fail("stable innovations require alpha < 2");
    }
    if (markov_chain()) {
        if (!(epsilon > 0.0 && epsilon < 0.2)) {
            fail("epsilon must lie in (0, 1/5), got " + fmt_double(epsilon));
        }
        const double lhs = std::pow(T, beta);
        const double rhs = std::pow(h, 0.2 - epsilon);
        if (!(lhs >= rhs)) {
            fail("T^beta >= h^{1/5 - epsilon} violated: T^beta = " + fmt_double(lhs) + ", h^{1/5 - epsilon} = " +
                 fmt_double(rhs));
        }
        return;
    }
    if (!(T > std::sqrt(h))) {
        fail("T > h^{1/2} violated: T = " + fmt_double(T) + ", h^{1/2} = " + fmt_double(std::sqrt(h)));
    }
}

void check_evaluation_distance(const SchemeConfig& cfg, double distance)
{
    if (cfg.alpha < 2.0 && !(distance >= std::pow(cfg.h, 1.0 / cfg.alpha))) {
        throw ConfigError("|x - y| >= h^{1/alpha} violated: |x - y| = " + fmt_double(distance) +
                          ", h^{1/alpha} = " + fmt_double(std::pow(cfg.h, 1.0 / cfg.alpha)));
    }
}

namespace {

// x <- x + b(x) dt + sigma(x) dt^{1/alpha} eta, reusing caller buffers.
void advance(std::span<double> x, const SchemeConfig& cfg, double dt, Stream& rng, std::vector<double>& drift,
             std::vector<double>& sigma, std::vector<double>& eta)
{
    const auto d = x.size();
    cfg.coefficients.drift(x, drift);
    cfg.coefficients.diffusion(x, sigma);
    require_finite(drift, x, "drift");
    require_finite(sigma, x, "diffusion");
    sample_innovation(cfg.innovation, rng, eta);
    const double scale = cfg.alpha == 2.0 ? std::sqrt(dt) : std::pow(dt, 1.0 / cfg.alpha);
    for (std::size_t i = 0; i < d; ++i) {
        double noise = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            noise += sigma[i * d + k] * eta[k];
        }
        x[i] += drift[i] * dt + scale * noise;
    }
}

}  // namespace

std::vector<double> scheme_step(std::span<const double> x, const SchemeConfig& cfg, Stream& rng)
{
    const auto d = static_cast<std::size_t>(cfg.dim);
    if (x.size() != d) {
        throw ParameterError("scheme_step: state has dimension " + std::to_string(x.size()) + ", expected " +
                             std::to_string(d));
    }
    std::vector<double> state(x.begin(), x.end());
    std::vector<double> drift(d);
    std::vector<double> sigma(d * d);
    std::vector<double> eta(d);
    advance(state, cfg, cfg.h, rng, drift, sigma, eta);
    return state;
}

std::vector<double> scheme_path_to_time(std::span<const double> x, const SchemeConfig& cfg, double stop_time,
                                        Stream& rng)
{
    const auto d = static_cast<std::size_t>(cfg.dim);
    if (x.size() != d) {
        throw ParameterError("scheme_path_to_time: state has dimension " + std::to_string(x.size()) +
                             ", expected " + std::to_string(d));
    }
    const double steps_real = stop_time / cfg.h;
    const double steps_rounded = std::round(steps_real);
    if (stop_time < 0.0 || std::abs(steps_real - steps_rounded) > 1e-9 * std::max(1.0, steps_real)) {
        throw ParameterError("stop time " + fmt_double(stop_time) + " is not a multiple of h = " + fmt_double(cfg.h));
    }
    const auto steps = static_cast<std::size_t>(steps_rounded);
    std::vector<double> state(x.begin(), x.end());
    if (steps == 0) {
        return state;
    }
    std::vector<double> drift(d);
    std::vector<double> sigma(d * d);
    std::vector<double> eta(d);
    if (cfg.coefficients.constant && exact_driver(cfg)) {
        advance(state, cfg, static_cast<double>(steps) * cfg.h, rng, drift, sigma, eta);
        return state;
    }
    for (std::size_t i = 0; i < steps; ++i) {
        advance(state, cfg, cfg.h, rng, drift, sigma, eta);
    }
    return state;
}

std::vector<double> simulate_ctrw(double beta, double alpha, int dim, double n, double t, Stream& rng)
{
    if (!(beta > 0.0 && beta < 1.0)) {
        throw ParameterError("waiting-time index beta must lie in (0, 1), got " + fmt_double(beta));
    }
    if (!(n > 0.0) || t < 0.0) {
        throw ParameterError("CTRW needs n > 0 and t >= 0, got n = " + fmt_double(n) + ", t = " + fmt_double(t));
    }
    const StableDriverSpec jumps{alpha, dim};
    jumps.validate();
    std::vector<double> position(static_cast<std::size_t>(dim), 0.0);
    std::vector<double> jump(static_cast<std::size_t>(dim));
    // P[W > s] = s^{-beta} / Gamma(1 - beta) for s >= w_min.
    const double w_min = std::pow(std::tgamma(1.0 - beta), -1.0 / beta);
    const double horizon = n * t;
    double clock = 0.0;
    while (true) {
        clock += w_min * std::pow(rng.uniform(), -1.0 / beta);
        if (clock > horizon) {
            break;
        }
        sample_symmetric_stable_vector(jumps, rng, jump);
        for (std::size_t i = 0; i < position.size(); ++i) {
            position[i] += jump[i];
        }
    }
    const double scale = std::pow(n, -beta / alpha);
    for (double& x : position) {
        x *= scale;
    }
    return position;
}

std::vector<double> sample_subordinated_direct(double beta, double alpha, int dim, double t, Stream& rng)
{
    const StableDriverSpec driver{alpha, dim};
    driver.validate();
    std::vector<double> out(static_cast<std::size_t>(dim), 0.0);
    if (t == 0.0) {
        return out;
    }
    const double clock = sample_inverse_marginal(beta, t, rng);
    sample_symmetric_stable_vector(driver, rng, out);
    const double scale = std::pow(clock, 1.0 / alpha);
    for (double& x : out) {
        x *= scale;
    }
    return out;
}

}  // namespace fracsub
