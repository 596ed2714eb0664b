#include "fracsub/subord.hpp"

#include "fracsub/errors.hpp"
#include "fracsub/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <new>
#include <numbers>
#include <optional>
#include <string>

namespace fracsub {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kMaxPathSteps = 2'000'000'000;

void require_beta(double beta)
{
    if (!(beta > 0.0 && beta < 1.0)) {
        throw ParameterError("stability index beta must lie in (0, 1), got " + std::to_string(beta));
    }
}

// Above this v the large-v series converges geometrically with ratio <= 1/2.
double series_threshold(double beta)
{
    return std::pow(2.0, 1.0 / beta);
}

// p_S(1, v) = (1 / (pi v)) sum_k (-1)^(k+1) Gamma(k beta + 1) / k! sin(pi beta k) v^(-k beta)
double density_series(double beta, double v)
{
    const double y = std::pow(v, -beta);
    const double log_y = std::log(y);
    double sum = 0.0;
    for (int k = 1; k <= 400; ++k) {
        const double log_mag = std::lgamma(k * beta + 1.0) - std::lgamma(k + 1.0) + k * log_y;
        const double magnitude = std::exp(log_mag);
        const double sign = (k % 2 == 1) ? 1.0 : -1.0;
        sum += sign * magnitude * std::sin(kPi * beta * k);
        if (k > 2 && magnitude < 1e-17 * std::abs(sum)) {
            return sum / (kPi * v);
        }
    }
    throw NumericalError("stable_subordinator_density: large-v series did not converge at v = " +
                         std::to_string(v));
}

// P[S_1 > v] = (1 / pi) sum_k (-1)^(k+1) Gamma(k beta) / k! sin(pi beta k) v^(-k beta)
double ccdf_series(double beta, double v)
{
    const double log_y = -beta * std::log(v);
    double sum = 0.0;
    for (int k = 1; k <= 400; ++k) {
        const double magnitude = std::exp(std::lgamma(k * beta) - std::lgamma(k + 1.0) + k * log_y);
        const double sign = (k % 2 == 1) ? 1.0 : -1.0;
        sum += sign * magnitude * std::sin(kPi * beta * k);
        if (k > 2 && magnitude < 1e-17 * std::abs(sum)) {
            return sum / kPi;
        }
    }
    throw NumericalError("stable_subordinator_ccdf: series did not converge at v = " + std::to_string(v));
}

// Zolotarev-type integrals over phi in (0, pi) with the Kanter function.
// y(phi) = log(A(phi) * eps), eps = v^(-beta / (1 - beta)).
struct KanterIntegrand {
    double beta;
    double log_eps;

    double y(double phi) const { return log_kanter_function(beta, phi) + log_eps; }

    double root(double level) const
    {
        return numerics::bisect([&](double p) { return y(p) - level; }, 0.0, kPi, 64);
    }
};

// The Kanter function switches formula at pi / 2; keep that point a panel edge.
void insert_cut(std::vector<double>& cuts, double at)
{
    if (at > cuts.front() && at < cuts.back()) {
        cuts.insert(std::upper_bound(cuts.begin(), cuts.end(), at), at);
    }
}

double density_quadrature(double beta, double v)
{
    const double ratio = beta / (1.0 - beta);
    const KanterIntegrand k{beta, -ratio * std::log(v)};
    const double y0 = k.y(0.0);
    const double shift = y0 > 0.0 ? std::exp(y0) : 0.0;
    if (shift > 700.0) {
        return stable_density_small_v_asymptotic(beta, v);
    }
    std::vector<double> cuts;
    cuts.push_back(y0 < -50.0 ? k.root(-50.0) : 0.0);
    if (y0 < 0.0) {
        cuts.push_back(k.root(0.0));
    }
    for (const double level : {shift + 2.0, shift + 10.0, shift + 60.0}) {
        const double at = k.root(std::log(level));
        if (at > cuts.back()) {
            cuts.push_back(at);
        }
    }
    // A eps - shift = shift * expm1(y - y0) keeps the exponent free of cancellation.
    auto excess = [&](double ly) { return shift > 0.0 ? shift * std::expm1(ly - y0) : std::exp(ly); };
    insert_cut(cuts, 0.5 * kPi);
    auto integrand = [&](double phi) {
        const double ly = k.y(phi);
        return std::exp(ly - excess(ly));
    };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        total += numerics::integrate(integrand, cuts[i], cuts[i + 1], 1e-10, 0.0,
                                     "stable_subordinator_density");
    }
    return ratio / (kPi * v) * std::exp(-shift) * total;
}

double cdf_quadrature(double beta, double v)
{
    const double ratio = beta / (1.0 - beta);
    const KanterIntegrand k{beta, -ratio * std::log(v)};
    const double y0 = k.y(0.0);
    const double shift = y0 > 0.0 ? std::exp(y0) : 0.0;
    if (shift > 700.0) {
        return 0.0;
    }
    // exp(-A eps) == 1 to double precision below y = -50.
    const double flat = y0 < -50.0 ? k.root(-50.0) : 0.0;
    std::vector<double> cuts{flat};
    for (const double level : {shift + 1.0, shift + 10.0, shift + 60.0}) {
        const double at = k.root(std::log(level));
        if (at > cuts.back()) {
            cuts.push_back(at);
        }
    }
    insert_cut(cuts, 0.5 * kPi);
    auto integrand = [&](double phi) {
        const double ly = k.y(phi);
        return std::exp(-(shift > 0.0 ? shift * std::expm1(ly - y0) : std::exp(ly)));
    };
    double total = flat;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        total += numerics::integrate(integrand, cuts[i], cuts[i + 1], 1e-10, 1e-300,
                                     "stable_subordinator_cdf");
    }
    return std::min(1.0, std::exp(-shift) * total / kPi);
}

}  // namespace

void StableDriverSpec::validate() const
{
    if (!(alpha > 0.0 && alpha <= 2.0)) {
        throw ParameterError("stable driver index alpha must lie in (0, 2], got " + std::to_string(alpha));
    }
    if (dim < 1) {
        throw ParameterError("spatial dimension must be >= 1, got " + std::to_string(dim));
    }
}

PositiveStableSampler::PositiveStableSampler(double beta)
    : beta_(beta)
{
    require_beta(beta);
    one_minus_ = 1.0 - beta;
    ratio_ = beta / one_minus_;
    inv_one_minus_ = 1.0 / one_minus_;
    out_power_ = one_minus_ / beta;
}

double PositiveStableSampler::operator()(Stream& rng) const noexcept
{
    const double u = kPi * rng.uniform();
    const double e = rng.exponential();
    const double log_a = ratio_ * std::log(std::sin(beta_ * u)) + std::log(std::sin(one_minus_ * u)) -
                         inv_one_minus_ * std::log(std::sin(u));
    return std::exp(out_power_ * (log_a - std::log(e)));
}

double sample_positive_stable(double beta, Stream& rng)
{
    return PositiveStableSampler(beta)(rng);
}

SubordinatorPath sample_subordinator_path(double beta, double h, std::size_t n_steps, Stream& rng)
{
    require_beta(beta);
    if (!(h > 0.0)) {
        throw ParameterError("time step h must be positive, got " + std::to_string(h));
    }
    if (n_steps > kMaxPathSteps) {
        throw ResourceError("subordinator path of " + std::to_string(n_steps) + " steps exceeds the limit of " +
                            std::to_string(kMaxPathSteps));
    }
    SubordinatorPath path{h, beta, {}};
    try {
        path.values.resize(n_steps + 1);
    } catch (const std::bad_alloc&) {
        throw ResourceError("cannot allocate a subordinator path of " + std::to_string(n_steps) + " steps");
    }
    const PositiveStableSampler sampler(beta);
    const double scale = std::pow(h, 1.0 / beta);
    path.values[0] = 0.0;
    for (std::size_t i = 1; i <= n_steps; ++i) {
        path.values[i] = path.values[i - 1] + scale * sampler(rng);
    }
    return path;
}

double log_kanter_function(double beta, double phi)
{
    const double one_minus = 1.0 - beta;
    if (phi < 1e-7) {
        // Removable limit at 0: beta^(beta/(1-beta)) (1-beta), plus the O(phi^2) term.
        const double base = (beta / one_minus) * std::log(beta) + std::log(one_minus);
        const double curvature =
            (-(beta / one_minus) * beta * beta - one_minus * one_minus + 1.0 / one_minus) / 6.0;
        return base + curvature * phi * phi;
    }
    if (phi > 0.5 * kPi) {
        // psi = pi - phi is exact here; sin(beta phi) = sin((1 - beta) pi + beta psi) avoids the
        // conditioning loss of sin near pi, which the 1 / (1 - beta) power would amplify.
        const double psi = kPi - phi;
        return (beta / one_minus) * std::log(std::sin(one_minus * kPi + beta * psi)) +
               std::log(std::sin(one_minus * kPi - one_minus * psi)) - std::log(std::sin(psi)) / one_minus;
    }
    return (beta / one_minus) * std::log(std::sin(beta * phi)) + std::log(std::sin(one_minus * phi)) -
           std::log(std::sin(phi)) / one_minus;
}

double stable_density_small_v_asymptotic(double beta, double v)
{
    require_beta(beta);
    if (v <= 0.0) {
        return 0.0;
    }
    const double k = 1.0 / std::sqrt(2.0 * kPi * beta * (1.0 - beta));
    const double power = (1.0 - beta / 2.0) / (1.0 - beta);
    return k * std::exp(power * std::log(beta / v) - (1.0 - beta) * std::pow(v / beta, beta / (beta - 1.0)));
}

double stable_density_large_v_asymptotic(double beta, double v)
{
    require_beta(beta);
    if (v <= 0.0) {
        return 0.0;
    }
    return beta / std::tgamma(1.0 - beta) * std::pow(v, -beta - 1.0);
}

double stable_subordinator_density(double beta, double v)
{
    require_beta(beta);
    if (!(v > 0.0)) {
        return 0.0;
    }
    if (std::isinf(v)) {
        return 0.0;
    }
    if (v >= series_threshold(beta)) {
        return density_series(beta, v);
    }
    return density_quadrature(beta, v);
}

double stable_subordinator_cdf(double beta, double v)
{
    require_beta(beta);
    if (!(v > 0.0)) {
        return 0.0;
    }
    if (v >= series_threshold(beta)) {
        return 1.0 - ccdf_series(beta, v);
    }
    return cdf_quadrature(beta, v);
}

double stable_subordinator_ccdf(double beta, double v)
{
    require_beta(beta);
    if (!(v > 0.0)) {
        return 1.0;
    }
    if (std::isinf(v)) {
        return 0.0;
    }
    if (v >= series_threshold(beta)) {
        return ccdf_series(beta, v);
    }
    return 1.0 - cdf_quadrature(beta, v);
}

void sample_symmetric_stable_vector(const StableDriverSpec& spec, Stream& rng, std::span<double> out)
{
    spec.validate();
    if (out.size() != static_cast<std::size_t>(spec.dim)) {
        throw ParameterError("output span has size " + std::to_string(out.size()) + ", expected dimension " +
                             std::to_string(spec.dim));
    }
    if (spec.brownian()) {
        for (double& x : out) {
            x = rng.normal();
        }
        return;
    }
    // Gaussian variance mixture: E exp(i<xi, sqrt(2A) N>) = E exp(-A |xi|^2) = exp(-|xi|^alpha).
    const double scale = std::sqrt(2.0 * sample_positive_stable(spec.alpha / 2.0, rng));
    for (double& x : out) {
        x = scale * rng.normal();
    }
}

std::vector<double> sample_symmetric_stable_vector(const StableDriverSpec& spec, Stream& rng)
{
    spec.validate();
    std::vector<double> out(static_cast<std::size_t>(spec.dim));
    sample_symmetric_stable_vector(spec, rng, out);
    return out;
}

namespace {

std::optional<double> stable_taylor(double alpha, double x)
{
    // (1 / (pi alpha)) sum_k (-1)^k Gamma((2k + 1) / alpha) / (2k)! x^(2k), entire for alpha > 1.
    double sum = 0.0;
    double largest = 0.0;
    const double log_x = std::log(x);
    for (int k = 0; k < 600; ++k) {
        const double log_mag = std::lgamma((2.0 * k + 1.0) / alpha) - std::lgamma(2.0 * k + 1.0) +
                               (k == 0 ? 0.0 : 2.0 * k * log_x);
        const double magnitude = std::exp(log_mag);
        largest = std::max(largest, magnitude);
        sum += (k % 2 == 0 ? 1.0 : -1.0) * magnitude;
        if (k > 2 && magnitude < 1e-17 * std::abs(sum)) {
            if (largest > 1e3 * std::abs(sum)) {
                return std::nullopt;
            }
            return sum / (kPi * alpha);
        }
    }
    return std::nullopt;
}

std::optional<double> stable_tail_series(double alpha, double x)
{
    // (1 / pi) sum_k (-1)^(k+1) Gamma(alpha k + 1) / k! sin(k pi alpha / 2) x^(-alpha k - 1);
    // asymptotic for alpha > 1, convergent for alpha < 1.
    double sum = 0.0;
    double previous = std::numeric_limits<double>::infinity();
    const double log_x = std::log(x);
    for (int k = 1; k < 400; ++k) {
        const double magnitude =
            std::exp(std::lgamma(alpha * k + 1.0) - std::lgamma(k + 1.0) - (alpha * k + 1.0) * log_x);
        if (magnitude > previous) {
            return std::nullopt;
        }
        previous = magnitude;
        sum += (k % 2 == 1 ? 1.0 : -1.0) * magnitude * std::sin(k * kPi * alpha / 2.0);
        if (k > 1 && magnitude < 1e-16 * std::abs(sum)) {
            return sum / kPi;
        }
    }
    return std::nullopt;
}

double stable_fourier(double alpha, double x)
{
    const double cutoff = std::pow(40.0, 1.0 / alpha);
    const double panel = x > 0.0 ? std::min(kPi / x, cutoff / 16.0) : cutoff / 16.0;
    auto integrand = [&](double xi) { return std::cos(xi * x) * std::exp(-std::pow(xi, alpha)); };
    double total = 0.0;
    for (double lo = 0.0; lo < cutoff; lo += panel) {
        total += numerics::integrate(integrand, lo, std::min(lo + panel, cutoff), 1e-12, 1e-17,
                                     "symmetric_stable_density");
    }
    return total / kPi;
}

}  // namespace

double symmetric_stable_density(double alpha, double x)
{
    if (!(alpha > 0.0 && alpha <= 2.0)) {
        throw ParameterError("stable index alpha must lie in (0, 2], got " + std::to_string(alpha));
    }
    x = std::abs(x);
    if (alpha == 2.0) {
        return std::exp(-x * x / 4.0) / (2.0 * std::sqrt(kPi));
    }
    if (alpha == 1.0) {
        return 1.0 / (kPi * (1.0 + x * x));
    }
    if (x == 0.0) {
        return std::tgamma(1.0 + 1.0 / alpha) / kPi;
    }
    if (alpha > 1.0 && x <= 1.0) {
        if (auto value = stable_taylor(alpha, x)) {
            return *value;
        }
    }
    if (x >= 4.0) {
        if (auto value = stable_tail_series(alpha, x)) {
            return *value;
        }
    }
    return stable_fourier(alpha, x);
}

SymmetricStableTable::SymmetricStableTable(double alpha)
    : alpha_(alpha)
{
    if (!(alpha > 0.0 && alpha <= 2.0)) {
        throw ParameterError("stable index alpha must lie in (0, 2], got " + std::to_string(alpha));
    }
    if (alpha == 2.0 || alpha == 1.0) {
        return;  // closed forms
    }
    // Tail series from the first x on a 0.25 ladder where it converges at x and 2x.
    tail_start_ = 4.0;
    while (!(stable_tail_series(alpha, tail_start_) && stable_tail_series(alpha, 2.0 * tail_start_))) {
        tail_start_ += panel_width_;
        if (tail_start_ > 400.0) {
            throw NumericalError("SymmetricStableTable: tail series does not converge below x = 400 for alpha = " +
                                 std::to_string(alpha));
        }
    }
    for (int k = 1; k < 400; ++k) {
        const double magnitude = std::exp(std::lgamma(alpha * k + 1.0) - std::lgamma(k + 1.0));
        if (!std::isfinite(magnitude)) {
            break;
        }
        tail_coefficients_.push_back((k % 2 == 1 ? 1.0 : -1.0) * magnitude * std::sin(k * kPi * alpha / 2.0) / kPi);
        tail_magnitudes_.push_back(magnitude / kPi);
    }
    const auto n_panels = static_cast<std::size_t>(std::ceil(tail_start_ / panel_width_));
    panels_.resize(n_panels);
    std::array<double, kDegree> values{};
    for (std::size_t p = 0; p < n_panels; ++p) {
        const double mid = (static_cast<double>(p) + 0.5) * panel_width_;
        const double half = 0.5 * panel_width_;
        for (int j = 0; j < kDegree; ++j) {
            const double node = std::cos(kPi * (j + 0.5) / kDegree);
            values[static_cast<std::size_t>(j)] = symmetric_stable_density(alpha, mid + half * node);
        }
        for (int k = 0; k < kDegree; ++k) {
            double sum = 0.0;
            for (int j = 0; j < kDegree; ++j) {
                sum += values[static_cast<std::size_t>(j)] * std::cos(kPi * k * (j + 0.5) / kDegree);
            }
            panels_[p][static_cast<std::size_t>(k)] = (k == 0 ? 1.0 : 2.0) * sum / kDegree;
        }
    }
}

double SymmetricStableTable::operator()(double x) const
{
    x = std::abs(x);
    if (alpha_ == 2.0) {
        return std::exp(-x * x / 4.0) / (2.0 * std::sqrt(kPi));
    }
    if (alpha_ == 1.0) {
        return 1.0 / (kPi * (1.0 + x * x));
    }
    if (x >= tail_start_) {
        const double log_x = std::log(x);
        double sum = 0.0;
        for (std::size_t k = 0; k < tail_coefficients_.size(); ++k) {
            const double power = std::exp(-(alpha_ * static_cast<double>(k + 1) + 1.0) * log_x);
            sum += tail_coefficients_[k] * power;
            // Some sines vanish; stop on the term magnitude instead.
            if (k > 1 && tail_magnitudes_[k] * power < 1e-16 * std::abs(sum)) {
                break;
            }
        }
        return sum;
    }
    const auto p = std::min(static_cast<std::size_t>(x / panel_width_), panels_.size() - 1);
    const double mid = (static_cast<double>(p) + 0.5) * panel_width_;
    const double t = (x - mid) / (0.5 * panel_width_);
    // Clenshaw recurrence.
    const auto& c = panels_[p];
    double b1 = 0.0;
    double b2 = 0.0;
    for (int k = kDegree - 1; k >= 1; --k) {
        const double b0 = 2.0 * t * b1 - b2 + c[static_cast<std::size_t>(k)];
        b2 = b1;
        b1 = b0;
    }
    return t * b1 - b2 + c[0];
}

}  // namespace fracsub
