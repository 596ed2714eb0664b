#include "fracsub/solver.hpp"

#include "fracsub/errors.hpp"
#include "fracsub/inverse_time.hpp"
#include "fracsub/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

namespace fracsub {

namespace {

constexpr std::size_t kBlock = 4096;

// Per-block moments, merged in block order (Chan et al.).
struct Moments {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x)
    {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }

    void merge(const Moments& other)
    {
        if (other.n == 0) {
            return;
        }
        const double total = static_cast<double>(n + other.n);
        const double delta = other.mean - mean;
        mean += delta * static_cast<double>(other.n) / total;
        m2 += other.m2 + delta * delta * static_cast<double>(n) * static_cast<double>(other.n) / total;
        n += other.n;
    }
};

McEstimate finish(const Moments& moments, std::uint64_t seed)
{
    McEstimate est;
    est.mean = moments.mean;
    est.n_samples = moments.n;
    est.seed = seed;
    est.zero_variance = moments.m2 == 0.0;
    if (moments.n > 1) {
        est.std_error = std::sqrt(moments.m2 / static_cast<double>(moments.n - 1) / static_cast<double>(moments.n));
    }
    return est;
}

int dyadic_level(double beta)
{
    const double level = -std::log2(beta);
    const double rounded = std::round(level);
    if (rounded < 1.0 || std::abs(std::exp2(-rounded) - beta) > 1e-15) {
        throw ParameterError("dyadic clock needs beta = 2^{-n}, got beta = " + std::to_string(beta));
    }
    return static_cast<int>(rounded);
}

double quantile_sorted(std::span<const double> sorted, double p)
{
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

void for_each_block(std::size_t n, std::size_t block, unsigned threads,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& work)
{
    const std::size_t n_blocks = (n + block - 1) / block;
    auto run = [&](std::size_t b) { work(b, b * block, std::min(n, (b + 1) * block)); };
    if (threads <= 1 || n_blocks <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) {
            run(b);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::jthread> workers;
    const unsigned width = static_cast<unsigned>(std::min<std::size_t>(threads, n_blocks));
    for (unsigned w = 0; w < width; ++w) {
        workers.emplace_back([&] {
            for (std::size_t b = next++; b < n_blocks && !failed; b = next++) {
                try {
                    run(b);
                } catch (...) {
                    if (!failed.exchange(true)) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    workers.clear();
    if (failure) {
        std::rethrow_exception(failure);
    }
}

double sample_grid_clock(const SchemeConfig& cfg, Stream& rng, ClockMode clock)
{
    if (clock == ClockMode::dyadic) {
        const double z = sample_inverse_dyadic(dyadic_level(cfg.beta), cfg.T, rng);
        return cfg.h * std::max(1.0, std::ceil(z / cfg.h));
    }
    return sample_discrete_inverse(cfg.beta, cfg.h, cfg.T, rng).value;
}

std::vector<double> sample_endpoints(std::span<const double> x, const SchemeConfig& cfg, const SolveOptions& options)
{
    cfg.validate();
    const auto d = static_cast<std::size_t>(cfg.dim);
    if (x.size() != d) {
        throw ParameterError("start point has dimension " + std::to_string(x.size()) + ", expected " +
                             std::to_string(d));
    }
    std::vector<double> out(cfg.n_paths * d);
    for_each_block(cfg.n_paths, kBlock, options.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            Stream rng(cfg.seed, k);
            const double clock = sample_grid_clock(cfg, rng, options.clock);
            const auto endpoint = scheme_path_to_time(x, cfg, clock, rng);
            std::copy(endpoint.begin(), endpoint.end(), out.begin() + static_cast<std::ptrdiff_t>(k * d));
        }
    });
    return out;
}

McEstimate solve_fractional_cauchy(const Payoff& f, std::span<const double> x, const SchemeConfig& cfg,
                                   const SolveOptions& options)
{
    cfg.validate();
    if (x.size() != static_cast<std::size_t>(cfg.dim)) {
        throw ParameterError("start point has dimension " + std::to_string(x.size()) + ", expected " +
                             std::to_string(cfg.dim));
    }
    const std::size_t n_blocks = (cfg.n_paths + kBlock - 1) / kBlock;
    std::vector<Moments> partial(n_blocks);
    for_each_block(cfg.n_paths, kBlock, options.threads, [&](std::size_t b, std::size_t begin, std::size_t end) {
        Moments local;
        for (std::size_t k = begin; k < end; ++k) {
            Stream rng(cfg.seed, k);
            const double clock = sample_grid_clock(cfg, rng, options.clock);
            local.add(f(scheme_path_to_time(x, cfg, clock, rng)));
        }
        partial[b] = local;
    });
    Moments total;
    for (const auto& m : partial) {
        total.merge(m);
    }
    return finish(total, cfg.seed);
}

McEstimate summarize(std::span<const double> values, std::uint64_t seed)
{
    Moments total;
    for (std::size_t begin = 0; begin < values.size(); begin += kBlock) {
        Moments local;
        for (std::size_t k = begin; k < std::min(values.size(), begin + kBlock); ++k) {
            local.add(values[k]);
        }
        total.merge(local);
    }
    return finish(total, seed);
}

std::string to_string(DensityMethod method)
{
    switch (method) {
    case DensityMethod::histogram:
        return "histogram";
    case DensityMethod::kde:
        return "kde";
    case DensityMethod::quadrature:
        return "quadrature";
    }
    return "unknown";
}

double silverman_bandwidth(std::span<const double> samples)
{
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const auto est = summarize(sorted, 0);
    const double sd = est.std_error * std::sqrt(static_cast<double>(sorted.size()));
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    return 0.9 * spread * std::pow(static_cast<double>(sorted.size()), -0.2);
}

DensityGrid estimate_density(std::span<const double> samples, const GridSpec& grid, DensityMethod method,
                             std::optional<double> bandwidth)
{
    if (samples.size() < 1000) {
        throw ParameterError("density estimation needs at least 1000 samples, got " + std::to_string(samples.size()));
    }
    if (!(grid.hi > grid.lo)) {
        throw ParameterError("empty density grid [" + std::to_string(grid.lo) + ", " + std::to_string(grid.hi) + "]");
    }
    for (const double s : samples) {
        if (!std::isfinite(s)) {
            throw ParameterError("density estimation received a non-finite sample");
        }
    }
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    DensityGrid out;
    out.method = method;
    out.n_samples = sorted.size();

    if (method == DensityMethod::histogram) {
        std::size_t bins = grid.points;
        if (bins == 0) {
            const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
            const double width = 2.0 * iqr * std::pow(n, -1.0 / 3.0);
            bins = width > 0.0 ? static_cast<std::size_t>(std::ceil((grid.hi - grid.lo) / width)) : 1;
            bins = std::clamp<std::size_t>(bins, 1, 1'000'000);
        }
        const double width = (grid.hi - grid.lo) / static_cast<double>(bins);
        std::vector<double> counts(bins, 0.0);
        double outside = 0.0;
        for (const double s : sorted) {
            if (s < grid.lo || s > grid.hi) {
                outside += 1.0;
                continue;
            }
            const auto bin = std::min(bins - 1, static_cast<std::size_t>((s - grid.lo) / width));
            counts[bin] += 1.0;
        }
        out.bandwidth = width;
        out.tail_mass = outside / n;
        for (std::size_t b = 0; b < bins; ++b) {
            const double p = counts[b] / n;
            out.points.push_back(grid.lo + (static_cast<double>(b) + 0.5) * width);
            out.values.push_back(p / width);
            out.std_error.push_back(std::sqrt(p * (1.0 - p) / n) / width);
        }
        return out;
    }
    if (method != DensityMethod::kde) {
        throw ParameterError("estimate_density supports histogram and kde; use ReferenceDensity for quadrature");
    }
    if (grid.points == 0) {
        throw ParameterError("kde needs at least one grid point");
    }
    const double bw = bandwidth ? *bandwidth : silverman_bandwidth(sorted);
    if (!(bw > 0.0) || !std::isfinite(bw)) {
        throw ParameterError("degenerate samples: kde bandwidth " + std::to_string(bw));
    }
    out.bandwidth = bw;
    const double norm = 1.0 / (bw * std::sqrt(2.0 * std::numbers::pi));
    const double reach = 8.0 * bw;
    for (std::size_t i = 0; i < grid.points; ++i) {
        const double x = grid.points == 1 ? grid.lo
                                          : grid.lo + (grid.hi - grid.lo) * static_cast<double>(i) /
                                                          static_cast<double>(grid.points - 1);
        const auto first = std::lower_bound(sorted.begin(), sorted.end(), x - reach);
        const auto last = std::upper_bound(first, sorted.end(), x + reach);
        double sum = 0.0;
        double sum2 = 0.0;
        for (auto it = first; it != last; ++it) {
            const double u = (x - *it) / bw;
            const double k = norm * std::exp(-0.5 * u * u);
            sum += k;
            sum2 += k * k;
        }
        const double mean = sum / n;
        out.points.push_back(x);
        out.values.push_back(mean);
        out.std_error.push_back(std::sqrt(std::max(0.0, sum2 / n - mean * mean) / n));
    }
    out.tail_mass = static_cast<double>((std::lower_bound(sorted.begin(), sorted.end(), grid.lo) - sorted.begin()) +
                                        (sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), grid.hi))) /
                    n;
    return out;
}

ReferenceDensity::ReferenceDensity(double beta, double alpha, int dim, std::vector<double> drift, double sigma)
    : beta_(beta)
    , alpha_(alpha)
    , dim_(dim)
    , drift_(std::move(drift))
    , sigma_(sigma)
{
    if (!(beta > 0.0 && beta < 1.0)) {
        throw ParameterError("beta must lie in (0, 1), got " + std::to_string(beta));
    }
    if (!(alpha > 0.0 && alpha <= 2.0)) {
        throw ParameterError("alpha must lie in (0, 2], got " + std::to_string(alpha));
    }
    if (alpha == 2.0 ? (dim < 1 || dim > 3) : dim != 1) {
        throw ParameterError("reference density covers d = 1, 2, 3 for alpha = 2 and d = 1 for alpha < 2; got d = " +
                             std::to_string(dim));
    }
    if (drift_.size() != static_cast<std::size_t>(dim)) {
        throw ParameterError("drift has " + std::to_string(drift_.size()) + " entries, expected " + std::to_string(dim));
    }
    if (!(sigma > 0.0)) {
        throw ParameterError("sigma must be positive, got " + std::to_string(sigma));
    }
    if (alpha <= 1.0 && std::any_of(drift_.begin(), drift_.end(), [](double b) { return b != 0.0; })) {
        throw ParameterError("drift must vanish when alpha <= 1");
    }
    if (alpha < 2.0) {
        stable_.emplace(alpha);
    }

    // Support of p_Z(1, w) in s = sqrt(w): bulk quantiles and a far cut where
    // P[Z_1 > w] = P[S_1 < w^{-1/beta}] drops below 1e-18.
    auto upper_tail = [&](double w) { return stable_subordinator_cdf(beta, std::pow(w, -1.0 / beta)); };
    auto quantile = [&](double p) {
        return std::exp(numerics::bisect([&](double lw) { return inverse_cdf(beta, 1.0, std::exp(lw)) - p; },
                                         -60.0, 10.0, 200));
    };
    const double log_w_max =
        numerics::bisect([&](double lw) { return 1e-18 - upper_tail(std::exp(lw)); }, -5.0, 10.0, 200);
    const double s_max = std::sqrt(std::exp(log_w_max));
    const double s_lo = std::sqrt(quantile(1e-3));
    const double s_hi = std::sqrt(quantile(1.0 - 1e-3));
    const double fine = std::min(s_max / 80.0, (s_hi - s_lo) / 40.0);
    const double coarse = s_max / 80.0;

    std::vector<double> cuts{0.0};
    const double s_geo = std::min(0.5 * s_lo, coarse);
    for (int i = 0; i <= 60; ++i) {
        cuts.push_back(s_geo * std::pow(1e-9, 1.0 - i / 60.0));
    }
    // Fine panels over the bulk (with a margin of one bulk width), coarse elsewhere.
    const double margin = s_hi - s_lo;
    const double fine_lo = std::max(s_geo, s_lo - margin);
    const double fine_hi = std::min(s_max, s_hi + margin);
    auto fill = [&](double from, double to, double width) {
        const auto count = static_cast<std::size_t>(std::ceil((to - from) / width));
        for (std::size_t i = 1; i <= count; ++i) {
            cuts.push_back(from + (to - from) * static_cast<double>(i) / static_cast<double>(count));
        }
    };
    if (fine_lo > s_geo) {
        fill(s_geo, fine_lo, coarse);
    }
    fill(fine_lo, fine_hi, fine);
    if (s_max > fine_hi) {
        fill(fine_hi, s_max, coarse);
    }
    const auto rule = numerics::composite_gauss_legendre(cuts);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double s = rule.nodes[i];
        const double w = rule.weights[i] * inverse_density(beta, 1.0, s * s) * 2.0 * s;
        if (w > 0.0) {
            s_.push_back(s);
            weight_.push_back(w);
        }
    }
}

double ReferenceDensity::kernel(double u, std::span<const double> z) const
{
    if (alpha_ == 2.0) {
        const double var = sigma_ * sigma_ * u;
        double r2 = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double e = z[i] - drift_[i] * u;
            r2 += e * e;
        }
        return std::exp(-0.5 * r2 / var - 0.5 * dim_ * std::log(2.0 * std::numbers::pi * var));
    }
    const double scale = sigma_ * std::pow(u, 1.0 / alpha_);
    return (*stable_)((z[0] - drift_[0] * u) / scale) / scale;
}

double ReferenceDensity::operator()(double T, std::span<const double> z) const
{
    if (!(T > 0.0)) {
        throw ParameterError("reference density needs T > 0, got " + std::to_string(T));
    }
    if (z.size() != static_cast<std::size_t>(dim_)) {
        throw ParameterError("point has dimension " + std::to_string(z.size()) + ", expected " + std::to_string(dim_));
    }
    const bool at_origin = std::all_of(z.begin(), z.end(), [](double v) { return v == 0.0; });
    if (at_origin && static_cast<double>(dim_) >= alpha_ && !(dim_ == 1 && alpha_ == 2.0)) {
        throw SingularityError("reference density is infinite at z = 0 for d = " + std::to_string(dim_) +
                               ", alpha = " + std::to_string(alpha_));
    }
    const double tb = std::pow(T, beta_);
    double total = 0.0;
    for (std::size_t i = 0; i < s_.size(); ++i) {
        total += weight_[i] * kernel(tb * s_[i] * s_[i], z);
    }
    return total;
}

double ReferenceDensity::operator()(double T, double z) const
{
    return (*this)(T, std::span<const double>(&z, 1));
}

double reference_density(double beta, double alpha, double T, std::span<const double> z,
                         std::span<const double> drift, double sigma)
{
    const ReferenceDensity q(beta, alpha, static_cast<int>(z.size()), std::vector<double>(drift.begin(), drift.end()),
                             sigma);
    return q(T, z);
}

double reference_density(double beta, double alpha, double T, double z, double drift, double sigma)
{
    const ReferenceDensity q(beta, alpha, 1, {drift}, sigma);
    return q(T, z);
}

DensityGrid reference_density_grid(const ReferenceDensity& q, double T, std::span<const double> points)
{
    if (q.dim() != 1) throw ParameterError("density grids are one-dimensional");
    DensityGrid out;
    out.method = DensityMethod::quadrature;
    out.points.assign(points.begin(), points.end());
    out.values.reserve(points.size());
    for (double z : points) out.values.push_back(q(T, z));
    return out;
}

namespace {

void require_fractional_grid(std::span<const double> g, double dt, double beta)
{
    if (g.size() < 4) {
        throw ParameterError("fractional derivative needs at least 4 grid points, got " + std::to_string(g.size()));
    }
    if (!(dt > 0.0)) {
        throw ParameterError("grid step must be positive, got " + std::to_string(dt));
    }
    if (!(beta > 0.0 && beta < 1.0)) {
        throw ParameterError("beta must lie in (0, 1), got " + std::to_string(beta));
    }
}

std::vector<double> powers(std::size_t n, double exponent)
{
    std::vector<double> out(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        out[k] = k == 0 ? (exponent > 0.0 ? 0.0 : std::numeric_limits<double>::infinity())
                        : std::pow(static_cast<double>(k), exponent);
    }
    return out;
}

}  // namespace

std::vector<double> caputo_derivative(std::span<const double> g, double dt, double beta)
{
    require_fractional_grid(g, dt, beta);
    const std::size_t n = g.size() - 1;
    const auto p1 = powers(n, 1.0 - beta);
    const double factor = std::pow(dt, -beta) / std::tgamma(2.0 - beta);
    std::vector<double> out(g.size(), 0.0);
    for (std::size_t i = 1; i <= n; ++i) {
        double sum = 0.0;
        for (std::size_t k = 0; k < i; ++k) {
            sum += (p1[k + 1] - p1[k]) * (g[i - k] - g[i - k - 1]);
        }
        out[i] = factor * sum;
    }
    return out;
}

std::vector<double> riemann_liouville_derivative(std::span<const double> g, double dt, double beta)
{
    require_fractional_grid(g, dt, beta);
    const std::size_t n = g.size() - 1;
    const auto p1 = powers(n, 1.0 - beta);
    const auto pm = powers(n, -beta);
    const double d1 = std::pow(dt, 1.0 - beta);
    const double dm = std::pow(dt, -beta);
    const double inv_gamma = 1.0 / std::tgamma(1.0 - beta);
    std::vector<double> out(g.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 1; i <= n; ++i) {
        double sum = 0.0;
        // Full panels [t_j, t_{j+1}] with a = (i - j) dt and c = a - dt, differentiated in t.
        for (std::size_t j = 0; j + 1 < i; ++j) {
            const std::size_t a = i - j;
            const double slope = (g[j + 1] - g[j]) / dt;
            const double G = d1 * (p1[a] - p1[a - 1]) / (1.0 - beta);
            const double dG = dm * (pm[a] - pm[a - 1]);
            const double dH = beta * G + d1 * (p1[a] - static_cast<double>(a) * pm[a - 1]);
            sum += g[j] * dG + slope * dH;
        }
        // Partial last panel [t_{i-1}, t].
        const double slope = (g[i] - g[i - 1]) / dt;
        sum += g[i - 1] * dm + slope * d1 / (1.0 - beta);
        out[i] = inv_gamma * sum;
    }
    return out;
}

namespace {

std::vector<double> sampled_times(double t_lo, double t_hi, double dt, std::size_t stride,
                                  std::vector<std::size_t>& indices)
{
    if (!(dt > 0.0) || !(t_hi >= t_lo) || !(t_lo > 0.0) || stride == 0) {
        throw ParameterError("residual check needs 0 < t_lo <= t_hi, dt > 0 and a positive stride");
    }
    const auto first = static_cast<std::size_t>(std::ceil(t_lo / dt - 1e-9));
    const auto last = static_cast<std::size_t>(std::floor(t_hi / dt + 1e-9));
    std::vector<double> times;
    for (std::size_t i = first; i <= last; i += stride) {
        indices.push_back(i);
        times.push_back(static_cast<double>(i) * dt);
    }
    return times;
}

void require_off_diagonal(std::span<const double> z_points, double dz)
{
    for (const double z : z_points) {
        if (!(std::abs(z) > 2.0 * dz)) {
            throw ParameterError("residual points must stay away from z = 0; got z = " + std::to_string(z));
        }
    }
}

}  // namespace

ResidualGrid pde_residual_check(double beta, double t_lo, double t_hi, std::span<const double> z_points, double dt,
                                double dz, double drift, double sigma, std::size_t t_stride)
{
    require_off_diagonal(z_points, dz);
    std::vector<std::size_t> indices;
    ResidualGrid out;
    out.t_points = sampled_times(t_lo, t_hi, dt, t_stride, indices);
    out.x_points.assign(z_points.begin(), z_points.end());
    const ReferenceDensity q(beta, 2.0, 1, {drift}, sigma);
    const std::size_t n = indices.back();
    const std::size_t nz = z_points.size();
    out.lhs.assign(indices.size() * nz, 0.0);
    out.residual.assign(indices.size() * nz, 0.0);
    std::vector<double> minus(n + 1);
    std::vector<double> centre(n + 1);
    std::vector<double> plus(n + 1);
    for (std::size_t k = 0; k < nz; ++k) {
        const double z = z_points[k];
        minus[0] = centre[0] = plus[0] = 0.0;  // q(0, z) = 0 off the origin
        for (std::size_t i = 1; i <= n; ++i) {
            const double t = static_cast<double>(i) * dt;
            minus[i] = q(t, z - dz);
            centre[i] = q(t, z);
            plus[i] = q(t, z + dz);
        }
        const auto rl = riemann_liouville_derivative(centre, dt, beta);
        for (std::size_t r = 0; r < indices.size(); ++r) {
            const std::size_t i = indices[r];
            const double first = (plus[i] - minus[i]) / (2.0 * dz);
            const double second = (plus[i] - 2.0 * centre[i] + minus[i]) / (dz * dz);
            const double generator = -drift * first + 0.5 * sigma * sigma * second;
            out.lhs[r * nz + k] = rl[i];
            out.residual[r * nz + k] = rl[i] - generator;
        }
    }
    for (std::size_t i = 0; i < out.residual.size(); ++i) {
        out.max_abs_residual = std::max(out.max_abs_residual, std::abs(out.residual[i]));
        out.max_abs_lhs = std::max(out.max_abs_lhs, std::abs(out.lhs[i]));
    }
    return out;
}

ResidualGrid heat_residual_check(double beta, double t_lo, double t_hi, std::span<const double> z_points, double dt,
                                 double dz, double drift, double sigma, std::size_t t_stride)
{
    require_off_diagonal(z_points, dz);
    std::vector<std::size_t> indices;
    ResidualGrid out;
    out.t_points = sampled_times(t_lo, t_hi, dt, t_stride, indices);
    out.x_points.assign(z_points.begin(), z_points.end());
    const ReferenceDensity q(beta, 2.0, 1, {drift}, sigma);
    const std::size_t nz = z_points.size();
    out.lhs.assign(indices.size() * nz, 0.0);
    out.residual.assign(indices.size() * nz, 0.0);
    for (std::size_t r = 0; r < out.t_points.size(); ++r) {
        const double t = out.t_points[r];
        for (std::size_t k = 0; k < nz; ++k) {
            const double z = z_points[k];
            const double dqdt = (q(t + dt, z) - q(t - dt, z)) / (2.0 * dt);
            const double qm = q(t, z - dz);
            const double q0 = q(t, z);
            const double qp = q(t, z + dz);
            const double generator = -drift * (qp - qm) / (2.0 * dz) + 0.5 * sigma * sigma * (qp - 2.0 * q0 + qm) / (dz * dz);
            out.lhs[r * nz + k] = dqdt;
            out.residual[r * nz + k] = dqdt - generator;
        }
    }
    for (std::size_t i = 0; i < out.residual.size(); ++i) {
        out.max_abs_residual = std::max(out.max_abs_residual, std::abs(out.residual[i]));
        out.max_abs_lhs = std::max(out.max_abs_lhs, std::abs(out.lhs[i]));
    }
    return out;
}

}  // namespace fracsub
