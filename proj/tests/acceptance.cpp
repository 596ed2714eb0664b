// Acceptance suite: one PASS/FAIL line per criterion, each with its runtime limit.

#include "fracsub/bounds.hpp"
#include "fracsub/harness.hpp"
#include "fracsub/inverse_time.hpp"
#include "fracsub/numerics.hpp"
#include "fracsub/solver.hpp"
#include "fracsub/stats.hpp"
#include "fracsub/subord.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

using namespace fracsub;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string printf_string(const char* format, auto... args)
{
    char buffer[512];
    std::snprintf(buffer, sizeof buffer, format, args...);
    return buffer;
}

bool run_criterion(int id, double limit_seconds, const std::function<Outcome()>& body)
{
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = out.pass && elapsed <= limit_seconds;
    std::printf("criterion %2d: %s  %s  [%.1f s, limit %.0f s]\n", id, pass ? "PASS" : "FAIL", out.detail.c_str(),
                elapsed, limit_seconds);
    std::fflush(stdout);
    return pass;
}

Outcome laplace_law()
{
    const std::size_t n = 1'000'000;
    double worst = 0.0;  // largest |error| / stderr
    bool ok = true;
    for (double beta : {0.3, 0.5, 0.7, 0.9}) {
        const PositiveStableSampler draw(beta);
        Stream rng(2024, 0);
        std::vector<double> s(n);
        for (double& v : s) v = draw(rng);
        for (double lambda : {0.5, 1.0, 2.0}) {
            double m = 0.0;
            double m2 = 0.0;
            for (double v : s) {
                const double e = std::exp(-lambda * v);
                m += e;
                m2 += e * e;
            }
            m /= n;
            const double se = std::sqrt((m2 / n - m * m) / n);
            const double z = std::abs(m - std::exp(-std::pow(lambda, beta))) / se;
            worst = std::max(worst, z);
            ok = ok && z <= 3.0;
        }
    }
    return {ok, printf_string("max |mean - exp(-lambda^beta)| / stderr = %.2f (need <= 3)", worst)};
}

Outcome inverse_closed_form()
{
    double worst = 0.0;
    for (double T : {0.25, 1.0, 4.0})
        for (int i = 0; i <= 500; ++i) {
            const double u = 0.01 * i;
            const double exact = std::exp(-u * u / (4.0 * T)) / std::sqrt(std::numbers::pi * T);
            worst = std::max(worst, std::abs(inverse_density(0.5, T, u) - exact));
        }
    return {worst <= 1e-8, printf_string("max abs error = %.2e (need <= 1e-8)", worst)};
}

// CDF of Z_1 for beta = 1/4 by panel quadrature of inverse_density, with
// cubic Hermite interpolation between nodes (slopes are the density itself).
class QuadratureCdf {
public:
    QuadratureCdf(double beta, double T, double step) : beta_(beta), T_(T), step_(step)
    {
        u_.push_back(0.0);
        p_.push_back(inverse_density(beta, T, 0.0));
        F_.push_back(0.0);
        while (p_.back() > 1e-18 || u_.size() < 10) {
            const double a = u_.back();
            const double b = a + step;
            const double mass =
                numerics::integrate([&](double u) { return inverse_density(beta_, T_, u); }, a, b, 1e-12, 1e-17, "cdf");
            u_.push_back(b);
            p_.push_back(inverse_density(beta, T, b));
            F_.push_back(F_.back() + mass);
        }
    }

    double operator()(double u) const
    {
        if (u <= 0.0) return 0.0;
        const auto k = static_cast<std::size_t>(u / step_);
        if (k + 1 >= u_.size()) return F_.back();
        const double t = (u - u_[k]) / step_;
        const double h00 = 2 * t * t * t - 3 * t * t + 1;
        const double h10 = t * t * t - 2 * t * t + t;
        const double h01 = -2 * t * t * t + 3 * t * t;
        const double h11 = t * t * t - t * t;
        return h00 * F_[k] + h10 * step_ * p_[k] + h01 * F_[k + 1] + h11 * step_ * p_[k + 1];
    }

    [[nodiscard]] double total() const { return F_.back(); }

private:
    double beta_;
    double T_;
    double step_;
    std::vector<double> u_;
    std::vector<double> p_;
    std::vector<double> F_;
};

Outcome dyadic_sampler()
{
    const std::size_t n = 1'000'000;
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        Stream rng(31, i);
        z[i] = sample_inverse_dyadic(2, 1.0, rng);
    }
    const QuadratureCdf cdf(0.25, 1.0, 0.01);
    const double ks = ks_distance(z, [&](double u) { return cdf(u); });
    return {ks <= 0.002, printf_string("KS = %.5f (need <= 0.002), quadrature mass = %.12f", ks, cdf.total())};
}

Outcome reference_origin()
{
    const ReferenceDensity q(0.5, 2.0, 1, {0.0}, 1.0);
    const double exact = std::tgamma(0.25) / (2.0 * std::numbers::pi);
    const double value = q(1.0, 0.0);
    boost::math::quadrature::tanh_sinh<double> integrator;
    const double mass = integrator.integrate([&](double z) { return q(1.0, z); }, -INFINITY, INFINITY);
    const bool ok = std::abs(value - exact) <= 1e-6 && std::abs(mass - 1.0) <= 1e-6;
    return {ok, printf_string("q(1,0) = %.12f vs Gamma(1/4)/(2 pi) = %.12f, mass = %.12f", value, exact, mass)};
}

Outcome end_to_end_density()
{
    SchemeConfig cfg;
    cfg.beta = 0.5;
    cfg.h = 1e-3;
    cfg.T = 1.0;
    cfg.n_paths = 1'000'000;
    cfg.seed = 5;
    cfg.validate();
    const auto x = sample_endpoints(cfg.x0, cfg, SolveOptions{1, ClockMode::discrete});
    double m = 0.0;
    double m2 = 0.0;
    for (double v : x) {
        m += v;
        m2 += v * v;
    }
    m /= x.size();
    const double sd = std::sqrt(m2 / x.size() - m * m);
    // Undersmoothed so the variance band dominates the bias at the cusp in z = 0.
    const double bandwidth = 0.5 * sd * std::pow(static_cast<double>(x.size()), -1.0 / 3.0);
    const auto kde = estimate_density(x, GridSpec{-3.0, 3.0, 25}, DensityMethod::kde, bandwidth);
    const ReferenceDensity q(0.5, 2.0, 1, {0.0}, 1.0);
    double worst = 0.0;  // largest |kde - q| / (3 band)
    double sup = 0.0;
    for (std::size_t i = 0; i < kde.points.size(); ++i) {
        const double band = 1.96 * kde.std_error[i];
        const double diff = std::abs(kde.values[i] - q(1.0, kde.points[i]));
        sup = std::max(sup, diff);
        worst = std::max(worst, diff / (3.0 * band));
    }
    return {worst <= 1.0, printf_string("sup |kde - q| = %.4f, max ratio to 3 x 95%% band = %.3f (need <= 1)", sup, worst)};
}

Outcome time_change_rate()
{
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::converge;
    cfg.scheme.beta = 0.5;
    cfg.scheme.T = 1.0;
    cfg.scheme.n_paths = 1'000'000;
    cfg.scheme.seed = 6;
    cfg.scheme.h = std::ldexp(1.0, -10);
    for (int k = 6; k <= 10; ++k) cfg.converge.h_ladder.push_back(std::ldexp(1.0, -k));
    cfg.converge.z_points = {1.5};
    cfg.finalize();
    const auto result = run_converge(cfg);
    bool monotone = true;
    double min_gap = INFINITY;  // smallest decrease in units of its noise
    for (std::size_t k = 0; k + 1 < result.rows.size(); ++k) {
        const auto& a = result.rows[k];
        const auto& b = result.rows[k + 1];
        const double noise = std::hypot(a.err_ci, b.err_ci) / 1.96;
        const double gap = (a.err - b.err) / noise;
        min_gap = std::min(min_gap, gap);
        monotone = monotone && gap > 3.0;
    }
    const double slope = result.slope[0];
    return {monotone && slope >= 0.7,
            printf_string("slope = %.4f +/- %.4f (need >= 0.7), min decrease = %.0f sigma (need > 3)", slope,
                          1.96 * result.slope_std_error[0], min_gap)};
}

Outcome pde_residual()
{
    std::vector<double> z;
    for (double x = 0.5; x <= 2.0 + 1e-12; x += 0.25) {
        z.push_back(x);
        z.push_back(-x);
    }
    const auto fine = pde_residual_check(0.5, 0.5, 2.0, z, 1e-3, 1e-3, 0.0, 1.0, 10);
    const auto coarse = pde_residual_check(0.5, 0.5, 2.0, z, 2e-3, 2e-3, 0.0, 1.0, 5);
    const double ratio = coarse.max_abs_residual / fine.max_abs_residual;
    return {fine.relative() <= 1e-2 && ratio >= 2.0,
            printf_string("relative residual = %.3e (need <= 1e-2), refinement ratio = %.2f (need >= 2)",
                          fine.relative(), ratio)};
}

Outcome sandwich()
{
    std::vector<double> pts;
    for (int i = 0; i <= 80; ++i) pts.push_back(0.05 * i);
    SandwichParams diffusive;
    diffusive.envelope.beta = 0.5;
    diffusive.envelope.alpha = 2.0;
    diffusive.c_upper = 2.0;
    diffusive.c_lower = 2.0;
    const ReferenceDensity qd(0.5, 2.0, 1, {0.0}, 1.0);
    const auto rd = two_sided_check(reference_density_grid(qd, 1.0, pts), Regime::diffusive, diffusive);

    SandwichParams stable = diffusive;
    stable.envelope.alpha = 1.5;
    stable.c_upper = 1.0;
    stable.c_lower = 1.0;
    const ReferenceDensity qs(0.5, 1.5, 1, {0.0}, 1.0);
    const auto rs = two_sided_check(reference_density_grid(qs, 1.0, pts), Regime::stable, stable);
    const double slope = stable_tail_slope(qs, 1.0, 10.0, 100.0).slope;
    const double rel = std::abs(-slope - 2.5) / 2.5;
    return {rd.pass && rs.pass && rel <= 0.05,
            printf_string("diffusive c_up/c_low = %.3g, stable c_up/c_low = %.3g (need <= 1e6), tail slope = %.4f "
                          "(%.1f%% from -2.5, need <= 5%%)",
                          rd.ratio(), rs.ratio(), slope, 100.0 * rel)};
}

Outcome ctrw_limit()
{
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::ctrw_demo;
    cfg.scheme.beta = 0.5;
    cfg.scheme.seed = 9;
    cfg.ctrw.n = 1e4;
    cfg.ctrw.samples = 100'000;
    cfg.finalize();
    const auto result = run_ctrw(cfg);
    return {result.ks <= 0.02, printf_string("KS = %.4f (need <= 0.02)", result.ks)};
}

Outcome fractional_operators()
{
    const double beta = 0.5;
    const double dt = 1e-4;
    std::vector<double> g;
    for (int i = 0; i <= 10'000; ++i) g.push_back(i * dt);
    const auto cap = caputo_derivative(g, dt, beta);
    double worst = 0.0;
    for (std::size_t i = 1; i < g.size(); ++i)
        worst = std::max(worst, std::abs(cap[i] - std::pow(i * dt, 1.0 - beta) / std::tgamma(2.0 - beta)));

    double identity = 0.0;
    const double dt2 = 1e-3;
    for (const auto& poly : std::vector<std::function<double(double)>>{
             [](double t) { return t * t; }, [](double t) { return 1.0 + t - t * t * t; },
             [](double t) { return 2.0 - 3.0 * t + 0.5 * t * t * t * t; }}) {
        std::vector<double> p;
        for (int i = 0; i <= 1000; ++i) p.push_back(poly(i * dt2));
        const auto rl = riemann_liouville_derivative(p, dt2, beta);
        const auto c = caputo_derivative(p, dt2, beta);
        for (std::size_t i = 1; i < p.size(); ++i)
            identity = std::max(identity, std::abs(rl[i] - c[i] - p[0] * std::pow(i * dt2, -beta) / std::tgamma(1.0 - beta)));
    }
    return {worst <= 1e-3 && identity <= 1e-10,
            printf_string("Caputo(t) max error = %.2e (need <= 1e-3), RL - Caputo identity max error = %.2e (need <= 1e-10)",
                          worst, identity)};
}

}  // namespace

int main()
{
    bool all = true;
    all &= run_criterion(1, 30, laplace_law);
    all &= run_criterion(2, 5, inverse_closed_form);
    all &= run_criterion(3, 60, dyadic_sampler);
    all &= run_criterion(4, 10, reference_origin);
    all &= run_criterion(5, 300, end_to_end_density);
    all &= run_criterion(6, 1200, time_change_rate);
    all &= run_criterion(7, 300, pde_residual);
    all &= run_criterion(8, 300, sandwich);
    all &= run_criterion(9, 300, ctrw_limit);
    all &= run_criterion(10, 60, fractional_operators);
    return all ? 0 : 1;
}
