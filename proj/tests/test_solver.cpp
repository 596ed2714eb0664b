#include <doctest.h>

#include "fracsub/errors.hpp"
#include "fracsub/solver.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <numbers>
#include <vector>

using namespace fracsub;

namespace {

// beta = 1/2: q(T, z) = int_0^inf (pi T)^{-1/2} exp(-u^2 / 4T) N(0, u)(z) du.
double half_reference(double T, double z)
{
    boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate([&](double u) {
        return std::exp(-u * u / (4.0 * T)) / std::sqrt(std::numbers::pi * T) * std::exp(-z * z / (2.0 * u)) /
               std::sqrt(2.0 * std::numbers::pi * u);
    });
}

}  // namespace

TEST_CASE("reference density against an independent subordination integral")
{
    const ReferenceDensity q(0.5, 2.0, 1, {0.0}, 1.0);
    CHECK(q(1.0, 0.0) == doctest::Approx(std::tgamma(0.25) / (2.0 * std::numbers::pi)).epsilon(1e-10));
    for (double T : {0.5, 1.0, 2.0})
        for (double z : {0.25, 1.0, 2.5})
            CHECK(q(T, z) == doctest::Approx(half_reference(T, z)).epsilon(1e-9));
}

TEST_CASE("reference density has unit mass")
{
    boost::math::quadrature::tanh_sinh<double> integrator;
    for (double beta : {0.3, 0.8}) {
        const ReferenceDensity q(beta, 2.0, 1, {0.4}, 0.8);
        CHECK(integrator.integrate([&](double z) { return q(1.0, z); }, -INFINITY, INFINITY) ==
              doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("reference density singularities")
{
    const ReferenceDensity q2(0.5, 2.0, 2, {0.0, 0.0}, 1.0);
    const std::vector<double> origin{0.0, 0.0};
    CHECK_THROWS_AS(static_cast<void>(q2(1.0, origin)), SingularityError);
    const ReferenceDensity q1(0.5, 1.0, 1, {0.0}, 1.0);
    CHECK_THROWS_AS(static_cast<void>(q1(1.0, 0.0)), SingularityError);
    CHECK(std::isfinite(q1(1.0, 0.1)));
}

TEST_CASE("solve is independent of the thread count")
{
    SchemeConfig cfg;
    cfg.n_paths = 30'000;
    cfg.seed = 3;
    const Payoff f = [](std::span<const double> x) { return std::cos(x[0]); };
    const auto a = solve_fractional_cauchy(f, cfg.x0, cfg, SolveOptions{1, ClockMode::discrete});
    const auto b = solve_fractional_cauchy(f, cfg.x0, cfg, SolveOptions{4, ClockMode::discrete});
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
}

TEST_CASE("solve matches the Mittag-Leffler value for cos")
{
    // E cos(B_Z) = E exp(-Z / 2) = exp(1/4) erfc(1/2) for beta = 1/2, T = 1.
    SchemeConfig cfg;
    cfg.n_paths = 100'000;
    cfg.h = 1e-3;
    const Payoff f = [](std::span<const double> x) { return std::cos(x[0]); };
    const auto est = solve_fractional_cauchy(f, cfg.x0, cfg, SolveOptions{1, ClockMode::dyadic});
    const double exact = std::exp(0.25) * std::erfc(0.5);
    CHECK(std::abs(est.mean - exact) < 4.0 * est.std_error + 1e-3);
}

TEST_CASE("density estimation")
{
    std::vector<double> few(500, 0.0);
    CHECK_THROWS_AS(estimate_density(few, GridSpec{}, DensityMethod::kde), ParameterError);

    std::vector<double> x(100'000);
    Stream rng(1, 0);
    for (double& v : x) v = rng.normal();
    const auto kde = estimate_density(x, GridSpec{-2.0, 2.0, 9}, DensityMethod::kde);
    for (std::size_t i = 0; i < kde.points.size(); ++i) {
        const double z = kde.points[i];
        CHECK(kde.values[i] == doctest::Approx(std::exp(-z * z / 2.0) / std::sqrt(2.0 * std::numbers::pi)).epsilon(0.03));
    }
    const auto hist = estimate_density(x, GridSpec{-4.0, 4.0, 0}, DensityMethod::histogram);
    double mass = 0.0;
    for (double v : hist.values) mass += v * hist.bandwidth;
    CHECK(mass + hist.tail_mass == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("Caputo derivative of t is exact and of t^2 converges")
{
    const double beta = 0.4;
    const double dt = 1e-3;
    std::vector<double> g1;
    std::vector<double> g2;
    for (int i = 0; i <= 1000; ++i) {
        g1.push_back(i * dt);
        g2.push_back(i * dt * i * dt);
    }
    const auto c1 = caputo_derivative(g1, dt, beta);
    const auto c2 = caputo_derivative(g2, dt, beta);
    CHECK(c1[1000] == doctest::Approx(1.0 / std::tgamma(2.0 - beta)).epsilon(1e-12));
    CHECK(c2[1000] == doctest::Approx(2.0 / std::tgamma(3.0 - beta)).epsilon(1e-3));
}

TEST_CASE("Riemann-Liouville minus Caputo is the initial-value term")
{
    const double beta = 0.6;
    const double dt = 0.01;
    std::vector<double> g;
    for (int i = 0; i <= 200; ++i) {
        const double t = i * dt;
        g.push_back(2.0 - t + 3.0 * t * t);
    }
    const auto rl = riemann_liouville_derivative(g, dt, beta);
    const auto cap = caputo_derivative(g, dt, beta);
    CHECK(std::isnan(rl[0]));
    for (std::size_t i = 1; i < g.size(); ++i)
        CHECK(std::abs(rl[i] - cap[i] - g[0] * std::pow(i * dt, -beta) / std::tgamma(1.0 - beta)) < 1e-10);
}

TEST_CASE("reference density solves the fractional equation")
{
    const std::vector<double> z{-1.0, 0.75, 1.5};
    const auto coarse = pde_residual_check(0.5, 0.5, 1.0, z, 4e-3, 4e-3, 0.0, 1.0, 25);
    const auto fine = pde_residual_check(0.5, 0.5, 1.0, z, 2e-3, 2e-3, 0.0, 1.0, 50);
    CHECK(coarse.relative() < 1e-2);
    CHECK(fine.max_abs_residual < 0.5 * coarse.max_abs_residual);
    const auto heat = heat_residual_check(0.999, 0.5, 1.0, z, 1e-3, 1e-3, 0.0, 1.0, 100);
    CHECK(heat.relative() < 2e-2);
}
