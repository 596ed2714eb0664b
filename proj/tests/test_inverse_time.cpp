#include <doctest.h>

#include "fracsub/errors.hpp"
#include "fracsub/inverse_time.hpp"
#include "fracsub/stats.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

using namespace fracsub;

namespace {

// E exp(-lambda Z_T) = E_{1/2}(-lambda sqrt(T)) = exp(x^2) erfc(x), x = lambda sqrt(T).
double ml_half(double x) { return std::exp(x * x) * std::erfc(x); }

}  // namespace

TEST_CASE("inverse density for beta one half is a half-Gaussian")
{
    for (double T : {0.25, 1.0, 4.0})
        for (double u : {0.0, 0.1, 1.0, 3.0, 5.0}) {
            const double exact = std::exp(-u * u / (4.0 * T)) / std::sqrt(std::numbers::pi * T);
            CHECK(std::abs(inverse_density(0.5, T, u) - exact) < 1e-12);
            CHECK(inverse_cdf(0.5, T, u) == doctest::Approx(std::erf(u / (2.0 * std::sqrt(T)))).epsilon(1e-10));
        }
}

TEST_CASE("inverse density integrates to one")
{
    boost::math::quadrature::exp_sinh<double> integrator;
    for (double beta : {0.3, 0.7}) {
        const double mass = integrator.integrate([&](double u) { return inverse_density(beta, 2.0, u); });
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("exact and dyadic marginals reproduce the Mittag-Leffler transform")
{
    const int n = 200'000;
    auto check = [&](auto draw) {
        double s = 0.0;
        double s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            Stream rng(21, i);
            const double v = std::exp(-draw(rng));
            s += v;
            s2 += v * v;
        }
        const double mean = s / n;
        const double se = std::sqrt((s2 / n - mean * mean) / n);
        CHECK(std::abs(mean - ml_half(1.0)) < 4.0 * se);
    };
    check([](Stream& rng) { return sample_inverse_marginal(0.5, 1.0, rng); });
    check([](Stream& rng) { return sample_inverse_dyadic(1, 1.0, rng); });
}

TEST_CASE("dyadic sampler for beta one quarter follows the inverse cdf")
{
    std::vector<double> z(40'000);
    for (std::size_t i = 0; i < z.size(); ++i) {
        Stream rng(8, i);
        z[i] = sample_inverse_dyadic(2, 1.0, rng);
    }
    CHECK(ks_distance(z, [](double u) { return inverse_cdf(0.25, 1.0, u); }) < 1.63 / std::sqrt(40'000.0));
}

TEST_CASE("discrete inverse picks the first crossing")
{
    SubordinatorPath path;
    path.step_h = 0.1;
    path.beta = 0.5;
    path.values = {0.0, 0.5, 1.2, 2.0};
    const auto s = discrete_inverse(path, 1.0);
    REQUIRE(s.grid_index.has_value());
    CHECK(*s.grid_index == 2);
    CHECK(s.value == doctest::Approx(0.2));
    CHECK_THROWS_AS(discrete_inverse(path, 3.0), InsufficientPathError);
}

TEST_CASE("streaming discrete inverse has the law of the rounded-up exact clock")
{
    const double h = 0.01;
    const std::size_t n = 20'000;
    std::vector<double> stepped(n);
    std::vector<double> rounded(n);
    for (std::size_t i = 0; i < n; ++i) {
        Stream a(4, i);
        Stream b(5, i);
        stepped[i] = sample_discrete_inverse(0.6, h, 1.0, a).value;
        rounded[i] = h * std::ceil(sample_inverse_marginal(0.6, 1.0, b) / h);
    }
    CHECK(ks_distance(stepped, rounded) < 1.95 * std::sqrt(2.0 / n));
    Stream rng(1, 0);
    CHECK_THROWS_AS(sample_discrete_inverse(0.5, 1e-3, 1e6, rng, 100), ResourceError);
}

TEST_CASE("theta envelopes hold with the fitted constants")
{
    std::vector<double> u;
    for (int i = 0; i <= 40; ++i) u.push_back(0.125 * i);
    for (double beta : {0.3, 0.5, 0.8}) {
        const auto c = fit_theta_constants(beta, 1.0, u);
        CHECK(c.upper >= 1.0);
        CHECK(c.lower >= 1.0);
        for (double x : u) {
            const double p = inverse_density(beta, 1.0, x);
            CHECK(p <= theta_bound(beta, 1.0, x, c.upper) * (1.0 + 1e-12));
            CHECK(p >= theta_lower_bound(beta, 1.0, x, c.lower) * (1.0 - 1e-12));
        }
    }
}

TEST_CASE("hitting time density is the Levy law in a")
{
    for (double a : {0.5, 2.0})
        for (double u : {0.1, 1.0, 7.0})
            CHECK(hitting_time_density(a, u) ==
                  doctest::Approx(a / std::sqrt(2.0 * std::numbers::pi * u * u * u) * std::exp(-a * a / (2.0 * u))));
    boost::math::quadrature::exp_sinh<double> integrator;
    CHECK(integrator.integrate([](double u) { return hitting_time_density(1.3, u); }) == doctest::Approx(1.0).epsilon(1e-9));
}
