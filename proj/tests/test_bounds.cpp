#include <doctest.h>

#include "fracsub/bounds.hpp"
#include "fracsub/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

using namespace fracsub;

namespace {

EnvelopeParams params(int dim, double alpha = 2.0, double beta = 0.5)
{
    EnvelopeParams p;
    p.c = 1.0;
    p.beta = beta;
    p.alpha = alpha;
    p.dim = dim;
    p.m = 4;
    p.epsilon = 0.1;
    return p;
}

}  // namespace

TEST_CASE("diffusive envelope plug-in values")
{
    CHECK(hat_p_beta_diffusive(params(3), 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(tilde_p_beta_diffusive(params(1), 1.0, 0.0) == doctest::Approx(std::numbers::e).epsilon(1e-14));
    CHECK(hat_q_l_beta(params(1), 3, 1.0, 0.0) == doctest::Approx(std::numbers::e).epsilon(1e-14));
    // floor(4 / 1.5) = 2, so r = T^{beta/2} halves twice.
    const double T = 2.0;
    const double r = std::pow(T, 0.25);
    CHECK(tilde_q_m_beta(params(1), T, r) / tilde_q_m_beta(params(1), T, 0.0) == doctest::Approx(0.25));
}

TEST_CASE("envelopes are nonincreasing in r")
{
    for (int d : {1, 2, 3}) {
        double prev_hat = INFINITY;
        double prev_tilde = INFINITY;
        for (double r = 0.05; r < 8.0; r += 0.05) {
            const double hat = hat_p_beta_diffusive(params(d), 1.3, r);
            const double tilde = tilde_p_beta_diffusive(params(d), 1.3, r);
            CHECK(hat <= prev_hat);
            CHECK(tilde <= prev_tilde);
            prev_hat = hat;
            prev_tilde = tilde;
        }
    }
}

TEST_CASE("polynomial tails dominate stretched exponentials")
{
    for (double r : {20.0, 50.0, 200.0})
        CHECK(tilde_q_m_beta(params(1), 1.0, r) > tilde_p_beta_diffusive(params(1), 1.0, r));
}

TEST_CASE("diagonal singularities")
{
    CHECK_THROWS_AS(hat_p_beta_diffusive(params(2), 1.0, 0.0), SingularityError);
    CHECK_THROWS_AS(hat_q_l_beta(params(3), 2, 1.0, 0.0), SingularityError);
    CHECK_THROWS_AS(stable_envelopes(params(2, 1.5), 1.0, 0.0), SingularityError);
    CHECK_NOTHROW(stable_envelopes(params(1, 1.5), 1.0, 0.0));
    CHECK_THROWS_AS(hat_q_l_beta(params(1), 0, 1.0, 1.0), ParameterError);
    auto bad = params(1);
    bad.c = 0.5;
    CHECK_THROWS_AS(hat_p_beta_diffusive(bad, 1.0, 1.0), ParameterError);
}

TEST_CASE("stable envelope plug-in values and branch split")
{
    const auto p = params(1, 1.5);
    CHECK(stable_envelopes(p, 1.0, 2.0).hat == doctest::Approx(std::numbers::e / std::pow(2.0, 2.5)).epsilon(1e-14));
    CHECK(stable_envelopes(p, 1.0, 0.0).tilde == doctest::Approx(std::numbers::e).epsilon(1e-14));

    const double T = 3.0;
    const double split = std::pow(T, 0.5 / 1.5);
    const double front = std::exp(std::pow(T, 0.5 / 1.5));
    const double inside = split * (1.0 - 1e-9);
    const double outside = split * (1.0 + 1e-9);
    CHECK(stable_envelopes(p, T, inside).hat ==
          doctest::Approx(front / (std::pow(T, 0.5) * std::pow(inside, 1.0 - 1.5))).epsilon(1e-13));
    CHECK(stable_envelopes(p, T, outside).hat ==
          doctest::Approx(front * std::pow(T, 0.5) / std::pow(outside, 2.5)).epsilon(1e-13));
}

TEST_CASE("error envelopes")
{
    const auto e = error_envelopes(params(3), 1.0, 1.0, 1e-3);
    CHECK(e.time == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::isnan(e.stable));

    const auto a = error_envelopes(params(1), 1.0, 0.7, 1e-3);
    const auto b = error_envelopes(params(1), 1.0, 0.7, 4e-3);
    CHECK(b.euler_total() == doctest::Approx(4.0 * a.euler_total()).epsilon(1e-14));
    CHECK(a.space_nollt > 0.0);
    CHECK(std::isfinite(a.space_llt));

    auto p = params(1);
    const double at_one = error_envelopes(p, 1.0, 0.7, 1.0).space_nollt;
    p.epsilon = 0.19;
    CHECK(error_envelopes(p, 1.0, 0.7, 1.0).space_nollt == doctest::Approx(at_one).epsilon(1e-14));

    const auto s = error_envelopes(params(1, 1.5), 1.0, 0.5, 1e-3);
    CHECK(s.stable > 0.0);
    CHECK(s.stable_total() == doctest::Approx(1e-3 * s.stable));
}

TEST_CASE("diagonal exponent of the stable branch meets the diffusive one at alpha = 2")
{
    for (int d : {3, 4, 5}) {
        const double alpha = 2.0;
        CHECK(d - alpha == doctest::Approx(d - 2));
    }
}

TEST_CASE("two-sided bound shapes")
{
    const auto p = params(2);
    CHECK_THROWS_AS(two_sided_upper(Regime::diffusive, p, 1.0, 0.0), SingularityError);
    const double seam = std::pow(1.0, 0.25);
    CHECK(two_sided_upper(Regime::diffusive, p, 1.0, seam) ==
          doctest::Approx(two_sided_upper(Regime::diffusive, p, 1.0, seam * (1.0 + 1e-12))).epsilon(1e-9));
    for (int d : {1, 3})
        for (double r : {0.3, 1.0, 3.0}) {
            CHECK(two_sided_upper(Regime::diffusive, params(d), 1.0, r) > 0.0);
            CHECK(two_sided_lower(Regime::diffusive, params(d), 1.0, r) > 0.0);
            CHECK(two_sided_lower(Regime::diffusive, params(d), 1.0, r) <=
                  two_sided_upper(Regime::diffusive, params(d), 1.0, r));
        }
    CHECK(two_sided_upper(Regime::stable, params(1, 1.5), 1.0, 0.0) == doctest::Approx(std::numbers::e));
    CHECK(two_sided_singular_at_origin(Regime::stable, params(1, 0.8)));
}

TEST_CASE("self-sandwich gives unit upper constant")
{
    SandwichParams sp;
    sp.envelope = params(1);
    DensityGrid grid;
    for (int i = 0; i <= 40; ++i) {
        const double r = 0.1 * i;
        grid.points.push_back(r);
        grid.values.push_back(two_sided_upper(Regime::diffusive, sp.envelope, 1.0, r));
    }
    const auto report = two_sided_check(grid, Regime::diffusive, sp);
    CHECK(report.c_up == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(report.pass);
    for (const auto& row : report.rows) CHECK(row.slack_up == doctest::Approx(0.0));

    std::ostringstream csv;
    write_sandwich_csv(csv, report);
    const std::string text = csv.str();
    CHECK(text.rfind("r,density,lower_env,upper_env,slack_low,slack_up\n", 0) == 0);
    CHECK(text.find("\n# c_up=") != std::string::npos);
}

TEST_CASE("sandwich rejects singular grids")
{
    SandwichParams sp;
    sp.envelope = params(2);
    DensityGrid grid;
    grid.points = {0.0, 1.0};
    grid.values = {1.0, 0.5};
    CHECK_THROWS_AS(two_sided_check(grid, Regime::diffusive, sp), ParameterError);
}

TEST_CASE("reference densities are sandwiched")
{
    std::vector<double> pts;
    for (int i = 0; i <= 80; ++i) pts.push_back(0.05 * i);
    for (double alpha : {2.0, 1.5}) {
        const ReferenceDensity q(0.5, alpha, 1, {0.0}, 1.0);
        SandwichParams sp;
        sp.envelope = params(1, alpha);
        sp.c_upper = alpha < 2.0 ? 1.0 : 2.0;
        sp.c_lower = sp.c_upper;
        const auto report =
            two_sided_check(reference_density_grid(q, 1.0, pts), alpha < 2.0 ? Regime::stable : Regime::diffusive, sp);
        CHECK(report.pass);
        CHECK(report.ratio() <= 1e6);
        for (const auto& row : report.rows) {
            CHECK(row.slack_low >= -1e-15);
            CHECK(row.slack_up >= -1e-15);
        }
    }
}
