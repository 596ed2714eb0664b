#pragma once

#include "fracsub/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <sstream>
#include <span>
#include <string>
#include <vector>

namespace fracsub::numerics {

/// Globally adaptive Gauss-Kronrod (15/31) on [a, b].
///
/// Bisects the panel with the largest error estimate until the summed
/// estimate is below max(rel_tol * L1, abs_tol) or the panel budget runs out;
/// in the latter case throws NumericalError. `what` names the quantity.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol, double abs_tol, const char* what,
                 std::size_t max_panels = 4000)
{
    if (!(b > a)) {
        return 0.0;
    }
    struct Panel {
        double lo, hi, value, error, l1;
        bool operator<(const Panel& other) const { return error < other.error; }
    };
    auto apply = [&](double lo, double hi) {
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        auto mapped = [&](double x) { return half * f(mid + half * x); };
        double error = 0.0;
        double l1 = 0.0;
        const double value =
            boost::math::quadrature::gauss_kronrod<double, 31>::integrate(mapped, -1.0, 1.0, 0, 0.0, &error, &l1);
        return Panel{lo, hi, value, error, l1};
    };
    std::priority_queue<Panel> panels;
    panels.push(apply(a, b));
    double value = panels.top().value;
    double error = panels.top().error;
    double l1 = panels.top().l1;
    while (error > std::max(rel_tol * l1, abs_tol) && panels.size() < max_panels) {
        const Panel worst = panels.top();
        const double mid = 0.5 * (worst.lo + worst.hi);
        if (!(mid > worst.lo && mid < worst.hi)) {
            break;
        }
        panels.pop();
        const Panel left = apply(worst.lo, mid);
        const Panel right = apply(mid, worst.hi);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        l1 += left.l1 + right.l1 - worst.l1;
        panels.push(left);
        panels.push(right);
    }
    // Running sums drift; recompute once at the end.
    value = 0.0;
    error = 0.0;
    l1 = 0.0;
    for (; !panels.empty(); panels.pop()) {
        value += panels.top().value;
        error += panels.top().error;
        l1 += panels.top().l1;
    }
    if (!std::isfinite(value) || error > std::max(rel_tol * l1, abs_tol) * 16.0) {
        std::ostringstream msg;
        msg.precision(6);
        msg << what << ": quadrature on [" << a << ", " << b << "] reached error " << error << " for value "
            << value << " (L1 " << l1 << ")";
        throw NumericalError(msg.str());
    }
    return value;
}

/// Fixed quadrature rule: nodes and weights.
struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Composite 20-point Gauss-Legendre over consecutive breakpoints.
inline Rule composite_gauss_legendre(std::span<const double> breakpoints)
{
    using gauss = boost::math::quadrature::gauss<double, 20>;
    const auto& abscissa = gauss::abscissa();
    const auto& weight = gauss::weights();
    Rule rule;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        const double lo = breakpoints[i];
        const double hi = breakpoints[i + 1];
        if (!(hi > lo)) {
            continue;
        }
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        // Boost stores the non-negative half of the symmetric rule.
        for (std::size_t k = 0; k < abscissa.size(); ++k) {
            const double x = abscissa[k];
            if (x == 0.0) {
                rule.nodes.push_back(mid);
                rule.weights.push_back(half * weight[k]);
                continue;
            }
            rule.nodes.push_back(mid - half * x);
            rule.weights.push_back(half * weight[k]);
            rule.nodes.push_back(mid + half * x);
            rule.weights.push_back(half * weight[k]);
        }
    }
    return rule;
}

/// Bisection for the root of a monotone function on [lo, hi].
template <class F>
double bisect(F&& f, double lo, double hi, int iterations = 200)
{
    double flo = f(lo);
    for (int i = 0; i < iterations; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace fracsub::numerics
