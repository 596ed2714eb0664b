#include "fracsub/stats.hpp"

#include "fracsub/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fracsub {

double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf)
{
    if (samples.empty()) throw ParameterError("KS distance needs samples");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    return d;
}

double ks_distance(std::span<const double> a, std::span<const double> b)
{
    if (a.empty() || b.empty()) throw ParameterError("KS distance needs samples");
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double n = static_cast<double>(x.size());
    const double m = static_cast<double>(y.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(i / n - j / m));
    }
    return d;
}

SlopeFit loglog_slope(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2) throw ParameterError("slope fit needs at least two (x, y) pairs");
    const std::size_t n = x.size();
    double mx = 0.0;
    double my = 0.0;
    std::vector<double> lx(n);
    std::vector<double> ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ParameterError("log-log fit needs positive values");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) throw ParameterError("slope fit needs distinct x values");
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (n > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = ly[i] - fit.intercept - fit.slope * lx[i];
            rss += e * e;
        }
        fit.std_error = std::sqrt(rss / (n - 2) / sxx);
    }
    return fit;
}

}  // namespace fracsub
