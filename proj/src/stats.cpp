#include "spinnet/stats.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace spinnet::stats {

double median(std::vector<double> values) {
    if (values.empty()) throw InvalidSpecError("median of empty sample");
    const std::size_t n = values.size();
    std::sort(values.begin(), values.end());
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

// Linear interpolation quantile on a sorted sample
double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

} // namespace

Quartiles summarize(std::vector<double> values) {
    if (values.empty()) throw InvalidSpecError("summary of empty sample");
    std::sort(values.begin(), values.end());
    Quartiles q;
    q.min = values.front();
    q.max = values.back();
    q.q1 = quantile_sorted(values, 0.25);
    q.median = quantile_sorted(values, 0.5);
    q.q3 = quantile_sorted(values, 0.75);
    return q;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3) throw InvalidSpecError("pearson needs equal lengths >= 3");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) throw ZeroVarianceError("pearson: zero-variance input");
    return sxy / std::sqrt(sxx * syy);
}

ScalingFit scaling_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3) throw InvalidSpecError("scaling_fit needs equal lengths >= 3");
    const std::size_t n = x.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] <= 0.0 || y[i] <= 0.0) throw InvalidSpecError("scaling_fit needs positive values");
        lx[i] = std::log10(x[i]);
        ly[i] = std::log10(y[i]);
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx <= 0.0) throw ZeroVarianceError("scaling_fit: zero-variance abscissa");

    ScalingFit fit;
    fit.exponent = sxy / sxx;
    fit.intercept = my - fit.exponent * mx;

    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (fit.exponent * lx[i] + fit.intercept);
        ss_res += r * r;
    }
    const double dof = static_cast<double>(n) - 2.0;
    const double se = std::sqrt(std::max(ss_res, 0.0) / std::max(dof, 1.0) / sxx);
    const boost::math::students_t dist(std::max(dof, 1.0));
    const double tq = boost::math::quantile(dist, 0.975);
    fit.ci_lo = fit.exponent - tq * se;
    fit.ci_hi = fit.exponent + tq * se;
    return fit;
}

double lilliefors_statistic(std::vector<double> sample) {
    const std::size_t n = sample.size();
    if (n < 4) throw InvalidSpecError("lilliefors statistic needs n >= 4");
    double mean = 0;
    for (double v : sample) mean += v;
    mean /= static_cast<double>(n);
    double var = 0;
    for (double v : sample) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n) - 1.0;
    if (var <= 0.0) throw ZeroVarianceError("lilliefors: zero-variance sample");
    const double sd = std::sqrt(var);

    std::sort(sample.begin(), sample.end());
    const boost::math::normal norm01(0.0, 1.0);
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = (sample[i] - mean) / sd;
        const double cdf = boost::math::cdf(norm01, z);
        const double upper = static_cast<double>(i + 1) / static_cast<double>(n) - cdf;
        const double lower = cdf - static_cast<double>(i) / static_cast<double>(n);
        d = std::max(d, std::max(upper, lower));
    }
    return d;
}

double lilliefors_test(const std::vector<double>& sample, const LillieforsOptions& opts) {
    if (sample.size() < 20) throw InvalidSpecError("lilliefors test needs n >= 20");
    const double observed = lilliefors_statistic(sample);

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    int exceed = 0;
    std::vector<double> draw(sample.size());
    for (int s = 0; s < opts.mc_samples; ++s) {
        for (auto& v : draw) v = normal(rng);
        if (lilliefors_statistic(draw) >= observed) ++exceed;
    }
    return (1.0 + exceed) / (1.0 + static_cast<double>(opts.mc_samples));
}

} // namespace spinnet::stats
