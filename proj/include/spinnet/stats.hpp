// stats.hpp — statistics utilities for the batch studies: Pearson correlation,
// normality test with a Monte Carlo null, and log-log scaling fits.

#pragma once

#include <cstdint>
#include <vector>

#include "spinnet/errors.hpp"

namespace spinnet::stats {

double median(std::vector<double> values);

struct Quartiles {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};
Quartiles summarize(std::vector<double> values);

// Product-moment correlation; throws ZeroVarianceError on constant input.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct ScalingFit {
    double exponent = 0.0;
    double intercept = 0.0;  // log10 prefactor
    double ci_lo = 0.0;      // 95% interval on the exponent
    double ci_hi = 0.0;
};

// Least squares on (log10 x, log10 y) with a t-distribution interval on the slope.
ScalingFit scaling_fit(const std::vector<double>& x, const std::vector<double>& y);

struct LillieforsOptions {
    int mc_samples = 10000;
    std::uint64_t seed = 12345;
};

// KS distance from the sample to a normal with sample-estimated mean/std.
double lilliefors_statistic(std::vector<double> sample);

// Monte Carlo p-value against simulated normal samples of equal size;
// deterministic given the seed. Sample size must be >= 20.
double lilliefors_test(const std::vector<double>& sample, const LillieforsOptions& opts = {});

} // namespace spinnet::stats
