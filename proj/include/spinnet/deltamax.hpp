// deltamax.hpp — maximum admissible perturbation strength via the fixed point
// f(delta_max) = delta_max of f(delta) = 1/||T_delta||: log grid, scaled-MAD
// outlier removal, power-law or spline fit, bracketing hybrid root finding.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spinnet/bloch.hpp"
#include "spinnet/dephasing.hpp"
#include "spinnet/spin_model.hpp"
#include "spinnet/transfer.hpp"

namespace spinnet::deltamax {

struct GridSpec {
    double log10_start = -6.0;
    double log10_stop = 0.0;
    int count = 50;

    std::vector<double> deltas() const;
};

struct GridPoint {
    double delta = 0.0;
    double norm = 0.0;
    double omega_crit = 0.0;
    bool outlier = false;
    bool ambiguous = false;  // branch continuation untrustworthy; masked from the fit
};

struct FitModel {
    enum class Type { power_law, spline };
    Type type = Type::power_law;
    double a = 0.0;   // slope of log10 f vs log10 delta
    double b = 0.0;   // intercept
    double r2 = 0.0;  // of the linear fit (reported for both branches)
};

struct DeltaMaxResult {
    std::optional<double> delta_max;
    FitModel fit;
    std::vector<GridPoint> grid;
    std::vector<int> outlier_indices;
    std::vector<double> fit_residuals;  // per unmasked point
    double fp_residual = 0.0;           // |f(delta_max) - delta_max| / delta_max
    bool closed_system = false;         // gamma = 0: unbounded-norm regime, no fixed point
    std::string failure;                // empty on success
};

// true = flagged; |y - median| > 3 * 1.4826 * median(|y - median|)
std::vector<bool> remove_outliers(const std::vector<double>& y);

// Natural cubic spline through (x, y), x strictly increasing.
class NaturalCubicSpline {
public:
    NaturalCubicSpline(std::vector<double> x, std::vector<double> y);
    double operator()(double x) const;
    const std::vector<double>& knots() const { return x_; }

private:
    std::vector<double> x_, y_, m_;  // m_ = second derivatives
};

// Brent-style bracketing hybrid (bisection + secant + inverse quadratic
// interpolation); requires f(lo) and f(hi) of opposite sign.
double brent_root(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12);

struct FitOptions {
    double r2_threshold = 0.995;
    double root_tol = 1e-12;
};

struct FitOutcome {
    std::optional<double> delta_max;
    FitModel fit;
    std::vector<double> residuals;
};

// x = log10 delta, y = log10 f on unmasked points. Power-law branch when
// R^2 >= threshold (closed form 10^{-b/(a-1)}), spline + root search otherwise;
// nullopt when the spline never crosses the identity line.
FitOutcome fit_and_solve(const std::vector<double>& x, const std::vector<double>& y, const FitOptions& opts = {});

struct Config {
    GridSpec grid;
    FitOptions fit;
    bool refine = false;
    double ambiguity_threshold = 0.5;
    double fixed_point_tol = 1e-2;
    bool include_nominal_candidates = true;
};

// End-to-end: per-delta assemble + transfer norm, outlier mask, fit, root,
// and a direct re-evaluation of f at the reported delta_max.
DeltaMaxResult delta_max(const model::Hamiltonian& h, const model::PerturbationStructure& structure,
                         const dephasing::DephasingProcess& process, const Config& cfg,
                         const bloch::HermitianBasis& basis, const bloch::BlochGenerator& nominal);

} // namespace spinnet::deltamax
