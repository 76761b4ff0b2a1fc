#include "spinnet/deltamax.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace spinnet::deltamax {

std::vector<double> GridSpec::deltas() const {
    if (count < 2) throw InvalidSpecError("delta grid needs at least 2 points");
    if (log10_stop <= log10_start) throw InvalidSpecError("delta grid range is empty");
    std::vector<double> out(static_cast<std::size_t>(count));
    const double step = (log10_stop - log10_start) / (count - 1);
    for (int i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = std::pow(10.0, log10_start + step * i);
    }
    return out;
}

namespace {

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    std::sort(v.begin(), v.end());
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

std::vector<bool> remove_outliers(const std::vector<double>& y) {
    if (y.size() < 5) throw InsufficientDataError("outlier removal needs at least 5 points");
    const double med = median_of(y);
    std::vector<double> dev(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) dev[i] = std::abs(y[i] - med);
    const double scaled_mad = 1.4826 * median_of(dev);
    std::vector<bool> mask(y.size(), false);
    for (std::size_t i = 0; i < y.size(); ++i) {
        mask[i] = dev[i] > 3.0 * scaled_mad;
    }
    return mask;
}

NaturalCubicSpline::NaturalCubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 3 || y_.size() != n) throw InsufficientDataError("spline needs at least 3 points");
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (x_[i + 1] <= x_[i]) throw InvalidSpecError("spline knots must be strictly increasing");
    }
    m_.assign(n, 0.0);
    // Thomas solve for interior second derivatives, natural boundary m_0 = m_{n-1} = 0
    std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = x_[i] - x_[i - 1];
        const double h1 = x_[i + 1] - x_[i];
        diag[i] = 2.0 * (h0 + h1);
        upper[i] = h1;
        rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    }
    for (std::size_t i = 2; i + 1 < n; ++i) {
        const double w = (x_[i] - x_[i - 1]) / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
        m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
        if (i == 1) break;
    }
}

double NaturalCubicSpline::operator()(double x) const {
    const std::size_t n = x_.size();
    std::size_t i = 0;
    if (x <= x_.front()) {
        i = 0;
    } else if (x >= x_[n - 2]) {
        i = n - 2;
    } else {
        i = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
    }
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - x) / h;
    const double b = (x - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

double brent_root(const std::function<double(double)>& f, double lo, double hi, double tol) {
    double a = lo, b = hi;
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) throw InvalidSpecError("brent_root requires a sign change");

    double c = b, fc = fb;
    double d = b - a, e = d;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (int iter = 0; iter < 200; ++iter) {
        if ((fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0)) {
            c = a;
            fc = fa;
            e = d = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2.0 * eps * std::abs(b) + 0.5 * tol;
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || std::abs(fb) <= tol) return b;

        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            // secant / inverse quadratic interpolation step
            const double s = fb / fa;
            double p, q;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            const double min1 = 3.0 * xm * q - std::abs(tol1 * q);
            const double min2 = std::abs(e * q);
            if (2.0 * p < std::min(min1, min2)) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
        fb = f(b);
    }
    return b;
}

FitOutcome fit_and_solve(const std::vector<double>& x, const std::vector<double>& y, const FitOptions& opts) {
    const std::size_t n = x.size();
    if (n != y.size()) throw InvalidSpecError("fit_and_solve: length mismatch");
    if (n < 10) throw InsufficientDataError("fit needs at least 10 unmasked points, got " + std::to_string(n));

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double nn = static_cast<double>(n);
    const double denom = nn * sxx - sx * sx;
    const double a = (nn * sxy - sx * sy) / denom;
    const double b = (sy - a * sx) / nn;

    const double ymean = sy / nn;
    double ss_tot = 0, ss_res = 0;
    std::vector<double> residuals(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (a * x[i] + b);
        residuals[i] = r;
        ss_res += r * r;
        ss_tot += (y[i] - ymean) * (y[i] - ymean);
    }
    const double r2 = ss_tot > 1e-24 ? 1.0 - ss_res / ss_tot : (ss_res < 1e-24 ? 1.0 : 0.0);

    FitOutcome out;
    out.residuals = std::move(residuals);
    out.fit.a = a;
    out.fit.b = b;
    out.fit.r2 = r2;

    if (r2 >= opts.r2_threshold) {
        if (std::abs(a - 1.0) < 1e-9) {
            throw DegenerateSlopeError("power-law slope 1: fit parallel to the identity line");
        }
        out.fit.type = FitModel::Type::power_law;
        out.delta_max = std::pow(10.0, -b / (a - 1.0));
        return out;
    }

    out.fit.type = FitModel::Type::spline;
    const NaturalCubicSpline spline(x, y);
    const auto g = [&](double xx) { return spline(xx) - xx; };

    // Scan each knot interval for a sign change, then polish with Brent
    constexpr int kSubdiv = 8;
    double prev_x = x.front();
    double prev_g = g(prev_x);
    if (prev_g == 0.0) {
        out.delta_max = std::pow(10.0, prev_x);
        return out;
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        for (int s = 1; s <= kSubdiv; ++s) {
            const double xx = x[i] + (x[i + 1] - x[i]) * s / kSubdiv;
            const double gg = g(xx);
            if (gg == 0.0) {
                out.delta_max = std::pow(10.0, xx);
                return out;
            }
            if (prev_g * gg < 0.0) {
                const double root = brent_root(g, prev_x, xx, opts.root_tol);
                out.delta_max = std::pow(10.0, root);
                return out;
            }
            prev_x = xx;
            prev_g = gg;
        }
    }
    out.delta_max = std::nullopt;  // no fixed point in the grid range
    return out;
}

namespace {

struct GridEvaluation {
    std::vector<GridPoint> points;
    transfer::FrequencyCandidates nominal_candidates;
};

double evaluate_f(const model::Hamiltonian& h, const model::PerturbationStructure& structure,
                  const dephasing::DephasingProcess& process, const Config& cfg,
                  const bloch::HermitianBasis& basis, const bloch::BlochGenerator& nominal,
                  const transfer::FrequencyCandidates& nominal_candidates, transfer::ResolventCache& cache,
                  double delta, double* omega_crit, bool* ambiguous) {
    dephasing::MatchOptions match;
    match.ambiguity_threshold = cfg.ambiguity_threshold;
    match.allow_ambiguous = true;
    const auto asm_result = bloch::assemble(h, process, delta, structure, nominal, basis, match);
    if (ambiguous != nullptr) *ambiguous = asm_result.assignment.ambiguous;

    auto candidates = transfer::candidate_frequencies(asm_result.hamiltonian);
    candidates.source_delta = delta;
    if (cfg.include_nominal_candidates) {
        candidates = transfer::merge_candidates(nominal_candidates, candidates);
    }
    transfer::TransferOptions topts;
    topts.refine = cfg.refine;
    topts.cache = &cache;
    const auto eval = transfer::transfer_norm(nominal.a, asm_result.structure.s, delta, candidates, topts);
    if (omega_crit != nullptr) *omega_crit = eval.omega_crit;
    return eval.norm > 0.0 ? 1.0 / eval.norm : std::numeric_limits<double>::infinity();
}

} // namespace

DeltaMaxResult delta_max(const model::Hamiltonian& h, const model::PerturbationStructure& structure,
                         const dephasing::DephasingProcess& process, const Config& cfg,
                         const bloch::HermitianBasis& basis, const bloch::BlochGenerator& nominal) {
    DeltaMaxResult result;
    if (process.gamma <= 0.0) {
        result.closed_system = true;
        result.failure = "closed system (gamma = 0): transfer norm unbounded at eigenfrequencies";
        return result;
    }

    const auto nominal_candidates = transfer::candidate_frequencies(h);
    transfer::ResolventCache cache;

    const auto deltas = cfg.grid.deltas();
    result.grid.reserve(deltas.size());
    for (double delta : deltas) {
        GridPoint pt;
        pt.delta = delta;
        const double f = evaluate_f(h, structure, process, cfg, basis, nominal, nominal_candidates, cache,
                                    delta, &pt.omega_crit, &pt.ambiguous);
        pt.norm = std::isinf(f) ? 0.0 : 1.0 / f;
        if (pt.norm <= 0.0) pt.ambiguous = true;  // no usable norm; mask like an ambiguous point
        result.grid.push_back(pt);
    }

    // Outlier mask over the points that survived branch continuation
    std::vector<std::size_t> kept;
    std::vector<double> ys;
    for (std::size_t i = 0; i < result.grid.size(); ++i) {
        if (result.grid[i].ambiguous) continue;
        kept.push_back(i);
        ys.push_back(-std::log10(result.grid[i].norm));
    }
    if (ys.size() >= 5) {
        const auto mask = remove_outliers(ys);
        for (std::size_t j = 0; j < mask.size(); ++j) {
            if (mask[j]) {
                result.grid[kept[j]].outlier = true;
                result.outlier_indices.push_back(static_cast<int>(kept[j]));
            }
        }
    }

    std::vector<double> xs_fit, ys_fit;
    for (std::size_t j = 0; j < kept.size(); ++j) {
        if (result.grid[kept[j]].outlier) continue;
        xs_fit.push_back(std::log10(result.grid[kept[j]].delta));
        ys_fit.push_back(ys[j]);
    }

    auto outcome = fit_and_solve(xs_fit, ys_fit, cfg.fit);
    result.fit = outcome.fit;
    result.fit_residuals = outcome.residuals;
    if (!outcome.delta_max) {
        result.failure = "no fixed point in grid range";
        return result;
    }

    const auto verify = [&](double dm) {
        return evaluate_f(h, structure, process, cfg, basis, nominal, nominal_candidates, cache, dm,
                          nullptr, nullptr);
    };
    double dm = *outcome.delta_max;
    double residual = std::abs(verify(dm) - dm) / dm;

    // A power-law extrapolation that fails direct verification falls back to
    // the spline branch on the same data.
    if (residual > cfg.fixed_point_tol && outcome.fit.type == FitModel::Type::power_law) {
        FitOptions spline_only = cfg.fit;
        spline_only.r2_threshold = std::numeric_limits<double>::infinity();
        auto retry = fit_and_solve(xs_fit, ys_fit, spline_only);
        if (retry.delta_max) {
            const double dm2 = *retry.delta_max;
            const double res2 = std::abs(verify(dm2) - dm2) / dm2;
            if (res2 < residual) {
                dm = dm2;
                residual = res2;
                result.fit = retry.fit;
                result.fit.r2 = outcome.fit.r2;  // keep the linear-fit quality on record
            }
        }
    }

    if (residual > cfg.fixed_point_tol) {
        result.failure = "fixed point failed direct verification";
        return result;
    }
    result.delta_max = dm;
    result.fp_residual = residual;
    return result;
}

} // namespace spinnet::deltamax
