#include "spinnet/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>

namespace spinnet::transfer {

namespace {

std::vector<double> dedup_sorted(std::vector<double> vals, double tol) {
    std::sort(vals.begin(), vals.end());
    std::vector<double> out;
    for (double v : vals) {
        if (out.empty() || v - out.back() > tol) out.push_back(v);
    }
    return out;
}

} // namespace

FrequencyCandidates candidate_frequencies(const model::Hamiltonian& h, double dedup_tol) {
    std::vector<double> omegas{0.0};
    const int n = h.size();
    for (int m = 0; m < n; ++m) {
        for (int j = m + 1; j < n; ++j) {
            omegas.push_back(std::abs(h.eigenvalues(j) - h.eigenvalues(m)));
        }
    }
    return FrequencyCandidates{dedup_sorted(std::move(omegas), dedup_tol), 0.0};
}

FrequencyCandidates merge_candidates(const FrequencyCandidates& a, const FrequencyCandidates& b,
                                     double dedup_tol) {
    std::vector<double> all = a.omegas;
    all.insert(all.end(), b.omegas.begin(), b.omegas.end());
    return FrequencyCandidates{dedup_sorted(std::move(all), dedup_tol), b.source_delta};
}

Eigen::MatrixXcd effective_resolvent(const Eigen::MatrixXd& a, double omega) {
    const auto dim = a.rows();
    Eigen::MatrixXcd m = -a.cast<std::complex<double>>();
    m.diagonal().array() += std::complex<double>(0.0, omega);

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cutoff = static_cast<double>(dim) * std::numeric_limits<double>::epsilon() * sv(0);

    Eigen::VectorXd inv = Eigen::VectorXd::Zero(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

const Eigen::MatrixXcd& ResolventCache::get(const Eigen::MatrixXd& a, double omega) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &omega, sizeof(bits));
    const std::uint64_t key = bits ^ (bloch::matrix_hash(a) * 0x9e3779b97f4a7c15ULL);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
        it = cache_.emplace(key, effective_resolvent(a, omega)).first;
    }
    return it->second;
}

double transfer_norm_at(const Eigen::MatrixXd& a, const Eigen::MatrixXd& s, double delta, double omega,
                        ResolventCache* cache) {
    const Eigen::MatrixXcd* resolvent = nullptr;
    Eigen::MatrixXcd local;
    if (cache != nullptr) {
        resolvent = &cache->get(a, omega);
    } else {
        local = effective_resolvent(a, omega);
        resolvent = &local;
    }
    const Eigen::MatrixXcd t = (*resolvent) * s.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(t);
    return delta * svd.singularValues()(0);
}

namespace {

// Golden-section maximization on [lo, hi]
double golden_max(const std::function<double(double)>& f, double lo, double hi, double* arg) {
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - phi * (hi - lo);
    double x2 = lo + phi * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 60 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if (f1 >= f2) {
        *arg = x1;
        return f1;
    }
    *arg = x2;
    return f2;
}

} // namespace

TransferEvaluation transfer_norm(const Eigen::MatrixXd& a, const Eigen::MatrixXd& s, double delta,
                                 const FrequencyCandidates& candidates, const TransferOptions& opts) {
    if (delta <= 0.0) throw InvalidSpecError("transfer_norm requires delta > 0");
    if (candidates.omegas.empty()) throw InvalidSpecError("no candidate frequencies");

    TransferEvaluation eval;
    eval.delta = delta;
    eval.norm = -1.0;
    eval.table.reserve(candidates.omegas.size());
    for (double omega : candidates.omegas) {
        const double value = transfer_norm_at(a, s, delta, omega, opts.cache);
        eval.table.emplace_back(omega, value);
        if (value > eval.norm) {
            eval.norm = value;
            eval.omega_crit = omega;
        }
    }

    if (opts.refine && eval.omega_crit > 0.0) {
        const double lo = eval.omega_crit * (1.0 - opts.refine_window);
        const double hi = eval.omega_crit * (1.0 + opts.refine_window);
        double arg = eval.omega_crit;
        const double refined = golden_max(
            [&](double w) { return transfer_norm_at(a, s, delta, w, nullptr); }, lo, hi, &arg);
        if (refined > eval.norm) {
            eval.norm = refined;
            eval.omega_crit = arg;
        }
    }
    return eval;
}

std::vector<std::complex<double>> poles(const Eigen::MatrixXd& a_tilde) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(a_tilde);
    if (solver.info() != Eigen::Success) throw Error("pole computation failed");
    std::vector<std::complex<double>> out(static_cast<std::size_t>(a_tilde.rows()));
    for (Eigen::Index i = 0; i < a_tilde.rows(); ++i) out[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
        if (x.imag() != y.imag()) return x.imag() < y.imag();
        return x.real() < y.real();
    });
    return out;
}

} // namespace spinnet::transfer
