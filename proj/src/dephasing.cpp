#include "spinnet/dephasing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spinnet::dephasing {

Eigen::MatrixXd DephasingProcess::rates() const {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    for (int m = 0; m < n; ++m) {
        for (int j = m + 1; j < n; ++j) {
            const double r = 0.5 * gamma * (coeffs.col(m) - coeffs.col(j)).squaredNorm();
            g(m, j) = r;
            g(j, m) = r;
        }
    }
    return g;
}

DephasingProcess DephasingProcess::with_gamma(double g) const {
    DephasingProcess out = *this;
    out.gamma = g;
    return out;
}

double halton(std::uint64_t index, std::uint64_t base) {
    double result = 0.0;
    double f = 1.0 / static_cast<double>(base);
    while (index > 0) {
        result += f * static_cast<double>(index % base);
        index /= base;
        f /= static_cast<double>(base);
    }
    return result;
}

std::vector<std::uint64_t> first_primes(int count) {
    std::vector<std::uint64_t> primes;
    for (std::uint64_t p = 2; static_cast<int>(primes.size()) < count; ++p) {
        bool prime = true;
        for (std::uint64_t q : primes) {
            if (q * q > p) break;
            if (p % q == 0) { prime = false; break; }
        }
        if (prime) primes.push_back(p);
    }
    return primes;
}

namespace {

// Centered Gram matrix -1/2 J D J with J = I - 1/n
Eigen::MatrixXd gram_from_distances(const Eigen::MatrixXd& sq_dists) {
    const auto n = sq_dists.rows();
    const Eigen::MatrixXd j =
        Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    return -0.5 * j * sq_dists * j;
}

void canonicalize_row_signs(Eigen::MatrixXd& rows) {
    for (Eigen::Index k = 0; k < rows.rows(); ++k) {
        Eigen::Index imax = 0;
        rows.row(k).cwiseAbs().maxCoeff(&imax);
        if (rows(k, imax) < 0.0) rows.row(k) = -rows.row(k);
    }
}

} // namespace

bool is_euclidean_distance_matrix(const Eigen::MatrixXd& sq_dists) {
    const Eigen::MatrixXd g = gram_from_distances(sq_dists);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g);
    const double floor = -1e-10 * std::max(g.trace(), 0.0);
    return solver.eigenvalues().minCoeff() >= floor;
}

Eigen::MatrixXd embed_distance_matrix(const Eigen::MatrixXd& sq_dists) {
    const auto n = sq_dists.rows();
    const Eigen::MatrixXd g = gram_from_distances(sq_dists);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g);
    const Eigen::VectorXd ev = solver.eigenvalues();  // ascending
    const double cut = 1e-12 * std::max(1.0, g.trace());

    int rank = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (ev(i) > cut) ++rank;
    }
    Eigen::MatrixXd coords(rank, n);
    for (int k = 0; k < rank; ++k) {
        const Eigen::Index src = n - 1 - k;  // descending eigenvalue order
        coords.row(k) = std::sqrt(ev(src)) * solver.eigenvectors().col(src).transpose();
    }
    canonicalize_row_signs(coords);
    return coords;
}

std::vector<DephasingProcess> sample_processes(int n, int count, std::uint64_t seed, double gamma,
                                               const SampleOptions& opts) {
    if (n < 2) throw InvalidSpecError("sample_processes requires n >= 2");
    if (count < 1) throw InvalidSpecError("sample_processes requires count >= 1");
    if (gamma <= 0.0) throw InvalidSpecError("sample_processes requires gamma > 0");

    const int dims = n * (n - 1) / 2;
    const auto bases = first_primes(dims);
    const std::uint64_t start = seed * opts.max_candidates;

    std::vector<DephasingProcess> accepted;
    accepted.reserve(static_cast<std::size_t>(count));
    for (std::uint64_t t = 1; t <= opts.max_candidates; ++t) {
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
        int dim = 0;
        for (int m = 0; m < n; ++m) {
            for (int j = m + 1; j < n; ++j, ++dim) {
                const double x = halton(start + t, bases[static_cast<std::size_t>(dim)]);
                d(m, j) = x;
                d(j, m) = x;
            }
        }
        const double dmax = d.maxCoeff();
        if (dmax < 1e-12) continue;  // cannot be scaled to a target strength
        if (!is_euclidean_distance_matrix(d)) continue;

        DephasingProcess p;
        p.n = n;
        p.gamma = gamma;
        p.coeffs = std::sqrt(2.0 / dmax) * embed_distance_matrix(d);
        p.k = static_cast<int>(p.coeffs.rows());
        accepted.push_back(std::move(p));
        if (static_cast<int>(accepted.size()) == count) return accepted;
    }
    throw SamplingExhaustedError("accepted only " + std::to_string(accepted.size()) + " of " +
                                 std::to_string(count) + " processes within " +
                                 std::to_string(opts.max_candidates) + " candidates");
}

namespace {

// O(n^3) Hungarian algorithm; returns, for each column, the assigned row.
std::vector<int> hungarian_min_cost(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_of_col(static_cast<std::size_t>(n));
    for (int j = 1; j <= n; ++j) row_of_col[static_cast<std::size_t>(j - 1)] = p[static_cast<std::size_t>(j)] - 1;
    return row_of_col;
}

} // namespace

BranchAssignment match_branches(const model::Hamiltonian& nominal, const model::Hamiltonian& perturbed,
                                const MatchOptions& opts) {
    if (nominal.size() != perturbed.size()) {
        throw InvalidSpecError("match_branches: dimension mismatch");
    }
    const int n = nominal.size();
    const int nc = nominal.cluster_count();

    // Squared projections of each perturbed vector onto each nominal eigenspace
    const Eigen::MatrixXd inner = nominal.eigenvectors.transpose() * perturbed.eigenvectors;
    Eigen::MatrixXd overlaps = Eigen::MatrixXd::Zero(nc, n);
    for (int c = 0; c < nc; ++c) {
        for (int level : nominal.clusters[static_cast<std::size_t>(c)]) {
            overlaps.row(c) += inner.row(level).cwiseAbs2();
        }
    }

    // Greedy argmax, falling back to an optimal assignment when multiplicity
    // counts are violated.
    std::vector<int> assigned(static_cast<std::size_t>(n), 0);
    std::vector<int> counts(static_cast<std::size_t>(nc), 0);
    for (int j = 0; j < n; ++j) {
        Eigen::Index best = 0;
        overlaps.col(j).maxCoeff(&best);
        assigned[static_cast<std::size_t>(j)] = static_cast<int>(best);
        counts[static_cast<std::size_t>(best)] += 1;
    }
    bool counts_ok = true;
    for (int c = 0; c < nc; ++c) {
        if (counts[static_cast<std::size_t>(c)] != static_cast<int>(nominal.clusters[static_cast<std::size_t>(c)].size())) {
            counts_ok = false;
            break;
        }
    }
    if (!counts_ok) {
        // Expand clusters into one slot per multiplicity and assign optimally
        std::vector<int> slot_cluster;
        for (int c = 0; c < nc; ++c) {
            for (std::size_t m = 0; m < nominal.clusters[static_cast<std::size_t>(c)].size(); ++m) {
                slot_cluster.push_back(c);
            }
        }
        Eigen::MatrixXd cost(n, n);
        for (int s = 0; s < n; ++s) {
            cost.row(s) = -overlaps.row(slot_cluster[static_cast<std::size_t>(s)]);
        }
        const auto slot_of_level = hungarian_min_cost(cost);
        for (int j = 0; j < n; ++j) {
            assigned[static_cast<std::size_t>(j)] = slot_cluster[static_cast<std::size_t>(slot_of_level[static_cast<std::size_t>(j)])];
        }
    }

    BranchAssignment out;
    out.cluster_of = std::move(assigned);
    out.overlaps = std::move(overlaps);
    out.min_assigned_overlap = 1.0;
    for (int j = 0; j < n; ++j) {
        out.min_assigned_overlap =
            std::min(out.min_assigned_overlap, out.overlaps(out.cluster_of[static_cast<std::size_t>(j)], j));
    }
    if (out.min_assigned_overlap < opts.ambiguity_threshold) {
        if (!opts.allow_ambiguous) {
            throw BranchAmbiguityError("minimum assigned overlap " + std::to_string(out.min_assigned_overlap) +
                                       " below threshold " + std::to_string(opts.ambiguity_threshold));
        }
        out.ambiguous = true;
    }
    return out;
}

Eigen::MatrixXd cluster_coefficients(const DephasingProcess& process, const model::Hamiltonian& nominal) {
    if (process.n != nominal.size()) {
        throw InvalidSpecError("process level count does not match Hamiltonian size");
    }
    const int nc = nominal.cluster_count();
    Eigen::MatrixXd cc(process.k, nc);
    for (int c = 0; c < nc; ++c) {
        cc.col(c) = process.coeffs.col(nominal.clusters[static_cast<std::size_t>(c)].front());
    }
    return cc;
}

namespace {

std::vector<Eigen::MatrixXd> ops_from_levels(const Eigen::MatrixXd& vectors, const Eigen::MatrixXd& cc,
                                             const std::vector<int>& cluster_of) {
    const int n = static_cast<int>(vectors.rows());
    std::vector<Eigen::MatrixXd> ops;
    ops.reserve(static_cast<std::size_t>(cc.rows()));
    for (int k = 0; k < cc.rows(); ++k) {
        Eigen::VectorXd diag(n);
        for (int j = 0; j < n; ++j) diag(j) = cc(k, cluster_of[static_cast<std::size_t>(j)]);
        ops.push_back(vectors * diag.asDiagonal() * vectors.transpose());
    }
    return ops;
}

} // namespace

std::vector<Eigen::MatrixXd> nominal_dephasing_ops(const DephasingProcess& process,
                                                   const model::Hamiltonian& nominal) {
    return ops_from_levels(nominal.eigenvectors, cluster_coefficients(process, nominal), nominal.cluster_of);
}

std::vector<Eigen::MatrixXd> perturbed_dephasing_ops(const DephasingProcess& process,
                                                     const model::Hamiltonian& perturbed,
                                                     const BranchAssignment& assignment,
                                                     const model::Hamiltonian& nominal) {
    if (static_cast<int>(assignment.cluster_of.size()) != perturbed.size()) {
        throw InvalidSpecError("assignment does not match perturbed Hamiltonian");
    }
    return ops_from_levels(perturbed.eigenvectors, cluster_coefficients(process, nominal), assignment.cluster_of);
}

Eigen::MatrixXd effective_rates(const DephasingProcess& process, const model::Hamiltonian& nominal,
                                const BranchAssignment& assignment) {
    const Eigen::MatrixXd cc = cluster_coefficients(process, nominal);
    const int n = static_cast<int>(assignment.cluster_of.size());
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    for (int m = 0; m < n; ++m) {
        for (int j = m + 1; j < n; ++j) {
            const double r = 0.5 * process.gamma *
                             (cc.col(assignment.cluster_of[static_cast<std::size_t>(m)]) -
                              cc.col(assignment.cluster_of[static_cast<std::size_t>(j)]))
                                 .squaredNorm();
            g(m, j) = r;
            g(j, m) = r;
        }
    }
    return g;
}

} // namespace spinnet::dephasing
