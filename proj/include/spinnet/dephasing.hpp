// dephasing.hpp — sampling of physical pure-dephasing processes and
// eigenbranch continuation of the dephasing operators under Hamiltonian
// perturbation.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "spinnet/errors.hpp"
#include "spinnet/spin_model.hpp"

namespace spinnet::dephasing {

// Pure-dephasing process over N levels: K channels with per-level eigenvalues
// c_{k,n}, normalized so the largest pairwise rate equals gamma.
struct DephasingProcess {
    int n = 0;
    int k = 0;
    double gamma = 0.0;
    Eigen::MatrixXd coeffs;  // k x n

    // Gamma_{mn} = (gamma/2) sum_k (c_{k,m} - c_{k,n})^2
    Eigen::MatrixXd rates() const;

    // Same shape, different overall strength (coefficients untouched).
    DephasingProcess with_gamma(double g) const;
};

// Radical-inverse Halton coordinate for 1-based index.
double halton(std::uint64_t index, std::uint64_t base);
std::vector<std::uint64_t> first_primes(int count);

// Classical-MDS physicality test: sq_dists embeds as squared Euclidean
// distances iff -1/2 J sq_dists J is PSD (eigenvalues >= -1e-10 * trace).
bool is_euclidean_distance_matrix(const Eigen::MatrixXd& sq_dists);

// Point coordinates reproducing sq_dists; rows are channels ordered by
// descending Gram eigenvalue, at most n-1 of them.
Eigen::MatrixXd embed_distance_matrix(const Eigen::MatrixXd& sq_dists);

struct SampleOptions {
    std::uint64_t max_candidates = 1000000;
};

// Draw `count` accepted processes from the Halton sequence over the pairwise
// rate space [0,1]^{n(n-1)/2}; the seed selects a disjoint sequence offset.
std::vector<DephasingProcess> sample_processes(int n, int count, std::uint64_t seed, double gamma,
                                               const SampleOptions& opts = {});

// Map from perturbed eigenvector index to nominal cluster, with the squared
// projection of each perturbed vector onto each nominal eigenspace.
struct BranchAssignment {
    std::vector<int> cluster_of;  // perturbed level -> nominal cluster
    Eigen::MatrixXd overlaps;     // clusters x levels
    double min_assigned_overlap = 1.0;
    bool ambiguous = false;       // only when allow_ambiguous suppressed the throw
};

struct MatchOptions {
    double ambiguity_threshold = 0.5;
    bool allow_ambiguous = false;
};

// Assign each perturbed eigenvector to the nominal cluster maximizing its
// squared projection; per-cluster counts equal nominal multiplicities.
BranchAssignment match_branches(const model::Hamiltonian& nominal, const model::Hamiltonian& perturbed,
                                const MatchOptions& opts = {});

// One coefficient per nominal cluster (levels of a degenerate cluster share
// the coefficient of the cluster's lowest level).
Eigen::MatrixXd cluster_coefficients(const DephasingProcess& process, const model::Hamiltonian& nominal);

// V_k = sum_n c_{k,n} Pi_n over nominal clusters.
std::vector<Eigen::MatrixXd> nominal_dephasing_ops(const DephasingProcess& process,
                                                   const model::Hamiltonian& nominal);

// ~V_k = sum_j c_{k,cluster(j)} v_j v_j^T with branch-inherited coefficients.
std::vector<Eigen::MatrixXd> perturbed_dephasing_ops(const DephasingProcess& process,
                                                     const model::Hamiltonian& perturbed,
                                                     const BranchAssignment& assignment,
                                                     const model::Hamiltonian& nominal);

// Pairwise rates between perturbed levels under an assignment:
// (gamma/2) sum_k (c_{k,g(m)} - c_{k,g(n)})^2.
Eigen::MatrixXd effective_rates(const DephasingProcess& process, const model::Hamiltonian& nominal,
                                const BranchAssignment& assignment);

} // namespace spinnet::dephasing
