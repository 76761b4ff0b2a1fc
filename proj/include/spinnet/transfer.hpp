// transfer.hpp — perturbed transfer function T_delta(i w) = delta (iwI - A)^+ S(delta),
// its norm over candidate eigenfrequencies, and pole data.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <unordered_map>
#include <vector>

#include "spinnet/bloch.hpp"
#include "spinnet/spin_model.hpp"

namespace spinnet::transfer {

// Sorted nonnegative frequencies: 0 plus all pairwise eigenvalue differences.
struct FrequencyCandidates {
    std::vector<double> omegas;
    double source_delta = 0.0;
};

FrequencyCandidates candidate_frequencies(const model::Hamiltonian& h, double dedup_tol = 1e-9);
FrequencyCandidates merge_candidates(const FrequencyCandidates& a, const FrequencyCandidates& b,
                                     double dedup_tol = 1e-9);

// Moore-Penrose pseudoinverse of (iwI - A) via SVD with cutoff
// tau = dim * eps * sigma_max; equals the true inverse away from the spectrum.
Eigen::MatrixXcd effective_resolvent(const Eigen::MatrixXd& a, double omega);

// Reuses pseudoinverses across evaluations with identical (A, omega); the
// nominal A is fixed along a delta grid while candidate frequencies repeat.
class ResolventCache {
public:
    const Eigen::MatrixXcd& get(const Eigen::MatrixXd& a, double omega);

private:
    std::unordered_map<std::uint64_t, Eigen::MatrixXcd> cache_;
};

struct TransferOptions {
    bool refine = false;          // golden-section polish around the argmax
    double refine_window = 0.01;  // +-1% of the critical frequency
    ResolventCache* cache = nullptr;
};

struct TransferEvaluation {
    double delta = 0.0;
    double norm = 0.0;        // max over candidates of sigma_max
    double omega_crit = 0.0;  // argmax (lowest omega on ties)
    std::vector<std::pair<double, double>> table;  // (omega, norm)
};

// sigma_max(delta * (iwI - A)^+ S) for one frequency.
double transfer_norm_at(const Eigen::MatrixXd& a, const Eigen::MatrixXd& s, double delta, double omega,
                        ResolventCache* cache = nullptr);

TransferEvaluation transfer_norm(const Eigen::MatrixXd& a, const Eigen::MatrixXd& s, double delta,
                                 const FrequencyCandidates& candidates, const TransferOptions& opts = {});

// Eigenvalues of the perturbed generator, sorted by imaginary part then real.
std::vector<std::complex<double>> poles(const Eigen::MatrixXd& a_tilde);

} // namespace spinnet::transfer
