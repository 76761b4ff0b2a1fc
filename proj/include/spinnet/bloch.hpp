// bloch.hpp — real N²×N² dynamical generators over an orthonormal Hermitian
// operator basis, and the dephasing-structured perturbation S(δ).

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "spinnet/dephasing.hpp"
#include "spinnet/spin_model.hpp"

namespace spinnet::bloch {

// Orthonormal Hermitian basis in fixed order: identity/sqrt(N), symmetric
// pairs X_{mn}, antisymmetric pairs Y_{mn} (both m<n lexicographic), then the
// diagonal Z_l ladder.
struct HermitianBasis {
    int n = 0;
    std::vector<Eigen::MatrixXcd> elements;

    int dim() const { return n * n; }
};

HermitianBasis build_basis(int n);

// (A_H)_{ab} = Tr(sigma_a (-i)[H, sigma_b]); real antisymmetric.
Eigen::MatrixXd hamiltonian_generator(const Eigen::MatrixXcd& h, const HermitianBasis& basis);

// entry (a,b) = gamma sum_k Tr(sigma_a (V_k sigma_b V_k - 1/2 {V_k^2, sigma_b}));
// real symmetric negative semidefinite.
Eigen::MatrixXd dephasing_generator(const std::vector<Eigen::MatrixXd>& ops, double gamma,
                                    const HermitianBasis& basis);

struct BlochGenerator {
    Eigen::MatrixXd a;
    int n = 0;
    double delta = 0.0;
    std::uint64_t hamiltonian_hash = 0;
    std::uint64_t process_hash = 0;
};

struct StructuredPerturbation {
    Eigen::MatrixXd s;  // (A(delta) - A) / delta
    double delta = 0.0;
};

std::uint64_t matrix_hash(const Eigen::MatrixXd& m);

// Nominal A = A_H + sum_k A_{V_k} for the process attached to H's clusters.
BlochGenerator nominal_generator(const model::Hamiltonian& h, const dephasing::DephasingProcess& process,
                                 const HermitianBasis& basis);

struct AssembleResult {
    BlochGenerator perturbed;            // A(delta)
    StructuredPerturbation structure;    // S(delta)
    model::Hamiltonian hamiltonian;      // H + delta S
    dephasing::BranchAssignment assignment;
};

// Build H(delta), continue the dephasing operators along eigenbranches, and
// form A(delta) with S(delta) = (A(delta) - A)/delta. delta must be > 0.
AssembleResult assemble(const model::Hamiltonian& h, const dephasing::DephasingProcess& process, double delta,
                        const model::PerturbationStructure& structure, const BlochGenerator& nominal,
                        const HermitianBasis& basis, const dephasing::MatchOptions& match = {});

} // namespace spinnet::bloch
