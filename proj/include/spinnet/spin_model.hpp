// spin_model.hpp — XX chain/ring Hamiltonians in the single-excitation subspace,
// energy-landscape controls, and structured Hamiltonian perturbations.

#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "spinnet/errors.hpp"

namespace spinnet::model {

enum class Topology { chain, ring };

std::string to_string(Topology t);
Topology topology_from_string(const std::string& s);

// Nominal network: uniform nearest-neighbor coupling plus diagonal biases D_n.
struct NetworkSpec {
    Topology topology = Topology::chain;
    int n = 0;
    double coupling = 1.0;
    Eigen::VectorXd controls;  // size n; empty means all zero

    void validate() const;  // throws InvalidSpecError
    Eigen::VectorXd control_vector() const;  // always size n
};

// Which matrix element carries the uncertainty. Indices are 1-based:
// coupling:n perturbs the (n,n+1) bond, diagonal:n the n-th bias,
// ring_closure the (1,N) bond of a ring.
struct PerturbationKind {
    enum class Type { coupling, ring_closure, diagonal };
    Type type = Type::coupling;
    int index = 1;

    static PerturbationKind parse(const std::string& text);  // "coupling:1", "diagonal:3", "ring_closure"
    std::string str() const;
};

// 0/1 symmetric structure matrix of a basic perturbation.
struct PerturbationStructure {
    PerturbationKind kind;
    Eigen::MatrixXd matrix;
};

// Eigendecomposed Hamiltonian with degeneracy clustering. Eigenvalues ascend;
// eigenvector signs are canonicalized so repeated runs are bit-identical.
struct Hamiltonian {
    Eigen::MatrixXd matrix;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;            // columns
    std::vector<int> cluster_of;             // level -> cluster index
    std::vector<std::vector<int>> clusters;  // cluster -> ascending level indices
    double degeneracy_tol = 0.0;

    int size() const { return static_cast<int>(eigenvalues.size()); }
    int cluster_count() const { return static_cast<int>(clusters.size()); }
    Eigen::MatrixXd projector(int cluster) const;
};

// Eigendecompose + cluster an arbitrary real symmetric matrix.
Hamiltonian decompose(const Eigen::MatrixXd& h);

Hamiltonian build_hamiltonian(const NetworkSpec& spec);
PerturbationStructure build_perturbation(const NetworkSpec& spec, const PerturbationKind& kind);
std::vector<PerturbationKind> coupling_perturbations(const NetworkSpec& spec);  // all bonds incl. ring closure

// H + delta * S, re-decomposed. delta = 0 returns a bitwise copy of h.
Hamiltonian perturb(const Hamiltonian& h, const PerturbationStructure& s, double delta);

} // namespace spinnet::model
