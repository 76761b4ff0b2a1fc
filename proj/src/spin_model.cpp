#include "spinnet/spin_model.hpp"

#include <cmath>
#include <sstream>

namespace spinnet::model {

std::string to_string(Topology t) {
    return t == Topology::chain ? "chain" : "ring";
}

Topology topology_from_string(const std::string& s) {
    if (s == "chain") return Topology::chain;
    if (s == "ring") return Topology::ring;
    throw InvalidSpecError("unknown topology: " + s);
}

void NetworkSpec::validate() const {
    if (n < 2) {
        throw InvalidSpecError("network size must be at least 2, got " + std::to_string(n));
    }
    if (controls.size() != 0 && controls.size() != n) {
        throw InvalidSpecError("control vector length " + std::to_string(controls.size()) +
                               " does not match n=" + std::to_string(n));
    }
}

Eigen::VectorXd NetworkSpec::control_vector() const {
    if (controls.size() == n) return controls;
    return Eigen::VectorXd::Zero(n);
}

PerturbationKind PerturbationKind::parse(const std::string& text) {
    PerturbationKind k;
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    if (name == "ring_closure") {
        if (colon != std::string::npos) throw InvalidSpecError("ring_closure takes no index: " + text);
        k.type = Type::ring_closure;
        k.index = 0;
        return k;
    }
    if (colon == std::string::npos) throw InvalidSpecError("perturbation needs an index: " + text);
    k.index = std::stoi(text.substr(colon + 1));
    if (name == "coupling") k.type = Type::coupling;
    else if (name == "diagonal") k.type = Type::diagonal;
    else throw InvalidSpecError("unknown perturbation kind: " + text);
    return k;
}

std::string PerturbationKind::str() const {
    switch (type) {
        case Type::ring_closure: return "ring_closure";
        case Type::coupling: return "coupling:" + std::to_string(index);
        case Type::diagonal: return "diagonal:" + std::to_string(index);
    }
    return "?";
}

Eigen::MatrixXd Hamiltonian::projector(int cluster) const {
    const int n = size();
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (int level : clusters.at(static_cast<std::size_t>(cluster))) {
        p.noalias() += eigenvectors.col(level) * eigenvectors.col(level).transpose();
    }
    return p;
}

namespace {

// Deterministic sign: the largest-|entry| component of each eigenvector is positive.
void canonicalize_signs(Eigen::MatrixXd& vecs) {
    for (Eigen::Index j = 0; j < vecs.cols(); ++j) {
        Eigen::Index imax = 0;
        vecs.col(j).cwiseAbs().maxCoeff(&imax);
        if (vecs(imax, j) < 0.0) vecs.col(j) = -vecs.col(j);
    }
}

} // namespace

Hamiltonian decompose(const Eigen::MatrixXd& h) {
    if (h.rows() != h.cols() || h.rows() < 1) {
        throw InvalidSpecError("Hamiltonian must be square");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    if (solver.info() != Eigen::Success) {
        throw Error("eigendecomposition failed");
    }
    Hamiltonian out;
    out.matrix = h;
    out.eigenvalues = solver.eigenvalues();
    out.eigenvectors = solver.eigenvectors();
    canonicalize_signs(out.eigenvectors);

    const double norm2 = out.eigenvalues.cwiseAbs().maxCoeff();
    out.degeneracy_tol = 1e-9 * std::max(1.0, norm2);

    const int n = out.size();
    out.cluster_of.assign(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        if (i == 0 || out.eigenvalues(i) - out.eigenvalues(i - 1) >= out.degeneracy_tol) {
            out.clusters.push_back({});
        }
        out.clusters.back().push_back(i);
        out.cluster_of[static_cast<std::size_t>(i)] = static_cast<int>(out.clusters.size()) - 1;
    }
    return out;
}

Hamiltonian build_hamiltonian(const NetworkSpec& spec) {
    spec.validate();
    const int n = spec.n;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) {
        h(i, i + 1) = spec.coupling;
        h(i + 1, i) = spec.coupling;
    }
    if (spec.topology == Topology::ring) {
        h(0, n - 1) += spec.coupling;
        h(n - 1, 0) += spec.coupling;
    }
    h.diagonal() += spec.control_vector();
    return decompose(h);
}

PerturbationStructure build_perturbation(const NetworkSpec& spec, const PerturbationKind& kind) {
    spec.validate();
    const int n = spec.n;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    using T = PerturbationKind::Type;
    switch (kind.type) {
        case T::coupling:
            if (kind.index < 1 || kind.index > n - 1) {
                throw IndexRangeError("coupling index out of range: " + kind.str());
            }
            m(kind.index - 1, kind.index) = 1.0;
            m(kind.index, kind.index - 1) = 1.0;
            break;
        case T::ring_closure:
            if (spec.topology != Topology::ring) {
                throw TopologyMismatchError("ring_closure perturbation requires a ring");
            }
            m(0, n - 1) = 1.0;
            m(n - 1, 0) = 1.0;
            break;
        case T::diagonal:
            if (kind.index < 1 || kind.index > n) {
                throw IndexRangeError("diagonal index out of range: " + kind.str());
            }
            m(kind.index - 1, kind.index - 1) = 1.0;
            break;
    }
    return PerturbationStructure{kind, std::move(m)};
}

std::vector<PerturbationKind> coupling_perturbations(const NetworkSpec& spec) {
    spec.validate();
    std::vector<PerturbationKind> kinds;
    for (int i = 1; i <= spec.n - 1; ++i) {
        kinds.push_back(PerturbationKind{PerturbationKind::Type::coupling, i});
    }
    if (spec.topology == Topology::ring) {
        kinds.push_back(PerturbationKind{PerturbationKind::Type::ring_closure, 0});
    }
    return kinds;
}

Hamiltonian perturb(const Hamiltonian& h, const PerturbationStructure& s, double delta) {
    if (s.matrix.rows() != h.matrix.rows()) {
        throw InvalidSpecError("perturbation dimension mismatch");
    }
    if (delta == 0.0) return h;
    return decompose(h.matrix + delta * s.matrix);
}

} // namespace spinnet::model
