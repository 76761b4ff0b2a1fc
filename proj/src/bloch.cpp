#include "spinnet/bloch.hpp"

#include <cmath>
#include <complex>
#include <cstring>
#include <functional>

namespace spinnet::bloch {

namespace {

using Cplx = std::complex<double>;

Eigen::MatrixXcd unit_matrix(int n, int row, int col) {
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(n, n);
    e(row, col) = Cplx(1.0, 0.0);
    return e;
}

// Tr(sigma * m) for Hermitian sigma
Cplx trace_product(const Eigen::MatrixXcd& sigma, const Eigen::MatrixXcd& m) {
    return (sigma.cwiseProduct(m.transpose())).sum();
}

// Project a superoperator action L(sigma_b) onto the basis: entry (a,b).
Eigen::MatrixXd transcribe(const HermitianBasis& basis,
                           const std::function<Eigen::MatrixXcd(const Eigen::MatrixXcd&)>& apply) {
    const int d = basis.dim();
    Eigen::MatrixXd a(d, d);
    for (int b = 0; b < d; ++b) {
        const Eigen::MatrixXcd image = apply(basis.elements[static_cast<std::size_t>(b)]);
        for (int r = 0; r < d; ++r) {
            a(r, b) = trace_product(basis.elements[static_cast<std::size_t>(r)], image).real();
        }
    }
    return a;
}

} // namespace

HermitianBasis build_basis(int n) {
    if (n < 2) throw InvalidSpecError("basis requires n >= 2");
    HermitianBasis basis;
    basis.n = n;
    basis.elements.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));

    basis.elements.push_back(Eigen::MatrixXcd::Identity(n, n) / std::sqrt(static_cast<double>(n)));

    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int m = 0; m < n; ++m) {
        for (int j = m + 1; j < n; ++j) {
            basis.elements.push_back(inv_sqrt2 * (unit_matrix(n, m, j) + unit_matrix(n, j, m)));
        }
    }
    const Cplx minus_i(0.0, -1.0);
    for (int m = 0; m < n; ++m) {
        for (int j = m + 1; j < n; ++j) {
            basis.elements.push_back(inv_sqrt2 * minus_i * (unit_matrix(n, m, j) - unit_matrix(n, j, m)));
        }
    }
    for (int l = 1; l < n; ++l) {
        Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(n, n);
        for (int j = 0; j < l; ++j) z(j, j) = 1.0;
        z(l, l) = -static_cast<double>(l);
        basis.elements.push_back(z / std::sqrt(static_cast<double>(l) * (l + 1.0)));
    }
    return basis;
}

Eigen::MatrixXd hamiltonian_generator(const Eigen::MatrixXcd& h, const HermitianBasis& basis) {
    if (h.rows() != basis.n || h.cols() != basis.n) {
        throw InvalidSpecError("hamiltonian_generator: dimension mismatch");
    }
    const Cplx minus_i(0.0, -1.0);
    return transcribe(basis, [&](const Eigen::MatrixXcd& sigma) -> Eigen::MatrixXcd {
        return minus_i * (h * sigma - sigma * h);
    });
}

Eigen::MatrixXd dephasing_generator(const std::vector<Eigen::MatrixXd>& ops, double gamma,
                                    const HermitianBasis& basis) {
    for (const auto& v : ops) {
        if (v.rows() != basis.n || v.cols() != basis.n) {
            throw InvalidSpecError("dephasing_generator: dimension mismatch");
        }
    }
    std::vector<Eigen::MatrixXd> squares;
    squares.reserve(ops.size());
    for (const auto& v : ops) squares.push_back(v * v);

    return transcribe(basis, [&](const Eigen::MatrixXcd& sigma) -> Eigen::MatrixXcd {
        Eigen::MatrixXcd image = Eigen::MatrixXcd::Zero(basis.n, basis.n);
        for (std::size_t k = 0; k < ops.size(); ++k) {
            image += ops[k] * sigma * ops[k] - 0.5 * (squares[k] * sigma + sigma * squares[k]);
        }
        return gamma * image;
    });
}

std::uint64_t matrix_hash(const Eigen::MatrixXd& m) {
    // FNV-1a over the raw doubles; provenance only, not cryptographic
    std::uint64_t h = 1469598103934665603ULL;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        std::uint64_t bits = 0;
        const double v = m.data()[i];
        std::memcpy(&bits, &v, sizeof(bits));
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xffULL;
            h *= 1099511628211ULL;
        }
    }
    return h;
}

BlochGenerator nominal_generator(const model::Hamiltonian& h, const dephasing::DephasingProcess& process,
                                 const HermitianBasis& basis) {
    BlochGenerator gen;
    gen.n = h.size();
    gen.delta = 0.0;
    gen.a = hamiltonian_generator(h.matrix.cast<Cplx>(), basis);
    if (process.gamma > 0.0) {
        gen.a += dephasing_generator(dephasing::nominal_dephasing_ops(process, h), process.gamma, basis);
    }
    gen.hamiltonian_hash = matrix_hash(h.matrix);
    gen.process_hash = matrix_hash(process.coeffs) ^ matrix_hash(Eigen::MatrixXd::Constant(1, 1, process.gamma));
    return gen;
}

AssembleResult assemble(const model::Hamiltonian& h, const dephasing::DephasingProcess& process, double delta,
                        const model::PerturbationStructure& structure, const BlochGenerator& nominal,
                        const HermitianBasis& basis, const dephasing::MatchOptions& match) {
    if (delta <= 0.0) {
        throw InvalidSpecError("assemble requires delta > 0; S(0) exists only as a limit");
    }
    AssembleResult out;
    out.hamiltonian = model::perturb(h, structure, delta);
    out.assignment = dephasing::match_branches(h, out.hamiltonian, match);

    out.perturbed.n = h.size();
    out.perturbed.delta = delta;
    out.perturbed.a = hamiltonian_generator(out.hamiltonian.matrix.cast<Cplx>(), basis);
    if (process.gamma > 0.0) {
        const auto ops = dephasing::perturbed_dephasing_ops(process, out.hamiltonian, out.assignment, h);
        out.perturbed.a += dephasing_generator(ops, process.gamma, basis);
    }
    out.perturbed.hamiltonian_hash = matrix_hash(out.hamiltonian.matrix);
    out.perturbed.process_hash = nominal.process_hash;

    out.structure.delta = delta;
    out.structure.s = (out.perturbed.a - nominal.a) / delta;
    return out;
}

} // namespace spinnet::bloch
