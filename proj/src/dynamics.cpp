#include "spinnet/dynamics.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace spinnet::dynamics {

BlochState encode(const Eigen::MatrixXcd& rho, const bloch::HermitianBasis& basis) {
    if (rho.rows() != basis.n || rho.cols() != basis.n) {
        throw InvalidSpecError("encode: dimension mismatch");
    }
    if (std::abs(rho.trace().real() - 1.0) > 1e-9 || std::abs(rho.trace().imag()) > 1e-9) {
        throw InvalidSpecError("encode: state must have unit trace");
    }
    BlochState state;
    state.n = basis.n;
    state.r.resize(basis.dim());
    for (int a = 0; a < basis.dim(); ++a) {
        state.r(a) = (basis.elements[static_cast<std::size_t>(a)].cwiseProduct(rho.transpose())).sum().real();
    }
    return state;
}

Eigen::MatrixXcd decode(const BlochState& state, const bloch::HermitianBasis& basis) {
    if (state.r.size() != basis.dim()) throw InvalidSpecError("decode: dimension mismatch");
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(basis.n, basis.n);
    for (int a = 0; a < basis.dim(); ++a) {
        rho += state.r(a) * basis.elements[static_cast<std::size_t>(a)];
    }
    return rho;
}

BlochState propagate(const Eigen::MatrixXd& a, const BlochState& r0, double t) {
    if (t < 0.0) throw InvalidSpecError("propagate requires t >= 0");
    if (a.rows() != r0.r.size()) throw InvalidSpecError("propagate: dimension mismatch");
    BlochState out;
    out.n = r0.n;
    if (t == 0.0) {
        out.r = r0.r;
        return out;
    }
    out.r = (a * t).exp() * r0.r;
    return out;
}

double overlap(const BlochState& a, const BlochState& b) {
    if (a.r.size() != b.r.size()) throw InvalidSpecError("overlap: dimension mismatch");
    return a.r.dot(b.r);
}

FidelityResult fidelity(const Eigen::MatrixXd& a, const Eigen::MatrixXcd& rho_in,
                        const Eigen::MatrixXcd& rho_out, double tf, const bloch::HermitianBasis& basis) {
    const BlochState r0 = encode(rho_in, basis);
    const BlochState target = encode(rho_out, basis);
    const BlochState rt = propagate(a, r0, tf);
    FidelityResult result;
    result.tf = tf;
    result.fidelity = overlap(target, rt);
    result.error = 1.0 - result.fidelity;
    return result;
}

Eigen::MatrixXcd site_state(int n, int site) {
    if (site < 1 || site > n) throw IndexRangeError("site index out of range");
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
    rho(site - 1, site - 1) = 1.0;
    return rho;
}

} // namespace spinnet::dynamics
