// dynamics.hpp — time-domain propagation in the Bloch representation and
// transfer-fidelity evaluation.

#pragma once

#include <Eigen/Dense>

#include "spinnet/bloch.hpp"

namespace spinnet::dynamics {

struct BlochState {
    Eigen::VectorXd r;
    int n = 0;
};

// r_a = Tr(sigma_a rho); rho must be Hermitian with unit trace.
BlochState encode(const Eigen::MatrixXcd& rho, const bloch::HermitianBasis& basis);
Eigen::MatrixXcd decode(const BlochState& state, const bloch::HermitianBasis& basis);

// r(t) = exp(A t) r0 by scaling-and-squaring Pade.
BlochState propagate(const Eigen::MatrixXd& a, const BlochState& r0, double t);

// Tr(rho_a rho_b) as the Bloch inner product.
double overlap(const BlochState& a, const BlochState& b);

struct FidelityResult {
    double fidelity = 0.0;
    double error = 0.0;
    double tf = 0.0;
};

FidelityResult fidelity(const Eigen::MatrixXd& a, const Eigen::MatrixXcd& rho_in,
                        const Eigen::MatrixXcd& rho_out, double tf, const bloch::HermitianBasis& basis);

// Single-excitation state localized on a 1-based site.
Eigen::MatrixXcd site_state(int n, int site);

} // namespace spinnet::dynamics
