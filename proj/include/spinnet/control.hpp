// control.hpp — energy-landscape controllers: diagonal biases D and readout
// time t_f maximizing closed-system transfer fidelity.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "spinnet/spin_model.hpp"

namespace spinnet::control {

struct Controller {
    Eigen::VectorXd d;
    double tf = 0.0;
    double f0 = 0.0;  // achieved closed-system fidelity
    int in_node = 1;  // 1-based
    int out_node = 1;
    std::uint64_t seed = 0;
};

// |<out| exp(-i H(D) t) |in>|^2 for the closed system.
double closed_transfer_fidelity(const model::NetworkSpec& spec, const Eigen::VectorXd& d, int in_node,
                                int out_node, double tf);

struct OptimizeOptions {
    double t_lo = 1.0;
    double t_hi = 30.0;
    int restarts = 100;
    double threshold = 0.99;
    int retain = 20;
    double dedup_distance = 1e-3;
    double bias_range = 5.0;  // restart biases drawn from [-range, range]
    std::uint64_t seed = 0;
    int max_iterations = 2000;
};

// Nelder-Mead with seeded random restarts over (D, t_f); returns controllers
// with f0 >= threshold, deduplicated and ordered by (-f0, lexicographic D).
std::vector<Controller> optimize(const model::NetworkSpec& spec, int in_node, int out_node,
                                 const OptimizeOptions& opts = {});

} // namespace spinnet::control
