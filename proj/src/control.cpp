#include "spinnet/control.hpp"

#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <random>

namespace spinnet::control {

double closed_transfer_fidelity(const model::NetworkSpec& spec, const Eigen::VectorXd& d, int in_node,
                                int out_node, double tf) {
    if (in_node < 1 || in_node > spec.n || out_node < 1 || out_node > spec.n) {
        throw IndexRangeError("transfer node out of range");
    }
    model::NetworkSpec controlled = spec;
    controlled.controls = d;
    const auto h = model::build_hamiltonian(controlled);

    std::complex<double> amplitude(0.0, 0.0);
    for (int k = 0; k < h.size(); ++k) {
        const double phase = -h.eigenvalues(k) * tf;
        amplitude += h.eigenvectors(out_node - 1, k) * h.eigenvectors(in_node - 1, k) *
                     std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return std::norm(amplitude);
}

namespace {

struct ObjectiveData {
    const model::NetworkSpec* spec;
    int in_node;
    int out_node;
    double t_lo;
    double t_hi;
};

// -F with a smooth penalty outside the readout window
double objective(const gsl_vector* v, void* params) {
    const auto* data = static_cast<const ObjectiveData*>(params);
    const int n = data->spec->n;
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = gsl_vector_get(v, static_cast<std::size_t>(i));
    double t = gsl_vector_get(v, static_cast<std::size_t>(n));
    double penalty = 0.0;
    if (t < data->t_lo) {
        penalty = (data->t_lo - t) * (data->t_lo - t);
        t = data->t_lo;
    } else if (t > data->t_hi) {
        penalty = (t - data->t_hi) * (t - data->t_hi);
        t = data->t_hi;
    }
    return -closed_transfer_fidelity(*data->spec, d, data->in_node, data->out_node, t) + penalty;
}

struct Candidate {
    Eigen::VectorXd d;
    double tf;
    double f0;
    std::uint64_t seed;
};

Candidate run_restart(const model::NetworkSpec& spec, int in_node, int out_node, const OptimizeOptions& opts,
                      std::uint64_t restart_index) {
    const int n = spec.n;
    const int dim = n + 1;

    std::mt19937_64 rng(opts.seed * 0x9e3779b97f4a7c15ULL + restart_index);
    std::uniform_real_distribution<double> bias(-opts.bias_range, opts.bias_range);
    std::uniform_real_distribution<double> time(opts.t_lo, opts.t_hi);

    gsl_vector* x = gsl_vector_alloc(static_cast<std::size_t>(dim));
    gsl_vector* step = gsl_vector_alloc(static_cast<std::size_t>(dim));
    for (int i = 0; i < n; ++i) {
        gsl_vector_set(x, static_cast<std::size_t>(i), bias(rng));
        gsl_vector_set(step, static_cast<std::size_t>(i), 1.0);
    }
    gsl_vector_set(x, static_cast<std::size_t>(n), time(rng));
    gsl_vector_set(step, static_cast<std::size_t>(n), 0.1 * (opts.t_hi - opts.t_lo));

    ObjectiveData data{&spec, in_node, out_node, opts.t_lo, opts.t_hi};
    gsl_multimin_function func;
    func.n = static_cast<std::size_t>(dim);
    func.f = &objective;
    func.params = &data;

    gsl_multimin_fminimizer* minimizer =
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, static_cast<std::size_t>(dim));
    gsl_multimin_fminimizer_set(minimizer, &func, x, step);

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        if (gsl_multimin_fminimizer_iterate(minimizer) != 0) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(minimizer), 1e-10) == GSL_SUCCESS) break;
    }

    Candidate c;
    c.d.resize(n);
    for (int i = 0; i < n; ++i) c.d(i) = gsl_vector_get(minimizer->x, static_cast<std::size_t>(i));
    c.tf = std::clamp(gsl_vector_get(minimizer->x, static_cast<std::size_t>(n)), opts.t_lo, opts.t_hi);
    c.f0 = closed_transfer_fidelity(spec, c.d, in_node, out_node, c.tf);
    c.seed = restart_index;

    gsl_multimin_fminimizer_free(minimizer);
    gsl_vector_free(x);
    gsl_vector_free(step);
    return c;
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i) != b(i)) return a(i) < b(i);
    }
    return false;
}

} // namespace

std::vector<Controller> optimize(const model::NetworkSpec& spec, int in_node, int out_node,
                                 const OptimizeOptions& opts) {
    spec.validate();
    if (in_node < 1 || in_node > spec.n || out_node < 1 || out_node > spec.n || in_node == out_node) {
        throw IndexRangeError("invalid transfer nodes");
    }
    if (opts.t_lo <= 0.0 || opts.t_hi <= opts.t_lo) throw InvalidSpecError("invalid readout window");

    std::vector<Candidate> candidates;
    for (int r = 0; r < opts.restarts; ++r) {
        auto c = run_restart(spec, in_node, out_node, opts, static_cast<std::uint64_t>(r));
        if (c.f0 >= opts.threshold) candidates.push_back(std::move(c));
    }

    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.f0 != b.f0) return a.f0 > b.f0;
        return lex_less(a.d, b.d);
    });

    std::vector<Controller> kept;
    for (const auto& c : candidates) {
        bool duplicate = false;
        for (const auto& k : kept) {
            if ((c.d - k.d).norm() < opts.dedup_distance) {
                duplicate = true;
                break;
            }
        }
        if (duplicate) continue;
        Controller ctrl;
        ctrl.d = c.d;
        ctrl.tf = c.tf;
        ctrl.f0 = c.f0;
        ctrl.in_node = in_node;
        ctrl.out_node = out_node;
        ctrl.seed = c.seed;
        kept.push_back(std::move(ctrl));
        if (static_cast<int>(kept.size()) == opts.retain) break;
    }
    return kept;
}

} // namespace spinnet::control
