#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "spinnet/dephasing.hpp"

using namespace spinnet;

namespace {

model::NetworkSpec chain(int n) { return model::NetworkSpec{model::Topology::chain, n, 1.0, {}}; }
model::NetworkSpec ring(int n) { return model::NetworkSpec{model::Topology::ring, n, 1.0, {}}; }

Eigen::MatrixXd pair_dists(std::initializer_list<double> upper, int n) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    auto it = upper.begin();
    for (int m = 0; m < n; ++m) {
        for (int j = m + 1; j < n; ++j, ++it) {
            d(m, j) = *it;
            d(j, m) = *it;
        }
    }
    return d;
}

} // namespace

TEST_CASE("halton radical inverse") {
    CHECK(dephasing::halton(1, 2) == 0.5);
    CHECK(dephasing::halton(2, 2) == 0.25);
    CHECK(dephasing::halton(3, 2) == 0.75);
    CHECK(dephasing::halton(4, 2) == 0.125);
    CHECK(dephasing::halton(1, 3) == doctest::Approx(1.0 / 3.0));
    CHECK(dephasing::halton(2, 3) == doctest::Approx(2.0 / 3.0));
    CHECK(dephasing::halton(5, 3) == doctest::Approx(7.0 / 9.0));
}

TEST_CASE("first primes") {
    const auto p = dephasing::first_primes(6);
    CHECK(p == std::vector<std::uint64_t>{2, 3, 5, 7, 11, 13});
}

TEST_CASE("collinear squared distances embed on a line") {
    const auto d = pair_dists({1.0, 4.0, 1.0}, 3);
    REQUIRE(dephasing::is_euclidean_distance_matrix(d));
    const auto coords = dephasing::embed_distance_matrix(d);
    REQUIRE(coords.rows() == 1);  // one channel: collinear points
    for (int m = 0; m < 3; ++m) {
        for (int j = m + 1; j < 3; ++j) {
            CHECK((coords.col(m) - coords.col(j)).squaredNorm() == doctest::Approx(d(m, j)).epsilon(1e-12));
        }
    }
}

TEST_CASE("non-embeddable distances are rejected") {
    // d(1,2) = 4 but both points sit within 0.25 of point 3
    const auto d = pair_dists({4.0, 0.25, 0.25}, 3);
    CHECK_FALSE(dephasing::is_euclidean_distance_matrix(d));
}

TEST_CASE("any single pairwise rate is accepted for n=2") {
    for (double r : {0.01, 0.3, 1.0}) {
        CHECK(dephasing::is_euclidean_distance_matrix(pair_dists({r}, 2)));
    }
}

TEST_CASE("sampled processes are normalized, physical, and deterministic") {
    const double gamma = 0.05;
    const auto procs = dephasing::sample_processes(4, 20, 7, gamma);
    REQUIRE(procs.size() == 20);
    for (const auto& p : procs) {
        CHECK(p.n == 4);
        CHECK(p.k >= 1);
        CHECK(p.k <= 3);
        const auto rates = p.rates();
        CHECK((rates - rates.transpose()).norm() == 0.0);
        CHECK(rates.diagonal().cwiseAbs().maxCoeff() == 0.0);
        CHECK(rates.minCoeff() >= 0.0);
        // normalization: the largest pairwise rate is exactly gamma
        CHECK(rates.maxCoeff() == doctest::Approx(gamma).epsilon(1e-10));
    }

    const auto again = dephasing::sample_processes(4, 20, 7, gamma);
    for (std::size_t i = 0; i < procs.size(); ++i) {
        CHECK(procs[i].coeffs == again[i].coeffs);
    }
    const auto other = dephasing::sample_processes(4, 20, 8, gamma);
    CHECK(procs[0].coeffs != other[0].coeffs);
}

TEST_CASE("rescaling changes rates proportionally") {
    const auto p = dephasing::sample_processes(3, 1, 1, 0.05).front();
    const auto q = p.with_gamma(0.2);
    CHECK((4.0 * p.rates() - q.rates()).norm() < 1e-14);
}

TEST_CASE("sampling argument validation") {
    CHECK_THROWS_AS(dephasing::sample_processes(1, 1, 0, 0.1), InvalidSpecError);
    CHECK_THROWS_AS(dephasing::sample_processes(3, 0, 0, 0.1), InvalidSpecError);
    CHECK_THROWS_AS(dephasing::sample_processes(3, 1, 0, 0.0), InvalidSpecError);
    // impossible workload within a tiny candidate cap
    dephasing::SampleOptions opts;
    opts.max_candidates = 2;
    CHECK_THROWS_AS(dephasing::sample_processes(5, 1000, 0, 0.1, opts), SamplingExhaustedError);
}

TEST_CASE("branch matching at delta=0 is the identity") {
    const auto h = model::build_hamiltonian(chain(4));
    const auto a = dephasing::match_branches(h, h);
    for (int j = 0; j < 4; ++j) {
        CHECK(a.cluster_of[static_cast<std::size_t>(j)] == h.cluster_of[static_cast<std::size_t>(j)]);
        CHECK(a.overlaps(a.cluster_of[static_cast<std::size_t>(j)], j) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(a.min_assigned_overlap == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("small perturbations preserve the ascending order with near-unit overlap") {
    const auto h = model::build_hamiltonian(chain(4));
    const auto s = model::build_perturbation(chain(4), model::PerturbationKind::parse("coupling:1"));
    const auto ht = model::perturb(h, s, 1e-3);
    const auto a = dephasing::match_branches(h, ht);
    for (int j = 0; j < 4; ++j) {
        CHECK(a.cluster_of[static_cast<std::size_t>(j)] == j);
    }
    CHECK(a.min_assigned_overlap > 0.999);
}

TEST_CASE("split degenerate ring level keeps both branches in the nominal cluster") {
    const auto h = model::build_hamiltonian(ring(4));
    const auto s = model::build_perturbation(ring(4), model::PerturbationKind::parse("diagonal:1"));
    const auto ht = model::perturb(h, s, 1e-2);
    const auto a = dephasing::match_branches(h, ht);
    // nominal cluster 1 holds the two zero levels; both split branches map to it
    CHECK(a.cluster_of == std::vector<int>{0, 1, 1, 2});
}

TEST_CASE("ambiguity threshold triggers the error and the warning flag") {
    const auto h = model::build_hamiltonian(chain(4));
    const auto s = model::build_perturbation(chain(4), model::PerturbationKind::parse("diagonal:2"));
    const auto ht = model::perturb(h, s, 0.5);

    dephasing::MatchOptions strict;
    strict.ambiguity_threshold = 0.9999;
    CHECK_THROWS_AS(dephasing::match_branches(h, ht, strict), BranchAmbiguityError);

    strict.allow_ambiguous = true;
    const auto a = dephasing::match_branches(h, ht, strict);
    CHECK(a.ambiguous);
}

TEST_CASE("perturbed dephasing operators commute with the perturbed Hamiltonian") {
    const auto h = model::build_hamiltonian(chain(4));
    const auto s = model::build_perturbation(chain(4), model::PerturbationKind::parse("coupling:2"));
    const auto p = dephasing::sample_processes(4, 3, 11, 0.1).front();

    for (double delta : {1e-4, 1e-2, 0.1, 0.5}) {
        const auto ht = model::perturb(h, s, delta);
        const auto a = dephasing::match_branches(h, ht);
        const auto ops = dephasing::perturbed_dephasing_ops(p, ht, a, h);
        REQUIRE(static_cast<int>(ops.size()) == p.k);
        for (const auto& v : ops) {
            const Eigen::MatrixXd comm = ht.matrix * v - v * ht.matrix;
            CHECK(comm.norm() <= 1e-10 * ht.matrix.norm() * std::max(v.norm(), 1e-300));
        }
    }
}

TEST_CASE("delta=0 reproduces the nominal operators exactly") {
    const auto h = model::build_hamiltonian(chain(4));
    const auto p = dephasing::sample_processes(4, 1, 3, 0.2).front();
    const auto a = dephasing::match_branches(h, h);
    const auto perturbed = dephasing::perturbed_dephasing_ops(p, h, a, h);
    const auto nominal = dephasing::nominal_dephasing_ops(p, h);
    REQUIRE(perturbed.size() == nominal.size());
    for (std::size_t k = 0; k < nominal.size(); ++k) {
        CHECK((perturbed[k] - nominal[k]).norm() == 0.0);
    }
}

TEST_CASE("two-level diagonal case") {
    // H = diag(0, 1), c = (0, 1) -> V = diag(0, 1)
    const auto h = model::decompose((Eigen::MatrixXd(2, 2) << 0, 0, 0, 1).finished());
    dephasing::DephasingProcess p;
    p.n = 2;
    p.k = 1;
    p.gamma = 1.0;
    p.coeffs = (Eigen::MatrixXd(1, 2) << 0.0, 1.0).finished();
    const auto ops = dephasing::nominal_dephasing_ops(p, h);
    REQUIRE(ops.size() == 1);
    CHECK((ops[0] - (Eigen::MatrixXd(2, 2) << 0, 0, 0, 1).finished()).norm() < 1e-15);
}

TEST_CASE("decoherence rates are invariant along the perturbation branch") {
    const auto h = model::build_hamiltonian(chain(4));
    const auto s = model::build_perturbation(chain(4), model::PerturbationKind::parse("coupling:1"));
    const auto p = dephasing::sample_processes(4, 1, 5, 0.3).front();

    std::vector<double> reference;
    for (double delta : {1e-3, 1e-2, 0.1, 0.3}) {
        const auto ht = model::perturb(h, s, delta);
        const auto a = dephasing::match_branches(h, ht);
        const auto ops = dephasing::perturbed_dephasing_ops(p, ht, a, h);
        std::vector<double> spectrum;
        for (const auto& v : ops) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
            for (int i = 0; i < 4; ++i) spectrum.push_back(es.eigenvalues()(i));
        }
        std::sort(spectrum.begin(), spectrum.end());
        if (reference.empty()) {
            reference = spectrum;
        } else {
            for (std::size_t i = 0; i < spectrum.size(); ++i) {
                CHECK(spectrum[i] == doctest::Approx(reference[i]).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("operator branches vary continuously in delta") {
    const auto h = model::build_hamiltonian(chain(4));
    const auto s = model::build_perturbation(chain(4), model::PerturbationKind::parse("coupling:2"));
    const auto p = dephasing::sample_processes(4, 1, 9, 0.1).front();

    const auto op_at = [&](double delta) {
        const auto ht = model::perturb(h, s, delta);
        const auto a = dephasing::match_branches(h, ht);
        return dephasing::perturbed_dephasing_ops(p, ht, a, h).front();
    };
    const auto base = op_at(0.05);
    double prev = 1e300;
    for (double step : {1e-2, 1e-3, 1e-4, 1e-5}) {
        const double diff = (op_at(0.05 + step) - base).norm();
        CHECK(diff < prev);
        prev = diff;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("physicality closure: rates reconstruct the accepted distance matrix") {
    // the sampled coefficients must reproduce their own pairwise rate matrix
    const auto procs = dephasing::sample_processes(5, 5, 13, 0.7);
    for (const auto& p : procs) {
        const auto rates = p.rates();
        Eigen::MatrixXd direct = Eigen::MatrixXd::Zero(p.n, p.n);
        for (int m = 0; m < p.n; ++m) {
            for (int j = m + 1; j < p.n; ++j) {
                direct(m, j) = direct(j, m) =
                    0.5 * p.gamma * (p.coeffs.col(m) - p.coeffs.col(j)).squaredNorm();
            }
        }
        CHECK((rates - direct).norm() <= 1e-10 * std::max(1.0, rates.norm()));
    }
}
