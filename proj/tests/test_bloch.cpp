#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "spinnet/bloch.hpp"

using namespace spinnet;

namespace {

model::NetworkSpec chain(int n) { return model::NetworkSpec{model::Topology::chain, n, 1.0, {}}; }
model::NetworkSpec ring(int n) { return model::NetworkSpec{model::Topology::ring, n, 1.0, {}}; }

std::vector<std::complex<double>> eigenvalues_of(const Eigen::MatrixXd& a) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(a);
    std::vector<std::complex<double>> out;
    for (Eigen::Index i = 0; i < a.rows(); ++i) out.push_back(es.eigenvalues()(i));
    return out;
}

// Greedy multiset match; returns the largest pairing distance.
double multiset_distance(std::vector<std::complex<double>> expected, std::vector<std::complex<double>> actual) {
    REQUIRE(expected.size() == actual.size());
    double worst = 0.0;
    for (const auto& e : expected) {
        double best = 1e300;
        std::size_t best_i = 0;
        for (std::size_t i = 0; i < actual.size(); ++i) {
            const double d = std::abs(e - actual[i]);
            if (d < best) {
                best = d;
                best_i = i;
            }
        }
        worst = std::max(worst, best);
        actual.erase(actual.begin() + static_cast<std::ptrdiff_t>(best_i));
    }
    return worst;
}

// Analytic spectrum: N zeros plus -Gamma_{mn} +- i omega_{mn} over level pairs.
std::vector<std::complex<double>> analytic_spectrum(const model::Hamiltonian& ht,
                                                    const Eigen::MatrixXd& rates) {
    const int n = ht.size();
    std::vector<std::complex<double>> out(static_cast<std::size_t>(n), {0.0, 0.0});
    for (int m = 0; m < n; ++m) {
        for (int j = m + 1; j < n; ++j) {
            const double w = ht.eigenvalues(j) - ht.eigenvalues(m);
            out.emplace_back(-rates(m, j), w);
            out.emplace_back(-rates(m, j), -w);
        }
    }
    return out;
}

} // namespace

TEST_CASE("basis is orthonormal and Hermitian in the fixed order") {
    for (int n : {2, 3, 5}) {
        const auto basis = bloch::build_basis(n);
        REQUIRE(static_cast<int>(basis.elements.size()) == n * n);
        for (int a = 0; a < basis.dim(); ++a) {
            const auto& sa = basis.elements[static_cast<std::size_t>(a)];
            CHECK((sa - sa.adjoint()).norm() < 1e-15);
            for (int b = 0; b < basis.dim(); ++b) {
                const auto& sb = basis.elements[static_cast<std::size_t>(b)];
                const double expected = a == b ? 1.0 : 0.0;
                CHECK(std::abs((sa.adjoint() * sb).trace() - expected) < 1e-14);
            }
        }
        // identity element first
        const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n) / std::sqrt(static_cast<double>(n));
        CHECK((basis.elements[0] - id).norm() < 1e-15);
    }
}

TEST_CASE("n=2 basis is the scaled Pauli set, n=3 diagonals are the Gell-Mann ladder") {
    const auto b2 = bloch::build_basis(2);
    const double s = 1.0 / std::sqrt(2.0);
    CHECK((b2.elements[1] - s * (Eigen::MatrixXcd(2, 2) << 0, 1, 1, 0).finished()).norm() < 1e-15);
    CHECK((b2.elements[2] - s * (Eigen::MatrixXcd(2, 2) << 0, std::complex<double>(0, -1),
                                 std::complex<double>(0, 1), 0)
                                    .finished())
              .norm() < 1e-15);
    CHECK((b2.elements[3] - s * (Eigen::MatrixXcd(2, 2) << 1, 0, 0, -1).finished()).norm() < 1e-15);

    const auto b3 = bloch::build_basis(3);
    Eigen::MatrixXcd z1 = Eigen::MatrixXcd::Zero(3, 3);
    z1(0, 0) = 1.0 / std::sqrt(2.0);
    z1(1, 1) = -1.0 / std::sqrt(2.0);
    Eigen::MatrixXcd z2 = Eigen::MatrixXcd::Zero(3, 3);
    z2(0, 0) = z2(1, 1) = 1.0 / std::sqrt(6.0);
    z2(2, 2) = -2.0 / std::sqrt(6.0);
    CHECK((b3.elements[7] - z1).norm() < 1e-15);
    CHECK((b3.elements[8] - z2).norm() < 1e-15);
}

TEST_CASE("hamiltonian generator: identity commutes, two-level precession") {
    const auto basis = bloch::build_basis(2);
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(2, 2);
    CHECK(bloch::hamiltonian_generator(id, basis).norm() < 1e-14);

    const double w = 1.7;
    Eigen::MatrixXcd hz = Eigen::MatrixXcd::Zero(2, 2);
    hz(0, 0) = 0.5 * w;
    hz(1, 1) = -0.5 * w;
    const auto a = bloch::hamiltonian_generator(hz, basis);
    CHECK((a + a.transpose()).norm() < 1e-12);
    const auto eigs =
        multiset_distance({{0, 0}, {0, 0}, {0, w}, {0, -w}}, eigenvalues_of(a));
    CHECK(eigs < 1e-12);
}

TEST_CASE("hamiltonian generator is antisymmetric for random Hermitian input") {
    const auto basis = bloch::build_basis(4);
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Random(4, 4);
    h = (h + h.adjoint()).eval();
    const auto a = bloch::hamiltonian_generator(h, basis);
    CHECK((a + a.transpose()).norm() < 1e-12 * std::max(1.0, a.norm()));
}

TEST_CASE("dephasing generator: scalar operators do nothing") {
    const auto basis = bloch::build_basis(3);
    const std::vector<Eigen::MatrixXd> ops{2.5 * Eigen::MatrixXd::Identity(3, 3)};
    CHECK(bloch::dephasing_generator(ops, 0.7, basis).norm() < 1e-12);
}

TEST_CASE("two-level dephasing decays the coherence block at gamma (c1-c2)^2 / 2") {
    const auto basis = bloch::build_basis(2);
    const double gamma = 0.4, c1 = 0.3, c2 = -1.1;
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(2, 2);
    v(0, 0) = c1;
    v(1, 1) = c2;
    const auto a = bloch::dephasing_generator({v}, gamma, basis);
    CHECK((a - a.transpose()).norm() < 1e-12);
    const double rate = 0.5 * gamma * (c1 - c2) * (c1 - c2);
    const auto dist = multiset_distance({{0, 0}, {0, 0}, {-rate, 0}, {-rate, 0}}, eigenvalues_of(a));
    CHECK(dist < 1e-12);
}

TEST_CASE("dephasing generator is symmetric negative semidefinite") {
    const auto h = model::build_hamiltonian(chain(3));
    const auto p = dephasing::sample_processes(3, 1, 2, 0.3).front();
    const auto basis = bloch::build_basis(3);
    const auto a = bloch::dephasing_generator(dephasing::nominal_dephasing_ops(p, h), p.gamma, basis);
    CHECK((a - a.transpose()).norm() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    CHECK(es.eigenvalues().maxCoeff() <= 1e-12);
}

TEST_CASE("nominal generator annihilates and preserves the identity component") {
    const auto h = model::build_hamiltonian(chain(4));
    const auto p = dephasing::sample_processes(4, 1, 4, 0.2).front();
    const auto basis = bloch::build_basis(4);
    const auto gen = bloch::nominal_generator(h, p, basis);
    CHECK(gen.a.col(0).norm() < 1e-12);  // identity annihilated
    CHECK(gen.a.row(0).norm() < 1e-12);  // trace preserved

    int zeros = 0;
    double max_real = -1e300;
    for (const auto& ev : eigenvalues_of(gen.a)) {
        if (std::abs(ev) <= 1e-10) ++zeros;
        max_real = std::max(max_real, ev.real());
    }
    CHECK(zeros >= 4);
    CHECK(max_real <= 1e-10);
}

TEST_CASE("closed system generator has a purely imaginary spectrum") {
    const auto h = model::build_hamiltonian(chain(4));
    const auto basis = bloch::build_basis(4);
    const auto a = bloch::hamiltonian_generator(h.matrix.cast<std::complex<double>>(), basis);
    for (const auto& ev : eigenvalues_of(a)) {
        CHECK(std::abs(ev.real()) < 1e-10);
    }
}

TEST_CASE("spectral oracle: eig(A) = {0^N} u {-Gamma_mn +- i omega_mn}") {
    const auto basis3 = bloch::build_basis(3);
    const auto basis4 = bloch::build_basis(4);

    SUBCASE("nominal chain") {
        const auto h = model::build_hamiltonian(chain(4));
        const auto p = dephasing::sample_processes(4, 2, 21, 0.15).back();
        const auto gen = bloch::nominal_generator(h, p, basis4);
        const auto assignment = dephasing::match_branches(h, h);
        const auto rates = dephasing::effective_rates(p, h, assignment);
        CHECK(multiset_distance(analytic_spectrum(h, rates), eigenvalues_of(gen.a)) < 1e-8);
    }
    SUBCASE("perturbed chain") {
        const auto h = model::build_hamiltonian(chain(3));
        const auto s = model::build_perturbation(chain(3), model::PerturbationKind::parse("coupling:1"));
        const auto p = dephasing::sample_processes(3, 1, 5, 0.4).front();
        const auto nominal = bloch::nominal_generator(h, p, basis3);
        for (double delta : {1e-3, 0.05, 0.4}) {
            const auto res = bloch::assemble(h, p, delta, s, nominal, basis3);
            const auto rates = dephasing::effective_rates(p, h, res.assignment);
            CHECK(multiset_distance(analytic_spectrum(res.hamiltonian, rates), eigenvalues_of(res.perturbed.a)) <
                  1e-8);
        }
    }
    SUBCASE("perturbed degenerate ring (extra zeros from the split cluster)") {
        const auto h = model::build_hamiltonian(ring(4));
        const auto s = model::build_perturbation(ring(4), model::PerturbationKind::parse("coupling:1"));
        const auto p = dephasing::sample_processes(4, 1, 8, 0.25).front();
        const auto nominal = bloch::nominal_generator(h, p, basis4);

        // at the nominal point the degenerate pair contributes zero rate and
        // zero frequency: two eigenvalues beyond the N guaranteed zeros vanish
        const auto id_assign = dephasing::match_branches(h, h);
        const auto rates0 = dephasing::effective_rates(p, h, id_assign);
        CHECK(rates0(1, 2) == 0.0);
        int zeros = 0;
        for (const auto& ev : eigenvalues_of(nominal.a)) {
            if (std::abs(ev) <= 1e-10) ++zeros;
        }
        CHECK(zeros >= 4 + 2);

        const auto res = bloch::assemble(h, p, 0.05, s, nominal, basis4);
        const auto rates = dephasing::effective_rates(p, h, res.assignment);
        CHECK(multiset_distance(analytic_spectrum(res.hamiltonian, rates), eigenvalues_of(res.perturbed.a)) <
              1e-8);
    }
}

TEST_CASE("pole real parts are invariant along the delta sweep") {
    const auto h = model::build_hamiltonian(chain(4));
    const auto s = model::build_perturbation(chain(4), model::PerturbationKind::parse("coupling:1"));
    const auto p = dephasing::sample_processes(4, 1, 31, 0.1).front();
    const auto basis = bloch::build_basis(4);
    const auto nominal = bloch::nominal_generator(h, p, basis);

    std::vector<double> reference;
    for (const auto& ev : eigenvalues_of(nominal.a)) reference.push_back(ev.real());
    std::sort(reference.begin(), reference.end());

    for (double delta : {0.1, 0.5, 1.0}) {
        const auto res = bloch::assemble(h, p, delta, s, nominal, basis);
        std::vector<double> reals;
        for (const auto& ev : eigenvalues_of(res.perturbed.a)) reals.push_back(ev.real());
        std::sort(reals.begin(), reals.end());
        for (std::size_t i = 0; i < reals.size(); ++i) {
            CHECK(reals[i] == doctest::Approx(reference[i]).epsilon(1e-8).scale(1.0));
        }
    }
}

TEST_CASE("assemble rejects delta = 0") {
    const auto h = model::build_hamiltonian(chain(3));
    const auto s = model::build_perturbation(chain(3), model::PerturbationKind::parse("coupling:1"));
    const auto p = dephasing::sample_processes(3, 1, 1, 0.1).front();
    const auto basis = bloch::build_basis(3);
    const auto nominal = bloch::nominal_generator(h, p, basis);
    CHECK_THROWS_AS(bloch::assemble(h, p, 0.0, s, nominal, basis), InvalidSpecError);
}

TEST_CASE("without decoherence S(delta) is the structure generator, independent of delta") {
    const auto h = model::build_hamiltonian(chain(3));
    const auto s = model::build_perturbation(chain(3), model::PerturbationKind::parse("coupling:2"));
    const auto p = dephasing::sample_processes(3, 1, 1, 0.1).front().with_gamma(0.0);
    const auto basis = bloch::build_basis(3);
    const auto nominal = bloch::nominal_generator(h, p, basis);

    const auto expected = bloch::hamiltonian_generator(s.matrix.cast<std::complex<double>>(), basis);
    for (double delta : {1e-4, 0.1, 0.9}) {
        const auto res = bloch::assemble(h, p, delta, s, nominal, basis);
        CHECK((res.structure.s - expected).norm() < 1e-10);
    }
}

TEST_CASE("commuting diagonal perturbation leaves S delta-independent") {
    // nondegenerate diagonal H: a diagonal perturbation keeps the eigenvectors
    const auto h = model::decompose((Eigen::MatrixXd(2, 2) << 0.3, 0, 0, 1.4).finished());
    model::PerturbationStructure s;
    s.kind = model::PerturbationKind::parse("diagonal:1");
    s.matrix = (Eigen::MatrixXd(2, 2) << 1, 0, 0, 0).finished();

    dephasing::DephasingProcess p;
    p.n = 2;
    p.k = 1;
    p.gamma = 0.6;
    p.coeffs = (Eigen::MatrixXd(1, 2) << 1.0, -1.0).finished();

    const auto basis = bloch::build_basis(2);
    const auto nominal = bloch::nominal_generator(h, p, basis);
    Eigen::MatrixXd first;
    for (double delta : {1e-3, 0.2, 0.8}) {
        const auto res = bloch::assemble(h, p, delta, s, nominal, basis);
        if (first.size() == 0) {
            first = res.structure.s;
        } else {
            CHECK((res.structure.s - first).norm() < 1e-10);
        }
    }
}

TEST_CASE("S(delta) stays bounded and slowly varying toward delta -> 0") {
    const auto h = model::build_hamiltonian(chain(4));
    const auto s = model::build_perturbation(chain(4), model::PerturbationKind::parse("coupling:1"));
    const auto p = dephasing::sample_processes(4, 1, 17, 0.1).front();
    const auto basis = bloch::build_basis(4);
    const auto nominal = bloch::nominal_generator(h, p, basis);

    Eigen::MatrixXd at_min;
    double norm_min = 0.0;
    for (double delta : {1e-6, 1e-5, 1e-4, 1e-3}) {
        const auto res = bloch::assemble(h, p, delta, s, nominal, basis);
        if (at_min.size() == 0) {
            at_min = res.structure.s;
            norm_min = at_min.norm();
        } else {
            CHECK((res.structure.s - at_min).norm() < 0.05 * norm_min);
        }
    }
}
