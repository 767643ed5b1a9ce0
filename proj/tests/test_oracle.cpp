// test_oracle.cpp — dense simulator invariants and kernel/oracle agreement

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "spinbath/kernels.hpp"
#include "spinbath/model.hpp"
#include "spinbath/oracle.hpp"

using namespace spinbath;
using namespace spinbath::model;
using namespace spinbath::oracle;

namespace {

EnvironmentEnsemble manual_ensemble(std::vector<complexd> alpha, std::vector<complexd> beta,
                                    std::vector<double> g) {
    EnvironmentEnsemble ens;
    ens.n = static_cast<Eigen::Index>(alpha.size());
    ens.alpha = Eigen::Map<Eigen::VectorXcd>(alpha.data(), ens.n);
    ens.beta = Eigen::Map<Eigen::VectorXcd>(beta.data(), ens.n);
    ens.g = Eigen::Map<Eigen::VectorXd>(g.data(), ens.n);
    return ens;
}

Eigen::VectorXcd random_state(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXcd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = complexd{normal(rng), normal(rng)};
    v.normalize();
    return v;
}

Hermitian2x2 random_hermitian(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    return {unit(rng), unit(rng), complexd{unit(rng), unit(rng)}};
}

Eigen::MatrixXcd random_block_s(int m, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Eigen::MatrixXcd raw(m + 1, m + 1);
    for (int i = 0; i <= m; ++i)
        for (int j = 0; j <= m; ++j) raw(i, j) = complexd{unit(rng), unit(rng)};
    return 0.5 * (raw + raw.adjoint().eval());
}

} // namespace

TEST_CASE("build_initial: basis product state") {
    Eigen::VectorXcd c(2);
    c << 1.0, 0.0;
    auto ens = manual_ensemble({complexd{1.0, 0.0}}, {complexd{0.0, 0.0}}, {400.0});
    auto state = build_initial(explicit_system(1, c, Arrangement::Binary), ens);
    CHECK(state.amp[0] == complexd{1.0, 0.0});
    CHECK(state.amp[1] == complexd{0.0, 0.0});
    CHECK(state.amp[2] == complexd{0.0, 0.0});
    CHECK(state.amp[3] == complexd{0.0, 0.0});
}

TEST_CASE("build_initial: empty bath keeps the system amplitudes") {
    const double r = std::numbers::sqrt2 / 2.0;
    Eigen::VectorXcd c(2);
    c << r, r;
    EnvironmentEnsemble none;
    auto state = build_initial(explicit_system(1, c, Arrangement::Binary), none);
    CHECK(state.amp.size() == 2);
    CHECK(std::abs(state.amp[0] - complexd(r, 0.0)) < 1e-15);
    CHECK(std::abs(state.amp[1] - complexd(r, 0.0)) < 1e-15);
}

TEST_CASE("build_initial: normalization and bath bit order") {
    std::mt19937_64 rng(1);
    auto ens = make_random_ensemble(3, 2, CouplingMode::uniform_random(800.0));
    auto state = build_initial(explicit_system(2, random_state(4, rng), Arrangement::Binary), ens);
    CHECK(std::abs(state.amp.squaredNorm() - 1.0) <= 1e-12);
    CHECK_NOTHROW(state.validate());

    // amplitude of |sys = 00, B_1 down, B_2 up, B_3 up> is beta_1 alpha_2 alpha_3
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(4);
    c[0] = 1.0;
    auto probe = build_initial(explicit_system(2, c, Arrangement::Binary), ens);
    const complexd want = ens.beta[0] * ens.alpha[1] * ens.alpha[2];
    CHECK(std::abs(probe.amp[0b100] - want) < 1e-15);
}

TEST_CASE("evolve: identity at t = 0 and for decoupled baths") {
    std::mt19937_64 rng(3);
    auto ens = make_random_ensemble(3, 5, CouplingMode::uniform_random(600.0));
    auto state = build_initial(explicit_system(1, random_state(2, rng), Arrangement::Binary), ens);
    auto same = evolve(state, ens.g, 0.0);
    for (Eigen::Index k = 0; k < state.amp.size(); ++k) CHECK(same.amp[k] == state.amp[k]);

    Eigen::VectorXd zero_g = Eigen::VectorXd::Zero(3);
    for (double t : {1e-3, 0.7}) {
        auto frozen = evolve(state, zero_g, t);
        for (Eigen::Index k = 0; k < state.amp.size(); ++k) CHECK(frozen.amp[k] == state.amp[k]);
    }
}

TEST_CASE("evolve: unitarity for random times") {
    std::mt19937_64 rng(4);
    auto ens = make_random_ensemble(4, 6, CouplingMode::uniform_random(800.0));
    auto state = build_initial(explicit_system(3, random_state(8, rng), Arrangement::Binary), ens);
    std::uniform_real_distribution<double> tdist(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        auto evolved = evolve(state, ens.g, tdist(rng));
        CHECK(std::abs(evolved.amp.squaredNorm() - 1.0) <= 1e-12);
    }
}

TEST_CASE("evolve: two-level overlap reproduces the kernel") {
    const double r = std::numbers::sqrt2 / 2.0;
    Eigen::VectorXcd c(2);
    c << r, r;
    auto ens = manual_ensemble({complexd{r, 0.0}}, {complexd{r, 0.0}}, {400.0});
    auto state = build_initial(explicit_system(1, c, Arrangement::Binary), ens);
    for (double t : {1e-4, 2e-3, 0.03}) {
        auto evolved = evolve(state, ens.g, t);
        // branch environment states: |E_up> = amp[0..1]/a, |E_down> = amp[2..3]/b
        Eigen::Vector2cd e_up = evolved.amp.segment(0, 2) / r;
        Eigen::Vector2cd e_down = evolved.amp.segment(2, 2) / r;
        const complexd overlap = e_down.dot(e_up); // <E_down | E_up>
        CHECK(std::abs(overlap - complexd(std::cos(400.0 * t), 0.0)) < 1e-12);
        CHECK(std::abs(overlap - kernels::kernel_K(-1, ens, t).value()) < 1e-12);
    }
}

TEST_CASE("dense Hamiltonian: diagonal, Hermitian, matches evolve phases") {
    SUBCASE("one system and one bath particle") {
        Eigen::VectorXd g(1);
        g << 400.0;
        auto h = build_hamiltonian_dense(1, 1, g);
        CHECK(h(0, 0) == complexd{200.0, 0.0});
        CHECK(h(1, 1) == complexd{-200.0, 0.0});
        CHECK(h(2, 2) == complexd{-200.0, 0.0});
        CHECK(h(3, 3) == complexd{200.0, 0.0});
    }
    SUBCASE("m = 2, n = 1 eigenvalue pattern") {
        Eigen::VectorXd g(1);
        g << 400.0;
        auto h = build_hamiltonian_dense(2, 1, g);
        for (Eigen::Index k = 0; k < 8; ++k) {
            const double lambda = 0.5 * (2.0 - 2.0 * std::popcount(static_cast<unsigned>(k >> 1)));
            const double eb = (k & 1) ? -400.0 : 400.0;
            CHECK(h(k, k).real() == doctest::Approx(lambda * eb).epsilon(1e-15));
        }
    }
    SUBCASE("off-diagonal mass vanishes; phases agree with evolve") {
        std::mt19937_64 rng(7);
        for (auto [m, n] : {std::pair{1, 2}, std::pair{2, 2}, std::pair{3, 1}}) {
            auto ens = make_random_ensemble(n, 17 + m, CouplingMode::uniform_random(800.0));
            auto h = build_hamiltonian_dense(m, n, ens.g);
            CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() == 0.0);
            double offdiag = 0.0;
            for (Eigen::Index i = 0; i < h.rows(); ++i)
                for (Eigen::Index j = 0; j < h.cols(); ++j)
                    if (i != j) offdiag = std::max(offdiag, std::abs(h(i, j)));
            CHECK(offdiag < 1e-15);

            const double t = 3e-4;
            DenseState basis;
            basis.m = m;
            basis.n = n;
            basis.amp = Eigen::VectorXcd::Zero(Eigen::Index{1} << (m + n));
            for (Eigen::Index k = 0; k < basis.amp.size(); ++k) {
                basis.amp.setZero();
                basis.amp[k] = 1.0;
                auto evolved = evolve(basis, ens.g, t);
                const complexd expect = std::polar(1.0, -h(k, k).real() * t);
                CHECK(std::abs(evolved.amp[k] - expect) < 1e-12);
            }
        }
    }
    SUBCASE("size cap") {
        CHECK_THROWS_AS(build_hamiltonian_dense(7, 6, Eigen::VectorXd::Zero(6)),
                        unsupported_size);
    }
}

TEST_CASE("expectation: identity observables give one") {
    std::mt19937_64 rng(9);
    auto ens = make_random_ensemble(2, 21, CouplingMode::uniform_random(800.0));
    auto state = build_initial(explicit_system(2, random_state(4, rng), Arrangement::Binary), ens);
    auto evolved = evolve(state, ens.g, 5e-4);

    CHECK(expectation(evolved, ObservableSpec{OriginalD2{0, Hermitian2x2::identity()}}) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(expectation(evolved, ObservableSpec{GeneralD2{Hermitian2x2::identity()}}) ==
          doctest::Approx(1.0).epsilon(1e-12));

    // the block family contains the identity only where every block is a
    // singleton, i.e. m = 1
    auto one = build_initial(explicit_system(1, random_state(2, rng), Arrangement::Binary), ens);
    auto one_evolved = evolve(one, ens.g, 5e-4);
    Eigen::MatrixXcd s_id = Eigen::MatrixXcd::Identity(2, 2);
    CHECK(expectation(one_evolved, ObservableSpec{GeneralD1{s_id}}) ==
          doctest::Approx(1.0).epsilon(1e-12));
    FullProduct full;
    full.block_s = s_id;
    full.eps = {Hermitian2x2::identity(), Hermitian2x2::identity()};
    CHECK(expectation(one_evolved, ObservableSpec{full}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("expectation: argument validation") {
    std::mt19937_64 rng(10);
    auto ens = make_random_ensemble(2, 23, CouplingMode::constant(400.0));
    auto state = build_initial(explicit_system(2, random_state(4, rng), Arrangement::Binary), ens);
    CHECK_THROWS_AS(expectation(state, ObservableSpec{OriginalD1{Hermitian2x2::identity()}}),
                    std::invalid_argument); // needs m = 1
    CHECK_THROWS_AS(expectation(state, ObservableSpec{OriginalD2{5, Hermitian2x2::identity()}}),
                    std::invalid_argument);
    FullProduct full;
    full.eps = {Hermitian2x2::identity()}; // one short
    CHECK_THROWS_AS(expectation(state, ObservableSpec{full}), std::invalid_argument);
}

// The central agreement battery: every closed-form expectation is compared
// with the dense oracle on random small instances.
TEST_CASE("agreement: kernels vs oracle across decompositions") {
    std::mt19937_64 rng(2025);
    std::uniform_real_distribution<double> tdist(0.0, 10.0 / 400.0);
    for (int m = 1; m <= 3; ++m) {
        auto idx = block_index(m);
        for (int n = 1; n <= 3; ++n) {
            for (int seed = 0; seed < 4; ++seed) {
                const auto mode = (seed % 2 == 0)
                                      ? CouplingMode::constant(400.0)
                                      : CouplingMode::uniform_random(800.0);
                auto ens = make_random_ensemble(n, 100 * m + 10 * n + seed, mode);
                const bool uniform_c = (seed == 3);
                auto sys = uniform_c ? uniform_system(m, Arrangement::Binary)
                                     : explicit_system(m, random_state(1 << m, rng),
                                                       Arrangement::Binary);
                auto state0 = build_initial(sys, ens);
                const auto s_b = random_block_s(m, rng);
                const auto s_t = random_hermitian(rng);

                for (int rep = 0; rep < 5; ++rep) {
                    const double t = tdist(rng);
                    auto state = evolve(state0, ens.g, t);

                    const double d1_uniform_s = expectation(state, ObservableSpec{GeneralD1{}});
                    CHECK(std::abs(d1_uniform_s -
                                   kernels::expectation_general_d1(sys, idx, ens, t)) < 1e-10);

                    const double d1_block = expectation(state, ObservableSpec{GeneralD1{s_b}});
                    CHECK(std::abs(d1_block - kernels::expectation_general_d1(sys, idx, ens, t,
                                                                              s_b)) < 1e-10);

                    const double d2 = expectation(state, ObservableSpec{GeneralD2{s_t}});
                    CHECK(std::abs(d2 - kernels::expectation_general_d2(sys, idx, ens, s_t, t)) <
                          1e-10);

                    if (m == 1 && !uniform_c) {
                        const auto& c = *sys.amplitudes;
                        Hermitian2x2 s = random_hermitian(rng);
                        const double orig =
                            expectation(state, ObservableSpec{OriginalD1{s}});
                        CHECK(std::abs(orig - kernels::expectation_original_d1(c[0], c[1], s, ens,
                                                                               t)) < 1e-10);
                    }
                }
            }
        }
    }
}

// The observed-bath-particle formula describes a bath spin against a central
// spin sitting in a definite |down> state; with that preparation the dense
// oracle must match the closed form at every time.
TEST_CASE("agreement: original D2 against a pinned central spin") {
    std::mt19937_64 rng(31);
    Eigen::VectorXcd down(2);
    down << 0.0, 1.0;
    std::uniform_real_distribution<double> tdist(0.0, 2e-2);
    for (int n = 1; n <= 3; ++n) {
        auto ens = make_random_ensemble(n, 500 + n, CouplingMode::uniform_random(800.0));
        auto state0 = build_initial(explicit_system(1, down, Arrangement::Binary), ens);
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto eps = random_hermitian(rng);
            for (int rep = 0; rep < 5; ++rep) {
                const double t = tdist(rng);
                auto state = evolve(state0, ens.g, t);
                const double dense = expectation(state, ObservableSpec{OriginalD2{j, eps}});
                CHECK(std::abs(dense - kernels::expectation_original_d2(j, ens, eps, t)) < 1e-10);
            }
        }
    }
}

TEST_CASE("partial trace: product state gives a rank-one projector") {
    std::mt19937_64 rng(33);
    auto ens = make_random_ensemble(2, 71, CouplingMode::constant(400.0));
    const auto c = random_state(2, rng);
    auto state = build_initial(explicit_system(1, c, Arrangement::Binary), ens);
    auto rho = partial_trace(state, {0});
    rho.validate();
    CHECK(purity(rho) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(rho.entries(0, 0) - complexd(std::norm(c[0]), 0.0)) < 1e-12);
    CHECK(std::abs(rho.entries(0, 1) - c[0] * std::conj(c[1])) < 1e-12);
}

TEST_CASE("partial trace: central-spin off-diagonal equals a b* r(t)") {
    std::mt19937_64 rng(35);
    const auto c = random_state(2, rng);
    auto ens = make_random_ensemble(3, 73, CouplingMode::uniform_random(800.0));
    auto state0 = build_initial(explicit_system(1, c, Arrangement::Binary), ens);
    for (double t : {1e-4, 8e-4, 3e-3}) {
        auto rho = partial_trace(evolve(state0, ens.g, t), {0});
        const complexd want = c[0] * std::conj(c[1]) * kernels::kernel_K(-1, ens, t).value();
        CHECK(std::abs(rho.entries(0, 1) - want) < 1e-10);
    }
}

TEST_CASE("partial trace: purity one at t = 0 for any product cut") {
    std::mt19937_64 rng(37);
    auto ens = make_random_ensemble(3, 79, CouplingMode::uniform_random(800.0));
    // fully product system state so every single-particle cut is pure
    const auto c1 = random_state(2, rng);
    const auto c2 = random_state(2, rng);
    Eigen::VectorXcd c(4);
    c << c1[0] * c2[0], c1[0] * c2[1], c1[1] * c2[0], c1[1] * c2[1];
    auto state = build_initial(explicit_system(2, c, Arrangement::Binary), ens);
    for (auto keep : {std::vector<int>{0}, {1}, {2, 3}, {0, 1}, {4}}) {
        auto rho = partial_trace(state, keep);
        rho.validate();
        CHECK(purity(rho) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("partial trace: argument validation") {
    std::mt19937_64 rng(39);
    auto ens = make_random_ensemble(2, 83, CouplingMode::constant(400.0));
    auto state = build_initial(explicit_system(1, random_state(2, rng), Arrangement::Binary), ens);
    CHECK_THROWS_AS(partial_trace(state, {}), std::invalid_argument);
    CHECK_THROWS_AS(partial_trace(state, {0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(partial_trace(state, {3}), std::invalid_argument);
}

TEST_CASE("offdiag norm: diagonal, plus state, and early decay trend") {
    DensityMatrix diag;
    diag.entries = Eigen::MatrixXcd::Zero(2, 2);
    diag.entries(0, 0) = 0.25;
    diag.entries(1, 1) = 0.75;
    CHECK(offdiag_norm(diag) == 0.0);

    DensityMatrix plus;
    plus.entries = Eigen::MatrixXcd::Constant(2, 2, complexd{0.5, 0.0});
    CHECK(offdiag_norm(plus) == doctest::Approx(0.5).epsilon(1e-15));

    const double r = std::numbers::sqrt2 / 2.0;
    Eigen::VectorXcd c(2);
    c << r, r;
    auto ens = make_random_ensemble(8, 89, CouplingMode::uniform_random(800.0));
    auto state0 = build_initial(explicit_system(1, c, Arrangement::Binary), ens);
    double prev = offdiag_norm(partial_trace(state0, {0}));
    for (double t : {2e-4, 4e-4, 6e-4}) {
        const double now = offdiag_norm(partial_trace(evolve(state0, ens.g, t), {0}));
        CHECK(now < prev);
        prev = now;
    }
}

TEST_CASE("zero coupling: every reduced state is frozen") {
    std::mt19937_64 rng(41);
    auto ens = make_random_ensemble(2, 91, CouplingMode::constant(400.0));
    Eigen::VectorXd zero_g = Eigen::VectorXd::Zero(2);
    auto state0 = build_initial(explicit_system(2, random_state(4, rng), Arrangement::Binary), ens);
    for (int particle = 0; particle < 4; ++particle) {
        auto before = partial_trace(state0, {particle});
        for (double t : {1e-3, 0.2, 5.0}) {
            auto after = partial_trace(evolve(state0, zero_g, t), {particle});
            CHECK((after.entries - before.entries).cwiseAbs().maxCoeff() < 1e-12);
            CHECK(std::abs(purity(after) - purity(before)) < 1e-12);
        }
    }
}

TEST_CASE("recurrence: shared coupling returns every D1 expectation") {
    std::mt19937_64 rng(43);
    auto ens = make_random_ensemble(3, 93, CouplingMode::constant(400.0));
    auto sys = explicit_system(2, random_state(4, rng), Arrangement::Binary);
    auto state0 = build_initial(sys, ens);
    const auto s_b = random_block_s(2, rng);
    const double period = 2.0 * std::numbers::pi / 400.0;
    for (double t : {1e-4, 2.7e-3}) {
        const double now =
            expectation(evolve(state0, ens.g, t), ObservableSpec{GeneralD1{s_b}});
        const double later =
            expectation(evolve(state0, ens.g, t + period), ObservableSpec{GeneralD1{s_b}});
        CHECK(now == doctest::Approx(later).epsilon(1e-9));
    }
}
