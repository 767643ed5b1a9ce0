// oracle.hpp — Brute-force dense state-vector simulator for small instances:
// exact evolution under the diagonal product Hamiltonian, expectation values
// of product observables, partial traces, and decoherence summaries. Ground
// truth for the closed-form kernels; deliberately independent of kernels.hpp.
//
// Basis convention: one computational index over m + n spin-1/2 particles,
// system bits most significant (A_1 highest, A_M lowest system bit), then
// environment bits (B_1 highest, B_N lowest). Bit value 0 is up, 1 is down.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "spinbath/errors.hpp"
#include "spinbath/model.hpp"

namespace spinbath::oracle {

using model::complexd;
using model::EnvironmentEnsemble;
using model::Hermitian2x2;
using model::ObservableSpec;
using model::SystemSpec;

inline constexpr int kMaxTotalSpins = 24;     // 2^24 amplitudes
inline constexpr int kMaxDenseHamiltonian = 12;
inline constexpr int kMaxReducedDim = 10;     // partial traces up to 2^10

// ------------------------------- dense types ----------------------------------

struct DenseState {
    int m{0};
    int n{0};
    Eigen::VectorXcd amp; // 2^(m+n) amplitudes

    int total_bits() const { return m + n; }

    void validate() const {
        if (m < 0 || n < 0 || m + n < 1 || m + n > kMaxTotalSpins)
            throw unsupported_size("DenseState: m + n must lie in [1, 24]");
        if (amp.size() != (Eigen::Index{1} << (m + n)))
            throw std::invalid_argument("DenseState: amplitude count must be 2^(m+n)");
        if (std::abs(amp.squaredNorm() - 1.0) > 1e-10)
            throw std::invalid_argument("DenseState: state must be normalized");
    }
};

struct DensityMatrix {
    Eigen::MatrixXcd entries;

    Eigen::Index dim() const { return entries.rows(); }

    void validate() const {
        if (entries.rows() != entries.cols())
            throw std::invalid_argument("DensityMatrix: must be square");
        if (std::abs(entries.trace().real() - 1.0) > 1e-10 ||
            std::abs(entries.trace().imag()) > 1e-10)
            throw std::invalid_argument("DensityMatrix: trace must be 1");
        if ((entries - entries.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
            throw std::invalid_argument("DensityMatrix: must be Hermitian");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(entries);
        if (solver.eigenvalues().minCoeff() < -1e-10)
            throw std::invalid_argument("DensityMatrix: negative eigenvalue");
    }
};

// ------------------------------ state construction ----------------------------

namespace detail {

// System amplitudes in the binary arrangement (A_1 = most significant bit).
inline Eigen::VectorXcd system_amplitudes_binary(const SystemSpec& sys) {
    const auto dim = Eigen::Index{1} << sys.m;
    Eigen::VectorXcd c(dim);
    if (sys.uniform()) {
        c.setConstant(std::pow(2.0, -0.5 * sys.m));
    } else if (sys.arrangement == model::Arrangement::Binary) {
        c = *sys.amplitudes;
    } else {
        const auto order = model::degeneracy_order(sys.m);
        for (Eigen::Index lam = 0; lam < dim; ++lam) c[order[lam]] = (*sys.amplitudes)[lam];
    }
    return c;
}

} // namespace detail

// Product initial state |psi_A> (x) |psi_B> with |psi_B> = prod (alpha_k up + beta_k down).
inline DenseState build_initial(const SystemSpec& sys, const EnvironmentEnsemble& ens) {
    sys.validate();
    ens.validate();
    const int m = sys.m;
    const int n = static_cast<int>(ens.n);
    if (m + n > kMaxTotalSpins)
        throw unsupported_size("build_initial: m + n exceeds the 24-spin cap");

    const Eigen::VectorXcd c = detail::system_amplitudes_binary(sys);
    const auto env_dim = Eigen::Index{1} << n;
    Eigen::VectorXcd env(env_dim);
    env[0] = 1.0;
    Eigen::Index filled = 1;
    for (int k = n - 1; k >= 0; --k) { // each pass prepends a particle as the new top bit
        for (Eigen::Index p = 0; p < filled; ++p) {
            env[filled + p] = env[p] * ens.beta[k];
            env[p] *= ens.alpha[k];
        }
        filled <<= 1;
    }

    DenseState state;
    state.m = m;
    state.n = n;
    state.amp.resize(Eigen::Index{1} << (m + n));
    for (Eigen::Index sys_bits = 0; sys_bits < c.size(); ++sys_bits)
        state.amp.segment(sys_bits << n, env_dim) = c[sys_bits] * env;
    return state;
}

// ---------------------------------- evolution ---------------------------------

namespace detail {

// Diagonal energies: E_k = Lambda_A(k) * E_B(k) with Lambda_A = (m - 2 l)/2 and
// E_B = sum_j sigma_j g_j (sigma = +1 up, -1 down). The interaction is the
// product of the two collective operators; m = 1 recovers the single-central-
// spin model, including its one-half factor.
inline std::vector<double> system_eigenvalues(int m) {
    std::vector<double> lambda(std::size_t{1} << m);
    for (std::uint32_t bits = 0; bits < lambda.size(); ++bits)
        lambda[bits] = 0.5 * (m - 2 * std::popcount(bits));
    return lambda;
}

inline std::vector<double> environment_energies(int n, const Eigen::VectorXd& g) {
    std::vector<double> energy(std::size_t{1} << n, 0.0);
    for (std::uint32_t bits = 0; bits < energy.size(); ++bits) {
        double e = 0.0;
        for (int k = 0; k < n; ++k) {
            const bool down = (bits >> (n - 1 - k)) & 1u;
            e += down ? -g[k] : g[k];
        }
        energy[bits] = e;
    }
    return energy;
}

} // namespace detail

// |psi(t)> = e^{-iHt} |psi(0)> by per-basis-state phases.
inline DenseState evolve(const DenseState& state, const Eigen::VectorXd& g, double t) {
    state.validate();
    if (g.size() != state.n) throw std::invalid_argument("evolve: coupling count must equal n");
    const auto lambda = detail::system_eigenvalues(state.m);
    const auto env_energy = detail::environment_energies(state.n, g);

    DenseState out = state;
    const auto env_dim = Eigen::Index{1} << state.n;
    for (Eigen::Index k = 0; k < state.amp.size(); ++k) {
        const double energy = lambda[static_cast<std::size_t>(k >> state.n)] *
                              env_energy[static_cast<std::size_t>(k & (env_dim - 1))];
        out.amp[k] *= std::polar(1.0, -energy * t);
    }
    return out;
}

// Explicit H = H_A (x) H_B as a dense matrix; cross-checks the evolve phases.
inline Eigen::MatrixXcd build_hamiltonian_dense(int m, int n, const Eigen::VectorXd& g) {
    if (m < 0 || n < 0 || m + n < 1 || m + n > kMaxDenseHamiltonian)
        throw unsupported_size("build_hamiltonian_dense: m + n must lie in [1, 12]");
    if (g.size() != n)
        throw std::invalid_argument("build_hamiltonian_dense: coupling count must equal n");

    const auto sys_dim = Eigen::Index{1} << m;
    const auto env_dim = Eigen::Index{1} << n;
    Eigen::MatrixXcd h_a = Eigen::MatrixXcd::Zero(sys_dim, sys_dim);
    for (int i = 0; i < m; ++i) {
        // (1/2)(up-proj - down-proj) on particle A_i, identity elsewhere
        for (Eigen::Index bits = 0; bits < sys_dim; ++bits) {
            const bool down = (bits >> (m - 1 - i)) & 1;
            h_a(bits, bits) += down ? -0.5 : 0.5;
        }
    }
    Eigen::MatrixXcd h_b = Eigen::MatrixXcd::Zero(env_dim, env_dim);
    for (int k = 0; k < n; ++k) {
        for (Eigen::Index bits = 0; bits < env_dim; ++bits) {
            const bool down = (bits >> (n - 1 - k)) & 1;
            h_b(bits, bits) += down ? -g[k] : g[k];
        }
    }
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(sys_dim * env_dim, sys_dim * env_dim);
    for (Eigen::Index i = 0; i < sys_dim; ++i)
        for (Eigen::Index j = 0; j < sys_dim; ++j)
            h.block(i * env_dim, j * env_dim, env_dim, env_dim) = h_a(i, j) * h_b;
    return h;
}

// --------------------------------- observables --------------------------------

namespace detail {

// Applies a 2x2 operator to one bit position (counted from the least
// significant end) of the state vector.
inline void apply_two_level(Eigen::VectorXcd& v, int bit, const Hermitian2x2& op) {
    const Eigen::Index stride = Eigen::Index{1} << bit;
    const complexd up_down = std::conj(op.down_up);
    for (Eigen::Index base = 0; base < v.size(); base += 2 * stride) {
        for (Eigen::Index off = 0; off < stride; ++off) {
            const complexd up = v[base + off];
            const complexd down = v[base + off + stride];
            v[base + off] = op.up_up * up + up_down * down;
            v[base + off + stride] = op.down_up * up + op.down_down * down;
        }
    }
}

// Dense system-block observable O_S = sum_{l,l'} s(l,l') u_l u_{l'}^dagger in
// the computational basis, where u_l is the all-ones vector on the states with
// l down spins. Uniform s = 1 collapses to the all-ones rank-one operator.
inline Eigen::MatrixXcd block_observable_dense(int m,
                                               const std::optional<Eigen::MatrixXcd>& block_s) {
    const auto dim = Eigen::Index{1} << m;
    Eigen::MatrixXcd op(dim, dim);
    for (Eigen::Index row = 0; row < dim; ++row) {
        const int l_row = std::popcount(static_cast<std::uint32_t>(row));
        for (Eigen::Index col = 0; col < dim; ++col) {
            const int l_col = std::popcount(static_cast<std::uint32_t>(col));
            op(row, col) = block_s ? (*block_s)(l_row, l_col) : complexd{1.0, 0.0};
        }
    }
    return op;
}

inline void apply_system_block(Eigen::VectorXcd& v, int m, int n,
                               const std::optional<Eigen::MatrixXcd>& block_s) {
    const auto sys_dim = Eigen::Index{1} << m;
    const auto env_dim = Eigen::Index{1} << n;
    const Eigen::MatrixXcd op = block_observable_dense(m, block_s);
    Eigen::MatrixXcd slab(sys_dim, env_dim);
    for (Eigen::Index s = 0; s < sys_dim; ++s) slab.row(s) = v.segment(s * env_dim, env_dim);
    slab = op * slab;
    for (Eigen::Index s = 0; s < sys_dim; ++s) v.segment(s * env_dim, env_dim) = slab.row(s);
}

} // namespace detail

// <psi| O |psi> for any supported observable family. The imaginary residue of
// the quadratic form is checked against Hermiticity and discarded.
inline double expectation(const DenseState& state, const ObservableSpec& obs) {
    state.validate();
    Eigen::VectorXcd v = state.amp;
    const int m = state.m;
    const int n = state.n;

    if (const auto* d1 = std::get_if<model::OriginalD1>(&obs)) {
        if (m != 1)
            throw std::invalid_argument("expectation: OriginalD1 requires a one-particle system");
        detail::apply_two_level(v, n, d1->s);
    } else if (const auto* d2 = std::get_if<model::OriginalD2>(&obs)) {
        if (d2->particle < 0 || d2->particle >= n)
            throw std::invalid_argument("expectation: bath particle index out of range");
        detail::apply_two_level(v, n - 1 - static_cast<int>(d2->particle), d2->eps);
    } else if (const auto* g1 = std::get_if<model::GeneralD1>(&obs)) {
        if (g1->block_s) model::validate_block_s(*g1->block_s, m);
        detail::apply_system_block(v, m, n, g1->block_s);
    } else if (const auto* g2 = std::get_if<model::GeneralD2>(&obs)) {
        detail::apply_two_level(v, n, g2->s_tilde); // last system particle sits just above the env bits
    } else {
        const auto& full = std::get<model::FullProduct>(obs);
        if (static_cast<int>(full.eps.size()) != n)
            throw std::invalid_argument("expectation: FullProduct needs one eps per bath particle");
        if (full.block_s) model::validate_block_s(*full.block_s, m);
        for (int k = 0; k < n; ++k) detail::apply_two_level(v, n - 1 - k, full.eps[k]);
        detail::apply_system_block(v, m, n, full.block_s);
    }

    const complexd val = state.amp.dot(v); // conjugates the left factor
    if (std::abs(val.imag()) > 1e-10)
        throw std::runtime_error("expectation: non-Hermitian residue exceeds 1e-10");
    return val.real();
}

// -------------------------------- partial traces ------------------------------

// Reduced density matrix over the given particle set. Global particle indices:
// 0..m-1 are A_1..A_M, m..m+n-1 are B_1..B_N. Row/column bits of the reduced
// matrix follow the ascending order of `keep` (first kept particle = most
// significant bit).
inline DensityMatrix partial_trace(const DenseState& state, std::vector<int> keep) {
    state.validate();
    const int total = state.total_bits();
    std::sort(keep.begin(), keep.end());
    if (keep.empty() || std::unique(keep.begin(), keep.end()) != keep.end())
        throw std::invalid_argument("partial_trace: keep set must be nonempty and unique");
    if (keep.front() < 0 || keep.back() >= total)
        throw std::invalid_argument("partial_trace: particle index out of range");
    if (static_cast<int>(keep.size()) > kMaxReducedDim)
        throw unsupported_size("partial_trace: reduced dimension capped at 2^10");

    std::vector<int> kept_bit(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) kept_bit[i] = total - 1 - keep[i];
    std::vector<bool> is_kept(static_cast<std::size_t>(total), false);
    for (int b : kept_bit) is_kept[static_cast<std::size_t>(b)] = true;
    std::vector<int> rest_bit;
    for (int b = total - 1; b >= 0; --b)
        if (!is_kept[static_cast<std::size_t>(b)]) rest_bit.push_back(b);

    const auto rows = Eigen::Index{1} << keep.size();
    const auto cols = Eigen::Index{1} << rest_bit.size();
    Eigen::MatrixXcd psi(rows, cols);
    for (Eigen::Index k = 0; k < state.amp.size(); ++k) {
        Eigen::Index row = 0, col = 0;
        for (std::size_t i = 0; i < kept_bit.size(); ++i)
            row = (row << 1) | ((k >> kept_bit[i]) & 1);
        for (std::size_t i = 0; i < rest_bit.size(); ++i)
            col = (col << 1) | ((k >> rest_bit[i]) & 1);
        psi(row, col) = state.amp[k];
    }
    DensityMatrix rho;
    rho.entries = psi * psi.adjoint();
    return rho;
}

// ------------------------------ scalar summaries ------------------------------

// Sum of squared off-diagonal magnitudes in the computational basis.
inline double offdiag_norm(const DensityMatrix& rho) {
    const double frob_sq = rho.entries.squaredNorm();
    const double diag_sq = rho.entries.diagonal().squaredNorm();
    return std::max(0.0, frob_sq - diag_sq);
}

inline double purity(const DensityMatrix& rho) { return rho.entries.squaredNorm(); }

} // namespace spinbath::oracle
