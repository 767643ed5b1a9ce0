// model.hpp — Domain types: random spin ensembles, system amplitudes,
// degeneracy-block bookkeeping, observable coefficients, time grids.

#pragma once

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "spinbath/errors.hpp"

namespace spinbath::model {

using complexd = std::complex<double>;

// ------------------------------- random streams ------------------------------

// splitmix64: seedable, splittable, platform-independent 64-bit generator.
// Stream order is part of the ensemble contract (see make_random_ensemble).
struct SplitMix64 {
    std::uint64_t state{0};

    constexpr explicit SplitMix64(std::uint64_t seed) noexcept : state(seed) {}

    constexpr std::uint64_t next() noexcept {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform on [0,1) with 53 mantissa bits.
    double next_unit() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Child generator for an independent named stream; deterministic in
    // (seed, stream) and independent of draws made from the parent.
    static SplitMix64 split(std::uint64_t seed, std::uint64_t stream) noexcept {
        SplitMix64 mixer(seed ^ (0x6a09e667f3bcc909ull + stream * 0x9e3779b97f4a7c15ull));
        return SplitMix64(mixer.next());
    }
};

// ------------------------------ environment bath -----------------------------

// Coupling assignment for the bath: one shared constant g, or per-particle
// g_j drawn uniformly from [0, g_max].
struct CouplingMode {
    enum class Kind { Constant, UniformRandom };
    Kind kind{Kind::Constant};
    double value{0.0}; // g (Constant) or g_max (UniformRandom), in s^-1

    static CouplingMode constant(double g) { return {Kind::Constant, g}; }
    static CouplingMode uniform_random(double g_max) { return {Kind::UniformRandom, g_max}; }
};

// The randomized bath of N spin-1/2 particles: per-particle amplitudes
// (alpha_j, beta_j) with |alpha_j|^2 + |beta_j|^2 = 1 and couplings g_j >= 0.
// Immutable after construction; safe to share across workers.
struct EnvironmentEnsemble {
    Eigen::Index n{0};
    Eigen::VectorXcd alpha;
    Eigen::VectorXcd beta;
    Eigen::VectorXd g;
    std::uint64_t seed{0};

    // Throws std::invalid_argument on any violated invariant. n = 0 is a valid
    // degenerate bath (products over it are empty); the random factory below
    // still requires n >= 1.
    void validate() const {
        if (n < 0) throw std::invalid_argument("EnvironmentEnsemble: n must be >= 0");
        if (alpha.size() != n || beta.size() != n || g.size() != n)
            throw std::invalid_argument("EnvironmentEnsemble: sequence lengths must equal n");
        for (Eigen::Index j = 0; j < n; ++j) {
            if (std::abs(std::norm(alpha[j]) + std::norm(beta[j]) - 1.0) > 1e-12)
                throw std::invalid_argument("EnvironmentEnsemble: |alpha|^2 + |beta|^2 != 1 at j=" +
                                            std::to_string(j));
            if (g[j] < 0.0)
                throw std::invalid_argument("EnvironmentEnsemble: negative coupling at j=" +
                                            std::to_string(j));
        }
    }
};

// Draws an ensemble of n particles. Stream order, fixed by contract:
// stream 0 ("amplitudes") yields, for j = 0..n-1 in order, the triple
// (|alpha_j|^2, phase_alpha_j/2pi, phase_beta_j/2pi); stream 1 ("couplings")
// yields g_j/g_max for j = 0..n-1 (consumed only in UniformRandom mode, so
// the amplitude draws are identical across coupling modes).
inline EnvironmentEnsemble make_random_ensemble(std::size_t n, std::uint64_t seed,
                                                CouplingMode mode) {
    if (n == 0) throw std::invalid_argument("make_random_ensemble: n must be >= 1");
    if (!(mode.value > 0.0))
        throw std::invalid_argument("make_random_ensemble: coupling scale must be > 0");

    constexpr double two_pi = 2.0 * std::numbers::pi;
    EnvironmentEnsemble ens;
    ens.n = static_cast<Eigen::Index>(n);
    ens.seed = seed;
    ens.alpha.resize(ens.n);
    ens.beta.resize(ens.n);
    ens.g.resize(ens.n);

    SplitMix64 amp = SplitMix64::split(seed, 0);
    for (Eigen::Index j = 0; j < ens.n; ++j) {
        const double a = amp.next_unit();              // |alpha_j|^2 uniform on [0,1)
        const double phase_a = two_pi * amp.next_unit();
        const double phase_b = two_pi * amp.next_unit();
        ens.alpha[j] = std::polar(std::sqrt(a), phase_a);
        ens.beta[j] = std::polar(std::sqrt(1.0 - a), phase_b);
    }

    if (mode.kind == CouplingMode::Kind::Constant) {
        ens.g.setConstant(mode.value);
    } else {
        SplitMix64 cpl = SplitMix64::split(seed, 1);
        for (Eigen::Index j = 0; j < ens.n; ++j) ens.g[j] = mode.value * cpl.next_unit();
    }
    return ens;
}

// ------------------------------ system amplitudes ----------------------------

// Basis arrangement of the 2^M system states: Degeneracy orders states by the
// number l of down spins (ties broken by ascending bit pattern); Binary orders
// them by bit pattern, most significant bit = first particle, least = last.
enum class Arrangement { Degeneracy, Binary };

inline constexpr int kMaxExplicitSystem = 20; // 2^20 amplitudes; beyond this only Uniform

// M system particles with amplitudes C_lambda over the chosen arrangement.
// amplitudes == nullopt means the uniform symbolic choice C = 2^{-M/2},
// which is the only option past the explicit cap.
struct SystemSpec {
    int m{1};
    Arrangement arrangement{Arrangement::Degeneracy};
    std::optional<Eigen::VectorXcd> amplitudes;

    bool uniform() const { return !amplitudes.has_value(); }

    void validate() const {
        if (m < 1) throw std::invalid_argument("SystemSpec: m must be >= 1");
        if (!amplitudes) return;
        if (m > kMaxExplicitSystem)
            throw unsupported_size("SystemSpec: explicit amplitudes require m <= 20");
        if (amplitudes->size() != (Eigen::Index{1} << m))
            throw std::invalid_argument("SystemSpec: amplitude count must be 2^m");
        if (std::abs(amplitudes->squaredNorm() - 1.0) > 1e-12)
            throw std::invalid_argument("SystemSpec: amplitudes must be normalized");
    }
};

inline SystemSpec uniform_system(int m, Arrangement arr = Arrangement::Degeneracy) {
    SystemSpec sys{m, arr, std::nullopt};
    sys.validate();
    return sys;
}

inline SystemSpec explicit_system(int m, Eigen::VectorXcd amplitudes,
                                  Arrangement arr = Arrangement::Binary) {
    SystemSpec sys{m, arr, std::move(amplitudes)};
    sys.validate();
    return sys;
}

// --------------------------- degeneracy bookkeeping ---------------------------

// Block tables for the M-particle system Hamiltonian: cumulative block
// boundaries f(l), log multiplicities ln C(M,l), and eigenvalues (M-2l)/2.
// f is exact (integer-valued doubles) for m <= 62 and computed through
// exp(log-gamma) beyond that; log multiplicities always use log-gamma.
struct BlockIndex {
    int m{0};
    std::vector<double> f;                // f[l+1] = f(l) for l = -1..m
    std::vector<double> log_multiplicity; // ln C(m,l) for l = 0..m
    std::vector<double> eigenvalue;       // (m-2l)/2 for l = 0..m
    int m_tilde{0};                       // (m-2)/2 for even m, (m-1)/2 for odd

    double f_of(int l) const {
        if (l < -1 || l > m) throw std::invalid_argument("BlockIndex: f(l) needs -1 <= l <= m");
        return f[static_cast<std::size_t>(l + 1)];
    }

    // first/last explicit 0-based lambda of block l (valid for m <= 62 where f is exact)
    std::uint64_t block_begin(int l) const { return static_cast<std::uint64_t>(f_of(l - 1)); }
    std::uint64_t block_end(int l) const { return static_cast<std::uint64_t>(f_of(l)); }
};

inline BlockIndex block_index(int m) {
    if (m < 1) throw std::invalid_argument("block_index: m must be >= 1");
    if (m > 1'000'000) throw unsupported_size("block_index: m exceeds 10^6 table cap");

    BlockIndex idx;
    idx.m = m;
    idx.m_tilde = (m % 2 == 0) ? (m - 2) / 2 : (m - 1) / 2;
    idx.f.resize(static_cast<std::size_t>(m) + 2);
    idx.log_multiplicity.resize(static_cast<std::size_t>(m) + 1);
    idx.eigenvalue.resize(static_cast<std::size_t>(m) + 1);

    const double lg_m1 = std::lgamma(static_cast<double>(m) + 1.0);
    for (int l = 0; l <= m; ++l) {
        idx.log_multiplicity[static_cast<std::size_t>(l)] =
            lg_m1 - std::lgamma(static_cast<double>(l) + 1.0) -
            std::lgamma(static_cast<double>(m - l) + 1.0);
        idx.eigenvalue[static_cast<std::size_t>(l)] = 0.5 * static_cast<double>(m - 2 * l);
    }

    idx.f[0] = 0.0;
    if (m <= 62) {
        unsigned long long binom = 1, cum = 0;
        for (int l = 0; l <= m; ++l) {
            cum += binom;
            idx.f[static_cast<std::size_t>(l) + 1] = static_cast<double>(cum);
            if (l < m)
                binom = static_cast<unsigned long long>(
                    static_cast<unsigned __int128>(binom) * static_cast<unsigned>(m - l) /
                    static_cast<unsigned>(l + 1));
        }
    } else {
        double cum = 0.0;
        for (int l = 0; l <= m; ++l) {
            cum += std::exp(idx.log_multiplicity[static_cast<std::size_t>(l)]);
            idx.f[static_cast<std::size_t>(l) + 1] = cum;
        }
    }
    return idx;
}

// ln W(l,l') with W = C(M,l) C(M,l') 2^{-M}: the total weight of block pair
// (l,l') under uniform amplitudes and unit observable coefficients.
inline double uniform_block_pair_weight(const BlockIndex& idx, int l, int l_prime) {
    if (l < 0 || l > idx.m || l_prime < 0 || l_prime > idx.m)
        throw std::invalid_argument("uniform_block_pair_weight: block out of range");
    return idx.log_multiplicity[static_cast<std::size_t>(l)] +
           idx.log_multiplicity[static_cast<std::size_t>(l_prime)] -
           static_cast<double>(idx.m) * std::numbers::ln2;
}

// Degeneracy-order table for small m: entry lambda (0-based, block-ordered,
// ascending bit pattern within a block) is the corresponding bit pattern in
// the Binary arrangement. Inverse of binary_to_degeneracy.
inline std::vector<std::uint32_t> degeneracy_order(int m) {
    if (m < 1) throw std::invalid_argument("degeneracy_order: m must be >= 1");
    if (m > 24) throw unsupported_size("degeneracy_order: table requires m <= 24");
    const std::uint32_t dim = 1u << m;
    std::vector<std::uint32_t> order(dim);
    std::size_t pos = 0;
    for (int l = 0; l <= m; ++l)
        for (std::uint32_t bits = 0; bits < dim; ++bits)
            if (std::popcount(bits) == l) order[pos++] = bits;
    return order;
}

inline std::vector<std::uint32_t> binary_to_degeneracy(int m) {
    const auto order = degeneracy_order(m);
    std::vector<std::uint32_t> inverse(order.size());
    for (std::uint32_t lam = 0; lam < order.size(); ++lam) inverse[order[lam]] = lam;
    return inverse;
}

// ------------------------------- observables ---------------------------------

// Hermitian 2x2 coefficient block: real diagonal, off-diagonal pair stored as
// the |down><up| coefficient (the |up><down| one is its conjugate).
struct Hermitian2x2 {
    double up_up{1.0};
    double down_down{1.0};
    complexd down_up{0.0, 0.0};

    static Hermitian2x2 identity() { return {1.0, 1.0, {0.0, 0.0}}; }
};

// Observable families, one per decomposition studied.
struct OriginalD1 {
    Hermitian2x2 s; // coefficients on the observed central particle
};

struct OriginalD2 {
    Eigen::Index particle{0}; // observed bath particle, 0-based
    Hermitian2x2 eps;
};

// System-block observable: s_{lambda,lambda'} depends only on the block pair
// (l, l'); block_s == nullopt means uniform s = 1 everywhere.
struct GeneralD1 {
    std::optional<Eigen::MatrixXcd> block_s; // (M+1)x(M+1) Hermitian
};

struct GeneralD2 {
    Hermitian2x2 s_tilde; // coefficients on the last system particle
};

// Block observable on the system times per-bath-particle coefficients;
// only evaluated by the dense oracle on small instances.
struct FullProduct {
    std::optional<Eigen::MatrixXcd> block_s;
    std::vector<Hermitian2x2> eps; // one per environment particle
};

using ObservableSpec = std::variant<OriginalD1, OriginalD2, GeneralD1, GeneralD2, FullProduct>;

inline void validate_block_s(const Eigen::MatrixXcd& s, int m) {
    if (s.rows() != m + 1 || s.cols() != m + 1)
        throw std::invalid_argument("block observable must be (M+1)x(M+1)");
    if ((s - s.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("block observable must be Hermitian");
}

// --------------------------------- time grid ---------------------------------

// Uniform grid t_k = k t0 / n_points for k = 0..n_points (n_points intervals,
// n_points + 1 samples, endpoints included).
struct TimeGrid {
    double t0{1.0};
    int n_points{200};

    void validate() const {
        if (!(t0 > 0.0)) throw std::invalid_argument("TimeGrid: t0 must be > 0");
        if (n_points < 2) throw std::invalid_argument("TimeGrid: n_points must be >= 2");
    }

    int num_samples() const { return n_points + 1; }
    double sample(int k) const { return static_cast<double>(k) * t0 / n_points; }
};

} // namespace spinbath::model
