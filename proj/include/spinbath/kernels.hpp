// kernels.hpp — Log-space evaluation of the closed-form expectation values:
// the overlap kernels K_m(t), the decorated products Gamma_0/Gamma_1, the
// single-particle oscillation, and the Sigma^(1)/Sigma^(2)/Sigma^(3) block
// assemblies for both generalized decompositions.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "spinbath/errors.hpp"
#include "spinbath/log_complex.hpp"
#include "spinbath/model.hpp"
#include "spinbath/parallel.hpp"

namespace spinbath::kernels {

using model::complexd;
using model::EnvironmentEnsemble;
using model::Hermitian2x2;
using model::SystemSpec;
using model::TimeGrid;

enum class Decomposition { OriginalD1, OriginalD2, GeneralD1, GeneralD2 };

// ----------------------------- product accumulation --------------------------

namespace detail {

struct ProductPartial {
    double log_mag{0.0};
    double phase{0.0};
};

// Accumulates ln|z_j| and arg z_j over j in [0, n). The per-chunk phase sum is
// reduced mod 2pi at the chunk boundary; chunks fold in fixed order.
template <typename FactorTerms>
LogComplex log_product(std::size_t n, FactorTerms&& terms, std::size_t workers) {
    auto partial = parallel::chunk_reduce<ProductPartial>(
        n, ProductPartial{},
        [&terms](std::size_t begin, std::size_t end) {
            ProductPartial p;
            for (std::size_t j = begin; j < end; ++j) {
                const auto [lm, arg] = terms(j);
                p.log_mag += lm;
                p.phase += arg;
            }
            p.phase = reduce_phase(p.phase);
            return p;
        },
        [](ProductPartial& acc, const ProductPartial& p) {
            acc.log_mag += p.log_mag;
            acc.phase = reduce_phase(acc.phase + p.phase);
        },
        workers);
    if (std::isinf(partial.log_mag) && partial.log_mag < 0.0) return LogComplex::zero();
    return {partial.log_mag, reduce_phase(partial.phase)};
}

// Magnitude-only variant; terms(j) returns ln|z_j| directly.
template <typename LogTerms>
double log_magnitude_product(std::size_t n, LogTerms&& terms, std::size_t workers) {
    return parallel::chunk_reduce<double>(
        n, 0.0,
        [&terms](std::size_t begin, std::size_t end) {
            double s = 0.0;
            for (std::size_t j = begin; j < end; ++j) s += terms(j);
            return s;
        },
        [](double& acc, double p) { acc += p; },
        workers);
}

// ln of the squared factor magnitude, 1 - 4 a (1-a) sin^2. One shared
// expression for every evaluation path, so the magnitude-only route and the
// full kernel agree bit-for-bit (halving before summation is a lossless
// power-of-two scaling).
inline double log_factor_sq(double a, double sin_sq_x4) {
    return std::log1p(-(a * (1.0 - a)) * sin_sq_x4);
}

// Factor of K_m: z_j = a e^{i m g_j t} + (1-a) e^{-i m g_j t} with a = |alpha_j|^2,
// i.e. cos(m g_j t) + i (2a-1) sin(m g_j t). The normalization invariant makes
// the cosine coefficient exactly 1, so K_m(0) = 1 holds exactly in log domain.
inline std::pair<double, double> kernel_factor(double a, double theta) {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const double log_mag = 0.5 * log_factor_sq(a, 4.0 * (s * s));
    const double arg = std::atan2((2.0 * a - 1.0) * s, c);
    return {log_mag, arg};
}

inline LogComplex kernel_nonneg(long m, const EnvironmentEnsemble& ens, double t,
                                std::size_t workers) {
    const double md = static_cast<double>(m);
    return log_product(
        static_cast<std::size_t>(ens.n),
        [&ens, md, t](std::size_t j) {
            const auto idx = static_cast<Eigen::Index>(j);
            return kernel_factor(std::norm(ens.alpha[idx]), md * ens.g[idx] * t);
        },
        workers);
}

inline bool uniform_coupling(const Eigen::VectorXd& g) {
    const double g0 = g[0];
    for (Eigen::Index j = 1; j < g.size(); ++j)
        if (g[j] != g0) return false;
    return true;
}

} // namespace detail

// ---------------------------------- kernels ----------------------------------

// K_m(t) = prod_j (|alpha_j|^2 e^{i m g_j t} + |beta_j|^2 e^{-i m g_j t}).
// K_{-1} is the environment overlap r(t); callers map the block kernels to
// m = l - l' (generic pair) and m = 2l - M (mirror pair). Negative m is
// evaluated through conjugation symmetry, so K_{-m} == conj(K_m) exactly.
inline LogComplex kernel_K(long m, const EnvironmentEnsemble& ens, double t,
                           std::size_t workers = 0) {
    if (m < 0) return detail::kernel_nonneg(-m, ens, t, workers).conjugated();
    return detail::kernel_nonneg(m, ens, t, workers);
}

// ln |r(t)|^2; equals 2 * kernel_K(-1).log_mag bit-for-bit (the magnitude terms
// are the same halved summands). A shared-coupling ensemble needs one sine per
// time point instead of one per particle.
inline double r2_log(const EnvironmentEnsemble& ens, double t, std::size_t workers = 0) {
    const auto n = static_cast<std::size_t>(ens.n);
    if (n == 0) return 0.0;
    if (detail::uniform_coupling(ens.g)) {
        const double s = std::sin(ens.g[0] * t);
        const double sin_sq_x4 = 4.0 * (s * s);
        return detail::log_magnitude_product(
            n,
            [&ens, sin_sq_x4](std::size_t j) {
                const double a = std::norm(ens.alpha[static_cast<Eigen::Index>(j)]);
                return detail::log_factor_sq(a, sin_sq_x4);
            },
            workers);
    }
    return detail::log_magnitude_product(
        n,
        [&ens, t](std::size_t j) {
            const auto idx = static_cast<Eigen::Index>(j);
            const double a = std::norm(ens.alpha[idx]);
            const double s = std::sin(ens.g[idx] * t);
            return detail::log_factor_sq(a, 4.0 * (s * s));
        },
        workers);
}

// |r(t)|^2 in linear scale (underflow clamps to 0).
inline double r2_of_t(const EnvironmentEnsemble& ens, double t, std::size_t workers = 0) {
    return std::exp(r2_log(ens, t, workers));
}

// ------------------------ decorated environment products ---------------------

// Gamma_0(t) = prod_j [ |alpha_j|^2 eps_uu + |beta_j|^2 eps_dd
//                       + 2 Re(alpha_j beta_j^* eps_du e^{i g_j t}) ].
// Real-valued factors; sign carried in the phase (0 or pi).
inline LogComplex gamma0(const EnvironmentEnsemble& ens, const std::vector<Hermitian2x2>& eps,
                         double t, std::size_t workers = 0) {
    if (static_cast<Eigen::Index>(eps.size()) != ens.n)
        throw std::invalid_argument("gamma0: eps length must equal ensemble size");
    return detail::log_product(
        static_cast<std::size_t>(ens.n),
        [&](std::size_t j) -> std::pair<double, double> {
            const auto idx = static_cast<Eigen::Index>(j);
            const auto& e = eps[j];
            const double a = std::norm(ens.alpha[idx]);
            const complexd cross = ens.alpha[idx] * std::conj(ens.beta[idx]) * e.down_up *
                                   std::polar(1.0, ens.g[idx] * t);
            const double f = a * e.up_up + (1.0 - a) * e.down_down + 2.0 * cross.real();
            if (f == 0.0) return {-std::numeric_limits<double>::infinity(), 0.0};
            return {std::log(std::abs(f)), f > 0.0 ? 0.0 : std::numbers::pi};
        },
        workers);
}

// Gamma_1(t) = prod_j [ |alpha_j|^2 eps_uu e^{-i g_j t} + |beta_j|^2 eps_dd e^{i g_j t}
//                       + 2 Re(alpha_j beta_j^* eps_du) ].
// With identity eps the product reduces to r(t) = K_{-1}(t).
inline LogComplex gamma1(const EnvironmentEnsemble& ens, const std::vector<Hermitian2x2>& eps,
                         double t, std::size_t workers = 0) {
    if (static_cast<Eigen::Index>(eps.size()) != ens.n)
        throw std::invalid_argument("gamma1: eps length must equal ensemble size");
    return detail::log_product(
        static_cast<std::size_t>(ens.n),
        [&](std::size_t j) -> std::pair<double, double> {
            const auto idx = static_cast<Eigen::Index>(j);
            const auto& e = eps[j];
            const double a = std::norm(ens.alpha[idx]);
            const complexd rot = std::polar(1.0, ens.g[idx] * t);
            const double cross = 2.0 * (ens.alpha[idx] * std::conj(ens.beta[idx]) * e.down_up).real();
            const complexd z =
                a * e.up_up * std::conj(rot) + (1.0 - a) * e.down_down * rot + cross;
            if (z == complexd{0.0, 0.0}) return {-std::numeric_limits<double>::infinity(), 0.0};
            return {std::log(std::abs(z)), std::arg(z)};
        },
        workers);
}

// ------------------------- original-model expectations ------------------------

// <O_R> for the central particle: |a|^2 s_uu + |b|^2 s_dd + 2 Re(a b^* s_du r(t)).
inline double expectation_original_d1(complexd a, complexd b, const Hermitian2x2& s,
                                      const EnvironmentEnsemble& ens, double t,
                                      std::size_t workers = 0) {
    if (std::abs(std::norm(a) + std::norm(b) - 1.0) > 1e-12)
        throw std::invalid_argument("expectation_original_d1: (a,b) must be normalized");
    const complexd r = kernel_K(-1, ens, t, workers).value();
    return std::norm(a) * s.up_up + std::norm(b) * s.down_down +
           2.0 * (a * std::conj(b) * s.down_up * r).real();
}

// Constant-plus-oscillation form of the observed-bath-particle expectation:
// value(t) = constant + amplitude * cos(omega t + phase). The envelope carries
// no time dependence.
struct OscillatingTerm {
    double constant{0.0};
    double amplitude{0.0};
    double phase{0.0};
    double omega{0.0};

    double value(double t) const { return constant + amplitude * std::cos(omega * t + phase); }
};

inline OscillatingTerm original_d2_components(Eigen::Index particle,
                                              const EnvironmentEnsemble& ens,
                                              const Hermitian2x2& eps) {
    if (particle < 0 || particle >= ens.n)
        throw std::invalid_argument("original_d2: particle index out of range");
    const double a = std::norm(ens.alpha[particle]);
    const complexd z = ens.alpha[particle] * std::conj(ens.beta[particle]) * eps.down_up;
    OscillatingTerm osc;
    osc.constant = a * eps.up_up + (1.0 - a) * eps.down_down;
    osc.amplitude = 2.0 * std::abs(z);
    osc.phase = std::arg(z);
    osc.omega = ens.g[particle];
    return osc;
}

inline double expectation_original_d2(Eigen::Index particle, const EnvironmentEnsemble& ens,
                                      const Hermitian2x2& eps, double t) {
    return original_d2_components(particle, ens, eps).value(t);
}

// --------------------------- Sigma split machinery ---------------------------

// One contribution 2 Re(w * K) or 2 Re(w * conj(K)) to a Sigma sum, with the
// weight held in log-polar form so combinatorial growth in M cannot overflow.
struct SigmaTerm {
    int kernel_m{1};  // kernel index, always > 0
    bool conj_kernel{false};
    LogComplex weight;
};

struct SigmaWeights {
    int m{0};
    double sigma1{0.0};
    double log_shift{0.0}; // max weight log-magnitude across both buckets
    std::vector<SigmaTerm> sigma2_terms;
    std::vector<SigmaTerm> sigma3_terms;
};

namespace detail {

// Per-block amplitude sums u_l = sum_{lambda in block l} C_lambda.
inline std::vector<LogComplex> block_amplitude_sums(const SystemSpec& sys,
                                                    const model::BlockIndex& idx) {
    const int m = sys.m;
    std::vector<LogComplex> u(static_cast<std::size_t>(m) + 1);
    if (sys.uniform()) {
        // C = 2^{-M/2} for every state: u_l = C(M,l) 2^{-M/2}
        for (int l = 0; l <= m; ++l)
            u[static_cast<std::size_t>(l)] = {idx.log_multiplicity[static_cast<std::size_t>(l)] -
                                                  0.5 * m * std::numbers::ln2,
                                              0.0};
        return u;
    }
    const auto& c = *sys.amplitudes;
    std::vector<complexd> sums(static_cast<std::size_t>(m) + 1, complexd{0.0, 0.0});
    if (sys.arrangement == model::Arrangement::Binary) {
        for (std::uint32_t bits = 0; bits < (1u << m); ++bits)
            sums[static_cast<std::size_t>(std::popcount(bits))] += c[bits];
    } else {
        for (int l = 0; l <= m; ++l)
            for (auto lam = static_cast<Eigen::Index>(idx.block_begin(l));
                 lam < static_cast<Eigen::Index>(idx.block_end(l)); ++lam)
                sums[static_cast<std::size_t>(l)] += c[lam];
    }
    for (int l = 0; l <= m; ++l)
        u[static_cast<std::size_t>(l)] = LogComplex::from_value(sums[static_cast<std::size_t>(l)]);
    return u;
}

inline complexd block_s_entry(const std::optional<Eigen::MatrixXcd>& block_s, int l, int l_prime) {
    return block_s ? (*block_s)(l, l_prime) : complexd{1.0, 0.0};
}

inline void finalize_shift(SigmaWeights& w) {
    double shift = -std::numeric_limits<double>::infinity();
    for (const auto& t : w.sigma2_terms) shift = std::max(shift, t.weight.log_mag);
    for (const auto& t : w.sigma3_terms) shift = std::max(shift, t.weight.log_mag);
    w.log_shift = std::isfinite(shift) ? shift : 0.0;
}

} // namespace detail

// Block weights of the generalized Decomposition 1 split. Sigma^(2) pairs
// blocks (l, M-l) for l <= M~ on kernel K_{2l-M}; Sigma^(3) collapses the
// generic pairs onto the difference kernels: for d = l - l' != 0 every pair
// shares K_d, so the 2^M x 2^M double sum reduces to at most 2M+1 kernels
// with aggregated weights V(d), excluding the mirror pairs l' = M - l.
inline SigmaWeights sigma_weights_general_d1(
    const SystemSpec& sys, const model::BlockIndex& idx,
    const std::optional<Eigen::MatrixXcd>& block_s = std::nullopt) {
    sys.validate();
    if (idx.m != sys.m) throw std::invalid_argument("sigma_weights: block index mismatch");
    if (block_s) model::validate_block_s(*block_s, sys.m);
    const int m = sys.m;
    const auto u = detail::block_amplitude_sums(sys, idx);

    SigmaWeights w;
    w.m = m;

    for (int l = 0; l <= m; ++l) {
        const double s_ll = detail::block_s_entry(block_s, l, l).real();
        if (!u[static_cast<std::size_t>(l)].is_zero())
            w.sigma1 += s_ll * std::exp(u[static_cast<std::size_t>(l)].log_abs_sq());
    }

    // mirror pairs: weight s(M-l, l) u_l u_{M-l}^*, kernel K_{2l-M} = conj(K_{M-2l})
    for (int l = 0; l <= idx.m_tilde; ++l) {
        const LogComplex weight = u[static_cast<std::size_t>(l)] *
                                  u[static_cast<std::size_t>(m - l)].conjugated() *
                                  LogComplex::from_value(detail::block_s_entry(block_s, m - l, l));
        if (weight.is_zero()) continue;
        w.sigma2_terms.push_back({m - 2 * l, true, weight});
    }

    // difference kernels: V(d) = sum over l of s(l-d, l) u_l u_{l-d}^*, l' = l-d,
    // skipping the mirror pairs (2l = M + d); negative d enters through 2 Re.
    for (int d = 1; d <= m; ++d) {
        std::vector<LogComplex> terms;
        for (int l = d; l <= m; ++l) {
            if (2 * l == m + d) continue;
            terms.push_back(u[static_cast<std::size_t>(l)] *
                            u[static_cast<std::size_t>(l - d)].conjugated() *
                            LogComplex::from_value(detail::block_s_entry(block_s, l - d, l)));
        }
        const LogComplex v = log_sum(terms);
        if (!v.is_zero()) w.sigma3_terms.push_back({d, false, v});
    }
    detail::finalize_shift(w);
    return w;
}

// Block weights of the generalized Decomposition 2 split (observable on the
// last system particle, binary arrangement). The sparse coefficient pattern
// pairs lambda with lambda +- 1 only, every off-diagonal pair rides on
// K_{-1} = r(t); the mirror subset (pair block l = (M-1)/2, odd M) forms
// Sigma^(2) and the rest folds into S+- with Sigma^(3) = 2 Re(S+ r(t)).
inline SigmaWeights sigma_weights_general_d2(const SystemSpec& sys, const model::BlockIndex& idx,
                                             const Hermitian2x2& s_tilde) {
    sys.validate();
    if (idx.m != sys.m) throw std::invalid_argument("sigma_weights: block index mismatch");
    const int m = sys.m;
    const bool odd = (m % 2 == 1);

    SigmaWeights w;
    w.m = m;
    LogComplex pair_mirror = LogComplex::zero(); // sum of C_even C_odd^* over mirror pairs
    LogComplex pair_rest = LogComplex::zero();

    if (sys.uniform()) {
        w.sigma1 = 0.5 * (s_tilde.up_up + s_tilde.down_down);
        const double log_half = -std::numbers::ln2;
        if (odd) {
            const double log_mirror_frac = std::lgamma(m) - 2.0 * std::lgamma((m + 1) / 2) -
                                           (m - 1) * std::numbers::ln2;
            pair_mirror = {log_half + log_mirror_frac, 0.0};
            // remaining fraction of the 2^{M-1} pairs, in log domain
            pair_rest = {log_half + std::log1p(-std::exp(log_mirror_frac)), 0.0};
        } else {
            pair_rest = {log_half, 0.0};
        }
    } else {
        if (sys.arrangement != model::Arrangement::Binary)
            throw std::invalid_argument(
                "sigma_weights_general_d2: explicit amplitudes require the binary arrangement");
        const auto& c = *sys.amplitudes;
        double up_weight = 0.0, down_weight = 0.0;
        complexd mirror{0.0, 0.0}, rest{0.0, 0.0};
        for (std::uint32_t even = 0; even < (1u << m); even += 2) {
            // 0-based even pattern = last particle up; its partner flips that bit
            const complexd cross = c[even] * std::conj(c[even + 1]);
            up_weight += std::norm(c[even]);
            down_weight += std::norm(c[even + 1]);
            if (odd && std::popcount(even) == (m - 1) / 2)
                mirror += cross;
            else
                rest += cross;
        }
        w.sigma1 = up_weight * s_tilde.up_up + down_weight * s_tilde.down_down;
        pair_mirror = LogComplex::from_value(mirror);
        pair_rest = LogComplex::from_value(rest);
    }

    // factor s_du attaches to every (up, down) pair; terms ride on conj(K_1) = r(t)
    const LogComplex s_du = LogComplex::from_value(s_tilde.down_up);
    if (!pair_mirror.is_zero() && !s_du.is_zero())
        w.sigma2_terms.push_back({1, true, pair_mirror * s_du});
    if (!pair_rest.is_zero() && !s_du.is_zero())
        w.sigma3_terms.push_back({1, true, pair_rest * s_du});
    detail::finalize_shift(w);
    return w;
}

namespace detail {

// Shifted sums of the two time-dependent buckets at a single time.
inline std::pair<double, double> sigma_shifted_sums(const SigmaWeights& w,
                                                    const EnvironmentEnsemble& ens, double t,
                                                    std::size_t workers) {
    std::vector<int> needed;
    for (const auto& term : w.sigma2_terms) needed.push_back(term.kernel_m);
    for (const auto& term : w.sigma3_terms) needed.push_back(term.kernel_m);
    std::sort(needed.begin(), needed.end());
    needed.erase(std::unique(needed.begin(), needed.end()), needed.end());

    std::vector<LogComplex> kernel(static_cast<std::size_t>(w.m) + 1);
    for (int p : needed) kernel[static_cast<std::size_t>(p)] = kernel_K(p, ens, t, workers);

    auto fold = [&](const std::vector<SigmaTerm>& terms) {
        double acc = 0.0;
        for (const auto& term : terms) {
            const LogComplex& k = kernel[static_cast<std::size_t>(term.kernel_m)];
            if (k.is_zero()) continue;
            const double mag = std::exp(term.weight.log_mag - w.log_shift + k.log_mag);
            const double ph =
                term.conj_kernel ? term.weight.phase - k.phase : term.weight.phase + k.phase;
            acc += 2.0 * mag * std::cos(ph);
        }
        return acc;
    };
    return {fold(w.sigma2_terms), fold(w.sigma3_terms)};
}

} // namespace detail

// Sampled Sigma split: the constant Sigma^(1), the mirror series Sigma^(2),
// the generic series Sigma^(3), their sum Sigma^nd, and Sigma^nd normalized by
// its t = 0 value (the combinatorial growth of uniform-C weights makes only
// the normalized shape comparable across M).
struct SigmaSplit {
    TimeGrid grid;
    double sigma1{0.0};
    std::vector<double> sigma2;
    std::vector<double> sigma3;
    std::vector<double> sigma_nd;
    std::vector<double> sigma_nd_normalized;
    double normalization{0.0}; // sigma_nd at t = 0
};

inline SigmaSplit evaluate_sigma_split(const SigmaWeights& w, const EnvironmentEnsemble& ens,
                                       const TimeGrid& grid) {
    grid.validate();
    ens.validate();
    const int samples = grid.num_samples();
    std::vector<double> s2(static_cast<std::size_t>(samples)), s3(s2.size());
    parallel::parallel_for(s2.size(), [&](std::size_t k) {
        const auto [a, b] =
            detail::sigma_shifted_sums(w, ens, grid.sample(static_cast<int>(k)), 1);
        s2[k] = a;
        s3[k] = b;
    });

    SigmaSplit split;
    split.grid = grid;
    split.sigma1 = w.sigma1;
    const double scale = std::exp(w.log_shift);
    const double norm_shifted = s2[0] + s3[0];
    if (norm_shifted == 0.0)
        throw insufficient_data("sigma split: sigma_nd(0) = 0, normalized series undefined");
    split.normalization = scale * norm_shifted;
    split.sigma2.resize(s2.size());
    split.sigma3.resize(s2.size());
    split.sigma_nd.resize(s2.size());
    split.sigma_nd_normalized.resize(s2.size());
    for (std::size_t k = 0; k < s2.size(); ++k) {
        split.sigma2[k] = scale * s2[k];
        split.sigma3[k] = scale * s3[k];
        split.sigma_nd[k] = scale * (s2[k] + s3[k]);
        split.sigma_nd_normalized[k] = (s2[k] + s3[k]) / norm_shifted;
    }
    return split;
}

inline SigmaSplit sigma_split_general_d1(
    const SystemSpec& sys, const model::BlockIndex& idx, const EnvironmentEnsemble& ens,
    const TimeGrid& grid, const std::optional<Eigen::MatrixXcd>& block_s = std::nullopt) {
    return evaluate_sigma_split(sigma_weights_general_d1(sys, idx, block_s), ens, grid);
}

inline SigmaSplit sigma_split_general_d2(const SystemSpec& sys, const model::BlockIndex& idx,
                                         const EnvironmentEnsemble& ens,
                                         const Hermitian2x2& s_tilde, const TimeGrid& grid) {
    return evaluate_sigma_split(sigma_weights_general_d2(sys, idx, s_tilde), ens, grid);
}

// Single-time expectation values <O_R>(t) = Sigma^(1) + Sigma^(2) + Sigma^(3).
inline double expectation_general_d1(
    const SystemSpec& sys, const model::BlockIndex& idx, const EnvironmentEnsemble& ens, double t,
    const std::optional<Eigen::MatrixXcd>& block_s = std::nullopt) {
    const auto w = sigma_weights_general_d1(sys, idx, block_s);
    const auto [s2, s3] = detail::sigma_shifted_sums(w, ens, t, 0);
    return w.sigma1 + std::exp(w.log_shift) * (s2 + s3);
}

inline double expectation_general_d2(const SystemSpec& sys, const model::BlockIndex& idx,
                                     const EnvironmentEnsemble& ens, const Hermitian2x2& s_tilde,
                                     double t) {
    const auto w = sigma_weights_general_d2(sys, idx, s_tilde);
    const auto [s2, s3] = detail::sigma_shifted_sums(w, ens, t, 0);
    return w.sigma1 + std::exp(w.log_shift) * (s2 + s3);
}

// ---------------------------- predicted final states -------------------------

inline constexpr int kMaxReducedMatrixSystem = 10; // dense 2^M x 2^M cap

// Predicted long-time reduced states: the block-diagonal system state (present
// when the 2^M x 2^M matrix is materializable, M <= 10) and the single-particle
// diagonal of the last system particle. The bath state does not enter either
// prediction.
struct ReducedStateLimits {
    std::optional<Eigen::MatrixXcd> system_state; // degeneracy-ordered basis
    Eigen::Matrix2cd last_particle;               // {up, down} basis
};

inline ReducedStateLimits reduced_state_limits(const SystemSpec& sys,
                                               const EnvironmentEnsemble& ens) {
    sys.validate();
    ens.validate();
    const int m = sys.m;
    ReducedStateLimits out;

    double p_up = 0.5;
    if (!sys.uniform()) {
        const auto& c = *sys.amplitudes;
        p_up = 0.0;
        if (sys.arrangement == model::Arrangement::Binary) {
            for (std::uint32_t bits = 0; bits < (1u << m); ++bits)
                if ((bits & 1u) == 0u) p_up += std::norm(c[bits]);
        } else {
            const auto order = model::degeneracy_order(m);
            for (std::uint32_t lam = 0; lam < order.size(); ++lam)
                if ((order[lam] & 1u) == 0u) p_up += std::norm(c[lam]);
        }
    }
    out.last_particle = Eigen::Matrix2cd::Zero();
    out.last_particle(0, 0) = p_up;
    out.last_particle(1, 1) = 1.0 - p_up;

    if (m > kMaxReducedMatrixSystem) {
        if (!sys.uniform())
            throw unsupported_size("reduced_state_limits: dense system state requires m <= 10");
        return out; // uniform large M: only the single-particle limit is materialized
    }

    // block-diagonal state in the degeneracy-ordered basis: rho_l = C C^† per block
    const auto idx = model::block_index(m);
    const auto dim = Eigen::Index{1} << m;
    Eigen::VectorXcd c_deg(dim);
    if (sys.uniform()) {
        c_deg.setConstant(std::pow(2.0, -0.5 * m));
    } else if (sys.arrangement == model::Arrangement::Degeneracy) {
        c_deg = *sys.amplitudes;
    } else {
        const auto order = model::degeneracy_order(m);
        for (Eigen::Index lam = 0; lam < dim; ++lam) c_deg[lam] = (*sys.amplitudes)[order[lam]];
    }
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
    for (int l = 0; l <= m; ++l) {
        const auto begin = static_cast<Eigen::Index>(idx.block_begin(l));
        const auto end = static_cast<Eigen::Index>(idx.block_end(l));
        for (Eigen::Index lam = begin; lam < end; ++lam)
            for (Eigen::Index lam2 = begin; lam2 < end; ++lam2)
                rho(lam, lam2) = c_deg[lam] * std::conj(c_deg[lam2]);
    }
    out.system_state = std::move(rho);
    return out;
}

} // namespace spinbath::kernels
