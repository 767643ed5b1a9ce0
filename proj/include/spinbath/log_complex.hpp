// log_complex.hpp — Complex values in log-polar form (ln magnitude + phase),
// the representation every long product in this library accumulates in.

#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

namespace spinbath {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Reduce a phase into [0, 2pi). fmod is exact, so negated inputs land on
// exactly mirrored representatives.
inline double reduce_phase(double phi) {
    double r = std::fmod(phi, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

// z = exp(log_mag + i phase). Zero is log_mag = -inf with phase 0. Keeps
// products of 10^9 sub-unit factors representable where doubles underflow.
struct LogComplex {
    double log_mag{0.0};
    double phase{0.0}; // in [0, 2pi)

    static LogComplex one() { return {0.0, 0.0}; }
    static LogComplex zero() { return {-std::numeric_limits<double>::infinity(), 0.0}; }

    static LogComplex from_value(std::complex<double> z) {
        if (z == std::complex<double>(0.0, 0.0)) return zero();
        return {std::log(std::abs(z)), reduce_phase(std::arg(z))};
    }

    bool is_zero() const { return std::isinf(log_mag) && log_mag < 0.0; }

    // Linear value; magnitudes below the double range clamp to 0.
    std::complex<double> value() const {
        if (is_zero()) return {0.0, 0.0};
        const double mag = std::exp(log_mag);
        return {mag * std::cos(phase), mag * std::sin(phase)};
    }

    double log_abs_sq() const { return 2.0 * log_mag; }

    LogComplex conjugated() const {
        if (is_zero() || phase == 0.0) return *this;
        return {log_mag, kTwoPi - phase};
    }

    friend LogComplex operator*(const LogComplex& a, const LogComplex& b) {
        if (a.is_zero() || b.is_zero()) return zero();
        return {a.log_mag + b.log_mag, reduce_phase(a.phase + b.phase)};
    }
};

// Sum of log-polar values, computed after shifting by the largest magnitude
// so that mixed-scale sums neither overflow nor vanish.
inline LogComplex log_sum(const std::vector<LogComplex>& terms) {
    double shift = -std::numeric_limits<double>::infinity();
    for (const auto& t : terms) shift = std::max(shift, t.log_mag);
    if (std::isinf(shift) && shift < 0.0) return LogComplex::zero();
    std::complex<double> acc{0.0, 0.0};
    for (const auto& t : terms) {
        if (t.is_zero()) continue;
        const double mag = std::exp(t.log_mag - shift);
        acc += std::complex<double>(mag * std::cos(t.phase), mag * std::sin(t.phase));
    }
    if (acc == std::complex<double>(0.0, 0.0)) return LogComplex::zero();
    return {shift + std::log(std::abs(acc)), reduce_phase(std::arg(acc))};
}

} // namespace spinbath
