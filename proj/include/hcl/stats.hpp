#pragma once

// Small numerical helpers shared across the library: Gaussian pdf/cdf,
// inverse Mills ratio with asymptotic guard, digamma, adaptive Simpson
// quadrature, and deterministic seed derivation.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>

namespace hcl {

inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr double kSqrt2Pi = 2.5066282746310002;
inline constexpr double kLog2Pi = 1.8378770664093453;

inline double norm_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// pdf(t) / cdf(-t), stable for large |t|.  For t > 8 the direct ratio
// underflows, so switch to the tail expansion t + 1/t - 2/t^3.
inline double inverse_mills(double t) {
    if (t > 8.0) {
        const double inv = 1.0 / t;
        return t + inv - 2.0 * inv * inv * inv;
    }
    const double denom = norm_cdf(-t);
    if (denom <= 0.0) {
        const double inv = 1.0 / t;
        return t + inv - 2.0 * inv * inv * inv;
    }
    return norm_pdf(t) / denom;
}

// Digamma via recurrence into the asymptotic region.
inline double digamma(double x) {
    if (x <= 0.0 && x == std::floor(x)) {
        throw std::domain_error("digamma: nonpositive integer argument");
    }
    double result = 0.0;
    while (x < 6.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    result += std::log(x) - 0.5 * inv -
              inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
    return result;
}

// log of the multivariate gamma function Gamma_D(a).
inline double log_multigamma(double a, int dim) {
    double out = 0.25 * static_cast<double>(dim) * (dim - 1) * std::log(M_PI);
    for (int d = 0; d < dim; ++d) {
        out += std::lgamma(a - 0.5 * d);
    }
    return out;
}

namespace detail {

inline double simpson_rule(double fa, double fm, double fb, double a, double b) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f,
                                   double a, double b, double fa, double fm, double fb,
                                   double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson_rule(fa, flm, fm, a, m);
    const double right = simpson_rule(fm, frm, fb, m, b);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f,
                               double a, double b, double tol = 1e-8) {
    if (!(b > a)) {
        if (a == b) return 0.0;
        throw std::invalid_argument("adaptive_simpson: b must exceed a");
    }
    const double fa = f(a);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double fb = f(b);
    const double whole = detail::simpson_rule(fa, fm, fb, a, b);
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

// splitmix64 step; used to derive independent child seeds from a root seed
// so nested components stay deterministic without sharing RNG state.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace hcl
