#pragma once

// Special functions backing the limit laws and the statistical tests:
// log-Gamma, regularized incomplete gamma (chi-square tails), the
// Kolmogorov distribution, the normal CDF and harmonic numbers.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hiresim {

constexpr double euler_gamma = 0.57721566490153286060651209008240243;

// std::lgamma on glibc is accurate to ~1e-15 relative for positive
// arguments, which is all we evaluate.
inline double log_gamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("log_gamma: requires x > 0");
    return std::lgamma(x);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

// lgamma(x+s) - lgamma(x) without the cancellation of subtracting two
// large values; for x >= 512 the Stirling difference is exact to ~1e-18,
// which the truncated-product extrapolation depends on.
inline double log_gamma_ratio(double x, double s) {
    if (x < 512.0) return std::lgamma(x + s) - std::lgamma(x);
    const double xs = x + s;
    double d = (xs - 0.5) * std::log1p(s / x) + s * std::log(x) - s;
    d += (1.0 / 12.0) * (1.0 / xs - 1.0 / x);
    d -= (1.0 / 360.0) * (1.0 / (xs * xs * xs) - 1.0 / (x * x * x));
    const double x5 = x * x * x * x * x, xs5 = xs * xs * xs * xs * xs;
    d += (1.0 / 1260.0) * (1.0 / xs5 - 1.0 / x5);
    return d;
}

namespace detail {

// regularized lower incomplete gamma P(a,x) by series expansion
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 1000; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-16)
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw std::runtime_error("gamma_p_series: no convergence");
}

// regularized upper incomplete gamma Q(a,x) by continued fraction (Lentz)
inline double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16)
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw std::runtime_error("gamma_q_cf: no convergence");
}

} // namespace detail

inline double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::domain_error("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_cf(a, x);
}

inline double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::domain_error("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_cf(a, x);
}

// chi-square upper tail with k degrees of freedom
inline double chi_square_tail(double k, double x) { return gamma_q(0.5 * k, 0.5 * x); }

// P(sup|B(t)| <= z) for the Brownian bridge: the Kolmogorov distribution.
// Dual theta-series evaluation, small-z and large-z branches.
inline double kolmogorov_cdf(double z) {
    if (z <= 0.0) return 0.0;
    if (z < 1.18) {
        // theta-series branch: sqrt(2pi)/z * sum over odd j of exp(-j^2 pi^2 / (8 z^2))
        const double e = -M_PI * M_PI / (8.0 * z * z);
        return std::sqrt(2.0 * M_PI) / z *
               (std::exp(e) + std::exp(9.0 * e) + std::exp(25.0 * e) + std::exp(49.0 * e));
    }
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        double t = std::exp(-2.0 * k * k * z * z);
        sum += sign * t;
        sign = -sign;
        if (t < 1e-18) break;
    }
    return 1.0 - 2.0 * sum;
}

// upper tail Q(z) = 1 - kolmogorov_cdf(z)
inline double kolmogorov_q(double z) { return 1.0 - kolmogorov_cdf(z); }

inline double harmonic(long long n) {
    double s = 0.0, c = 0.0;
    for (long long k = 1; k <= n; ++k) {
        double y = 1.0 / static_cast<double>(k) - c;
        double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    return s;
}

inline double harmonic2(long long n) {
    double s = 0.0, c = 0.0;
    for (long long k = 1; k <= n; ++k) {
        double y = 1.0 / (static_cast<double>(k) * static_cast<double>(k)) - c;
        double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    return s;
}

} // namespace hiresim
