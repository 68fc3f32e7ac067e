#pragma once

// Closed-form limit distributions, moment formulas and normalization
// constants for rank-threshold hiring strategies.
//
// For r(m) = alpha m + O(1), M_n / n^alpha converges a.s. to a positive
// variable W whose s-th moment is
//
//   E W^s = Gamma(s+1)/Gamma(s alpha + 2)
//           * prod_{k>=1} (1 + s/k) / (1 + s alpha / r(k)),
//
// finite exactly for s > -rstar/alpha where rstar is the first repeated
// rank value. The product is evaluated by folding Gamma(s+1) and the
// numerator factors into Gamma(K+1+s)/Gamma(K+1) (a finite identity) and
// extrapolating the 1/K truncation tail. For linear-periodic sequences
// r(m+q) = r(m) + nu the product collapses to ratios of Gamma values;
// all four equivalent closed forms are evaluated and cross-checked.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "hiresim/profile.hpp"
#include "hiresim/series.hpp"
#include "hiresim/special.hpp"
#include "hiresim/strategy.hpp"

namespace hiresim {

class infinite_moment_error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class wrong_regime_error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MomentResult {
    double value = 0;
    double log_value = 0;
    double error_estimate = 0;     // relative scale
    long long truncation_index = 0; // 0 for closed forms
    std::string method;
};

// ---- truncated infinite product -------------------------------------------

inline MomentResult moment_W_product(const RankSequence& seq, double alpha, double s,
                                     double tol = 1e-9) {
    if (!(alpha > 0 && alpha <= 1)) throw std::invalid_argument("moment_W_product: alpha in (0,1]");
    if (s == 0.0) return {1.0, 0.0, 0.0, 0, "product"};
    index_t rstar = seq.r_star();
    if (rstar != std::numeric_limits<index_t>::max() &&
        s <= -static_cast<double>(rstar) / alpha + 1e-15)
        throw infinite_moment_error("E W^s is infinite for s <= -rstar/alpha = " +
                                    std::to_string(-static_cast<double>(rstar) / alpha));
    if (s * alpha + 2.0 <= 1e-12)
        throw precision_error("moment_W_product: s alpha + 2 <= 0 is outside the product form");

    SeriesOptions opt;
    opt.tol = std::max(tol / 10.0, 1e-13);
    if (auto p = seq.period()) opt.window = std::min<index_t>(p->second, 1 << 15);
    opt.k0 = std::max<long long>({2048, 8 * opt.window, static_cast<long long>(std::ceil(-s)) + 2});

    // log E W^s = lim_K [ lgamma(K+1+s) - lgamma(K+1)
    //                     - sum_{k<=K} log(1 + s alpha / r(k)) ] - lgamma(s alpha + 2)
    SeriesResult res;
    try {
        res = accelerate_series(
            [&seq, s, alpha](long long k) {
                double x = s * alpha / static_cast<double>(seq.rank(k));
                if (!(1.0 + x > 0.0))
                    throw infinite_moment_error(
                        "moment product factor vanishes at k=" + std::to_string(k) +
                        " (moment undefined or at a removable singularity)");
                return -std::log1p(x);
            },
            [s](long long K) { return log_gamma_ratio(static_cast<double>(K) + 1.0, s); },
            opt);
    } catch (const series_divergence& e) {
        throw precision_error(std::string("moment product tail is not shrinking: ") + e.what());
    }

    double log_value = res.value - log_gamma(s * alpha + 2.0);
    return {std::exp(log_value), log_value, res.error_estimate + opt.tol, res.terms_used, "product"};
}

// ---- linear-periodic closed forms ------------------------------------------

namespace detail {

inline void check_periodic_base(index_t nu, index_t q, const std::vector<index_t>& base) {
    if (q < 1 || nu < 1 || nu > q)
        throw std::invalid_argument("moment_W_periodic: need 1 <= nu <= q");
    if (static_cast<index_t>(base.size()) != q)
        throw std::invalid_argument("moment_W_periodic: base must list r(1..q)");
    index_t prev = 1; // r(0)
    for (index_t i = 0; i < q; ++i) {
        index_t r = base[i];
        if (r < prev || r > prev + 1 || r > i + 2)
            throw std::invalid_argument("moment_W_periodic: base violates the rank constraints at i=" +
                                        std::to_string(i + 1));
        prev = r;
    }
    index_t wrap = base[0] + nu - base[q - 1]; // step from r(q) to r(q+1)
    if (wrap < 0 || wrap > 1)
        throw std::invalid_argument("moment_W_periodic: base inconsistent with r(m+q) = r(m)+nu");
}

inline index_t periodic_r_star(index_t nu, index_t q, const std::vector<index_t>& base) {
    index_t prev = 1;
    for (index_t i = 0; i < 2 * q; ++i) {
        index_t r = (i < q) ? base[i] : base[i - q] + nu;
        if (r == prev) return r;
        prev = r;
    }
    return std::numeric_limits<index_t>::max(); // nu == q with base[0] == 2: never repeats
}

} // namespace detail

// all four equivalent Gamma-ratio forms, cross-checked to 1e-10
inline MomentResult moment_W_periodic(index_t nu, index_t q, const std::vector<index_t>& base,
                                      double s) {
    detail::check_periodic_base(nu, q, base);
    const double alpha = static_cast<double>(nu) / static_cast<double>(q);
    index_t rstar = detail::periodic_r_star(nu, q, base);
    if (rstar != std::numeric_limits<index_t>::max() &&
        s <= -static_cast<double>(rstar) / alpha + 1e-15)
        throw infinite_moment_error("E W^s is infinite for s <= -rstar/alpha");
    if (s == 0.0) return {1.0, 0.0, 0.0, 0, "periodic-closed-form"};

    const double dq = static_cast<double>(q), dnu = static_cast<double>(nu);
    double base_part = 0.0; // sum over i of lg(s/q + r(i)/nu) - lg(r(i)/nu)
    for (index_t i = 0; i < q; ++i) {
        double rn = static_cast<double>(base[i]) / dnu;
        if (s / dq + rn <= 0)
            throw infinite_moment_error("moment_W_periodic: s at or past a Gamma pole");
        base_part += log_gamma(s / dq + rn) - log_gamma(rn);
    }

    // the four equivalent Gamma-ratio forms; for negative s some hit Gamma
    // poles that cancel between forms, so each is evaluated only where all
    // of its arguments are positive and the valid ones are cross-checked
    std::vector<double> forms;
    if (s > -1.0 && s * alpha + 2.0 > 0) {
        double f = log_gamma(s + 1.0) - log_gamma(s * alpha + 2.0) + base_part;
        for (index_t i = 1; i <= q; ++i)
            f += log_gamma(static_cast<double>(i) / dq) -
                 log_gamma((s + static_cast<double>(i)) / dq);
        forms.push_back(f);
    }
    double f2 = std::numeric_limits<double>::quiet_NaN();
    if (s * alpha + 2.0 > 0) {
        f2 = s * std::log(dq) - log_gamma(s * alpha + 2.0) + base_part;
        forms.push_back(f2);
    }
    if (s / dq + 2.0 / dnu > 0) {
        double f = s * std::log(dq) - alpha * s * std::log(dnu) + base_part;
        for (index_t j = 2; j <= nu + 1; ++j)
            f += log_gamma(static_cast<double>(j) / dnu) -
                 log_gamma(s / dq + static_cast<double>(j) / dnu);
        forms.push_back(f);
    }
    if (s / dq + 1.0 / dnu > 0 && dnu * s + dq > 0) {
        double f = (s + 1.0) * std::log(dq) - alpha * s * std::log(dnu) -
                   std::log(dnu * s + dq) + base_part;
        for (index_t j = 1; j <= nu; ++j)
            f += log_gamma(static_cast<double>(j) / dnu) -
                 log_gamma(s / dq + static_cast<double>(j) / dnu);
        forms.push_back(f);
    }
    if (forms.size() < 2)
        throw precision_error("moment_W_periodic: fewer than two closed forms are valid at s=" +
                              std::to_string(s));
    double lo = forms[0], hi = forms[0];
    for (double f : forms) {
        lo = std::min(lo, f);
        hi = std::max(hi, f);
    }
    if (hi - lo > 1e-10)
        throw precision_error("moment_W_periodic: closed forms disagree by " +
                              std::to_string(hi - lo));
    double best = std::isnan(f2) ? forms[0] : f2;
    return {std::exp(best), best, hi - lo, 0, "periodic-closed-form"};
}

// closed form straight from a strategy that satisfies r(m+q) = r(m)+nu for
// all m >= 1 (Median, rational Percentile, LinearPeriodic)
inline MomentResult moment_W_periodic(const RankSequence& seq, double s) {
    auto p = seq.period();
    if (!p || seq.has_transforms())
        throw std::invalid_argument("moment_W_periodic: strategy is not linear-periodic; "
                                    "use moment_W_product");
    if (seq.kind() == StrategyKind::Table)
        throw std::invalid_argument("moment_W_periodic: table prefix breaks exact periodicity; "
                                    "use moment_W_product");
    auto [nu, q] = *p;
    std::vector<index_t> base(q);
    for (index_t i = 1; i <= q; ++i) base[i - 1] = seq.rank(i);
    return moment_W_periodic(nu, q, base, s);
}

// ---- c_alpha two ways -------------------------------------------------------

// c_alpha = E W_alpha for the alpha-percentile strategy, via the moment product
inline MomentResult c_alpha(index_t num, index_t den, double tol = 1e-9) {
    RankSequence seq = RankSequence::percentile(num, den);
    return moment_W_product(seq, seq.alpha(), 1.0, tol);
}

// the same constant through the Gaither--Ward series
//   c_alpha = (1 + sum_{k>=1} (ceil(ak)-ak)/ceil(ak) * prod_{j<=k} (1+a/ceil(aj))^-1)
//             / ((a+1) Gamma(a+1))
inline MomentResult c_alpha_GW(index_t num, index_t den, double tol = 1e-9) {
    if (den <= 0 || num <= 0 || num > den) throw std::invalid_argument("c_alpha_GW: alpha in (0,1]");
    index_t g = std::gcd(num, den);
    num /= g;
    den /= g;
    const double alpha = static_cast<double>(num) / static_cast<double>(den);

    SeriesOptions opt;
    opt.tol = std::max(tol / 10.0, 1e-14);
    opt.window = std::min<index_t>(den, 1 << 15);
    opt.k0 = std::max<long long>(2048, 8 * opt.window);

    double running_prod = 1.0;
    auto res = accelerate_series(
        [num, den, alpha, running_prod](long long k) mutable {
            index_t rk = (num * k + den - 1) / den;
            running_prod /= 1.0 + alpha / static_cast<double>(rk);
            double frac = static_cast<double>(den * rk - num * k) /
                          (static_cast<double>(den) * static_cast<double>(rk));
            return frac * running_prod;
        },
        opt);

    double denom = (alpha + 1.0) * std::exp(log_gamma(alpha + 1.0));
    double value = (1.0 + res.value) / denom;
    return {value, std::log(value), res.error_estimate / denom + opt.tol, res.terms_used,
            "gaither-ward"};
}

// ---- quadrature -------------------------------------------------------------

namespace detail {

template <class F>
double adaptive_simpson(F& f, double a, double b, double fa, double fm, double fb, double whole,
                        double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

} // namespace detail

// fixed pre-subdivision so narrow bumps cannot hide from the first probes,
// then adaptive refinement inside each panel
template <class F>
double integrate(F f, double a, double b, double tol = 1e-10, int depth = 40, int panels = 32) {
    double total = 0.0;
    double h = (b - a) / panels;
    for (int i = 0; i < panels; ++i) {
        double lo = a + i * h, hi = (i + 1 == panels) ? b : a + (i + 1) * h;
        double m = 0.5 * (lo + hi);
        double fa = f(lo), fm = f(m), fb = f(hi);
        double whole = (hi - lo) / 6.0 * (fa + 4 * fm + fb);
        total += detail::adaptive_simpson(f, lo, hi, fa, fm, fb, whole, tol / panels, depth);
    }
    return total;
}

// ---- closed-form special laws ----------------------------------------------

struct LimitLaw {
    std::string variant;
    std::function<double(double)> cdf;
    std::function<double(double)> pdf;
    std::function<double(double)> moment; // E X^s where available
};

// limit of M_n/sqrt(n) for hiring above the median
inline LimitLaw rayleigh_law() {
    LimitLaw law;
    law.variant = "rayleigh";
    law.cdf = [](double x) { return x <= 0 ? 0.0 : -std::expm1(-x * x / 4.0); };
    law.pdf = [](double x) { return x <= 0 ? 0.0 : 0.5 * x * std::exp(-x * x / 4.0); };
    law.moment = [](double s) { return std::exp(s * M_LN2 + log_gamma(s / 2.0 + 1.0)); };
    return law;
}

// limit for the shifted-median sequence 1,2,2,3,3,...; W/sqrt(2) is chi(4)
inline LimitLaw chi4_law() {
    LimitLaw law;
    law.variant = "chi4";
    law.cdf = [](double x) { return x <= 0 ? 0.0 : gamma_p(2.0, x * x / 4.0); };
    law.pdf = [](double x) { return x <= 0 ? 0.0 : x * x * x / 8.0 * std::exp(-x * x / 4.0); };
    law.moment = [](double s) { return std::exp(s * M_LN2 + log_gamma(s / 2.0 + 2.0)); };
    return law;
}

// centered Gumbel law of Z for hiring above the median. The location is
// -gamma so that E Z = 0, matching the moment generating function
// E e^{sZ} = e^{-gamma s} Gamma(1-s) and the Rayleigh form of W
// (W = 2 e^{-gamma/2} e^{-Z/2} with (W/2)^2 exponential).
inline LimitLaw gumbel_z_law() {
    LimitLaw law;
    law.variant = "gumbel-z";
    law.cdf = [](double x) { return std::exp(-std::exp(-(x + euler_gamma))); };
    law.pdf = [](double x) {
        double t = std::exp(-(x + euler_gamma));
        return t * std::exp(-t);
    };
    law.moment = [](double s) { // E e^{sZ}, finite for s < 1
        return std::exp(-euler_gamma * s + log_gamma(1.0 - s));
    };
    return law;
}

class unsupported_parameter : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// asymmetric Laplace law of the offset of a uniformly chosen accepted value
// from the current threshold (alpha < 1)
inline double accepted_offset_cdf(double alpha, double u) {
    if (!(alpha > 0 && alpha < 1))
        throw unsupported_parameter("accepted-offset law requires 0 < alpha < 1");
    if (u <= 0) return (1.0 - alpha) * std::exp(alpha * u / (1.0 - alpha));
    return 1.0 - alpha * std::exp(-u);
}

inline double accepted_offset_pdf(double alpha, double u) {
    if (!(alpha > 0 && alpha < 1))
        throw unsupported_parameter("accepted-offset law requires 0 < alpha < 1");
    if (u < 0) return alpha * std::exp(alpha * u / (1.0 - alpha));
    return alpha * std::exp(-u);
}

inline LimitLaw laplace_offset_law(double alpha) {
    LimitLaw law;
    law.variant = "accepted-offset";
    law.cdf = [alpha](double u) { return accepted_offset_cdf(alpha, u); };
    law.pdf = [alpha](double u) { return accepted_offset_pdf(alpha, u); };
    return law;
}

inline LimitLaw exponential_law() {
    LimitLaw law;
    law.variant = "exp(1)";
    law.cdf = [](double x) { return x <= 0 ? 0.0 : -std::expm1(-x); };
    law.pdf = [](double x) { return x <= 0 ? 0.0 : std::exp(-x); };
    law.moment = [](double s) { return std::exp(log_gamma(s + 1.0)); };
    return law;
}

// scaled-gap limit L = E / (alpha W): cdf via quadrature against the W density.
// Quadrature grid: adaptive Simpson on [0, w_hi] at 1e-10 target.
inline LimitLaw gap_law(double alpha, std::function<double(double)> w_pdf, double w_hi = 60.0) {
    LimitLaw law;
    law.variant = "scaled-gap";
    law.cdf = [alpha, w_pdf, w_hi](double x) {
        if (x <= 0) return 0.0;
        auto f = [&](double t) { return w_pdf(t) * std::exp(-alpha * x * t); };
        return 1.0 - integrate(f, 0.0, w_hi, 1e-10);
    };
    law.pdf = [alpha, w_pdf, w_hi](double x) {
        if (x <= 0) return 0.0;
        auto f = [&](double t) { return w_pdf(t) * alpha * t * std::exp(-alpha * x * t); };
        return integrate(f, 0.0, w_hi, 1e-10);
    };
    return law;
}

// ---- small-r normalizations --------------------------------------------------

struct CLTNormalizer {
    index_t mu = 0;      // smallest m with y_hat_m >= log n
    double gamma = 0;    // beta(mu) = r(mu) * sqrt(sigma2_hat_mu)
    double y_hat_mu = 0;
    double log_n = 0;
};

// normalizer of Gaussian fluctuations of M_n in the small-r(m) regime.
// mu is the crossing index of y_hat over log n; the increments 1/r(k) <= 1
// keep the defect within [0,1), which satisfies the O(1) slack allowed by
// the centering condition.
inline CLTNormalizer clt_normalizer(const RankSequence& seq, double n) {
    if (!(n >= 3)) throw std::invalid_argument("clt_normalizer: n >= 3");
    if (classify_tail(seq) != TailClass::Small)
        throw wrong_regime_error("clt_normalizer applies to small-r(m) strategies only");
    CLTNormalizer out;
    out.log_n = std::log(n);
    ProfileCursor c(seq);
    while (c.y_hat() < out.log_n) {
        c.advance();
        if (c.m() > (1LL << 40)) throw precision_error("clt_normalizer: crossing index too large");
    }
    out.mu = c.m();
    out.gamma = std::sqrt(c.beta2());
    out.y_hat_mu = c.y_hat();
    return out;
}

// Gaussian descriptor for M_n under a small-r normalizer
inline LimitLaw normal_clt_law(const CLTNormalizer& norm) {
    LimitLaw law;
    law.variant = "normal-clt";
    const double mu = static_cast<double>(norm.mu), gamma = norm.gamma;
    law.cdf = [mu, gamma](double x) { return normal_cdf((x - mu) / gamma); };
    law.pdf = [mu, gamma](double x) {
        double z = (x - mu) / gamma;
        return std::exp(-0.5 * z * z) / (gamma * std::sqrt(2 * M_PI));
    };
    return law;
}

// log-normal descriptor for N_m in the small-r regime:
// log N_m ~ N(y_m + log r(m), sigma2_hat_m) asymptotically
inline LimitLaw lognormal_count_law(const RankSequence& seq, index_t m) {
    if (classify_tail(seq) != TailClass::Small)
        throw wrong_regime_error("lognormal_count_law applies to small-r(m) strategies only");
    ProfileCursor c(seq);
    c.advance_to(m);
    const double center = c.y() + std::log(static_cast<double>(c.r()));
    const double sd = std::sqrt(c.sigma2_hat());
    LimitLaw law;
    law.variant = "lognormal-count";
    law.cdf = [center, sd](double x) {
        return x <= 0 ? 0.0 : normal_cdf((std::log(x) - center) / sd);
    };
    law.pdf = [center, sd](double x) {
        if (x <= 0) return 0.0;
        double z = (std::log(x) - center) / sd;
        return std::exp(-0.5 * z * z) / (x * sd * std::sqrt(2 * M_PI));
    };
    return law;
}

// standardize a sample of N_m: (log N_m - (y_m + log r(m))) / sqrt(sigma2_hat_m)
inline double tnsmall_normalize(const RankSequence& seq, index_t m, double n_m_sample) {
    if (classify_tail(seq) != TailClass::Small)
        throw wrong_regime_error("tnsmall_normalize applies to small-r(m) strategies only");
    if (m < 1 || !(n_m_sample > 0)) throw std::invalid_argument("tnsmall_normalize: bad arguments");
    ProfileCursor c(seq);
    c.advance_to(m);
    double center = c.y() + std::log(static_cast<double>(c.r()));
    return (std::log(n_m_sample) - center) / std::sqrt(c.sigma2_hat());
}

// ---- gaps and acceptance probability -----------------------------------------

// E L^s = alpha^{-s} Gamma(s+1) E W^{-s}, valid for -1 < s < rstar/alpha
inline MomentResult gap_moment(const RankSequence& seq, double alpha, double s,
                               double tol = 1e-9) {
    index_t rstar = seq.r_star();
    double hi = static_cast<double>(rstar) / alpha;
    if (!(s > -1.0 && s < hi))
        throw infinite_moment_error("E L^s is infinite outside -1 < s < rstar/alpha");
    if (s == 0.0) return {1.0, 0.0, 0.0, 0, "gap-moment"};
    MomentResult w = moment_W_product(seq, alpha, -s, tol);
    double log_value = -s * std::log(alpha) + log_gamma(s + 1.0) + w.log_value;
    return {std::exp(log_value), log_value, w.error_estimate, w.truncation_index, "gap-moment"};
}

// P_n ~ alpha W n^(alpha-1), given a realization (or moment) of W
inline double P_n_asymptotic(double alpha, double n, double w_value) {
    return alpha * w_value * std::pow(n, alpha - 1.0);
}

// ---- moment transport under sequence edits ------------------------------------

// prepending an extra 1 divides E W^s by (1 + alpha s)
inline double insert_one_moment(double alpha, double s, double ew_s) {
    return ew_s / (1.0 + alpha * s);
}

// decreasing r(m) by one multiplies E W^s by (1+s alpha/r(m)) / (1+s alpha/(r(m)-1))
inline double decrement_moment(double alpha, double s, index_t r_m, double ew_s) {
    if (r_m < 2) throw invalid_transform("decrement_moment: r(m) must be >= 2");
    return ew_s * (1.0 + s * alpha / static_cast<double>(r_m)) /
           (1.0 + s * alpha / static_cast<double>(r_m - 1));
}

} // namespace hiresim
