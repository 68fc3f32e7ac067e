#pragma once

// Deterministic sequences derived from a rank strategy, consumed by the
// limit theorems:
//   delta_m   repeat indicator, 1 iff r(m) = r(m-1)
//   y_m       mean threshold, sum of delta_k / r(k)
//   y_hat_m   sum of 1 / r(k)
//   sigma2_m  threshold variance, sum of delta_k / r(k)^2
//   sigma2_hat_m  sum of 1 / r(k)^2
//   lambda_m  sum_{k<m} exp(y_k)
//   beta2_m   r(m)^2 * sigma2_hat_m
//
// Everything is computed in one streaming pass with compensated sums so
// the identities hold to ~1e-12 even at m of a few million.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "hiresim/series.hpp"
#include "hiresim/strategy.hpp"

namespace hiresim {

namespace detail {

struct Kahan {
    double sum = 0.0, comp = 0.0;
    void add(double x) {
        double y = x - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    operator double() const { return sum; }
};

} // namespace detail

// Streaming view of the derived sequences; advance() moves from m to m+1.
class ProfileCursor {
  public:
    explicit ProfileCursor(const RankSequence& seq) : seq_(&seq), r_(seq.rank(0)) {}

    void advance() {
        double y_prev = y_;
        log_lambda_ = log_add_exp(log_lambda_, y_prev);
        if (lambda_finite_) {
            double e = std::exp(y_prev);
            lambda_.add(e);
            if (!(lambda_.sum < 1e306)) lambda_finite_ = false;
        }
        ++m_;
        index_t r_next = seq_->rank(m_);
        delta_ = (r_next == r_) ? 1 : 0;
        r_ = r_next;
        double inv_r = 1.0 / static_cast<double>(r_);
        y_hat_.add(inv_r);
        s2_hat_.add(inv_r * inv_r);
        if (delta_) {
            y_.add(inv_r);
            s2_.add(inv_r * inv_r);
        }
    }

    void advance_to(index_t m) {
        while (m_ < m) advance();
    }

    index_t m() const { return m_; }
    index_t r() const { return r_; }
    int delta() const { return delta_; }
    double y() const { return y_; }
    double y_hat() const { return y_hat_; }
    double sigma2() const { return s2_; }
    double sigma2_hat() const { return s2_hat_; }
    double beta2() const { return static_cast<double>(r_) * static_cast<double>(r_) * s2_hat_; }
    double log_lambda() const { return log_lambda_; }
    bool lambda_finite() const { return lambda_finite_; }
    double lambda() const { return lambda_finite_ ? static_cast<double>(lambda_) : HUGE_VAL; }

  private:
    static double log_add_exp(double a, double b) {
        if (a == -HUGE_VAL) return b;
        double hi = a > b ? a : b, lo = a > b ? b : a;
        return hi + std::log1p(std::exp(lo - hi));
    }

    const RankSequence* seq_;
    index_t m_ = 0;
    index_t r_;
    int delta_ = 0;
    detail::Kahan y_, y_hat_, s2_, s2_hat_, lambda_;
    double log_lambda_ = -HUGE_VAL; // lambda_0 = 0
    bool lambda_finite_ = true;
};

struct DerivedProfile {
    index_t m_max = 0;
    std::vector<std::uint8_t> delta; // delta[k], k >= 1 (index 0 unused)
    std::vector<double> y;           // y[m], m = 0..m_max
    std::vector<double> y_hat;
    std::vector<double> sigma2;
    std::vector<double> sigma2_hat;
    std::vector<double> lambda;      // lambda[m]; +inf once past the overflow guard
    std::vector<double> log_lambda;  // always valid
    std::vector<double> beta2;
    bool lambda_finite = true;       // false if lambda overflowed before m_max
    index_t lambda_overflow_at = -1;
};

inline DerivedProfile derive_profile(const RankSequence& seq, index_t m_max) {
    if (m_max < 1) throw std::invalid_argument("derive_profile: m_max must be >= 1");
    DerivedProfile p;
    p.m_max = m_max;
    p.delta.assign(m_max + 1, 0);
    p.y.assign(m_max + 1, 0.0);
    p.y_hat.assign(m_max + 1, 0.0);
    p.sigma2.assign(m_max + 1, 0.0);
    p.sigma2_hat.assign(m_max + 1, 0.0);
    p.lambda.assign(m_max + 1, 0.0);
    p.log_lambda.assign(m_max + 1, -HUGE_VAL);
    p.beta2.assign(m_max + 1, 0.0);
    ProfileCursor c(seq);
    for (index_t m = 1; m <= m_max; ++m) {
        c.advance();
        p.delta[m] = static_cast<std::uint8_t>(c.delta());
        p.y[m] = c.y();
        p.y_hat[m] = c.y_hat();
        p.sigma2[m] = c.sigma2();
        p.sigma2_hat[m] = c.sigma2_hat();
        p.beta2[m] = c.beta2();
        p.log_lambda[m] = c.log_lambda();
        if (c.lambda_finite()) {
            p.lambda[m] = c.lambda();
        } else {
            p.lambda[m] = HUGE_VAL;
            if (p.lambda_finite) {
                p.lambda_finite = false;
                p.lambda_overflow_at = m;
            }
        }
    }
    return p;
}

struct TailDiagnosis {
    TailClass tail = TailClass::Unknown;
    // partial sum sigma2_hat at m = 1e6, reported for undeclared custom
    // sequences (convergence of the series is not finitely decidable)
    std::optional<double> sigma2_hat_1e6;
};

inline TailDiagnosis diagnose_tail(const RankSequence& seq) {
    TailDiagnosis d;
    d.tail = classify_tail(seq);
    if (d.tail == TailClass::Unknown) {
        ProfileCursor c(seq);
        c.advance_to(1000000);
        d.sigma2_hat_1e6 = c.sigma2_hat();
    }
    return d;
}

// rho = sum_{m>=1} (1/r(m) - 1/(alpha m)) for strategies with
// r(m) = alpha m + O(1) (caller asserts summability). Terms are paired
// over one alpha-period (or a fixed window for aperiodic sequences) and
// the remaining 1/K tail is removed by Richardson extrapolation; a
// Cauchy-stagnation check over doubling windows trips a divergence error
// otherwise.
inline SeriesResult rho(const RankSequence& seq, double alpha, double tol) {
    if (!(tol > 0)) throw std::invalid_argument("rho: tol must be > 0");
    SeriesOptions opt;
    opt.tol = tol;
    if (auto p = seq.period()) opt.window = std::min<index_t>(p->second, 1 << 15);
    opt.k0 = std::max<long long>(opt.k0, 4 * opt.window);
    double inv_alpha = 1.0 / alpha;
    auto res = accelerate_series(
        [&seq, inv_alpha](long long k) {
            return 1.0 / static_cast<double>(seq.rank(k)) - inv_alpha / static_cast<double>(k);
        },
        opt);
    if (res.error_estimate > tol)
        throw precision_error("rho: estimated error " + std::to_string(res.error_estimate) +
                              " exceeds the requested tolerance");
    return res;
}

inline SeriesResult rho(const RankSequence& seq, double tol) {
    double a = seq.alpha();
    if (!(a > 0)) throw std::invalid_argument("rho: strategy has no linear rate alpha");
    return rho(seq, a, tol);
}

} // namespace hiresim
