#pragma once

// Tail extrapolation for slowly converging series.
//
// The series handled here have partial sums of the form
//   S(K) = L + A/K + O(1/K^2) + osc(K)
// where osc is a bounded oscillation of period P (one alpha-period of the
// rank sequence). Averaging S over a window of length P removes the
// oscillation; two-level Richardson extrapolation over doubling K removes
// the 1/K and 1/K^2 tails. The returned error estimate is the spread of
// the last extrapolation level plus the last refinement step.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace hiresim {

class series_divergence : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class precision_error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SeriesResult {
    double value = 0;
    double error_estimate = 0;
    long long terms_used = 0;
};

struct SeriesOptions {
    long long k0 = 2048;        // first checkpoint
    long long window = 64;      // smoothing window (use the alpha-period)
    double tol = 1e-10;
    long long max_terms = 1LL << 27;
    bool detect_divergence = true;
};

// term(k) is called once for every k = 1,2,3,... in order (it may carry
// running state); boundary(k) is an optional closed-form part of the
// partial sum, e.g. log-Gamma prefactors that depend on the truncation
// point. partial(K) = boundary(K) + sum_{k<=K} term(k).
template <class TermFn, class BoundaryFn>
SeriesResult accelerate_series(TermFn&& term, BoundaryFn&& boundary, SeriesOptions opt = {}) {
    if (opt.window < 1) opt.window = 1;
    long long k0 = std::max(opt.k0, 4 * opt.window);

    double sum = 0.0, comp = 0.0; // Kahan
    long long k = 0;

    auto add_term = [&](double t) {
        double y = t - comp;
        double s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    };

    // smoothed checkpoints S̄(K), K = k0 * 2^j
    double s_prev2 = 0, s_prev1 = 0, s_cur = 0;
    int checkpoints = 0;
    double best = 0, best_err = std::numeric_limits<double>::infinity();
    double prev_extrap = 0;
    bool have_prev_extrap = false;
    double prev_step = std::numeric_limits<double>::infinity();
    int non_shrinking = 0;

    for (long long K = k0; K <= opt.max_terms; K *= 2) {
        while (k < K - opt.window) add_term(term(++k));
        double acc = 0.0;
        for (long long i = 0; i < opt.window; ++i) {
            add_term(term(++k));
            acc += sum + boundary(k);
        }
        s_prev2 = s_prev1;
        s_prev1 = s_cur;
        s_cur = acc / static_cast<double>(opt.window);
        ++checkpoints;

        if (checkpoints >= 2 && opt.detect_divergence) {
            double step = std::abs(s_cur - s_prev1);
            if (checkpoints >= 3) {
                if (step > 0.6 * prev_step && step > std::max(opt.tol, 1e-13)) {
                    if (++non_shrinking >= 4)
                        throw series_divergence(
                            "partial sums not Cauchy over doubling windows (last window delta " +
                            std::to_string(step) + ")");
                } else {
                    non_shrinking = 0;
                }
            }
            prev_step = step;
        }

        if (checkpoints >= 3) {
            double e1a = 2 * s_prev1 - s_prev2;
            double e1b = 2 * s_cur - s_prev1;
            double e2 = (4 * e1b - e1a) / 3;
            double err = std::abs(e2 - e1b);
            if (have_prev_extrap) err += std::abs(e2 - prev_extrap);
            prev_extrap = e2;
            have_prev_extrap = true;
            if (err < best_err) {
                best = e2;
                best_err = err;
            }
            // the two-term estimate needs at least two extrapolations
            if (checkpoints >= 4 && best_err <= opt.tol) return {best, best_err, k};
        }
    }
    if (checkpoints < 3)
        throw precision_error("series: max_terms too small for extrapolation");
    return {best, best_err, k};
}

template <class TermFn>
SeriesResult accelerate_series(TermFn&& term, SeriesOptions opt = {}) {
    return accelerate_series(std::forward<TermFn>(term), [](long long) { return 0.0; }, opt);
}

} // namespace hiresim
