#pragma once

// Statistical test kernel: Kolmogorov-Smirnov (one- and two-sample, with
// asymptotic p-values), chi-square against exact expected counts, and
// normal-approximation moment checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "hiresim/special.hpp"

namespace hiresim {

class degenerate_input : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct KsResult {
    double d = 0;          // sup-distance between the CDFs
    double p_value = 1;    // asymptotic, via the Kolmogorov distribution
    double n_effective = 0;
};

inline KsResult ks_one_sample(std::vector<double> samples,
                              const std::function<double(double)>& cdf) {
    if (samples.size() < 2) throw degenerate_input("ks_one_sample: need at least 2 samples");
    std::sort(samples.begin(), samples.end());
    if (samples.front() == samples.back())
        throw degenerate_input("ks_one_sample: sample has zero variance");
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
        double f = cdf(samples[i]);
        d = std::max(d, std::max(f - static_cast<double>(i) / n,
                                 static_cast<double>(i + 1) / n - f));
    }
    return {d, kolmogorov_q(std::sqrt(n) * d), n};
}

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.size() < 2 || b.size() < 2) throw degenerate_input("ks_two_sample: need samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a.front() == a.back() && b.front() == b.back() && a.front() == b.front())
        throw degenerate_input("ks_two_sample: both samples degenerate at one point");
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double d = 0.0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    double ne = na * nb / (na + nb);
    return {d, kolmogorov_q(std::sqrt(ne) * d), ne};
}

struct ChiSquareResult {
    double statistic = 0;
    double p_value = 1;
    long long dof = 0;
};

inline ChiSquareResult chi_square(const std::vector<double>& counts,
                                  const std::vector<double>& expected, long long ddof = 0) {
    if (counts.size() != expected.size() || counts.size() < 2)
        throw std::invalid_argument("chi_square: need matching count/expected vectors");
    double stat = 0.0;
    for (size_t i = 0; i < counts.size(); ++i) {
        if (!(expected[i] > 0)) throw degenerate_input("chi_square: nonpositive expected count");
        double d = counts[i] - expected[i];
        stat += d * d / expected[i];
    }
    long long dof = static_cast<long long>(counts.size()) - 1 - ddof;
    if (dof < 1) throw std::invalid_argument("chi_square: no degrees of freedom left");
    return {stat, chi_square_tail(static_cast<double>(dof), stat), dof};
}

// two-sample chi-square on matched count vectors
inline ChiSquareResult chi_square_two_sample(const std::vector<double>& a,
                                             const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("chi_square_two_sample: need matching count vectors");
    double ka = 0, kb = 0;
    for (double v : a) ka += v;
    for (double v : b) kb += v;
    if (!(ka > 0) || !(kb > 0)) throw degenerate_input("chi_square_two_sample: empty sample");
    double stat = 0;
    long long cells = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        double tot = a[i] + b[i];
        if (tot == 0) continue;
        double d = kb * a[i] - ka * b[i];
        stat += d * d / tot;
        ++cells;
    }
    stat /= ka * kb;
    if (cells < 2) throw degenerate_input("chi_square_two_sample: fewer than two occupied cells");
    return {stat, chi_square_tail(static_cast<double>(cells - 1), stat), cells - 1};
}

// pool adjacent cells until every expected count reaches min_expected
inline void merge_sparse_bins(std::vector<double>& counts, std::vector<double>& expected,
                              double min_expected = 5.0) {
    std::vector<double> c, e;
    double cc = 0, ce = 0;
    for (size_t i = 0; i < counts.size(); ++i) {
        cc += counts[i];
        ce += expected[i];
        if (ce >= min_expected) {
            c.push_back(cc);
            e.push_back(ce);
            cc = ce = 0;
        }
    }
    if (ce > 0 || cc > 0) {
        if (!e.empty()) {
            c.back() += cc;
            e.back() += ce;
        } else {
            c.push_back(cc);
            e.push_back(ce);
        }
    }
    counts = std::move(c);
    expected = std::move(e);
}

struct Summary {
    double mean = 0;
    double variance = 0; // unbiased (n-1)
    double min = 0, max = 0;
    long long n = 0;
};

inline Summary summarize(const std::vector<double>& xs) {
    if (xs.empty()) throw degenerate_input("summarize: empty sample");
    Summary s;
    s.n = static_cast<long long>(xs.size());
    s.min = s.max = xs[0];
    // two-pass mean/variance; the samples fit in memory anyway
    double c = 0.0;
    for (double x : xs) {
        double y = x - c;
        double t = s.mean + y;
        c = (t - s.mean) - y;
        s.mean = t;
    }
    s.mean /= static_cast<double>(s.n);
    double v = 0.0;
    for (double x : xs) {
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
        double d = x - s.mean;
        v += d * d;
    }
    s.variance = s.n > 1 ? v / static_cast<double>(s.n - 1) : 0.0;
    return s;
}

struct MomentCi {
    double estimate = 0;
    double se = 0;
    double lo = 0, hi = 0;
    double target = 0;
    bool pass = false;
};

// normal CI for the mean of X^s at z standard errors
inline MomentCi moment_ci(const std::vector<double>& samples, double s, double target,
                          double z = 3.0) {
    std::vector<double> pow_s;
    pow_s.reserve(samples.size());
    for (double x : samples) pow_s.push_back(s == 1.0 ? x : std::pow(x, s));
    Summary sum = summarize(pow_s);
    if (!(sum.variance > 0)) throw degenerate_input("moment_ci: zero variance");
    MomentCi ci;
    ci.estimate = sum.mean;
    ci.se = std::sqrt(sum.variance / static_cast<double>(sum.n));
    ci.lo = sum.mean - z * ci.se;
    ci.hi = sum.mean + z * ci.se;
    ci.target = target;
    ci.pass = target >= ci.lo && target <= ci.hi;
    return ci;
}

inline double correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("correlation: bad input");
    Summary sx = summarize(x), sy = summarize(y);
    if (!(sx.variance > 0) || !(sy.variance > 0))
        throw degenerate_input("correlation: zero variance");
    double c = 0.0;
    for (size_t i = 0; i < x.size(); ++i) c += (x[i] - sx.mean) * (y[i] - sy.mean);
    c /= static_cast<double>(x.size() - 1);
    return c / std::sqrt(sx.variance * sy.variance);
}

} // namespace hiresim
