#pragma once

// Exact samplers for the hiring process.
//
// Four distribution-equivalent routes are provided and tested against
// each other:
//   * simulate_direct / simulate_summary  value-by-value runs that keep
//     the r(m) largest accepted values in a min-heap (the threshold is
//     its minimum). The summary sampler aggregates the waiting run
//     between acceptances into one geometric draw once the acceptance
//     probability drops below p_switch; the waiting law is geometric by
//     definition of i.i.d. candidates, so the aggregation is exact.
//   * sample_thresholds / sample_N_fast  the threshold path as a sum of
//     independent exponential increments delta_k E_k / r(k), with
//     geometric inter-acceptance counts given the path.
//   * sample_T_continuous  the Poissonized acceptance epochs.
//   * brute_force_distribution / exact_distribution_markov  exact laws of
//     M_n by permutation enumeration (n <= 10) and by the acceptance
//     transition P(accept | M_j = m) = r(m)/(j+1).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "hiresim/rng.hpp"
#include "hiresim/series.hpp"
#include "hiresim/strategy.hpp"

namespace hiresim {

class unsupported_conditioning : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// the r(m) largest accepted values; threshold = smallest of them, or 0
// while fewer than r(m) candidates have been accepted
class ThresholdHeap {
  public:
    double threshold(index_t r_m) const {
        return static_cast<index_t>(heap_.size()) >= r_m ? heap_.front() : 0.0;
    }
    // call after the acceptance count moved to m+1, with r_next = r(m+1):
    // insert the new value, then drop the minimum iff r did not grow
    void accept(double x, index_t r_next) {
        heap_.push_back(x);
        std::push_heap(heap_.begin(), heap_.end(), std::greater<>());
        if (static_cast<index_t>(heap_.size()) > r_next) {
            std::pop_heap(heap_.begin(), heap_.end(), std::greater<>());
            heap_.pop_back();
        }
    }
    void reserve(size_t n) { heap_.reserve(n); }

  private:
    std::vector<double> heap_;
};

} // namespace detail

// ---- full traces -------------------------------------------------------------

struct HiringTrace {
    index_t n = 0;
    std::vector<double> values;              // X_1..X_n (index 0 unused)
    std::vector<std::uint8_t> accepted;      // I_1..I_n
    std::vector<index_t> M;                  // M_0..M_n
    std::vector<double> N;                   // N_1..N_{M_n} (index 0 unused)
    std::vector<double> thresholds_at_exam;  // threshold seen by candidate k
    std::vector<double> thresholds_by_count; // Y_0..Y_{M_n}
    std::vector<double> accepted_values;     // X_{N_1}..X_{N_{M_n}}
    RngSeed seed;
};

namespace detail {

template <class ValueFn>
HiringTrace run_trace(const RankSequence& seq, index_t n, RngSeed seed, ValueFn&& value) {
    if (n < 1) throw std::invalid_argument("simulate: n must be >= 1");
    HiringTrace t;
    t.n = n;
    t.seed = seed;
    t.values.assign(n + 1, 0.0);
    t.accepted.assign(n + 1, 0);
    t.M.assign(n + 1, 0);
    t.thresholds_at_exam.assign(n + 1, 0.0);
    t.N.assign(1, 0.0);
    t.thresholds_by_count.assign(1, 0.0);
    detail::ThresholdHeap heap;
    index_t m = 0;
    index_t r_m = seq.rank(0);
    double y = 0.0;
    for (index_t k = 1; k <= n; ++k) {
        double x = value(k);
        t.values[k] = x;
        t.thresholds_at_exam[k] = y;
        if (r_m == m + 1 || x > y) {
            ++m;
            r_m = seq.rank(m);
            heap.accept(x, r_m);
            y = heap.threshold(r_m);
            t.accepted[k] = 1;
            t.N.push_back(static_cast<double>(k));
            t.accepted_values.push_back(x);
            t.thresholds_by_count.push_back(y);
        }
        t.M[k] = m;
    }
    return t;
}

} // namespace detail

// value-by-value run on i.i.d. unit-rate exponential values
inline HiringTrace simulate_direct(const RankSequence& seq, index_t n, Rng rng) {
    return detail::run_trace(seq, n, rng.seed(), [&rng](index_t) { return rng.exponential(); });
}

// deterministic run on a permutation of 1..n used as values; by rank
// invariance the accept decisions match any value sequence with the same
// relative order
inline HiringTrace simulate_permutation(const RankSequence& seq, const std::vector<index_t>& ranks) {
    std::vector<index_t> sorted(ranks);
    std::sort(sorted.begin(), sorted.end());
    for (index_t i = 0; i < static_cast<index_t>(sorted.size()); ++i)
        if (sorted[i] != i + 1)
            throw std::invalid_argument("simulate_permutation: input is not a permutation of 1..n");
    return detail::run_trace(seq, static_cast<index_t>(ranks.size()), RngSeed{},
                             [&ranks](index_t k) { return static_cast<double>(ranks[k - 1]); });
}

// conditioned on X_1 = x1; requires r(1) = 1 (conditioning with r(1) = 2 is
// an open problem and refused)
inline HiringTrace conditional_simulate(const RankSequence& seq, index_t n, double x1, Rng rng) {
    if (seq.rank(1) != 1)
        throw unsupported_conditioning("conditional_simulate: requires r(1) = 1");
    if (!(x1 >= 0)) throw std::invalid_argument("conditional_simulate: x1 must be >= 0");
    return detail::run_trace(seq, n, rng.seed(), [&rng, x1](index_t k) {
        return k == 1 ? x1 : rng.exponential();
    });
}

// ---- summary runs (large horizons) --------------------------------------------

struct SimOptions {
    // below this acceptance probability the waiting run to the next
    // acceptance is drawn as one geometric variable
    double p_switch = 1e-3;
    bool keep_N = true;
    bool keep_accepted_values = false;
    double forced_x1 = -1.0; // >= 0: condition on X_1 (requires r(1) = 1)
};

struct TraceSummary {
    index_t n = 0;
    index_t M_n = 0;
    std::vector<double> N;       // N_1..N_{M_n} (index 0 unused)
    double N_last = 0;           // index of the last acceptance
    double L_n = 0;              // n - N_{M_n}
    double P_n = 1;              // acceptance probability faced by candidate n
    double threshold_at_exam_n = 0;
    double final_threshold = 0;  // Y_{M_n}
    std::vector<double> accepted_values;
    RngSeed seed;
};

inline TraceSummary simulate_summary(const RankSequence& seq, index_t n, Rng rng,
                                     const SimOptions& opt = {}) {
    if (n < 1) throw std::invalid_argument("simulate: n must be >= 1");
    TraceSummary t;
    t.n = n;
    t.seed = rng.seed();
    detail::ThresholdHeap heap;
    index_t m = 0;
    index_t r_m = seq.rank(0);
    double y = 0.0, p = 1.0;
    double pos = 0.0;
    const double dn = static_cast<double>(n);
    double p_at_n = -1.0, y_at_n = 0.0;

    bool force_first = opt.forced_x1 >= 0.0;
    if (force_first && seq.rank(1) != 1)
        throw unsupported_conditioning("conditional simulation requires r(1) = 1");

    if (opt.keep_N) t.N.push_back(0.0);
    auto accept = [&](double x) {
        ++m;
        r_m = seq.rank(m);
        heap.accept(x, r_m);
        y = heap.threshold(r_m);
        p = (r_m == m + 1) ? 1.0 : std::exp(-y);
        t.N_last = pos;
        if (opt.keep_N) t.N.push_back(pos);
        if (opt.keep_accepted_values) t.accepted_values.push_back(x);
    };

    if (force_first) {
        pos = 1.0;
        if (n == 1) {
            p_at_n = 1.0;
            y_at_n = 0.0;
        }
        accept(opt.forced_x1);
    }

    while (pos < dn) {
        if (p >= opt.p_switch) {
            pos += 1.0;
            if (pos == dn) {
                p_at_n = p;
                y_at_n = y;
            }
            double u = rng.uniform();
            if (r_m == m + 1 || u < p) accept(-std::log(u));
        } else {
            double v = rng.geometric(p);
            if (pos + v >= dn) {
                if (pos + v > dn) { // no further acceptance within the horizon
                    pos = dn;
                    p_at_n = p;
                    y_at_n = y;
                    break;
                }
                p_at_n = p;
                y_at_n = y;
            }
            pos += v;
            accept(y + rng.exponential());
        }
    }
    t.M_n = m;
    t.L_n = dn - t.N_last;
    t.P_n = p_at_n;
    t.threshold_at_exam_n = y_at_n;
    t.final_threshold = y;
    return t;
}

// number of acceptances within the horizon, nothing else retained
inline index_t simulate_count(const RankSequence& seq, index_t n, Rng rng,
                              double p_switch = 1e-3) {
    SimOptions opt;
    opt.p_switch = p_switch;
    opt.keep_N = false;
    return simulate_summary(seq, n, rng, opt).M_n;
}

// ---- N_m sampling --------------------------------------------------------------

// direct route: run the value-by-value process until the m-th acceptance for
// each requested m (ms must be increasing)
inline std::vector<double> sample_N_direct(const RankSequence& seq, const std::vector<index_t>& ms,
                                           Rng rng, double p_switch = 1e-3) {
    if (ms.empty() || ms.front() < 1 || !std::is_sorted(ms.begin(), ms.end()))
        throw std::invalid_argument("sample_N_direct: need increasing target counts >= 1");
    std::vector<double> out;
    out.reserve(ms.size());
    detail::ThresholdHeap heap;
    index_t m = 0;
    index_t r_m = seq.rank(0);
    double y = 0.0, p = 1.0;
    double pos = 0.0;
    size_t next = 0;
    const index_t m_max = ms.back();
    while (m < m_max) {
        double x;
        if (p >= p_switch) {
            pos += 1.0;
            double u = rng.uniform();
            if (!(r_m == m + 1 || u < p)) continue;
            x = -std::log(u);
        } else {
            pos += rng.geometric(p);
            x = y + rng.exponential();
        }
        ++m;
        r_m = seq.rank(m);
        heap.accept(x, r_m);
        y = heap.threshold(r_m);
        p = (r_m == m + 1) ? 1.0 : std::exp(-y);
        if (next < ms.size() && m == ms[next]) {
            out.push_back(pos);
            ++next;
        }
    }
    return out;
}

// threshold after m_max acceptances through the value-by-value machinery
// (the direct counterpart of sample_thresholds)
inline double sample_Y_direct(const RankSequence& seq, index_t m_max, Rng rng,
                              double p_switch = 1e-3) {
    detail::ThresholdHeap heap;
    index_t m = 0;
    index_t r_m = seq.rank(0);
    double y = 0.0, p = 1.0;
    while (m < m_max) {
        double x;
        if (p >= p_switch) {
            double u = rng.uniform();
            if (!(r_m == m + 1 || u < p)) continue;
            x = -std::log(u);
        } else {
            rng.geometric(p);
            x = y + rng.exponential();
        }
        ++m;
        r_m = seq.rank(m);
        heap.accept(x, r_m);
        y = heap.threshold(r_m);
        p = (r_m == m + 1) ? 1.0 : std::exp(-y);
    }
    return y;
}

// threshold path per the exponential-increment representation
struct ThresholdPath {
    std::vector<double> Y;          // Y_0..Y_m
    std::vector<double> increments; // E_k actually used (0 where delta_k = 0)
};

inline ThresholdPath sample_thresholds(const RankSequence& seq, index_t m_max, Rng rng) {
    if (m_max < 1) throw std::invalid_argument("sample_thresholds: m_max >= 1");
    ThresholdPath path;
    path.Y.assign(m_max + 1, 0.0);
    path.increments.assign(m_max + 1, 0.0);
    index_t r_prev = seq.rank(0);
    for (index_t k = 1; k <= m_max; ++k) {
        index_t r = seq.rank(k);
        double y = path.Y[k - 1];
        if (r == r_prev) {
            double e = rng.exponential();
            path.increments[k] = e;
            y += e / static_cast<double>(r);
        }
        path.Y[k] = y;
        r_prev = r;
    }
    return path;
}

// N_1..N_{m_max} as cumulative geometric counts along a fresh threshold path
inline std::vector<double> sample_N_fast(const RankSequence& seq, index_t m_max, Rng rng) {
    if (m_max < 1) throw std::invalid_argument("sample_N_fast: m_max >= 1");
    std::vector<double> out(m_max + 1, 0.0);
    index_t r_prev = seq.rank(0);
    double y = 0.0;
    double n = 0.0;
    for (index_t k = 0; k < m_max; ++k) {
        double p = std::exp(-y);
        if (!(p > 0.0))
            throw std::domain_error("sample_N_fast: geometric success probability underflowed at m=" +
                                    std::to_string(k) + "; reduce m_max");
        n += rng.geometric(p);
        out[k + 1] = n;
        index_t r = seq.rank(k + 1);
        if (r == r_prev) y += rng.exponential() / static_cast<double>(r);
        r_prev = r;
    }
    return out;
}

// Poissonized acceptance epochs T_1..T_{m_max}
inline std::vector<double> sample_T_continuous(const RankSequence& seq, index_t m_max, Rng rng) {
    if (m_max < 1) throw std::invalid_argument("sample_T_continuous: m_max >= 1");
    std::vector<double> out(m_max + 1, 0.0);
    index_t r_prev = seq.rank(0);
    double y = 0.0;
    double t = 0.0;
    for (index_t k = 0; k < m_max; ++k) {
        t += std::exp(y) * rng.exponential();
        out[k + 1] = t;
        index_t r = seq.rank(k + 1);
        if (r == r_prev) y += rng.exponential() / static_cast<double>(r);
        r_prev = r;
    }
    return out;
}

// ---- trace statistics ------------------------------------------------------------

struct GapStatistics {
    double L_n = 0;
    double P_n = 1;
};

inline GapStatistics gap_statistics(const HiringTrace& t) {
    GapStatistics g;
    g.L_n = static_cast<double>(t.n) - t.N.back();
    g.P_n = std::exp(-t.thresholds_at_exam[t.n]);
    return g;
}

inline GapStatistics gap_statistics(const TraceSummary& t) { return {t.L_n, t.P_n}; }

// offsets of every accepted value from the threshold seen by candidate n
inline std::vector<double> accepted_offsets(const HiringTrace& t) {
    std::vector<double> out;
    out.reserve(t.accepted_values.size());
    double yhat_n = t.thresholds_at_exam[t.n];
    for (double x : t.accepted_values) out.push_back(x - yhat_n);
    return out;
}

inline std::vector<double> accepted_offsets(const TraceSummary& t) {
    if (t.accepted_values.empty())
        throw std::invalid_argument("accepted_offsets: summary was run without keep_accepted_values");
    std::vector<double> out;
    out.reserve(t.accepted_values.size());
    for (double x : t.accepted_values) out.push_back(x - t.threshold_at_exam_n);
    return out;
}

// ---- exact distributions -----------------------------------------------------------

struct ExactDistribution {
    index_t n = 0;
    std::vector<double> pmf_M; // P(M_n = m), m = 0..n
    std::vector<double> pmf_L; // P(L_n = l), l = 0..n-1
};

// exhaustive enumeration of all n! permutations (factorial guard at n = 10)
inline ExactDistribution brute_force_distribution(const RankSequence& seq, index_t n) {
    if (n < 1) throw std::invalid_argument("brute_force_distribution: n >= 1");
    if (n > 10) {
        double cost = 1;
        for (index_t k = 2; k <= n; ++k) cost *= static_cast<double>(k);
        throw std::invalid_argument("brute_force_distribution: n = " + std::to_string(n) +
                                    " needs " + std::to_string(cost) +
                                    " permutations; the guard admits n <= 10 (3628800)");
    }
    std::vector<index_t> r(n + 1);
    for (index_t m = 0; m <= n; ++m) r[m] = seq.rank(m);

    std::array<index_t, 10> perm{};
    for (index_t i = 0; i < n; ++i) perm[i] = i + 1;
    std::vector<std::uint64_t> count_M(n + 1, 0), count_L(n, 0);
    std::uint64_t total = 0;
    std::array<index_t, 10> acc{}; // accepted values, ascending
    do {
        index_t m = 0;
        index_t last = 0;
        for (index_t k = 1; k <= n; ++k) {
            index_t v = perm[k - 1];
            // threshold is the r(m)-th largest accepted value (0 if r(m) = m+1)
            index_t threshold = (r[m] <= m) ? acc[m - r[m]] : 0;
            if (v > threshold) {
                index_t pos = m;
                while (pos > 0 && acc[pos - 1] > v) {
                    acc[pos] = acc[pos - 1];
                    --pos;
                }
                acc[pos] = v;
                ++m;
                last = k;
            }
        }
        ++count_M[m];
        ++count_L[n - last];
        ++total;
    } while (std::next_permutation(perm.begin(), perm.begin() + n));

    ExactDistribution d;
    d.n = n;
    d.pmf_M.assign(n + 1, 0.0);
    d.pmf_L.assign(n, 0.0);
    for (index_t m = 0; m <= n; ++m) d.pmf_M[m] = static_cast<double>(count_M[m]) / total;
    for (index_t l = 0; l < n; ++l) d.pmf_L[l] = static_cast<double>(count_L[l]) / total;
    return d;
}

// exact law of M_n for any horizon: M_j is Markov with acceptance
// probability r(m)/(j+1) in state m, by the rank symmetry of the process
inline std::vector<double> exact_distribution_markov(const RankSequence& seq, index_t n,
                                                     index_t m_cap = -1) {
    if (n < 1) throw std::invalid_argument("exact_distribution_markov: n >= 1");
    if (m_cap < 0 || m_cap > n) m_cap = n;
    std::vector<double> r(m_cap + 1);
    for (index_t m = 0; m <= m_cap; ++m) r[m] = static_cast<double>(seq.rank(m));
    std::vector<double> p(m_cap + 2, 0.0);
    p[0] = 1.0;
    index_t hi = 0;
    double leaked = 0.0;
    for (index_t j = 0; j < n; ++j) {
        const double inv = 1.0 / static_cast<double>(j + 1);
        index_t top = std::min(hi, m_cap);
        if (top == m_cap) leaked += p[m_cap] * r[m_cap] * inv;
        for (index_t m = top; m >= 0; --m) {
            double move = p[m] * r[m] * inv;
            p[m] -= move;
            p[m + 1] += move;
        }
        if (hi < m_cap) ++hi;
        while (hi > 1 && p[hi] < 1e-320 && p[hi - 1] < 1e-320) --hi;
    }
    if (leaked > 1e-9)
        throw precision_error("exact_distribution_markov: mass " + std::to_string(leaked) +
                              " escaped past m_cap; raise m_cap");
    p.resize(m_cap + 1);
    return p;
}

} // namespace hiresim
