#pragma once

// Finite-sample statistical experiments for the limit theorems, each with
// an explicit pass/fail contract and a serializable report.
//
// Thresholds, horizons and replicate counts are pre-registered in the
// experiment defaults below; the seed must be supplied by the caller.
// Replicates run embarrassingly parallel on substreams indexed by
// replicate, and every statistic is computed after a merge ordered by
// replicate index, so verdicts do not depend on the thread count.

#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hiresim/io.hpp"
#include "hiresim/laws.hpp"
#include "hiresim/profile.hpp"
#include "hiresim/simulate.hpp"
#include "hiresim/special.hpp"
#include "hiresim/stats.hpp"
#include "hiresim/strategy.hpp"

namespace hiresim {

struct ExperimentSpec {
    std::string name;
    std::string strategy;       // DSL; experiments have their own defaults
    index_t n = 0;              // horizon
    index_t m = 0;              // acceptance count, where applicable
    index_t replicates = 0;
    double level = 0;           // test level (or CI z encoded by the check)
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
};

struct CheckResult {
    std::string name;
    double statistic = 0;
    double p_value = std::numeric_limits<double>::quiet_NaN();
    double target = std::numeric_limits<double>::quiet_NaN();
    double threshold = std::numeric_limits<double>::quiet_NaN();
    std::string provenance; // where the target comes from
    bool pass = false;
};

struct TestReport {
    ExperimentSpec spec;
    std::vector<CheckResult> checks;
    bool pass = false;
    double runtime_seconds = 0;
    nlohmann::json details;

    void finish() {
        pass = !checks.empty();
        for (const auto& c : checks) pass = pass && c.pass;
    }
};

inline nlohmann::json report_to_json(const TestReport& r, bool include_runtime = false) {
    nlohmann::json j;
    j["schema_version"] = schema_version;
    j["experiment"] = r.spec.name;
    j["strategy"] = r.spec.strategy;
    j["n"] = r.spec.n;
    j["m"] = r.spec.m;
    j["replicates"] = r.spec.replicates;
    j["level"] = r.spec.level;
    j["seed"] = r.spec.seed;
    j["threads_do_not_affect_results"] = true;
    j["pass"] = r.pass;
    j["checks"] = nlohmann::json::array();
    for (const auto& c : r.checks) {
        nlohmann::json cj;
        cj["name"] = c.name;
        cj["statistic"] = c.statistic;
        if (!std::isnan(c.p_value)) cj["p_value"] = c.p_value;
        if (!std::isnan(c.target)) cj["target"] = c.target;
        if (!std::isnan(c.threshold)) cj["threshold"] = c.threshold;
        cj["provenance"] = c.provenance;
        cj["pass"] = c.pass;
        j["checks"].push_back(cj);
    }
    if (!r.details.is_null()) j["details"] = r.details;
    if (include_runtime) j["runtime_seconds"] = r.runtime_seconds;
    return j;
}

// ---- deterministic parallel replicates ----------------------------------------

template <class Fn>
void parallel_replicates(index_t replicates, int threads, std::uint64_t master, Fn fn) {
    threads = std::max(1, threads);
    if (threads == 1) {
        for (index_t i = 0; i < replicates; ++i) fn(i, Rng(master, static_cast<std::uint64_t>(i)));
        return;
    }
    std::atomic<index_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (index_t i = next.fetch_add(1); i < replicates; i = next.fetch_add(1))
                fn(i, Rng(master, static_cast<std::uint64_t>(i)));
        });
    }
    for (auto& th : pool) th.join();
}

namespace detail {

inline std::chrono::steady_clock::time_point tic() { return std::chrono::steady_clock::now(); }
inline double toc(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline CheckResult ks_check(const std::string& name, const KsResult& ks, double level,
                            const std::string& provenance) {
    CheckResult c;
    c.name = name;
    c.statistic = ks.d;
    c.p_value = ks.p_value;
    c.threshold = level;
    c.provenance = provenance;
    c.pass = ks.p_value > level;
    return c;
}

inline CheckResult d_check(const std::string& name, double d, double d_max,
                           const std::string& provenance) {
    CheckResult c;
    c.name = name;
    c.statistic = d;
    c.threshold = d_max;
    c.provenance = provenance;
    c.pass = d < d_max;
    return c;
}

inline CheckResult ci_check(const std::string& name, const MomentCi& ci,
                            const std::string& provenance) {
    CheckResult c;
    c.name = name;
    c.statistic = ci.estimate;
    c.target = ci.target;
    c.threshold = ci.hi - ci.estimate; // z * SE
    c.provenance = provenance;
    c.pass = ci.pass;
    return c;
}

} // namespace detail

// ---- experiment implementations ------------------------------------------------

// M_n / sqrt(n) for hiring above the median converges to the Rayleigh law
// with density x/2 exp(-x^2/4); mean sqrt(pi).
inline TestReport experiment_median_rayleigh(ExperimentSpec spec) {
    if (spec.strategy.empty()) spec.strategy = "median";
    if (spec.n == 0) spec.n = 100000;
    if (spec.replicates == 0) spec.replicates = 10000;
    auto seq = parse_strategy(spec.strategy);
    auto t0 = detail::tic();
    std::vector<double> x(spec.replicates);
    const double rt_n = std::sqrt(static_cast<double>(spec.n));
    parallel_replicates(spec.replicates, spec.threads, spec.seed, [&](index_t i, Rng rng) {
        x[i] = static_cast<double>(simulate_count(seq, spec.n, rng)) / rt_n;
    });
    TestReport rep;
    rep.spec = spec;
    auto law = rayleigh_law();
    rep.checks.push_back(detail::d_check("ks_vs_rayleigh", ks_one_sample(x, law.cdf).d, 0.02,
                                         "Rayleigh cdf 1-exp(-x^2/4)"));
    rep.checks.push_back(detail::ci_check("mean_vs_sqrt_pi",
                                          moment_ci(x, 1.0, std::sqrt(M_PI), 3.0),
                                          "E W = sqrt(pi), median moment formula at s=1"));
    rep.finish();
    rep.runtime_seconds = detail::toc(t0);
    return rep;
}

// every entry of the percentile moment table, both through the periodic
// closed forms (rel. 1e-8) and through the truncated product (rel. 1e-6)
inline TestReport experiment_percentile_moment_table(ExperimentSpec spec) {
    auto t0 = detail::tic();
    TestReport rep;
    spec.name = spec.name.empty() ? "percentile_moment_table" : spec.name;
    auto G = [](double v) { return std::tgamma(v); };
    const double pi = M_PI, rt_pi = std::sqrt(M_PI);
    struct Row {
        index_t nu, q;
        double ew1, ew2;
        const char* note;
    };
    const Row rows[] = {
        {1, 1, 0.5, 1.0 / 3.0, "alpha=1: U(0,1)"},
        {1, 2, 2 * rt_pi / 3, 2.0, "alpha=1/2"},
        {1, 3, G(1.0 / 3) * G(1.0 / 3) / 4, 12.0 / 5 * G(2.0 / 3) * G(2.0 / 3), "alpha=1/3"},
        {2, 3, 3 / (std::pow(2, 2.0 / 3) * 5) * G(1.0 / 3),
         9 / (std::pow(2, 1.0 / 3) * 7) * G(2.0 / 3), "alpha=2/3"},
        {1, 4, std::pow(G(0.25), 3) / 20, 4.0 / 3 * std::pow(pi, 1.5), "alpha=1/4"},
        {3, 4, 4 / (std::pow(3, 0.75) * 7) * G(0.25), 16 / (std::pow(3, 1.5) * 5) * rt_pi,
         "alpha=3/4"},
        {1, 5, std::pow(G(0.2), 4) / 150, 16.0 / 35 * std::pow(G(0.4), 4), "alpha=1/5"},
        {2, 5, std::pow(2, 0.2) / 7 * G(0.2) * G(0.4),
         std::pow(2, 1.4) * 5 / 9 * G(0.4) * G(0.8), "alpha=2/5"},
        {3, 5, 5 * G(13.0 / 15) * G(0.2) / (std::pow(3, 0.6) * 8 * G(2.0 / 3)),
         10 * G(1.0 / 15) * G(0.4) / (std::pow(3, 2.2) * 11 * G(2.0 / 3)), "alpha=3/5"},
        {4, 5, 5 / (std::pow(2, 1.6) * 9) * G(0.2), 25 / (std::pow(2, 2.2) * 13) * G(0.4),
         "alpha=4/5"},
    };
    for (const auto& row : rows) {
        auto seq = RankSequence::percentile(row.nu, row.q);
        for (int s = 1; s <= 2; ++s) {
            double target = s == 1 ? row.ew1 : row.ew2;
            double closed = moment_W_periodic(seq, s).value;
            double product = moment_W_product(seq, seq.alpha(), s, 1e-9).value;
            std::string label = std::string(row.note) + " s=" + std::to_string(s);
            rep.checks.push_back(detail::d_check("closed_form " + label,
                                                 std::abs(closed - target) / target, 1e-8,
                                                 "percentile moment table"));
            rep.checks.push_back(detail::d_check("product " + label,
                                                 std::abs(product - target) / target, 1e-6,
                                                 "percentile moment table"));
        }
    }
    rep.spec = spec;
    rep.finish();
    rep.runtime_seconds = detail::toc(t0);
    return rep;
}

// records: exact finite-n moments from the independent Be(1/k) indicators
inline TestReport experiment_records_clt(ExperimentSpec spec) {
    if (spec.strategy.empty()) spec.strategy = "best-of:1";
    if (spec.n == 0) spec.n = 1000000;
    if (spec.replicates == 0) spec.replicates = 10000;
    auto seq = parse_strategy(spec.strategy);
    if (seq.kind() != StrategyKind::BestOf || seq.rank(1) != 1)
        throw wrong_regime_error("records_clt: strategy must be best-of:1");
    auto t0 = detail::tic();
    std::vector<double> m(spec.replicates);
    parallel_replicates(spec.replicates, spec.threads, spec.seed, [&](index_t i, Rng rng) {
        m[i] = static_cast<double>(simulate_count(seq, spec.n, rng));
    });
    const double h1 = harmonic(spec.n), h2 = harmonic2(spec.n);
    TestReport rep;
    rep.spec = spec;
    rep.checks.push_back(detail::ci_check("mean_vs_harmonic", moment_ci(m, 1.0, h1, 3.0),
                                          "E M_n = H_n, independent Be(1/k) indicators"));
    Summary s = summarize(m);
    CheckResult var;
    var.name = "variance_vs_harmonic";
    var.statistic = s.variance;
    var.target = h1 - h2;
    var.threshold = 0.05;
    var.provenance = "Var M_n = H_n - H_n^(2)";
    var.pass = std::abs(s.variance - var.target) / var.target < 0.05;
    rep.checks.push_back(var);
    rep.finish();
    rep.runtime_seconds = detail::toc(t0);
    return rep;
}

// small-r CLT for best-of-r under the crossing normalizer, with the
// pre-registered fallback (mean within 3 SE of 0, variance in [0.9, 1.1]);
// exact-law diagnostics from the Markov transition are attached
inline TestReport experiment_best_of_r_clt(ExperimentSpec spec) {
    if (spec.strategy.empty()) spec.strategy = "best-of:3";
    if (spec.n == 0) spec.n = 100000;
    if (spec.replicates == 0) spec.replicates = 10000;
    if (spec.level == 0) spec.level = 0.01;
    auto seq = parse_strategy(spec.strategy);
    auto norm = clt_normalizer(seq, static_cast<double>(spec.n)); // throws on wrong regime
    auto t0 = detail::tic();
    std::vector<double> z(spec.replicates);
    const double mu = static_cast<double>(norm.mu), gamma = norm.gamma;
    parallel_replicates(spec.replicates, spec.threads, spec.seed, [&](index_t i, Rng rng) {
        z[i] = (static_cast<double>(simulate_count(seq, spec.n, rng)) - mu) / gamma;
    });
    TestReport rep;
    rep.spec = spec;
    auto ks = detail::ks_check("ks_vs_normal", ks_one_sample(z, normal_cdf), spec.level,
                               "small-r normal limit, crossing normalizer");
    auto mean = detail::ci_check("fallback_mean", moment_ci(z, 1.0, 0.0, 3.0),
                                 "normalized mean 0");
    Summary s = summarize(z);
    CheckResult var;
    var.name = "fallback_variance";
    var.statistic = s.variance;
    var.target = 1.0;
    var.threshold = 0.1;
    var.provenance = "normalized variance in [0.9, 1.1]";
    var.pass = s.variance >= 0.9 && s.variance <= 1.1;

    // criterion: KS at the stated level, else the documented fallback;
    // the sub-check numbers are reported in the details
    CheckResult overall;
    overall.name = "clt_pass";
    overall.statistic = ks.statistic;
    overall.p_value = ks.p_value;
    overall.threshold = spec.level;
    overall.provenance = "KS at level, or fallback mean+variance bands";
    overall.pass = ks.pass || (mean.pass && var.pass);
    rep.checks = {overall};
    rep.details["ks_d"] = ks.statistic;
    rep.details["ks_p"] = ks.p_value;
    rep.details["ks_pass"] = ks.pass;
    rep.details["fallback_mean"] = mean.statistic;
    rep.details["fallback_mean_3se"] = mean.threshold;
    rep.details["fallback_mean_pass"] = mean.pass;
    rep.details["fallback_variance"] = var.statistic;
    rep.details["fallback_variance_pass"] = var.pass;

    // exact finite-n law for reference (cheap for bounded r)
    if (spec.n <= 200000) {
        index_t cap = std::min<index_t>(spec.n, norm.mu + 30 * static_cast<index_t>(gamma) + 40);
        auto pmf = exact_distribution_markov(seq, spec.n, cap);
        double em = 0, em2 = 0;
        for (size_t k = 0; k < pmf.size(); ++k) {
            em += static_cast<double>(k) * pmf[k];
            em2 += static_cast<double>(k) * static_cast<double>(k) * pmf[k];
        }
        rep.details["exact_mean_M_n"] = em;
        rep.details["exact_var_M_n"] = em2 - em * em;
        rep.details["normalizer_mu"] = mu;
        rep.details["normalizer_gamma2"] = gamma * gamma;
        rep.details["exact_mean_offset_in_gamma_units"] = (em - mu) / gamma;
        rep.details["exact_var_ratio"] = (em2 - em * em) / (gamma * gamma);
    }
    rep.finish();
    rep.runtime_seconds = detail::toc(t0);
    return rep;
}

// floor(sqrt(m)) strategy: moments against the exact Markov law (the normal
// limit itself is log-slow; the exact finite-n law is the sharp yardstick)
inline TestReport experiment_sqrtm_clt(ExperimentSpec spec) {
    if (spec.strategy.empty()) spec.strategy = "sqrt-floor";
    if (spec.n == 0) spec.n = 1000000;
    if (spec.replicates == 0) spec.replicates = 5000;
    auto seq = parse_strategy(spec.strategy);
    auto norm = clt_normalizer(seq, static_cast<double>(spec.n));
    auto t0 = detail::tic();
    std::vector<double> m(spec.replicates);
    parallel_replicates(spec.replicates, spec.threads, spec.seed, [&](index_t i, Rng rng) {
        m[i] = static_cast<double>(simulate_count(seq, spec.n, rng));
    });
    index_t cap = norm.mu + 30 * static_cast<index_t>(norm.gamma) + 40;
    auto pmf = exact_distribution_markov(seq, spec.n, std::min<index_t>(cap, spec.n));
    double em = 0, em2 = 0;
    for (size_t k = 0; k < pmf.size(); ++k) {
        em += static_cast<double>(k) * pmf[k];
        em2 += static_cast<double>(k) * static_cast<double>(k) * pmf[k];
    }
    double ev = em2 - em * em;
    TestReport rep;
    rep.spec = spec;
    rep.checks.push_back(detail::ci_check("mean_vs_exact_markov", moment_ci(m, 1.0, em, 3.0),
                                          "exact acceptance-transition law"));
    Summary s = summarize(m);
    CheckResult var;
    var.name = "variance_vs_exact_markov";
    var.statistic = s.variance;
    var.target = ev;
    var.threshold = 0.10;
    var.provenance = "exact acceptance-transition law";
    var.pass = std::abs(s.variance - ev) / ev < 0.10;
    rep.checks.push_back(var);
    rep.details["normalizer_mu"] = norm.mu;
    rep.details["normalizer_gamma2"] = norm.gamma * norm.gamma;
    rep.details["exact_mean_M_n"] = em;
    rep.details["exact_var_M_n"] = ev;
    rep.finish();
    rep.runtime_seconds = detail::toc(t0);
    return rep;
}

// log-normal fluctuation of N_m in the small-r regime. The centering
// constant carries an O(1) drift that only decays like 1/sqrt(m), while
// exp(-Y_m) underflows doubles near m = 700 for records, so a raw
// KS-vs-normal test cannot reach its nominal level at any representable m
// (D stays >= ~0.02 against a 1% critical value of ~0.014 at R=1e4). As
// for the other log-slow regimes, the contract is therefore a trend check
// plus explicit bands: the KS distance must shrink from m to 4m and end
// below 0.03, with the normalized mean within 0.15 and the variance
// within 10% of 1 at the larger m.
inline TestReport experiment_tnsmall_check(ExperimentSpec spec) {
    if (spec.strategy.empty()) spec.strategy = "best-of:1";
    if (spec.m == 0) spec.m = 150;
    if (spec.replicates == 0) spec.replicates = 10000;
    auto seq = parse_strategy(spec.strategy);
    auto t0 = detail::tic();
    const index_t m_lo = spec.m, m_hi = 4 * spec.m;
    auto run_at = [&](index_t m, std::uint64_t salt) {
        std::vector<double> z(spec.replicates);
        parallel_replicates(spec.replicates, spec.threads, spec.seed + salt,
                            [&](index_t i, Rng rng) {
                                auto n = sample_N_fast(seq, m, rng);
                                z[i] = tnsmall_normalize(seq, m, n[m]);
                            });
        return z;
    };
    auto z_lo = run_at(m_lo, 0);
    auto z_hi = run_at(m_hi, 0x9e3779b97f4a7c15ULL);
    double d_lo = ks_one_sample(z_lo, normal_cdf).d;
    double d_hi = ks_one_sample(z_hi, normal_cdf).d;
    Summary s_hi = summarize(z_hi);

    TestReport rep;
    rep.spec = spec;
    CheckResult trend;
    trend.name = "ks_distance_shrinks";
    trend.statistic = d_hi;
    trend.threshold = 0.03;
    trend.provenance = "trend check: D(4m) < D(m) and D(4m) < 0.03 (finite-m drift is O(1/sqrt(m)))";
    trend.pass = d_hi < d_lo && d_hi < 0.03;
    rep.checks.push_back(trend);
    CheckResult mean;
    mean.name = "normalized_mean";
    mean.statistic = s_hi.mean;
    mean.target = 0.0;
    mean.threshold = 0.15;
    mean.provenance = "normalized mean within the documented O(1)/sqrt(m) drift band";
    mean.pass = std::abs(s_hi.mean) < 0.15;
    rep.checks.push_back(mean);
    CheckResult var;
    var.name = "normalized_variance";
    var.statistic = s_hi.variance;
    var.target = 1.0;
    var.threshold = 0.10;
    var.provenance = "normalized variance within 10% of 1";
    var.pass = std::abs(s_hi.variance - 1.0) < 0.10;
    rep.checks.push_back(var);
    rep.details["ks_d_at_m"] = d_lo;
    rep.details["ks_d_at_4m"] = d_hi;
    rep.details["m"] = m_lo;
    rep.finish();
    rep.runtime_seconds = detail::toc(t0);
    return rep;
}

// pooled accepted-value offsets against the asymmetric Laplace law
inline TestReport experiment_tle_offsets(ExperimentSpec spec) {
    if (spec.strategy.empty()) spec.strategy = "percentile:0.5";
    if (spec.n == 0) spec.n = 100000;
    if (spec.replicates == 0) spec.replicates = 100;
    auto seq = parse_strategy(spec.strategy);
    const double alpha = seq.alpha();
    auto t0 = detail::tic();
    std::vector<std::vector<double>> per_seed(spec.replicates);
    SimOptions opt;
    opt.keep_N = false;
    opt.keep_accepted_values = true;
    parallel_replicates(spec.replicates, spec.threads, spec.seed, [&](index_t i, Rng rng) {
        per_seed[i] = accepted_offsets(simulate_summary(seq, spec.n, rng, opt));
    });
    std::vector<double> pooled;
    for (auto& v : per_seed) pooled.insert(pooled.end(), v.begin(), v.end());
    TestReport rep;
    rep.spec = spec;
    auto law = laplace_offset_law(alpha);
    rep.checks.push_back(detail::d_check("ks_vs_offset_law", ks_one_sample(pooled, law.cdf).d,
                                         0.03, "asymmetric Laplace offset law"));
    rep.details["pooled_offsets"] = pooled.size();
    rep.finish();
    rep.runtime_seconds = detail::toc(t0);
    return rep;
}

// fraction of accepted values above the current threshold -> alpha
inline TestReport experiment_tle_fraction(ExperimentSpec spec) {
    if (spec.strategy.empty()) spec.strategy = "percentile:0.5";
    if (spec.n == 0) spec.n = 100000;
    if (spec.replicates == 0) spec.replicates = 100;
    auto seq = parse_strategy(spec.strategy);
    const double alpha = seq.alpha();
    auto t0 = detail::tic();
    std::vector<double> fraction(spec.replicates);
    SimOptions opt;
    opt.keep_N = false;
    opt.keep_accepted_values = true;
    parallel_replicates(spec.replicates, spec.threads, spec.seed, [&](index_t i, Rng rng) {
        auto offs = accepted_offsets(simulate_summary(seq, spec.n, rng, opt));
        index_t above = 0;
        for (double o : offs) above += o > 0;
        fraction[i] = static_cast<double>(above) / static_cast<double>(offs.size());
    });
    index_t in_band = 0;
    for (double f : fraction) in_band += std::abs(f - alpha) <= 0.05;
    TestReport rep;
    rep.spec = spec;
    CheckResult c;
    c.name = "fraction_above_threshold";
    c.statistic = static_cast<double>(in_band);
    c.target = alpha;
    c.threshold = std::ceil(0.95 * static_cast<double>(spec.replicates));
    c.provenance = "fraction -> alpha a.s.; band alpha +/- 0.05 on >= 95% of seeds";
    c.pass = in_band >= static_cast<index_t>(c.threshold);
    rep.checks.push_back(c);
    rep.finish();
    rep.runtime_seconds = detail::toc(t0);
    return rep;
}

// P_n * L_n converges to Exp(1)
inline TestReport experiment_gap_exponential(ExperimentSpec spec) {
    if (spec.strategy.empty()) spec.strategy = "median";
    if (spec.n == 0) spec.n = 100000;
    if (spec.replicates == 0) spec.replicates = 10000;
    if (spec.level == 0) spec.level = 0.01;
    auto seq = parse_strategy(spec.strategy);
    auto t0 = detail::tic();
    std::vector<double> x(spec.replicates);
    SimOptions opt;
    opt.keep_N = false;
    parallel_replicates(spec.replicates, spec.threads, spec.seed, [&](index_t i, Rng rng) {
        auto g = gap_statistics(simulate_summary(seq, spec.n, rng, opt));
        x[i] = g.P_n * g.L_n;
    });
    TestReport rep;
    rep.spec = spec;
    rep.checks.push_back(detail::ks_check("ks_vs_exp1", ks_one_sample(x, exponential_law().cdf),
                                          spec.level, "P_n L_n -> Exp(1)"));
    rep.finish();
    rep.runtime_seconds = detail::toc(t0);
    return rep;
}

// L_n / n^(1-alpha) converges to the scaled-gap law; its mean for the
// median strategy is sqrt(pi)
inline TestReport experiment_gap_scaled_law(ExperimentSpec spec) {
    if (spec.strategy.empty()) spec.strategy = "median";
    if (spec.n == 0) spec.n = 100000;
    if (spec.replicates == 0) spec.replicates = 10000;
    auto seq = parse_strategy(spec.strategy);
    const double alpha = seq.alpha();
    auto t0 = detail::tic();
    std::vector<double> x(spec.replicates);
    const double scale = std::pow(static_cast<double>(spec.n), 1.0 - alpha);
    SimOptions opt;
    opt.keep_N = false;
    parallel_replicates(spec.replicates, spec.threads, spec.seed, [&](index_t i, Rng rng) {
        x[i] = simulate_summary(seq, spec.n, rng, opt).L_n / scale;
    });
    TestReport rep;
    rep.spec = spec;
    double target = gap_moment(seq, alpha, 1.0).value;
    rep.checks.push_back(detail::ci_check("mean_vs_gap_moment", moment_ci(x, 1.0, target, 3.0),
                                          "E L = alpha^-1 Gamma(2) E W^-1 (sqrt(pi) for median)"));
    // distributional diagnostic against the quadrature cdf of L = E/(alpha W)
    if (seq.kind() == StrategyKind::Median) {
        auto law = gap_law(alpha, rayleigh_law().pdf);
        rep.details["ks_vs_quadrature_cdf"] = ks_one_sample(x, law.cdf).d;
    }
    rep.finish();
    rep.runtime_seconds = detail::toc(t0);
    return rep;
}

// median conditioned on X_1 = ln 4: mean of M_n/sqrt(n) -> (3/4) sqrt(pi)
inline TestReport experiment_conditional_first_value(ExperimentSpec spec) {
    if (spec.strategy.empty()) spec.strategy = "median";
    if (spec.n == 0) spec.n = 100000;
    if (spec.replicates == 0) spec.replicates = 10000;
    auto seq = parse_strategy(spec.strategy);
    auto t0 = detail::tic();
    std::vector<double> x(spec.replicates);
    const double rt_n = std::sqrt(static_cast<double>(spec.n));
    SimOptions opt;
    opt.forced_x1 = std::log(4.0);
    opt.keep_N = false;
    parallel_replicates(spec.replicates, spec.threads, spec.seed, [&](index_t i, Rng rng) {
        x[i] = static_cast<double>(simulate_summary(seq, spec.n, rng, opt).M_n) / rt_n;
    });
    TestReport rep;
    rep.spec = spec;
    const double target = 0.75 * std::sqrt(M_PI); // p^(1/2) E W-check = 1/2 * 2 Gamma(5/2)
    rep.checks.push_back(detail::ci_check("mean_vs_conditional_limit",
                                          moment_ci(x, 1.0, target, 3.0),
                                          "conditional limit p^a E W-check at p = 1/4"));
    rep.finish();
    rep.runtime_seconds = detail::toc(t0);
    return rep;
}

inline const std::vector<std::string>& oracle_builtin_strategies() {
    static const std::vector<std::string> v = {
        "median",      "percentile:0.5",  "best-of:1",
        "best-of:3",   "sqrt-floor",      "irregular-octal",
        "periodic:nu=1,q=2,r=1,2",
    };
    return v;
}

// empirical law of M_n against exhaustive permutation enumeration
inline TestReport experiment_oracle_equivalence(ExperimentSpec spec) {
    if (spec.replicates == 0) spec.replicates = 1000000;
    if (spec.level == 0) spec.level = 0.001;
    std::vector<std::string> strategies =
        spec.strategy.empty() ? oracle_builtin_strategies() : std::vector<std::string>{spec.strategy};
    std::vector<index_t> horizons;
    if (spec.n == 0)
        horizons = {4, 5, 6, 7, 8};
    else
        horizons = {spec.n};
    auto t0 = detail::tic();
    TestReport rep;
    rep.spec = spec;
    std::uint64_t stream = 0;
    for (const auto& dsl : strategies) {
        auto seq = parse_strategy(dsl);
        for (index_t n : horizons) {
            auto exact = brute_force_distribution(seq, n);
            // exact transition law must agree with the enumeration bit-for-bit
            auto markov = exact_distribution_markov(seq, n);
            double dual_gap = 0;
            for (index_t k = 0; k <= n; ++k)
                dual_gap = std::max(dual_gap, std::abs(exact.pmf_M[k] - markov[k]));

            std::vector<std::vector<index_t>> counts_per_thread(std::max(1, spec.threads),
                                                                std::vector<index_t>(n + 1, 0));
            std::uint64_t master = spec.seed + 0x9e3779b97f4a7c15ULL * (++stream);
            std::atomic<index_t> next{0};
            auto worker = [&](int tid) {
                auto& counts = counts_per_thread[tid];
                for (index_t i = next.fetch_add(8192); i < spec.replicates;
                     i = next.fetch_add(8192)) {
                    index_t hi = std::min(spec.replicates, i + 8192);
                    for (index_t r = i; r < hi; ++r) {
                        Rng rng(master, static_cast<std::uint64_t>(r));
                        counts[simulate_count(seq, n, rng)] += 1;
                    }
                }
            };
            if (spec.threads <= 1) {
                worker(0);
            } else {
                std::vector<std::thread> pool;
                for (int t = 0; t < spec.threads; ++t) pool.emplace_back(worker, t);
                for (auto& th : pool) th.join();
            }
            std::vector<double> counts(n + 1, 0), expected(n + 1, 0);
            for (auto& part : counts_per_thread)
                for (index_t k = 0; k <= n; ++k) counts[k] += static_cast<double>(part[k]);
            for (index_t k = 0; k <= n; ++k)
                expected[k] = exact.pmf_M[k] * static_cast<double>(spec.replicates);
            merge_sparse_bins(counts, expected);
            auto cs = chi_square(counts, expected);
            CheckResult c;
            c.name = dsl + " n=" + std::to_string(n);
            c.statistic = cs.statistic;
            c.p_value = cs.p_value;
            c.threshold = spec.level;
            c.provenance = "chi-square vs n! enumeration (enumeration vs transition law gap " +
                           format_double(dual_gap) + ")";
            c.pass = cs.p_value > spec.level && dual_gap < 1e-12;
            rep.checks.push_back(c);
        }
    }
    rep.finish();
    rep.runtime_seconds = detail::toc(t0);
    return rep;
}

// two-sample KS between the value-by-value route and the
// exponential-increment/geometric route for N_m
inline TestReport experiment_sampler_equivalence(ExperimentSpec spec) {
    if (spec.replicates == 0) spec.replicates = 100000;
    if (spec.level == 0) spec.level = 0.01;
    std::vector<std::string> strategies =
        spec.strategy.empty()
            ? std::vector<std::string>{"median", "percentile:0.5", "best-of:3"}
            : std::vector<std::string>{spec.strategy};
    std::vector<index_t> ms = spec.m == 0 ? std::vector<index_t>{5, 20, 50}
                                          : std::vector<index_t>{spec.m};
    auto t0 = detail::tic();
    TestReport rep;
    rep.spec = spec;
    std::uint64_t stream = 0;
    for (const auto& dsl : strategies) {
        auto seq = parse_strategy(dsl);
        const index_t m_max = ms.back();
        std::vector<std::vector<double>> direct(ms.size(), std::vector<double>(spec.replicates));
        std::vector<std::vector<double>> fast(ms.size(), std::vector<double>(spec.replicates));
        std::uint64_t master_d = spec.seed + 0x9e3779b97f4a7c15ULL * (++stream);
        parallel_replicates(spec.replicates, spec.threads, master_d, [&](index_t i, Rng rng) {
            auto ns = sample_N_direct(seq, ms, rng);
            for (size_t k = 0; k < ms.size(); ++k) direct[k][i] = ns[k];
        });
        std::uint64_t master_f = spec.seed + 0x9e3779b97f4a7c15ULL * (++stream);
        parallel_replicates(spec.replicates, spec.threads, master_f, [&](index_t i, Rng rng) {
            auto ns = sample_N_fast(seq, m_max, rng);
            for (size_t k = 0; k < ms.size(); ++k) fast[k][i] = ns[ms[k]];
        });
        for (size_t k = 0; k < ms.size(); ++k) {
            auto ks = ks_two_sample(direct[k], fast[k]);
            rep.checks.push_back(detail::ks_check(
                dsl + " N_" + std::to_string(ms[k]), ks, spec.level,
                "direct threshold maintenance vs exponential-increment representation"));
        }
    }
    rep.finish();
    rep.runtime_seconds = detail::toc(t0);
    return rep;
}

// path-wise trend probe for N_m / lambda_m stabilization (a.s. limit):
// dyadic step sizes of the normalized path must shrink on most seeds.
// This is a trend check, not a hypothesis test.
inline TestReport experiment_as_convergence_probe(ExperimentSpec spec) {
    if (spec.strategy.empty()) spec.strategy = "median";
    if (spec.replicates == 0) spec.replicates = 20;
    auto seq = parse_strategy(spec.strategy);
    if (classify_tail(seq) != TailClass::Large)
        throw wrong_regime_error("as_convergence_probe: needs a large-r(m) strategy");
    auto t0 = detail::tic();
    const int j_lo = 10, j_hi = 17;
    const index_t m_max = index_t(1) << j_hi;
    // lambda at the dyadic checkpoints
    std::vector<double> lambda(j_hi + 1, 0);
    {
        ProfileCursor c(seq);
        for (int j = j_lo; j <= j_hi; ++j) {
            c.advance_to(index_t(1) << j);
            lambda[j] = c.lambda();
        }
    }
    std::vector<int> pass_seed(spec.replicates, 0);
    std::vector<double> first_steps(spec.replicates), last_steps(spec.replicates);
    parallel_replicates(spec.replicates, spec.threads, spec.seed, [&](index_t i, Rng rng) {
        auto n = sample_N_fast(seq, m_max, rng);
        std::vector<double> ratio(j_hi + 1, 0);
        double base = n[index_t(1) << j_lo] / lambda[j_lo];
        for (int j = j_lo; j <= j_hi; ++j) ratio[j] = n[index_t(1) << j] / lambda[j] / base;
        double early = 0, late = 0;
        for (int j = j_lo + 1; j <= j_lo + 3; ++j)
            early = std::max(early, std::abs(ratio[j] - ratio[j - 1]));
        for (int j = j_hi - 2; j <= j_hi; ++j)
            late = std::max(late, std::abs(ratio[j] - ratio[j - 1]));
        first_steps[i] = early;
        last_steps[i] = late;
        pass_seed[i] = late < early;
    });
    index_t good = 0;
    for (int p : pass_seed) good += p;
    TestReport rep;
    rep.spec = spec;
    CheckResult c;
    c.name = "dyadic_ratio_stabilization";
    c.statistic = static_cast<double>(good);
    c.threshold = 18;
    c.provenance = "trend check: dyadic step sizes of N_m/lambda_m shrink (no distributional claim)";
    c.pass = good >= 18 * spec.replicates / 20;
    rep.checks.push_back(c);
    rep.details["early_steps"] = first_steps;
    rep.details["late_steps"] = last_steps;
    rep.finish();
    rep.runtime_seconds = detail::toc(t0);
    return rep;
}

// the count must not carry information from early acceptance indicators
// beyond their own additive contribution (a weaker necessary condition of
// the mixing claim; noted in the report as partial evidence). The raw
// correlation of I_2 with M_n equals sd(I_2)/sd(M_n) ~ 1/(2 sqrt(r log n))
// exactly by inclusion, which vanishes far too slowly to test directly;
// the informative quantity is the excess correlation corr(I_2, M_n - I_2),
// which the no-long-range-memory structure makes zero.
inline TestReport experiment_early_independence_probe(ExperimentSpec spec) {
    if (spec.strategy.empty()) spec.strategy = "best-of:1";
    if (spec.n == 0) spec.n = 100000;
    if (spec.replicates == 0) spec.replicates = 10000;
    auto seq = parse_strategy(spec.strategy);
    auto norm = clt_normalizer(seq, static_cast<double>(spec.n));
    auto t0 = detail::tic();
    std::vector<double> rest(spec.replicates), i2(spec.replicates);
    parallel_replicates(spec.replicates, spec.threads, spec.seed, [&](index_t i, Rng rng) {
        auto t = simulate_summary(seq, spec.n, rng);
        double ind = (t.M_n >= 2 && t.N[2] == 2.0) ? 1.0 : 0.0;
        i2[i] = ind;
        rest[i] = (static_cast<double>(t.M_n) - ind - static_cast<double>(norm.mu)) / norm.gamma;
    });
    double excess = correlation(i2, rest);
    double raw = 0;
    {
        std::vector<double> full(spec.replicates);
        for (index_t i = 0; i < spec.replicates; ++i) full[i] = rest[i] + i2[i] / norm.gamma;
        raw = correlation(i2, full);
    }
    TestReport rep;
    rep.spec = spec;
    CheckResult c;
    c.name = "excess_corr_I2_vs_rest";
    c.statistic = excess;
    c.threshold = 3.0 / std::sqrt(static_cast<double>(spec.replicates));
    c.provenance = "mixing restated as zero excess correlation with early indicators "
                   "(partial evidence: a necessary condition only)";
    c.pass = std::abs(excess) < c.threshold;
    rep.checks.push_back(c);
    rep.details["raw_corr_including_I2"] = raw;
    rep.details["inclusion_term_scale"] = 0.5 / norm.gamma;
    rep.finish();
    rep.runtime_seconds = detail::toc(t0);
    return rep;
}

// rejection-rate calibration of the test kernel under the null
inline TestReport experiment_calibration(ExperimentSpec spec) {
    if (spec.replicates == 0) spec.replicates = 100;
    if (spec.level == 0) spec.level = 0.1;
    if (spec.n == 0) spec.n = 10000;
    auto t0 = detail::tic();
    const double level = spec.level;
    const double band = 2.0 * std::sqrt(level * (1 - level) / static_cast<double>(spec.replicates));
    TestReport rep;
    rep.spec = spec;

    std::vector<double> rejects_ks(spec.replicates), rejects_chi(spec.replicates),
        rejects_ks2(spec.replicates);
    auto expcdf = exponential_law().cdf;
    parallel_replicates(spec.replicates, spec.threads, spec.seed, [&](index_t i, Rng rng) {
        std::vector<double> a(spec.n), b(spec.n);
        for (auto& v : a) v = rng.exponential();
        for (auto& v : b) v = rng.exponential();
        rejects_ks[i] = ks_one_sample(a, expcdf).p_value <= level;
        rejects_ks2[i] = ks_two_sample(a, b).p_value <= level;
        std::vector<double> counts(6, 0.0), expected(6, static_cast<double>(spec.n) / 6.0);
        for (index_t k = 0; k < spec.n; ++k)
            counts[std::min<index_t>(5, static_cast<index_t>(rng.uniform() * 6.0))] += 1;
        rejects_chi[i] = chi_square(counts, expected).p_value <= level;
    });
    auto rate_check = [&](const char* name, const std::vector<double>& rejects) {
        double rate = 0;
        for (double r : rejects) rate += r;
        rate /= static_cast<double>(spec.replicates);
        CheckResult c;
        c.name = name;
        c.statistic = rate;
        c.target = level;
        c.threshold = band;
        c.provenance = "null rejection rate within 2 binomial Sds of the level";
        c.pass = std::abs(rate - level) <= band;
        return c;
    };
    rep.checks.push_back(rate_check("ks_one_sample_rate", rejects_ks));
    rep.checks.push_back(rate_check("ks_two_sample_rate", rejects_ks2));
    rep.checks.push_back(rate_check("chi_square_rate", rejects_chi));
    rep.finish();
    rep.runtime_seconds = detail::toc(t0);
    return rep;
}

// ---- dispatch -------------------------------------------------------------------

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> v = {
        "median_rayleigh",     "percentile_moment_table", "records_clt",
        "best_of_r_clt",       "sqrtm_clt",               "tnsmall_check",
        "tle_offsets",         "tle_fraction",            "gap_exponential",
        "gap_scaled_law",      "conditional_first_value", "oracle_equivalence",
        "sampler_equivalence", "as_convergence_probe",    "early_independence_probe",
        "calibration",
    };
    return v;
}

inline TestReport run_experiment(ExperimentSpec spec) {
    if (!spec.seed_set)
        throw std::invalid_argument("run_experiment: an explicit seed is required");
    TestReport rep;
    if (spec.name == "median_rayleigh") rep = experiment_median_rayleigh(spec);
    else if (spec.name == "percentile_moment_table") rep = experiment_percentile_moment_table(spec);
    else if (spec.name == "records_clt") rep = experiment_records_clt(spec);
    else if (spec.name == "best_of_r_clt") rep = experiment_best_of_r_clt(spec);
    else if (spec.name == "sqrtm_clt") rep = experiment_sqrtm_clt(spec);
    else if (spec.name == "tnsmall_check") rep = experiment_tnsmall_check(spec);
    else if (spec.name == "tle_offsets") rep = experiment_tle_offsets(spec);
    else if (spec.name == "tle_fraction") rep = experiment_tle_fraction(spec);
    else if (spec.name == "gap_exponential") rep = experiment_gap_exponential(spec);
    else if (spec.name == "gap_scaled_law") rep = experiment_gap_scaled_law(spec);
    else if (spec.name == "conditional_first_value") rep = experiment_conditional_first_value(spec);
    else if (spec.name == "oracle_equivalence") rep = experiment_oracle_equivalence(spec);
    else if (spec.name == "sampler_equivalence") rep = experiment_sampler_equivalence(spec);
    else if (spec.name == "as_convergence_probe") rep = experiment_as_convergence_probe(spec);
    else if (spec.name == "early_independence_probe") rep = experiment_early_independence_probe(spec);
    else if (spec.name == "calibration") rep = experiment_calibration(spec);
    else throw std::invalid_argument("unknown experiment '" + spec.name + "'");
    rep.spec.name = spec.name;
    return rep;
}

// ---- bundles ---------------------------------------------------------------------

struct BundleSummary {
    index_t passed = 0;
    index_t failed = 0;
    std::vector<std::string> failing;
    nlohmann::json json;
    std::string table;
};

inline BundleSummary report_bundle(const std::vector<TestReport>& reports,
                                   bool include_runtime = false) {
    BundleSummary b;
    b.json["schema_version"] = schema_version;
    b.json["reports"] = nlohmann::json::array();
    std::string table = "experiment                     seed        checks  pass\n";
    for (const auto& r : reports) {
        b.json["reports"].push_back(report_to_json(r, include_runtime));
        (r.pass ? b.passed : b.failed) += 1;
        if (!r.pass) b.failing.push_back(r.spec.name);
        char line[128];
        std::snprintf(line, sizeof(line), "%-30s %-11llu %-7zu %s\n", r.spec.name.c_str(),
                      static_cast<unsigned long long>(r.spec.seed), r.checks.size(),
                      r.pass ? "PASS" : "FAIL");
        table += line;
    }
    b.json["passed"] = b.passed;
    b.json["failed"] = b.failed;
    b.json["failing"] = b.failing;
    b.table = table;
    return b;
}

} // namespace hiresim
