#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hiresim/profile.hpp"
#include "hiresim/special.hpp"

using namespace hiresim;
using Catch::Approx;

TEST_CASE("repeat indicators for the median strategy alternate") {
    auto p = derive_profile(RankSequence::median(), 5);
    std::vector<int> expect = {1, 0, 1, 0, 1};
    for (index_t k = 1; k <= 5; ++k) CHECK(int(p.delta[k]) == expect[k - 1]);
}

TEST_CASE("record strategy: mean threshold is m, beta^2 is m") {
    auto p = derive_profile(RankSequence::best_of(1), 1000);
    CHECK(p.y[1000] == Approx(1000.0).epsilon(1e-12));
    CHECK(p.beta2[1000] == Approx(1000.0).epsilon(1e-12));
    CHECK(p.y[1] == 1.0);
}

TEST_CASE("median mean threshold at m=2 is 1") {
    auto p = derive_profile(RankSequence::median(), 2);
    CHECK(p.y[2] == Approx(1.0).epsilon(1e-14));
}

// the two expressions of the mean threshold must agree: y_m equals
// y_hat_m minus the harmonic tail over 2..r(m); same for the variance
TEST_CASE("harmonic identities hold to machine precision along the stream") {
    for (const char* dsl : {"median", "percentile:0.5", "percentile:1/3", "percentile:2/3",
                            "best-of:3", "sqrt-floor", "irregular-octal"}) {
        auto seq = parse_strategy(dsl);
        ProfileCursor c(seq);
        double h1 = 0, h2 = 0; // sums over ell = 2..r(m) of 1/ell, 1/ell^2
        index_t r_prev = seq.rank(0);
        double worst1 = 0, worst2 = 0;
        for (index_t m = 1; m <= 100000; ++m) {
            c.advance();
            if (c.r() > r_prev) {
                double ell = static_cast<double>(c.r());
                h1 += 1.0 / ell;
                h2 += 1.0 / (ell * ell);
                r_prev = c.r();
            }
            worst1 = std::max(worst1, std::abs(c.y() - (c.y_hat() - h1)));
            // the sums grow like m/r^2 for small-r strategies, so the bound
            // must allow a few ulps of the magnitude itself
            double tol2 = std::max(1e-12, 8 * 2.22e-16 * c.sigma2_hat());
            worst2 = std::max(worst2, std::abs(c.sigma2() - (c.sigma2_hat() - h2)) - tol2);
        }
        INFO(dsl);
        CHECK(worst1 < 1e-10);
        CHECK(worst2 <= 0.0);
    }
}

TEST_CASE("profile sequences are monotone and beta^2 >= m") {
    for (const char* dsl : {"median", "best-of:2", "sqrt-floor"}) {
        auto p = derive_profile(parse_strategy(dsl), 5000);
        for (index_t m = 1; m <= 5000; ++m) {
            CHECK(p.y[m] >= p.y[m - 1]);
            CHECK(p.lambda[m] >= p.lambda[m - 1]);
            CHECK(p.beta2[m] >= static_cast<double>(m));
        }
    }
}

TEST_CASE("lambda for the identity-rank strategy is 1 + (m-1) e") {
    // percentile(1): r(m) = m, so y_m = 1 for m >= 1
    auto p = derive_profile(RankSequence::percentile(1, 1), 100);
    CHECK(p.y[1] == 1.0);
    CHECK(p.y[77] == 1.0);
    CHECK(p.lambda[1] == 1.0);
    CHECK(p.lambda[100] == Approx(1.0 + 99.0 * std::exp(1.0)).epsilon(1e-13));
}

TEST_CASE("log lambda stays valid past the overflow guard") {
    auto p = derive_profile(RankSequence::best_of(1), 800); // y_m = m, lambda ~ e^m
    CHECK_FALSE(p.lambda_finite);
    CHECK(p.lambda_overflow_at > 650);
    CHECK(p.lambda[800] == HUGE_VAL);
    // lambda_m = sum_{k<m} e^k = (e^m - 1)/(e - 1)
    double expect = 800.0 - std::log(std::exp(1.0) - 1.0);
    CHECK(p.log_lambda[800] == Approx(expect).epsilon(1e-10));
    // agreement with the plain form where both exist
    CHECK(std::exp(p.log_lambda[300]) == Approx(p.lambda[300]).epsilon(1e-11));
}

TEST_CASE("rho vanishes for the identity-rank strategy") {
    auto r = rho(RankSequence::percentile(1, 1), 1e-12);
    CHECK(std::abs(r.value) < 1e-12);
}

TEST_CASE("rho for the median strategy is -1 - 2 log 2") {
    auto r = rho(RankSequence::median(), 1e-10);
    CHECK(r.value == Approx(-1.0 - 2.0 * M_LN2).margin(1e-10));
    CHECK(r.error_estimate < 1e-9);
}

TEST_CASE("rho is cross-checked by the growth constant of lambda") {
    // lambda_m ~ exp(gamma + rho + 1) m^2 for the median strategy
    auto rh = rho(RankSequence::median(), 1e-10).value;
    ProfileCursor c(RankSequence::median());
    c.advance_to(1000000);
    double predicted = euler_gamma + rh + 1.0 + 2.0 * std::log(1e6);
    CHECK(c.log_lambda() == Approx(predicted).margin(2e-3));
}

TEST_CASE("rho diverges for bounded rank sequences") {
    CHECK_THROWS_AS(rho(RankSequence::best_of(2), 0.5, 1e-8), series_divergence);
}

TEST_CASE("profile input validation") {
    CHECK_THROWS_AS(derive_profile(RankSequence::median(), 0), std::invalid_argument);
    CHECK_THROWS_AS(rho(RankSequence::median(), -1.0), std::invalid_argument);
}
