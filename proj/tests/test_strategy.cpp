#include <catch2/catch_amalgamated.hpp>

#include "hiresim/profile.hpp"
#include "hiresim/strategy.hpp"

using namespace hiresim;
using Catch::Approx;

TEST_CASE("rank formulas match the strategy definitions") {
    CHECK(RankSequence::median().rank(4) == 3);
    CHECK(RankSequence::percentile(1, 2).rank(2) == 1);
    CHECK(RankSequence::best_of(3).rank(1) == 2);
    CHECK(RankSequence::sqrt_floor().rank(9) == 3);

    // median sequence 1,1,2,2,3,3
    auto med = RankSequence::median();
    std::vector<index_t> expect = {1, 1, 2, 2, 3, 3};
    for (index_t m = 0; m < 6; ++m) CHECK(med.rank(m) == expect[m]);

    // alpha-percentile at 1/2: 1,1,1,2,2,3
    auto p12 = RankSequence::percentile(1, 2);
    std::vector<index_t> expect2 = {1, 1, 1, 2, 2, 3};
    for (index_t m = 0; m < 6; ++m) CHECK(p12.rank(m) == expect2[m]);
}

TEST_CASE("every strategy starts at r(0) = 1") {
    for (const char* dsl : {"median", "percentile:0.5", "percentile:1/3", "best-of:1", "best-of:7",
                            "sqrt-floor", "irregular-octal", "periodic:nu=2,q=3,r=1,2,3",
                            "table:1,2,2+const"})
        CHECK(parse_strategy(dsl).rank(0) == 1);
}

TEST_CASE("irregular octal sequence hits the octal anchors") {
    auto seq = RankSequence::irregular_octal();
    CHECK(seq.rank(1) == 1);
    CHECK(seq.rank(8) == 2);
    CHECK(seq.rank(64) == 4);
    CHECK(seq.rank(512) == 8);
    CHECK(seq.rank(4096) == 16);
    // linear on [8^i, 8^i + 2^i], flat to the next octal power
    CHECK(seq.rank(9) == 3);
    CHECK(seq.rank(10) == 4);
    CHECK(seq.rank(11) == 4);
    CHECK(seq.rank(63) == 4);
    CHECK(seq.rank(64 + 4) == 8);
    CHECK(seq.rank(511) == 8);
}

TEST_CASE("validate_prefix accepts all built-ins to a million") {
    for (const char* dsl : {"median", "percentile:0.5", "percentile:1/3", "percentile:2/3",
                            "percentile:1", "best-of:1", "best-of:3", "sqrt-floor",
                            "irregular-octal", "periodic:nu=1,q=2,r=1,2",
                            "table:1,1,2,2+periodic:nu=1,q=2"}) {
        auto v = parse_strategy(dsl).validate_prefix(1000000);
        INFO(dsl << " violation at " << v.index << ": " << v.reason);
        CHECK(v.ok);
    }
}

TEST_CASE("validate_prefix reports the first bad index") {
    auto bad = RankSequence::table({1, 1, 3}, TableExtension::Constant);
    auto v = bad.validate_prefix(3);
    REQUIRE_FALSE(v.ok);
    CHECK(v.index == 2);
    CHECK(v.reason == "jump > 1");

    CHECK(RankSequence::percentile(1, 1).validate_prefix(100).ok);
}

TEST_CASE("linear periodic (1,2,[1,2]) reproduces the median strategy") {
    auto per = RankSequence::linear_periodic(1, 2, {1, 2});
    CHECK(prefix_equal(per, RankSequence::median(), 10000));
    auto parsed = parse_strategy("periodic:nu=1,q=2,r=1,2");
    CHECK(prefix_equal(parsed, RankSequence::median(), 10000));
}

TEST_CASE("table with periodic extension continues with the stated period") {
    auto t = parse_strategy("table:1,1,2,2+periodic:nu=1,q=2");
    CHECK(prefix_equal(t, RankSequence::median(), 10000));
    auto c = parse_strategy("table:1,2,3+const");
    CHECK(c.rank(3) == 3);
    CHECK(c.rank(100) == 3);
}

TEST_CASE("DSL round-trips to an equivalent sequence") {
    for (const char* dsl : {"median", "percentile:0.5", "percentile:1/3", "best-of:4",
                            "sqrt-floor", "irregular-octal", "periodic:nu=2,q=5,r=1,2,2,3,3",
                            "table:1,1,2,2+periodic:nu=1,q=2", "table:1,2,2+const"}) {
        auto a = parse_strategy(dsl);
        auto b = parse_strategy(a.dsl());
        INFO(dsl << " -> " << a.dsl());
        CHECK(prefix_equal(a, b, 10000));
    }
}

TEST_CASE("DSL errors carry a position and reason") {
    CHECK_THROWS_AS(parse_strategy("bogus"), dsl_parse_error);
    CHECK_THROWS_AS(parse_strategy("percentile:0"), dsl_parse_error);
    CHECK_THROWS_AS(parse_strategy("percentile:1.5"), dsl_parse_error);
    CHECK_THROWS_AS(parse_strategy("best-of:x"), dsl_parse_error);
    CHECK_THROWS_AS(parse_strategy("table:1,1,3+const"), dsl_parse_error);
    CHECK_THROWS_AS(parse_strategy("table:1,1,2"), dsl_parse_error);
    CHECK_THROWS_AS(parse_strategy("periodic:nu=3,q=2,r=1,1"), std::invalid_argument);
    try {
        parse_strategy("table:1,1,3+const");
        FAIL("expected a parse error");
    } catch (const dsl_parse_error& e) {
        CHECK(std::string(e.what()).find("index 2") != std::string::npos);
    }
}

TEST_CASE("insert_one prepends an extra 1") {
    auto med = RankSequence::median();
    auto shifted = insert_one(med);
    for (index_t m = 1; m <= 2000; ++m) CHECK(shifted.rank(m) == med.rank(m - 1));
    CHECK(shifted.rank(0) == 1);
    // inserting a 1 before the median sequence gives the 1/2-percentile sequence
    CHECK(prefix_equal(shifted, RankSequence::percentile(1, 2), 10000));
    CHECK(shifted.alpha() == med.alpha());
}

TEST_CASE("decrement_at edits a single rank value") {
    auto med = RankSequence::median();
    auto dec = decrement_at(med, 2);
    std::vector<index_t> expect = {1, 1, 1, 2, 3, 3, 4};
    for (index_t m = 0; m < 7; ++m) CHECK(dec.rank(m) == expect[m]);
    CHECK(dec.validate_prefix(1000).ok);

    CHECK_THROWS_AS(decrement_at(med, 1), invalid_transform);   // r(1) = r(0) = 1
    CHECK_THROWS_AS(decrement_at(med, 3), invalid_transform);   // r(4) = 3 != r(3)
}

TEST_CASE("drop_first_one inverts insert_one") {
    auto med = RankSequence::median();
    CHECK(prefix_equal(insert_one(med).drop_first_one(), med, 5000));
    auto shifted = med.drop_first_one(); // the 1,2,2,3,3 sequence
    for (index_t m = 0; m <= 2000; ++m) CHECK(shifted.rank(m) == med.rank(m + 1));
    auto p12 = RankSequence::percentile(1, 2);
    CHECK(prefix_equal(p12.drop_first_one(), med, 5000));
}

TEST_CASE("tail classification") {
    CHECK(classify_tail(RankSequence::median()) == TailClass::Large);
    CHECK(classify_tail(RankSequence::percentile(2, 7)) == TailClass::Large);
    CHECK(classify_tail(RankSequence::linear_periodic(1, 3, {1, 1, 1})) == TailClass::Large);
    CHECK(classify_tail(RankSequence::best_of(5)) == TailClass::Small);
    CHECK(classify_tail(RankSequence::sqrt_floor()) == TailClass::Small);
    CHECK(classify_tail(RankSequence::irregular_octal()) == TailClass::Small);
    CHECK(classify_tail(parse_strategy("table:1,2,2+const")) == TailClass::Small);
    CHECK(classify_tail(parse_strategy("table:1,1,2,2+periodic:nu=1,q=2")) == TailClass::Large);

    auto declared = RankSequence::custom([](index_t m) { return m + 1; }, TailClass::Large);
    CHECK(classify_tail(declared) == TailClass::Large);
}

TEST_CASE("undeclared custom tail is Unknown with a diagnostic partial sum") {
    auto undeclared = RankSequence::custom(
        [](index_t m) { return m == 0 ? 1 : std::max<index_t>(1, m / 2); });
    auto d = diagnose_tail(undeclared);
    CHECK(d.tail == TailClass::Unknown);
    REQUIRE(d.sigma2_hat_1e6.has_value());
    // r(k) = floor(k/2): 1 + sum_{k>=2} 1/floor(k/2)^2 = 1 + pi^2/3 + o(1)
    CHECK(*d.sigma2_hat_1e6 == Approx(1.0 + M_PI * M_PI / 3).margin(0.01));
}

TEST_CASE("custom generators are checked against the rank constraints") {
    auto jumpy = RankSequence::custom([](index_t m) { return m < 3 ? 1 : 3; });
    try {
        jumpy.rank(10);
        FAIL("expected constraint_violation");
    } catch (const constraint_violation& e) {
        CHECK(e.index() == 3);
    }
    auto bad_start = RankSequence::custom([](index_t) { return 2; });
    CHECK_THROWS_AS(bad_start.rank(1), constraint_violation);
    // deterministic: repeated calls agree
    auto ok = RankSequence::custom([](index_t m) { return m / 3 + 1; });
    CHECK(ok.rank(500) == ok.rank(500));
    CHECK(ok.rank(100) == 100 / 3 + 1);
}

TEST_CASE("first repeated rank value r*") {
    CHECK(RankSequence::median().r_star() == 1);
    CHECK(RankSequence::percentile(3, 4).r_star() == 1);
    CHECK(RankSequence::best_of(3).r_star() == 3);
    CHECK(RankSequence::best_of(1).r_star() == 1);
    CHECK(RankSequence::median().drop_first_one().r_star() == 2); // 1,2,2,3,3,...
}

TEST_CASE("alpha is exact for rational strategies") {
    CHECK(RankSequence::median().alpha() == 0.5);
    auto ar = RankSequence::percentile(2, 6).alpha_rational();
    REQUIRE(ar.has_value());
    CHECK(ar->first == 1);
    CHECK(ar->second == 3);
    CHECK(RankSequence::linear_periodic(2, 5, {1, 1, 2, 2, 2}).alpha() == 0.4);
}
