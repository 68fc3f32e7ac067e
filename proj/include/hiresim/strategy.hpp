#pragma once

// Rank-threshold hiring strategies.
//
// A strategy is a nondecreasing integer sequence r(m) with r(0) = 1 and
// unit steps: r(m) <= r(m+1) <= r(m)+1. After m acceptances the next
// candidate is hired iff her value exceeds the r(m)-th largest accepted
// value (threshold 0 when r(m) = m+1).

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hiresim {

using index_t = long long;

enum class StrategyKind {
    Median,         // r(m) = floor(m/2) + 1
    Percentile,     // r(m) = ceil(alpha m), alpha rational in (0,1]
    BestOf,         // r(m) = min(r, m+1)
    LinearPeriodic, // r(m+q) = r(m) + nu
    Table,          // explicit prefix + extension rule
    SqrtFloor,      // r(m) = floor(sqrt(m)), m >= 1
    IrregularOctal, // r(8^i) = 2^i, linear then flat between octal powers
    Custom,         // user generator
};

enum class TailClass { Large, Small, Unknown };

enum class TableExtension { Constant, Periodic };

class constraint_violation : public std::runtime_error {
  public:
    constraint_violation(index_t index, const std::string& what)
        : std::runtime_error("rank constraint violated at m=" + std::to_string(index) + ": " + what),
          index_(index) {}
    index_t index() const { return index_; }

  private:
    index_t index_;
};

class invalid_transform : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationResult {
    bool ok = true;
    index_t index = -1;
    std::string reason;
};

class RankSequence {
  public:
    using Generator = std::function<index_t(index_t)>;

    // ---- factories -----------------------------------------------------
    static RankSequence median() {
        RankSequence s(StrategyKind::Median, "median");
        s.alpha_num_ = 1;
        s.alpha_den_ = 2;
        return s;
    }

    static RankSequence percentile(index_t num, index_t den) {
        if (den <= 0 || num <= 0 || num > den)
            throw std::invalid_argument("percentile: alpha must lie in (0,1]");
        index_t g = std::gcd(num, den);
        num /= g;
        den /= g;
        RankSequence s(StrategyKind::Percentile, "percentile:" + format_alpha(num, den));
        s.alpha_num_ = num;
        s.alpha_den_ = den;
        return s;
    }

    static RankSequence best_of(index_t r) {
        if (r < 1) throw std::invalid_argument("best_of: r must be >= 1");
        RankSequence s(StrategyKind::BestOf, "best-of:" + std::to_string(r));
        s.best_r_ = r;
        return s;
    }

    static RankSequence linear_periodic(index_t nu, index_t q, std::vector<index_t> base) {
        if (q < 1 || nu < 1 || nu > q)
            throw std::invalid_argument("linear_periodic: need 1 <= nu <= q");
        if (static_cast<index_t>(base.size()) != q)
            throw std::invalid_argument("linear_periodic: base must list r(1..q)");
        std::string dsl = "periodic:nu=" + std::to_string(nu) + ",q=" + std::to_string(q) + ",r=";
        for (index_t i = 0; i < q; ++i) dsl += (i ? "," : "") + std::to_string(base[i]);
        RankSequence s(StrategyKind::LinearPeriodic, dsl);
        s.nu_ = nu;
        s.q_ = q;
        s.base_ = std::move(base);
        s.alpha_num_ = nu;
        s.alpha_den_ = q;
        index_t g = std::gcd(s.alpha_num_, s.alpha_den_);
        s.alpha_num_ /= g;
        s.alpha_den_ /= g;
        return s;
    }

    // prefix lists r(0..P-1); violations are reported by validate_prefix, not here
    static RankSequence table(std::vector<index_t> prefix, TableExtension ext,
                              index_t ext_nu = 0, index_t ext_q = 0) {
        if (prefix.empty()) throw std::invalid_argument("table: empty prefix");
        if (ext == TableExtension::Periodic) {
            if (ext_q < 1 || ext_nu < 1 || ext_nu > ext_q)
                throw std::invalid_argument("table: periodic extension needs 1 <= nu <= q");
            if (static_cast<index_t>(prefix.size()) < ext_q)
                throw std::invalid_argument("table: prefix shorter than extension period");
        }
        std::string dsl = "table:";
        for (size_t i = 0; i < prefix.size(); ++i) dsl += (i ? "," : "") + std::to_string(prefix[i]);
        if (ext == TableExtension::Constant)
            dsl += "+const";
        else
            dsl += "+periodic:nu=" + std::to_string(ext_nu) + ",q=" + std::to_string(ext_q);
        RankSequence s(StrategyKind::Table, dsl);
        s.prefix_ = std::move(prefix);
        s.ext_ = ext;
        s.nu_ = ext_nu;
        s.q_ = ext_q;
        if (ext == TableExtension::Periodic) {
            s.alpha_num_ = ext_nu;
            s.alpha_den_ = ext_q;
            index_t g = std::gcd(s.alpha_num_, s.alpha_den_);
            s.alpha_num_ /= g;
            s.alpha_den_ /= g;
        }
        return s;
    }

    static RankSequence sqrt_floor() { return RankSequence(StrategyKind::SqrtFloor, "sqrt-floor"); }

    static RankSequence irregular_octal() {
        return RankSequence(StrategyKind::IrregularOctal, "irregular-octal");
    }

    static RankSequence custom(Generator gen, TailClass declared_tail = TailClass::Unknown,
                               std::optional<double> alpha_hint = std::nullopt,
                               std::string name = "custom") {
        RankSequence s(StrategyKind::Custom, std::move(name));
        s.custom_ = std::move(gen);
        s.declared_tail_ = declared_tail;
        s.alpha_hint_ = alpha_hint;
        s.watermark_ = std::make_shared<CustomWatermark>();
        return s;
    }

    // ---- basics ---------------------------------------------------------
    StrategyKind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    TailClass declared_tail() const { return declared_tail_; }
    std::optional<double> alpha_hint() const { return alpha_hint_; }

    // r(m); deterministic, thread safe. Custom generators are validated
    // lazily up to the largest index queried so far and throw
    // constraint_violation naming the first bad index.
    index_t rank(index_t m) const {
        if (m < 0) throw std::invalid_argument("rank: m must be >= 0");
        for (auto it = overrides_.rbegin(); it != overrides_.rend(); ++it)
            if (it->first == m) return it->second;
        if (m < inserted_ones_) return 1;
        return base_rank(m - inserted_ones_);
    }

    // exact alpha = lim r(m)/m as a rational, when the kind defines one
    std::optional<std::pair<index_t, index_t>> alpha_rational() const {
        if (alpha_den_ > 0) return std::make_pair(alpha_num_, alpha_den_);
        return std::nullopt;
    }

    double alpha() const {
        if (alpha_den_ > 0) return static_cast<double>(alpha_num_) / static_cast<double>(alpha_den_);
        if (alpha_hint_) return *alpha_hint_;
        return std::numeric_limits<double>::quiet_NaN();
    }

    // eventual period (nu, q) with r(m+q) = r(m)+nu, for the kinds that have one
    std::optional<std::pair<index_t, index_t>> period() const {
        switch (kind_) {
            case StrategyKind::Median: return std::make_pair<index_t, index_t>(1, 2);
            case StrategyKind::Percentile: return std::make_pair(alpha_num_, alpha_den_);
            case StrategyKind::LinearPeriodic: return std::make_pair(nu_, q_);
            case StrategyKind::Table:
                if (ext_ == TableExtension::Periodic) return std::make_pair(nu_, q_);
                return std::nullopt;
            default: return std::nullopt;
        }
    }

    bool has_transforms() const { return inserted_ones_ > 0 || !overrides_.empty(); }

    // ---- constraint checking ---------------------------------------------
    // ok iff r(0)=1, unit steps and bounds hold for all m <= M, and the
    // claimed periodicity r(m+q) = r(m)+nu holds on the checked prefix.
    ValidationResult validate_prefix(index_t M) const {
        try {
            index_t prev = rank(0);
            if (prev != 1) return {false, 0, "r(0) != 1"};
            for (index_t m = 1; m <= M; ++m) {
                index_t r = rank(m);
                if (r < prev) return {false, m, "decreasing"};
                if (r > prev + 1) return {false, m, "jump > 1"};
                if (r > m + 1) return {false, m, "r(m) > m+1"};
                prev = r;
            }
            if (auto p = period()) {
                auto [nu, q] = *p;
                // the periodic relation is claimed from m=1 on; a table
                // prefix and the transform region are exempt
                index_t start = 1 + inserted_ones_;
                if (kind_ == StrategyKind::Table)
                    start = std::max(start, static_cast<index_t>(prefix_.size()) - q);
                for (index_t m = start; m + q <= M; ++m) {
                    bool touched = false;
                    for (const auto& ov : overrides_)
                        if (ov.first == m || ov.first == m + q) touched = true;
                    if (touched) continue;
                    if (rank(m + q) != rank(m) + nu)
                        return {false, m + q, "periodicity r(m+q)=r(m)+nu violated"};
                }
            }
        } catch (const constraint_violation& e) {
            return {false, e.index(), e.what()};
        }
        return {};
    }

    // first repeated rank value, i.e. r(k) for the smallest k with
    // r(k) = r(k-1); sets the finiteness boundary of negative moments
    index_t r_star(index_t scan_limit = 1 << 22) const {
        index_t prev = rank(0);
        for (index_t k = 1; k <= scan_limit; ++k) {
            index_t r = rank(k);
            if (r == prev) return r;
            prev = r;
        }
        return std::numeric_limits<index_t>::max(); // no repeat found below the scan limit
    }

    // ---- transforms -------------------------------------------------------
    // prepend an extra 1: new r(m) = old r(m-1); metadata is preserved
    RankSequence insert_one() const {
        RankSequence s(*this);
        s.inserted_ones_ += 1;
        for (auto& ov : s.overrides_) ov.first += 1;
        s.name_ = "insert-one(" + name_ + ")";
        return s;
    }

    // drop the leading 1, the inverse view used when conditioning on X_1:
    // new r(m) = old r(m+1); requires r(1) = 1
    RankSequence drop_first_one() const {
        if (rank(1) != 1)
            throw invalid_transform("drop_first_one: requires r(1) = 1");
        RankSequence s(*this);
        if (s.inserted_ones_ > 0 && s.overrides_.empty()) {
            s.inserted_ones_ -= 1;
        } else {
            auto base = *this;
            s = custom([base](index_t m) { return base.rank(m + 1); },
                       classify_tail(base), base.alpha_hint_, "shift-left(" + name_ + ")");
            if (auto ar = base.alpha_rational()) {
                s.alpha_num_ = ar->first;
                s.alpha_den_ = ar->second;
            }
        }
        s.name_ = "shift-left(" + name_ + ")";
        return s;
    }

    // decrease r(m) by one; valid only when r(m-1) < r(m) = r(m+1)
    RankSequence decrement_at(index_t m) const {
        if (m < 1) throw invalid_transform("decrement_at: m must be >= 1");
        index_t rm = rank(m);
        if (!(rank(m - 1) < rm && rm == rank(m + 1)))
            throw invalid_transform("decrement_at: requires r(m-1) < r(m) = r(m+1) at m=" +
                                    std::to_string(m));
        RankSequence s(*this);
        s.overrides_.emplace_back(m, rm - 1);
        s.name_ = "decrement(" + name_ + ",m=" + std::to_string(m) + ")";
        return s;
    }

    // ---- tail classification ----------------------------------------------
    // Large: sum r(m)^-2 < infinity. Exact for built-ins; Custom sequences
    // report their declared class (convergence is not finitely decidable).
    friend TailClass classify_tail(const RankSequence& s) {
        switch (s.kind_) {
            case StrategyKind::Median:
            case StrategyKind::Percentile:
            case StrategyKind::LinearPeriodic: return TailClass::Large;
            case StrategyKind::BestOf:
            case StrategyKind::SqrtFloor:
            case StrategyKind::IrregularOctal: return TailClass::Small;
            case StrategyKind::Table:
                return s.ext_ == TableExtension::Periodic ? TailClass::Large : TailClass::Small;
            case StrategyKind::Custom: return s.declared_tail_;
        }
        return TailClass::Unknown;
    }

    std::string dsl() const { return name_; }

  private:
    explicit RankSequence(StrategyKind kind, std::string name)
        : kind_(kind), name_(std::move(name)) {}

    static std::string format_alpha(index_t num, index_t den) {
        // decimal when exact in a few digits, else "num/den"
        if (den == 1) return std::to_string(num);
        for (index_t pow10 = 10, digits = 1; digits <= 6; pow10 *= 10, ++digits) {
            if (pow10 % den == 0) {
                std::string frac = std::to_string(num * (pow10 / den));
                if (static_cast<index_t>(frac.size()) < digits)
                    frac.insert(0, std::string(digits - frac.size(), '0'));
                while (frac.size() > 1 && frac.back() == '0') frac.pop_back();
                return "0." + frac;
            }
        }
        return std::to_string(num) + "/" + std::to_string(den);
    }

    static index_t isqrt(index_t m) {
        auto r = static_cast<index_t>(std::sqrt(static_cast<double>(m)));
        while (r * r > m) --r;
        while ((r + 1) * (r + 1) <= m) ++r;
        return r;
    }

    index_t base_rank(index_t m) const {
        switch (kind_) {
            case StrategyKind::Median: return m / 2 + 1;
            case StrategyKind::Percentile: {
                if (m == 0) return 1;
                return (alpha_num_ * m + alpha_den_ - 1) / alpha_den_;
            }
            case StrategyKind::BestOf: return std::min(best_r_, m + 1);
            case StrategyKind::LinearPeriodic: {
                if (m == 0) return 1;
                return ((m - 1) / q_) * nu_ + base_[(m - 1) % q_];
            }
            case StrategyKind::Table: {
                auto P = static_cast<index_t>(prefix_.size());
                if (m < P) return prefix_[m];
                if (ext_ == TableExtension::Constant) return prefix_.back();
                index_t j = (m - P) / q_ + 1;
                return prefix_[m - j * q_] + j * nu_;
            }
            case StrategyKind::SqrtFloor: return m == 0 ? 1 : isqrt(m);
            case StrategyKind::IrregularOctal: {
                if (m == 0) return 1;
                index_t p8 = 1, p2 = 1;
                while (m >= 8 * p8) {
                    p8 *= 8;
                    p2 *= 2;
                }
                return p2 + std::min(m - p8, p2);
            }
            case StrategyKind::Custom: return checked_custom(m);
        }
        throw std::logic_error("unreachable strategy kind");
    }

    struct CustomWatermark {
        std::mutex mutex;
        index_t upto = 0;  // indices 0..upto validated
        index_t r_upto = 1;
    };

    index_t checked_custom(index_t m) const {
        std::lock_guard<std::mutex> lock(watermark_->mutex);
        if (watermark_->upto == 0) {
            index_t r0 = custom_(0);
            if (r0 != 1) throw constraint_violation(0, "r(0) != 1");
        }
        if (m <= watermark_->upto) return m == watermark_->upto ? watermark_->r_upto : custom_(m);
        index_t prev = watermark_->r_upto;
        for (index_t k = watermark_->upto + 1; k <= m; ++k) {
            index_t r = custom_(k);
            if (r < prev) throw constraint_violation(k, "decreasing");
            if (r > prev + 1) throw constraint_violation(k, "jump > 1");
            if (r > k + 1) throw constraint_violation(k, "r(m) > m+1");
            prev = r;
        }
        watermark_->upto = m;
        watermark_->r_upto = prev;
        return prev;
    }

    StrategyKind kind_;
    std::string name_;
    index_t alpha_num_ = 0, alpha_den_ = 0;
    index_t best_r_ = 0;
    index_t nu_ = 0, q_ = 0;
    std::vector<index_t> base_;
    std::vector<index_t> prefix_;
    TableExtension ext_ = TableExtension::Constant;
    Generator custom_;
    TailClass declared_tail_ = TailClass::Unknown;
    std::optional<double> alpha_hint_;
    std::shared_ptr<CustomWatermark> watermark_;
    index_t inserted_ones_ = 0;
    std::vector<std::pair<index_t, index_t>> overrides_;
};

inline index_t rank_at(const RankSequence& s, index_t m) { return s.rank(m); }

inline ValidationResult validate_prefix(const RankSequence& s, index_t M) {
    return s.validate_prefix(M);
}

inline RankSequence insert_one(const RankSequence& s) { return s.insert_one(); }

inline RankSequence decrement_at(const RankSequence& s, index_t m) { return s.decrement_at(m); }

inline bool prefix_equal(const RankSequence& a, const RankSequence& b, index_t M) {
    for (index_t m = 0; m <= M; ++m)
        if (a.rank(m) != b.rank(m)) return false;
    return true;
}

// ---- strategy DSL ---------------------------------------------------------
// median | percentile:0.5 | percentile:1/3 | best-of:3
// | periodic:nu=1,q=3,r=1,1,1 | sqrt-floor | irregular-octal
// | table:1,1,2,2+periodic:nu=1,q=2 | table:1,2,3+const

class dsl_parse_error : public std::runtime_error {
  public:
    dsl_parse_error(const std::string& what, size_t pos)
        : std::runtime_error("strategy DSL: " + what + " (at position " + std::to_string(pos) + ")"),
          position_(pos) {}
    size_t position() const { return position_; }

  private:
    size_t position_;
};

namespace detail {

inline index_t parse_int(const std::string& text, size_t pos_base) {
    try {
        size_t used = 0;
        index_t v = std::stoll(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw dsl_parse_error("expected integer, got '" + text + "'", pos_base);
    }
}

inline std::vector<index_t> parse_int_list(const std::string& text, size_t pos_base) {
    std::vector<index_t> out;
    std::stringstream ss(text);
    std::string item;
    size_t pos = pos_base;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_int(item, pos));
        pos += item.size() + 1;
    }
    if (out.empty()) throw dsl_parse_error("expected list of integers", pos_base);
    return out;
}

inline std::pair<index_t, index_t> parse_alpha(const std::string& text, size_t pos_base) {
    if (auto slash = text.find('/'); slash != std::string::npos) {
        index_t num = parse_int(text.substr(0, slash), pos_base);
        index_t den = parse_int(text.substr(slash + 1), pos_base + slash + 1);
        return {num, den};
    }
    if (auto dot = text.find('.'); dot != std::string::npos) {
        std::string whole = text.substr(0, dot), frac = text.substr(dot + 1);
        if (frac.empty() || frac.size() > 15)
            throw dsl_parse_error("bad decimal '" + text + "'", pos_base);
        index_t den = 1;
        for (size_t i = 0; i < frac.size(); ++i) den *= 10;
        index_t num = (whole.empty() ? 0 : parse_int(whole, pos_base)) * den +
                      parse_int(frac, pos_base + dot + 1);
        return {num, den};
    }
    return {parse_int(text, pos_base), 1};
}

inline std::pair<index_t, index_t> parse_nu_q(const std::string& text, size_t pos_base) {
    index_t nu = -1, q = -1;
    std::stringstream ss(text);
    std::string item;
    size_t pos = pos_base;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw dsl_parse_error("expected key=value", pos);
        std::string key = item.substr(0, eq);
        index_t val = parse_int(item.substr(eq + 1), pos + eq + 1);
        if (key == "nu")
            nu = val;
        else if (key == "q")
            q = val;
        else
            throw dsl_parse_error("unknown key '" + key + "'", pos);
        pos += item.size() + 1;
    }
    if (nu < 0 || q < 0) throw dsl_parse_error("periodic extension needs nu= and q=", pos_base);
    return {nu, q};
}

} // namespace detail

inline RankSequence parse_strategy(const std::string& dsl) {
    if (dsl == "median") return RankSequence::median();
    if (dsl == "sqrt-floor") return RankSequence::sqrt_floor();
    if (dsl == "irregular-octal") return RankSequence::irregular_octal();

    auto colon = dsl.find(':');
    std::string head = dsl.substr(0, colon);
    if (head == "percentile") {
        if (colon == std::string::npos) throw dsl_parse_error("percentile needs :alpha", dsl.size());
        auto [num, den] = detail::parse_alpha(dsl.substr(colon + 1), colon + 1);
        if (den <= 0 || num <= 0 || num > den)
            throw dsl_parse_error("alpha must lie in (0,1]", colon + 1);
        return RankSequence::percentile(num, den);
    }
    if (head == "best-of") {
        if (colon == std::string::npos) throw dsl_parse_error("best-of needs :r", dsl.size());
        return RankSequence::best_of(detail::parse_int(dsl.substr(colon + 1), colon + 1));
    }
    if (head == "periodic") {
        if (colon == std::string::npos) throw dsl_parse_error("periodic needs parameters", dsl.size());
        std::string body = dsl.substr(colon + 1);
        auto rpos = body.find("r=");
        if (rpos == std::string::npos || rpos == 0 || body[rpos - 1] != ',')
            throw dsl_parse_error("periodic needs r=<list>", colon + 1);
        auto [nu, q] = detail::parse_nu_q(body.substr(0, rpos - 1), colon + 1);
        auto base = detail::parse_int_list(body.substr(rpos + 2), colon + 1 + rpos + 2);
        RankSequence s = RankSequence::linear_periodic(nu, q, base);
        auto v = s.validate_prefix(std::min<index_t>(4 * q + 2, 1000));
        if (!v.ok) throw dsl_parse_error("invalid periodic base: " + v.reason, colon + 1);
        return s;
    }
    if (head == "table") {
        if (colon == std::string::npos) throw dsl_parse_error("table needs a prefix list", dsl.size());
        std::string body = dsl.substr(colon + 1);
        auto plus = body.find('+');
        if (plus == std::string::npos)
            throw dsl_parse_error("table needs an extension rule (+const or +periodic:...)",
                                  dsl.size());
        auto prefix = detail::parse_int_list(body.substr(0, plus), colon + 1);
        std::string ext = body.substr(plus + 1);
        RankSequence s = [&] {
            if (ext == "const")
                return RankSequence::table(prefix, TableExtension::Constant);
            if (ext.rfind("periodic:", 0) == 0) {
                auto [nu, q] = detail::parse_nu_q(ext.substr(9), colon + 1 + plus + 10);
                return RankSequence::table(prefix, TableExtension::Periodic, nu, q);
            }
            throw dsl_parse_error("unknown table extension '" + ext + "'", colon + 1 + plus + 1);
        }();
        auto v = s.validate_prefix(static_cast<index_t>(prefix.size()) + 4 * std::max<index_t>(s.period() ? s.period()->second : 1, 1));
        if (!v.ok)
            throw dsl_parse_error("constraint-violating table at index " + std::to_string(v.index) +
                                      " (" + v.reason + ")",
                                  colon + 1);
        return s;
    }
    throw dsl_parse_error("unknown strategy '" + dsl + "'", 0);
}

} // namespace hiresim
