#pragma once

// File interfaces: trace CSV, trace/summary JSON. Every artifact embeds
// schema_version, the resolved strategy and the seed; floats are written
// with round-trip precision so identical runs are byte-identical.

#include <cstdio>
#include <ostream>
#include <string>

#include <json.hpp>

#include "hiresim/simulate.hpp"
#include "hiresim/strategy.hpp"

namespace hiresim {

constexpr int schema_version = 1;

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline nlohmann::json strategy_to_json(const RankSequence& seq) {
    nlohmann::json j;
    j["dsl"] = seq.dsl();
    j["tail"] = classify_tail(seq) == TailClass::Large   ? "large"
                : classify_tail(seq) == TailClass::Small ? "small"
                                                         : "unknown";
    if (auto a = seq.alpha_rational())
        j["alpha"] = std::to_string(a->first) + "/" + std::to_string(a->second);
    return j;
}

inline nlohmann::json seed_to_json(const RngSeed& s) {
    return nlohmann::json{{"master", s.master}, {"replicate", s.replicate}};
}

// columns: k, X_k, I_k, M_k, threshold (the threshold seen by candidate k)
inline void trace_to_csv(const HiringTrace& t, const RankSequence& seq, std::ostream& out) {
    out << "# schema_version=" << schema_version << "\n";
    out << "# strategy=" << seq.dsl() << "\n";
    out << "# seed=" << t.seed.master << "/" << t.seed.replicate << "\n";
    out << "k,X_k,I_k,M_k,threshold\n";
    for (index_t k = 1; k <= t.n; ++k) {
        out << k << ',' << format_double(t.values[k]) << ','
            << static_cast<int>(t.accepted[k]) << ',' << t.M[k] << ','
            << format_double(t.thresholds_at_exam[k]) << "\n";
    }
}

inline nlohmann::json trace_summary_json(const HiringTrace& t, const RankSequence& seq) {
    nlohmann::json j;
    j["schema_version"] = schema_version;
    j["strategy"] = strategy_to_json(seq);
    j["n"] = t.n;
    j["M_n"] = t.M[t.n];
    j["N"] = std::vector<double>(t.N.begin() + 1, t.N.end());
    auto g = gap_statistics(t);
    j["L_n"] = g.L_n;
    j["P_n"] = g.P_n;
    j["seed"] = seed_to_json(t.seed);
    return j;
}

inline nlohmann::json trace_summary_json(const TraceSummary& t, const RankSequence& seq) {
    nlohmann::json j;
    j["schema_version"] = schema_version;
    j["strategy"] = strategy_to_json(seq);
    j["n"] = t.n;
    j["M_n"] = t.M_n;
    j["N"] = std::vector<double>(t.N.begin() + 1, t.N.end());
    j["L_n"] = t.L_n;
    j["P_n"] = t.P_n;
    j["seed"] = seed_to_json(t.seed);
    return j;
}

} // namespace hiresim
