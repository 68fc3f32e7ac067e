// hiresim - simulate rank-threshold hiring strategies, evaluate their
// limit-law constants and run the statistical verification experiments.
//
// Exit codes: 0 success / all checks passed, 1 a check failed,
// 2 usage or input error.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hiresim/hiresim.hpp"

namespace {

using namespace hiresim;

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file " + path);
    out << text;
}

int cmd_simulate(const std::string& strategy, long long n, long long reps,
                 std::uint64_t seed, const std::string& out_path, const std::string& format,
                 bool summary_only, int threads) {
    auto seq = parse_strategy(strategy);
    if (reps <= 1 && !summary_only && format == "csv") {
        auto trace = simulate_direct(seq, n, Rng(seed, 0));
        std::ostringstream os;
        trace_to_csv(trace, seq, os);
        write_text(out_path, os.str());
        return 0;
    }
    nlohmann::json j;
    j["schema_version"] = schema_version;
    j["strategy"] = strategy_to_json(seq);
    j["n"] = n;
    j["seed"] = seed;
    j["replicates"] = reps;
    j["runs"] = nlohmann::json::array();
    std::vector<nlohmann::json> runs(reps);
    parallel_replicates(reps, threads, seed, [&](index_t i, Rng rng) {
        if (summary_only) {
            runs[i] = trace_summary_json(simulate_summary(seq, n, rng), seq);
        } else {
            runs[i] = trace_summary_json(simulate_direct(seq, n, rng), seq);
        }
    });
    for (auto& r : runs) j["runs"].push_back(std::move(r));
    write_text(out_path, j.dump(2) + "\n");
    return 0;
}

int cmd_moments(const std::string& strategy, double s, double tol, const std::string& method,
                const std::string& out_path) {
    auto seq = parse_strategy(strategy);
    double alpha = seq.alpha();
    if (!(alpha > 0))
        throw std::runtime_error("moments: strategy has no linear rate alpha (large-r only)");
    MomentResult res;
    if (method == "product") {
        res = moment_W_product(seq, alpha, s, tol);
    } else if (method == "periodic") {
        res = moment_W_periodic(seq, s);
    } else { // auto: closed form when exact, product otherwise
        try {
            res = moment_W_periodic(seq, s);
        } catch (const std::invalid_argument&) {
            res = moment_W_product(seq, alpha, s, tol);
        }
    }
    nlohmann::json j;
    j["schema_version"] = schema_version;
    j["strategy"] = strategy_to_json(seq);
    j["s"] = s;
    j["value"] = res.value;
    j["error_estimate"] = res.error_estimate;
    j["truncation_index"] = res.truncation_index;
    j["method"] = res.method;
    write_text(out_path, j.dump(2) + "\n");
    return 0;
}

int cmd_normalize(const std::string& strategy, long long n, const std::string& out_path) {
    auto seq = parse_strategy(strategy);
    auto norm = clt_normalizer(seq, static_cast<double>(n));
    nlohmann::json j;
    j["schema_version"] = schema_version;
    j["strategy"] = strategy_to_json(seq);
    j["n"] = n;
    j["mu"] = norm.mu;
    j["gamma"] = norm.gamma;
    j["y_hat_mu"] = norm.y_hat_mu;
    j["log_n"] = norm.log_n;
    write_text(out_path, j.dump(2) + "\n");
    return 0;
}

int cmd_oracle(const std::string& strategy, long long n, const std::string& method,
               const std::string& out_path) {
    auto seq = parse_strategy(strategy);
    nlohmann::json j;
    j["schema_version"] = schema_version;
    j["strategy"] = strategy_to_json(seq);
    j["n"] = n;
    j["method"] = method;
    if (method == "enumerate") {
        auto d = brute_force_distribution(seq, n);
        j["pmf_M"] = d.pmf_M;
        j["pmf_L"] = d.pmf_L;
    } else if (method == "markov") {
        j["pmf_M"] = exact_distribution_markov(seq, n);
    } else {
        throw CLI::ValidationError("--method must be enumerate or markov");
    }
    write_text(out_path, j.dump(2) + "\n");
    return 0;
}

int cmd_verify(const std::string& name, const std::string& strategy, long long n, long long m,
               long long reps, double level, std::uint64_t seed, bool seed_set, int threads,
               const std::string& out_path, bool timing) {
    ExperimentSpec spec;
    spec.name = name;
    spec.strategy = strategy;
    spec.n = n;
    spec.m = m;
    spec.replicates = reps;
    spec.level = level;
    spec.seed = seed;
    spec.seed_set = seed_set;
    spec.threads = threads;
    TestReport rep = run_experiment(spec);
    write_text(out_path, report_to_json(rep, timing).dump(2) + "\n");
    std::cerr << "experiment " << name << ": " << (rep.pass ? "PASS" : "FAIL") << " ("
              << rep.runtime_seconds << " s)\n";
    return rep.pass ? 0 : 1;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_path) {
    nlohmann::json bundle;
    bundle["schema_version"] = schema_version;
    bundle["reports"] = nlohmann::json::array();
    long long passed = 0, failed = 0;
    std::vector<std::string> failing;
    for (const auto& path : inputs) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read report " + path);
        nlohmann::json j;
        in >> j;
        bool pass = j.value("pass", false);
        (pass ? passed : failed) += 1;
        if (!pass) failing.push_back(j.value("experiment", path));
        bundle["reports"].push_back(std::move(j));
    }
    bundle["passed"] = passed;
    bundle["failed"] = failed;
    bundle["failing"] = failing;
    write_text(out_path, bundle.dump(2) + "\n");
    for (const auto& f : failing) std::cerr << "FAIL: " << f << "\n";
    return failed == 0 ? 0 : 1;
}

} // namespace

// --config file.json mirrors the flags: {"command": "moments",
// "strategy": "median", "s": 1, ...}; booleans become flags.
static std::vector<std::string> expand_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path);
    nlohmann::json j;
    in >> j;
    if (!j.contains("command")) throw std::runtime_error("config: missing \"command\"");
    std::vector<std::string> args;
    args.push_back(j["command"].get<std::string>());
    for (auto& [key, value] : j.items()) {
        if (key == "command") continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back("--" + key);
        } else if (value.is_string()) {
            args.push_back("--" + key);
            args.push_back(value.get<std::string>());
        } else if (value.is_array()) {
            for (auto& item : value) {
                args.push_back("--" + key);
                args.push_back(item.is_string() ? item.get<std::string>() : item.dump());
            }
        } else {
            args.push_back("--" + key);
            args.push_back(value.dump());
        }
    }
    return args;
}

int main(int argc, char** argv) {
    CLI::App app{"rank-threshold hiring strategies: simulation, limit laws, verification"};
    app.require_subcommand(1);

    std::string strategy = "median", out_path, format = "csv", method = "auto";
    long long n = 1000, m = 0, reps = 1;
    double s = 1.0, tol = 1e-9, level = 0.0;
    std::uint64_t seed = 1;
    int threads = 1;
    bool summary_only = false, timing = false;

    auto* sim = app.add_subcommand("simulate", "run the hiring process and export traces");
    sim->add_option("--strategy", strategy, "strategy DSL")->required();
    sim->add_option("--n", n, "horizon (number of candidates)")->required();
    sim->add_option("--seed", seed, "master seed (default 1)");
    sim->add_option("--reps", reps, "replicates (JSON output when > 1)");
    sim->add_option("--out", out_path, "output path (default stdout)");
    sim->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
    sim->add_flag("--summary", summary_only, "summary statistics only (no per-candidate trace)");
    sim->add_option("--threads", threads, "worker threads (must not affect results)");

    auto* mom = app.add_subcommand("moments", "evaluate asymptotic moments E W^s");
    mom->add_option("--strategy", strategy, "strategy DSL")->required();
    mom->add_option("--s", s, "moment order")->required();
    mom->add_option("--tol", tol, "target accuracy for the truncated product");
    mom->add_option("--method", method, "auto | product | periodic")
        ->check(CLI::IsMember({"auto", "product", "periodic"}));
    mom->add_option("--out", out_path, "output path (default stdout)");

    auto* nrm = app.add_subcommand("normalize", "CLT normalizer mu(n), gamma(n) for small-r");
    nrm->add_option("--strategy", strategy, "strategy DSL")->required();
    nrm->add_option("--n", n, "horizon")->required();
    nrm->add_option("--out", out_path, "output path (default stdout)");

    auto* orc = app.add_subcommand("oracle", "exact distribution of M_n");
    orc->add_option("--strategy", strategy, "strategy DSL")->required();
    orc->add_option("--n", n, "horizon")->required();
    std::string oracle_method = "enumerate";
    orc->add_option("--method", oracle_method, "enumerate (n <= 10) | markov");
    orc->add_option("--out", out_path, "output path (default stdout)");

    auto* ver = app.add_subcommand("verify", "run a verification experiment");
    std::string experiment;
    ver->add_option("--experiment", experiment, "experiment name")->required();
    ver->add_option("--strategy", strategy, "strategy DSL override (experiment default otherwise)");
    bool seed_given = false;
    auto* seed_opt = ver->add_option("--seed", seed, "master seed (required, no silent entropy)");
    seed_opt->required();
    ver->add_option("--n", n, "horizon override");
    ver->add_option("--m", m, "acceptance-count override");
    ver->add_option("--reps", reps, "replicate override");
    ver->add_option("--level", level, "test level override");
    ver->add_option("--threads", threads, "worker threads (must not affect results)");
    ver->add_option("--out", out_path, "report path (default stdout)");
    ver->add_flag("--timing", timing, "include wall-clock runtime in the report "
                                      "(off by default to keep outputs byte-reproducible)");

    auto* repc = app.add_subcommand("report", "bundle experiment reports");
    std::vector<std::string> inputs;
    repc->add_option("--in", inputs, "report JSON files")->required();
    repc->add_option("--out", out_path, "bundle path (default stdout)");

    try {
        if (argc >= 3 && std::string(argv[1]) == "--config") {
            auto args = expand_config(argv[2]);
            std::vector<const char*> cargv;
            cargv.push_back(argv[0]);
            for (auto& a : args) cargv.push_back(a.c_str());
            app.parse(static_cast<int>(cargv.size()), cargv.data());
        } else {
            app.parse(argc, argv);
        }
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (sim->parsed()) {
            std::string fmt = (reps > 1 || summary_only) ? "json" : format;
            return cmd_simulate(strategy, n, reps, seed, out_path, fmt, summary_only, threads);
        }
        if (mom->parsed()) return cmd_moments(strategy, s, tol, method, out_path);
        if (nrm->parsed()) return cmd_normalize(strategy, n, out_path);
        if (orc->parsed()) return cmd_oracle(strategy, n, oracle_method, out_path);
        if (ver->parsed()) {
            strategy = ver->count("--strategy") ? strategy : "";
            n = ver->count("--n") ? n : 0;
            m = ver->count("--m") ? m : 0;
            reps = ver->count("--reps") ? reps : 0;
            seed_given = true;
            return cmd_verify(experiment, strategy, n, m, reps, level, seed, seed_given, threads,
                              out_path, timing);
        }
        if (repc->parsed()) return cmd_report(inputs, out_path);
    } catch (const dsl_parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
