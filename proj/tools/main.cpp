// meosim: desk-scale simulator and verification suite for maximum-edge-overlap
// graph comparison via marked permutation superpositions and nonlinear
// Bloch-sphere discrimination.

#include <atomic>
#include <mutex>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "meosim/analysis.hpp"
#include "meosim/bloch.hpp"
#include "meosim/circuit.hpp"
#include "meosim/graph.hpp"
#include "meosim/protocol.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitUsage = 2;

meosim::Graph load_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open graph file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return meosim::load_graph(buf.str());
}

meosim::Backend parse_backend(const std::string& name) {
    if (name == "dense") return meosim::Backend::dense;
    if (name == "structured") return meosim::Backend::structured;
    throw std::invalid_argument("unknown backend: " + name);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write: " + path);
    out << text;
}

long long count_csv_rows(const std::string& csv) {
    long long rows = 0;
    for (char c : csv)
        if (c == '\n') ++rows;
    return rows > 0 ? rows - 1 : 0;  // minus header
}

struct NRange {
    int lo = 0, hi = 0;
};

NRange parse_n_spec(const std::string& spec) {
    auto dots = spec.find("..");
    NRange r;
    if (dots == std::string::npos) {
        r.lo = r.hi = std::stoi(spec);
    } else {
        r.lo = std::stoi(spec.substr(0, dots));
        r.hi = std::stoi(spec.substr(dots + 2));
    }
    if (r.lo < 1 || r.hi < r.lo) throw std::invalid_argument("bad --n range: " + spec);
    return r;
}

int cmd_meo(const std::string& path1, const std::string& path2) {
    meosim::Graph g1 = load_graph_file(path1);
    meosim::Graph g2 = load_graph_file(path2);
    meosim::MeoResult r = meosim::brute_force_meo(g1, g2);
    nlohmann::json j;
    j["n"] = g1.n;
    j["meo"] = r.meo;
    j["optimal_count"] = r.optimal_count;
    j["similarity"] = meosim::similarity(g1, g2);
    std::cout << j.dump() << "\n";
    return kExitOk;
}

int cmd_simulate(const std::string& path1, const std::string& path2, int E,
                 const std::string& backend, const std::string& dump_path) {
    meosim::Graph g1 = load_graph_file(path1);
    meosim::Graph g2 = load_graph_file(path2);
    meosim::Backend b = parse_backend(backend);
    meosim::MarkedSummary summary = meosim::run_marking_pipeline(g1, g2, E, b);
    if (!dump_path.empty()) {
        std::string dump = meosim::dump_state(meosim::run_marking_circuit(g1, g2, E, b));
        if (dump_path == "-")
            std::cout << dump;
        else
            write_text(dump_path, dump);
    }
    nlohmann::json j;
    j["E"] = E;
    j["m_marked"] = summary.m_marked;
    j["uniform_amplitude"] = summary.uniform_amplitude;
    j["postselect_prob"] = summary.postselect_prob;
    j["candidate"] = {summary.candidate.a0, summary.candidate.a1};
    std::cout << j.dump() << "\n";
    return kExitOk;
}

int cmd_run(const std::string& path1, const std::string& path2, meosim::RunConfig cfg,
            const std::string& omega_flag, const std::string& policy) {
    meosim::Graph g1 = load_graph_file(path1);
    meosim::Graph g2 = load_graph_file(path2);
    if (policy == "theorem")
        cfg.policy = meosim::OmegaPolicy::theorem;
    else if (policy == "heuristic")
        cfg.policy = meosim::OmegaPolicy::heuristic;
    else
        throw std::invalid_argument("unknown policy: " + policy);
    if (omega_flag != "auto") cfg.omega = std::stoi(omega_flag);

    int true_meo = meosim::brute_force_meo(g1, g2).meo;
    std::vector<std::string> lines(cfg.trials);
    std::atomic<long long> successes{0};
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        try {
            for (int t = next.fetch_add(1); t < cfg.trials; t = next.fetch_add(1)) {
                meosim::RunConfig trial_cfg = cfg;
                trial_cfg.seed =
                    meosim::Rng::stream(cfg.seed, {0x7472ULL, static_cast<std::uint64_t>(t)})
                        .next_u64();
                meosim::RunReport report = meosim::find_max_overlap(g1, g2, trial_cfg);
                if (report.E_returned == true_meo) ++successes;
                nlohmann::json j = meosim::run_report_json(report);
                j["trial"] = t;
                lines[t] = j.dump();
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            next.store(cfg.trials);
        }
    };
    int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    for (const auto& line : lines) std::cout << line << "\n";
    nlohmann::json summary;
    summary["summary"] = {{"trials", cfg.trials},
                          {"successes", successes.load()},
                          {"success_rate", static_cast<double>(successes.load()) / cfg.trials},
                          {"true_meo", true_meo},
                          {"omega", cfg.omega > 0 ? cfg.omega
                                                  : meosim::omega_auto(g1.n, cfg.policy)}};
    std::cout << summary.dump() << "\n";
    return kExitOk;
}

int cmd_baseline(const std::string& path1, const std::string& path2, meosim::RunConfig cfg) {
    meosim::Graph g1 = load_graph_file(path1);
    meosim::Graph g2 = load_graph_file(path2);
    int true_meo = meosim::brute_force_meo(g1, g2).meo;
    long long successes = 0;
    for (int t = 0; t < cfg.trials; ++t) {
        meosim::Rng rng = meosim::Rng::stream(cfg.seed, {0x6457ULL, static_cast<std::uint64_t>(t)});
        int e = meosim::grover_baseline(g1, g2, cfg, rng);
        if (e == true_meo) ++successes;
        nlohmann::json j;
        j["trial"] = t;
        j["E_returned"] = e;
        std::cout << j.dump() << "\n";
    }
    nlohmann::json summary;
    summary["summary"] = {{"trials", cfg.trials},
                          {"successes", successes},
                          {"success_rate", static_cast<double>(successes) / cfg.trials},
                          {"true_meo", true_meo}};
    std::cout << summary.dump() << "\n";
    return kExitOk;
}

int cmd_verify(const std::string& suite, int n, double g, std::string out_path) {
    nlohmann::json report;
    report["suite"] = suite;
    report["n"] = n;
    bool ok = true;

    if (suite == "zoomok") {
        if (n < 3 || n > 8) throw std::invalid_argument("zoomok: require 3 <= n <= 8");
        meosim::ZoomBoundReport zr = meosim::verify_zoomok(n);
        report["epsilon5"] = zr.epsilon;
        report["values"] = nlohmann::json::array();
        for (const auto& row : zr.rows)
            report["values"].push_back({{"s", row.s},
                                        {"value", row.value},
                                        {"lower_envelope", row.lower_envelope},
                                        {"upper_envelope", row.upper_envelope}});
        report["violations"] = nlohmann::json::array();
        for (const auto& v : zr.violations)
            report["violations"].push_back(
                {{"s", v.s}, {"value", v.value}, {"bound", v.bound}, {"which", v.which}});
        if (n <= 4) report["suitability_table"] = nlohmann::json::parse(meosim::suitability_table_json());
        ok = zr.violations.empty();
    } else if (suite == "halfway") {
        if (n < 2 || n > 8) throw std::invalid_argument("halfway: require 2 <= n <= 8");
        nlohmann::json bad = nlohmann::json::array();
        for (long long s = 1; s <= meosim::factorial(n); ++s) {
            auto r = meosim::verify_halfway(n, s);
            if (!r.ok) bad.push_back({{"s", s}, {"s_prime", r.s_prime}});
        }
        report["violations"] = bad;
        ok = bad.empty();
    } else if (suite == "timecost") {
        if (n < 2 || n > 8) throw std::invalid_argument("timecost: require 2 <= n <= 8");
        nlohmann::json bad = nlohmann::json::array();
        for (long long s = 1; s <= meosim::factorial(n); ++s) {
            auto r = meosim::time_budget(n, s, g);
            if (!r.ok) bad.push_back({{"s", s}, {"total", r.total}, {"bound", r.bound}});
        }
        report["violations"] = bad;
        ok = bad.empty();
    } else if (suite == "epsilon") {
        if (n < 5 || n > 12) throw std::invalid_argument("epsilon: require 5 <= n <= 12");
        double value = meosim::epsilon_n(n);
        report["epsilon"] = value;
        if (n == 5) ok = std::abs(value - 0.00907762) <= 1e-6;
        if (n == 6) ok = std::abs(value - 0.00151206) <= 1e-6;
        nlohmann::json series = nlohmann::json::array();
        double prev = 0.0;
        for (int k = 5; k <= n; ++k) {
            double e = meosim::epsilon_n(k);
            series.push_back(e);
            if (k > 5 && e >= prev) ok = false;
            prev = e;
        }
        report["epsilon_series_from_5"] = series;
    } else if (suite == "circuit") {
        if (n < 2 || n > 6) throw std::invalid_argument("circuit: require 2 <= n <= 6");
        meosim::Rng rng = meosim::Rng::stream(12345, {static_cast<std::uint64_t>(n)});
        nlohmann::json bad = nlohmann::json::array();
        for (int pair = 0; pair < 5; ++pair) {
            auto random_graph = [&]() {
                std::vector<std::pair<int, int>> edges;
                for (int u = 0; u < n; ++u)
                    for (int v = u + 1; v < n; ++v)
                        if (rng.bernoulli(0.5)) edges.emplace_back(u, v);
                return meosim::Graph::from_edges(n, edges);
            };
            meosim::Graph g1 = random_graph(), g2 = random_graph();
            int emax = std::min(g1.edge_count, g2.edge_count);
            for (int E = 0; E <= emax; ++E) {
                auto s = meosim::run_marking_pipeline(g1, g2, E, meosim::Backend::structured);
                long long m = meosim::count_exceeding(g1, g2, E);
                if (s.m_marked != m) {
                    bad.push_back({{"pair", pair}, {"E", E}, {"kind", "m_marked"}});
                    continue;
                }
                auto expect = meosim::candidate_state(m, meosim::factorial(n));
                if (std::abs(s.candidate.a0 - expect.a0) > 1e-10 ||
                    std::abs(s.candidate.a1 - expect.a1) > 1e-10)
                    bad.push_back({{"pair", pair}, {"E", E}, {"kind", "candidate"}});
                if (n <= 4) {
                    auto d = meosim::run_marking_circuit(g1, g2, E, meosim::Backend::dense);
                    auto st = meosim::run_marking_circuit(g1, g2, E, meosim::Backend::structured);
                    if (meosim::dump_state(d) != meosim::dump_state(st))
                        bad.push_back({{"pair", pair}, {"E", E}, {"kind", "backend_parity"}});
                }
            }
        }
        report["violations"] = bad;
        auto cal = meosim::calibrate_orientation();
        report["calibration"] = nlohmann::json::parse(meosim::calibration_report_json(cal));
        ok = bad.empty() && cal.chosen.residual < 1e-9;
    } else {
        throw std::invalid_argument("unknown suite: " + suite);
    }

    report["ok"] = ok;
    if (out_path.empty()) out_path = "verify_" + suite + "_n" + std::to_string(n) + ".json";
    write_text(out_path, report.dump(2) + "\n");
    std::cout << out_path << "\n";
    return ok ? kExitOk : kExitVerifyFail;
}

int cmd_figure(const std::string& name, const std::string& n_spec, std::string out_path,
               const std::string& path1, const std::string& path2) {
    std::string csv;
    if (name == "evsbij") {
        if (path1.empty() || path2.empty())
            throw std::invalid_argument("figure evsbij needs two graph files");
        csv = meosim::figure_evsbij_csv(load_graph_file(path1), load_graph_file(path2));
    } else if (name == "alldat") {
        NRange r = parse_n_spec(n_spec);
        if (r.lo != r.hi) throw std::invalid_argument("figure alldat takes a single n");
        csv = meosim::figure_alldat_csv(r.lo);
    } else if (name == "en") {
        NRange r = parse_n_spec(n_spec);
        csv = meosim::figure_en_csv(r.lo, r.hi);
    } else if (name == "psucc") {
        NRange r = parse_n_spec(n_spec);
        csv = meosim::figure_psucc_csv(r.lo, r.hi);
    } else {
        throw std::invalid_argument("unknown figure name: " + name);
    }
    if (out_path.empty()) out_path = name + ".csv";
    write_text(out_path, csv);
    std::cout << out_path << ": " << count_csv_rows(csv) << " rows\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"maximum edge overlap via simulated nonlinear quantum search"};
    app.require_subcommand(1);

    std::string graph1, graph2, backend = "structured", omega = "auto", policy = "theorem";
    std::string suite, fig_name, n_spec = "5", out_path, dump_path;
    meosim::RunConfig cfg;
    int E = 0, verify_n = 5;
    double g_flag = 1.0;

    auto* c_meo = app.add_subcommand("meo", "exact brute-force MEO and similarity");
    c_meo->add_option("graph1", graph1)->required();
    c_meo->add_option("graph2", graph2)->required();

    auto* c_sim = app.add_subcommand("simulate", "run the marking pipeline once");
    c_sim->add_option("graph1", graph1)->required();
    c_sim->add_option("graph2", graph2)->required();
    c_sim->add_option("--E", E, "threshold edge overlap")->required();
    c_sim->add_option("--backend", backend, "dense|structured");
    c_sim->add_option("--dump", dump_path, "write the state dump to a file ('-' for stdout)");

    auto* c_run = app.add_subcommand("run", "full graph-comparison protocol trials");
    c_run->add_option("graph1", graph1)->required();
    c_run->add_option("graph2", graph2)->required();
    c_run->add_option("--g", cfg.g, "nonlinearity strength");
    c_run->add_option("--omega", omega, "ensemble size or 'auto'");
    c_run->add_option("--policy", policy, "theorem|heuristic");
    c_run->add_option("--seed", cfg.seed, "master seed");
    c_run->add_option("--trials", cfg.trials, "number of independent trials");
    c_run->add_option("--backend", backend, "dense|structured");
    c_run->add_option("--assume-postselection", cfg.assume_postselection,
                      "treat postselection as always succeeding");
    c_run->add_flag("--allow-small", cfg.allow_small, "permit n <= 4 via the suitability table");
    c_run->add_option("--jobs", cfg.jobs, "worker threads for trials");
    c_run->add_option("--mode", [&cfg](const std::vector<std::string>& v) {
        if (v[0] == "montecarlo") cfg.mode = meosim::RunMode::montecarlo;
        else if (v[0] == "analytic") cfg.mode = meosim::RunMode::analytic;
        else return false;
        return true;
    }, "montecarlo|analytic");

    auto* c_base = app.add_subcommand("baseline", "quantum maximum searching baseline");
    c_base->add_option("graph1", graph1)->required();
    c_base->add_option("graph2", graph2)->required();
    c_base->add_option("--trials", cfg.trials);
    c_base->add_option("--seed", cfg.seed);
    c_base->add_option("--backend", backend, "dense|structured");

    auto* c_verify = app.add_subcommand("verify", "numerical verification sweeps");
    c_verify->add_option("--suite", suite, "zoomok|halfway|timecost|epsilon|circuit")->required();
    c_verify->add_option("--n", verify_n)->required();
    c_verify->add_option("--g", g_flag);
    c_verify->add_option("--out", out_path);

    auto* c_fig = app.add_subcommand("figure", "emit figure data as CSV");
    c_fig->add_option("--name", fig_name, "evsbij|alldat|en|psucc")->required();
    c_fig->add_option("--n", n_spec, "single value or range like 5..8");
    c_fig->add_option("--out", out_path);
    c_fig->add_option("graph1", graph1);
    c_fig->add_option("graph2", graph2);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        cfg.backend = parse_backend(backend);
        if (c_meo->parsed()) return cmd_meo(graph1, graph2);
        if (c_sim->parsed()) return cmd_simulate(graph1, graph2, E, backend, dump_path);
        if (c_run->parsed()) return cmd_run(graph1, graph2, cfg, omega, policy);
        if (c_base->parsed()) return cmd_baseline(graph1, graph2, cfg);
        if (c_verify->parsed()) return cmd_verify(suite, verify_n, g_flag, out_path);
        if (c_fig->parsed()) return cmd_figure(fig_name, n_spec, out_path, graph1, graph2);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitVerifyFail;
    }
    return kExitUsage;
}
