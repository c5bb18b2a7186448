#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "meosim/analysis.hpp"
#include "meosim/bloch.hpp"
#include "meosim/circuit.hpp"
#include "meosim/graph.hpp"
#include "meosim/rng.hpp"

namespace meosim {

enum class OmegaPolicy { theorem, heuristic };
enum class RunMode { montecarlo, analytic };

struct RunConfig {
    double g = 1.0;
    int omega = 0;  // 0 resolves via the policy
    OmegaPolicy policy = OmegaPolicy::theorem;
    std::uint64_t seed = 0;
    Backend backend = Backend::structured;
    int trials = 1;
    bool assume_postselection = true;
    RunMode mode = RunMode::montecarlo;
    bool allow_small = false;  // n <= 4 with the suitability table
    int jobs = 1;
};

struct ZoomRecord {
    int round = 0;
    int E = 0;
    long long s = 0;
    int zeros = 0;
    int ones = 0;
    std::string verdict;  // "zoom", "m>0", "m=0"
};

struct RunReport {
    int E_returned = 0;
    std::vector<ZoomRecord> trace;
    long long postselection_retries = 0;
    long long linear_gate_proxy = 0;  // marking-pipeline invocations
    double nonlinear_time_total = 0.0;
    int omega = 0;
    std::uint64_t seed = 0;
};

// ---- ensemble sizing ----

// Worst-case success bound with E_max = n(n-1)/2.
inline double success_probability_estimate(int n, int omega) {
    if (n < 2 || omega < 1)
        throw std::invalid_argument("success_probability_estimate: require n >= 2, omega >= 1");
    double log2emax = std::log2(static_cast<double>(n) * (n - 1) / 2.0);
    double q = std::pow(2.0 * std::sqrt(2.0) / 3.0, 2.0 * omega);
    return std::pow(1.0 - q, log2emax);
}

// Sharper estimate used with the heuristic ensemble size: per-round bound
// sqrt(2/3)+eps_n, neglecting the infrequent s = 3 and s = 5 rounds.
inline double success_probability_appendix(int n, int omega) {
    if (n < 5 || omega < 1)
        throw std::invalid_argument("success_probability_appendix: require n >= 5, omega >= 1");
    double log2emax = std::log2(static_cast<double>(n) * (n - 1) / 2.0);
    double q = std::pow(sqrt_two_thirds() + epsilon_n(n), 2.0 * omega);
    return std::pow(1.0 - q, log2emax);
}

// Smallest omega satisfying the linearized worst-case condition
// log2(E_max_bound) (2 sqrt(2)/3)^(2 omega) < 1/2.
inline int omega_theorem(int n) {
    double log2emax = std::log2(static_cast<double>(n) * (n - 1) / 2.0);
    double ratio = 8.0 / 9.0;  // (2 sqrt(2)/3)^2
    int omega = 1;
    while (log2emax * std::pow(ratio, omega) >= 0.5) ++omega;
    return omega;
}

// "theorem": the worst-case inequality. "heuristic": ceil(10 ln ln n), kept
// when its own (appendix) success estimate clears 1/2, escalated to the
// theorem value otherwise.
inline int omega_auto(int n, OmegaPolicy policy) {
    if (n < 2) throw std::invalid_argument("omega_auto: require n >= 2");
    if (policy == OmegaPolicy::theorem) return omega_theorem(n);
    if (n < 5) return omega_theorem(n);
    int omega = static_cast<int>(std::ceil(10.0 * std::log(std::log(static_cast<double>(n)))));
    omega = std::max(omega, 1);
    if (success_probability_appendix(n, omega) > 0.5) return omega;
    return omega_theorem(n);
}

// ---- zoom qubit preparation and verdict ----

struct ProtocolAccounting {
    long long pipeline_invocations = 0;
    long long postselect_retries = 0;
    double nonlinear_time = 0.0;
};

namespace detail {

// Orientation, nonlinear evolution for T(s/n!) and final orientation of an
// already-generated m-th candidate. The 0th candidate is the arc endpoint
// that final_orient pins to |0>, so m = 0 returns |0> without integration.
inline CandidateQubit candidate_after_zoom(const CandidateQubit& raw, long long m, long long s,
                                           long long nfact, double g) {
    if (s < 1 || s > nfact) throw std::invalid_argument("prepare_zoom_qubit: require 1 <= s <= n!");
    if (m == 0) return {1.0, 0.0};
    EvolutionParams params;
    params.g = g;
    double a0 = alpha0(s, nfact);
    double T = evolution_time(s, nfact, g);
    BlochPoint e0 = orient_arc({1.0, 0.0}, s, nfact, params);
    BlochPoint e1 = orient_arc(candidate_state(s, nfact), s, nfact, params);
    BlochPoint p = orient_arc(raw, s, nfact, params);
    auto evolved = evolve_bundle({e0, e1, p}, T, a0, params);
    return final_orient(evolved[2], evolved[0], evolved[1]);
}

inline void check_small_n(int n, const RunConfig& cfg) {
    if (n <= 4 && !cfg.allow_small)
        throw std::invalid_argument("protocol: n <= 4 requires the suitability-table mode");
}

}  // namespace detail

// Zoom qubit preparation: marking pipeline, arc orientation, nonlinear
// evolution for T(s/n!) and the final orientation. When
// assume_postselection is off, postselection success is Bernoulli-sampled
// and failed preparations are retried and counted.
inline CandidateQubit prepare_zoom_qubit(const Graph& g1, const Graph& g2, int E, long long s,
                                          const RunConfig& cfg, Rng& rng,
                                          ProtocolAccounting* acct = nullptr) {
    long long nfact = factorial(g1.n);
    if (s < 1 || s > nfact) throw std::invalid_argument("prepare_zoom_qubit: require 1 <= s <= n!");
    MarkedSummary summary = run_marking_pipeline(g1, g2, E, cfg.backend);
    ProtocolAccounting local;
    ProtocolAccounting& a = acct ? *acct : local;
    ++a.pipeline_invocations;
    if (!cfg.assume_postselection) {
        while (!rng.bernoulli(summary.postselect_prob)) {
            ++a.postselect_retries;
            ++a.pipeline_invocations;
        }
    }
    a.nonlinear_time += evolution_time(s, nfact, cfg.g);
    return detail::candidate_after_zoom(summary.candidate, summary.m_marked, s, nfact, cfg.g);
}

enum class Verdict { m_zero, m_positive };

inline const char* verdict_name(Verdict v) { return v == Verdict::m_zero ? "m=0" : "m>0"; }

// The zooming procedure: ensembles of omega identically prepared qubits per
// round, halving s on all-zero outcomes. A measured 1 certifies m > 0; s
// reaching 0 reports m = 0.
inline Verdict zoom_verdict(const Graph& g1, const Graph& g2, int E, int omega,
                            const RunConfig& cfg, Rng& rng, ProtocolAccounting* acct = nullptr,
                            std::vector<ZoomRecord>* trace = nullptr,
                            int* round_counter = nullptr) {
    const int n = g1.n;
    detail::check_small_n(n, cfg);
    long long nfact = factorial(n);

    // m is fixed for the whole call; the ensemble members of every round are
    // identically prepared, so one pipeline evaluation serves the call while
    // the cost proxies still count one circuit per qubit.
    MarkedSummary summary = run_marking_pipeline(g1, g2, E, cfg.backend);
    ProtocolAccounting local;
    ProtocolAccounting& acct_all = acct ? *acct : local;
    ProtocolAccounting call;

    Verdict verdict = Verdict::m_zero;
    long long s = nfact;
    while (s >= 1) {
        if (n <= 4 && s >= 2 && !suitability_entry(n, s).suitable)
            throw std::runtime_error("zoom_verdict: (n, s) not suitable for zooming");
        CandidateQubit qubit =
            detail::candidate_after_zoom(summary.candidate, summary.m_marked, s, nfact, cfg.g);
        int zeros = 0, ones = 0;
        for (int k = 0; k < omega; ++k) {
            ++call.pipeline_invocations;
            if (!cfg.assume_postselection) {
                while (!rng.bernoulli(summary.postselect_prob)) {
                    ++call.postselect_retries;
                    ++call.pipeline_invocations;
                }
            }
            call.nonlinear_time += evolution_time(s, nfact, cfg.g);
            (measure(qubit, rng) ? ones : zeros)++;
        }
        bool done = ones > 0;
        if (trace) {
            int round = round_counter ? ++*round_counter : static_cast<int>(trace->size()) + 1;
            trace->push_back({round, E, s, zeros, ones,
                              done ? verdict_name(Verdict::m_positive) : (s == 1 ? "m=0" : "zoom")});
        }
        if (done) {
            verdict = Verdict::m_positive;
            break;
        }
        s /= 2;
    }

    double budget = lemma2_budget(n, cfg.g) * omega;
    if (call.nonlinear_time > budget + 1e-6)
        throw std::logic_error("zoom_verdict: nonlinear evolution time exceeded the zoom budget");
    acct_all.pipeline_invocations += call.pipeline_invocations;
    acct_all.postselect_retries += call.postselect_retries;
    acct_all.nonlinear_time += call.nonlinear_time;
    return verdict;
}

// ---- graph comparison by threshold search ----

// Integer binary search over thresholds E in [0, E_max] with the zoom
// procedure as the predicate "some permutation exceeds E". s restarts at n!
// for every predicate call. In analytic mode the predicate is the exact
// classical count instead.
inline RunReport find_max_overlap(const Graph& g1, const Graph& g2, const RunConfig& cfg) {
    require_same_size(g1, g2, "find_max_overlap");
    const int n = g1.n;
    RunReport report;
    report.seed = cfg.seed;

    OverlapHistogram hist;
    if (cfg.mode == RunMode::analytic) {
        require_enumerable(g1, "find_max_overlap");
        hist = eo_distribution(g1, g2);
    } else {
        detail::check_small_n(n, cfg);
        report.omega = cfg.omega > 0 ? cfg.omega : omega_auto(n, cfg.policy);
    }

    Rng rng = Rng::stream(cfg.seed, {0x416c67326bULL});
    ProtocolAccounting acct;
    int round_counter = 0;
    auto predicate = [&](int E) {
        if (cfg.mode == RunMode::analytic) return hist.count_above(E) > 0;
        return zoom_verdict(g1, g2, E, report.omega, cfg, rng, &acct, &report.trace,
                           &round_counter) == Verdict::m_positive;
    };

    int lo = 0, hi = std::min(g1.edge_count, g2.edge_count);
    while (lo < hi) {
        int mid = lo + (hi - lo) / 2;
        if (predicate(mid))
            lo = mid + 1;
        else
            hi = mid;
    }
    report.E_returned = lo;
    report.postselection_retries = acct.postselect_retries;
    report.linear_gate_proxy = acct.pipeline_invocations;
    report.nonlinear_time_total = acct.nonlinear_time;
    return report;
}

// ---- Dürr–Høyer maximum-search baseline ----

// Quantum maximum search on the marked superposition: random initial
// threshold, marking circuit, uniformly drawn Grover rotation counts under
// the lambda schedule, measurement and threshold update, within the
// 22.5 sqrt(n!) + 1.4 log2^2(n!) runtime budget.
inline int grover_baseline(const Graph& g1, const Graph& g2, const RunConfig& cfg, Rng& rng) {
    require_same_size(g1, g2, "grover_baseline");
    const int n = g1.n;
    if (n > 4) throw std::invalid_argument("grover_baseline: limited to n <= 4");
    const long long nfact = factorial(n);
    const double lambda = 6.0 / 5.0;  // within (1, 4/3)

    std::vector<Permutation> perms(nfact);
    {
        long long i = 0;
        for_each_code(n, [&](const RadixCode& code) { perms[i++] = radix_decode(code); });
    }

    long long y = static_cast<long long>(rng.uniform_int(static_cast<std::uint64_t>(nfact)));
    int E = edge_overlap(g1, g2, perms[y]);

    double budget = 22.5 * std::sqrt(static_cast<double>(nfact)) +
                    1.4 * std::pow(std::log2(static_cast<double>(nfact)), 2.0);
    double used = 0.0;
    double p = 1.0;
    const double uniform = 1.0 / std::sqrt(static_cast<double>(nfact));

    while (used <= budget) {
        RegisterState state = run_marking_circuit(g1, g2, E, cfg.backend);
        std::vector<double> amp(nfact);
        std::vector<char> marked(nfact);
        for (long long i = 0; i < nfact; ++i) {
            const StructuredBranch& b = state.branches[i];
            if (std::abs(b.amp.imag()) > kAmpTol)
                throw std::runtime_error("grover_baseline: unexpected complex amplitudes");
            amp[i] = b.amp.real();
            marked[i] = static_cast<char>(b.anc);
        }

        long long max_rot = static_cast<long long>(std::ceil(p - 1.0));
        long long rotations =
            static_cast<long long>(rng.uniform_int(static_cast<std::uint64_t>(max_rot + 1)));
        for (long long r = 0; r < rotations; ++r) {
            for (long long i = 0; i < nfact; ++i)
                if (marked[i]) amp[i] = -amp[i];
            double mean = 0.0;
            for (double a : amp) mean += a * uniform;
            for (long long i = 0; i < nfact; ++i) amp[i] = 2.0 * mean * uniform - amp[i];
        }

        double u = rng.uniform();
        double acc = 0.0;
        long long k = nfact - 1;
        for (long long i = 0; i < nfact; ++i) {
            acc += amp[i] * amp[i];
            if (u < acc) {
                k = i;
                break;
            }
        }

        used += static_cast<double>(rotations) + 1.0;
        int eo_k = edge_overlap(g1, g2, perms[k]);
        if (eo_k > E) {
            E = eo_k;
            p = 1.0;
        } else {
            p *= lambda;
        }
    }
    return E;
}

// ---- serialization ----

inline nlohmann::json run_report_json(const RunReport& r) {
    nlohmann::json j;
    j["E_returned"] = r.E_returned;
    j["omega"] = r.omega;
    j["seed"] = r.seed;
    j["postselection_retries"] = r.postselection_retries;
    j["linear_gate_proxy"] = r.linear_gate_proxy;
    j["nonlinear_time_total"] = r.nonlinear_time_total;
    j["trace"] = nlohmann::json::array();
    for (const auto& t : r.trace)
        j["trace"].push_back({{"round", t.round},
                              {"E", t.E},
                              {"s", t.s},
                              {"zeros", t.zeros},
                              {"ones", t.ones},
                              {"verdict", t.verdict}});
    return j;
}

inline std::string run_report_trace_csv(const RunReport& r) {
    std::string csv = "round,E,s,zeros,ones,verdict\n";
    for (const auto& t : r.trace)
        csv += std::to_string(t.round) + "," + std::to_string(t.E) + "," + std::to_string(t.s) +
               "," + std::to_string(t.zeros) + "," + std::to_string(t.ones) + "," + t.verdict +
               "\n";
    return csv;
}

// Success-estimate series: the heuristic ensemble size against the 1/2 bar.
inline std::string figure_psucc_csv(int n_lo, int n_hi) {
    if (n_lo < 5 || n_hi < n_lo)
        throw std::invalid_argument("figure psucc: require 5 <= n_lo <= n_hi");
    std::string csv = "n,omega,estimate,worst_case_estimate,exceeds_half\n";
    for (int n = n_lo; n <= n_hi; ++n) {
        int omega = static_cast<int>(std::ceil(10.0 * std::log(std::log(static_cast<double>(n)))));
        omega = std::max(omega, 1);
        double est = success_probability_appendix(n, omega);
        double worst = success_probability_estimate(n, omega);
        csv += std::to_string(n) + "," + std::to_string(omega) + "," + detail::fmt(est) + "," +
               detail::fmt(worst) + "," + (est > 0.5 ? "1" : "0") + "\n";
    }
    return csv;
}

}  // namespace meosim
