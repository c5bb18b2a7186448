#include <catch2/catch_amalgamated.hpp>

#include "meosim/bloch.hpp"
#include "meosim/radix.hpp"

using namespace meosim;
using Catch::Matchers::WithinAbs;

TEST_CASE("candidate_state endpoints and midpoint") {
    CandidateQubit q = candidate_state(0, 720);
    CHECK(q.a0 == 1.0);
    CHECK(q.a1 == 0.0);
    q = candidate_state(720, 720);
    CHECK(q.a0 == 0.0);
    CHECK(q.a1 == 1.0);
    q = candidate_state(360, 720);
    CHECK_THAT(q.a0, WithinAbs(1.0 / std::sqrt(2.0), 1e-12));
    CHECK_THAT(q.a1, WithinAbs(1.0 / std::sqrt(2.0), 1e-12));
    CHECK_THROWS_AS(candidate_state(-1, 720), std::invalid_argument);
    CHECK_THROWS_AS(candidate_state(721, 720), std::invalid_argument);
}

TEST_CASE("candidate_inner values") {
    CHECK(candidate_inner(0, 120) == 1.0);
    CHECK(candidate_inner(120, 120) == 0.0);
    // m/n! = 0.01: 1 - (1/2)(m/n!)^2 up to the cubic term
    double v = candidate_inner_frac(0.01);
    CHECK_THAT(v, WithinAbs(1.0 - 0.5e-4, 2e-6));
    CHECK_THAT(v, WithinAbs(0.99 / std::sqrt(1.0 - 0.02 + 0.0002), 1e-15));
}

TEST_CASE("candidate arc ordering is strictly monotone") {
    long long nfact = 720;
    double prev = 2.0;
    for (long long m = 0; m <= nfact; ++m) {
        double v = candidate_inner(m, nfact);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("postselect_prob values and minimum") {
    CHECK(postselect_prob(0, 24) == 1.0);
    CHECK_THAT(postselect_prob(12, 24), WithinAbs(0.5, 1e-15));
    double lo = 1.0;
    for (long long m = 0; m <= 24; ++m) lo = std::min(lo, postselect_prob(m, 24));
    CHECK(lo >= 0.5 - 1e-15);
}

TEST_CASE("alpha0 endpoints") {
    CHECK(alpha0(0, 120) == 0.0);
    CHECK_THAT(alpha0(120, 120), WithinAbs(std::numbers::pi, 1e-12));
    CHECK_THAT(alpha0(60, 120), WithinAbs(std::numbers::pi / 2.0, 1e-12));
}

TEST_CASE("evolution_time values") {
    CHECK_THAT(evolution_time(120, 120, 1.0), WithinAbs(0.0, 1e-12));
    CHECK_THAT(evolution_time(60, 120, 1.0), WithinAbs(2.0 * std::log(1.0 + std::sqrt(2.0)), 1e-12));
    CHECK_THROWS_AS(evolution_time(0, 120, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(evolution_time(60, 120, 0.0), std::invalid_argument);
}

TEST_CASE("evolution_time equals 2/g atanh(cos(alpha0/2))") {
    for (long long s = 1; s <= 120; ++s) {
        double via_cot = evolution_time(s, 120, 1.0);
        double via_atanh = 2.0 * std::atanh(candidate_inner(s, 120));
        CHECK_THAT(via_cot, WithinAbs(via_atanh, 1e-10));
    }
}

TEST_CASE("evolution_time is bounded by the log expansion and decreasing in s") {
    for (int n = 2; n <= 6; ++n) {
        long long nfact = factorial(n);
        double prev = std::numeric_limits<double>::infinity();
        for (long long s = 1; s <= nfact; ++s) {
            double T = evolution_time(s, nfact, 1.0);
            CHECK(T <= 2.0 * std::log(2.0 * static_cast<double>(nfact) / s) + 1e-12);
            CHECK(T < prev);
            prev = T;
        }
    }
}

TEST_CASE("closed_form_alpha boundary values") {
    double a0 = alpha0(30, 120);
    CHECK_THAT(closed_form_alpha(0.0, a0, 1.0), WithinAbs(std::cos(a0 / 2.0), 1e-15));
    double T = evolution_time(30, 120, 1.0);
    CHECK_THAT(closed_form_alpha(T, a0, 1.0), WithinAbs(0.0, 1e-12));
}

TEST_CASE("closed_form_alpha at the quarter-angle spot check") {
    double v = closed_form_alpha(1.0, std::numbers::pi / 2.0, 1.0);
    double c0 = std::cos(std::numbers::pi / 4.0);
    double want = (c0 * std::cosh(0.5) - std::sinh(0.5)) / (std::cosh(0.5) - c0 * std::sinh(0.5));
    CHECK_THAT(v, WithinAbs(want, 1e-15));
    CHECK(v > 0.0);
    CHECK(v < c0);
}

TEST_CASE("closed_form_alpha is strictly decreasing on [0, T]") {
    for (double frac : {0.05, 0.3, 0.7, 0.95}) {
        double a0 = alpha0_frac(frac);
        double T = evolution_time_frac(frac, 1.0);
        double prev = 2.0;
        for (int i = 0; i <= 50; ++i) {
            double v = closed_form_alpha(T * i / 50.0, a0, 1.0);
            CHECK(v < prev);
            prev = v;
        }
    }
}

TEST_CASE("closed_form_mu matches the evolved-to-T identity") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        double a0 = 0.05 + rng.uniform() * 3.0;
        double mu0 = rng.uniform() * a0;
        double T = 2.0 * std::atanh(std::cos(a0 / 2.0));
        double got = closed_form_mu(T, mu0, 1.0);
        double ca = std::cos(a0 / 2.0), cm = std::cos(mu0 / 2.0);
        double want = (cm - ca) / (1.0 - cm * ca);
        CHECK_THAT(got, WithinAbs(want, 1e-12));
    }
}

TEST_CASE("closed_form_mu degenerate cases") {
    double a0 = 1.3;
    for (double t : {0.0, 0.5, 1.5})
        CHECK_THAT(closed_form_mu(t, a0, 1.0), WithinAbs(closed_form_alpha(t, a0, 1.0), 1e-15));
    // coincident pair stays coincident
    for (double t : {0.0, 0.5, 2.0}) CHECK_THAT(closed_form_mu(t, 0.0, 1.0), WithinAbs(1.0, 1e-15));
}

TEST_CASE("orient_arc places the endpoints at the subtended angle") {
    long long nfact = 120;
    for (long long s : {1LL, 7LL, 60LL, 120LL}) {
        double a0 = alpha0(s, nfact);
        BlochPoint e0 = orient_arc({1.0, 0.0}, s, nfact);
        BlochPoint e1 = orient_arc(candidate_state(s, nfact), s, nfact);
        CHECK_THAT(e0.norm(), WithinAbs(1.0, 1e-12));
        CHECK_THAT(e1.norm(), WithinAbs(1.0, 1e-12));
        CHECK_THAT(dot(e0, e1), WithinAbs(std::cos(a0), 1e-12));
        // midpoint candidate sits on the equatorial anchor
        CandidateQubit mid{std::cos(a0 / 4.0), std::sin(a0 / 4.0)};
        BlochPoint pm = orient_arc(mid, s, nfact);
        CHECK_THAT(pm.x, WithinAbs(1.0, 1e-12));
        CHECK_THAT(pm.y, WithinAbs(0.0, 1e-12));
        CHECK_THAT(pm.z, WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("orient_arc composed with its inverse is the identity") {
    long long nfact = 720;
    for (long long m : {0LL, 13LL, 100LL, 360LL}) {
        CandidateQubit q = candidate_state(m, nfact);
        CandidateQubit back = orient_arc_inverse(orient_arc(q, 360, nfact), 360, nfact);
        CHECK_THAT(back.a0, WithinAbs(q.a0, 1e-12));
        CHECK_THAT(back.a1, WithinAbs(q.a1, 1e-12));
    }
}

TEST_CASE("endpoint evolution reproduces the closed form at small n") {
    EvolutionParams params;
    for (int n : {2, 3, 4}) {
        long long nfact = factorial(n);
        for (long long s = 1; s <= nfact; ++s) {
            double a0 = alpha0(s, nfact);
            double T = evolution_time(s, nfact, params.g);
            BlochPoint e0 = orient_arc({1.0, 0.0}, s, nfact, params);
            BlochPoint e1 = orient_arc(candidate_state(s, nfact), s, nfact, params);
            std::vector<TrajectorySample> traj;
            evolve_bundle({e0, e1}, T, a0, params, AlphaSource::closed_form, &traj);
            for (const auto& smp : traj) {
                double want = closed_form_alpha(smp.t, a0, params.g);
                CHECK(std::abs(hilbert_inner(smp.points[0], smp.points[1]) - want) < 1e-6);
            }
        }
    }
}

TEST_CASE("endpoint evolution reproduces the closed form") {
    EvolutionParams params;
    for (long long s : {1LL, 3LL, 24LL, 60LL, 110LL, 120LL}) {
        long long nfact = 120;
        double a0 = alpha0(s, nfact);
        double T = evolution_time(s, nfact, params.g);
        BlochPoint e0 = orient_arc({1.0, 0.0}, s, nfact, params);
        BlochPoint e1 = orient_arc(candidate_state(s, nfact), s, nfact, params);
        std::vector<TrajectorySample> traj;
        auto fin = evolve_bundle({e0, e1}, T, a0, params, AlphaSource::closed_form, &traj);
        double maxerr = 0.0;
        for (const auto& smp : traj) {
            double want = closed_form_alpha(smp.t, a0, params.g);
            maxerr = std::max(maxerr,
                              std::abs(hilbert_inner(smp.points[0], smp.points[1]) - want));
        }
        CHECK(maxerr < 1e-6);
        CHECK(hilbert_inner(fin[0], fin[1]) < 1e-6);  // orthogonal at T
        for (const auto& p : fin) CHECK(std::abs(p.norm() - 1.0) < 1e-9);
    }
}

TEST_CASE("sphere norm is preserved along whole trajectories") {
    EvolutionParams params;
    long long nfact = 120, s = 90;
    double a0 = alpha0(s, nfact);
    double T = evolution_time(s, nfact, params.g);
    BlochPoint p = orient_arc(candidate_state(20, nfact), s, nfact, params);
    std::vector<TrajectorySample> traj;
    evolve_nonlinear(p, T, a0, params, &traj);
    for (const auto& smp : traj) CHECK(std::abs(smp.points[0].norm() - 1.0) < 1e-9);
}

TEST_CASE("step-halving convergence") {
    EvolutionParams params;
    long long nfact = 120, s = 40;
    double a0 = alpha0(s, nfact);
    double T = evolution_time(s, nfact, params.g);
    BlochPoint p = orient_arc(candidate_state(11, nfact), s, nfact, params);
    BlochPoint coarse = evolve_nonlinear(p, T, a0, params);
    EvolutionParams fine = params;
    fine.dt = std::min(0.01 / params.g, T / 2000.0) / 2.0;
    BlochPoint refined = evolve_nonlinear(p, T, a0, fine);
    double shift = std::sqrt((coarse.x - refined.x) * (coarse.x - refined.x) +
                             (coarse.y - refined.y) * (coarse.y - refined.y) +
                             (coarse.z - refined.z) * (coarse.z - refined.z));
    CHECK(shift < 1e-8);
}

TEST_CASE("integrated-alpha mode is self-consistent with the closed form") {
    EvolutionParams params;
    long long nfact = 120, s = 60;
    double a0 = alpha0(s, nfact);
    double T = evolution_time(s, nfact, params.g);
    BlochPoint e0 = orient_arc({1.0, 0.0}, s, nfact, params);
    BlochPoint e1 = orient_arc(candidate_state(s, nfact), s, nfact, params);
    BlochPoint p = orient_arc(candidate_state(17, nfact), s, nfact, params);
    auto closed = evolve_bundle({e0, e1, p}, T, a0, params, AlphaSource::closed_form);
    auto integrated = evolve_bundle({e0, e1, p}, T, a0, params, AlphaSource::integrated);
    for (int i = 0; i < 3; ++i) {
        CHECK_THAT(closed[i].x, WithinAbs(integrated[i].x, 1e-6));
        CHECK_THAT(closed[i].y, WithinAbs(integrated[i].y, 1e-6));
        CHECK_THAT(closed[i].z, WithinAbs(integrated[i].z, 1e-6));
    }
}

TEST_CASE("evolution with T = 0 returns the input") {
    EvolutionParams params;
    BlochPoint p = orient_arc(candidate_state(120, 120), 120, 120, params);
    BlochPoint q = evolve_nonlinear(p, 0.0, std::numbers::pi, params);
    CHECK(q.x == p.x);
    CHECK(q.y == p.y);
    CHECK(q.z == p.z);
}

TEST_CASE("evolve rejects bad inputs") {
    EvolutionParams params;
    CHECK_THROWS_AS(evolve_nonlinear({2.0, 0.0, 0.0}, 1.0, 1.0, params), std::invalid_argument);
    EvolutionParams bad = params;
    bad.dt = 0.5;  // violates dt <= 0.01/g
    CHECK_THROWS_AS(evolve_nonlinear({0.0, 0.0, 1.0}, 1.0, 1.0, bad), std::invalid_argument);
}

TEST_CASE("final_orient maps the endpoints and midpoints") {
    BlochPoint e0{0.0, -1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0)};
    BlochPoint e1{0.0, 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    CandidateQubit q0 = final_orient(e0, e0, e1);
    CHECK_THAT(q0.a0, WithinAbs(1.0, 1e-12));
    CandidateQubit q1 = final_orient(e1, e0, e1);
    CHECK_THAT(q1.a1, WithinAbs(1.0, 1e-12));
    BlochPoint mid{1.0, 0.0, 0.0};  // on the great circle halfway between them
    CandidateQubit qm = final_orient(mid, e0, e1);
    CHECK_THAT(qm.p_one(), WithinAbs(0.5, 1e-12));
    CHECK_THROWS_AS(final_orient(mid, e0, e0), std::invalid_argument);
}

TEST_CASE("measure is Bernoulli in the excited population") {
    Rng rng(19);
    CandidateQubit zero{1.0, 0.0}, one{0.0, 1.0};
    for (int i = 0; i < 200; ++i) {
        CHECK(measure(zero, rng) == 0);
        CHECK(measure(one, rng) == 1);
    }
    CandidateQubit half{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    long long ones = 0;
    const int samples = 100000;
    for (int i = 0; i < samples; ++i) ones += measure(half, rng);
    double freq = static_cast<double>(ones) / samples;
    CHECK(freq > 0.49);
    CHECK(freq < 0.51);
    CHECK_THROWS_AS(measure({1.0, 1.0}, rng), std::invalid_argument);
}

TEST_CASE("orientation calibration picks the tilt that matches the closed form") {
    CalibrationReport report = calibrate_orientation();
    CHECK_THAT(report.chosen.phi, WithinAbs(std::numbers::pi / 2.0, 1e-12));
    CHECK_THAT(report.chosen.gamma, WithinAbs(std::numbers::pi / 4.0, 1e-12));
    CHECK(report.chosen.correction_sign == 1);
    CHECK(report.chosen.residual < 1e-9);
    int good = 0;
    for (const auto& c : report.candidates) {
        if (c.residual < 1e-9)
            ++good;
        else
            CHECK(c.residual > 1e-3);  // the wrong conventions fail decisively
    }
    CHECK(good == 2);  // gamma and gamma - pi describe the same circle
    CHECK(calibration_report_json(report).find("\"chosen\"") != std::string::npos);
}

TEST_CASE("trajectory csv has the documented header") {
    EvolutionParams params;
    std::string csv = endpoint_trajectory_csv(60, 120, params);
    CHECK(csv.rfind("t,x,y,z,inner\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') > 100);
}
