#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "meosim/rng.hpp"

namespace meosim {

// Single-qubit candidate state; amplitudes are real and nonnegative.
struct CandidateQubit {
    double a0 = 1.0;
    double a1 = 0.0;

    double p_one() const { return a1 * a1; }
};

struct BlochPoint {
    double x = 0.0, y = 0.0, z = 1.0;

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline double dot(const BlochPoint& a, const BlochPoint& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

// cos of the Hilbert-space half-angle between two pure states given their
// Bloch vectors (normalized defensively; integration leaves ~1e-12 drift).
inline double hilbert_inner(const BlochPoint& a, const BlochPoint& b) {
    double c = dot(a, b) / (a.norm() * b.norm());
    c = std::clamp(c, -1.0, 1.0);
    return std::sqrt((1.0 + c) / 2.0);
}

// Fractional forms (y = m/n!), shared with the analysis sweeps where the
// candidate number is treated as continuous.
inline double candidate_inner_frac(double y) {
    return (1.0 - y) / std::sqrt(1.0 - 2.0 * y + 2.0 * y * y);
}

inline double postselect_prob_frac(double y) { return 1.0 - 2.0 * y + 2.0 * y * y; }

inline void require_candidate_range(long long m, long long nfact, const char* what) {
    if (nfact < 1 || m < 0 || m > nfact)
        throw std::invalid_argument(std::string(what) + ": require 0 <= m <= n!");
}

inline CandidateQubit candidate_state(long long m, long long nfact) {
    require_candidate_range(m, nfact, "candidate_state");
    double u = static_cast<double>(nfact - m);
    double v = static_cast<double>(m);
    double norm = std::sqrt(u * u + v * v);
    return {u / norm, v / norm};
}

// (n!-m)/sqrt((n!)^2 - 2 n! m + 2 m^2), the overlap of the m-th candidate
// with |0>.
inline double candidate_inner(long long m, long long nfact) {
    require_candidate_range(m, nfact, "candidate_inner");
    return candidate_inner_frac(static_cast<double>(m) / static_cast<double>(nfact));
}

inline double postselect_prob(long long m, long long nfact) {
    require_candidate_range(m, nfact, "postselect_prob");
    return postselect_prob_frac(static_cast<double>(m) / static_cast<double>(nfact));
}

// Bloch angle subtended by the 0th and s-th candidate states.
inline double alpha0(long long s, long long nfact) {
    require_candidate_range(s, nfact, "alpha0");
    return 2.0 * std::acos(std::clamp(candidate_inner(s, nfact), -1.0, 1.0));
}

inline double alpha0_frac(double y) {
    return 2.0 * std::acos(std::clamp(candidate_inner_frac(y), -1.0, 1.0));
}

// T(s/n!) = (2/g) ln cot(alpha0/4): the time at which the 0th and s-th
// candidates become orthogonal.
inline double evolution_time_frac(double y, double g) {
    if (g <= 0.0) throw std::invalid_argument("evolution_time: g must be > 0");
    if (y <= 0.0) throw std::invalid_argument("evolution_time: s = 0 has no finite horizon");
    double quarter = alpha0_frac(y) / 4.0;
    return (2.0 / g) * std::log(1.0 / std::tan(quarter));
}

inline double evolution_time(long long s, long long nfact, double g) {
    require_candidate_range(s, nfact, "evolution_time");
    if (s == 0) throw std::invalid_argument("evolution_time: s = 0 has no finite horizon");
    return evolution_time_frac(static_cast<double>(s) / static_cast<double>(nfact), g);
}

// cos(alpha(t)/2) of the endpoint pair under the corrected nonlinear flow.
inline double closed_form_alpha(double t, double alpha0_angle, double g) {
    double c0 = std::cos(alpha0_angle / 2.0);
    double ch = std::cosh(g * t / 2.0);
    double sh = std::sinh(g * t / 2.0);
    double denom = ch - c0 * sh;
    if (denom <= 0.0)
        throw std::domain_error("closed_form_alpha: t beyond the orthogonality horizon");
    return (c0 * ch - sh) / denom;
}

// Same functional form for the symmetric sub-arc pair with initial angle mu0.
inline double closed_form_mu(double t, double mu0_angle, double g) {
    return closed_form_alpha(t, mu0_angle, g);
}

struct EvolutionParams {
    double g = 1.0;
    double dt = 0.0;                        // 0 selects min(0.01/g, T/2000)
    double phi = std::numbers::pi / 2.0;    // polar angle of the sub-arc midpoint
    double gamma = std::numbers::pi / 4.0;  // tilt of the sub-arc from the line of latitude
    int correction_sign = +1;               // sign of the sigma_x precession
};

namespace detail {

inline BlochPoint arc_anchor(const EvolutionParams& p) {
    return {std::sin(p.phi), 0.0, std::cos(p.phi)};
}

inline BlochPoint arc_tangent(const EvolutionParams& p) {
    // latitude direction at the anchor, tilted by gamma toward the meridian
    return {-std::sin(p.gamma) * std::cos(p.phi), std::cos(p.gamma),
            std::sin(p.gamma) * std::sin(p.phi)};
}

inline BlochPoint on_arc(double u, const EvolutionParams& p) {
    BlochPoint m = arc_anchor(p), t = arc_tangent(p);
    double cu = std::cos(u), su = std::sin(u);
    return {cu * m.x + su * t.x, cu * m.y + su * t.y, cu * m.z + su * t.z};
}

}  // namespace detail

// Rigid rotation placing the m-th candidate on the oriented sub-arc: the
// candidate great circle (real amplitudes, x >= 0) maps so that the midpoint
// of the 0th..s-th sub-arc lands on the calibrated equatorial anchor.
inline BlochPoint orient_arc(const CandidateQubit& q, long long s, long long nfact,
                             const EvolutionParams& params = {}) {
    double a0 = alpha0(s, nfact);
    double beta = 2.0 * std::atan2(q.a1, q.a0);
    return detail::on_arc(beta - a0 / 2.0, params);
}

inline CandidateQubit orient_arc_inverse(const BlochPoint& p, long long s, long long nfact,
                                         const EvolutionParams& params = {}) {
    double a0 = alpha0(s, nfact);
    double u = std::atan2(dot(p, detail::arc_tangent(params)), dot(p, detail::arc_anchor(params)));
    double beta = u + a0 / 2.0;
    return {std::cos(beta / 2.0), std::sin(beta / 2.0)};
}

enum class AlphaSource {
    closed_form,  // correction angle from closed_form_alpha (primary mode)
    integrated,   // correction angle from the integrated endpoints (self-consistency mode)
};

struct TrajectorySample {
    double t;
    std::vector<BlochPoint> points;
};

namespace detail {

inline void bundle_derivative(const std::vector<BlochPoint>& pts, double c_alpha_half, double g,
                              int correction_sign, std::vector<BlochPoint>& out) {
    double w = correction_sign * (g / 2.0) * c_alpha_half;
    out.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const BlochPoint& r = pts[i];
        // g z (-y, x, 0) plus precession w about the x axis
        out[i] = {-g * r.z * r.y, g * r.z * r.x - w * r.z, w * r.y};
    }
}

}  // namespace detail

// Fixed-step RK4 for a set of points sharing one correction field. The first
// two bundle entries must be the endpoint pair when the integrated alpha
// source is selected.
inline std::vector<BlochPoint> evolve_bundle(std::vector<BlochPoint> pts, double T,
                                             double alpha0_angle, const EvolutionParams& params,
                                             AlphaSource source = AlphaSource::closed_form,
                                             std::vector<TrajectorySample>* trajectory = nullptr) {
    if (params.g <= 0.0) throw std::invalid_argument("evolve: g must be > 0");
    if (source == AlphaSource::integrated && pts.size() < 2)
        throw std::invalid_argument("evolve: integrated alpha needs the endpoint pair first");
    for (const auto& p : pts)
        if (std::abs(p.norm() - 1.0) > 1e-6)
            throw std::invalid_argument("evolve: input point off the sphere");
    if (trajectory) trajectory->push_back({0.0, pts});
    if (T <= 0.0) return pts;

    double dt = params.dt;
    if (dt == 0.0) dt = std::min(0.01 / params.g, T / 2000.0);
    if (dt > 0.01 / params.g * (1.0 + 1e-12))
        throw std::invalid_argument("evolve: step size violates dt <= 0.01/g");
    long long steps = static_cast<long long>(std::ceil(T / dt - 1e-9));
    dt = T / static_cast<double>(steps);

    auto alpha_half = [&](const std::vector<BlochPoint>& state, double t) {
        if (source == AlphaSource::integrated) return hilbert_inner(state[0], state[1]);
        return closed_form_alpha(t, alpha0_angle, params.g);
    };

    std::vector<BlochPoint> k1, k2, k3, k4, tmp;
    for (long long step = 0; step < steps; ++step) {
        double t = static_cast<double>(step) * dt;
        detail::bundle_derivative(pts, alpha_half(pts, t), params.g, params.correction_sign, k1);
        tmp = pts;
        for (std::size_t i = 0; i < pts.size(); ++i)
            tmp[i] = {pts[i].x + 0.5 * dt * k1[i].x, pts[i].y + 0.5 * dt * k1[i].y,
                      pts[i].z + 0.5 * dt * k1[i].z};
        detail::bundle_derivative(tmp, alpha_half(tmp, t + 0.5 * dt), params.g,
                                  params.correction_sign, k2);
        for (std::size_t i = 0; i < pts.size(); ++i)
            tmp[i] = {pts[i].x + 0.5 * dt * k2[i].x, pts[i].y + 0.5 * dt * k2[i].y,
                      pts[i].z + 0.5 * dt * k2[i].z};
        detail::bundle_derivative(tmp, alpha_half(tmp, t + 0.5 * dt), params.g,
                                  params.correction_sign, k3);
        for (std::size_t i = 0; i < pts.size(); ++i)
            tmp[i] = {pts[i].x + dt * k3[i].x, pts[i].y + dt * k3[i].y, pts[i].z + dt * k3[i].z};
        detail::bundle_derivative(tmp, alpha_half(tmp, t + dt), params.g, params.correction_sign,
                                  k4);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            pts[i].x += dt / 6.0 * (k1[i].x + 2.0 * k2[i].x + 2.0 * k3[i].x + k4[i].x);
            pts[i].y += dt / 6.0 * (k1[i].y + 2.0 * k2[i].y + 2.0 * k3[i].y + k4[i].y);
            pts[i].z += dt / 6.0 * (k1[i].z + 2.0 * k2[i].z + 2.0 * k3[i].z + k4[i].z);
        }
        if (trajectory) trajectory->push_back({static_cast<double>(step + 1) * dt, pts});
    }
    for (const auto& p : pts)
        if (std::abs(p.norm() - 1.0) > 1e-6)
            throw std::runtime_error("evolve: norm drift exceeded 1e-6");
    return pts;
}

inline BlochPoint evolve_nonlinear(const BlochPoint& p, double T, double alpha0_angle,
                                   const EvolutionParams& params,
                                   std::vector<TrajectorySample>* trajectory = nullptr) {
    return evolve_bundle({p}, T, alpha0_angle, params, AlphaSource::closed_form, trajectory)[0];
}

// Rotation sending endpoint0 to |0> and endpoint1 to |1>; only the polar
// coordinate of the rotated point survives into measurement statistics.
inline CandidateQubit final_orient(const BlochPoint& p, const BlochPoint& endpoint0,
                                   const BlochPoint& endpoint1) {
    BlochPoint sum{endpoint0.x + endpoint1.x, endpoint0.y + endpoint1.y,
                   endpoint0.z + endpoint1.z};
    if (sum.norm() > 1e-5)
        throw std::invalid_argument("final_orient: endpoints are not antipodal");
    double zp = std::clamp(dot(p, endpoint0) / (p.norm() * endpoint0.norm()), -1.0, 1.0);
    double p1 = (1.0 - zp) / 2.0;
    return {std::sqrt(1.0 - p1), std::sqrt(p1)};
}

inline int measure(const CandidateQubit& q, Rng& rng) {
    if (std::abs(q.a0 * q.a0 + q.a1 * q.a1 - 1.0) > 1e-9)
        throw std::invalid_argument("measure: qubit not normalized");
    return rng.bernoulli(q.p_one()) ? 1 : 0;
}

// ---- orientation calibration ----
//
// Two tilt conventions (pi/4 and 3*pi/4, with either precession sign) are
// plausible a priori. The sweep below integrates the endpoint pair under
// every convention and keeps the one whose endpoint inner product tracks
// closed_form_alpha; that combination is the module default.

struct CalibrationCandidate {
    double phi;
    double gamma;
    int correction_sign;
    double residual;
};

struct CalibrationReport {
    std::vector<CalibrationCandidate> candidates;
    CalibrationCandidate chosen;
};

inline CalibrationReport calibrate_orientation(double g = 1.0) {
    const double pi = std::numbers::pi;
    CalibrationReport report;
    for (double gamma : {pi / 4.0, 3.0 * pi / 4.0, -pi / 4.0, -3.0 * pi / 4.0}) {
        for (int sign : {+1, -1}) {
            EvolutionParams params;
            params.g = g;
            params.gamma = gamma;
            params.correction_sign = sign;
            double residual = 0.0;
            for (double y : {0.1, 0.5, 0.9}) {
                double a0 = alpha0_frac(y);
                double T = evolution_time_frac(y, g);
                BlochPoint e0 = detail::on_arc(-a0 / 2.0, params);
                BlochPoint e1 = detail::on_arc(+a0 / 2.0, params);
                std::vector<TrajectorySample> traj;
                evolve_bundle({e0, e1}, T, a0, params, AlphaSource::closed_form, &traj);
                for (const auto& sample : traj) {
                    double want = closed_form_alpha(sample.t, a0, g);
                    double got = hilbert_inner(sample.points[0], sample.points[1]);
                    residual = std::max(residual, std::abs(got - want));
                }
            }
            report.candidates.push_back({params.phi, gamma, sign, residual});
        }
    }
    // gamma and gamma - pi describe the same great circle with the endpoints
    // relabeled, so matches come in pairs; keep the first one listed.
    const CalibrationCandidate* chosen = nullptr;
    for (const auto& c : report.candidates)
        if (c.residual < 1e-9 && !chosen) chosen = &c;
    if (!chosen)
        chosen = &*std::min_element(report.candidates.begin(), report.candidates.end(),
                                    [](const CalibrationCandidate& a, const CalibrationCandidate& b) {
                                        return a.residual < b.residual;
                                    });
    report.chosen = *chosen;
    return report;
}

inline std::string calibration_report_json(const CalibrationReport& report) {
    nlohmann::json j;
    j["chosen"] = {{"phi", report.chosen.phi},
                   {"gamma", report.chosen.gamma},
                   {"correction_sign", report.chosen.correction_sign},
                   {"residual", report.chosen.residual}};
    j["candidates"] = nlohmann::json::array();
    for (const auto& c : report.candidates)
        j["candidates"].push_back({{"phi", c.phi},
                                   {"gamma", c.gamma},
                                   {"correction_sign", c.correction_sign},
                                   {"residual", c.residual}});
    return j.dump(2);
}

// CSV dump of the endpoint-pair trajectory, "t,x,y,z,inner" with the
// coordinates of the 0th endpoint.
inline std::string endpoint_trajectory_csv(long long s, long long nfact,
                                           const EvolutionParams& params) {
    double a0 = alpha0(s, nfact);
    double T = evolution_time(s, nfact, params.g);
    BlochPoint e0 = detail::on_arc(-a0 / 2.0, params);
    BlochPoint e1 = detail::on_arc(+a0 / 2.0, params);
    std::vector<TrajectorySample> traj;
    evolve_bundle({e0, e1}, T, a0, params, AlphaSource::closed_form, &traj);
    std::string csv = "t,x,y,z,inner\n";
    char line[160];
    for (const auto& sample : traj) {
        double inner = hilbert_inner(sample.points[0], sample.points[1]);
        std::snprintf(line, sizeof(line), "%.9f,%.12f,%.12f,%.12f,%.12f\n", sample.t,
                      sample.points[0].x, sample.points[0].y, sample.points[0].z, inner);
        csv += line;
    }
    return csv;
}

}  // namespace meosim
