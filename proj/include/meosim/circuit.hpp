#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "meosim/bloch.hpp"
#include "meosim/graph.hpp"
#include "meosim/radix.hpp"

namespace meosim {

using Complex = std::complex<double>;

inline constexpr double kAmpTol = 1e-10;

// ---- generalized state preparation G_k ----

struct DenseUnitary {
    int dim = 0;
    std::vector<Complex> a;  // row-major

    Complex& at(int r, int c) { return a[static_cast<std::size_t>(r) * dim + c]; }
    const Complex& at(int r, int c) const { return a[static_cast<std::size_t>(r) * dim + c]; }

    static DenseUnitary zero(int dim) {
        DenseUnitary u;
        u.dim = dim;
        u.a.assign(static_cast<std::size_t>(dim) * dim, Complex{});
        return u;
    }

    DenseUnitary operator*(const DenseUnitary& o) const {
        DenseUnitary r = zero(dim);
        for (int i = 0; i < dim; ++i)
            for (int k = 0; k < dim; ++k) {
                Complex v = at(i, k);
                if (v == Complex{}) continue;
                for (int j = 0; j < dim; ++j) r.at(i, j) += v * o.at(k, j);
            }
        return r;
    }

    std::vector<Complex> column(int c) const {
        std::vector<Complex> v(dim);
        for (int r = 0; r < dim; ++r) v[r] = at(r, c);
        return v;
    }
};

inline DenseUnitary hadamard_power(int qubits) {
    int dim = 1 << qubits;
    DenseUnitary h = DenseUnitary::zero(dim);
    double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c)
            h.at(r, c) = (std::popcount(static_cast<unsigned>(r & c)) % 2 ? -scale : scale);
    return h;
}

namespace detail {

inline DenseUnitary gk_from_phases(int k, int dim, double phi, double vphi) {
    int q = std::countr_zero(static_cast<unsigned>(dim));
    DenseUnitary h = hadamard_power(q);
    DenseUnitary s0 = DenseUnitary::zero(dim);
    DenseUnitary sx = DenseUnitary::zero(dim);
    for (int j = 0; j < dim; ++j) {
        s0.at(j, j) = (j == 0) ? std::polar(1.0, phi) : Complex{1.0, 0.0};
        sx.at(j, j) = (j < k) ? std::polar(1.0, vphi) : Complex{1.0, 0.0};
    }
    DenseUnitary u = h * s0 * h * sx * h;
    for (auto& v : u.a) v = -v;
    return u;
}

// 1 - |<target|U|0>|^2; zero exactly when U|0> is the uniform first-k state
// up to a global phase.
inline double gk_residual(int k, int dim, double phi, double vphi) {
    DenseUnitary u = gk_from_phases(k, dim, phi, vphi);
    Complex overlap{};
    double w = 1.0 / std::sqrt(static_cast<double>(k));
    for (int r = 0; r < k; ++r) overlap += w * u.at(r, 0);
    return 1.0 - std::norm(overlap);
}

// Overlap of U|0> with the uniform bad-sector state; the phase pair is a
// root of this complex-valued function.
inline Complex gk_bad_overlap(int k, int dim, double phi, double vphi) {
    DenseUnitary u = gk_from_phases(k, dim, phi, vphi);
    Complex b{};
    double w = 1.0 / std::sqrt(static_cast<double>(dim - k));
    for (int r = k; r < dim; ++r) b += w * u.at(r, 0);
    return b;
}

}  // namespace detail

// Solves the generalized amplitude-amplification phases (phi, varphi)
// numerically so that
// G_k = -H S_0(phi) H S_chi(varphi) H maps |0> to the uniform superposition
// of the first k levels. The raw product leaves an unobservable global
// phase; the returned matrix is normalized so the output amplitudes are the
// real value 1/sqrt(k) exactly.
inline DenseUnitary solve_gk(int k, int dim = 0) {
    if (k < 2) throw std::invalid_argument("solve_gk: k must be >= 2");
    if (dim == 0) dim = 1 << static_cast<int>(std::ceil(std::log2(static_cast<double>(k))));
    if (std::popcount(static_cast<unsigned>(dim)) != 1)
        throw std::invalid_argument("solve_gk: dim must be a power of 2");
    if (k > dim || dim > 2 * k)
        throw std::invalid_argument("solve_gk: require k <= dim <= 2k");
    if (k == dim) return hadamard_power(std::countr_zero(static_cast<unsigned>(dim)));

    static std::map<std::pair<int, int>, DenseUnitary> cache;
    static std::mutex cache_mutex;
    {
        std::lock_guard<std::mutex> lock(cache_mutex);
        auto it = cache.find({k, dim});
        if (it != cache.end()) return it->second;
    }

    const double two_pi = 2.0 * std::numbers::pi;
    double best_phi = 0.0, best_vphi = 0.0, best = 2.0;
    const int grid = 64;
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            double phi = two_pi * i / grid, vphi = two_pi * j / grid;
            double r = detail::gk_residual(k, dim, phi, vphi);
            if (r < best) {
                best = r;
                best_phi = phi;
                best_vphi = vphi;
            }
        }
    // Newton polish on the complex bad-sector overlap; the quadratic grid
    // objective alone cannot push the stray amplitude below ~1e-8.
    for (int iter = 0; iter < 64; ++iter) {
        Complex f = detail::gk_bad_overlap(k, dim, best_phi, best_vphi);
        if (std::abs(f) < 1e-14) break;
        const double h = 1e-7;
        Complex fp = (detail::gk_bad_overlap(k, dim, best_phi + h, best_vphi) - f) / h;
        Complex fv = (detail::gk_bad_overlap(k, dim, best_phi, best_vphi + h) - f) / h;
        double det = fp.real() * fv.imag() - fv.real() * fp.imag();
        if (std::abs(det) < 1e-18) break;
        best_phi += (-f.real() * fv.imag() + f.imag() * fv.real()) / det;
        best_vphi += (-fp.real() * f.imag() + fp.imag() * f.real()) / det;
    }

    DenseUnitary u = detail::gk_from_phases(k, dim, best_phi, best_vphi);
    Complex overlap{};
    double w = 1.0 / std::sqrt(static_cast<double>(k));
    for (int r = 0; r < k; ++r) overlap += w * u.at(r, 0);
    Complex phase = std::polar(1.0, -std::arg(overlap));
    for (auto& v : u.a) v *= phase;

    double residual = 0.0;
    for (int r = 0; r < dim; ++r) {
        Complex want = (r < k) ? Complex{w, 0.0} : Complex{};
        residual += std::norm(u.at(r, 0) - want);
    }
    residual = std::sqrt(residual);
    if (residual > kAmpTol)
        throw std::runtime_error("solve_gk: phase solve did not converge, residual = " +
                                 std::to_string(residual));

    std::lock_guard<std::mutex> lock(cache_mutex);
    cache.emplace(std::pair{k, dim}, u);
    return u;
}

// ---- register layout and state ----

enum class Backend { dense, structured };

inline constexpr int kDenseGuard = 4;
inline constexpr int kStructuredGuard = 8;

// Register layout: radix subsystems (digit i embedded in a
// 2^ceil(log2 i)-level system), n list subsystems of n levels, the
// edge-overlap accumulator of min(|G1|,|G2|)+1 levels, and the marking
// ancilla. Registers are qudits; gate decomposition is out of scope.
struct RegisterLayout {
    int n = 0;
    std::vector<int> reg1_dims;  // embedded dimension per radix subsystem
    int reg3_dim = 1;

    static RegisterLayout make(int n, const Graph& g1, const Graph& g2) {
        RegisterLayout l;
        l.n = n;
        l.reg1_dims.resize(n);
        for (int i = 1; i <= n; ++i)
            l.reg1_dims[i - 1] = 1 << static_cast<int>(std::ceil(std::log2(static_cast<double>(i))));
        l.reg3_dim = std::min(g1.edge_count, g2.edge_count) + 1;
        return l;
    }

    long long reg1_dim() const {
        long long d = 1;
        for (int v : reg1_dims) d *= v;
        return d;
    }

    long long reg2_dim() const {
        long long d = 1;
        for (int i = 0; i < n; ++i) d *= n;
        return d;
    }

    long long total_dense_dim() const { return reg1_dim() * reg2_dim() * reg3_dim * 2; }
};

// One support branch of the structured backend: the label fields plus the
// amplitude. perm values are 0-indexed.
struct StructuredBranch {
    RadixCode code;
    std::vector<int> perm;
    int eo = 0;
    int anc = 0;
    Complex amp;
};

struct RegisterState {
    Backend backend = Backend::structured;
    RegisterLayout layout;
    std::vector<Complex> dense;              // used when backend == dense
    std::vector<StructuredBranch> branches;  // used when backend == structured

    double norm_sq() const {
        double s = 0.0;
        if (backend == Backend::dense)
            for (const Complex& a : dense) s += std::norm(a);
        else
            for (const StructuredBranch& b : branches) s += std::norm(b.amp);
        return s;
    }
};

namespace detail {

struct DenseIndex {
    std::vector<int> code;
    std::vector<int> perm;
    int eo;
    int anc;
};

inline long long dense_pack(const RegisterLayout& l, const DenseIndex& ix) {
    long long idx = 0;
    for (int i = 0; i < l.n; ++i) idx = idx * l.reg1_dims[i] + ix.code[i];
    for (int i = 0; i < l.n; ++i) idx = idx * l.n + ix.perm[i];
    idx = idx * l.reg3_dim + ix.eo;
    return idx * 2 + ix.anc;
}

inline DenseIndex dense_unpack(const RegisterLayout& l, long long idx) {
    DenseIndex ix;
    ix.anc = static_cast<int>(idx % 2);
    idx /= 2;
    ix.eo = static_cast<int>(idx % l.reg3_dim);
    idx /= l.reg3_dim;
    ix.perm.resize(l.n);
    for (int i = l.n - 1; i >= 0; --i) {
        ix.perm[i] = static_cast<int>(idx % l.n);
        idx /= l.n;
    }
    ix.code.resize(l.n);
    for (int i = l.n - 1; i >= 0; --i) {
        ix.code[i] = static_cast<int>(idx % l.reg1_dims[i]);
        idx /= l.reg1_dims[i];
    }
    return ix;
}

inline void check_norm(const RegisterState& s, const char* gate) {
    if (std::abs(s.norm_sq() - 1.0) > kAmpTol)
        throw std::runtime_error(std::string(gate) + ": state norm drifted beyond 1e-10");
}

// Applies a classical reversible map on basis labels (a permutation matrix
// in the computational basis).
template <typename F>
RegisterState apply_basis_map(RegisterState state, F&& f, const char* gate) {
    if (state.backend == Backend::dense) {
        std::vector<Complex> out(state.dense.size(), Complex{});
        for (long long idx = 0; idx < static_cast<long long>(state.dense.size()); ++idx) {
            const Complex& a = state.dense[idx];
            if (a == Complex{}) continue;
            DenseIndex ix = dense_unpack(state.layout, idx);
            f(ix);
            out[dense_pack(state.layout, ix)] += a;
        }
        state.dense = std::move(out);
    } else {
        for (StructuredBranch& b : state.branches) {
            DenseIndex ix{b.code.digits, b.perm, b.eo, b.anc};
            f(ix);
            b.code.digits = std::move(ix.code);
            b.perm = std::move(ix.perm);
            b.eo = ix.eo;
            b.anc = ix.anc;
        }
    }
    check_norm(state, gate);
    return state;
}

// Edge overlap of an arbitrary reg-2 label tuple (0-indexed vertex labels);
// coincides with edge_overlap when the tuple is a permutation.
inline int overlap_of_labels(const Graph& g1, const Graph& g2, const std::vector<int>& labels) {
    int eo = 0;
    for (int u = 0; u < g2.n; ++u)
        for (int v = u + 1; v < g2.n; ++v)
            if (g2.has_edge(u, v) && g1.has_edge(labels[u], labels[v])) ++eo;
    return eo;
}

}  // namespace detail

inline RegisterState initial_state(const RegisterLayout& layout, Backend backend) {
    if (backend == Backend::dense && layout.n > kDenseGuard)
        throw std::invalid_argument("dense backend limited to n <= 4");
    if (backend == Backend::structured && layout.n > kStructuredGuard)
        throw std::invalid_argument("structured backend limited to n <= 8");
    RegisterState s;
    s.backend = backend;
    s.layout = layout;
    detail::DenseIndex ix;
    ix.code.assign(layout.n, 0);
    ix.perm.resize(layout.n);
    std::iota(ix.perm.begin(), ix.perm.end(), 0);
    ix.eo = 0;
    ix.anc = 0;
    if (backend == Backend::dense) {
        s.dense.assign(layout.total_dense_dim(), Complex{});
        s.dense[detail::dense_pack(layout, ix)] = 1.0;
    } else {
        StructuredBranch b;
        b.code.digits = ix.code;
        b.perm = ix.perm;
        b.amp = 1.0;
        s.branches.push_back(std::move(b));
    }
    return s;
}

// Builds a single-branch structured state for a chosen radix code, used by
// per-branch fixtures.
inline RegisterState basis_state(const RegisterLayout& layout, const RadixCode& code) {
    RegisterState s;
    s.backend = Backend::structured;
    s.layout = layout;
    StructuredBranch b;
    b.code = code;
    b.perm.resize(layout.n);
    std::iota(b.perm.begin(), b.perm.end(), 0);
    b.amp = 1.0;
    s.branches.push_back(std::move(b));
    return s;
}

// Step 1: the preparation G = G_1 x ... x G_n on register 1, taking the
// all-zero register to the uniform superposition over all n! radix codes.
inline RegisterState apply_G(RegisterState state) {
    const RegisterLayout& l = state.layout;
    if (state.backend == Backend::dense) {
        std::vector<std::vector<Complex>> columns(l.n);
        for (int i = 1; i <= l.n; ++i)
            columns[i - 1] = (i == 1) ? std::vector<Complex>{Complex{1.0, 0.0}}
                                      : solve_gk(i, l.reg1_dims[i - 1]).column(0);
        std::vector<Complex> out(state.dense.size(), Complex{});
        for (long long idx = 0; idx < static_cast<long long>(state.dense.size()); ++idx) {
            if (state.dense[idx] == Complex{}) continue;
            detail::DenseIndex ix = detail::dense_unpack(l, idx);
            for (int i = 0; i < l.n; ++i)
                if (ix.code[i] != 0)
                    throw std::invalid_argument("apply_G: register 1 must start in |0...0>");
            // distribute the branch across all codes with weight prod G_i[c_i][0]
            detail::DenseIndex tgt = ix;
            std::function<void(int, Complex)> expand = [&](int sub, Complex w) {
                if (sub == l.n) {
                    out[detail::dense_pack(l, tgt)] += w;
                    return;
                }
                for (int c = 0; c < l.reg1_dims[sub]; ++c) {
                    Complex wc = columns[sub][c];
                    if (wc == Complex{}) continue;
                    tgt.code[sub] = c;
                    expand(sub + 1, w * wc);
                }
                tgt.code[sub] = 0;
            };
            expand(0, state.dense[idx]);
        }
        state.dense = std::move(out);
    } else {
        std::vector<StructuredBranch> out;
        double w = 1.0 / std::sqrt(static_cast<double>(factorial(l.n)));
        for (const StructuredBranch& b : state.branches) {
            for (int d : b.code.digits)
                if (d != 0) throw std::invalid_argument("apply_G: register 1 must start in |0...0>");
            for_each_code(l.n, [&](const RadixCode& code) {
                StructuredBranch nb = b;
                nb.code = code;
                nb.amp = b.amp * w;
                out.push_back(std::move(nb));
            });
        }
        state.branches = std::move(out);
    }
    detail::check_norm(state, "apply_G");
    return state;
}

// Step 3: the controlled Hall cascade P_2...P_n; each branch's list register
// picks up the permutation encoded by its radix code.
inline RegisterState apply_hall_circuit(RegisterState state) {
    const int n = state.layout.n;
    return detail::apply_basis_map(
        std::move(state),
        [n](detail::DenseIndex& ix) {
            for (int i = 2; i <= n; ++i) hall_block_apply(ix.perm, i, ix.code[i - 1]);
        },
        "apply_hall_circuit");
}

// Adds EO(sigma) into the accumulator register (modular, so the map stays
// unitary on the full dense space).
inline RegisterState apply_eo_gate(RegisterState state, const Graph& g1, const Graph& g2) {
    require_same_size(g1, g2, "apply_eo_gate");
    if (g1.n != state.layout.n) throw std::invalid_argument("apply_eo_gate: layout size mismatch");
    int d3 = state.layout.reg3_dim;
    return detail::apply_basis_map(
        std::move(state),
        [&, d3](detail::DenseIndex& ix) {
            ix.eo = (ix.eo + detail::overlap_of_labels(g1, g2, ix.perm)) % d3;
        },
        "apply_eo_gate");
}

// The comparator (>E) gate: flips the ancilla on branches whose accumulator
// value exceeds the threshold.
inline RegisterState apply_comparator(RegisterState state, int E) {
    return detail::apply_basis_map(
        std::move(state), [E](detail::DenseIndex& ix) { ix.anc ^= (ix.eo > E) ? 1 : 0; },
        "apply_comparator");
}

// Reverses the EO gate and the Hall cascade, restoring registers 2 and 3 on
// every branch and leaving registers 1 and 4 in the marked-superposition
// form.
inline RegisterState uncompute(RegisterState state, const Graph& g1, const Graph& g2) {
    int d3 = state.layout.reg3_dim;
    const int n = state.layout.n;
    state = detail::apply_basis_map(
        std::move(state),
        [&, d3](detail::DenseIndex& ix) {
            ix.eo = (ix.eo - detail::overlap_of_labels(g1, g2, ix.perm) % d3 + d3) % d3;
        },
        "uncompute/eo");
    return detail::apply_basis_map(
        std::move(state),
        [n](detail::DenseIndex& ix) {
            for (int i = n; i >= 2; --i) hall_block_unapply(ix.perm, i, ix.code[i - 1]);
        },
        "uncompute/hall");
}

struct MarkedSummary {
    long long m_marked = 0;
    double uniform_amplitude = 0.0;
    double postselect_prob = 1.0;
    CandidateQubit candidate;
};

// Projects register 1 onto the uniform code superposition |s> per ancilla
// sector. Only this projection is ever consumed (the inverse-G expansion is
// not materialized), which keeps the structured support at n!.
inline MarkedSummary postselect_candidate(const RegisterState& state) {
    const RegisterLayout& l = state.layout;
    long long nfact = factorial(l.n);
    double w = 1.0 / std::sqrt(static_cast<double>(nfact));
    Complex s0{}, s1{};
    long long marked = 0, support = 0;
    double amp_mean = 0.0;

    auto visit = [&](const detail::DenseIndex& ix, const Complex& amp) {
        for (int i = 0; i < l.n; ++i)
            if (ix.perm[i] != i)
                throw std::invalid_argument("postselect_candidate: register 2 not restored");
        if (ix.eo != 0) throw std::invalid_argument("postselect_candidate: register 3 not restored");
        ++support;
        amp_mean += std::abs(amp);
        if (ix.anc == 1) {
            ++marked;
            s1 += w * amp;
        } else {
            s0 += w * amp;
        }
    };

    if (state.backend == Backend::dense) {
        for (long long idx = 0; idx < static_cast<long long>(state.dense.size()); ++idx) {
            if (std::abs(state.dense[idx]) <= 1e-12) continue;
            visit(detail::dense_unpack(l, idx), state.dense[idx]);
        }
    } else {
        for (const StructuredBranch& b : state.branches)
            visit(detail::DenseIndex{b.code.digits, b.perm, b.eo, b.anc}, b.amp);
    }
    if (support != nfact)
        throw std::runtime_error("postselect_candidate: support is not the n! codes");

    MarkedSummary summary;
    summary.m_marked = marked;
    summary.uniform_amplitude = amp_mean / static_cast<double>(support);
    if (std::abs(s0.imag()) > kAmpTol || std::abs(s1.imag()) > kAmpTol)
        throw std::runtime_error("postselect_candidate: projections are not real");
    double p0 = s0.real(), p1 = s1.real();
    summary.postselect_prob = p0 * p0 + p1 * p1;
    double norm = std::sqrt(summary.postselect_prob);
    summary.candidate = {p0 / norm, p1 / norm};
    return summary;
}

// The marking circuit: G, Hall cascade, EO gate, comparator,
// uncompute; leaves the state in the marked-superposition form.
inline RegisterState run_marking_circuit(const Graph& g1, const Graph& g2, int E,
                                         Backend backend) {
    require_same_size(g1, g2, "run_marking_circuit");
    RegisterLayout layout = RegisterLayout::make(g1.n, g1, g2);
    RegisterState state = initial_state(layout, backend);
    state = apply_G(std::move(state));
    state = apply_hall_circuit(std::move(state));
    state = apply_eo_gate(std::move(state), g1, g2);
    state = apply_comparator(std::move(state), E);
    return uncompute(std::move(state), g1, g2);
}

// Full pipeline including the postselection step that extracts the
// candidate qubit.
inline MarkedSummary run_marking_pipeline(const Graph& g1, const Graph& g2, int E,
                                          Backend backend) {
    return postselect_candidate(run_marking_circuit(g1, g2, E, backend));
}

// Debug dump, one line per support label sorted by label:
// "reg1=<digits> reg2=<list> reg3=<int> anc=<bit> amp=<re>,<im>"
inline std::string dump_state(const RegisterState& state) {
    std::vector<std::pair<std::string, std::string>> lines;
    auto emit = [&](const detail::DenseIndex& ix, const Complex& amp) {
        std::string key;
        for (int d : ix.code) key += static_cast<char>('0' + d);
        std::string reg2;
        for (std::size_t i = 0; i < ix.perm.size(); ++i) {
            if (i) reg2 += ',';
            reg2 += std::to_string(ix.perm[i] + 1);
        }
        key += "|" + reg2 + "|" + std::to_string(ix.eo) + "|" + std::to_string(ix.anc);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.12f,%.12f", amp.real(), amp.imag());
        std::string line = "reg1=";
        for (int d : ix.code) line += static_cast<char>('0' + d);
        line += " reg2=" + reg2 + " reg3=" + std::to_string(ix.eo) +
                " anc=" + std::to_string(ix.anc) + " amp=" + buf;
        lines.emplace_back(key, line);
    };
    if (state.backend == Backend::dense) {
        for (long long idx = 0; idx < static_cast<long long>(state.dense.size()); ++idx) {
            if (std::abs(state.dense[idx]) <= 1e-12) continue;
            emit(detail::dense_unpack(state.layout, idx), state.dense[idx]);
        }
    } else {
        for (const StructuredBranch& b : state.branches)
            emit(detail::DenseIndex{b.code.digits, b.perm, b.eo, b.anc}, b.amp);
    }
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (auto& [key, line] : lines) {
        out += line;
        out += '\n';
    }
    return out;
}

}  // namespace meosim
