#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "meosim/radix.hpp"

namespace meosim {

// Permutations are enumerated exhaustively up to this size (10! ~ 3.6M).
inline constexpr int kEnumerationGuard = 10;

// Undirected simple graph as a symmetric 0/1 adjacency matrix, vertices
// 0-indexed.
struct Graph {
    int n = 0;
    std::vector<std::uint8_t> adj;  // n*n, row-major
    int edge_count = 0;

    bool has_edge(int u, int v) const { return adj[static_cast<std::size_t>(u) * n + v] != 0; }

    std::vector<std::pair<int, int>> edges() const {
        std::vector<std::pair<int, int>> e;
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v)
                if (has_edge(u, v)) e.emplace_back(u, v);
        return e;
    }

    static Graph from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
        if (n < 1) throw std::invalid_argument("graph: vertex count must be >= 1");
        Graph g;
        g.n = n;
        g.adj.assign(static_cast<std::size_t>(n) * n, 0);
        for (auto [u, v] : edges) {
            if (u < 0 || u >= n || v < 0 || v >= n)
                throw std::invalid_argument("graph: vertex index out of range: (" +
                                            std::to_string(u) + "," + std::to_string(v) + ")");
            if (u == v)
                throw std::invalid_argument("graph: self-loop rejected at vertex " + std::to_string(u));
            if (g.has_edge(u, v))
                throw std::invalid_argument("graph: duplicate edge (" + std::to_string(u) + "," +
                                            std::to_string(v) + ")");
            g.adj[static_cast<std::size_t>(u) * n + v] = 1;
            g.adj[static_cast<std::size_t>(v) * n + u] = 1;
            ++g.edge_count;
        }
        return g;
    }

    bool operator==(const Graph& o) const { return n == o.n && adj == o.adj; }
};

// Accepts either the JSON form {"n": 3, "edges": [[0,1],...]} or edge-list
// text ("n 3" then one "u v" pair per line).
inline Graph load_graph(const std::string& source) {
    auto first = source.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) throw std::invalid_argument("graph: empty input");
    std::vector<std::pair<int, int>> edges;
    int n = 0;
    if (source[first] == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(source);
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument(std::string("graph: JSON parse failure: ") + e.what());
        }
        if (!j.contains("n") || !j["n"].is_number_integer())
            throw std::invalid_argument("graph: missing integer field \"n\"");
        n = j["n"].get<int>();
        if (j.contains("edges")) {
            if (!j["edges"].is_array()) throw std::invalid_argument("graph: \"edges\" must be an array");
            for (const auto& e : j["edges"]) {
                if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
                    throw std::invalid_argument("graph: each edge must be a pair of integers");
                edges.emplace_back(e[0].get<int>(), e[1].get<int>());
            }
        }
    } else {
        std::istringstream in(source);
        std::string tag;
        if (!(in >> tag) || tag != "n" || !(in >> n))
            throw std::invalid_argument("graph: edge-list input must start with \"n <count>\"");
        int u, v;
        while (in >> u) {
            if (!(in >> v)) throw std::invalid_argument("graph: dangling vertex in edge list");
            edges.emplace_back(u, v);
        }
    }
    return Graph::from_edges(n, edges);
}

inline void require_same_size(const Graph& g1, const Graph& g2, const char* what) {
    if (g1.n != g2.n)
        throw std::invalid_argument(std::string(what) + ": graphs must have the same vertex count (" +
                                    std::to_string(g1.n) + " vs " + std::to_string(g2.n) + ")");
}

inline void require_enumerable(const Graph& g, const char* what) {
    if (g.n > kEnumerationGuard)
        throw std::invalid_argument(std::string(what) + ": n > " + std::to_string(kEnumerationGuard) +
                                    " exceeds the enumeration guard");
}

// Number of unordered edges shared by G1 and sigma(G2). The ordered-pair
// adjacency sum counts each such edge twice; this is the halved count, so
// edge_overlap(G, G, id) == |G|.
inline int edge_overlap(const Graph& g1, const Graph& g2, const Permutation& sigma) {
    require_same_size(g1, g2, "edge_overlap");
    if (sigma.size() != g1.n) throw std::invalid_argument("edge_overlap: permutation size mismatch");
    int overlap = 0;
    for (int u = 0; u < g2.n; ++u)
        for (int v = u + 1; v < g2.n; ++v)
            if (g2.has_edge(u, v) && g1.has_edge(sigma.map[u], sigma.map[v])) ++overlap;
    return overlap;
}

namespace detail {

// Enumerates S_n in lexicographic one-line order, calling f with the map.
template <typename F>
void for_each_permutation(int n, F&& f) {
    std::vector<int> map(n);
    std::iota(map.begin(), map.end(), 0);
    do {
        f(const_cast<const std::vector<int>&>(map));
    } while (std::next_permutation(map.begin(), map.end()));
}

inline int overlap_of_map(const Graph& g1, const std::vector<std::pair<int, int>>& g2_edges,
                          const std::vector<int>& map) {
    int overlap = 0;
    for (auto [u, v] : g2_edges)
        if (g1.has_edge(map[u], map[v])) ++overlap;
    return overlap;
}

}  // namespace detail

struct MeoResult {
    int meo = 0;
    long long optimal_count = 0;
};

inline MeoResult brute_force_meo(const Graph& g1, const Graph& g2) {
    require_same_size(g1, g2, "brute_force_meo");
    require_enumerable(g1, "brute_force_meo");
    const auto g2_edges = g2.edges();
    MeoResult r;
    r.optimal_count = 0;
    detail::for_each_permutation(g1.n, [&](const std::vector<int>& map) {
        int eo = detail::overlap_of_map(g1, g2_edges, map);
        if (eo > r.meo) {
            r.meo = eo;
            r.optimal_count = 1;
        } else if (eo == r.meo) {
            ++r.optimal_count;
        }
    });
    return r;
}

// MEO(G1,G2) / max(|G1|,|G2|). Two empty graphs are isomorphic, so their
// similarity is defined as 1.
inline double similarity(const Graph& g1, const Graph& g2) {
    require_same_size(g1, g2, "similarity");
    int denom = std::max(g1.edge_count, g2.edge_count);
    if (denom == 0) return 1.0;
    return static_cast<double>(brute_force_meo(g1, g2).meo) / denom;
}

// m = |{sigma : EO(sigma) > E}|, the exact marked count.
inline long long count_exceeding(const Graph& g1, const Graph& g2, int E) {
    require_same_size(g1, g2, "count_exceeding");
    require_enumerable(g1, "count_exceeding");
    if (E < 0 || E > std::min(g1.edge_count, g2.edge_count))
        throw std::invalid_argument("count_exceeding: threshold outside [0, min(|G1|,|G2|)]");
    const auto g2_edges = g2.edges();
    long long m = 0;
    detail::for_each_permutation(g1.n, [&](const std::vector<int>& map) {
        if (detail::overlap_of_map(g1, g2_edges, map) > E) ++m;
    });
    return m;
}

struct OverlapHistogram {
    std::map<int, long long> counts;

    long long total() const {
        long long t = 0;
        for (auto& [k, v] : counts) t += v;
        return t;
    }

    int max_overlap() const {
        for (auto it = counts.rbegin(); it != counts.rend(); ++it)
            if (it->second > 0) return it->first;
        return 0;
    }

    long long count_above(int E) const {
        long long m = 0;
        for (auto& [k, v] : counts)
            if (k > E) m += v;
        return m;
    }

    std::string to_csv() const {
        std::string s = "overlap,count\n";
        for (auto& [k, v] : counts) s += std::to_string(k) + "," + std::to_string(v) + "\n";
        return s;
    }
};

inline OverlapHistogram eo_distribution(const Graph& g1, const Graph& g2) {
    require_same_size(g1, g2, "eo_distribution");
    require_enumerable(g1, "eo_distribution");
    const auto g2_edges = g2.edges();
    OverlapHistogram h;
    detail::for_each_permutation(g1.n, [&](const std::vector<int>& map) {
        ++h.counts[detail::overlap_of_map(g1, g2_edges, map)];
    });
    return h;
}

inline bool is_isomorphic(const Graph& g1, const Graph& g2) {
    require_same_size(g1, g2, "is_isomorphic");
    require_enumerable(g1, "is_isomorphic");
    if (g1.edge_count != g2.edge_count) return false;
    return brute_force_meo(g1, g2).meo == g1.edge_count;
}

}  // namespace meosim
