#include "prdiag/graph.hpp"

#include <algorithm>
#include <stdexcept>

#include "prdiag/rng.hpp"

namespace prdiag {

std::vector<Edge> normalize_edges(std::vector<Edge> edges, int node_count) {
    for (auto& [u, v] : edges) {
        if (u == v) throw std::invalid_argument("self-loop edge");
        if (u > v) std::swap(u, v);
        if (u < 0 || v >= node_count)
            throw std::invalid_argument("edge index out of range");
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

namespace {

std::vector<std::vector<int>> adjacency(const std::vector<Edge>& edges, int n) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (const auto& [u, v] : edges) {
        adj[static_cast<std::size_t>(u)].push_back(v);
        adj[static_cast<std::size_t>(v)].push_back(u);
    }
    return adj;
}

// Vertices in descending degree order; ties by index for determinism.
std::vector<int> degree_order(const std::vector<std::vector<int>>& adj) {
    std::vector<int> order(adj.size());
    for (std::size_t i = 0; i < adj.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return adj[static_cast<std::size_t>(a)].size() > adj[static_cast<std::size_t>(b)].size();
    });
    return order;
}

struct ColorSearch {
    const std::vector<std::vector<int>>& adj;
    const std::vector<int>& order;
    int k;
    int forced_partner = -1;  // vertex that must copy forced_source's color
    int forced_source = -1;
    std::vector<int> color;

    bool run(std::size_t pos, int used) {
        if (pos == order.size()) return true;
        int u = order[pos];
        if (u == forced_partner) {
            int c = color[static_cast<std::size_t>(forced_source)];
            if (c < 0 || !allowed(u, c)) return false;
            color[static_cast<std::size_t>(u)] = c;
            if (run(pos + 1, used)) return true;
            color[static_cast<std::size_t>(u)] = -1;
            return false;
        }
        // New colors are introduced in canonical order: at most one fresh
        // color per vertex, which prunes color-permutation symmetry.
        int limit = std::min(k, used + 1);
        for (int c = 0; c < limit; ++c) {
            if (!allowed(u, c)) continue;
            color[static_cast<std::size_t>(u)] = c;
            if (run(pos + 1, std::max(used, c + 1))) return true;
            color[static_cast<std::size_t>(u)] = -1;
        }
        return false;
    }

    bool allowed(int u, int c) const {
        for (int v : adj[static_cast<std::size_t>(u)])
            if (color[static_cast<std::size_t>(v)] == c) return false;
        return true;
    }
};

std::optional<std::vector<int>> solve(const std::vector<Edge>& edges, int n, int k,
                                      int merge_a, int merge_b) {
    if (n < 0 || n > kMaxChromaticNodes)
        throw std::invalid_argument("node_count exceeds exact-coloring bound");
    if (k <= 0) return std::nullopt;
    auto adj = adjacency(edges, n);
    auto order = degree_order(adj);

    ColorSearch search{adj, order, k, -1, -1, std::vector<int>(static_cast<std::size_t>(n), -1)};
    if (merge_a >= 0) {
        // Make sure the source vertex is colored before its partner.
        auto ia = std::find(order.begin(), order.end(), merge_a);
        auto ib = std::find(order.begin(), order.end(), merge_b);
        if (ia > ib) std::swap(ia, ib);
        search.forced_source = *ia;
        search.forced_partner = *ib;
    }
    if (!search.run(0, 0)) return std::nullopt;
    return search.color;
}

}  // namespace

int chromatic_number(const std::vector<Edge>& edges, int node_count) {
    if (node_count < 0 || node_count > kMaxChromaticNodes)
        throw std::invalid_argument("node_count exceeds exact-coloring bound");
    if (node_count == 0) return 0;
    if (edges.empty()) return 1;
    for (int k = 1; k <= node_count; ++k)
        if (solve(edges, node_count, k, -1, -1)) return k;
    return node_count;  // unreachable: n colors always suffice
}

std::optional<std::vector<int>> find_coloring(const std::vector<Edge>& edges,
                                              int node_count, int k) {
    return solve(edges, node_count, k, -1, -1);
}

std::optional<std::vector<int>> find_coloring_merged(const std::vector<Edge>& edges,
                                                     int node_count, int k,
                                                     int a, int b) {
    return solve(edges, node_count, k, a, b);
}

GraphInstance gen_graph(int node_count, double edge_probability, std::uint64_t seed) {
    if (node_count < 1 || node_count > kMaxChromaticNodes)
        throw std::invalid_argument("gen_graph: node_count must be in [1, 12]");
    if (edge_probability < 0.0 || edge_probability > 1.0)
        throw std::invalid_argument("gen_graph: edge_probability must be in [0, 1]");

    Rng rng(mix_seed(seed, 0x67726170685f6721ULL));  // domain-separated stream
    GraphInstance g;
    g.node_count = node_count;
    g.seed = seed;
    for (int u = 0; u < node_count; ++u)
        for (int v = u + 1; v < node_count; ++v)
            if (rng.bernoulli(edge_probability)) g.edges.emplace_back(u, v);
    g.chromatic_number = chromatic_number(g.edges, node_count);
    return g;
}

}  // namespace prdiag
