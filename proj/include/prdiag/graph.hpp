#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace prdiag {

using Edge = std::pair<int, int>;  // always stored with first < second

// Exact chromatic-number search is limited to this many nodes.
inline constexpr int kMaxChromaticNodes = 12;

struct GraphInstance {
    int node_count = 0;
    std::vector<Edge> edges;  // sorted lexicographically, u < v, no duplicates
    int chromatic_number = 0;
    std::uint64_t seed = 0;
};

// Sorts, orients (u < v) and deduplicates an edge list. Throws on self-loops
// or indices outside [0, node_count).
std::vector<Edge> normalize_edges(std::vector<Edge> edges, int node_count);

// Exact minimum proper coloring size via branch-and-bound backtracking.
// Returns 0 for node_count == 0 and 1 for edgeless nonempty graphs.
// Throws std::invalid_argument when node_count exceeds kMaxChromaticNodes.
int chromatic_number(const std::vector<Edge>& edges, int node_count);

// Proper coloring with at most k colors, or nullopt if none exists.
// Colors are 0-based and used contiguously from 0.
std::optional<std::vector<int>> find_coloring(const std::vector<Edge>& edges,
                                              int node_count, int k);

// Same search, additionally forcing color[a] == color[b].
std::optional<std::vector<int>> find_coloring_merged(const std::vector<Edge>& edges,
                                                     int node_count, int k,
                                                     int a, int b);

// Erdos-Renyi style generator: each pair (u,v), u < v, is included with
// probability edge_probability, in lexicographic pair order. Deterministic in
// (node_count, edge_probability, seed).
GraphInstance gen_graph(int node_count, double edge_probability, std::uint64_t seed);

}  // namespace prdiag
