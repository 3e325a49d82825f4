#include "prdiag/task.hpp"

#include <cstdio>
#include <stdexcept>

#include "prdiag/render.hpp"
#include "prdiag/rng.hpp"

namespace prdiag {

CanonicalPerception canonical_of(const TaskPayload& payload) {
    if (const auto* g = std::get_if<GraphInstance>(&payload))
        return EdgeList{normalize_edges(g->edges, g->node_count)};
    const auto& s = std::get<SudokuInstance>(payload);
    return GivensGrid{s.givens};
}

std::string prompt_for(const GraphInstance& g) {
    std::string n = std::to_string(g.node_count);
    return "The image shows an undirected graph with " + n + " nodes labeled 0 to " +
           std::to_string(g.node_count - 1) +
           ". First transcribe the edge list you see, then color the graph using the "
           "minimum possible number of colors so that adjacent nodes never share a "
           "color. Respond as: <perception>edges: (u,v);(u,v);...</perception> with "
           "u<v and the pairs sorted, then <think>your reasoning</think>, then "
           "<answer>node:color,node:color,...</answer> covering every node with "
           "integer colors.";
}

std::string prompt_for(const SudokuInstance&) {
    return "The image shows a 9x9 Sudoku puzzle. First transcribe the given digits as "
           "nine lines of nine characters using '.' for blank cells, then complete the "
           "grid so every row, column, and 3x3 box contains each digit exactly once. "
           "Respond as: <perception>the nine transcribed lines</perception>, then "
           "<think>your reasoning</think>, then <answer>the nine solved lines"
           "</answer>.";
}

TaskInstance make_instance(std::string id, GraphInstance g) {
    TaskInstance inst;
    inst.id = std::move(id);
    inst.kind = TaskKind::GC;
    inst.prompt_text = prompt_for(g);
    inst.image_svg = render_graph_svg(g);
    inst.seed = g.seed;
    inst.payload = std::move(g);
    inst.canonical = canonical_of(inst.payload);
    return inst;
}

TaskInstance make_instance(std::string id, SudokuInstance s) {
    TaskInstance inst;
    inst.id = std::move(id);
    inst.kind = TaskKind::Sudoku;
    inst.prompt_text = prompt_for(s);
    inst.image_svg = render_sudoku_svg(s);
    inst.seed = s.seed;
    inst.payload = std::move(s);
    inst.canonical = canonical_of(inst.payload);
    return inst;
}

namespace {

std::string index_id(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%06d", prefix, i);
    return buf;
}

}  // namespace

std::vector<TaskInstance> generate_gc_dataset(int count, std::uint64_t seed,
                                              const GcGenConfig& cfg) {
    if (cfg.min_nodes < 1 || cfg.max_nodes > kMaxChromaticNodes || cfg.min_nodes > cfg.max_nodes)
        throw std::invalid_argument("generate_gc_dataset: bad node range");
    std::vector<TaskInstance> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(i));
        Rng pick(mix_seed(s, 0x6e6f6465ULL));
        int nodes = pick.uniform_int(cfg.min_nodes, cfg.max_nodes);
        out.push_back(make_instance(index_id("gc", i), gen_graph(nodes, cfg.edge_probability, s)));
    }
    return out;
}

std::vector<TaskInstance> generate_sudoku_dataset(int count, std::uint64_t seed,
                                                  const SudokuGenConfig& cfg) {
    std::vector<TaskInstance> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(i));
        out.push_back(make_instance(index_id("sudoku", i),
                                    gen_sudoku(cfg.target_givens, s, cfg.require_unique)));
    }
    return out;
}

}  // namespace prdiag
