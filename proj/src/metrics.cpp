#include "prdiag/metrics.hpp"

#include <set>

namespace prdiag {

int perception_accuracy(const Parse<CanonicalPerception>& parsed,
                        const CanonicalPerception& reference) {
    if (!parsed) return 0;
    return serialize_perception(*parsed.value) == serialize_perception(reference) ? 1 : 0;
}

int acc_gc(const ColoringAnswer& answer, const std::vector<Edge>& edges, int node_count,
           int chi) {
    std::set<int> used;
    for (int u = 0; u < node_count; ++u) {
        auto it = answer.colors.find(u);
        if (it == answer.colors.end()) return 0;
        used.insert(it->second);
    }
    for (const auto& [u, v] : edges)
        if (answer.colors.at(u) == answer.colors.at(v)) return 0;
    return static_cast<int>(used.size()) == chi ? 1 : 0;
}

int acc_sudoku(const GridAnswer& answer, const Grid9& givens) {
    if (!is_valid_solution(answer.cells)) return 0;
    return solution_extends(givens, answer.cells) ? 1 : 0;
}

int answer_accuracy(const Answer& answer, const CanonicalPerception& perception,
                    int node_count) {
    if (std::holds_alternative<Unparsed>(answer)) return 0;
    if (const auto* el = std::get_if<EdgeList>(&perception)) {
        const auto* coloring = std::get_if<ColoringAnswer>(&answer);
        if (!coloring) return 0;
        // A perception naming nodes outside the task's node set cannot be a
        // transcription of the rendered image; nothing colors it correctly.
        for (const auto& [u, v] : el->edges)
            if (u < 0 || v >= node_count) return 0;
        int chi = chromatic_number(el->edges, node_count);
        return acc_gc(*coloring, el->edges, node_count, chi);
    }
    const auto* grid_answer = std::get_if<GridAnswer>(&answer);
    if (!grid_answer) return 0;
    return acc_sudoku(*grid_answer, std::get<GivensGrid>(perception).cells);
}

MetricRecord score(const std::string& raw_output, const TaskInstance& instance) {
    RawBlocks blocks = extract_blocks(raw_output);

    Parse<CanonicalPerception> parsed{std::nullopt, "perception missing"};
    if (blocks.perception) parsed = parse_perception(*blocks.perception, instance.kind);

    Answer answer = Unparsed{};
    if (blocks.answer) answer = parse_answer(*blocks.answer, instance.kind);

    int node_count = 0;
    if (const auto* g = std::get_if<GraphInstance>(&instance.payload)) node_count = g->node_count;

    MetricRecord m;
    m.perception = perception_accuracy(parsed, instance.canonical);

    // End-to-end: answer checked against the canonical perception. The GC chi
    // is already stored on the payload; recomputing would be identical.
    if (const auto* g = std::get_if<GraphInstance>(&instance.payload)) {
        if (const auto* coloring = std::get_if<ColoringAnswer>(&answer))
            m.end_to_end = acc_gc(*coloring, std::get<EdgeList>(instance.canonical).edges,
                                  g->node_count, g->chromatic_number);
    } else {
        if (const auto* grid_answer = std::get_if<GridAnswer>(&answer))
            m.end_to_end =
                acc_sudoku(*grid_answer, std::get<GivensGrid>(instance.canonical).cells);
    }

    // Conditional reasoning: the same answer checked against whatever
    // perception the model produced; unparseable perception scores 0.
    if (parsed)
        m.conditional_reasoning = answer_accuracy(answer, *parsed.value, node_count);

    return m;
}

}  // namespace prdiag
