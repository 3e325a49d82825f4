#pragma once

#include <optional>
#include <string>

#include "prdiag/graph.hpp"
#include "prdiag/sudoku.hpp"

namespace prdiag {

// Deterministic vector rendering: circular node layout for graphs, a 9x9
// grid with heavy 3x3 borders for Sudoku. Byte-stable for a given instance.
// Each drawn element carries a data-* attribute naming its content, which is
// what image consumers (simulated policy, stub embedder) read back.
std::string render_graph_svg(const GraphInstance& g);
std::string render_sudoku_svg(const SudokuInstance& s);

// Structured content recovered from a rendered document.
struct ImageContent {
    TaskKind kind = TaskKind::GC;
    int node_count = 0;            // GC
    std::vector<Edge> edges;       // GC, normalized
    Grid9 givens{};                // Sudoku
};

std::optional<ImageContent> read_image_content(const std::string& svg);

}  // namespace prdiag
