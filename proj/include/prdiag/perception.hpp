#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "prdiag/graph.hpp"

namespace prdiag {

enum class TaskKind { GC, Sudoku };

std::string to_string(TaskKind kind);
std::optional<TaskKind> task_kind_from_string(const std::string& s);

// 9x9 digits; 0 means blank in givens grids, solutions hold 1-9 only.
using Grid9 = std::array<std::array<std::uint8_t, 9>, 9>;

struct EdgeList {
    std::vector<Edge> edges;  // sorted, u < v, deduplicated
};

struct GivensGrid {
    Grid9 cells{};
};

// Canonical perception representation. Equality of two values is byte
// equality of serialize_perception on both.
using CanonicalPerception = std::variant<EdgeList, GivensGrid>;

TaskKind kind_of(const CanonicalPerception& p);

// Normalized textual forms:
//   GC:     "edges: (0,1);(0,2)"  (sorted; bare "edges:" when empty)
//   Sudoku: nine 9-character lines, digits 1-9 and '.' for blanks,
//           joined with '\n', no trailing newline.
std::string serialize_perception(const CanonicalPerception& p);

template <typename T>
struct Parse {
    std::optional<T> value;
    std::string error;  // set when !value

    explicit operator bool() const { return value.has_value(); }
};

// Lenient reader for model-produced perception text. GC accepts pairs in any
// order/orientation and deduplicates; Sudoku accepts '.' or '0' for blanks.
// Grammar violations come back as Parse errors, never exceptions.
Parse<CanonicalPerception> parse_perception(const std::string& text, TaskKind kind);

}  // namespace prdiag
