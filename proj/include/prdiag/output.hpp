#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>

#include "prdiag/perception.hpp"

namespace prdiag {

struct ColoringAnswer {
    std::map<int, int> colors;  // node -> color
};

struct GridAnswer {
    Grid9 cells{};  // complete grid, digits 1-9
};

struct Unparsed {};

using Answer = std::variant<ColoringAnswer, GridAnswer, Unparsed>;

struct StructuredOutput {
    std::string perception_text;
    std::string reasoning_text;
    Answer answer = Unparsed{};
};

// Raw tag extraction; every field is independently optional so that scoring
// can degrade per metric instead of all-or-nothing.
struct RawBlocks {
    std::optional<std::string> perception;
    std::optional<std::string> think;
    std::optional<std::string> answer;
};

// First <perception> block, first subsequent <think>, first subsequent
// <answer>. Duplicate blocks after the first are ignored.
RawBlocks extract_blocks(const std::string& raw);

// GC: "node:color,node:color,..." with integer colors.
// Sudoku: nine 9-digit lines, digits 1-9 only.
// Anything malformed yields Unparsed.
Answer parse_answer(const std::string& text, TaskKind kind);

// Strict form: missing perception or answer block is an error naming the
// block; the reasoning block may be absent or empty.
Parse<StructuredOutput> parse_output(const std::string& raw, TaskKind kind);

}  // namespace prdiag
