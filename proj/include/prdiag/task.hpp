#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "prdiag/graph.hpp"
#include "prdiag/perception.hpp"
#include "prdiag/sudoku.hpp"

namespace prdiag {

using TaskPayload = std::variant<GraphInstance, SudokuInstance>;

struct TaskInstance {
    std::string id;
    TaskKind kind = TaskKind::GC;
    std::string prompt_text;
    std::string image_svg;
    CanonicalPerception canonical;
    TaskPayload payload;
    std::uint64_t seed = 0;
};

// Pure projection of a payload onto its canonical perception form.
CanonicalPerception canonical_of(const TaskPayload& payload);

std::string prompt_for(const GraphInstance& g);
std::string prompt_for(const SudokuInstance& s);

TaskInstance make_instance(std::string id, GraphInstance g);
TaskInstance make_instance(std::string id, SudokuInstance s);

struct GcGenConfig {
    int min_nodes = 7;
    int max_nodes = 9;
    double edge_probability = 0.4;
};

struct SudokuGenConfig {
    int target_givens = 30;
    bool require_unique = false;
};

// Seeded batch generation; instance i derives its own seed from (seed, i).
std::vector<TaskInstance> generate_gc_dataset(int count, std::uint64_t seed,
                                              const GcGenConfig& cfg);
std::vector<TaskInstance> generate_sudoku_dataset(int count, std::uint64_t seed,
                                                  const SudokuGenConfig& cfg);

}  // namespace prdiag
