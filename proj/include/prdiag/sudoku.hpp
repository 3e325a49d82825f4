#pragma once

#include <cstdint>
#include <optional>

#include "prdiag/perception.hpp"

namespace prdiag {

struct SudokuInstance {
    Grid9 givens{};    // 0 = blank
    Grid9 solution{};  // completed grid, digits 1-9
    std::uint64_t seed = 0;
};

// Every row, column and 3x3 box contains 1-9 exactly once.
bool is_valid_solution(const Grid9& grid);

// Every nonzero givens cell matches the solution.
bool solution_extends(const Grid9& givens, const Grid9& solution);

// Number of completions, counting stops at `limit`. Bitmask + most-constrained
// cell backtracking; exact for any 9x9 puzzle.
int count_solutions(const Grid9& givens, int limit);

// First completion in the solver's deterministic search order.
std::optional<Grid9> solve_first(const Grid9& givens);

// Full random solution grid, then seeded cell removal down to target_givens.
// With require_unique every removal must keep the completion unique; removal
// stops early if no cell can be removed without breaking that, so the result
// may retain more than target_givens in pathological configurations.
SudokuInstance gen_sudoku(int target_givens, std::uint64_t seed, bool require_unique);

}  // namespace prdiag
