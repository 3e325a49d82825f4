#pragma once

#include <optional>

#include "prdiag/output.hpp"
#include "prdiag/task.hpp"

namespace prdiag {

struct MetricRecord {
    int end_to_end = 0;              // a
    int perception = 0;              // a_p
    int conditional_reasoning = 0;   // conditional reasoning accuracy over own perception
    std::optional<int> counterfactual_reasoning;  // only set by the counterfactual protocol
};

// 1 iff the parse succeeded and the normalized serializations match.
int perception_accuracy(const Parse<CanonicalPerception>& parsed,
                        const CanonicalPerception& reference);

// 1 iff every node 0..node_count-1 is colored, no edge joins equal colors and
// the number of distinct colors equals chi. chi must be the chromatic number
// of the supplied edge list.
int acc_gc(const ColoringAnswer& answer, const std::vector<Edge>& edges, int node_count,
           int chi);

// 1 iff answer is a valid complete Sudoku agreeing with every nonzero given.
int acc_sudoku(const GridAnswer& answer, const Grid9& givens);

// Answer correctness against an arbitrary perception (used for both the
// canonical p* and the model-produced parse). For GC the conditioning chi is
// recomputed on the given edge list.
int answer_accuracy(const Answer& answer, const CanonicalPerception& perception,
                    int node_count);

// The disentangled metric triple for one raw model output.
MetricRecord score(const std::string& raw_output, const TaskInstance& instance);

}  // namespace prdiag
