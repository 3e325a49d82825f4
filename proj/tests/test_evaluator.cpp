#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "prdiag/metrics.hpp"
#include "prdiag/rng.hpp"
#include "prdiag/task.hpp"

using namespace prdiag;

namespace {

TaskInstance k3_instance() {
    GraphInstance g;
    g.node_count = 3;
    g.edges = {{0, 1}, {0, 2}, {1, 2}};
    g.chromatic_number = 3;
    g.seed = 1;
    return make_instance("k3", g);
}

ColoringAnswer coloring(std::initializer_list<std::pair<int, int>> pairs) {
    ColoringAnswer a;
    for (auto [n, c] : pairs) a.colors[n] = c;
    return a;
}

}  // namespace

TEST_CASE("parse_output happy path and block selection") {
    auto out = parse_output(
        "<perception>edges: (0,1)</perception><think>t</think><answer>0:1,1:2</answer>",
        TaskKind::GC);
    REQUIRE(out);
    CHECK(out.value->perception_text == "edges: (0,1)");
    CHECK(out.value->reasoning_text == "t");
    auto* ans = std::get_if<ColoringAnswer>(&out.value->answer);
    REQUIRE(ans);
    CHECK(ans->colors == std::map<int, int>{{0, 1}, {1, 2}});

    // Two answer blocks: first wins.
    auto twice = parse_output(
        "<perception>edges:</perception><think>t</think><answer>0:1</answer><answer>0:9</answer>",
        TaskKind::GC);
    REQUIRE(twice);
    CHECK(std::get<ColoringAnswer>(twice.value->answer).colors.at(0) == 1);

    // Missing think is tolerated; reasoning comes back empty.
    auto no_think =
        parse_output("<perception>edges:</perception><answer>0:1</answer>", TaskKind::GC);
    REQUIRE(no_think);
    CHECK(no_think.value->reasoning_text.empty());
}

TEST_CASE("parse_output errors name the missing block") {
    auto missing_answer =
        parse_output("<perception>edges: (0,1)</perception><think>t</think>", TaskKind::GC);
    CHECK_FALSE(missing_answer);
    CHECK(missing_answer.error == "answer missing");

    auto missing_perception = parse_output("<answer>0:1</answer>", TaskKind::GC);
    CHECK_FALSE(missing_perception);
    CHECK(missing_perception.error == "perception missing");
}

TEST_CASE("answer grammar rejects malformed text") {
    CHECK(std::holds_alternative<Unparsed>(parse_answer("", TaskKind::GC)));
    CHECK(std::holds_alternative<Unparsed>(parse_answer("0:1,0:2", TaskKind::GC)));
    CHECK(std::holds_alternative<Unparsed>(parse_answer("zero:1", TaskKind::GC)));
    CHECK(std::holds_alternative<ColoringAnswer>(parse_answer(" 0 : 1 , 1 : 0 ", TaskKind::GC)));

    std::string incomplete;
    for (int i = 0; i < 9; ++i) incomplete += "12345678.\n";
    CHECK(std::holds_alternative<Unparsed>(parse_answer(incomplete, TaskKind::Sudoku)));
}

TEST_CASE("perception_accuracy is strict canonical equality") {
    CanonicalPerception star = EdgeList{{{0, 1}, {1, 2}}};
    CHECK(perception_accuracy(parse_perception("edges: (1,2);(0,1)", TaskKind::GC), star) == 1);
    CHECK(perception_accuracy(parse_perception("edges: (2,1);(1,0)", TaskKind::GC), star) == 1);
    CHECK(perception_accuracy(parse_perception("edges: (0,1)", TaskKind::GC), star) == 0);
    CHECK(perception_accuracy(parse_perception("garbage", TaskKind::GC), star) == 0);
}

TEST_CASE("acc_gc on stated cases") {
    std::vector<Edge> k3{{0, 1}, {0, 2}, {1, 2}};
    CHECK(acc_gc(coloring({{0, 1}, {1, 2}, {2, 3}}), k3, 3, 3) == 1);
    CHECK(acc_gc(coloring({{0, 1}, {1, 1}, {2, 2}}), k3, 3, 3) == 0);

    // Path 0-1-2 has chi 2 (confirmed by enumeration); three distinct colors
    // exceed it even though the coloring is proper.
    std::vector<Edge> p3{{0, 1}, {1, 2}};
    REQUIRE(oracles::chi_bruteforce(p3, 3) == 2);
    CHECK(acc_gc(coloring({{0, 1}, {1, 2}, {2, 3}}), p3, 3, 2) == 0);

    // Partial answers never score.
    CHECK(acc_gc(coloring({{0, 1}, {1, 2}}), k3, 3, 3) == 0);
}

TEST_CASE("acc_gc agrees with the brute-force checker") {
    Rng rng(2024);
    int checked = 0;
    for (int i = 0; checked < 200; ++i) {
        int n = 4 + static_cast<int>(rng.uniform_below(4));
        GraphInstance g = gen_graph(n, 0.45, 7000 + static_cast<std::uint64_t>(i));
        ColoringAnswer answer;
        int palette = 1 + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n)));
        for (int u = 0; u < n; ++u) {
            if (rng.uniform_real() < 0.05) continue;  // sometimes drop a node
            answer.colors[u] = static_cast<int>(rng.uniform_below(
                static_cast<std::uint64_t>(palette)));
        }
        int expected = oracles::acc_gc_bruteforce(answer, g.edges, n);
        CHECK(acc_gc(answer, g.edges, n, g.chromatic_number) == expected);
        ++checked;
    }
}

TEST_CASE("acc_sudoku agrees with the 27-constraint checker") {
    Rng rng(77);
    for (int i = 0; i < 200; ++i) {
        SudokuInstance s = gen_sudoku(30, 5000 + static_cast<std::uint64_t>(i % 40), false);
        GridAnswer answer{s.solution};
        switch (rng.uniform_below(4)) {
            case 0: break;  // untouched valid completion
            case 1: {       // duplicate within a row
                int r = static_cast<int>(rng.uniform_below(9));
                answer.cells[static_cast<std::size_t>(r)][1] =
                    answer.cells[static_cast<std::size_t>(r)][0];
                break;
            }
            case 2: {  // violate a given while keeping grid-validity plausible
                answer.cells[0][0] = static_cast<std::uint8_t>(
                    answer.cells[0][0] == 9 ? 1 : answer.cells[0][0] + 1);
                break;
            }
            default: {  // random cell swap inside a row
                int r = static_cast<int>(rng.uniform_below(9));
                std::swap(answer.cells[static_cast<std::size_t>(r)][3],
                          answer.cells[static_cast<std::size_t>(r)][6]);
                break;
            }
        }
        CHECK(acc_sudoku(answer, s.givens) == oracles::acc_sudoku_bruteforce(answer, s.givens));
    }
}

TEST_CASE("score yields the perfect triple on a faithful output") {
    TaskInstance inst = k3_instance();
    std::string raw =
        "<perception>edges: (0,1);(0,2);(1,2)</perception><think>direct</think>"
        "<answer>0:1,1:2,2:3</answer>";
    MetricRecord m = score(raw, inst);
    CHECK(m.end_to_end == 1);
    CHECK(m.perception == 1);
    CHECK(m.conditional_reasoning == 1);
    CHECK_FALSE(m.counterfactual_reasoning.has_value());
}

TEST_CASE("score disentangles a dropped-edge perception") {
    TaskInstance inst = k3_instance();

    // Search (as an oracle would) for a dropped edge plus a coloring that is
    // proper and chi-minimal for the corrupted graph but not for K3.
    std::vector<Edge> k3 = std::get<GraphInstance>(inst.payload).edges;
    std::string found_perception, found_answer;
    for (std::size_t drop = 0; drop < k3.size() && found_answer.empty(); ++drop) {
        std::vector<Edge> corrupted;
        for (std::size_t j = 0; j < k3.size(); ++j)
            if (j != drop) corrupted.push_back(k3[j]);
        int chi = oracles::chi_bruteforce(corrupted, 3);
        // enumerate colorings over {0..chi-1}^3
        for (int c0 = 0; c0 < chi; ++c0)
            for (int c1 = 0; c1 < chi; ++c1)
                for (int c2 = 0; c2 < chi; ++c2) {
                    ColoringAnswer cand = coloring({{0, c0}, {1, c1}, {2, c2}});
                    if (!oracles::acc_gc_bruteforce(cand, corrupted, 3)) continue;
                    if (oracles::acc_gc_bruteforce(cand, k3, 3)) continue;
                    found_perception = serialize_perception(EdgeList{corrupted});
                    found_answer = std::to_string(0) + ":" + std::to_string(c0) + ",1:" +
                                   std::to_string(c1) + ",2:" + std::to_string(c2);
                    break;
                }
    }
    REQUIRE_FALSE(found_answer.empty());

    std::string raw = "<perception>" + found_perception + "</perception><think>t</think>" +
                      "<answer>" + found_answer + "</answer>";
    MetricRecord m = score(raw, inst);
    CHECK(m.end_to_end == 0);
    CHECK(m.perception == 0);
    CHECK(m.conditional_reasoning == 1);
}

TEST_CASE("score error contracts") {
    TaskInstance inst = k3_instance();

    // Unparseable answer: perception still counts, the rest scores 0.
    MetricRecord m = score(
        "<perception>edges: (0,1);(0,2);(1,2)</perception><think>t</think>"
        "<answer>garbled</answer>",
        inst);
    CHECK(m.end_to_end == 0);
    CHECK(m.perception == 1);
    CHECK(m.conditional_reasoning == 0);

    // Unparseable perception: conditional reasoning is undefined, scored 0,
    // but the end-to-end answer still counts against p*.
    MetricRecord m2 =
        score("<perception>#!#</perception><answer>0:1,1:2,2:3</answer>", inst);
    CHECK(m2.end_to_end == 1);
    CHECK(m2.perception == 0);
    CHECK(m2.conditional_reasoning == 0);

    // Perception naming nodes outside the task cannot be reasoned over.
    MetricRecord m3 = score(
        "<perception>edges: (0,9)</perception><answer>0:1,1:2,2:3</answer>", inst);
    CHECK(m3.perception == 0);
    CHECK(m3.conditional_reasoning == 0);
}

TEST_CASE("perception-equality forces a == conditional reasoning") {
    // Property over random faithful-perception outputs with assorted answers.
    Rng rng(31);
    for (int i = 0; i < 50; ++i) {
        GraphInstance g = gen_graph(6, 0.4, 300 + static_cast<std::uint64_t>(i));
        TaskInstance inst = make_instance("p", g);
        std::string answer;
        for (int u = 0; u < g.node_count; ++u) {
            if (u) answer += ',';
            answer += std::to_string(u) + ":" +
                      std::to_string(rng.uniform_below(static_cast<std::uint64_t>(
                          g.chromatic_number + 1)));
        }
        std::string raw = "<perception>" + serialize_perception(inst.canonical) +
                          "</perception><think>t</think><answer>" + answer + "</answer>";
        MetricRecord m = score(raw, inst);
        CHECK(m.perception == 1);
        CHECK(m.end_to_end == m.conditional_reasoning);
    }
}
