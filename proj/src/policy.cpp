#include "prdiag/policy.hpp"

#include <algorithm>
#include <cstdio>

#include "prdiag/graph.hpp"
#include "prdiag/rng.hpp"
#include "prdiag/sudoku.hpp"
#include "prdiag/output.hpp"

namespace prdiag {

namespace {

constexpr const char* kThink = "worked from the transcribed structure.";

std::string wrap_output(const std::string& perception_text, const std::string& answer_text) {
    return "<perception>" + perception_text + "</perception><think>" + std::string(kThink) +
           "</think><answer>" + answer_text + "</answer>";
}

std::string continuation(const std::string& answer_text) {
    return "<think>" + std::string(kThink) + "</think><answer>" + answer_text + "</answer>";
}

// Minimum-color answer text for an edge list, or "unsolvable" when the exact
// solver cannot handle it.
std::string gc_answer_for(const std::vector<Edge>& edges, int node_count) {
    try {
        int chi = chromatic_number(edges, node_count);
        auto coloring = find_coloring(edges, node_count, chi);
        if (!coloring) return "unsolvable";
        return coloring_answer_text(*coloring);
    } catch (const std::exception&) {
        return "unsolvable";
    }
}

// An answer no perception accepts: for GC the first node is left uncolored,
// for Sudoku one row gets a duplicated digit.
std::string corrupt_coloring_text(const std::string& correct_text) {
    auto comma = correct_text.find(',');
    if (comma == std::string::npos) return "";  // single node; empty answer
    return correct_text.substr(comma + 1);
}

std::string corrupt_grid_text(Grid9 grid) {
    grid[0][1] = grid[0][0];
    return grid_answer_text(grid);
}

std::string corrupt_answer(TaskKind kind, const std::string& correct_text) {
    if (kind == TaskKind::GC) return corrupt_coloring_text(correct_text);
    auto parsed = parse_perception(correct_text, TaskKind::Sudoku);
    if (!parsed) return "invalid";
    return corrupt_grid_text(std::get<GivensGrid>(*parsed.value).cells);
}

const std::string* first_image(const GenRequest& req) {
    for (const auto& part : req.parts)
        if (part.kind == PromptPart::Kind::Image) return &part.data;
    return nullptr;
}

// The artifact's own prompt template spells out "labeled 0 to <n-1>"; the
// edge list alone cannot recover isolated trailing nodes.
int infer_node_count(const GenRequest& req, const std::vector<Edge>& edges) {
    for (const auto& part : req.parts) {
        if (part.kind != PromptPart::Kind::Text) continue;
        auto pos = part.data.find("labeled 0 to ");
        if (pos == std::string::npos) continue;
        int value = 0;
        if (std::sscanf(part.data.c_str() + pos, "labeled 0 to %d", &value) == 1)
            return value + 1;
    }
    int max_node = 0;
    for (const auto& [u, v] : edges) max_node = std::max(max_node, v + 1);
    return std::max(max_node, 1);
}

std::string perception_answer(const CanonicalPerception& p, int node_count) {
    if (const auto* el = std::get_if<EdgeList>(&p)) return gc_answer_for(el->edges, node_count);
    auto solved = solve_first(std::get<GivensGrid>(p).cells);
    if (!solved) return "unsolvable";
    return grid_answer_text(*solved);
}

}  // namespace

std::string coloring_answer_text(const std::vector<int>& colors) {
    std::string out;
    for (std::size_t i = 0; i < colors.size(); ++i) {
        if (i > 0) out += ',';
        out += std::to_string(i) + ":" + std::to_string(colors[i]);
    }
    return out;
}

std::string grid_answer_text(const Grid9& grid) {
    std::string out;
    for (int r = 0; r < 9; ++r) {
        if (r > 0) out += '\n';
        for (int c = 0; c < 9; ++c)
            out += static_cast<char>(
                '0' + grid[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
    }
    return out;
}

std::string SimulatedPolicy::tag() const {
    char buf[96];
    std::snprintf(buf, sizeof buf, "sim(qp=%g,qr=%g,qrt=%g)", cfg_.q_p, cfg_.q_r,
                  cfg_.q_r_text);
    return buf;
}

SimulatedPolicy::ImagePlans& SimulatedPolicy::plans_for(const std::string& svg) {
    auto it = cache_.find(svg);
    if (it != cache_.end()) return *it->second;

    auto plans = std::make_unique<ImagePlans>();
    auto content = read_image_content(svg);
    if (!content) throw std::runtime_error("unreadable image document");
    plans->content = *content;

    if (content->kind == TaskKind::GC) {
        const auto& edges = content->edges;
        int n = content->node_count;
        plans->canonical_text = serialize_perception(EdgeList{edges});
        plans->true_answer_text = gc_answer_for(edges, n);
        int chi = chromatic_number(edges, n);
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v) {
                Edge e{u, v};
                bool present = std::binary_search(edges.begin(), edges.end(), e);
                std::vector<Edge> flipped;
                if (present) {
                    for (const auto& edge : edges)
                        if (edge != e) flipped.push_back(edge);
                } else {
                    flipped = edges;
                    flipped.insert(std::lower_bound(flipped.begin(), flipped.end(), e), e);
                }
                int flipped_chi = chromatic_number(flipped, n);
                std::optional<std::vector<int>> coloring;
                if (flipped_chi != chi) {
                    coloring = find_coloring(flipped, n, flipped_chi);
                } else if (present) {
                    // Same chi: force the removed edge's endpoints onto one
                    // color so the answer still violates the true graph.
                    coloring = find_coloring_merged(flipped, n, flipped_chi, u, v);
                } else {
                    // Adding an edge without raising chi: any proper coloring
                    // of the corrupted graph also solves the true one. Leaky.
                    continue;
                }
                if (coloring)
                    plans->safe.push_back({serialize_perception(EdgeList{flipped}),
                                           coloring_answer_text(*coloring)});
            }
    } else {
        const auto& givens = content->givens;
        plans->canonical_text = serialize_perception(GivensGrid{givens});
        auto solved = solve_first(givens);
        plans->true_answer_text = solved ? grid_answer_text(*solved) : "unsolvable";
        for (int cell = 0; cell < 81; ++cell) {
            int d = givens[static_cast<std::size_t>(cell / 9)][static_cast<std::size_t>(cell % 9)];
            if (d == 0) continue;
            for (int alt = 1; alt <= 9; ++alt)
                if (alt != d) plans->sudoku_candidates.emplace_back(cell, alt);
        }
    }

    auto [inserted, _] = cache_.emplace(svg, std::move(plans));
    return *inserted->second;
}

const SimulatedPolicy::CorruptionPlan* SimulatedPolicy::pick_corruption(ImagePlans& plans,
                                                                        Rng& rng) {
    if (plans.content.kind == TaskKind::GC) {
        if (plans.safe.empty()) return nullptr;
        return &plans.safe[rng.uniform_below(plans.safe.size())];
    }
    // Sudoku: probe candidate single-cell alterations in a seeded order and
    // cache solvability per candidate. An altered given forces the completion
    // to disagree with the true givens, so any solvable candidate is safe.
    const auto& candidates = plans.sudoku_candidates;
    if (candidates.empty()) return nullptr;
    std::size_t start = rng.uniform_below(candidates.size());
    for (std::size_t step = 0; step < candidates.size(); ++step) {
        int idx = static_cast<int>((start + step) % candidates.size());
        auto it = plans.sudoku_tried.find(idx);
        if (it == plans.sudoku_tried.end()) {
            auto [cell, alt] = candidates[static_cast<std::size_t>(idx)];
            Grid9 corrupted = plans.content.givens;
            corrupted[static_cast<std::size_t>(cell / 9)][static_cast<std::size_t>(cell % 9)] =
                static_cast<std::uint8_t>(alt);
            std::optional<CorruptionPlan> plan;
            if (auto solved = solve_first(corrupted))
                plan = CorruptionPlan{serialize_perception(GivensGrid{corrupted}),
                                      grid_answer_text(*solved)};
            it = plans.sudoku_tried.emplace(idx, std::move(plan)).first;
        }
        if (it->second) return &*it->second;
    }
    return nullptr;
}

GenResult SimulatedPolicy::generate(const GenRequest& req) {
    Rng rng(mix_seed(cfg_.seed, req.seed));
    // Fixed draw order across modes keeps prefix-conditioned calls aligned
    // with standard calls on the same seed.
    double u_p = rng.uniform_real();
    double u_r = rng.uniform_real();

    const std::string* image = first_image(req);

    if (req.response_prefix) {
        std::string prefix_perception;
        if (auto blocks = extract_blocks(*req.response_prefix); blocks.perception)
            prefix_perception = *blocks.perception;
        std::optional<ImageContent> content;
        if (image) content = read_image_content(*image);
        TaskKind kind = TaskKind::Sudoku;
        if (content)
            kind = content->kind;
        else if (prefix_perception.find("edges:") != std::string::npos)
            kind = TaskKind::GC;
        auto parsed = parse_perception(prefix_perception, kind);
        std::string answer = "unsolvable";
        if (parsed) {
            int n = 0;
            if (kind == TaskKind::GC) {
                n = content ? content->node_count
                            : infer_node_count(req, std::get<EdgeList>(*parsed.value).edges);
            }
            answer = perception_answer(*parsed.value, n);
        }
        if (!(u_r < cfg_.q_r_text)) answer = corrupt_answer(kind, answer);
        return {*req.response_prefix + continuation(answer), std::nullopt};
    }

    if (image) {
        std::lock_guard<std::mutex> lock(mutex_);
        ImagePlans* plans = nullptr;
        try {
            plans = &plans_for(*image);
        } catch (const std::exception& e) {
            return {std::nullopt,
                    PolicyFailure{PolicyFailure::Kind::Protocol, e.what()}};
        }
        bool perception_ok = u_p < cfg_.q_p;
        bool reason_ok = u_r < cfg_.q_r;

        std::string perception_text = plans->canonical_text;
        std::string answer_text = plans->true_answer_text;
        if (!perception_ok) {
            if (const CorruptionPlan* plan = pick_corruption(*plans, rng)) {
                perception_text = plan->perception_text;
                answer_text = plan->answer_text;
            } else {
                // No provably safe single-element corruption exists; fall back
                // to an off-by-one-node edge so perception still reads wrong.
                ++unsafe_corruptions_;
                perception_text = plans->canonical_text + ";(0,1)";
            }
        }
        if (!reason_ok) answer_text = corrupt_answer(plans->content.kind, answer_text);
        return {wrap_output(perception_text, answer_text), std::nullopt};
    }

    // Text-only secondary rollout: reason from the perception block provided
    // in the text parts. Instruction text may itself quote the output format,
    // so parts are scanned back to front and the first block that actually
    // parses wins.
    std::string given_perception;
    TaskKind kind = TaskKind::Sudoku;
    Parse<CanonicalPerception> parsed{std::nullopt, "no perception part"};
    for (auto it = req.parts.rbegin(); it != req.parts.rend() && !parsed; ++it) {
        if (it->kind != PromptPart::Kind::Text) continue;
        auto blocks = extract_blocks(it->data);
        if (!blocks.perception) continue;
        if (given_perception.empty()) given_perception = *blocks.perception;
        TaskKind guess = blocks.perception->find("edges:") != std::string::npos
                             ? TaskKind::GC
                             : TaskKind::Sudoku;
        if (auto candidate = parse_perception(*blocks.perception, guess)) {
            given_perception = *blocks.perception;
            kind = guess;
            parsed = std::move(candidate);
        }
    }
    std::string answer = "unsolvable";
    if (parsed) {
        int n = kind == TaskKind::GC
                    ? infer_node_count(req, std::get<EdgeList>(*parsed.value).edges)
                    : 0;
        answer = perception_answer(*parsed.value, n);
    }
    if (!(u_r < cfg_.q_r_text)) answer = corrupt_answer(kind, answer);
    return {wrap_output(given_perception, answer), std::nullopt};
}

}  // namespace prdiag
