#include "prdiag/dataset.hpp"

#include <fstream>

#include <json.hpp>

namespace prdiag {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json grid_to_json(const Grid9& g, bool dots_for_blanks) {
    ordered_json rows = ordered_json::array();
    for (int r = 0; r < 9; ++r) {
        std::string line;
        for (int c = 0; c < 9; ++c) {
            int d = g[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            line += (d == 0 && dots_for_blanks) ? '.' : static_cast<char>('0' + d);
        }
        rows.push_back(line);
    }
    return rows;
}

Grid9 grid_from_json(const ordered_json& rows) {
    if (!rows.is_array() || rows.size() != 9) throw DatasetError("grid must have 9 rows");
    Grid9 g{};
    for (int r = 0; r < 9; ++r) {
        const std::string line = rows[static_cast<std::size_t>(r)].get<std::string>();
        if (line.size() != 9) throw DatasetError("grid row must have 9 characters");
        for (int c = 0; c < 9; ++c) {
            char ch = line[static_cast<std::size_t>(c)];
            if (ch == '.' || ch == '0')
                g[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = 0;
            else if (ch >= '1' && ch <= '9')
                g[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
                    static_cast<std::uint8_t>(ch - '0');
            else
                throw DatasetError("invalid grid character");
        }
    }
    return g;
}

}  // namespace

std::string instance_to_json_line(const TaskInstance& inst) {
    ordered_json j;
    j["id"] = inst.id;
    j["task_kind"] = to_string(inst.kind);
    j["prompt_text"] = inst.prompt_text;
    j["image"] = inst.image_svg;
    j["canonical_perception"] = serialize_perception(inst.canonical);
    ordered_json payload;
    if (const auto* g = std::get_if<GraphInstance>(&inst.payload)) {
        payload["node_count"] = g->node_count;
        ordered_json edges = ordered_json::array();
        for (const auto& [u, v] : g->edges) edges.push_back({u, v});
        payload["edges"] = edges;
        payload["chromatic_number"] = g->chromatic_number;
        payload["seed"] = g->seed;
    } else {
        const auto& s = std::get<SudokuInstance>(inst.payload);
        payload["givens"] = grid_to_json(s.givens, true);
        payload["solution"] = grid_to_json(s.solution, false);
        payload["seed"] = s.seed;
    }
    j["payload"] = payload;
    j["seed"] = inst.seed;
    return j.dump();
}

TaskInstance instance_from_json_line(const std::string& line) {
    ordered_json j = ordered_json::parse(line);
    const std::string kind_str = j.at("task_kind").get<std::string>();
    auto kind = task_kind_from_string(kind_str);
    if (!kind) throw DatasetError("unknown task_kind: " + kind_str);

    TaskInstance inst;
    inst.id = j.at("id").get<std::string>();
    inst.kind = *kind;
    inst.prompt_text = j.at("prompt_text").get<std::string>();
    inst.image_svg = j.at("image").get<std::string>();
    inst.seed = j.at("seed").get<std::uint64_t>();

    const auto& payload = j.at("payload");
    if (*kind == TaskKind::GC) {
        GraphInstance g;
        g.node_count = payload.at("node_count").get<int>();
        for (const auto& e : payload.at("edges"))
            g.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
        g.chromatic_number = payload.at("chromatic_number").get<int>();
        g.seed = payload.at("seed").get<std::uint64_t>();
        inst.payload = std::move(g);
    } else {
        SudokuInstance s;
        s.givens = grid_from_json(payload.at("givens"));
        s.solution = grid_from_json(payload.at("solution"));
        s.seed = payload.at("seed").get<std::uint64_t>();
        inst.payload = std::move(s);
    }
    inst.canonical = canonical_of(inst.payload);

    const std::string stored = j.at("canonical_perception").get<std::string>();
    if (stored != serialize_perception(inst.canonical))
        throw DatasetError("canonical_perception does not match payload");
    return inst;
}

std::size_t write_dataset(const std::vector<TaskInstance>& instances, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DatasetError("cannot open for writing: " + path);
    for (const auto& inst : instances) out << instance_to_json_line(inst) << '\n';
    out.flush();
    if (!out) throw DatasetError("write failed: " + path);
    return instances.size();
}

std::vector<TaskInstance> read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError("cannot open for reading: " + path);
    std::vector<TaskInstance> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(instance_from_json_line(line));
        } catch (const std::exception& e) {
            throw DatasetError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace prdiag
