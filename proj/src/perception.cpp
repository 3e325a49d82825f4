#include "prdiag/perception.hpp"

#include <algorithm>
#include <cctype>

namespace prdiag {

std::string to_string(TaskKind kind) {
    return kind == TaskKind::GC ? "gc" : "sudoku";
}

std::optional<TaskKind> task_kind_from_string(const std::string& s) {
    if (s == "gc") return TaskKind::GC;
    if (s == "sudoku") return TaskKind::Sudoku;
    return std::nullopt;
}

TaskKind kind_of(const CanonicalPerception& p) {
    return std::holds_alternative<EdgeList>(p) ? TaskKind::GC : TaskKind::Sudoku;
}

std::string serialize_perception(const CanonicalPerception& p) {
    if (const auto* el = std::get_if<EdgeList>(&p)) {
        std::string out = "edges:";
        bool first = true;
        for (const auto& [u, v] : el->edges) {
            out += first ? " " : ";";
            out += "(" + std::to_string(u) + "," + std::to_string(v) + ")";
            first = false;
        }
        return out;
    }
    const auto& grid = std::get<GivensGrid>(p).cells;
    std::string out;
    for (int r = 0; r < 9; ++r) {
        if (r > 0) out += '\n';
        for (int c = 0; c < 9; ++c) {
            std::uint8_t d = grid[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            out += d == 0 ? '.' : static_cast<char>('0' + d);
        }
    }
    return out;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool read_int(const std::string& s, std::size_t& pos, int& out) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    std::size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos == start || pos - start > 6) return false;
    out = std::stoi(s.substr(start, pos - start));
    return true;
}

bool expect_char(const std::string& s, std::size_t& pos, char c) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos >= s.size() || s[pos] != c) return false;
    ++pos;
    return true;
}

Parse<CanonicalPerception> parse_edge_list(const std::string& text) {
    std::string body = trim(text);
    if (body.rfind("edges:", 0) != 0)
        return {std::nullopt, "expected 'edges:' prefix"};
    body = trim(body.substr(6));

    std::vector<Edge> edges;
    std::size_t pos = 0;
    while (pos < body.size()) {
        int u = 0, v = 0;
        if (!expect_char(body, pos, '(')) return {std::nullopt, "expected '('"};
        if (!read_int(body, pos, u)) return {std::nullopt, "expected node index"};
        if (!expect_char(body, pos, ',')) return {std::nullopt, "expected ','"};
        if (!read_int(body, pos, v)) return {std::nullopt, "expected node index"};
        if (!expect_char(body, pos, ')')) return {std::nullopt, "expected ')'"};
        if (u == v) return {std::nullopt, "self-loop edge"};
        if (u > v) std::swap(u, v);
        edges.emplace_back(u, v);
        while (pos < body.size() && std::isspace(static_cast<unsigned char>(body[pos]))) ++pos;
        if (pos < body.size()) {
            if (body[pos] != ';') return {std::nullopt, "expected ';' between edges"};
            ++pos;
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return {CanonicalPerception{EdgeList{std::move(edges)}}, {}};
}

Parse<CanonicalPerception> parse_grid(const std::string& text) {
    std::vector<std::string> lines;
    std::string current;
    for (char ch : text) {
        if (ch == '\n') {
            lines.push_back(current);
            current.clear();
        } else {
            current += ch;
        }
    }
    lines.push_back(current);

    GivensGrid grid;
    int row = 0;
    for (const auto& raw : lines) {
        std::string line = trim(raw);
        if (line.empty()) continue;
        if (row >= 9) return {std::nullopt, "more than 9 grid lines"};
        if (line.size() != 9)
            return {std::nullopt, "grid line " + std::to_string(row + 1) + " is not 9 characters"};
        for (int c = 0; c < 9; ++c) {
            char ch = line[static_cast<std::size_t>(c)];
            if (ch == '.' || ch == '0')
                grid.cells[static_cast<std::size_t>(row)][static_cast<std::size_t>(c)] = 0;
            else if (ch >= '1' && ch <= '9')
                grid.cells[static_cast<std::size_t>(row)][static_cast<std::size_t>(c)] =
                    static_cast<std::uint8_t>(ch - '0');
            else
                return {std::nullopt, std::string("invalid grid character '") + ch + "'"};
        }
        ++row;
    }
    if (row != 9) return {std::nullopt, "expected 9 grid lines, got " + std::to_string(row)};
    return {CanonicalPerception{grid}, {}};
}

}  // namespace

Parse<CanonicalPerception> parse_perception(const std::string& text, TaskKind kind) {
    return kind == TaskKind::GC ? parse_edge_list(text) : parse_grid(text);
}

}  // namespace prdiag
