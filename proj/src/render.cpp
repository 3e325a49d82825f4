#include "prdiag/render.hpp"

#include <cmath>
#include <cstdio>

namespace prdiag {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt2(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

}  // namespace

std::string render_graph_svg(const GraphInstance& g) {
    const double size = 512.0, cx = size / 2, cy = size / 2, radius = 200.0;
    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"512\" height=\"512\" "
           "viewBox=\"0 0 512 512\" data-task=\"gc\" data-nodes=\"" +
           std::to_string(g.node_count) + "\">\n";
    svg += "<rect width=\"512\" height=\"512\" fill=\"white\"/>\n";

    std::vector<std::pair<double, double>> pos(static_cast<std::size_t>(g.node_count));
    for (int i = 0; i < g.node_count; ++i) {
        double angle = 2 * kPi * i / g.node_count - kPi / 2;
        pos[static_cast<std::size_t>(i)] = {cx + radius * std::cos(angle),
                                            cy + radius * std::sin(angle)};
    }
    for (const auto& [u, v] : g.edges) {
        const auto& [x1, y1] = pos[static_cast<std::size_t>(u)];
        const auto& [x2, y2] = pos[static_cast<std::size_t>(v)];
        svg += "<line class=\"edge\" data-edge=\"" + std::to_string(u) + "," +
               std::to_string(v) + "\" x1=\"" + fmt2(x1) + "\" y1=\"" + fmt2(y1) +
               "\" x2=\"" + fmt2(x2) + "\" y2=\"" + fmt2(y2) +
               "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    }
    for (int i = 0; i < g.node_count; ++i) {
        const auto& [x, y] = pos[static_cast<std::size_t>(i)];
        svg += "<g class=\"node\" data-node=\"" + std::to_string(i) + "\">";
        svg += "<circle cx=\"" + fmt2(x) + "\" cy=\"" + fmt2(y) +
               "\" r=\"18\" fill=\"white\" stroke=\"black\" stroke-width=\"2\"/>";
        svg += "<text x=\"" + fmt2(x) + "\" y=\"" + fmt2(y + 6) +
               "\" font-size=\"18\" text-anchor=\"middle\" font-family=\"monospace\">" +
               std::to_string(i) + "</text>";
        svg += "</g>\n";
    }
    svg += "</svg>\n";
    return svg;
}

std::string render_sudoku_svg(const SudokuInstance& s) {
    const double cell = 48.0, origin = 16.0, span = cell * 9;
    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"464\" height=\"464\" "
           "viewBox=\"0 0 464 464\" data-task=\"sudoku\">\n";
    svg += "<rect width=\"464\" height=\"464\" fill=\"white\"/>\n";
    for (int i = 0; i <= 9; ++i) {
        double w = (i % 3 == 0) ? 3.0 : 1.0;  // heavy 3x3 borders
        double o = origin + cell * i;
        svg += "<line x1=\"" + fmt2(origin) + "\" y1=\"" + fmt2(o) + "\" x2=\"" +
               fmt2(origin + span) + "\" y2=\"" + fmt2(o) +
               "\" stroke=\"black\" stroke-width=\"" + fmt2(w) + "\"/>\n";
        svg += "<line x1=\"" + fmt2(o) + "\" y1=\"" + fmt2(origin) + "\" x2=\"" + fmt2(o) +
               "\" y2=\"" + fmt2(origin + span) + "\" stroke=\"black\" stroke-width=\"" +
               fmt2(w) + "\"/>\n";
    }
    for (int r = 0; r < 9; ++r)
        for (int c = 0; c < 9; ++c) {
            int d = s.givens[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            if (d == 0) continue;
            double x = origin + cell * c + cell / 2;
            double y = origin + cell * r + cell / 2 + 10;
            svg += "<text class=\"given\" data-cell=\"" + std::to_string(r) + "," +
                   std::to_string(c) + "," + std::to_string(d) + "\" x=\"" + fmt2(x) +
                   "\" y=\"" + fmt2(y) +
                   "\" font-size=\"28\" text-anchor=\"middle\" font-family=\"monospace\">" +
                   std::to_string(d) + "</text>\n";
        }
    svg += "</svg>\n";
    return svg;
}

namespace {

// Scans for every occurrence of `data-<name>="..."` and returns the values.
std::vector<std::string> attr_values(const std::string& svg, const std::string& name) {
    std::vector<std::string> out;
    const std::string needle = "data-" + name + "=\"";
    std::size_t pos = 0;
    while ((pos = svg.find(needle, pos)) != std::string::npos) {
        pos += needle.size();
        std::size_t end = svg.find('"', pos);
        if (end == std::string::npos) break;
        out.push_back(svg.substr(pos, end - pos));
        pos = end + 1;
    }
    return out;
}

}  // namespace

std::optional<ImageContent> read_image_content(const std::string& svg) {
    auto tasks = attr_values(svg, "task");
    if (tasks.empty()) return std::nullopt;
    ImageContent content;
    if (tasks.front() == "gc") {
        content.kind = TaskKind::GC;
        auto nodes = attr_values(svg, "nodes");
        if (nodes.empty()) return std::nullopt;
        content.node_count = std::stoi(nodes.front());
        for (const auto& pair : attr_values(svg, "edge")) {
            auto comma = pair.find(',');
            if (comma == std::string::npos) return std::nullopt;
            content.edges.emplace_back(std::stoi(pair.substr(0, comma)),
                                       std::stoi(pair.substr(comma + 1)));
        }
        content.edges = normalize_edges(std::move(content.edges), content.node_count);
        return content;
    }
    if (tasks.front() == "sudoku") {
        content.kind = TaskKind::Sudoku;
        for (const auto& triple : attr_values(svg, "cell")) {
            int r = 0, c = 0, d = 0;
            if (std::sscanf(triple.c_str(), "%d,%d,%d", &r, &c, &d) != 3) return std::nullopt;
            if (r < 0 || r > 8 || c < 0 || c > 8 || d < 1 || d > 9) return std::nullopt;
            content.givens[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
                static_cast<std::uint8_t>(d);
        }
        return content;
    }
    return std::nullopt;
}

}  // namespace prdiag
