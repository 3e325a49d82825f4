#include "prdiag/output.hpp"

#include <cctype>

namespace prdiag {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// First <tag>...</tag> at or after `from`; advances `from` past the block.
std::optional<std::string> find_block(const std::string& raw, const char* tag,
                                      std::size_t& from) {
    const std::string open = std::string("<") + tag + ">";
    const std::string close = std::string("</") + tag + ">";
    std::size_t begin = raw.find(open, from);
    if (begin == std::string::npos) return std::nullopt;
    std::size_t body = begin + open.size();
    std::size_t end = raw.find(close, body);
    if (end == std::string::npos) return std::nullopt;
    from = end + close.size();
    return raw.substr(body, end - body);
}

}  // namespace

RawBlocks extract_blocks(const std::string& raw) {
    RawBlocks blocks;
    std::size_t pos = 0;
    blocks.perception = find_block(raw, "perception", pos);
    std::size_t after_perception = blocks.perception ? pos : 0;

    std::size_t think_pos = after_perception;
    blocks.think = find_block(raw, "think", think_pos);

    std::size_t answer_pos = blocks.think ? think_pos : after_perception;
    blocks.answer = find_block(raw, "answer", answer_pos);
    return blocks;
}

Answer parse_answer(const std::string& text, TaskKind kind) {
    std::string body = trim(text);
    if (body.empty()) return Unparsed{};

    if (kind == TaskKind::Sudoku) {
        auto parsed = parse_perception(body, TaskKind::Sudoku);
        if (!parsed) return Unparsed{};
        const auto& grid = std::get<GivensGrid>(*parsed.value).cells;
        for (const auto& row : grid)
            for (auto d : row)
                if (d == 0) return Unparsed{};  // answers must be complete
        return GridAnswer{grid};
    }

    ColoringAnswer answer;
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < body.size() && std::isspace(static_cast<unsigned char>(body[pos]))) ++pos;
    };
    auto read_int = [&](int& out) {
        skip_ws();
        std::size_t start = pos;
        while (pos < body.size() && std::isdigit(static_cast<unsigned char>(body[pos]))) ++pos;
        if (pos == start || pos - start > 6) return false;
        out = std::stoi(body.substr(start, pos - start));
        return true;
    };
    while (pos < body.size()) {
        int node = 0, color = 0;
        if (!read_int(node)) return Unparsed{};
        skip_ws();
        if (pos >= body.size() || body[pos] != ':') return Unparsed{};
        ++pos;
        if (!read_int(color)) return Unparsed{};
        if (answer.colors.count(node)) return Unparsed{};  // duplicate assignment
        answer.colors[node] = color;
        skip_ws();
        if (pos < body.size()) {
            if (body[pos] != ',') return Unparsed{};
            ++pos;
        }
    }
    if (answer.colors.empty()) return Unparsed{};
    return answer;
}

Parse<StructuredOutput> parse_output(const std::string& raw, TaskKind kind) {
    RawBlocks blocks = extract_blocks(raw);
    if (!blocks.perception) return {std::nullopt, "perception missing"};
    if (!blocks.answer) return {std::nullopt, "answer missing"};
    StructuredOutput out;
    out.perception_text = trim(*blocks.perception);
    out.reasoning_text = blocks.think ? trim(*blocks.think) : std::string{};
    out.answer = parse_answer(*blocks.answer, kind);
    return {std::move(out), {}};
}

}  // namespace prdiag
