#include "prdiag/rewards.hpp"

#include <cctype>
#include <cstdio>

#include "prdiag/output.hpp"
#include "prdiag/rng.hpp"

namespace prdiag {

int outcome_reward(const MetricRecord& metrics) { return metrics.end_to_end; }

double augmented_reward(int outcome, double perception_signal, double alpha) {
    if (alpha < 0.0 || alpha > 1.0)
        throw std::invalid_argument("augmented_reward: alpha outside [0, 1]");
    return alpha * perception_signal + (1.0 - alpha) * outcome;
}

double self_reward(Policy& policy, const std::string& perception_text,
                   const TaskInstance& instance, int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("self_reward: rollout budget must be >= 1");
    int node_count = 0;
    if (const auto* g = std::get_if<GraphInstance>(&instance.payload)) node_count = g->node_count;

    double total = 0.0;
    for (int k = 0; k < n; ++k) {
        GenRequest req;
        req.parts.push_back({PromptPart::Kind::Text, instance.prompt_text});
        req.parts.push_back({PromptPart::Kind::Text,
                             "<perception>" + perception_text + "</perception>"});
        req.seed = mix_seed(seed, static_cast<std::uint64_t>(k));
        GenResult result = policy.generate(req);
        if (!result.ok())
            throw RewardError("self_reward rollout " + std::to_string(k) + ": " +
                              result.failure->message);
        RawBlocks blocks = extract_blocks(*result.text);
        Answer answer = Unparsed{};
        if (blocks.answer) answer = parse_answer(*blocks.answer, instance.kind);
        total += answer_accuracy(answer, instance.canonical, node_count);
    }
    return total / n;
}

Parse<std::string> StubTeacher::describe(const std::string& image_svg, TaskKind kind,
                                         const std::string&, std::uint64_t seed) {
    auto content = read_image_content(image_svg);
    if (!content || content->kind != kind)
        return {std::nullopt, "teacher could not read the image"};

    CanonicalPerception truth = content->kind == TaskKind::GC
                                    ? CanonicalPerception{EdgeList{content->edges}}
                                    : CanonicalPerception{GivensGrid{content->givens}};
    Rng rng(mix_seed(seed_, seed));
    if (!rng.bernoulli(corruption_)) return {serialize_perception(truth), {}};

    // Corrupt one element; only textual inequality with the truth matters.
    if (content->kind == TaskKind::GC) {
        EdgeList edges = std::get<EdgeList>(truth);
        if (!edges.edges.empty()) {
            std::size_t victim = rng.uniform_below(edges.edges.size());
            edges.edges.erase(edges.edges.begin() + static_cast<std::ptrdiff_t>(victim));
        } else {
            edges.edges.emplace_back(0, 1);
        }
        return {serialize_perception(CanonicalPerception{edges}), {}};
    }
    GivensGrid grid = std::get<GivensGrid>(truth);
    std::vector<int> cells;
    for (int i = 0; i < 81; ++i)
        if (grid.cells[static_cast<std::size_t>(i / 9)][static_cast<std::size_t>(i % 9)] != 0)
            cells.push_back(i);
    if (!cells.empty()) {
        int cell = cells[rng.uniform_below(cells.size())];
        auto& slot = grid.cells[static_cast<std::size_t>(cell / 9)][static_cast<std::size_t>(cell % 9)];
        slot = static_cast<std::uint8_t>(slot == 9 ? 1 : slot + 1);
    } else {
        grid.cells[0][0] = 1;
    }
    return {serialize_perception(CanonicalPerception{grid}), {}};
}

std::string StubTeacher::tag() const {
    if (corruption_ == 0.0) return "teacher-stub(oracle)";
    char buf[48];
    std::snprintf(buf, sizeof buf, "teacher-stub(noise=%g)", corruption_);
    return buf;
}

Parse<int> teacher_reward(TeacherClient& teacher, const TaskInstance& instance,
                          const Parse<CanonicalPerception>& model_perception,
                          std::uint64_t seed) {
    Parse<std::string> described = teacher.describe(
        instance.image_svg, instance.kind,
        "Transcribe the task content of this image in canonical form.", seed);
    if (!described) return {std::nullopt, "teacher failure: " + described.error};
    auto teacher_perception = parse_perception(*described.value, instance.kind);
    if (!teacher_perception)
        return {std::nullopt, "teacher perception unparseable: " + teacher_perception.error};
    if (!model_perception) return {0, {}};
    int agree = serialize_perception(*model_perception.value) ==
                        serialize_perception(*teacher_perception.value)
                    ? 1
                    : 0;
    return {agree, {}};
}

namespace {

std::vector<std::string> content_symbols(const ImageContent& content) {
    std::vector<std::string> symbols;
    if (content.kind == TaskKind::GC) {
        for (const auto& [u, v] : content.edges)
            symbols.push_back("e:" + std::to_string(u) + "," + std::to_string(v));
    } else {
        for (int r = 0; r < 9; ++r)
            for (int c = 0; c < 9; ++c) {
                int d = content.givens[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
                if (d != 0)
                    symbols.push_back("c:" + std::to_string(r) + "," + std::to_string(c) +
                                      "," + std::to_string(d));
            }
    }
    return symbols;
}

std::vector<std::string> text_symbols(const std::string& text, TaskKind kind) {
    if (auto parsed = parse_perception(text, kind)) {
        ImageContent content;
        content.kind = kind;
        if (kind == TaskKind::GC)
            content.edges = std::get<EdgeList>(*parsed.value).edges;
        else
            content.givens = std::get<GivensGrid>(*parsed.value).cells;
        return content_symbols(content);
    }
    // Unparseable text: hash raw whitespace-delimited tokens instead.
    std::vector<std::string> symbols;
    std::string token;
    for (char ch : text + " ") {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!token.empty()) symbols.push_back("t:" + token);
            token.clear();
        } else {
            token += ch;
        }
    }
    return symbols;
}

}  // namespace

Eigen::VectorXd HashingEmbedder::embed_symbols(const std::vector<std::string>& symbols) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
    for (const auto& s : symbols) {
        std::uint64_t h = fnv1a(s.data(), s.size());
        int idx = static_cast<int>(h % static_cast<std::uint64_t>(dim_));
        double sign = (h >> 63) ? -1.0 : 1.0;
        v[idx] += sign;
    }
    return v;
}

Eigen::VectorXd HashingEmbedder::embed_image(const std::string& image_svg) {
    auto content = read_image_content(image_svg);
    if (!content) return Eigen::VectorXd::Zero(dim_);
    return embed_symbols(content_symbols(*content));
}

Eigen::VectorXd HashingEmbedder::embed_text(const std::string& text, TaskKind kind) {
    return embed_symbols(text_symbols(text, kind));
}

SimilarityReward similarity_reward(Embedder& embedder, const TaskInstance& instance,
                                   const std::string& perception_text) {
    Eigen::VectorXd a = embedder.embed_image(instance.image_svg);
    Eigen::VectorXd b = embedder.embed_text(perception_text, instance.kind);
    auto cos = cosine_similarity<double>(a, b);
    return {cos.degenerate ? 0.0 : cos.r, cos.degenerate};
}

CouplingReport coupling_diagnostic(const ArrayX<double>& reward,
                                   const ArrayX<double>& perception_bits,
                                   const ArrayX<double>& reasoning_bits) {
    if (reward.size() < 2)
        throw std::invalid_argument("coupling_diagnostic: need at least 2 rollouts");
    CouplingReport report;
    report.reward_perception = pearson<double>(reward, perception_bits);
    report.reward_reasoning = pearson<double>(reward, reasoning_bits);
    report.sample_count = reward.size();
    return report;
}

Correlation<double> surrogate_quality(const ArrayX<double>& surrogate_values,
                                      const ArrayX<double>& perception_bits) {
    return pearson<double>(surrogate_values, perception_bits);
}

}  // namespace prdiag
