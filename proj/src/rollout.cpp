#include "prdiag/rollout.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "prdiag/output.hpp"
#include "prdiag/rng.hpp"

namespace prdiag {

using ordered_json = nlohmann::ordered_json;

std::uint64_t sample_seed(std::uint64_t run_seed, int instance_index, int sample_index) {
    return mix_seed(run_seed, static_cast<std::uint64_t>(instance_index),
                    static_cast<std::uint64_t>(sample_index));
}

namespace {

std::string config_hash(const std::string& policy_tag, const std::string& dataset_path,
                        const RolloutOptions& options, const char* protocol) {
    ordered_json j;
    j["protocol"] = protocol;
    j["policy_tag"] = policy_tag;
    j["dataset_path"] = dataset_path;
    j["samples_per_instance"] = options.samples_per_instance;
    j["alpha"] = options.reward.alpha;
    j["surrogate"] = static_cast<int>(options.reward.surrogate);
    j["self_reward_n"] = options.reward.self_reward_n;
    j["seed"] = options.seed;
    j["log_tokens"] = options.log_tokens;
    std::string text = j.dump();
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(text.data(), text.size())));
    return buf;
}

const char* answer_kind_name(const Answer& answer) {
    if (std::holds_alternative<ColoringAnswer>(answer)) return "coloring";
    if (std::holds_alternative<GridAnswer>(answer)) return "grid";
    return "unparsed";
}

int whitespace_tokens(const std::string& text) {
    int count = 0;
    bool in_token = false;
    for (char ch : text) {
        bool space = std::isspace(static_cast<unsigned char>(ch)) != 0;
        if (!space && !in_token) ++count;
        in_token = !space;
    }
    return count;
}

// Synthetic per-token scalars; the objective identities hold for any values,
// so the stream only needs deterministic shapes.
TokenLog synthesize_tokens(const RawBlocks& blocks, std::uint64_t seed) {
    TokenLog log;
    log.p_len = std::max(1, blocks.perception ? whitespace_tokens(*blocks.perception) : 1);
    int think = blocks.think ? whitespace_tokens(*blocks.think) : 0;
    int answer = blocks.answer ? whitespace_tokens(*blocks.answer) : 0;
    log.r_len = std::max(1, think + answer);
    Rng rng(mix_seed(seed, 0x746f6b656e73ULL));
    for (int i = 0; i < log.p_len + log.r_len; ++i) {
        double u = rng.uniform_real();
        log.nll.push_back(3.0 * u * u);
        log.ratio.push_back(0.7 + 0.6 * rng.uniform_real());
    }
    return log;
}

GenResult generate_with_retries(Policy& policy, const GenRequest& req, int retries) {
    GenResult result = policy.generate(req);
    for (int attempt = 0; attempt < retries && !result.ok(); ++attempt)
        result = policy.generate(req);
    return result;
}

// Fills metrics, parsed summary, rewards and surrogates for one raw output.
RolloutRecord score_record(const TaskInstance& inst, const std::string& raw,
                           Policy& policy, const RolloutOptions& options,
                           std::uint64_t seed) {
    RolloutRecord rec;
    rec.task_id = inst.id;
    rec.raw_output = raw;
    rec.seed = seed;
    rec.metrics = score(raw, inst);

    RawBlocks blocks = extract_blocks(raw);
    rec.perception_text = blocks.perception ? *blocks.perception : std::string{};
    rec.reasoning_text = blocks.think ? *blocks.think : std::string{};
    Answer answer = Unparsed{};
    if (blocks.answer) answer = parse_answer(*blocks.answer, inst.kind);
    rec.answer_kind = answer_kind_name(answer);

    rec.rewards.outcome = outcome_reward(rec.metrics);

    const RewardConfig& cfg = options.reward;
    std::optional<double> signal;
    switch (cfg.surrogate) {
        case SurrogateKind::None:
            signal = static_cast<double>(rec.metrics.perception);
            break;
        case SurrogateKind::Similarity: {
            if (!options.embedder)
                throw RolloutError("similarity surrogate requires an embedder");
            auto sim = similarity_reward(*options.embedder, inst, rec.perception_text);
            signal = sim.value;
            rec.surrogates["similarity"] = sim.value;
            break;
        }
        case SurrogateKind::SelfReward: {
            Policy* secondary = options.self_policy ? options.self_policy : &policy;
            double value = self_reward(*secondary, rec.perception_text, inst,
                                       cfg.self_reward_n, mix_seed(seed, 0x5e1fULL));
            signal = value;
            rec.surrogates["self:" + std::to_string(cfg.self_reward_n)] = value;
            break;
        }
        case SurrogateKind::Teacher: {
            if (!options.teacher)
                throw RolloutError("teacher surrogate requires a teacher client");
            Parse<CanonicalPerception> parsed{std::nullopt, "perception missing"};
            if (blocks.perception) parsed = parse_perception(*blocks.perception, inst.kind);
            auto graded = teacher_reward(*options.teacher, inst, parsed, seed);
            if (graded) {
                signal = static_cast<double>(*graded.value);
                rec.surrogates["teacher"] = *signal;
            } else if (cfg.teacher_failure_zero) {
                signal = 0.0;
                rec.surrogates["teacher"] = 0.0;
            }
            // otherwise: skip — no perception signal, no augmented reward
            break;
        }
    }
    rec.rewards.perception_signal = signal;
    if (signal)
        rec.rewards.augmented = augmented_reward(rec.rewards.outcome, *signal, cfg.alpha);

    if (options.log_tokens) rec.tokens = synthesize_tokens(blocks, seed);
    return rec;
}

std::size_t run_protocol(Policy& policy, const std::vector<TaskInstance>& dataset,
                         const std::string& dataset_path, const RolloutOptions& options,
                         const std::string& out_path, bool counterfactual) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw RolloutError("cannot open rollout file for writing: " + out_path);

    const char* protocol = counterfactual ? "counterfactual" : "rollout";
    RolloutHeader header{config_hash(policy.tag(), dataset_path, options, protocol),
                         options.seed, dataset_path, policy.tag()};
    ordered_json hj;
    hj["config_hash"] = header.config_hash;
    hj["seed"] = header.seed;
    hj["dataset_path"] = header.dataset_path;
    hj["policy_tag"] = header.policy_tag;
    out << hj.dump() << '\n';

    std::size_t written = 0;
    for (int i = 0; i < static_cast<int>(dataset.size()); ++i) {
        const TaskInstance& inst = dataset[static_cast<std::size_t>(i)];
        for (int s = 0; s < options.samples_per_instance; ++s) {
            std::uint64_t seed = sample_seed(options.seed, i, s);
            GenRequest req;
            if (!counterfactual || !options.counterfactual_text_only)
                req.parts.push_back({PromptPart::Kind::Image, inst.image_svg});
            req.parts.push_back({PromptPart::Kind::Text, inst.prompt_text});
            if (counterfactual)
                req.response_prefix = "<perception>" + serialize_perception(inst.canonical) +
                                      "</perception>";
            req.seed = seed;

            GenResult result = generate_with_retries(policy, req, options.retries);
            RolloutRecord rec;
            if (result.ok()) {
                rec = score_record(inst, *result.text, policy, options, seed);
                if (counterfactual)
                    rec.metrics.counterfactual_reasoning = rec.metrics.end_to_end;
            } else {
                rec.task_id = inst.id;
                rec.seed = seed;
                rec.error = result.failure->message;
            }
            rec.policy_tag = policy.tag();
            out << rollout_record_to_json_line(rec) << '\n';
            ++written;
        }
    }
    out.flush();
    if (!out) throw RolloutError("rollout file write failed: " + out_path);
    return written;
}

}  // namespace

std::size_t run_rollouts(Policy& policy, const std::vector<TaskInstance>& dataset,
                         const std::string& dataset_path, const RolloutOptions& options,
                         const std::string& out_path) {
    return run_protocol(policy, dataset, dataset_path, options, out_path, false);
}

std::size_t counterfactual_eval(Policy& policy, const std::vector<TaskInstance>& dataset,
                                const std::string& dataset_path,
                                const RolloutOptions& options, const std::string& out_path) {
    return run_protocol(policy, dataset, dataset_path, options, out_path, true);
}

std::string rollout_record_to_json_line(const RolloutRecord& record) {
    ordered_json j;
    j["task_id"] = record.task_id;
    if (record.error) {
        j["error"] = *record.error;
        j["policy_tag"] = record.policy_tag;
        j["seed"] = record.seed;
        return j.dump();
    }
    j["raw_output"] = record.raw_output;
    ordered_json parsed;
    parsed["perception_text"] = record.perception_text;
    parsed["reasoning_text"] = record.reasoning_text;
    parsed["answer_kind"] = record.answer_kind;
    j["parsed"] = parsed;
    ordered_json metrics;
    metrics["end_to_end"] = record.metrics.end_to_end;
    metrics["perception"] = record.metrics.perception;
    metrics["conditional_reasoning"] = record.metrics.conditional_reasoning;
    if (record.metrics.counterfactual_reasoning)
        metrics["counterfactual_reasoning"] = *record.metrics.counterfactual_reasoning;
    j["metrics"] = metrics;
    ordered_json rewards;
    rewards["outcome"] = record.rewards.outcome;
    if (record.rewards.perception_signal)
        rewards["perception_signal"] = *record.rewards.perception_signal;
    else
        rewards["perception_signal"] = nullptr;
    if (record.rewards.augmented)
        rewards["augmented"] = *record.rewards.augmented;
    else
        rewards["augmented"] = nullptr;
    if (!record.surrogates.empty()) {
        ordered_json surrogates;
        for (const auto& [name, value] : record.surrogates) surrogates[name] = value;
        rewards["surrogates"] = surrogates;
    }
    j["rewards"] = rewards;
    if (record.tokens) {
        ordered_json tokens;
        tokens["nll"] = record.tokens->nll;
        tokens["ratio"] = record.tokens->ratio;
        tokens["p_len"] = record.tokens->p_len;
        tokens["r_len"] = record.tokens->r_len;
        j["tokens"] = tokens;
    }
    j["policy_tag"] = record.policy_tag;
    j["seed"] = record.seed;
    return j.dump();
}

RolloutRecord rollout_record_from_json_line(const std::string& line) {
    ordered_json j = ordered_json::parse(line);
    RolloutRecord rec;
    rec.task_id = j.at("task_id").get<std::string>();
    rec.policy_tag = j.value("policy_tag", std::string{});
    rec.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("error")) {
        rec.error = j["error"].get<std::string>();
        return rec;
    }
    rec.raw_output = j.at("raw_output").get<std::string>();
    const auto& parsed = j.at("parsed");
    rec.perception_text = parsed.at("perception_text").get<std::string>();
    rec.reasoning_text = parsed.at("reasoning_text").get<std::string>();
    rec.answer_kind = parsed.at("answer_kind").get<std::string>();
    const auto& metrics = j.at("metrics");
    rec.metrics.end_to_end = metrics.at("end_to_end").get<int>();
    rec.metrics.perception = metrics.at("perception").get<int>();
    rec.metrics.conditional_reasoning = metrics.at("conditional_reasoning").get<int>();
    if (metrics.contains("counterfactual_reasoning"))
        rec.metrics.counterfactual_reasoning = metrics["counterfactual_reasoning"].get<int>();
    const auto& rewards = j.at("rewards");
    rec.rewards.outcome = rewards.at("outcome").get<int>();
    if (!rewards.at("perception_signal").is_null())
        rec.rewards.perception_signal = rewards["perception_signal"].get<double>();
    if (!rewards.at("augmented").is_null())
        rec.rewards.augmented = rewards["augmented"].get<double>();
    if (rewards.contains("surrogates"))
        for (const auto& [name, value] : rewards["surrogates"].items())
            rec.surrogates[name] = value.get<double>();
    if (j.contains("tokens")) {
        TokenLog log;
        log.nll = j["tokens"].at("nll").get<std::vector<double>>();
        log.ratio = j["tokens"].at("ratio").get<std::vector<double>>();
        log.p_len = j["tokens"].at("p_len").get<int>();
        log.r_len = j["tokens"].at("r_len").get<int>();
        rec.tokens = std::move(log);
    }
    return rec;
}

RolloutFile read_rollout_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RolloutError("cannot open rollout file: " + path);
    RolloutFile file;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (!have_header) {
            try {
                ordered_json j = ordered_json::parse(line);
                file.header.config_hash = j.at("config_hash").get<std::string>();
                file.header.seed = j.at("seed").get<std::uint64_t>();
                file.header.dataset_path = j.at("dataset_path").get<std::string>();
                file.header.policy_tag = j.at("policy_tag").get<std::string>();
                have_header = true;
                continue;
            } catch (const std::exception& e) {
                throw RolloutError("header line: " + std::string(e.what()));
            }
        }
        try {
            file.records.push_back(rollout_record_from_json_line(line));
        } catch (const std::exception& e) {
            file.bad_lines.emplace_back(line_no, e.what());
        }
    }
    if (!have_header) throw RolloutError("rollout file has no header line: " + path);
    return file;
}

}  // namespace prdiag
