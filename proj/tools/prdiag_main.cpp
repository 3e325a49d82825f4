// Command-line front end: dataset generation, rollout collection, the
// counterfactual protocol, diagnostics and parameter sweeps.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "prdiag/dataset.hpp"
#include "prdiag/diagnose.hpp"
#include "prdiag/rng.hpp"
#include "prdiag/rollout.hpp"
#include "prdiag/wire.hpp"

namespace {

using prdiag::RewardConfig;
using prdiag::SurrogateKind;
using ordered_json = nlohmann::ordered_json;

struct NodeRange {
    int lo = 7;
    int hi = 9;
};

NodeRange parse_node_range(const std::string& s) {
    NodeRange range;
    auto dots = s.find("..");
    if (dots == std::string::npos) {
        range.lo = range.hi = std::stoi(s);
    } else {
        range.lo = std::stoi(s.substr(0, dots));
        range.hi = std::stoi(s.substr(dots + 2));
    }
    if (range.lo > range.hi) throw CLI::ValidationError("--nodes", "empty range");
    return range;
}

std::vector<std::string> split_csv(const std::string& csv) {
    std::vector<std::string> out;
    std::string item;
    for (char ch : csv + ",") {
        if (ch == ',') {
            if (!item.empty()) out.push_back(item);
            item.clear();
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            item += ch;
        }
    }
    return out;
}

SurrogateKind parse_surrogate(const std::string& s, int& self_n) {
    if (s == "none") return SurrogateKind::None;
    if (s == "similarity") return SurrogateKind::Similarity;
    if (s == "teacher") return SurrogateKind::Teacher;
    if (s.rfind("self:", 0) == 0) {
        self_n = std::stoi(s.substr(5));
        if (self_n < 1) throw CLI::ValidationError("--surrogate", "self budget must be >= 1");
        return SurrogateKind::SelfReward;
    }
    throw CLI::ValidationError("--surrogate", "expected none|similarity|self:N|teacher");
}

void write_json_file(const ordered_json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

struct PolicyOptions {
    std::string policy = "sim";
    double q_p = 1.0, q_r = 1.0, q_r_text = 1.0;
    std::string endpoint;
    int timeout_ms = 10000;
};

void add_policy_flags(CLI::App* cmd, PolicyOptions& opts) {
    cmd->add_option("--policy", opts.policy, "sim|endpoint")->default_val("sim");
    cmd->add_option("--qp", opts.q_p, "simulated perception success probability");
    cmd->add_option("--qr", opts.q_r, "simulated reasoning success probability");
    cmd->add_option("--qrt", opts.q_r_text, "simulated text-conditioned reasoning success");
    cmd->add_option("--endpoint", opts.endpoint, "external policy endpoint (cmd:<command>)");
    cmd->add_option("--timeout", opts.timeout_ms, "endpoint timeout in ms");
}

std::unique_ptr<prdiag::Policy> build_policy(const PolicyOptions& opts, std::uint64_t seed) {
    if (opts.policy == "sim") {
        prdiag::SimulatedPolicyConfig cfg;
        cfg.q_p = opts.q_p;
        cfg.q_r = opts.q_r;
        cfg.q_r_text = opts.q_r_text;
        cfg.seed = prdiag::mix_seed(seed, 0x706f6c696379ULL);
        return std::make_unique<prdiag::SimulatedPolicy>(cfg);
    }
    if (opts.policy == "endpoint") {
        if (opts.endpoint.empty())
            throw std::invalid_argument("--policy endpoint requires --endpoint");
        return std::make_unique<prdiag::ExternalPolicy>(opts.endpoint, opts.timeout_ms);
    }
    throw std::invalid_argument("unknown policy kind: " + opts.policy);
}

int run(int argc, char** argv) {
    CLI::App app{"perception/reasoning post-training diagnostics"};
    app.require_subcommand(1);

    // generate ---------------------------------------------------------
    auto* generate = app.add_subcommand("generate", "generate a task dataset");
    std::string gen_task = "gc", gen_out, gen_nodes = "7..9";
    int gen_count = 500, gen_givens = 30;
    std::uint64_t gen_seed = 0;
    double gen_edge_prob = 0.4;
    bool gen_unique = false;
    generate->add_option("--task", gen_task, "gc|sudoku")->required();
    generate->add_option("--count", gen_count, "instances to generate");
    generate->add_option("--seed", gen_seed, "generation seed");
    generate->add_option("--out", gen_out, "output directory")->required();
    generate->add_option("--nodes", gen_nodes, "node count or range, e.g. 8 or 7..9");
    generate->add_option("--edge-prob", gen_edge_prob, "edge probability");
    generate->add_option("--givens", gen_givens, "target given cells");
    generate->add_flag("--unique", gen_unique, "require unique sudoku completion");

    // rollout ----------------------------------------------------------
    auto* rollout = app.add_subcommand("rollout", "collect scored rollouts");
    std::string ro_dataset, ro_out, ro_surrogate = "none", ro_teacher_endpoint;
    PolicyOptions ro_policy;
    int ro_samples = 1, ro_retries = 2;
    double ro_alpha = 0.0, ro_teacher_noise = 0.0;
    std::uint64_t ro_seed = 0;
    bool ro_log_tokens = false, ro_teacher_zero = false;
    rollout->add_option("--dataset", ro_dataset)->required();
    add_policy_flags(rollout, ro_policy);
    rollout->add_option("--samples", ro_samples, "samples per instance");
    rollout->add_option("--alpha", ro_alpha, "perception-signal weight");
    rollout->add_option("--surrogate", ro_surrogate, "none|similarity|self:N|teacher");
    rollout->add_option("--teacher-endpoint", ro_teacher_endpoint,
                        "external teacher endpoint (cmd:<command>)");
    rollout->add_option("--teacher-noise", ro_teacher_noise,
                        "stub teacher corruption probability");
    rollout->add_flag("--teacher-zero", ro_teacher_zero,
                      "score failed teacher calls as 0 instead of skipping");
    rollout->add_option("--seed", ro_seed);
    rollout->add_option("--retries", ro_retries);
    rollout->add_flag("--log-tokens", ro_log_tokens, "log synthetic per-token scalars");
    rollout->add_option("--out", ro_out)->required();

    // counterfactual ----------------------------------------------------
    auto* counterfactual =
        app.add_subcommand("counterfactual", "prefix-conditioned reasoning protocol");
    std::string cf_dataset, cf_out;
    PolicyOptions cf_policy;
    int cf_samples = 1, cf_retries = 2;
    std::uint64_t cf_seed = 0;
    bool cf_text_only = false;
    counterfactual->add_option("--dataset", cf_dataset)->required();
    add_policy_flags(counterfactual, cf_policy);
    counterfactual->add_option("--samples", cf_samples);
    counterfactual->add_option("--seed", cf_seed);
    counterfactual->add_option("--retries", cf_retries);
    counterfactual->add_flag("--text-only", cf_text_only,
                             "omit the image when prefilling the oracle perception");
    counterfactual->add_option("--out", cf_out)->required();

    // diagnose ----------------------------------------------------------
    auto* diagnose_cmd = app.add_subcommand("diagnose", "aggregate a rollout file");
    std::string di_rollouts, di_out;
    diagnose_cmd->add_option("--rollouts", di_rollouts)->required();
    diagnose_cmd->add_option("--out", di_out)->required();

    // sweep -------------------------------------------------------------
    auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep over a rollout file");
    std::string sw_param, sw_values, sw_rollouts, sw_out;
    sweep_cmd->add_option("--param", sw_param, "alpha|lambda")->required();
    sweep_cmd->add_option("--values", sw_values, "comma-separated values")->required();
    sweep_cmd->add_option("--rollouts", sw_rollouts)->required();
    sweep_cmd->add_option("--out", sw_out)->required();

    CLI11_PARSE(app, argc, argv);

    if (generate->parsed()) {
        std::filesystem::create_directories(gen_out);
        std::vector<prdiag::TaskInstance> instances;
        std::string path;
        if (gen_task == "gc") {
            NodeRange range = parse_node_range(gen_nodes);
            prdiag::GcGenConfig cfg{range.lo, range.hi, gen_edge_prob};
            instances = prdiag::generate_gc_dataset(gen_count, gen_seed, cfg);
            path = (std::filesystem::path(gen_out) / "gc.jsonl").string();
        } else if (gen_task == "sudoku") {
            prdiag::SudokuGenConfig cfg{gen_givens, gen_unique};
            instances = prdiag::generate_sudoku_dataset(gen_count, gen_seed, cfg);
            path = (std::filesystem::path(gen_out) / "sudoku.jsonl").string();
        } else {
            throw std::invalid_argument("--task must be gc or sudoku");
        }
        std::size_t n = prdiag::write_dataset(instances, path);
        std::cout << "wrote " << n << " instances to " << path << "\n";
        return 0;
    }

    if (rollout->parsed()) {
        auto dataset = prdiag::read_dataset(ro_dataset);
        auto policy = build_policy(ro_policy, ro_seed);
        prdiag::RolloutOptions options;
        options.samples_per_instance = ro_samples;
        options.seed = ro_seed;
        options.retries = ro_retries;
        options.log_tokens = ro_log_tokens;
        options.reward.alpha = ro_alpha;
        options.reward.surrogate = parse_surrogate(ro_surrogate, options.reward.self_reward_n);
        options.reward.teacher_failure_zero = ro_teacher_zero;
        prdiag::HashingEmbedder embedder;
        options.embedder = &embedder;
        std::unique_ptr<prdiag::TeacherClient> teacher;
        if (options.reward.surrogate == SurrogateKind::Teacher) {
            if (!ro_teacher_endpoint.empty())
                teacher = std::make_unique<prdiag::ExternalTeacher>(ro_teacher_endpoint,
                                                                    ro_policy.timeout_ms);
            else
                teacher = std::make_unique<prdiag::StubTeacher>(
                    ro_teacher_noise, prdiag::mix_seed(ro_seed, 0x74656163686572ULL));
            options.teacher = teacher.get();
        }
        std::size_t n = prdiag::run_rollouts(*policy, dataset, ro_dataset, options, ro_out);
        std::cout << "wrote " << n << " rollout records to " << ro_out << "\n";
        return 0;
    }

    if (counterfactual->parsed()) {
        auto dataset = prdiag::read_dataset(cf_dataset);
        auto policy = build_policy(cf_policy, cf_seed);
        prdiag::RolloutOptions options;
        options.samples_per_instance = cf_samples;
        options.seed = cf_seed;
        options.retries = cf_retries;
        options.counterfactual_text_only = cf_text_only;
        std::size_t n =
            prdiag::counterfactual_eval(*policy, dataset, cf_dataset, options, cf_out);
        std::cout << "wrote " << n << " counterfactual records to " << cf_out << "\n";
        return 0;
    }

    if (diagnose_cmd->parsed()) {
        auto file = prdiag::read_rollout_file(di_rollouts);
        ordered_json report = prdiag::diagnose(file, di_rollouts);
        write_json_file(report, di_out);
        std::cout << prdiag::render_report_text(report);
        std::cout << "wrote report to " << di_out << "\n";
        return 0;
    }

    if (sweep_cmd->parsed()) {
        auto file = prdiag::read_rollout_file(sw_rollouts);
        ordered_json report;
        if (sw_param == "alpha") {
            std::vector<double> values;
            for (const auto& item : split_csv(sw_values)) values.push_back(std::stod(item));
            report = prdiag::sweep_alpha(file, values, sw_rollouts);
        } else if (sw_param == "lambda") {
            report = prdiag::sweep_lambda(file, split_csv(sw_values), sw_rollouts);
        } else {
            throw std::invalid_argument("--param must be alpha or lambda");
        }
        write_json_file(report, sw_out);
        std::cout << prdiag::render_report_text(report);
        std::cout << "wrote report to " << sw_out << "\n";
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        ordered_json err;
        err["error"] = {{"type", "runtime"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
