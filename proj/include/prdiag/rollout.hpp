#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prdiag/metrics.hpp"
#include "prdiag/policy.hpp"
#include "prdiag/rewards.hpp"
#include "prdiag/task.hpp"

namespace prdiag {

struct TokenLog {
    std::vector<double> nll;
    std::vector<double> ratio;
    int p_len = 0;
    int r_len = 0;
};

struct RolloutRecord {
    std::string task_id;
    std::string raw_output;
    std::string perception_text;  // parsed summary
    std::string reasoning_text;
    std::string answer_kind;  // "coloring" | "grid" | "unparsed"
    MetricRecord metrics;
    RewardRecord rewards;
    std::map<std::string, double> surrogates;  // named surrogate reward values
    std::optional<TokenLog> tokens;
    std::string policy_tag;
    std::uint64_t seed = 0;
    std::optional<std::string> error;  // sample failed after retries; metrics absent
};

struct RolloutHeader {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string dataset_path;
    std::string policy_tag;
};

struct RolloutFile {
    RolloutHeader header;
    std::vector<RolloutRecord> records;
    std::vector<std::pair<std::size_t, std::string>> bad_lines;  // (line number, message)
};

struct RolloutError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RolloutOptions {
    int samples_per_instance = 1;
    RewardConfig reward;
    std::uint64_t seed = 0;
    int retries = 2;          // extra attempts per sample before an error record
    bool log_tokens = false;  // synthesize per-token scalar logs (simulated runs)
    bool counterfactual_text_only = false;  // drop the image when prefilling p*
    Embedder* embedder = nullptr;           // required for Similarity surrogate
    TeacherClient* teacher = nullptr;       // required for Teacher surrogate
    Policy* self_policy = nullptr;          // defaults to the rollout policy
};

// The per-sample request seed; shared by the standard and counterfactual
// protocols so a seeded policy sees identical draws in both.
std::uint64_t sample_seed(std::uint64_t run_seed, int instance_index, int sample_index);

// One record per instance x sample, streamed to out_path in deterministic
// order behind a header line. Policy transport failures are retried, then
// recorded as error records. Returns the number of records written.
std::size_t run_rollouts(Policy& policy, const std::vector<TaskInstance>& dataset,
                         const std::string& dataset_path, const RolloutOptions& options,
                         const std::string& out_path);

// Counterfactual protocol: prefill <perception>p*</perception> and let the
// policy continue; the answer scored against p* lands in
// metrics.counterfactual_reasoning.
std::size_t counterfactual_eval(Policy& policy, const std::vector<TaskInstance>& dataset,
                                const std::string& dataset_path,
                                const RolloutOptions& options, const std::string& out_path);

RolloutFile read_rollout_file(const std::string& path);

std::string rollout_record_to_json_line(const RolloutRecord& record);
RolloutRecord rollout_record_from_json_line(const std::string& line);

}  // namespace prdiag
