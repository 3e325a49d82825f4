#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "prdiag/perception.hpp"
#include "prdiag/render.hpp"

namespace prdiag {

struct PromptPart {
    enum class Kind { Image, Text };
    Kind kind = Kind::Text;
    std::string data;
};

struct GenRequest {
    std::vector<PromptPart> parts;
    std::optional<std::string> response_prefix;  // continuation must start with this
    std::uint64_t seed = 0;
    int max_tokens = 8192;
};

struct PolicyFailure {
    enum class Kind { Transport, Contract, Protocol };
    Kind kind = Kind::Transport;
    std::string message;
};

struct GenResult {
    std::optional<std::string> text;
    std::optional<PolicyFailure> failure;

    bool ok() const { return text.has_value(); }
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual GenResult generate(const GenRequest& req) = 0;
    virtual std::string tag() const = 0;
    virtual bool deterministic() const { return false; }
};

// Reference policy driven by three success probabilities. It reads the task
// content back out of the rendered image, so it honors the same interface as
// a real model.
//
// Behaviour per draw: perception succeeds with probability q_p (emits the
// canonical perception verbatim) or fails (emits a single-element corruption,
// chosen so that an answer solving the corrupted perception never also solves
// the canonical one). Reasoning succeeds with probability q_r (answer correct
// for whatever perception it emitted) or fails (answer invalid under any
// perception). Prefix-conditioned and text-only calls reason from the
// provided perception with probability q_r_text.
//
// The perception and reasoning draws are consumed in a fixed order in every
// mode, so a prefix-conditioned call with q_r_text == q_r succeeds whenever
// the corresponding standard call was end-to-end correct.
struct SimulatedPolicyConfig {
    double q_p = 1.0;
    double q_r = 1.0;
    double q_r_text = 1.0;
    std::uint64_t seed = 0;
};

class SimulatedPolicy : public Policy {
public:
    explicit SimulatedPolicy(SimulatedPolicyConfig cfg) : cfg_(cfg) {}

    GenResult generate(const GenRequest& req) override;
    std::string tag() const override;
    bool deterministic() const override { return true; }

    // Corruptions that could not be proven non-leaking (answer for the
    // corrupted perception might also solve the canonical one). Stays 0 for
    // the generated corpora; exposed so tests can assert that.
    long unsafe_corruptions() const { return unsafe_corruptions_; }

private:
    struct CorruptionPlan {
        std::string perception_text;
        std::string answer_text;  // correct for the corrupted perception
    };
    struct ImagePlans {
        ImageContent content;
        std::string canonical_text;
        std::string true_answer_text;
        std::vector<CorruptionPlan> safe;  // GC: precomputed; Sudoku: grown lazily
        std::vector<std::pair<int, int>> sudoku_candidates;  // (cell, digit) not yet tried
        std::unordered_map<int, std::optional<CorruptionPlan>> sudoku_tried;
        bool exhausted = false;
    };

    ImagePlans& plans_for(const std::string& svg);
    const CorruptionPlan* pick_corruption(ImagePlans& plans, class Rng& rng);

    SimulatedPolicyConfig cfg_;
    std::mutex mutex_;
    std::unordered_map<std::string, std::unique_ptr<ImagePlans>> cache_;
    long unsafe_corruptions_ = 0;
};

// Answer serialization shared by the simulated policy and tests.
std::string coloring_answer_text(const std::vector<int>& colors);
std::string grid_answer_text(const Grid9& grid);

}  // namespace prdiag
