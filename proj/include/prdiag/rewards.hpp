#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "prdiag/metrics.hpp"
#include "prdiag/policy.hpp"
#include "prdiag/stats.hpp"
#include "prdiag/task.hpp"

namespace prdiag {

enum class SurrogateKind { None, Similarity, SelfReward, Teacher };

struct RewardConfig {
    double alpha = 0.0;                 // perception-signal weight in [0, 1]
    SurrogateKind surrogate = SurrogateKind::None;  // None = ground-truth a_p
    int self_reward_n = 1;              // rollout budget for SelfReward
    bool teacher_failure_zero = false;  // false: skip sample, true: zero reward
};

struct RewardRecord {
    int outcome = 0;                            // end-to-end bit a
    std::optional<double> perception_signal;    // absent on skipped teacher failures
    std::optional<double> augmented;            // alpha*signal + (1-alpha)*outcome
};

struct RewardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int outcome_reward(const MetricRecord& metrics);

// R_alpha = alpha * perception_signal + (1 - alpha) * a.
double augmented_reward(int outcome, double perception_signal, double alpha);

// Mean end-to-end accuracy of N text-only rollouts that reason from the given
// perception text without the image. Policy failures raise RewardError naming
// the rollout index.
double self_reward(Policy& policy, const std::string& perception_text,
                   const TaskInstance& instance, int n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Teacher-based reward

class TeacherClient {
public:
    virtual ~TeacherClient() = default;
    virtual Parse<std::string> describe(const std::string& image_svg, TaskKind kind,
                                        const std::string& instruction,
                                        std::uint64_t seed) = 0;
    virtual std::string tag() const = 0;
};

// Reads the rendered document and answers with the canonical perception,
// optionally corrupted by one element with probability `corruption`.
class StubTeacher : public TeacherClient {
public:
    explicit StubTeacher(double corruption = 0.0, std::uint64_t seed = 0)
        : corruption_(corruption), seed_(seed) {}

    Parse<std::string> describe(const std::string& image_svg, TaskKind kind,
                                const std::string& instruction, std::uint64_t seed) override;
    std::string tag() const override;

private:
    double corruption_;
    std::uint64_t seed_;
};

// 1 iff the model perception matches the teacher's parsed perception under
// normalized serialization. Teacher transport/parse failures surface as a
// Parse error; the caller decides between skip and zero per RewardConfig.
Parse<int> teacher_reward(TeacherClient& teacher, const TaskInstance& instance,
                          const Parse<CanonicalPerception>& model_perception,
                          std::uint64_t seed);

// ---------------------------------------------------------------------------
// Similarity-based reward

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual Eigen::VectorXd embed_image(const std::string& image_svg) = 0;
    virtual Eigen::VectorXd embed_text(const std::string& text, TaskKind kind) = 0;
};

// Deterministic hashed bag-of-symbols embedding. Image documents and faithful
// perception text hash to identical symbol multisets, so their cosine is 1.
class HashingEmbedder : public Embedder {
public:
    explicit HashingEmbedder(int dim = 256) : dim_(dim) {}

    Eigen::VectorXd embed_image(const std::string& image_svg) override;
    Eigen::VectorXd embed_text(const std::string& text, TaskKind kind) override;

private:
    Eigen::VectorXd embed_symbols(const std::vector<std::string>& symbols) const;
    int dim_;
};

struct SimilarityReward {
    double value = 0.0;
    bool degenerate = false;  // a zero-norm embedding was involved
};

SimilarityReward similarity_reward(Embedder& embedder, const TaskInstance& instance,
                                   const std::string& perception_text);

// ---------------------------------------------------------------------------
// Coupling diagnostics

struct CouplingReport {
    Correlation<double> reward_perception;  // r(reward, a_p)
    Correlation<double> reward_reasoning;   // r(reward, conditional reasoning)
    Eigen::Index sample_count = 0;
};

CouplingReport coupling_diagnostic(const ArrayX<double>& reward,
                                   const ArrayX<double>& perception_bits,
                                   const ArrayX<double>& reasoning_bits);

// Pearson r between a surrogate reward series and ground-truth a_p.
Correlation<double> surrogate_quality(const ArrayX<double>& surrogate_values,
                                      const ArrayX<double>& perception_bits);

}  // namespace prdiag
