#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace prdiag {

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

// Per-token scalar sequence split into a perception prefix and a reasoning
// suffix. `values` holds negative log-likelihoods for SFT use and importance
// ratios for RL use.
template <typename Scalar>
struct TokenizedResponse {
    ArrayX<Scalar> values;
    Eigen::Index perception_len = 0;
    Eigen::Index reasoning_len = 0;

    Eigen::Index total_len() const { return perception_len + reasoning_len; }

    void check() const {
        if (perception_len < 0 || reasoning_len < 0 ||
            values.size() != perception_len + reasoning_len)
            throw std::invalid_argument("TokenizedResponse: span/value length mismatch");
    }

    auto perception_values() const { return values.head(perception_len); }
    auto reasoning_values() const { return values.tail(reasoning_len); }
};

template <typename Scalar>
struct GroupRollouts {
    ArrayX<Scalar> rewards;                            // G entries
    std::vector<TokenizedResponse<Scalar>> responses;  // G entries, importance ratios
};

template <typename Scalar>
struct SftLosses {
    Scalar perception_sum;  // sum of NLLs over perception tokens
    Scalar reasoning_sum;   // sum over reasoning tokens
    Scalar token_mean;      // standard token-averaged loss
};

// Decomposition of the token-averaged loss into span sums:
// token_mean = (perception_sum + reasoning_sum) / (|p| + |r|).
template <typename Scalar>
SftLosses<Scalar> sft_losses(const TokenizedResponse<Scalar>& resp) {
    resp.check();
    if (resp.total_len() < 1)
        throw std::invalid_argument("sft_losses: empty response");
    Scalar lp = resp.perception_values().sum();
    Scalar lr = resp.reasoning_values().sum();
    return {lp, lr, (lp + lr) / static_cast<Scalar>(resp.total_len())};
}

// lambda * L_p/|p| + (1-lambda) * L_r/|r|. A zero-length span is only legal
// when its weight is exactly zero.
template <typename Scalar>
Scalar sft_reweighted(Scalar perception_sum, Scalar reasoning_sum, Eigen::Index p_len,
                      Eigen::Index r_len, Scalar lambda) {
    if (lambda < Scalar(0) || lambda > Scalar(1))
        throw std::invalid_argument("sft_reweighted: lambda outside [0, 1]");
    if (p_len < 1 && lambda > Scalar(0))
        throw std::invalid_argument("sft_reweighted: empty perception span with weight");
    if (r_len < 1 && lambda < Scalar(1))
        throw std::invalid_argument("sft_reweighted: empty reasoning span with weight");
    Scalar total = Scalar(0);
    if (lambda > Scalar(0)) total += lambda * perception_sum / static_cast<Scalar>(p_len);
    if (lambda < Scalar(1))
        total += (Scalar(1) - lambda) * reasoning_sum / static_cast<Scalar>(r_len);
    return total;
}

template <typename Scalar>
struct GradientNorms {
    Scalar g_p_norm;
    Scalar g_r_norm;
};

template <typename Scalar>
struct NgdiffWeight {
    Scalar lambda;
    bool degenerate;  // a norm was <= epsilon; lambda fell back to 0.5
};

// Inverse-gradient-norm weighting, in the algebraically simplified form
// g_r / (g_p + g_r).
template <typename Scalar>
NgdiffWeight<Scalar> ngdiff_weight(const GradientNorms<Scalar>& norms,
                                   Scalar epsilon = Scalar(1e-12)) {
    if (!(norms.g_p_norm >= Scalar(0)) || !(norms.g_r_norm >= Scalar(0)))
        throw std::invalid_argument("ngdiff_weight: norms must be finite and nonnegative");
    if (norms.g_p_norm <= epsilon || norms.g_r_norm <= epsilon)
        return {Scalar(0.5), true};
    return {norms.g_r_norm / (norms.g_p_norm + norms.g_r_norm), false};
}

// Group-normalized advantages (r_i - mean) / popstd. Constant-reward groups
// give all-zero advantages instead of dividing by ~0.
template <typename Scalar>
ArrayX<Scalar> grpo_advantages(const ArrayX<Scalar>& rewards,
                               Scalar epsilon = Scalar(1e-8)) {
    if (rewards.size() < 2)
        throw std::invalid_argument("grpo_advantages: group size must be >= 2");
    Scalar mean = rewards.mean();
    ArrayX<Scalar> centered = rewards - mean;
    Scalar std_dev = std::sqrt(centered.square().mean());
    if (std_dev < epsilon) return ArrayX<Scalar>::Zero(rewards.size());
    return centered / std_dev;
}

// Span-level objective reweighting expressed through per-token advantages:
// perception tokens get lambda * (|y|/|p|) * A, reasoning tokens
// (1-lambda) * (|y|/|r|) * A. The scales are computed against the span token
// fractions so that lambda == |p|/|y| reproduces A exactly.
template <typename Scalar>
ArrayX<Scalar> rescale_advantages(const TokenizedResponse<Scalar>& resp, Scalar advantage,
                                  Scalar lambda) {
    resp.check();
    if (resp.perception_len < 1 || resp.reasoning_len < 1)
        throw std::invalid_argument("rescale_advantages: both spans must be nonempty");
    if (lambda < Scalar(0) || lambda > Scalar(1))
        throw std::invalid_argument("rescale_advantages: lambda outside [0, 1]");
    Scalar p_frac = static_cast<Scalar>(resp.perception_len) /
                    static_cast<Scalar>(resp.total_len());
    Scalar scale_p = lambda / p_frac;
    Scalar scale_r = (Scalar(1) - lambda) / (Scalar(1) - p_frac);
    ArrayX<Scalar> out(resp.total_len());
    out.head(resp.perception_len).setConstant(scale_p * advantage);
    out.tail(resp.reasoning_len).setConstant(scale_r * advantage);
    return out;
}

// (1/G) sum_i (1/|y_i|) sum_t rho_{i,t} * A_{i,t}; clipping and KL terms are
// deliberately absent.
template <typename Scalar>
Scalar grpo_objective(const GroupRollouts<Scalar>& group,
                      const std::vector<ArrayX<Scalar>>& advantages_per_token) {
    const std::size_t n = group.responses.size();
    if (n == 0) throw std::invalid_argument("grpo_objective: empty group");
    if (advantages_per_token.size() != n)
        throw std::invalid_argument("grpo_objective: advantage/response count mismatch");
    Scalar total = Scalar(0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& resp = group.responses[i];
        resp.check();
        if (advantages_per_token[i].size() != resp.total_len())
            throw std::invalid_argument("grpo_objective: token length mismatch");
        total += (resp.values * advantages_per_token[i]).sum() /
                 static_cast<Scalar>(resp.total_len());
    }
    return total / static_cast<Scalar>(n);
}

template <typename Scalar>
struct DecomposedObjectives {
    Scalar perception;  // span-averaged perception-token objective
    Scalar reasoning;   // span-averaged reasoning-token objective
};

// J_p and J_r: per-response span averages of rho * A, averaged over the group.
template <typename Scalar>
DecomposedObjectives<Scalar> grpo_decomposed(
    const GroupRollouts<Scalar>& group, const std::vector<ArrayX<Scalar>>& advantages_per_token) {
    const std::size_t n = group.responses.size();
    if (n == 0) throw std::invalid_argument("grpo_decomposed: empty group");
    if (advantages_per_token.size() != n)
        throw std::invalid_argument("grpo_decomposed: advantage/response count mismatch");
    Scalar jp = Scalar(0), jr = Scalar(0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& resp = group.responses[i];
        resp.check();
        if (resp.perception_len < 1 || resp.reasoning_len < 1)
            throw std::invalid_argument("grpo_decomposed: both spans must be nonempty");
        if (advantages_per_token[i].size() != resp.total_len())
            throw std::invalid_argument("grpo_decomposed: token length mismatch");
        const auto& adv = advantages_per_token[i];
        jp += (resp.perception_values() * adv.head(resp.perception_len)).sum() /
              static_cast<Scalar>(resp.perception_len);
        jr += (resp.reasoning_values() * adv.tail(resp.reasoning_len)).sum() /
              static_cast<Scalar>(resp.reasoning_len);
    }
    return {jp / static_cast<Scalar>(n), jr / static_cast<Scalar>(n)};
}

}  // namespace prdiag
