#include "prdiag/diagnose.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "prdiag/objectives.hpp"
#include "prdiag/stats.hpp"

namespace prdiag {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json correlation_json(const Correlation<double>& c, Eigen::Index n) {
    ordered_json j;
    if (c.degenerate) {
        j["r"] = nullptr;
        j["degenerate"] = true;
    } else {
        j["r"] = c.r;
        j["degenerate"] = false;
    }
    j["sample_count"] = static_cast<std::int64_t>(n);
    return j;
}

ordered_json coupling_json(const ArrayX<double>& reward, const ArrayX<double>& a_p,
                           const ArrayX<double>& a_r) {
    CouplingReport rep = coupling_diagnostic(reward, a_p, a_r);
    ordered_json j;
    j["reward_perception"] = correlation_json(rep.reward_perception, rep.sample_count);
    j["reward_reasoning"] = correlation_json(rep.reward_reasoning, rep.sample_count);
    return j;
}

struct Series {
    std::vector<double> end_to_end, perception, conditional, counterfactual;
    std::vector<double> outcome, augmented;
    std::map<std::string, std::vector<double>> surrogates;           // values
    std::map<std::string, std::vector<double>> surrogate_perception;  // aligned a_p
    std::map<std::string, std::vector<double>> surrogate_reasoning;   // aligned conditional
    std::vector<double> augmented_perception, augmented_reasoning;
    std::vector<const RolloutRecord*> scored;
    std::size_t errors = 0;
};

Series collect(const RolloutFile& file) {
    Series s;
    for (const auto& rec : file.records) {
        if (rec.error) {
            ++s.errors;
            continue;
        }
        s.scored.push_back(&rec);
        s.end_to_end.push_back(rec.metrics.end_to_end);
        s.perception.push_back(rec.metrics.perception);
        s.conditional.push_back(rec.metrics.conditional_reasoning);
        if (rec.metrics.counterfactual_reasoning)
            s.counterfactual.push_back(*rec.metrics.counterfactual_reasoning);
        s.outcome.push_back(rec.rewards.outcome);
        if (rec.rewards.augmented) {
            s.augmented.push_back(*rec.rewards.augmented);
            s.augmented_perception.push_back(rec.metrics.perception);
            s.augmented_reasoning.push_back(rec.metrics.conditional_reasoning);
        }
        for (const auto& [name, value] : rec.surrogates) {
            s.surrogates[name].push_back(value);
            s.surrogate_perception[name].push_back(rec.metrics.perception);
            s.surrogate_reasoning[name].push_back(rec.metrics.conditional_reasoning);
        }
    }
    return s;
}

ArrayX<double> to_array(const std::vector<double>& xs) {
    return Eigen::Map<const ArrayX<double>>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

double percent_mean(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    return 100.0 * to_array(xs).mean();
}

TokenizedResponse<double> response_from_log(const TokenLog& log, bool use_nll) {
    TokenizedResponse<double> resp;
    const auto& values = use_nll ? log.nll : log.ratio;
    resp.values = to_array(values);
    resp.perception_len = log.p_len;
    resp.reasoning_len = log.r_len;
    return resp;
}

// Identity checks over one token log; errors are relative.
struct IdentityResult {
    double sft_rel_err = 0.0;
    bool rescale_exact = true;
    double decomposition_rel_err = 0.0;
};

IdentityResult check_identities(const TokenLog& log) {
    IdentityResult result;

    auto nll = response_from_log(log, true);
    auto losses = sft_losses(nll);
    double lam_star = static_cast<double>(log.p_len) / (log.p_len + log.r_len);
    double reweighted = sft_reweighted(losses.perception_sum, losses.reasoning_sum,
                                       nll.perception_len, nll.reasoning_len, lam_star);
    double denom = std::max(std::abs(losses.token_mean), 1e-300);
    result.sft_rel_err = std::abs(reweighted - losses.token_mean) / denom;

    auto ratios = response_from_log(log, false);
    const double advantage = 0.8125;
    ArrayX<double> rescaled = rescale_advantages(ratios, advantage, lam_star);
    result.rescale_exact = (rescaled == advantage).all();

    GroupRollouts<double> group;
    group.rewards = ArrayX<double>::Zero(1);
    group.responses.push_back(ratios);
    for (double lam : {0.1, 0.5, 0.9}) {
        std::vector<ArrayX<double>> adv{rescale_advantages(ratios, advantage, lam)};
        double objective = grpo_objective(group, adv);
        std::vector<ArrayX<double>> flat{ArrayX<double>::Constant(ratios.total_len(), advantage)};
        auto parts = grpo_decomposed(group, flat);
        double recomposed = lam * parts.perception + (1.0 - lam) * parts.reasoning;
        double d = std::max(std::abs(objective), 1e-300);
        result.decomposition_rel_err =
            std::max(result.decomposition_rel_err, std::abs(objective - recomposed) / d);
    }
    return result;
}

ordered_json source_json(const RolloutFile& file, const std::string& rollouts_path) {
    ordered_json j;
    j["rollouts_path"] = rollouts_path;
    j["config_hash"] = file.header.config_hash;
    j["seed"] = file.header.seed;
    j["dataset_path"] = file.header.dataset_path;
    j["policy_tag"] = file.header.policy_tag;
    return j;
}

}  // namespace

ordered_json diagnose(const RolloutFile& file, const std::string& rollouts_path) {
    Series s = collect(file);

    ordered_json report;
    report["source"] = source_json(file, rollouts_path);

    ordered_json counts;
    counts["records"] = file.records.size();
    counts["scored"] = s.scored.size();
    counts["errors"] = s.errors;
    ordered_json bad = ordered_json::array();
    for (const auto& [line, message] : file.bad_lines)
        bad.push_back({{"line", line}, {"message", message}});
    counts["bad_lines"] = bad;
    report["counts"] = counts;

    ordered_json accuracy;
    accuracy["end_to_end"] = percent_mean(s.end_to_end);
    accuracy["perception"] = percent_mean(s.perception);
    accuracy["conditional_reasoning"] = percent_mean(s.conditional);
    if (s.counterfactual.empty())
        accuracy["counterfactual_reasoning"] = nullptr;
    else
        accuracy["counterfactual_reasoning"] = percent_mean(s.counterfactual);
    report["accuracy"] = accuracy;

    ordered_json coupling;
    if (s.outcome.size() >= 2)
        coupling["outcome"] =
            coupling_json(to_array(s.outcome), to_array(s.perception), to_array(s.conditional));
    if (s.augmented.size() >= 2)
        coupling["augmented"] = coupling_json(to_array(s.augmented),
                                              to_array(s.augmented_perception),
                                              to_array(s.augmented_reasoning));
    for (const auto& [name, values] : s.surrogates)
        if (values.size() >= 2)
            coupling["surrogate:" + name] =
                coupling_json(to_array(values), to_array(s.surrogate_perception.at(name)),
                              to_array(s.surrogate_reasoning.at(name)));
    report["coupling"] = coupling;

    ordered_json quality;
    for (const auto& [name, values] : s.surrogates)
        if (values.size() >= 2)
            quality[name] = correlation_json(
                surrogate_quality(to_array(values), to_array(s.surrogate_perception.at(name))),
                static_cast<Eigen::Index>(values.size()));
    report["surrogate_quality"] = quality;

    std::size_t with_tokens = 0;
    IdentityResult worst;
    for (const auto* rec : s.scored) {
        if (!rec->tokens) continue;
        ++with_tokens;
        IdentityResult r = check_identities(*rec->tokens);
        worst.sft_rel_err = std::max(worst.sft_rel_err, r.sft_rel_err);
        worst.rescale_exact = worst.rescale_exact && r.rescale_exact;
        worst.decomposition_rel_err =
            std::max(worst.decomposition_rel_err, r.decomposition_rel_err);
    }
    if (with_tokens > 0) {
        ordered_json identities;
        identities["records_with_tokens"] = with_tokens;
        identities["sft_identity_max_rel_err"] = worst.sft_rel_err;
        identities["rescale_identity_exact"] = worst.rescale_exact;
        identities["decomposition_max_rel_err"] = worst.decomposition_rel_err;
        report["objective_identities"] = identities;
    } else {
        report["objective_identities"] = nullptr;
    }
    return report;
}

ordered_json sweep_alpha(const RolloutFile& file, const std::vector<double>& values,
                         const std::string& rollouts_path) {
    if (values.empty()) throw std::invalid_argument("sweep_alpha: no values");
    Series s = collect(file);
    ordered_json report;
    report["source"] = source_json(file, rollouts_path);
    report["param"] = "alpha";
    ordered_json rows = ordered_json::array();
    for (double alpha : values) {
        std::vector<double> reward, a_p, a_r;
        for (const auto* rec : s.scored) {
            if (!rec->rewards.perception_signal) continue;
            reward.push_back(
                augmented_reward(rec->rewards.outcome, *rec->rewards.perception_signal, alpha));
            a_p.push_back(rec->metrics.perception);
            a_r.push_back(rec->metrics.conditional_reasoning);
        }
        ordered_json row;
        row["alpha"] = alpha;
        row["sample_count"] = reward.size();
        row["augmented_mean"] = percent_mean(reward);
        if (reward.size() >= 2) {
            auto coupled = coupling_diagnostic(to_array(reward), to_array(a_p), to_array(a_r));
            row["reward_perception"] =
                correlation_json(coupled.reward_perception, coupled.sample_count);
            row["reward_reasoning"] =
                correlation_json(coupled.reward_reasoning, coupled.sample_count);
        }
        rows.push_back(row);
    }
    report["rows"] = rows;
    return report;
}

ordered_json sweep_lambda(const RolloutFile& file, const std::vector<std::string>& value_specs,
                          const std::string& rollouts_path) {
    if (value_specs.empty()) throw std::invalid_argument("sweep_lambda: no values");
    Series s = collect(file);
    ordered_json report;
    report["source"] = source_json(file, rollouts_path);
    report["param"] = "lambda";
    ordered_json rows = ordered_json::array();
    for (const auto& spec : value_specs) {
        bool per_record = spec == "p/y";
        double lam_fixed = 0.0;
        if (!per_record) lam_fixed = std::stod(spec);

        std::size_t n = 0;
        double sft_sum = 0.0;
        bool identity_all = true;
        double decomposition_err = 0.0;
        const double advantage = 0.8125;
        for (const auto* rec : s.scored) {
            if (!rec->tokens) continue;
            ++n;
            const TokenLog& log = *rec->tokens;
            double lam = per_record
                             ? static_cast<double>(log.p_len) / (log.p_len + log.r_len)
                             : lam_fixed;
            auto nll = response_from_log(log, true);
            auto losses = sft_losses(nll);
            sft_sum += sft_reweighted(losses.perception_sum, losses.reasoning_sum,
                                      nll.perception_len, nll.reasoning_len, lam);

            auto ratios = response_from_log(log, false);
            ArrayX<double> rescaled = rescale_advantages(ratios, advantage, lam);
            identity_all = identity_all && (rescaled == advantage).all();

            GroupRollouts<double> group;
            group.rewards = ArrayX<double>::Zero(1);
            group.responses.push_back(ratios);
            std::vector<ArrayX<double>> adv{rescaled};
            double objective = grpo_objective(group, adv);
            std::vector<ArrayX<double>> flat{
                ArrayX<double>::Constant(ratios.total_len(), advantage)};
            auto parts = grpo_decomposed(group, flat);
            double recomposed = lam * parts.perception + (1.0 - lam) * parts.reasoning;
            double d = std::max(std::abs(objective), 1e-300);
            decomposition_err = std::max(decomposition_err, std::abs(objective - recomposed) / d);
        }
        ordered_json row;
        row["lambda"] = spec;
        row["records_with_tokens"] = n;
        row["sft_reweighted_mean"] = n ? sft_sum / static_cast<double>(n) : 0.0;
        row["rescale_identity_holds"] = n ? identity_all : false;
        row["decomposition_max_rel_err"] = decomposition_err;
        rows.push_back(row);
    }
    report["rows"] = rows;
    return report;
}

std::string render_report_text(const ordered_json& report) {
    std::string out;
    char buf[256];
    auto add = [&](const char* fmt, auto... args) {
        std::snprintf(buf, sizeof buf, fmt, args...);
        out += buf;
        out += '\n';
    };
    if (report.contains("accuracy")) {
        const auto& acc = report["accuracy"];
        add("accuracy (%%): end_to_end=%.1f perception=%.1f conditional_reasoning=%.1f",
            acc["end_to_end"].get<double>(), acc["perception"].get<double>(),
            acc["conditional_reasoning"].get<double>());
        if (!acc["counterfactual_reasoning"].is_null())
            add("counterfactual_reasoning (%%): %.1f",
                acc["counterfactual_reasoning"].get<double>());
    }
    if (report.contains("coupling")) {
        for (const auto& [name, value] : report["coupling"].items()) {
            if (value.contains("reward_perception")) {
                const auto& p = value["reward_perception"];
                const auto& r = value["reward_reasoning"];
                add("coupling[%s]: r_perception=%s r_reasoning=%s", name.c_str(),
                    p["degenerate"].get<bool>()
                        ? "degenerate"
                        : std::to_string(100.0 * p["r"].get<double>()).c_str(),
                    r["degenerate"].get<bool>()
                        ? "degenerate"
                        : std::to_string(100.0 * r["r"].get<double>()).c_str());
            }
        }
    }
    if (report.contains("rows")) {
        for (const auto& row : report["rows"]) {
            if (row.contains("alpha"))
                add("alpha=%.3f augmented_mean=%.2f", row["alpha"].get<double>(),
                    row["augmented_mean"].get<double>());
            else if (row.contains("lambda"))
                add("lambda=%s sft_reweighted_mean=%.6f rescale_identity=%s",
                    row["lambda"].get<std::string>().c_str(),
                    row["sft_reweighted_mean"].get<double>(),
                    row["rescale_identity_holds"].get<bool>() ? "holds" : "no");
        }
    }
    return out;
}

}  // namespace prdiag
