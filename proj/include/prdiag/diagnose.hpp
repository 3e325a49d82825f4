#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "prdiag/rollout.hpp"

namespace prdiag {

// Aggregates a rollout file into one report object: percent-scaled accuracy
// means, coupling correlations per reward column, surrogate quality, and the
// objective identity checks over any logged token scalars. Every report
// carries the source path and config hash so numbers stay traceable.
nlohmann::ordered_json diagnose(const RolloutFile& file, const std::string& rollouts_path);

// Reward recomputation per alpha over a fixed rollout file; never re-invokes
// a policy.
nlohmann::ordered_json sweep_alpha(const RolloutFile& file, const std::vector<double>& values,
                                   const std::string& rollouts_path);

// Objective recomputation per lambda over logged token scalars. A value spec
// is either a decimal weight or "p/y", meaning each record's own perception
// token fraction.
nlohmann::ordered_json sweep_lambda(const RolloutFile& file,
                                    const std::vector<std::string>& value_specs,
                                    const std::string& rollouts_path);

// One-line human rendering of report tables (correlations shown as r*100 to
// match common reporting style; the JSON keeps r in [-1, 1]).
std::string render_report_text(const nlohmann::ordered_json& report);

}  // namespace prdiag
