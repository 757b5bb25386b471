#pragma once

#include "safepi/bounds.hpp"
#include "safepi/estimation.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>

namespace safepi {

using json = nlohmann::json;

/// Input that cannot be parsed or fails a schema/invariant check.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json mdp_to_json(const TabularMdp& mdp);
/// Throws InputError on a missing field, a wrong shape or a broken invariant.
TabularMdp mdp_from_json(const json& j);

json policy_to_json(const PolicyTable& policy);
PolicyTable policy_from_json(const json& j);

json error_to_json(const ErrorBound& error);
ErrorBound error_from_json(const json& j, std::size_t n_states, std::size_t n_actions);

/// One {"x", "a", "y"} object per line; blank lines are skipped.
std::string trajectories_to_jsonl(const TrajectoryBatch& batch);
TrajectoryBatch trajectories_from_jsonl(const std::string& text, std::size_t n_states,
                                        std::size_t n_actions);

json solution_to_json(const SaddleSolution& solution, const PerformanceReport& report);

std::string read_text_file(const std::string& path);
json read_json_file(const std::string& path);
/// Writes `j` indented by two spaces followed by a newline.
void write_json_file(const std::string& path, const json& j);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace safepi
