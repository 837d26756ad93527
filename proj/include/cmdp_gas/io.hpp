#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmdp_gas/baselines.hpp"
#include "cmdp_gas/env/gridworld.hpp"
#include "cmdp_gas/env/uav.hpp"
#include "cmdp_gas/gas.hpp"
#include "cmdp_gas/rollout.hpp"

namespace cmdp::io {

using json = nlohmann::ordered_json;

/// Shortest text that reads back to the same double (at most 17 significant digits).
std::string format_double(double x);

/// Writes to a sibling temporary file, then renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);
json read_json(const std::filesystem::path& path);

/// Problem document: n_states, n_actions, gamma, constraint_bound,
/// initial_dist, rewards, costs, transitions [{state, action, next_state,
/// prob}], optional action_mask. Invalid models raise ConfigError.
json problem_to_json(const Cmdpd& m);
Cmdpd problem_from_json(const json& doc);
void save_problem(const std::filesystem::path& path, const Cmdpd& m);
Cmdpd load_problem(const std::filesystem::path& path);

json to_json(const env::GridConfig& c);
env::GridConfig grid_config_from_json(const json& doc);
json to_json(const env::UavConfig& c);
env::UavConfig uav_config_from_json(const json& doc);

inline constexpr const char* kTraceHeader =
    "outer_iter,mu,objective,gradient,inner_iterations,cumulative_inner_iterations,wall_time_ms";

/// Trace CSV with the fixed header. wall_time_ms is written as 0 unless
/// `with_wall_time`, so repeated runs give identical bytes.
std::string trace_csv(const SolveTrace& trace, bool with_wall_time = false);
/// Columns mu,objective,gradient.
std::string scan_csv(const ScanResult<double>& scan);

json result_to_json(const SolveResult<double>& r, bool with_wall_time = false);
json rollout_to_json(const RolloutStats& st);

}  // namespace cmdp::io
