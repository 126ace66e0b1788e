#pragma once

#include "reman/ambiguity.hpp"
#include "reman/estimate.hpp"
#include "reman/experiments.hpp"
#include "reman/ingest.hpp"
#include "reman/solver.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace reman {

using Json = nlohmann::json;

// Tables over (s,k) are stored as [k][s]; kernels as [k][s][s'].

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& what);
Json state_table_to_json(const Matrix& table);  ///< (S+1) x (K+1) -> [k][s]
Matrix state_table_from_json(const Json& j, const std::string& what);

/**
 * {states, k_max, beta, c_r, c_s, reward}. Reward kinds:
 *   {"kind": "affine", "a0", "a1", "a2"}                   r = a0 - a1 k - a2 s
 *   {"kind": "affine", "gain": {base, per_k, per_s}, "env_cost": {...}}
 *   {"kind": "table", "reward": [k][s]} or {"kind": "table", "gain": .., "env_cost": ..}
 */
Json model_to_json(const ModelSpec& model);
ModelSpec model_from_json(const Json& j);

Json kernel_to_json(const Kernel& kernel);
Kernel kernel_from_json(const Json& j);
void write_kernel_csv(std::ostream& out, const Kernel& kernel);
Kernel read_kernel_csv(std::istream& in);
/// Dispatches on the extension: .csv or JSON.
Kernel read_kernel(const std::filesystem::path& path);

/// {"type": "kl", nominal, theta} or {"type": "interval", lower, upper, alpha, source_seed}.
Json ambiguity_to_json(const Ambiguity& amb);
Ambiguity ambiguity_from_json(const Json& j);

Json bootstrap_to_json(const std::vector<SliceEstimate>& samples, std::uint64_t seed);
std::vector<SliceEstimate> bootstrap_from_json(const Json& j);

Json limits_to_json(const ControlLimits& limits);
Json solution_to_json(const Solution& sol);
void write_policy_csv(std::ostream& out, const Solution& sol);
void write_limits_csv(std::ostream& out, const ControlLimits& limits);
/// Reads the `k,s,V,action` layout written by write_policy_csv; V is ignored.
Policy read_policy_csv(std::istream& in);
Action parse_action(const std::string& name);

void write_trajectories_csv(std::ostream& out, const TrajectorySet& ts);
/// `unit,cycle,state`; num_states <= 0 infers max state + 1 (at least 2).
TrajectorySet read_trajectories_csv(std::istream& in, int num_states = 0);
TrajectorySet read_trajectories(const std::filesystem::path& path, int num_states = 0);

/// Reads an experiment config; relative data paths resolve against `base_dir`.
ExperimentConfig experiment_config_from_json(const Json& j, const std::filesystem::path& base_dir = {});
Json experiment_config_to_json(const ExperimentConfig& config);
ViolationOptions violation_options_from_json(const Json& j);
Json violation_options_to_json(const ViolationOptions& options);

Json report_to_json(const ExperimentReport& report);
/// `psi,replication,in_sample,out_sample,success` for one sweep.
void write_records_csv(std::ostream& out, const SweepResult& sweep);
Json violation_summary_to_json(const ViolationSummary& summary);
void write_violation_csv(std::ostream& out, const ViolationSummary& summary);

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal polyline chart.
std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<PlotSeries>& series);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
/// Shortest round-trip decimal form.
std::string format_double(double x);

}  // namespace reman
