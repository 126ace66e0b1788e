#pragma once

#include "reman/ambiguity.hpp"
#include "reman/estimate.hpp"
#include "reman/ingest.hpp"
#include "reman/solver.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace reman {

enum class AmbiguityKind { KL, Interval };

const char* to_string(AmbiguityKind kind);
AmbiguityKind parse_ambiguity_kind(const std::string& name);

/// KL: theta in {0, 0.1, ..., 2.0}. Interval: alpha from 0.99 down to 0.05.
std::vector<double> default_psi_grid(AmbiguityKind kind);

struct ExperimentConfig {
    std::string experiment = "impact";  ///< impact | select-validation | select-reliability | violation-study
    AmbiguityKind kind = AmbiguityKind::KL;
    /// Ordered by growing ambiguity: theta ascending for KL, alpha descending for intervals.
    std::vector<double> psi_grid = default_psi_grid(AmbiguityKind::KL);
    std::vector<int> train_sizes{5};
    int test_size = 50;
    int replications = 200;
    double split_fraction = 0.6;
    double gamma = 0.7;
    int q = 30;
    int bootstrap_samples = 200;
    double rho = 0.07;
    double epsilon = 1e-6;
    int max_trajectory_length = 200;
    std::uint64_t seed = 42;
    int threads = 1;
    ModelSpec model = case_study_model();

    /// Synthetic ground truth: wait-action slice at k = 0 (degraded for k > 0).
    /// Empty means default_true_slice.
    Matrix true_slice;
    /// Synthetic mode scores test performance under the true kernel; set this
    /// to simulate `test_size` units and estimate one kernel per unit instead.
    bool per_unit_test_kernels = false;
    /// Data mode: when non-empty, replications draw disjoint train/test units from here.
    std::optional<TrajectorySet> data;

    void validate() const;
};

struct ReplicationRecord {
    double psi = 0.0;
    int replication = 0;
    double in_sample = 0.0;   ///< V_N(psi) at (0,0)
    double out_sample = 0.0;  ///< mean test reward from (0,0)
    bool success = false;     ///< out_sample >= in_sample
};

struct PsiSummary {
    double psi = 0.0;
    double mean_in_sample = 0.0;
    double mean_out_sample = 0.0;
    double reliability = 0.0;
    int count = 0;
};

struct SweepResult {
    int train_size = 0;
    std::vector<ReplicationRecord> records;
    /// impact: one entry per grid point; selection runs: one per selected psi.
    std::vector<PsiSummary> by_psi;
    PsiSummary overall;
    /// impact only: V_N(psi) non-increasing along the grid in every replication, within epsilon.
    bool in_sample_monotone = true;
    int fallback_count = 0;  ///< select-reliability replications where no psi reached gamma
};

struct ExperimentReport {
    std::string experiment;
    AmbiguityKind kind = AmbiguityKind::KL;
    std::string mode;  ///< "synthetic" or "data"
    std::vector<SweepResult> sweeps;
    std::vector<std::string> notes;
    std::vector<std::string> warnings;
};

/// Mean of evaluate_policy(policy, kernel)(0,0) over the test kernels.
double out_of_sample_eval(const Policy& policy, std::span<const Kernel> test_kernels, const ModelSpec& model,
                          double epsilon = 1e-10);

/// Fraction of records with success set.
double reliability(std::span<const ReplicationRecord> records);

/// Kernel for one unit: MLE from its own trajectory, degraded over k.
Kernel unit_kernel(const TrajectorySet& trajectories, std::size_t index, int k_max, double rho);

/// Builds the ambiguity set for any psi from one training set; the bootstrap draw is shared across psi.
class AmbiguityBuilder {
public:
    AmbiguityBuilder(const TrajectorySet& train, AmbiguityKind kind, int k_max, double rho, int bootstrap_samples,
                     std::uint64_t seed);

    Ambiguity make(double psi) const;
    const Kernel& nominal() const { return nominal_; }

private:
    AmbiguityKind kind_;
    int k_max_;
    double rho_;
    std::uint64_t seed_;
    Kernel nominal_;
    std::vector<SliceEstimate> bootstrap_;
};

struct Selection {
    double psi = 0.0;
    std::size_t index = 0;
    Solution solution;            ///< re-solved on the full training set
    std::vector<double> scores;   ///< validation: mean validation reward per psi; reliability: success count per psi
    bool fallback = false;        ///< reliability: no psi reached gamma
    std::vector<std::string> warnings;
};

/// Splits units by a seeded shuffle; the first part has round(fraction n) units, clamped to [1, n-1].
std::pair<TrajectorySet, TrajectorySet> split_units(const TrajectorySet& ts, double fraction, std::uint64_t seed);

/// psi* = argmax of mean validation reward (ties to the smaller ambiguity), re-solved on all of `train`.
Selection select_psi_validation(const TrajectorySet& train, const ExperimentConfig& config, std::uint64_t seed);

/**
 * q unit-level bootstrap samples of `train`, each split into a fitting and a
 * validation part. psi_gamma is the first grid point whose success count is
 * at least ceil(gamma q); the last grid point with a warning otherwise.
 */
Selection select_psi_reliability(const TrajectorySet& train, const ExperimentConfig& config, std::uint64_t seed);

/// Per-psi reward and reliability curves.
ExperimentReport run_impact(const ExperimentConfig& config);
/// Repeated selection runs, scored on fresh test data.
ExperimentReport run_selection(const ExperimentConfig& config);

struct ViolationRanges {
    std::pair<double, double> a0{10.0, 50.0};
    std::pair<double, double> a1{1.0, 15.0};
    std::pair<double, double> a2{1.0, 15.0};
    std::pair<double, double> reman_cost{0.0, 10.0};
    std::pair<double, double> salvage{0.0, 10.0};
    std::pair<double, double> theta{0.0, 2.0};
    std::pair<double, double> beta{0.01, 0.99};
};

struct ViolationOptions {
    int num_instances = 5000;
    ViolationRanges ranges;
    int num_conditions = 7;
    int max_reman = 10;
    double rho = 0.07;
    double epsilon = 1e-4;
    std::uint64_t seed = 42;
    int threads = 1;
    int max_draws = 100000;  ///< per instance, before giving up on the salvage condition
};

struct ViolationInstance {
    double a0 = 0, a1 = 0, a2 = 0, reman_cost = 0, salvage = 0, theta = 0, beta = 0;
    int rejected_draws = 0;
    bool condition_violated = false;
    bool control_limit = false;
    bool monotone_in_k = false;
};

struct ViolationSummary {
    int instances = 0;
    int rejected_draws = 0;
    int condition_violated = 0;
    int broken_given_violated = 0;  ///< not monotone in k among condition-violating instances
    int broken_total = 0;
    int not_control_limit = 0;
    std::vector<ViolationInstance> records;

    double broken_fraction() const {
        return condition_violated == 0 ? 0.0 : static_cast<double>(broken_given_violated) / condition_violated;
    }
};

/**
 * Random instances with r(s,k) = a0 - a1 k - a2 s, a random IFR base slice
 * degraded over k, and a scalar KL radius. Draws failing the salvage
 * condition are redrawn and counted.
 */
ViolationSummary violation_study(const ViolationOptions& options);

}  // namespace reman
