#pragma once

#include "reman/ambiguity.hpp"
#include "reman/inner.hpp"
#include "reman/model.hpp"

#include <array>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace reman {

using Ambiguity = std::variant<KLAmbiguity, IntervalAmbiguity>;

/// Deterministic stationary policy a(s,k).
class Policy {
public:
    Policy() = default;
    Policy(int num_conditions, int max_reman, Action fill = Action::Wait)
        : conditions_(num_conditions), max_reman_(max_reman),
          actions_(static_cast<std::size_t>(num_conditions) * static_cast<std::size_t>(max_reman + 1), fill) {}

    int num_conditions() const { return conditions_; }
    int max_reman() const { return max_reman_; }

    Action operator()(int s, int k) const { return actions_[index(s, k)]; }
    Action& operator()(int s, int k) { return actions_[index(s, k)]; }

    bool operator==(const Policy&) const = default;

private:
    std::size_t index(int s, int k) const {
        return static_cast<std::size_t>(k) * static_cast<std::size_t>(conditions_) + static_cast<std::size_t>(s);
    }

    int conditions_ = 0;
    int max_reman_ = 0;
    std::vector<Action> actions_;
};

struct Solution {
    Matrix values;  ///< V(s,k), (S+1) x (K_max+1)
    Policy policy;
    Kernel worst_kernel;  ///< wait-action rows chosen by the adversary at the final iterate
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> residual_history;
    std::vector<std::string> warnings;
};

inline constexpr double kUnavailable = -std::numeric_limits<double>::infinity();

/// w(s,k;a) for a = wait, remanufacture, scrap. Remanufacture is unavailable at k = K_max.
std::array<double, kNumActions> q_values(int s, int k, const Matrix& values, const ModelSpec& model,
                                         const Ambiguity& amb);

/// Wait-action continuation: r(s,k) + worst-case expectation of beta V(.,k).
InnerResult wait_value(int s, int k, const Matrix& values, const ModelSpec& model, const Ambiguity& amb,
                       std::optional<double> mu_start = std::nullopt);

/// Stopping threshold on ||V_new - V||_inf: (1 - beta) epsilon / (4 beta).
double stopping_threshold(double beta, double epsilon);

/**
 * Jacobi-style robust value iteration from V = 0. Argmax ties prefer the
 * smaller action code. Throws std::runtime_error after `max_iterations`.
 */
Solution robust_value_iteration(const ModelSpec& model, const Ambiguity& amb, double epsilon = 1e-4,
                                int max_iterations = 1000000);

/// Thresholds of a policy. `never` (= S+1) marks an empty region.
struct ControlLimits {
    int k_star = 0;  ///< first k whose remanufacture region is empty
    std::vector<int> zeta_rm;
    std::vector<int> zeta_scrap;
    bool is_control_limit = false;
    bool is_monotone_in_k = false;
    int never = 0;
};

/**
 * is_control_limit: every k-row reads Wait...Wait X...X for one non-wait X.
 * is_monotone_in_k additionally requires remanufacture rows to be exactly
 * k < k*, zeta_rm non-increasing on k < k* and zeta_scrap non-increasing on
 * k >= k*.
 */
ControlLimits extract_control_limits(const Policy& policy);
inline ControlLimits extract_control_limits(const Solution& sol) { return extract_control_limits(sol.policy); }

/// Expected discounted reward of `policy` under a fixed kernel; scrap is terminal.
Matrix evaluate_policy(const Policy& policy, const Kernel& kernel, const ModelSpec& model, double epsilon = 1e-10);

/**
 * Sufficient condition for the remanufacture threshold to be non-increasing
 * in k: beta r(0,0)/(1-beta) - beta c_s <= r(s,k) - r(s,k+1).
 * One entry per (s, k < K_max).
 */
Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> check_monotone_threshold_condition(const ModelSpec& model);

/// Non-increasing in s for each k and in k for each s, within `tol`.
bool values_monotone(const Matrix& values, double tol = 1e-9);

}  // namespace reman
