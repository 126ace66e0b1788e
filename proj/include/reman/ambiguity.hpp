#pragma once

#include "reman/estimate.hpp"
#include "reman/model.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace reman {

/// Bound tables share the kernel layout: one (S+1) x (S+1) matrix per k.
using BoundTable = std::vector<Matrix>;

/// KL ball of radius theta(s,k) around each nominal row. +inf means unconstrained.
struct KLAmbiguity {
    Kernel nominal;
    Matrix theta;  ///< (S+1) x (K_max+1)

    void validate() const;
};

KLAmbiguity make_kl_ambiguity(Kernel nominal, double theta);
/// Per-state radii, reused for every k.
KLAmbiguity make_kl_ambiguity(Kernel nominal, const Vector& theta_per_state);

/// Entrywise box intersected with the simplex.
struct IntervalAmbiguity {
    BoundTable lower;
    BoundTable upper;
    double alpha = 0.05;
    std::uint64_t source_seed = 0;

    int num_conditions() const { return lower.empty() ? 0 : static_cast<int>(lower.front().rows()); }
    int max_reman() const { return static_cast<int>(lower.size()) - 1; }
    /// Checks shape, 0 <= lower <= upper <= 1, row feasibility and the zero pattern below the diagonal.
    void validate() const;
};

/// Box with lower = upper = kernel.
IntervalAmbiguity singleton_box(const Kernel& kernel);

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

/// Quantile of the chi-square distribution with `df` degrees of freedom.
double chi_square_quantile(double df, double probability);

/// theta_s = chi2_{|S|-1, 1-alpha} / (2 N_s); rows with N_s = 0 get +inf.
Vector kl_radius_from_counts(const CountMatrix& counts, double alpha);

/// D(p || q) = sum p log(p/q), with 0 log(0/q) = 0 and +inf when p > 0 = q.
template <typename DerivedP, typename DerivedQ>
double kl_divergence(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double pi = static_cast<double>(p(i));
        const double qi = static_cast<double>(q(i));
        if (pi <= 0.0) continue;
        if (qi <= 0.0) return std::numeric_limits<double>::infinity();
        d += pi * std::log(pi / qi);
    }
    return std::max(d, 0.0);
}

/// Linear-interpolation sample quantile (the `type 7` definition).
double sample_quantile(std::vector<double> values, double probability);

/**
 * Percentile bounds per entry from bootstrap slices. For k > 0 every
 * bootstrap slice is degraded first and quantiles are taken per k. A row only
 * uses the samples in which it was observed; rows never observed stay
 * self-absorbing. Each row's box is widened to contain the mean of its
 * informative samples, then the result is tightened.
 */
IntervalAmbiguity interval_from_bootstrap(std::span<const SliceEstimate> samples, double alpha, int k_max,
                                          double rho = 0.07, std::uint64_t source_seed = 0);

/// Effective bounds: upper' = min{upper, 1 - sum_{other} lower}, lower' = max{lower, 1 - sum_{other} upper}.
IntervalAmbiguity tighten_bounds(const IntervalAmbiguity& raw);

struct BoundViolation {
    int i = 0;
    int s = 0;
    int s_prime = 0;  ///< compared row (state s' or count k' depending on `axis`)
    int k = 0;
    char axis = 's';  ///< 's' for the condition axis, 'k' for the remanufacture axis
    bool lower = true;
};

struct BoundConditionReport {
    bool lower_head_in_s = true;
    bool upper_tail_in_s = true;
    bool lower_head_in_k = true;
    bool upper_tail_in_k = true;
    std::vector<BoundViolation> violations;

    bool ok() const { return violations.empty(); }
};

/**
 * Lower-bound head sums non-increasing and upper-bound tail sums
 * non-decreasing, along s for each k and along k for each s. Rows s < s' are
 * compared on heads up to i in [s', S-1] and tails from i in (s', S]; at the
 * other indices the support of the rows already fixes the worst-case sums,
 * and with an absorbing worst state the unrestricted comparison would only
 * admit singleton boxes.
 */
BoundConditionReport check_bound_conditions(const IntervalAmbiguity& amb);

}  // namespace reman
