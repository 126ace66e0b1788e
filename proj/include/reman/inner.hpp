#pragma once

#include "reman/model.hpp"

#include <optional>

namespace reman {

/// Worst-case expectation min_p sum p(s') v(s') over one ambiguity row.
struct InnerResult {
    double value = 0.0;
    Vector worst_row;
    /// KL: the optimal multiplier mu* (0 when the mu -> 0 limit is attained).
    /// Interval: the optimal break point lambda*.
    double dual = 0.0;
};

using RowRef = Eigen::Ref<const Vector>;

/**
 * KL ball of radius `theta` around `nominal`. Maximizes the concave dual
 *   g(mu) = -mu log sum p(s') exp(-v(s')/mu) - mu theta
 * over mu > 0. The bracket grows geometrically from `mu_start` (1.0 unless a
 * warm start is given) until g' changes sign, golden-section search narrows
 * it, and a bisection on g' = KL(q_mu || p) - theta finishes so that the
 * returned tilted row satisfies KL <= theta.
 *
 * Entries with zero nominal mass are outside the support and stay zero.
 */
InnerResult kl_inner(const RowRef& nominal, const RowRef& values, double theta,
                     std::optional<double> mu_start = std::nullopt);

/// Evaluates g(mu) for the row. Exposed for tests and debugging.
double kl_dual_objective(const RowRef& nominal, const RowRef& values, double theta, double mu);

/// Exponential tilt q(s') proportional to p(s') exp(-v(s')/mu).
Vector kl_tilt(const RowRef& nominal, const RowRef& values, double mu);

/**
 * Box [lower, upper] intersected with the simplex, values non-increasing in
 * the index. Fills upper bounds from the worst state downward and lower
 * bounds from the best state upward, with the residual at the break index.
 * Throws std::invalid_argument if the values are not non-increasing.
 */
InnerResult interval_inner_greedy(const RowRef& lower, const RowRef& upper, const RowRef& values);

/**
 * Same problem for arbitrary values: the dual
 *   sum v u + lambda (1 - sum u) + sum (v - lambda)^+ (l - u)
 * is piecewise linear in lambda with break points at the values; the best
 * break point is found by enumeration and the primal is recovered by
 * complementary slackness. Residual mass among tied states goes to the
 * smallest index first.
 */
InnerResult interval_inner_dual(const RowRef& lower, const RowRef& upper, const RowRef& values);

/// True if v(i+1) <= v(i) for every i.
bool is_non_increasing(const RowRef& values);

}  // namespace reman
