#include "reman/inner.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace reman {

namespace {

constexpr double kGoldenTolerance = 1e-10;
constexpr int kGoldenMaxIterations = 200;
constexpr int kBracketMaxSteps = 2000;
constexpr double kFeasibilityTolerance = 1e-12;

void check_inputs(const RowRef& a, const RowRef& values) {
    if (a.size() != values.size() || a.size() == 0) throw std::invalid_argument("inner problem: size mismatch");
    if (!values.allFinite()) throw std::invalid_argument("inner problem: non-finite values");
    if (a.hasNaN()) throw std::invalid_argument("inner problem: NaN in distribution");
}

// Shifted log-partition log sum_{support} p exp(-w/mu), with w = v - vmin >= 0.
struct TiltWorkspace {
    const RowRef& p;
    const RowRef& v;
    double vmin;

    double log_partition(double mu) const {
        double z = 0.0;
        for (Eigen::Index j = 0; j < p.size(); ++j)
            if (p(j) > 0.0) z += p(j) * std::exp(-(v(j) - vmin) / mu);
        return std::log(z);
    }

    // g(mu) and KL(q_mu || p) in one pass
    void evaluate(double mu, double theta, double& g, double& kl) const {
        double z = 0.0;
        double zw = 0.0;
        for (Eigen::Index j = 0; j < p.size(); ++j) {
            if (p(j) <= 0.0) continue;
            const double w = v(j) - vmin;
            const double e = p(j) * std::exp(-w / mu);
            z += e;
            zw += e * w;
        }
        const double log_z = std::log(z);
        g = vmin - mu * log_z - mu * theta;
        kl = std::max(0.0, -zw / (z * mu) - log_z);
    }
};

}  // namespace

double kl_dual_objective(const RowRef& nominal, const RowRef& values, double theta, double mu) {
    check_inputs(nominal, values);
    double vmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < nominal.size(); ++j)
        if (nominal(j) > 0.0) vmin = std::min(vmin, values(j));
    TiltWorkspace ws{nominal, values, vmin};
    return vmin - mu * ws.log_partition(mu) - mu * theta;
}

Vector kl_tilt(const RowRef& nominal, const RowRef& values, double mu) {
    check_inputs(nominal, values);
    double vmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < nominal.size(); ++j)
        if (nominal(j) > 0.0) vmin = std::min(vmin, values(j));
    Vector q = Vector::Zero(nominal.size());
    for (Eigen::Index j = 0; j < nominal.size(); ++j)
        if (nominal(j) > 0.0) q(j) = nominal(j) * std::exp(-(values(j) - vmin) / mu);
    return q / q.sum();
}

InnerResult kl_inner(const RowRef& nominal, const RowRef& values, double theta, std::optional<double> mu_start) {
    check_inputs(nominal, values);
    if (std::isnan(theta) || theta < 0.0) throw std::invalid_argument("KL radius must be non-negative");

    InnerResult res;
    if (theta == 0.0) {
        res.worst_row = nominal;
        res.value = nominal.dot(values);
        res.dual = std::numeric_limits<double>::infinity();
        return res;
    }

    double vmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < nominal.size(); ++j)
        if (nominal(j) > 0.0) vmin = std::min(vmin, values(j));
    double mass_min = 0.0;
    for (Eigen::Index j = 0; j < nominal.size(); ++j)
        if (nominal(j) > 0.0 && values(j) == vmin) mass_min += nominal(j);

    // mu -> 0: the ball reaches the nominal restricted to the minimizers.
    if (theta >= -std::log(mass_min)) {
        res.worst_row = Vector::Zero(nominal.size());
        for (Eigen::Index j = 0; j < nominal.size(); ++j)
            if (nominal(j) > 0.0 && values(j) == vmin) res.worst_row(j) = nominal(j) / mass_min;
        res.value = vmin;
        res.dual = 0.0;
        return res;
    }

    const TiltWorkspace ws{nominal, values, vmin};
    double g = 0.0;
    double kl = 0.0;
    auto slope = [&](double mu) {
        ws.evaluate(mu, theta, g, kl);
        return kl - theta;  // g'(mu)
    };

    double mu0 = mu_start.value_or(1.0);
    if (!(mu0 > 0.0) || !std::isfinite(mu0)) mu0 = 1.0;
    double lo = mu0;
    double hi = mu0;
    if (slope(mu0) > 0.0) {
        hi = 2.0 * mu0;
        for (int i = 0; i < kBracketMaxSteps && slope(hi) > 0.0; ++i) {
            lo = hi;
            hi *= 2.0;
        }
    } else {
        lo = 0.5 * mu0;
        for (int i = 0; i < kBracketMaxSteps && slope(lo) <= 0.0; ++i) {
            hi = lo;
            lo *= 0.5;
        }
    }

    // golden-section on the concave dual
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double gc = 0.0;
    double gd = 0.0;
    ws.evaluate(c, theta, gc, kl);
    ws.evaluate(d, theta, gd, kl);
    for (int it = 0; it < kGoldenMaxIterations && (b - a) > kGoldenTolerance * b; ++it) {
        if (gc >= gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            ws.evaluate(c, theta, gc, kl);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            ws.evaluate(d, theta, gd, kl);
        }
    }

    // finish on the sign of g' so that the tilted row stays inside the ball
    if (!(slope(a) > 0.0)) a = lo;
    if (slope(b) > 0.0) b = hi;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        if (slope(mid) > 0.0)
            a = mid;
        else
            b = mid;
    }
    const double mu = b;

    res.dual = mu;
    res.worst_row = kl_tilt(nominal, values, mu);
    res.value = res.worst_row.dot(values);
    return res;
}

bool is_non_increasing(const RowRef& values) {
    for (Eigen::Index i = 0; i + 1 < values.size(); ++i)
        if (values(i + 1) > values(i)) return false;
    return true;
}

namespace {

void check_box(const RowRef& lower, const RowRef& upper, const RowRef& values) {
    check_inputs(lower, values);
    if (upper.size() != values.size()) throw std::invalid_argument("inner problem: size mismatch");
    if (lower.sum() > 1.0 + kFeasibilityTolerance || upper.sum() < 1.0 - kFeasibilityTolerance)
        throw std::invalid_argument("infeasible interval row");
    for (Eigen::Index i = 0; i < lower.size(); ++i)
        if (lower(i) > upper(i) + kFeasibilityTolerance) throw std::invalid_argument("lower bound exceeds upper bound");
}

}  // namespace

InnerResult interval_inner_greedy(const RowRef& lower, const RowRef& upper, const RowRef& values) {
    check_box(lower, upper, values);
    if (!is_non_increasing(values))
        throw std::invalid_argument("greedy interval solver needs non-increasing values; use interval_inner_dual");
    const Eigen::Index n = values.size();

    // suffix[i] = sum_{j >= i} upper(j)
    Vector suffix = Vector::Zero(n + 1);
    for (Eigen::Index i = n - 1; i >= 0; --i) suffix(i) = suffix(i + 1) + upper(i);

    double head = 0.0;  // sum_{j < delta} lower(j)
    Eigen::Index delta = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (head + lower(i) + suffix(i + 1) <= 1.0 + kFeasibilityTolerance) {
            delta = i;
            break;
        }
        head += lower(i);
    }
    if (delta == n - 1) {
        head = lower.head(n - 1).sum();
    }

    InnerResult res;
    res.worst_row = Vector(n);
    for (Eigen::Index i = 0; i < delta; ++i) res.worst_row(i) = lower(i);
    for (Eigen::Index i = delta + 1; i < n; ++i) res.worst_row(i) = upper(i);
    res.worst_row(delta) = 1.0 - head - suffix(delta + 1);
    res.value = res.worst_row.dot(values);
    res.dual = values(delta);
    return res;
}

InnerResult interval_inner_dual(const RowRef& lower, const RowRef& upper, const RowRef& values) {
    check_box(lower, upper, values);
    const Eigen::Index n = values.size();
    const double base = values.dot(upper);
    const double slack = 1.0 - upper.sum();
    auto objective = [&](double lambda) {
        double acc = base + lambda * slack;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double excess = values(j) - lambda;
            if (excess > 0.0) acc += excess * (lower(j) - upper(j));
        }
        return acc;
    };

    Eigen::Index best = 0;
    double best_val = objective(values(0));
    for (Eigen::Index j = 1; j < n; ++j) {
        const double val = objective(values(j));
        if (val > best_val) {
            best_val = val;
            best = j;
        }
    }
    const double lambda = values(best);

    InnerResult res;
    res.worst_row = Vector(n);
    double fixed = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (values(j) < lambda) {
            res.worst_row(j) = upper(j);
            fixed += upper(j);
        } else if (values(j) > lambda) {
            res.worst_row(j) = lower(j);
            fixed += lower(j);
        } else {
            res.worst_row(j) = lower(j);
            fixed += lower(j);
        }
    }
    double excess = 1.0 - fixed;
    Eigen::Index first_tied = -1;
    for (Eigen::Index j = 0; j < n && excess > 0.0; ++j) {
        if (values(j) != lambda) continue;
        if (first_tied < 0) first_tied = j;
        const double room = upper(j) - lower(j);
        const double add = std::min(room, excess);
        res.worst_row(j) += add;
        excess -= add;
    }
    if (excess != 0.0) {
        // rounding leftovers go to the smallest tied index
        if (first_tied < 0) first_tied = best;
        res.worst_row(first_tied) += excess;
    }
    res.value = best_val;
    res.dual = lambda;
    return res;
}

}  // namespace reman
