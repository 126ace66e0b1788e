#include "reman/ambiguity.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace reman {

namespace {

std::string row_name(int s, int k) {
    std::ostringstream os;
    os << "(s=" << s << ", k=" << k << ")";
    return os.str();
}

}  // namespace

void KLAmbiguity::validate() const {
    validate_kernel(nominal);
    if (theta.rows() != nominal.num_conditions() || theta.cols() != nominal.max_reman() + 1)
        throw std::invalid_argument("KL radius table must be (states) x (k_max + 1)");
    for (Eigen::Index i = 0; i < theta.size(); ++i)
        if (!(theta.data()[i] >= 0.0)) throw std::invalid_argument("KL radius must be non-negative");
}

KLAmbiguity make_kl_ambiguity(Kernel nominal, double theta) {
    if (!(theta >= 0.0)) throw std::invalid_argument("KL radius must be non-negative");
    KLAmbiguity amb;
    amb.theta = Matrix::Constant(nominal.num_conditions(), nominal.max_reman() + 1, theta);
    amb.nominal = std::move(nominal);
    amb.validate();
    return amb;
}

KLAmbiguity make_kl_ambiguity(Kernel nominal, const Vector& theta_per_state) {
    if (theta_per_state.size() != nominal.num_conditions())
        throw std::invalid_argument("per-state KL radius has wrong length");
    KLAmbiguity amb;
    amb.theta = theta_per_state.replicate(1, nominal.max_reman() + 1);
    amb.nominal = std::move(nominal);
    amb.validate();
    return amb;
}

void IntervalAmbiguity::validate() const {
    if (lower.empty() || lower.size() != upper.size()) throw std::invalid_argument("interval bounds are empty or ragged");
    const auto n = lower.front().rows();
    for (std::size_t k = 0; k < lower.size(); ++k) {
        const Matrix& l = lower[k];
        const Matrix& u = upper[k];
        if (l.rows() != n || l.cols() != n || u.rows() != n || u.cols() != n)
            throw std::invalid_argument("interval bound slices must be square and equal-sized");
        for (Eigen::Index s = 0; s < n; ++s) {
            const auto where = row_name(static_cast<int>(s), static_cast<int>(k));
            for (Eigen::Index t = 0; t < n; ++t) {
                if (!(l(s, t) >= 0.0 && l(s, t) <= u(s, t) + kRowSumTolerance && u(s, t) <= 1.0 + kRowSumTolerance))
                    throw std::invalid_argument("interval bounds out of order at " + where);
                if (t < s && u(s, t) != 0.0)
                    throw std::invalid_argument("interval upper bound below the diagonal at " + where);
            }
            if (l.row(s).sum() > 1.0 + kRowSumTolerance || u.row(s).sum() < 1.0 - kRowSumTolerance)
                throw std::invalid_argument("infeasible interval row " + where);
        }
    }
}

IntervalAmbiguity singleton_box(const Kernel& kernel) {
    validate_kernel(kernel);
    IntervalAmbiguity amb;
    amb.lower = kernel.slices;
    amb.upper = kernel.slices;
    amb.alpha = 1.0;
    return amb;
}

// Series for x < a + 1, Lentz continued fraction for the complement otherwise.
double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) throw std::invalid_argument("regularized_gamma_p: need a > 0, x >= 0");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    const double log_prefactor = -x + a * std::log(x) - std::lgamma(a);
    constexpr double eps = 1e-16;
    if (x < a + 1.0) {
        double ap = a;
        double term = 1.0 / a;
        double sum = term;
        for (int n = 0; n < 10000; ++n) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::abs(term) < std::abs(sum) * eps) break;
        }
        return std::min(1.0, sum * std::exp(log_prefactor));
    }
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < eps) break;
    }
    return std::max(0.0, 1.0 - std::exp(log_prefactor) * h);
}

double chi_square_quantile(double df, double probability) {
    if (!(df > 0.0)) throw std::invalid_argument("chi-square degrees of freedom must be positive");
    if (!(probability > 0.0 && probability < 1.0)) throw std::invalid_argument("chi-square probability must lie in (0,1)");
    auto cdf = [&](double x) { return regularized_gamma_p(0.5 * df, 0.5 * x); };
    double lo = 0.0;
    double hi = std::max(1.0, df);
    while (cdf(hi) < probability) {
        lo = hi;
        hi *= 2.0;
    }
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (cdf(mid) < probability)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-15 * hi) break;
    }
    return 0.5 * (lo + hi);
}

Vector kl_radius_from_counts(const CountMatrix& counts, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
    const auto n = counts.counts.rows();
    const double q = chi_square_quantile(static_cast<double>(n - 1), 1.0 - alpha);
    Vector theta(n);
    for (Eigen::Index s = 0; s < n; ++s) {
        const long total = counts.counts.row(s).sum();
        theta(s) = total > 0 ? q / (2.0 * static_cast<double>(total)) : std::numeric_limits<double>::infinity();
    }
    return theta;
}

double sample_quantile(std::vector<double> values, double probability) {
    if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(probability, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

IntervalAmbiguity interval_from_bootstrap(std::span<const SliceEstimate> samples, double alpha, int k_max,
                                          double rho, std::uint64_t source_seed) {
    if (samples.size() < 2) throw std::invalid_argument("interval bounds need at least 2 bootstrap samples");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
    const auto n = samples.front().slice.rows();

    std::vector<Kernel> degraded;
    degraded.reserve(samples.size());
    for (const auto& est : samples) {
        if (est.slice.rows() != n) throw std::invalid_argument("bootstrap slices differ in size");
        degraded.push_back(degrade_kernel(est.slice, rho, k_max));
    }

    IntervalAmbiguity raw;
    raw.alpha = alpha;
    raw.source_seed = source_seed;
    raw.lower.assign(static_cast<std::size_t>(k_max) + 1, Matrix::Zero(n, n));
    raw.upper.assign(static_cast<std::size_t>(k_max) + 1, Matrix::Zero(n, n));

    std::vector<std::size_t> informative;
    std::vector<double> column;
    for (Eigen::Index s = 0; s < n; ++s) {
        informative.clear();
        for (std::size_t b = 0; b < samples.size(); ++b)
            if (!samples[b].unvisited[static_cast<std::size_t>(s)]) informative.push_back(b);
        for (int k = 0; k <= k_max; ++k) {
            auto& l = raw.lower[static_cast<std::size_t>(k)];
            auto& u = raw.upper[static_cast<std::size_t>(k)];
            if (informative.size() < 2) {
                // a single informative draw (or none) pins the row
                const std::size_t b = informative.empty() ? 0 : informative.front();
                l.row(s) = degraded[b][k].row(s);
                u.row(s) = degraded[b][k].row(s);
                continue;
            }
            // the box always holds the mean bootstrap row, so it is feasible
            // and nested across alpha
            for (Eigen::Index t = s; t < n; ++t) {
                column.clear();
                double mean = 0.0;
                for (auto b : informative) {
                    column.push_back(degraded[b][k](s, t));
                    mean += column.back();
                }
                mean /= static_cast<double>(column.size());
                l(s, t) = std::min(sample_quantile(column, alpha / 2.0), mean);
                u(s, t) = std::max(sample_quantile(column, 1.0 - alpha / 2.0), mean);
            }
        }
    }
    return tighten_bounds(raw);
}

IntervalAmbiguity tighten_bounds(const IntervalAmbiguity& raw) {
    IntervalAmbiguity out = raw;
    const auto n = raw.num_conditions();
    for (std::size_t k = 0; k < raw.lower.size(); ++k) {
        const Matrix& l = raw.lower[k];
        const Matrix& u = raw.upper[k];
        for (Eigen::Index s = 0; s < n; ++s) {
            const double sl = l.row(s).sum();
            const double su = u.row(s).sum();
            if (sl > 1.0 + kRowSumTolerance || su < 1.0 - kRowSumTolerance)
                throw std::invalid_argument("infeasible interval row " + row_name(static_cast<int>(s), static_cast<int>(k)));
            for (Eigen::Index t = 0; t < n; ++t) {
                if (l(s, t) > u(s, t) + kRowSumTolerance)
                    throw std::invalid_argument("lower bound exceeds upper bound in row " +
                                                row_name(static_cast<int>(s), static_cast<int>(k)));
                double hi = std::min(u(s, t), 1.0 - (sl - l(s, t)));
                double lo = std::max(l(s, t), 1.0 - (su - u(s, t)));
                if (u(s, t) == 0.0) {
                    hi = 0.0;
                    lo = 0.0;
                }
                out.lower[k](s, t) = std::clamp(lo, 0.0, 1.0);
                out.upper[k](s, t) = std::clamp(std::max(hi, out.lower[k](s, t)), 0.0, 1.0);
            }
        }
    }
    return out;
}

BoundConditionReport check_bound_conditions(const IntervalAmbiguity& amb) {
    BoundConditionReport rep;
    const int n = amb.num_conditions();
    const int kmax = amb.max_reman();
    auto head = [&](const Matrix& m, int row, int i) { return m.row(row).head(i + 1).sum(); };
    auto tail = [&](const Matrix& m, int row, int i) { return m.row(row).tail(n - i).sum(); };

    // Heads are compared on [s', S-1] and tails on (s', S]; elsewhere the
    // worst-case sums are 0 or 1 by the support and the comparison is vacuous.
    for (int k = 0; k <= kmax; ++k) {
        const Matrix& l = amb.lower[static_cast<std::size_t>(k)];
        const Matrix& u = amb.upper[static_cast<std::size_t>(k)];
        for (int s = 0; s + 1 < n; ++s)
            for (int i = s + 1; i < n; ++i) {
                if (i < n - 1 && head(l, s, i) < head(l, s + 1, i) - kOrderTolerance) {
                    rep.lower_head_in_s = false;
                    rep.violations.push_back({i, s, s + 1, k, 's', true});
                }
                if (i > s + 1 && tail(u, s, i) > tail(u, s + 1, i) + kOrderTolerance) {
                    rep.upper_tail_in_s = false;
                    rep.violations.push_back({i, s, s + 1, k, 's', false});
                }
            }
    }
    for (int k = 0; k < kmax; ++k) {
        const Matrix& l0 = amb.lower[static_cast<std::size_t>(k)];
        const Matrix& l1 = amb.lower[static_cast<std::size_t>(k) + 1];
        const Matrix& u0 = amb.upper[static_cast<std::size_t>(k)];
        const Matrix& u1 = amb.upper[static_cast<std::size_t>(k) + 1];
        for (int s = 0; s < n; ++s)
            for (int i = s; i < n; ++i) {
                if (i < n - 1 && head(l0, s, i) < head(l1, s, i) - kOrderTolerance) {
                    rep.lower_head_in_k = false;
                    rep.violations.push_back({i, s, k + 1, k, 'k', true});
                }
                if (i > s && tail(u0, s, i) > tail(u1, s, i) + kOrderTolerance) {
                    rep.upper_tail_in_k = false;
                    rep.violations.push_back({i, s, k + 1, k, 'k', false});
                }
            }
    }
    return rep;
}

}  // namespace reman
