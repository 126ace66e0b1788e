#include "reman/solver.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace reman {

namespace {

void check_dimensions(const ModelSpec& model, const Ambiguity& amb) {
    const int n = model.space.num_conditions;
    const int kmax = model.space.max_reman;
    std::visit(
        [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            int an = 0;
            int ak = 0;
            if constexpr (std::is_same_v<T, KLAmbiguity>) {
                an = a.nominal.num_conditions();
                ak = a.nominal.max_reman();
            } else {
                an = a.num_conditions();
                ak = a.max_reman();
            }
            if (an != n || ak != kmax) {
                std::ostringstream os;
                os << "ambiguity set is " << an << " states x k_max " << ak << ", model is " << n << " x " << kmax;
                throw std::invalid_argument(os.str());
            }
        },
        amb);
}

}  // namespace

InnerResult wait_value(int s, int k, const Matrix& values, const ModelSpec& model, const Ambiguity& amb,
                       std::optional<double> mu_start) {
    const Vector v = model.beta * values.col(k);
    InnerResult res = std::visit(
        [&](const auto& a) -> InnerResult {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, KLAmbiguity>) {
                return kl_inner(a.nominal[k].row(s).transpose(), v, a.theta(s, k), mu_start);
            } else {
                const auto& lo = a.lower[static_cast<std::size_t>(k)];
                const auto& up = a.upper[static_cast<std::size_t>(k)];
                if (is_non_increasing(v)) return interval_inner_greedy(lo.row(s).transpose(), up.row(s).transpose(), v);
                return interval_inner_dual(lo.row(s).transpose(), up.row(s).transpose(), v);
            }
        },
        amb);
    res.value += model.rewards.reward(s, k);
    return res;
}

std::array<double, kNumActions> q_values(int s, int k, const Matrix& values, const ModelSpec& model,
                                         const Ambiguity& amb) {
    std::array<double, kNumActions> q{};
    q[0] = wait_value(s, k, values, model, amb).value;
    q[1] = k < model.space.max_reman ? -model.reman_cost + model.beta * values(0, k + 1) : kUnavailable;
    q[2] = model.salvage;
    return q;
}

double stopping_threshold(double beta, double epsilon) { return (1.0 - beta) * epsilon / (4.0 * beta); }

Solution robust_value_iteration(const ModelSpec& model, const Ambiguity& amb, double epsilon, int max_iterations) {
    model.validate();
    check_dimensions(model, amb);
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    std::visit([](const auto& a) { a.validate(); }, amb);

    const int n = model.space.num_conditions;
    const int kmax = model.space.max_reman;
    const double threshold = stopping_threshold(model.beta, epsilon);

    Solution sol;
    sol.values = Matrix::Zero(n, kmax + 1);
    sol.policy = Policy(n, kmax);
    sol.worst_kernel.slices.assign(static_cast<std::size_t>(kmax) + 1, Matrix::Zero(n, n));

    // warm starts for the KL multiplier search, one per (s,k)
    Matrix mu_hint = Matrix::Constant(n, kmax + 1, std::numeric_limits<double>::quiet_NaN());
    Matrix next(n, kmax + 1);

    for (int iter = 1;; ++iter) {
        if (iter > max_iterations) throw std::runtime_error("robust value iteration did not converge");
        for (int k = 0; k <= kmax; ++k) {
            for (int s = 0; s < n; ++s) {
                const double hint = mu_hint(s, k);
                const InnerResult wait =
                    wait_value(s, k, sol.values, model, amb,
                               std::isfinite(hint) && hint > 0.0 ? std::optional<double>(hint) : std::nullopt);
                if (wait.dual > 0.0 && std::isfinite(wait.dual)) mu_hint(s, k) = wait.dual;
                sol.worst_kernel[k].row(s) = wait.worst_row.transpose();

                const double reman = k < kmax ? -model.reman_cost + model.beta * sol.values(0, k + 1) : kUnavailable;
                double best = wait.value;
                Action act = Action::Wait;
                if (reman > best) {
                    best = reman;
                    act = Action::Remanufacture;
                }
                if (model.salvage > best) {
                    best = model.salvage;
                    act = Action::Scrap;
                }
                next(s, k) = best;
                sol.policy(s, k) = act;
            }
        }
        const double residual = (next - sol.values).cwiseAbs().maxCoeff();
        sol.values = next;
        sol.residual = residual;
        sol.residual_history.push_back(residual);
        sol.iterations = iter;
        if (residual < threshold) break;
    }

    const ControlLimits limits = extract_control_limits(sol.policy);
    if (kmax > 0 && limits.k_star >= kmax) {
        sol.warnings.push_back("remanufacturing is still chosen at k = K_max - 1; the truncation at K_max = " +
                               std::to_string(kmax) + " may bind");
    }
    return sol;
}

ControlLimits extract_control_limits(const Policy& policy) {
    const int n = policy.num_conditions();
    const int kmax = policy.max_reman();
    ControlLimits cl;
    cl.never = n;
    cl.zeta_rm.assign(static_cast<std::size_t>(kmax) + 1, n);
    cl.zeta_scrap.assign(static_cast<std::size_t>(kmax) + 1, n);
    cl.is_control_limit = true;

    std::vector<bool> has_rm(static_cast<std::size_t>(kmax) + 1, false);
    for (int k = 0; k <= kmax; ++k) {
        int first = n;
        for (int s = 0; s < n; ++s)
            if (policy(s, k) != Action::Wait) {
                first = s;
                break;
            }
        if (first < n) {
            const Action x = policy(first, k);
            for (int s = first; s < n; ++s)
                if (policy(s, k) != x) cl.is_control_limit = false;
        }
        for (int s = 0; s < n; ++s)
            if (policy(s, k) == Action::Remanufacture) has_rm[static_cast<std::size_t>(k)] = true;
    }

    cl.k_star = kmax + 1;
    for (int k = 0; k <= kmax; ++k)
        if (!has_rm[static_cast<std::size_t>(k)]) {
            cl.k_star = k;
            break;
        }

    auto first_of = [&](int k, Action a) {
        for (int s = 0; s < n; ++s)
            if (policy(s, k) == a) return s;
        return n;
    };
    for (int k = 0; k <= kmax; ++k) {
        if (k < cl.k_star)
            cl.zeta_rm[static_cast<std::size_t>(k)] = first_of(k, Action::Remanufacture);
        else
            cl.zeta_scrap[static_cast<std::size_t>(k)] = first_of(k, Action::Scrap);
    }

    bool mono = cl.is_control_limit;
    for (int k = cl.k_star; k <= kmax; ++k)
        if (has_rm[static_cast<std::size_t>(k)]) mono = false;
    for (int k = 0; k + 1 < cl.k_star; ++k)
        if (cl.zeta_rm[static_cast<std::size_t>(k) + 1] > cl.zeta_rm[static_cast<std::size_t>(k)]) mono = false;
    for (int k = cl.k_star; k + 1 <= kmax; ++k)
        if (cl.zeta_scrap[static_cast<std::size_t>(k) + 1] > cl.zeta_scrap[static_cast<std::size_t>(k)]) mono = false;
    cl.is_monotone_in_k = mono;
    return cl;
}

Matrix evaluate_policy(const Policy& policy, const Kernel& kernel, const ModelSpec& model, double epsilon) {
    model.validate();
    const int n = model.space.num_conditions;
    const int kmax = model.space.max_reman;
    if (policy.num_conditions() != n || policy.max_reman() != kmax)
        throw std::invalid_argument("policy and model dimensions differ");
    if (kernel.num_conditions() != n || kernel.max_reman() != kmax)
        throw std::invalid_argument("kernel and model dimensions differ");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    for (int s = 0; s < n; ++s)
        if (policy(s, kmax) == Action::Remanufacture)
            throw std::invalid_argument("policy remanufactures at k = K_max, which is outside the truncated model");

    const double stop = epsilon * (1.0 - model.beta) / model.beta;
    Matrix v = Matrix::Zero(n, kmax + 1);
    Matrix next(n, kmax + 1);
    for (long iter = 0; iter < 100000000L; ++iter) {
        for (int k = 0; k <= kmax; ++k)
            for (int s = 0; s < n; ++s) {
                switch (policy(s, k)) {
                case Action::Wait:
                    next(s, k) = model.rewards.reward(s, k) + model.beta * kernel[k].row(s).dot(v.col(k));
                    break;
                case Action::Remanufacture:
                    next(s, k) = -model.reman_cost + model.beta * v(0, k + 1);
                    break;
                case Action::Scrap:
                    next(s, k) = model.salvage;
                    break;
                }
            }
        const double diff = (next - v).cwiseAbs().maxCoeff();
        v.swap(next);
        if (diff <= stop) return v;
    }
    throw std::runtime_error("policy evaluation did not converge");
}

Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> check_monotone_threshold_condition(const ModelSpec& model) {
    model.validate();
    const int n = model.space.num_conditions;
    const int kmax = model.space.max_reman;
    const double lhs = model.beta * model.rewards.reward(0, 0) / (1.0 - model.beta) - model.beta * model.salvage;
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> out(n, kmax);
    for (int s = 0; s < n; ++s)
        for (int k = 0; k < kmax; ++k)
            out(s, k) = lhs <= model.rewards.reward(s, k) - model.rewards.reward(s, k + 1);
    return out;
}

bool values_monotone(const Matrix& values, double tol) {
    for (Eigen::Index s = 0; s < values.rows(); ++s)
        for (Eigen::Index k = 0; k < values.cols(); ++k) {
            if (s + 1 < values.rows() && values(s + 1, k) > values(s, k) + tol) return false;
            if (k + 1 < values.cols() && values(s, k + 1) > values(s, k) + tol) return false;
        }
    return true;
}

}  // namespace reman
