#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace reman {

/// Row-major so that a transition row `p(.|s)` is a contiguous vector.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Row sums of every transition row must be 1 within this tolerance.
inline constexpr double kRowSumTolerance = 1e-12;

/// Tolerance used by the structural order checks (IFR, dominance, bounds).
inline constexpr double kOrderTolerance = 1e-12;

/**
 * Condition axis 0..S (larger is worse) times remanufacture-count axis
 * 0..K_max. The count axis is a truncation of an unbounded set; at
 * k = K_max remanufacturing is not offered.
 */
struct StateSpace {
    int num_conditions = 7;
    int max_reman = 10;

    int worst() const { return num_conditions - 1; }
    int num_reman_levels() const { return max_reman + 1; }
    std::size_t size() const {
        return static_cast<std::size_t>(num_conditions) * static_cast<std::size_t>(max_reman + 1);
    }
    void validate() const;
};

enum class Action : int { Wait = 0, Remanufacture = 1, Scrap = 2 };

inline constexpr int kNumActions = 3;

const char* to_string(Action a);

/// Gain and environmental cost per period, stored as dense (S+1) x (K_max+1) tables.
struct RewardModel {
    Matrix gain;
    Matrix env_cost;

    /// r(s,k) = g(s,k) - e(s,k)
    double reward(int s, int k) const { return gain(s, k) - env_cost(s, k); }
    Matrix reward_table() const { return gain - env_cost; }

    /// r(s,k) = a0 - a1 k - a2 s, stored as gain with zero environmental cost.
    static RewardModel affine(const StateSpace& space, double a0, double a1, double a2);

    /// g = g0 + gk k + gs s, e = e0 + ek k + es s.
    static RewardModel affine(const StateSpace& space, double g0, double gk, double gs,
                              double e0, double ek, double es);

    static RewardModel from_table(const Matrix& reward);
};

struct ModelSpec {
    StateSpace space;
    RewardModel rewards;
    double beta = 0.9;
    double reman_cost = 2.0;
    double salvage = 0.5;

    /// Throws std::invalid_argument on inconsistent dimensions or beta outside (0,1).
    void validate() const;
};

/// Reward and cost data used throughout the turbofan case study.
ModelSpec case_study_model(int num_conditions = 7, int max_reman = 10);

/**
 * Wait-action transition kernel: one (S+1) x (S+1) row-stochastic,
 * upper-triangular slice per remanufacture count k.
 */
struct Kernel {
    std::vector<Matrix> slices;

    Kernel() = default;
    explicit Kernel(std::vector<Matrix> s) : slices(std::move(s)) {}

    int num_conditions() const { return slices.empty() ? 0 : static_cast<int>(slices.front().rows()); }
    int max_reman() const { return static_cast<int>(slices.size()) - 1; }

    const Matrix& operator[](int k) const { return slices[static_cast<std::size_t>(k)]; }
    Matrix& operator[](int k) { return slices[static_cast<std::size_t>(k)]; }
};

/// Throws std::invalid_argument naming the offending row. Never renormalizes.
void validate_slice(const Matrix& slice, int k = 0);
void validate_kernel(const Kernel& kernel);

/// Tail sums T(j, m) = sum_{i >= m} p(i|j).
template <typename Derived>
Matrix tail_sums(const Eigen::MatrixBase<Derived>& p) {
    const Eigen::Index n = p.cols();
    Matrix t(p.rows(), n);
    for (Eigen::Index j = 0; j < p.rows(); ++j) {
        double acc = 0.0;
        for (Eigen::Index m = n - 1; m >= 0; --m) {
            acc += static_cast<double>(p(j, m));
            t(j, m) = acc;
        }
    }
    return t;
}

/// IFR: every tail sum is non-decreasing in the current state.
template <typename Derived>
bool check_ifr(const Eigen::MatrixBase<Derived>& p) {
    const Matrix t = tail_sums(p);
    for (Eigen::Index j = 0; j + 1 < t.rows(); ++j)
        for (Eigen::Index m = 0; m < t.cols(); ++m)
            if (t(j + 1, m) < t(j, m) - kOrderTolerance) return false;
    return true;
}

inline bool check_ifr(const Kernel& kernel, int k) { return check_ifr(kernel[k]); }

/// True iff `a` dominates `b`: every tail sum of `a` is at least that of `b`.
template <typename DerivedA, typename DerivedB>
bool check_dominance(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("check_dominance: dimension mismatch");
    const Matrix ta = tail_sums(a);
    const Matrix tb = tail_sums(b);
    return ((ta - tb).array() >= -kOrderTolerance).all();
}

/**
 * Moves a fraction `rho` of every entry p(s'|s), s' < S, one state worse.
 * Mass already at the worst state stays there. Equivalent to
 * (1 - rho) P + rho P R with R the absorbing one-step shift.
 */
Matrix shift_worse(const Matrix& slice, double rho);

struct Violation {
    std::string location;
    std::string description;
};

struct StructureReport {
    std::vector<bool> is_ifr_per_k;
    bool dominance_in_k = true;
    bool reward_monotone = true;
    bool salvage_condition = true;
    std::vector<Violation> violations;

    bool all_ifr() const;
    bool ok() const { return violations.empty(); }
};

/// IFR per k, dominance across consecutive k, reward monotonicity, and r(S,0)/(1-beta) < c_s.
StructureReport check_assumptions(const ModelSpec& model, const Kernel& kernel);

}  // namespace reman
