#include "oracles.hpp"
#include "reman/model.hpp"

#include <doctest.h>

using namespace reman;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
    Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : r) {
        Eigen::Index j = 0;
        for (double x : row) m(i, j++) = x;
        ++i;
    }
    return m;
}

// tail(j, m) = sum_{i >= m} p(i|j), computed with plain loops
bool ifr_by_loops(const Matrix& p) {
    const auto n = p.rows();
    for (Eigen::Index m = 0; m < n; ++m)
        for (Eigen::Index j = 0; j + 1 < n; ++j) {
            double a = 0.0, b = 0.0;
            for (Eigen::Index i = m; i < n; ++i) {
                a += p(j, i);
                b += p(j + 1, i);
            }
            if (b < a - 1e-12) return false;
        }
    return true;
}

}  // namespace

TEST_CASE("state space and action encoding") {
    CHECK_THROWS_AS(StateSpace({1, 0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(StateSpace({3, -1}).validate(), std::invalid_argument);
    CHECK_NOTHROW(StateSpace({2, 0}).validate());
    CHECK(static_cast<int>(Action::Wait) == 0);
    CHECK(static_cast<int>(Action::Remanufacture) == 1);
    CHECK(static_cast<int>(Action::Scrap) == 2);
    CHECK(kNumActions == 3);
}

TEST_CASE("check_ifr examples") {
    CHECK(check_ifr(Matrix::Identity(4, 4)));
    CHECK(check_ifr(rows({{0.5, 0.5}, {0.0, 1.0}})));
    CHECK_FALSE(check_ifr(rows({{0.2, 0.2, 0.6}, {0.0, 0.9, 0.1}, {0.0, 0.0, 1.0}})));
}

TEST_CASE("check_ifr agrees with a loop implementation on random slices") {
    std::mt19937_64 rng(7);
    int disagreements = 0;
    for (int t = 0; t < 300; ++t) {
        const Matrix p = oracle::random_slice(rng, 2 + t % 5);
        if (check_ifr(p) != ifr_by_loops(p)) ++disagreements;
    }
    CHECK(disagreements == 0);
}

TEST_CASE("check_dominance examples") {
    const Matrix b = rows({{0.6, 0.3, 0.1}, {0.0, 0.7, 0.3}, {0.0, 0.0, 1.0}});
    CHECK(check_dominance(b, b));
    // every row's mass moved one state worse, absorbing at the end
    const Matrix a = rows({{0.0, 0.6, 0.4}, {0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}});
    CHECK(check_dominance(a, b));
    CHECK_FALSE(check_dominance(b, a));
    CHECK_FALSE(check_dominance(rows({{0.5, 0.5}, {0.0, 1.0}}), rows({{0.4, 0.6}, {0.0, 1.0}})));
    CHECK_THROWS_AS(check_dominance(Matrix::Identity(2, 2), Matrix::Identity(3, 3)), std::invalid_argument);
}

TEST_CASE("dominance is reflexive and transitive on random slices") {
    std::mt19937_64 rng(11);
    int checked = 0;
    for (int t = 0; t < 400; ++t) {
        const int n = 3;
        const Matrix a = oracle::random_slice(rng, n);
        const Matrix b = shift_worse(a, oracle::unif(rng));
        const Matrix c = shift_worse(b, oracle::unif(rng));
        REQUIRE(check_dominance(a, a));
        if (check_dominance(c, b) && check_dominance(b, a)) {
            CHECK(check_dominance(c, a));
            ++checked;
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("shift_worse keeps rows stochastic, dominates and preserves IFR") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 200; ++t) {
        const int n = 2 + t % 6;
        Matrix p = oracle::random_slice(rng, n);
        const double rho = oracle::unif(rng, 0.0, 0.99);
        const Matrix q = shift_worse(p, rho);
        CHECK_NOTHROW(validate_slice(q));
        CHECK(check_dominance(q, p));
        // a sorted-tail construction makes p IFR; the shift must keep it so
        Matrix tails = tail_sums(p);
        for (Eigen::Index j = 1; j < n; ++j)
            for (Eigen::Index m = 0; m < n; ++m) tails(j, m) = std::max(tails(j, m), tails(j - 1, m));
        Matrix ifr = Matrix::Zero(n, n);
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index m = 0; m < n; ++m) ifr(j, m) = tails(j, m) - (m + 1 < n ? tails(j, m + 1) : 0.0);
        REQUIRE(check_ifr(ifr));
        CHECK(check_ifr(shift_worse(ifr, rho)));
    }
}

TEST_CASE("shift_worse equals (1-rho) P + rho P R") {
    std::mt19937_64 rng(5);
    const int n = 5;
    const Matrix p = oracle::random_slice(rng, n);
    Matrix r = Matrix::Zero(n, n);
    for (int s = 0; s + 1 < n; ++s) r(s, s + 1) = 1.0;
    r(n - 1, n - 1) = 1.0;
    const Matrix expect = 0.93 * p + 0.07 * p * r;
    CHECK((shift_worse(p, 0.07) - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("validate_slice rejects malformed slices without renormalizing") {
    CHECK_NOTHROW(validate_slice(rows({{0.5, 0.5}, {0.0, 1.0}})));
    CHECK_THROWS_AS(validate_slice(rows({{0.5, 0.5 + 1e-9}, {0.0, 1.0}})), std::invalid_argument);
    CHECK_THROWS_AS(validate_slice(rows({{0.5, 0.5}, {0.1, 0.9}})), std::invalid_argument);
    CHECK_THROWS_AS(validate_slice(rows({{1.5, -0.5}, {0.0, 1.0}})), std::invalid_argument);
    CHECK_THROWS_AS(validate_slice(Matrix::Identity(2, 3)), std::invalid_argument);
    CHECK_NOTHROW(validate_slice(rows({{0.5, 0.5 + 5e-13}, {0.0, 1.0}})));
}

TEST_CASE("case study model: reward values and salvage condition") {
    const ModelSpec m = case_study_model();
    CHECK(m.rewards.reward(0, 0) == doctest::Approx(3.0));
    CHECK(m.rewards.reward(6, 0) == doctest::Approx(0.0));
    CHECK(m.rewards.reward(2, 3) == doctest::Approx(3.0 - 0.5 * 2 - 0.5 * 3));
    const Kernel k = Kernel(std::vector<Matrix>(11, Matrix::Identity(7, 7)));
    const StructureReport r = check_assumptions(m, k);
    CHECK(r.salvage_condition);
    CHECK(r.reward_monotone);
    CHECK(r.ok());
}

TEST_CASE("constant reward with a small salvage value violates the salvage condition") {
    ModelSpec m;
    m.space = {3, 1};
    m.rewards = RewardModel::from_table(Matrix::Constant(3, 2, 1.0));
    m.beta = 0.9;
    m.salvage = 5.0;
    const StructureReport r = check_assumptions(m, Kernel(std::vector<Matrix>(2, Matrix::Identity(3, 3))));
    CHECK_FALSE(r.salvage_condition);
    CHECK_FALSE(r.ok());
    CHECK(r.violations.size() == 1);
}

TEST_CASE("reversed k-ordering breaks dominance_in_k") {
    const ModelSpec m = case_study_model(3, 1);
    const Matrix p0 = rows({{0.2, 0.5, 0.3}, {0.0, 0.4, 0.6}, {0.0, 0.0, 1.0}});
    const Matrix p1 = rows({{0.6, 0.3, 0.1}, {0.0, 0.8, 0.2}, {0.0, 0.0, 1.0}});
    REQUIRE(check_ifr(p0));
    REQUIRE(check_ifr(p1));
    const StructureReport r = check_assumptions(m, Kernel({p0, p1}));
    CHECK_FALSE(r.dominance_in_k);
    CHECK(r.all_ifr());
    CHECK_FALSE(r.violations.empty());
    CHECK(check_assumptions(m, Kernel({p1, p0})).dominance_in_k);
}

TEST_CASE("reward increasing in s is reported") {
    ModelSpec m = case_study_model(3, 1);
    m.rewards.gain(2, 0) = 10.0;
    const StructureReport r = check_assumptions(m, Kernel(std::vector<Matrix>(2, Matrix::Identity(3, 3))));
    CHECK_FALSE(r.reward_monotone);
}
