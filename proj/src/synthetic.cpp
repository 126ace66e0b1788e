#include "reman/synthetic.hpp"

#include <stdexcept>

namespace reman {

double uniform(std::mt19937_64& rng, double a, double b) {
    if (a == b) return a;
    return a + (b - a) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

Matrix default_true_slice(int num_conditions) {
    if (num_conditions < 2) throw std::invalid_argument("need at least 2 conditions");
    const int worst = num_conditions - 1;
    Matrix p = Matrix::Zero(num_conditions, num_conditions);
    for (int s = 0; s < num_conditions; ++s) {
        p(s, s) += 0.8;
        p(s, std::min(s + 1, worst)) += 0.15;
        p(s, std::min(s + 2, worst)) += 0.05;
    }
    return p;
}

Matrix random_ifr_slice(int num_conditions, std::mt19937_64& rng) {
    if (num_conditions < 2) throw std::invalid_argument("need at least 2 conditions");
    const int n = num_conditions;
    std::exponential_distribution<double> expo(1.0);

    // tails(j, m) = P(next >= m | j)
    Matrix tails = Matrix::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        Vector row = Vector::Zero(n);
        for (int m = j; m < n; ++m) row(m) = expo(rng);
        row /= row.sum();
        double acc = 0.0;
        for (int m = n - 1; m >= 0; --m) {
            acc += row(m);
            tails(j, m) = m <= j ? 1.0 : std::min(acc, 1.0);
        }
        if (j > 0)
            for (int m = 0; m < n; ++m) tails(j, m) = std::max(tails(j, m), tails(j - 1, m));
    }

    Matrix p = Matrix::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        for (int m = 0; m < n; ++m) {
            const double next = m + 1 < n ? tails(j, m + 1) : 0.0;
            p(j, m) = std::max(0.0, tails(j, m) - next);
        }
        p.row(j) /= p.row(j).sum();
    }
    return p;
}

TrajectorySet simulate_trajectories(const Matrix& slice, int num_units, std::mt19937_64& rng, int max_length,
                                    int first_unit_id) {
    validate_slice(slice);
    if (num_units < 0) throw std::invalid_argument("num_units must be non-negative");
    if (max_length < 1) throw std::invalid_argument("max_length must be positive");
    const int n = static_cast<int>(slice.rows());
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    TrajectorySet ts;
    ts.num_states = n;
    for (int u = 0; u < num_units; ++u) {
        std::vector<int> path{0};
        int s = 0;
        while (s != n - 1 && static_cast<int>(path.size()) < max_length) {
            const double draw = unit(rng);
            double acc = 0.0;
            int next = n - 1;
            for (int m = s; m < n; ++m) {
                acc += slice(s, m);
                if (draw < acc) {
                    next = m;
                    break;
                }
            }
            s = next;
            path.push_back(s);
        }
        ts.unit_ids.push_back(first_unit_id + u);
        ts.states.push_back(std::move(path));
    }
    return ts;
}

}  // namespace reman
