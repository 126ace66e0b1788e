#include "reman/estimate.hpp"

#include <stdexcept>

namespace reman {

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
    return std::mt19937_64(seq);
}

CountMatrix count_transitions(const TrajectorySet& trajectories) {
    trajectories.validate();
    const int n = trajectories.num_states;
    CountMatrix cm;
    cm.counts = CountTable::Zero(n, n);
    for (const auto& path : trajectories.states)
        for (std::size_t t = 0; t + 1 < path.size(); ++t) {
            if (path[t + 1] < path[t]) {
                ++cm.discarded;
                continue;
            }
            ++cm.counts(path[t], path[t + 1]);
        }
    return cm;
}

bool SliceEstimate::any_unvisited() const {
    for (bool u : unvisited)
        if (u) return true;
    return false;
}

SliceEstimate mle_kernel(const CountMatrix& counts) {
    const auto n = counts.counts.rows();
    SliceEstimate est;
    est.slice = Matrix::Zero(n, n);
    est.unvisited.assign(static_cast<std::size_t>(n), false);
    for (Eigen::Index s = 0; s < n; ++s) {
        const long total = counts.counts.row(s).sum();
        if (total == 0) {
            est.slice(s, s) = 1.0;
            est.unvisited[static_cast<std::size_t>(s)] = true;
            continue;
        }
        for (Eigen::Index t = 0; t < n; ++t)
            est.slice(s, t) = static_cast<double>(counts.counts(s, t)) / static_cast<double>(total);
    }
    return est;
}

Kernel degrade_kernel(const Matrix& base, double rho, int k_max) {
    if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("degradation fraction must lie in [0,1)");
    if (k_max < 0) throw std::invalid_argument("k_max must be non-negative");
    validate_slice(base);
    Kernel kernel;
    kernel.slices.reserve(static_cast<std::size_t>(k_max) + 1);
    kernel.slices.push_back(base);
    for (int k = 1; k <= k_max; ++k) kernel.slices.push_back(shift_worse(kernel.slices.back(), rho));
    return kernel;
}

std::vector<SliceEstimate> bootstrap_kernels(const TrajectorySet& trajectories, int num_samples,
                                             std::uint64_t seed) {
    if (num_samples < 1) throw std::invalid_argument("bootstrap needs at least one sample");
    if (trajectories.empty()) throw std::invalid_argument("bootstrap of an empty trajectory set");
    trajectories.validate();
    const std::size_t units = trajectories.size();
    std::vector<SliceEstimate> out;
    out.reserve(static_cast<std::size_t>(num_samples));
    std::vector<std::size_t> pick(units);
    for (int b = 0; b < num_samples; ++b) {
        auto rng = substream(seed, static_cast<std::uint64_t>(b));
        std::uniform_int_distribution<std::size_t> draw(0, units - 1);
        for (auto& p : pick) p = draw(rng);
        out.push_back(mle_kernel(count_transitions(trajectories.subset(pick))));
    }
    return out;
}

}  // namespace reman
