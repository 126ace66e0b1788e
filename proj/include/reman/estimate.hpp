#pragma once

#include "reman/ingest.hpp"
#include "reman/model.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace reman {

using CountTable = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Pooled transition counts n(s'|s) of the k = 0 chain.
struct CountMatrix {
    CountTable counts;
    long discarded = 0;  ///< backward moves s' < s that were excluded

    long row_total(int s) const { return counts.row(s).sum(); }
    long total() const { return counts.sum(); }
    double discarded_fraction() const {
        const long all = total() + discarded;
        return all == 0 ? 0.0 : static_cast<double>(discarded) / static_cast<double>(all);
    }
};

CountMatrix count_transitions(const TrajectorySet& trajectories);

/// An estimated k = 0 slice plus the rows that had no observations.
struct SliceEstimate {
    Matrix slice;
    std::vector<bool> unvisited;

    bool any_unvisited() const;
};

/// p(s'|s) = n(s'|s) / N_s; rows with N_s = 0 become self-absorbing and are flagged.
SliceEstimate mle_kernel(const CountMatrix& counts);

/// P(.|.,k) is `base` with the one-step worsening shift applied k times.
Kernel degrade_kernel(const Matrix& base, double rho = 0.07, int k_max = 10);

/// Resamples whole units with replacement; sample b draws from stream b of `seed`.
std::vector<SliceEstimate> bootstrap_kernels(const TrajectorySet& trajectories, int num_samples,
                                             std::uint64_t seed);

/// Independent deterministic sub-stream `stream` of a base seed.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream);

}  // namespace reman
