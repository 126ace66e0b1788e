#pragma once

#include "reman/ingest.hpp"
#include "reman/model.hpp"

#include <random>

namespace reman {

/// p(s|s) = 0.8, p(s+1|s) = 0.15, p(s+2|s) = 0.05, overflow absorbed by the worst state.
Matrix default_true_slice(int num_conditions = 7);

/**
 * Random upper-triangular IFR slice. Row j starts from a uniform draw on the
 * simplex over {j..S}; its tail sums are raised to those of row j-1 where
 * smaller, which keeps tails non-decreasing in j.
 */
Matrix random_ifr_slice(int num_conditions, std::mt19937_64& rng);

/**
 * Units start at condition 0 and follow `slice` until the worst state is
 * reached or `max_length` observations are recorded. Unit ids are
 * first_unit_id, first_unit_id + 1, ...
 */
TrajectorySet simulate_trajectories(const Matrix& slice, int num_units, std::mt19937_64& rng, int max_length = 200,
                                    int first_unit_id = 1);

/// a + (b - a) u with u uniform on [0,1); returns a when a == b.
double uniform(std::mt19937_64& rng, double a, double b);

}  // namespace reman
