#pragma once

#include "reman/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace reman {

/// Multivariate sensor readings, one row per (unit, cycle).
struct SensorTable {
    std::vector<int> unit;
    std::vector<int> cycle;
    Eigen::MatrixXd features;
    std::vector<std::string> feature_names;

    Eigen::Index rows() const { return features.rows(); }
    void validate() const;
};

struct SensorReadOptions {
    /// Operational-setting columns that follow `unit cycle` in the raw layout.
    int setting_columns = 3;
    bool include_settings = false;
    /// 1-based sensor indices to keep; empty keeps every sensor.
    std::vector<int> sensors;
};

/// Reads a C-MAPSS style table, whitespace- or comma-delimited.
/// Throws std::runtime_error naming the line on malformed input.
SensorTable read_sensor_table(std::istream& in, const SensorReadOptions& options = {});
SensorTable read_sensor_table(const std::string& path, const SensorReadOptions& options = {});

/// Per-unit condition-state paths with states in 0..num_states-1.
struct TrajectorySet {
    int num_states = 7;
    std::vector<int> unit_ids;
    std::vector<std::vector<int>> states;

    std::size_t size() const { return states.size(); }
    bool empty() const { return states.empty(); }
    void validate() const;
    TrajectorySet subset(const std::vector<std::size_t>& indices) const;
};

struct HealthIndicator {
    std::vector<int> unit_ids;
    std::vector<std::vector<double>> values;
    Eigen::VectorXd component;        ///< loading vector over the used columns
    std::vector<int> used_columns;    ///< indices into SensorTable::features
    double explained_variance = 0.0;  ///< fraction of standardized variance on the component
    std::vector<std::string> warnings;
};

/**
 * Projects standardized rows onto the first principal component of the
 * pooled data. The sign is chosen so that, summed over units, the mean over
 * the final 5% of cycles exceeds the mean over the first 5%.
 */
HealthIndicator extract_health_indicator(const SensorTable& table);

struct KMeans1D {
    std::vector<double> centers;  ///< ascending
    std::vector<int> labels;      ///< per pooled observation
    int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding, labels ordered by center.
KMeans1D kmeans_1d(const std::vector<double>& values, int k, std::uint64_t seed, int max_iterations = 100);

TrajectorySet discretize(const HealthIndicator& indicator, int num_states = 7, std::uint64_t seed = 42);
TrajectorySet discretize(const std::vector<std::vector<double>>& per_unit, int num_states = 7,
                         std::uint64_t seed = 42);

}  // namespace reman
