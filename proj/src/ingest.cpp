#include "reman/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace reman {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',' || c == ' ' || c == '\t' || c == '\r' || c == ';') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool parse_double(const std::string& s, double& v) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    return ec == std::errc() && ptr == last && std::isfinite(v);
}

std::runtime_error line_error(std::size_t line, const std::string& what) {
    std::ostringstream os;
    os << "line " << line << ": " << what;
    return std::runtime_error(os.str());
}

}  // namespace

void SensorTable::validate() const {
    if (unit.size() != static_cast<std::size_t>(features.rows()) || cycle.size() != unit.size())
        throw std::invalid_argument("sensor table columns differ in length");
    std::map<int, int> last_cycle;
    int prev_unit = std::numeric_limits<int>::min();
    std::set<int> closed;
    for (std::size_t i = 0; i < unit.size(); ++i) {
        if (unit[i] != prev_unit) {
            if (closed.count(unit[i]))
                throw std::invalid_argument("rows of unit " + std::to_string(unit[i]) + " are not contiguous");
            if (prev_unit != std::numeric_limits<int>::min()) closed.insert(prev_unit);
            prev_unit = unit[i];
        }
        const int expected = last_cycle.count(unit[i]) ? last_cycle[unit[i]] + 1 : 1;
        if (cycle[i] != expected)
            throw std::invalid_argument("unit " + std::to_string(unit[i]) + ": expected cycle " +
                                        std::to_string(expected) + ", found " + std::to_string(cycle[i]));
        last_cycle[unit[i]] = cycle[i];
    }
}

SensorTable read_sensor_table(std::istream& in, const SensorReadOptions& options) {
    std::vector<std::vector<double>> rows;
    std::vector<int> units, cycles;
    std::string line;
    std::size_t lineno = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto fields = split_fields(line);
        if (fields.empty()) continue;
        std::vector<double> values(fields.size());
        bool numeric = true;
        for (std::size_t i = 0; i < fields.size(); ++i)
            if (!parse_double(fields[i], values[i])) numeric = false;
        if (!numeric) {
            if (rows.empty() && lineno == 1) continue;  // header
            throw line_error(lineno, "non-numeric field");
        }
        if (values.size() < 3 + static_cast<std::size_t>(options.setting_columns))
            throw line_error(lineno, "too few columns");
        if (width == 0) width = values.size();
        if (values.size() != width)
            throw line_error(lineno, "expected " + std::to_string(width) + " columns, found " +
                                         std::to_string(values.size()));
        if (values[0] != std::floor(values[0]) || values[1] != std::floor(values[1]))
            throw line_error(lineno, "unit and cycle must be integers");
        units.push_back(static_cast<int>(values[0]));
        cycles.push_back(static_cast<int>(values[1]));
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw std::runtime_error("sensor table is empty");

    const int settings = options.setting_columns;
    const int num_sensors = static_cast<int>(width) - 2 - settings;
    std::vector<int> columns;
    std::vector<std::string> names;
    if (options.include_settings)
        for (int j = 0; j < settings; ++j) {
            columns.push_back(2 + j);
            names.push_back("op" + std::to_string(j + 1));
        }
    if (options.sensors.empty()) {
        for (int j = 0; j < num_sensors; ++j) {
            columns.push_back(2 + settings + j);
            names.push_back("sensor" + std::to_string(j + 1));
        }
    } else {
        for (int idx : options.sensors) {
            if (idx < 1 || idx > num_sensors)
                throw std::invalid_argument("sensor index " + std::to_string(idx) + " out of range");
            columns.push_back(2 + settings + idx - 1);
            names.push_back("sensor" + std::to_string(idx));
        }
    }

    SensorTable table;
    table.unit = std::move(units);
    table.cycle = std::move(cycles);
    table.feature_names = std::move(names);
    table.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < columns.size(); ++j)
            table.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i][static_cast<std::size_t>(columns[j])];
    table.validate();
    return table;
}

SensorTable read_sensor_table(const std::string& path, const SensorReadOptions& options) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_sensor_table(in, options);
}

void TrajectorySet::validate() const {
    if (num_states < 2) throw std::invalid_argument("trajectory set needs at least 2 states");
    if (unit_ids.size() != states.size()) throw std::invalid_argument("unit ids and trajectories differ in count");
    for (std::size_t u = 0; u < states.size(); ++u) {
        if (states[u].empty()) throw std::invalid_argument("empty trajectory for unit " + std::to_string(unit_ids[u]));
        for (int s : states[u])
            if (s < 0 || s >= num_states)
                throw std::invalid_argument("state " + std::to_string(s) + " out of range in unit " +
                                            std::to_string(unit_ids[u]));
    }
}

TrajectorySet TrajectorySet::subset(const std::vector<std::size_t>& indices) const {
    TrajectorySet out;
    out.num_states = num_states;
    out.unit_ids.reserve(indices.size());
    out.states.reserve(indices.size());
    for (auto i : indices) {
        out.unit_ids.push_back(unit_ids.at(i));
        out.states.push_back(states.at(i));
    }
    return out;
}

HealthIndicator extract_health_indicator(const SensorTable& table) {
    table.validate();
    HealthIndicator hi;
    const Eigen::Index n = table.rows();
    if (n < 2) throw std::invalid_argument("health indicator needs at least 2 rows");

    const Eigen::RowVectorXd mean = table.features.colwise().mean();
    for (Eigen::Index j = 0; j < table.features.cols(); ++j) {
        const double var = (table.features.col(j).array() - mean(j)).square().sum() / static_cast<double>(n - 1);
        const double scale = 1.0 + std::abs(mean(j));
        if (!(std::sqrt(var) > 1e-12 * scale)) {
            const std::string name = j < static_cast<Eigen::Index>(table.feature_names.size())
                                         ? table.feature_names[static_cast<std::size_t>(j)]
                                         : "column " + std::to_string(j);
            hi.warnings.push_back(name + " is constant and was excluded");
            continue;
        }
        hi.used_columns.push_back(static_cast<int>(j));
    }
    if (hi.used_columns.size() < 2)
        throw std::invalid_argument("fewer than 2 non-constant feature columns");

    const auto d = static_cast<Eigen::Index>(hi.used_columns.size());
    Eigen::MatrixXd z(n, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const auto c = hi.used_columns[static_cast<std::size_t>(j)];
        const Eigen::VectorXd centered = table.features.col(c).array() - mean(c);
        const double sd = std::sqrt(centered.squaredNorm() / static_cast<double>(n - 1));
        z.col(j) = centered / sd;
    }
    const Eigen::MatrixXd cov = (z.transpose() * z) / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw std::runtime_error("eigen-decomposition of the covariance failed");
    Eigen::VectorXd pc = eig.eigenvectors().col(d - 1);
    hi.explained_variance = eig.eigenvalues()(d - 1) / eig.eigenvalues().sum();

    Eigen::VectorXd score = z * pc;

    // group rows by unit in order of first appearance
    std::vector<std::size_t> order;
    std::map<int, std::size_t> slot;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int u = table.unit[static_cast<std::size_t>(i)];
        auto it = slot.find(u);
        if (it == slot.end()) {
            it = slot.emplace(u, hi.unit_ids.size()).first;
            hi.unit_ids.push_back(u);
            hi.values.emplace_back();
        }
        hi.values[it->second].push_back(score(i));
    }

    double drift = 0.0;
    for (const auto& seq : hi.values) {
        const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(seq.size()))));
        const double head = std::accumulate(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(w), 0.0) / static_cast<double>(w);
        const double tail = std::accumulate(seq.end() - static_cast<std::ptrdiff_t>(w), seq.end(), 0.0) / static_cast<double>(w);
        drift += tail - head;
    }
    if (drift < 0.0) {
        pc = -pc;
        for (auto& seq : hi.values)
            for (auto& v : seq) v = -v;
    }
    hi.component = pc;
    return hi;
}

KMeans1D kmeans_1d(const std::vector<double>& values, int k, std::uint64_t seed, int max_iterations) {
    if (values.empty()) throw std::invalid_argument("k-means: empty input");
    if (k < 2) throw std::invalid_argument("k-means: need at least 2 clusters");
    {
        std::vector<double> sorted(values);
        std::sort(sorted.begin(), sorted.end());
        const auto distinct = std::unique(sorted.begin(), sorted.end()) - sorted.begin();
        if (distinct < k)
            throw std::invalid_argument("k-means: " + std::to_string(distinct) + " distinct values for " +
                                        std::to_string(k) + " clusters");
    }

    const std::size_t n = values.size();
    std::mt19937_64 rng(seed);
    std::vector<double> centers;
    centers.reserve(static_cast<std::size_t>(k));
    centers.push_back(values[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
    std::vector<double> d2(n);
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (double c : centers) best = std::min(best, (values[i] - c) * (values[i] - c));
            d2[i] = best;
            total += best;
        }
        double target = std::uniform_real_distribution<double>(0.0, total)(rng);
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] <= 0.0) continue;
            pick = i;
            target -= d2[i];
            if (target < 0.0) break;
        }
        centers.push_back(values[pick]);
    }

    std::vector<int> labels(n, -1);
    KMeans1D out;
    auto nearest = [&](double x) {
        int best = 0;
        double bd = std::abs(x - centers[0]);
        for (int c = 1; c < k; ++c) {
            const double dd = std::abs(x - centers[static_cast<std::size_t>(c)]);
            if (dd < bd) {
                bd = dd;
                best = c;
            }
        }
        return best;
    };
    for (int it = 0; it < max_iterations; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const int l = nearest(values[i]);
            if (l != labels[i]) {
                labels[i] = l;
                changed = true;
            }
        }
        out.iterations = it + 1;
        if (!changed) break;
        std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
        std::vector<std::size_t> cnt(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            sum[static_cast<std::size_t>(labels[i])] += values[i];
            ++cnt[static_cast<std::size_t>(labels[i])];
        }
        for (int c = 0; c < k; ++c) {
            const auto cu = static_cast<std::size_t>(c);
            if (cnt[cu] > 0) {
                centers[cu] = sum[cu] / static_cast<double>(cnt[cu]);
            } else {
                // empty cluster: move it to the worst-served observation
                std::size_t far = 0;
                double fd = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double dd = std::abs(values[i] - centers[static_cast<std::size_t>(labels[i])]);
                    if (dd > fd) {
                        fd = dd;
                        far = i;
                    }
                }
                centers[cu] = values[far];
            }
        }
    }

    std::vector<int> rank(static_cast<std::size_t>(k));
    std::iota(rank.begin(), rank.end(), 0);
    std::sort(rank.begin(), rank.end(), [&](int a, int b) {
        return centers[static_cast<std::size_t>(a)] < centers[static_cast<std::size_t>(b)];
    });
    std::vector<int> relabel(static_cast<std::size_t>(k));
    for (int r = 0; r < k; ++r) relabel[static_cast<std::size_t>(rank[static_cast<std::size_t>(r)])] = r;
    out.centers.resize(static_cast<std::size_t>(k));
    for (int r = 0; r < k; ++r) out.centers[static_cast<std::size_t>(r)] = centers[static_cast<std::size_t>(rank[static_cast<std::size_t>(r)])];
    out.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.labels[i] = relabel[static_cast<std::size_t>(labels[i])];
    return out;
}

TrajectorySet discretize(const std::vector<std::vector<double>>& per_unit, int num_states, std::uint64_t seed) {
    if (per_unit.empty()) throw std::invalid_argument("discretize: no units");
    if (num_states < 2) throw std::invalid_argument("discretize: need at least 2 states");
    std::vector<double> pooled;
    for (const auto& seq : per_unit) {
        if (seq.empty()) throw std::invalid_argument("discretize: empty unit sequence");
        pooled.insert(pooled.end(), seq.begin(), seq.end());
    }
    const KMeans1D km = kmeans_1d(pooled, num_states, seed);
    TrajectorySet ts;
    ts.num_states = num_states;
    std::size_t pos = 0;
    for (std::size_t u = 0; u < per_unit.size(); ++u) {
        ts.unit_ids.push_back(static_cast<int>(u) + 1);
        std::vector<int> st(per_unit[u].size());
        for (auto& s : st) s = km.labels[pos++];
        ts.states.push_back(std::move(st));
    }
    return ts;
}

TrajectorySet discretize(const HealthIndicator& indicator, int num_states, std::uint64_t seed) {
    TrajectorySet ts = discretize(indicator.values, num_states, seed);
    ts.unit_ids = indicator.unit_ids;
    return ts;
}

}  // namespace reman
