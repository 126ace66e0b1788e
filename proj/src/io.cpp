#include "reman/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace reman {

namespace {

[[noreturn]] void bad(const std::string& what, const std::string& why) {
    throw std::invalid_argument(what + ": " + why);
}

const Json& field(const Json& j, const char* key, const std::string& what) {
    if (!j.is_object() || !j.contains(key)) bad(what, std::string("missing field '") + key + "'");
    return j.at(key);
}

double number(const Json& j, const std::string& what) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "Infinity") return std::numeric_limits<double>::infinity();
    }
    bad(what, "expected a number");
}

Json number_json(double x) {
    if (std::isinf(x)) return x > 0 ? Json("inf") : Json("-inf");
    return Json(x);
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    return out;
}

template <typename T>
T parse_cell(const std::string& cell, int line, const std::string& what) {
    T value{};
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        bad(what, "line " + std::to_string(line) + ": cannot parse '" + cell + "'");
    return value;
}

bool is_header(const std::vector<std::string>& cells) {
    return !cells.empty() && !cells[0].empty() && (std::isalpha(static_cast<unsigned char>(cells[0][0])) != 0);
}

Json pair_json(const std::pair<double, double>& p) { return Json::array({p.first, p.second}); }

std::pair<double, double> pair_from(const Json& j, const std::string& what) {
    if (j.is_number()) return {j.get<double>(), j.get<double>()};
    if (!j.is_array() || j.size() != 2) bad(what, "expected [low, high] or a number");
    if (!j[0].is_number() || !j[1].is_number()) bad(what, "expected numbers");
    const double lo = j[0].get<double>();
    const double hi = j[1].get<double>();
    if (!(lo <= hi)) bad(what, "low end exceeds high end");
    return {lo, hi};
}

}  // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) bad(what, "expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) bad(what, "ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = number(row[static_cast<std::size_t>(c)], what);
    }
    return m;
}

Json state_table_to_json(const Matrix& table) { return matrix_to_json(table.transpose()); }

Matrix state_table_from_json(const Json& j, const std::string& what) { return matrix_from_json(j, what).transpose(); }

Json model_to_json(const ModelSpec& model) {
    return Json{{"states", model.space.num_conditions},
                {"k_max", model.space.max_reman},
                {"beta", model.beta},
                {"c_r", model.reman_cost},
                {"c_s", model.salvage},
                {"reward",
                 {{"kind", "table"},
                  {"gain", state_table_to_json(model.rewards.gain)},
                  {"env_cost", state_table_to_json(model.rewards.env_cost)}}}};
}

ModelSpec model_from_json(const Json& j) {
    const std::string what = "model";
    ModelSpec m;
    m.space.num_conditions = field(j, "states", what).get<int>();
    m.space.max_reman = field(j, "k_max", what).get<int>();
    m.space.validate();
    m.beta = number(field(j, "beta", what), what);
    m.reman_cost = number(field(j, "c_r", what), what);
    m.salvage = number(field(j, "c_s", what), what);

    const Json& r = field(j, "reward", what);
    const std::string kind = field(r, "kind", "model.reward").get<std::string>();
    if (kind == "affine") {
        if (r.contains("gain")) {
            const Json& g = r.at("gain");
            const Json& e = field(r, "env_cost", "model.reward");
            m.rewards = RewardModel::affine(m.space, get_or(g, "base", 0.0), get_or(g, "per_k", 0.0),
                                            get_or(g, "per_s", 0.0), get_or(e, "base", 0.0), get_or(e, "per_k", 0.0),
                                            get_or(e, "per_s", 0.0));
        } else {
            m.rewards = RewardModel::affine(m.space, number(field(r, "a0", "model.reward"), what),
                                            number(field(r, "a1", "model.reward"), what),
                                            number(field(r, "a2", "model.reward"), what));
        }
    } else if (kind == "table") {
        if (r.contains("reward")) {
            m.rewards = RewardModel::from_table(state_table_from_json(r.at("reward"), "model.reward.reward"));
        } else {
            m.rewards.gain = state_table_from_json(field(r, "gain", "model.reward"), "model.reward.gain");
            m.rewards.env_cost = state_table_from_json(field(r, "env_cost", "model.reward"), "model.reward.env_cost");
        }
    } else {
        bad("model.reward", "unknown kind '" + kind + "' (expected affine or table)");
    }
    m.validate();
    return m;
}

Json kernel_to_json(const Kernel& kernel) {
    Json out = Json::array();
    for (const auto& slice : kernel.slices) out.push_back(matrix_to_json(slice));
    return out;
}

Kernel kernel_from_json(const Json& j) {
    const Json& arr = j.is_object() && j.contains("kernel") ? j.at("kernel") : j;
    if (!arr.is_array() || arr.empty()) bad("kernel", "expected an array of slices");
    Kernel k;
    for (std::size_t i = 0; i < arr.size(); ++i) k.slices.push_back(matrix_from_json(arr[i], "kernel slice " + std::to_string(i)));
    validate_kernel(k);
    return k;
}

void write_kernel_csv(std::ostream& out, const Kernel& kernel) {
    out << "k,s,s_prime,p\n";
    for (int k = 0; k <= kernel.max_reman(); ++k)
        for (int s = 0; s < kernel.num_conditions(); ++s)
            for (int t = s; t < kernel.num_conditions(); ++t)
                out << k << ',' << s << ',' << t << ',' << format_double(kernel[k](s, t)) << '\n';
}

Kernel read_kernel_csv(std::istream& in) {
    struct Entry {
        int k, s, t;
        double p;
    };
    std::vector<Entry> entries;
    std::string line;
    int lineno = 0;
    int kmax = -1;
    int smax = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv(line);
        if (lineno == 1 && is_header(cells)) continue;
        if (cells.size() != 4) bad("kernel csv", "line " + std::to_string(lineno) + ": expected 4 columns");
        Entry e{parse_cell<int>(cells[0], lineno, "kernel csv"), parse_cell<int>(cells[1], lineno, "kernel csv"),
                parse_cell<int>(cells[2], lineno, "kernel csv"), parse_cell<double>(cells[3], lineno, "kernel csv")};
        if (e.k < 0 || e.s < 0 || e.t < 0) bad("kernel csv", "line " + std::to_string(lineno) + ": negative index");
        kmax = std::max(kmax, e.k);
        smax = std::max({smax, e.s, e.t});
        entries.push_back(e);
    }
    if (entries.empty()) bad("kernel csv", "no entries");
    Kernel kernel;
    kernel.slices.assign(static_cast<std::size_t>(kmax) + 1, Matrix::Zero(smax + 1, smax + 1));
    for (const auto& e : entries) kernel[e.k](e.s, e.t) = e.p;
    validate_kernel(kernel);
    return kernel;
}

Kernel read_kernel(const std::filesystem::path& path) {
    if (path.extension() == ".csv") {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path.string());
        return read_kernel_csv(in);
    }
    return kernel_from_json(read_json_file(path));
}

Json ambiguity_to_json(const Ambiguity& amb) {
    return std::visit(
        [](const auto& a) -> Json {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, KLAmbiguity>) {
                const bool uniform = a.theta.size() > 0 && (a.theta.array() == a.theta(0, 0)).all();
                return Json{{"type", "kl"},
                            {"nominal", kernel_to_json(a.nominal)},
                            {"theta", uniform ? number_json(a.theta(0, 0)) : state_table_to_json(a.theta)}};
            } else {
                Json lower = Json::array();
                Json upper = Json::array();
                for (const auto& m : a.lower) lower.push_back(matrix_to_json(m));
                for (const auto& m : a.upper) upper.push_back(matrix_to_json(m));
                return Json{{"type", "interval"},
                            {"lower", lower},
                            {"upper", upper},
                            {"alpha", a.alpha},
                            {"source_seed", a.source_seed}};
            }
        },
        amb);
}

Ambiguity ambiguity_from_json(const Json& j) {
    std::string type;
    if (j.contains("type"))
        type = j.at("type").get<std::string>();
    else
        type = j.contains("nominal") ? "kl" : "interval";
    if (type == "kl") {
        Kernel nominal = kernel_from_json(field(j, "nominal", "ambiguity"));
        const Json& th = field(j, "theta", "ambiguity");
        KLAmbiguity amb;
        if (th.is_array()) {
            amb.nominal = std::move(nominal);
            amb.theta = state_table_from_json(th, "ambiguity.theta");
        } else {
            amb = make_kl_ambiguity(std::move(nominal), number(th, "ambiguity.theta"));
        }
        amb.validate();
        return amb;
    }
    if (type == "interval") {
        IntervalAmbiguity amb;
        const Json& lo = field(j, "lower", "ambiguity");
        const Json& up = field(j, "upper", "ambiguity");
        if (!lo.is_array() || !up.is_array() || lo.size() != up.size() || lo.empty())
            bad("ambiguity", "lower and upper must be arrays of equal length");
        for (std::size_t k = 0; k < lo.size(); ++k) {
            amb.lower.push_back(matrix_from_json(lo[k], "ambiguity.lower"));
            amb.upper.push_back(matrix_from_json(up[k], "ambiguity.upper"));
        }
        amb.alpha = get_or(j, "alpha", 0.05);
        amb.source_seed = get_or<std::uint64_t>(j, "source_seed", 0);
        amb.validate();
        return amb;
    }
    bad("ambiguity", "unknown type '" + type + "' (expected kl or interval)");
}

Json bootstrap_to_json(const std::vector<SliceEstimate>& samples, std::uint64_t seed) {
    Json kernels = Json::array();
    Json unvisited = Json::array();
    for (const auto& s : samples) {
        kernels.push_back(matrix_to_json(s.slice));
        unvisited.push_back(s.unvisited);
    }
    return Json{{"seed", seed}, {"num_samples", samples.size()}, {"kernels", kernels}, {"unvisited", unvisited}};
}

std::vector<SliceEstimate> bootstrap_from_json(const Json& j) {
    const Json& kernels = field(j, "kernels", "bootstrap");
    const Json& unvisited = field(j, "unvisited", "bootstrap");
    if (!kernels.is_array() || kernels.size() != unvisited.size()) bad("bootstrap", "kernels and unvisited differ in length");
    std::vector<SliceEstimate> out;
    for (std::size_t b = 0; b < kernels.size(); ++b) {
        SliceEstimate e;
        e.slice = matrix_from_json(kernels[b], "bootstrap.kernels");
        validate_slice(e.slice);
        e.unvisited = unvisited[b].get<std::vector<bool>>();
        if (static_cast<Eigen::Index>(e.unvisited.size()) != e.slice.rows()) bad("bootstrap", "unvisited flags differ in size");
        out.push_back(std::move(e));
    }
    return out;
}

Json limits_to_json(const ControlLimits& limits) {
    return Json{{"k_star", limits.k_star},
                {"never", limits.never},
                {"zeta_rm", limits.zeta_rm},
                {"zeta_scrap", limits.zeta_scrap},
                {"is_control_limit", limits.is_control_limit},
                {"is_monotone_in_k", limits.is_monotone_in_k}};
}

Json solution_to_json(const Solution& sol) {
    Json policy = Json::array();
    for (int k = 0; k <= sol.policy.max_reman(); ++k) {
        Json row = Json::array();
        for (int s = 0; s < sol.policy.num_conditions(); ++s) row.push_back(to_string(sol.policy(s, k)));
        policy.push_back(std::move(row));
    }
    return Json{{"values", state_table_to_json(sol.values)},
                {"policy", policy},
                {"worst_kernel", kernel_to_json(sol.worst_kernel)},
                {"iterations", sol.iterations},
                {"residual", sol.residual},
                {"residual_history", sol.residual_history},
                {"control_limits", limits_to_json(extract_control_limits(sol))},
                {"warnings", sol.warnings}};
}

void write_policy_csv(std::ostream& out, const Solution& sol) {
    out << "k,s,V,action\n";
    for (int k = 0; k <= sol.policy.max_reman(); ++k)
        for (int s = 0; s < sol.policy.num_conditions(); ++s)
            out << k << ',' << s << ',' << format_double(sol.values(s, k)) << ',' << to_string(sol.policy(s, k)) << '\n';
}

void write_limits_csv(std::ostream& out, const ControlLimits& limits) {
    out << "k,zeta_rm,zeta_scrap\n";
    for (std::size_t k = 0; k < limits.zeta_rm.size(); ++k)
        out << k << ',' << limits.zeta_rm[k] << ',' << limits.zeta_scrap[k] << '\n';
}

Action parse_action(const std::string& name) {
    if (name == "wait" || name == "0") return Action::Wait;
    if (name == "remanufacture" || name == "1") return Action::Remanufacture;
    if (name == "scrap" || name == "2") return Action::Scrap;
    bad("policy", "unknown action '" + name + "'");
}

Policy read_policy_csv(std::istream& in) {
    struct Entry {
        int k, s;
        Action a;
    };
    std::vector<Entry> entries;
    std::string line;
    int lineno = 0;
    int kmax = -1;
    int smax = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv(line);
        if (lineno == 1 && is_header(cells)) continue;
        if (cells.size() != 4) bad("policy csv", "line " + std::to_string(lineno) + ": expected k,s,V,action");
        Entry e{parse_cell<int>(cells[0], lineno, "policy csv"), parse_cell<int>(cells[1], lineno, "policy csv"),
                parse_action(cells[3])};
        if (e.k < 0 || e.s < 0) bad("policy csv", "line " + std::to_string(lineno) + ": negative index");
        kmax = std::max(kmax, e.k);
        smax = std::max(smax, e.s);
        entries.push_back(e);
    }
    if (entries.empty()) bad("policy csv", "no rows");
    if (entries.size() != static_cast<std::size_t>(kmax + 1) * static_cast<std::size_t>(smax + 1))
        bad("policy csv", "expected one row per (k,s)");
    Policy policy(smax + 1, kmax);
    std::vector<bool> seen(entries.size(), false);
    for (const auto& e : entries) {
        const auto i = static_cast<std::size_t>(e.k) * static_cast<std::size_t>(smax + 1) + static_cast<std::size_t>(e.s);
        if (seen[i]) bad("policy csv", "duplicate row for k=" + std::to_string(e.k) + ", s=" + std::to_string(e.s));
        seen[i] = true;
        policy(e.s, e.k) = e.a;
    }
    return policy;
}

void write_trajectories_csv(std::ostream& out, const TrajectorySet& ts) {
    out << "unit,cycle,state\n";
    for (std::size_t u = 0; u < ts.size(); ++u)
        for (std::size_t c = 0; c < ts.states[u].size(); ++c)
            out << ts.unit_ids[u] << ',' << c + 1 << ',' << ts.states[u][c] << '\n';
}

TrajectorySet read_trajectories_csv(std::istream& in, int num_states) {
    TrajectorySet ts;
    std::map<int, std::size_t> index;
    std::string line;
    int lineno = 0;
    int max_state = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = split_csv(line);
        if (lineno == 1 && is_header(cells)) continue;
        if (cells.size() != 3) bad("trajectory csv", "line " + std::to_string(lineno) + ": expected unit,cycle,state");
        const int unit = parse_cell<int>(cells[0], lineno, "trajectory csv");
        const int cycle = parse_cell<int>(cells[1], lineno, "trajectory csv");
        const int state = parse_cell<int>(cells[2], lineno, "trajectory csv");
        if (state < 0) bad("trajectory csv", "line " + std::to_string(lineno) + ": negative state");
        auto it = index.find(unit);
        if (it == index.end()) {
            it = index.emplace(unit, ts.states.size()).first;
            ts.unit_ids.push_back(unit);
            ts.states.emplace_back();
        }
        auto& path = ts.states[it->second];
        if (cycle != static_cast<int>(path.size()) + 1)
            bad("trajectory csv", "line " + std::to_string(lineno) + ": cycles of unit " + std::to_string(unit) +
                                      " must run 1, 2, ... in order");
        path.push_back(state);
        max_state = std::max(max_state, state);
    }
    if (ts.empty()) bad("trajectory csv", "no rows");
    ts.num_states = num_states > 0 ? num_states : std::max(2, max_state + 1);
    ts.validate();
    return ts;
}

TrajectorySet read_trajectories(const std::filesystem::path& path, int num_states) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_trajectories_csv(in, num_states);
}

ExperimentConfig experiment_config_from_json(const Json& j, const std::filesystem::path& base_dir) {
    ExperimentConfig c;
    c.experiment = get_or<std::string>(j, "experiment", c.experiment);
    c.kind = parse_ambiguity_kind(get_or<std::string>(j, "ambiguity", "kl"));
    c.psi_grid = j.contains("psi_grid") ? j.at("psi_grid").get<std::vector<double>>() : default_psi_grid(c.kind);
    c.train_sizes = get_or(j, "train_sizes", c.train_sizes);
    c.test_size = get_or(j, "test_size", c.test_size);
    c.replications = get_or(j, "replications", c.replications);
    c.split_fraction = get_or(j, "split_fraction", c.split_fraction);
    c.gamma = get_or(j, "gamma", c.gamma);
    c.q = get_or(j, "q", c.q);
    c.bootstrap_samples = get_or(j, "bootstrap_samples", c.bootstrap_samples);
    c.rho = get_or(j, "rho", c.rho);
    c.epsilon = get_or(j, "epsilon", c.epsilon);
    c.max_trajectory_length = get_or(j, "max_trajectory_length", c.max_trajectory_length);
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.per_unit_test_kernels = get_or(j, "per_unit_test_kernels", c.per_unit_test_kernels);
    if (j.contains("model")) {
        const Json& m = j.at("model");
        c.model = m.is_string() ? model_from_json(read_json_file(base_dir / m.get<std::string>())) : model_from_json(m);
    }
    if (j.contains("true_slice")) c.true_slice = matrix_from_json(j.at("true_slice"), "true_slice");
    if (j.contains("data")) {
        const auto path = base_dir / j.at("data").get<std::string>();
        c.data = read_trajectories(path, c.model.space.num_conditions);
    }
    return c;
}

Json experiment_config_to_json(const ExperimentConfig& c) {
    Json j{{"experiment", c.experiment},
           {"ambiguity", to_string(c.kind)},
           {"psi_grid", c.psi_grid},
           {"train_sizes", c.train_sizes},
           {"test_size", c.test_size},
           {"replications", c.replications},
           {"split_fraction", c.split_fraction},
           {"gamma", c.gamma},
           {"q", c.q},
           {"bootstrap_samples", c.bootstrap_samples},
           {"rho", c.rho},
           {"epsilon", c.epsilon},
           {"max_trajectory_length", c.max_trajectory_length},
           {"seed", c.seed},
           {"per_unit_test_kernels", c.per_unit_test_kernels},
           {"model", model_to_json(c.model)}};
    if (c.true_slice.size() != 0) j["true_slice"] = matrix_to_json(c.true_slice);
    if (c.data) j["data_units"] = c.data->size();
    return j;
}

ViolationOptions violation_options_from_json(const Json& j) {
    ViolationOptions o;
    o.num_instances = get_or(j, "num_instances", o.num_instances);
    o.num_conditions = get_or(j, "states", o.num_conditions);
    o.max_reman = get_or(j, "k_max", o.max_reman);
    o.rho = get_or(j, "rho", o.rho);
    o.epsilon = get_or(j, "epsilon", o.epsilon);
    o.seed = get_or<std::uint64_t>(j, "seed", o.seed);
    o.max_draws = get_or(j, "max_draws", o.max_draws);
    if (j.contains("ranges")) {
        const Json& r = j.at("ranges");
        auto& rg = o.ranges;
        if (r.contains("a0")) rg.a0 = pair_from(r.at("a0"), "ranges.a0");
        if (r.contains("a1")) rg.a1 = pair_from(r.at("a1"), "ranges.a1");
        if (r.contains("a2")) rg.a2 = pair_from(r.at("a2"), "ranges.a2");
        if (r.contains("c_r")) rg.reman_cost = pair_from(r.at("c_r"), "ranges.c_r");
        if (r.contains("c_s")) rg.salvage = pair_from(r.at("c_s"), "ranges.c_s");
        if (r.contains("theta")) rg.theta = pair_from(r.at("theta"), "ranges.theta");
        if (r.contains("beta")) rg.beta = pair_from(r.at("beta"), "ranges.beta");
    }
    return o;
}

Json violation_options_to_json(const ViolationOptions& o) {
    const auto& rg = o.ranges;
    return Json{{"num_instances", o.num_instances},
                {"states", o.num_conditions},
                {"k_max", o.max_reman},
                {"rho", o.rho},
                {"epsilon", o.epsilon},
                {"seed", o.seed},
                {"max_draws", o.max_draws},
                {"ranges",
                 {{"a0", pair_json(rg.a0)},
                  {"a1", pair_json(rg.a1)},
                  {"a2", pair_json(rg.a2)},
                  {"c_r", pair_json(rg.reman_cost)},
                  {"c_s", pair_json(rg.salvage)},
                  {"theta", pair_json(rg.theta)},
                  {"beta", pair_json(rg.beta)}}}};
}

namespace {

Json summary_json(const PsiSummary& s, bool with_psi) {
    Json j{{"mean_in_sample", s.mean_in_sample},
           {"mean_out_sample", s.mean_out_sample},
           {"reliability", s.reliability},
           {"count", s.count}};
    if (with_psi) j["psi"] = s.psi;
    return j;
}

}  // namespace

Json report_to_json(const ExperimentReport& report) {
    Json sweeps = Json::array();
    for (const auto& sw : report.sweeps) {
        Json by = Json::array();
        for (const auto& s : sw.by_psi) by.push_back(summary_json(s, true));
        Json j{{"train_size", sw.train_size}, {"by_psi", by}, {"overall", summary_json(sw.overall, false)}};
        if (report.experiment == "impact") j["in_sample_monotone"] = sw.in_sample_monotone;
        if (report.experiment == "select-reliability") j["fallback_count"] = sw.fallback_count;
        sweeps.push_back(std::move(j));
    }
    return Json{{"experiment", report.experiment},
                {"ambiguity", to_string(report.kind)},
                {"mode", report.mode},
                {"sweeps", sweeps},
                {"notes", report.notes},
                {"warnings", report.warnings}};
}

void write_records_csv(std::ostream& out, const SweepResult& sweep) {
    out << "psi,replication,in_sample,out_sample,success\n";
    for (const auto& r : sweep.records)
        out << format_double(r.psi) << ',' << r.replication << ',' << format_double(r.in_sample) << ','
            << format_double(r.out_sample) << ',' << (r.success ? 1 : 0) << '\n';
}

Json violation_summary_to_json(const ViolationSummary& s) {
    return Json{{"instances", s.instances},
                {"rejected_draws", s.rejected_draws},
                {"condition_violated", s.condition_violated},
                {"broken_given_violated", s.broken_given_violated},
                {"broken_fraction", s.broken_fraction()},
                {"broken_total", s.broken_total},
                {"not_control_limit", s.not_control_limit}};
}

void write_violation_csv(std::ostream& out, const ViolationSummary& s) {
    out << "instance,a0,a1,a2,c_r,c_s,theta,beta,rejected_draws,condition_violated,control_limit,monotone_in_k\n";
    for (std::size_t i = 0; i < s.records.size(); ++i) {
        const auto& r = s.records[i];
        out << i << ',' << format_double(r.a0) << ',' << format_double(r.a1) << ',' << format_double(r.a2) << ','
            << format_double(r.reman_cost) << ',' << format_double(r.salvage) << ',' << format_double(r.theta) << ','
            << format_double(r.beta) << ',' << r.rejected_draws << ',' << int(r.condition_violated) << ','
            << int(r.control_limit) << ',' << int(r.monotone_in_k) << '\n';
    }
}

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<PlotSeries>& series) {
    constexpr double width = 640, height = 400, left = 70, right = 150, top = 40, bottom = 50;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double pw = width - left - right;
    const double ph = height - top - bottom;
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return top + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ostringstream os;
    os << std::setprecision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = xmin + (xmax - xmin) * t / 4.0;
        const double yv = ymin + (ymax - ymin) * t / 4.0;
        os << "<text x=\"" << px(xv) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\" font-size=\"11\">" << xv
           << "</text>\n";
        os << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << yv
           << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
       << x_label << "</text>\n";
    os << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
       << top + ph / 2 << ")\">" << y_label << "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        const char* color = colors[i % (sizeof colors / sizeof *colors)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t p = 0; p < s.x.size() && p < s.y.size(); ++p) os << (p ? " " : "") << px(s.x[p]) << ',' << py(s.y[p]);
        os << "\"/>\n";
        const double ly = top + 14 + 18 * static_cast<double>(i);
        os << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 30 << "\" y2=\"" << ly
           << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << left + pw + 34 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << s.label << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace reman
