// reman: command-line front end for the robust remanufacturing solver.

#include "reman/ambiguity.hpp"
#include "reman/estimate.hpp"
#include "reman/experiments.hpp"
#include "reman/ingest.hpp"
#include "reman/inner.hpp"
#include "reman/io.hpp"
#include "reman/parallel.hpp"
#include "reman/solver.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifndef REMAN_VERSION
#define REMAN_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace reman;

namespace {

struct Globals {
    std::uint64_t seed = 42;
    bool seed_given = false;
    int threads = default_thread_count();
    std::string out = "out";
    bool quiet = false;
};

// Collects what a command read and wrote; written last as manifest.json.
struct Manifest {
    std::string command;
    Json config = Json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::vector<std::string> warnings;
    Json summary = Json::object();
};

class Run {
public:
    Run(const Globals& g, std::string command) : g_(g), start_(std::chrono::steady_clock::now()) {
        m_.command = std::move(command);
        fs::create_directories(g_.out);
    }

    Manifest& manifest() { return m_; }

    void input(const std::string& path) { m_.inputs.push_back(path); }
    void warn(const std::string& w) {
        m_.warnings.push_back(w);
        if (!g_.quiet) std::cerr << "warning: " << w << '\n';
    }
    void info(const std::string& line) const {
        if (!g_.quiet) std::cout << line << '\n';
    }

    void write(const std::string& name, const std::string& text) {
        const fs::path p = fs::path(g_.out) / name;
        write_text_file(p, text);
        m_.outputs.push_back(p.string());
    }
    void write_json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

    void finish(std::uint64_t seed) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        Json j{{"command", m_.command},
               {"config", m_.config},
               {"seed", seed},
               {"threads", g_.threads},
               {"inputs", m_.inputs},
               {"outputs", m_.outputs},
               {"version", REMAN_VERSION},
               {"duration_seconds", secs},
               {"warnings", m_.warnings},
               {"summary", m_.summary}};
        write_text_file(fs::path(g_.out) / "manifest.json", j.dump(2) + "\n");
    }

private:
    const Globals& g_;
    std::chrono::steady_clock::time_point start_;
    Manifest m_;
};

template <typename F>
std::string render(F&& fn) {
    std::ostringstream os;
    fn(os);
    return os.str();
}

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw std::runtime_error("no such file: " + path);
}

// --- ingest ---------------------------------------------------------------

struct IngestArgs {
    std::string csv;
    int states = 7;
    int setting_columns = 3;
    bool include_settings = false;
    std::vector<int> sensors;
};

void cmd_ingest(const Globals& g, const IngestArgs& a) {
    Run run(g, "ingest");
    require_file(a.csv);
    run.input(a.csv);
    SensorReadOptions opts;
    opts.setting_columns = a.setting_columns;
    opts.include_settings = a.include_settings;
    opts.sensors = a.sensors;
    run.manifest().config = {{"states", a.states},
                             {"setting_columns", a.setting_columns},
                             {"include_settings", a.include_settings},
                             {"sensors", a.sensors}};

    const SensorTable table = read_sensor_table(a.csv, opts);
    const HealthIndicator hi = extract_health_indicator(table);
    for (const auto& w : hi.warnings) run.warn(w);
    const TrajectorySet ts = discretize(hi, a.states, g.seed);
    const CountMatrix counts = count_transitions(ts);

    run.write("trajectories.csv", render([&](std::ostream& os) { write_trajectories_csv(os, ts); }));
    run.write("health_indicator.csv", render([&](std::ostream& os) {
                  os << "unit,cycle,value\n";
                  for (std::size_t u = 0; u < hi.unit_ids.size(); ++u)
                      for (std::size_t c = 0; c < hi.values[u].size(); ++c)
                          os << hi.unit_ids[u] << ',' << c + 1 << ',' << format_double(hi.values[u][c]) << '\n';
              }));
    run.manifest().summary = {{"units", ts.size()},
                              {"rows", table.rows()},
                              {"explained_variance", hi.explained_variance},
                              {"discarded_backward", counts.discarded},
                              {"discarded_fraction", counts.discarded_fraction()}};
    run.info("units: " + std::to_string(ts.size()) + ", discarded backward transitions: " +
             std::to_string(counts.discarded) + " (" + format_double(counts.discarded_fraction()) + ")");
    run.finish(g.seed);
}

// --- estimate -------------------------------------------------------------

struct EstimateArgs {
    std::string trajectories;
    int states = 0;
    int k_max = 10;
    double rho = 0.07;
    int bootstrap = 0;
};

void cmd_estimate(const Globals& g, const EstimateArgs& a) {
    Run run(g, "estimate");
    require_file(a.trajectories);
    run.input(a.trajectories);
    run.manifest().config = {{"states", a.states}, {"k_max", a.k_max}, {"rho", a.rho}, {"bootstrap", a.bootstrap}};

    const TrajectorySet ts = read_trajectories(a.trajectories, a.states);
    const CountMatrix counts = count_transitions(ts);
    const SliceEstimate est = mle_kernel(counts);
    for (std::size_t s = 0; s < est.unvisited.size(); ++s)
        if (est.unvisited[s] && static_cast<int>(s) + 1 < ts.num_states)
            run.warn("state " + std::to_string(s) + " has no observed transitions; row set self-absorbing");
    const Kernel kernel = degrade_kernel(est.slice, a.rho, a.k_max);

    run.write_json("kernel.json", kernel_to_json(kernel));
    run.write("kernel.csv", render([&](std::ostream& os) { write_kernel_csv(os, kernel); }));
    run.write("counts.csv", render([&](std::ostream& os) {
                  os << "s,s_prime,count\n";
                  for (Eigen::Index s = 0; s < counts.counts.rows(); ++s)
                      for (Eigen::Index t = 0; t < counts.counts.cols(); ++t)
                          os << s << ',' << t << ',' << counts.counts(s, t) << '\n';
              }));
    if (a.bootstrap > 0)
        run.write_json("bootstrap.json", bootstrap_to_json(bootstrap_kernels(ts, a.bootstrap, g.seed), g.seed));

    Json check = Json::object();
    check["ifr"] = check_ifr(est.slice);
    if (!check_ifr(est.slice)) run.warn("estimated k = 0 slice is not IFR");
    run.manifest().summary = {{"units", ts.size()},
                              {"transitions", counts.total()},
                              {"discarded_fraction", counts.discarded_fraction()},
                              {"ifr", check["ifr"]}};
    run.info("transitions: " + std::to_string(counts.total()) + ", discarded fraction " +
             format_double(counts.discarded_fraction()));
    run.finish(g.seed);
}

// --- ambiguity ------------------------------------------------------------

struct AmbiguityArgs {
    std::string kind = "kl";
    std::string kernel;
    std::string trajectories;
    std::string bootstrap;
    double theta = -1.0;
    double alpha = 0.05;
    int k_max = 10;
    double rho = 0.07;
};

void cmd_ambiguity(const Globals& g, const AmbiguityArgs& a) {
    Run run(g, "ambiguity");
    run.manifest().config = {{"kind", a.kind}, {"alpha", a.alpha}, {"k_max", a.k_max}, {"rho", a.rho}};
    const AmbiguityKind kind = parse_ambiguity_kind(a.kind);

    Ambiguity amb;
    if (kind == AmbiguityKind::KL) {
        if (a.kernel.empty()) throw std::invalid_argument("--kernel is required for a KL set");
        require_file(a.kernel);
        run.input(a.kernel);
        Kernel nominal = read_kernel(a.kernel);
        if (a.theta >= 0.0) {
            run.manifest().config["theta"] = a.theta;
            amb = make_kl_ambiguity(std::move(nominal), a.theta);
        } else {
            if (a.trajectories.empty())
                throw std::invalid_argument("give --theta, or --trajectories to calibrate radii from counts");
            require_file(a.trajectories);
            run.input(a.trajectories);
            const TrajectorySet ts = read_trajectories(a.trajectories, nominal.num_conditions());
            Vector theta = kl_radius_from_counts(count_transitions(ts), a.alpha);
            for (Eigen::Index s = 0; s < theta.size(); ++s)
                if (std::isinf(theta(s)) && s + 1 < theta.size())
                    run.warn("state " + std::to_string(s) + " has no observations; its radius is unbounded");
            amb = make_kl_ambiguity(std::move(nominal), theta);
        }
    } else {
        if (a.bootstrap.empty()) throw std::invalid_argument("--bootstrap is required for an interval set");
        require_file(a.bootstrap);
        run.input(a.bootstrap);
        const Json bj = read_json_file(a.bootstrap);
        const auto samples = bootstrap_from_json(bj);
        const std::uint64_t seed = bj.value("seed", std::uint64_t{0});
        const IntervalAmbiguity box = interval_from_bootstrap(samples, a.alpha, a.k_max, a.rho, seed);
        const BoundConditionReport rep = check_bound_conditions(box);
        if (!rep.ok())
            run.warn(std::to_string(rep.violations.size()) +
                     " bound-condition violations; control-limit structure is not guaranteed");
        run.manifest().summary["bound_conditions_ok"] = rep.ok();
        amb = box;
    }
    run.write_json("ambiguity.json", ambiguity_to_json(amb));
    run.finish(g.seed);
}

// --- solve ----------------------------------------------------------------

struct SolveArgs {
    std::string model;
    std::string ambiguity;
    double epsilon = 1e-4;
};

Json structure_json(const StructureReport& r) {
    Json v = Json::array();
    for (const auto& x : r.violations) v.push_back({{"location", x.location}, {"description", x.description}});
    return {{"is_ifr_per_k", r.is_ifr_per_k},
            {"dominance_in_k", r.dominance_in_k},
            {"reward_monotone", r.reward_monotone},
            {"salvage_condition", r.salvage_condition},
            {"violations", v}};
}

void cmd_solve(const Globals& g, const SolveArgs& a) {
    Run run(g, "solve");
    require_file(a.model);
    require_file(a.ambiguity);
    run.input(a.model);
    run.input(a.ambiguity);
    run.manifest().config = {{"epsilon", a.epsilon}};

    const ModelSpec model = model_from_json(read_json_file(a.model));
    const Ambiguity amb = ambiguity_from_json(read_json_file(a.ambiguity));

    const double worst_stream = model.rewards.reward(model.space.worst(), 0) / (1.0 - model.beta);
    if (!(worst_stream < model.salvage)) {
        std::ostringstream os;
        os << "salvage condition violated: r(S,0)/(1-beta) = " << format_double(worst_stream)
           << " must be below c_s = " << format_double(model.salvage);
        throw std::invalid_argument(os.str());
    }
    Json checks = Json::object();
    if (const auto* kl = std::get_if<KLAmbiguity>(&amb);
        kl && kl->nominal.num_conditions() == model.space.num_conditions &&
        kl->nominal.max_reman() == model.space.max_reman) {
        const StructureReport sr = check_assumptions(model, kl->nominal);
        checks["assumptions"] = structure_json(sr);
        for (const auto& v : sr.violations) run.warn(v.location + ": " + v.description);
    }
    if (const auto* box = std::get_if<IntervalAmbiguity>(&amb)) {
        const BoundConditionReport rep = check_bound_conditions(*box);
        checks["bound_conditions_ok"] = rep.ok();
        checks["bound_condition_violations"] = rep.violations.size();
        if (!rep.ok())
            run.warn(std::to_string(rep.violations.size()) +
                     " bound-condition violations; control-limit structure is not guaranteed");
    }
    const auto cond = check_monotone_threshold_condition(model);
    checks["monotone_threshold_condition"] = cond.size() == 0 || cond.all();

    const Solution sol = robust_value_iteration(model, amb, a.epsilon);
    for (const auto& w : sol.warnings) run.warn(w);
    const ControlLimits limits = extract_control_limits(sol);
    checks["values_monotone"] = values_monotone(sol.values);

    run.write_json("solution.json", solution_to_json(sol));
    run.write("policy.csv", render([&](std::ostream& os) { write_policy_csv(os, sol); }));
    run.write("limits.csv", render([&](std::ostream& os) { write_limits_csv(os, limits); }));
    run.write_json("checks.json", checks);
    run.manifest().summary = {{"iterations", sol.iterations},
                              {"residual", sol.residual},
                              {"value_00", sol.values(0, 0)},
                              {"k_star", limits.k_star},
                              {"is_control_limit", limits.is_control_limit},
                              {"is_monotone_in_k", limits.is_monotone_in_k}};
    run.info("V(0,0) = " + format_double(sol.values(0, 0)) + ", k* = " + std::to_string(limits.k_star) +
             ", iterations " + std::to_string(sol.iterations));
    run.finish(g.seed);
}

// --- evaluate -------------------------------------------------------------

struct EvaluateArgs {
    std::string model;
    std::string policy;
    std::vector<std::string> kernels;
    double epsilon = 1e-10;
};

void cmd_evaluate(const Globals& g, const EvaluateArgs& a) {
    Run run(g, "evaluate");
    require_file(a.model);
    require_file(a.policy);
    run.input(a.model);
    run.input(a.policy);
    run.manifest().config = {{"epsilon", a.epsilon}};
    const ModelSpec model = model_from_json(read_json_file(a.model));
    std::ifstream pin(a.policy);
    const Policy policy = read_policy_csv(pin);

    std::vector<Kernel> kernels;
    for (const auto& k : a.kernels) {
        require_file(k);
        run.input(k);
        kernels.push_back(read_kernel(k));
    }
    Json per = Json::array();
    std::string table = "kernel,k,s,V\n";
    for (std::size_t i = 0; i < kernels.size(); ++i) {
        const Matrix v = evaluate_policy(policy, kernels[i], model, a.epsilon);
        per.push_back(v(0, 0));
        for (Eigen::Index k = 0; k < v.cols(); ++k)
            for (Eigen::Index s = 0; s < v.rows(); ++s)
                table += std::to_string(i) + ',' + std::to_string(k) + ',' + std::to_string(s) + ',' +
                         format_double(v(s, k)) + '\n';
    }
    const double mean = out_of_sample_eval(policy, kernels, model, a.epsilon);
    run.write("evaluation.csv", table);
    run.write_json("evaluation.json", Json{{"per_kernel_value_00", per}, {"mean_value_00", mean}});
    run.manifest().summary = {{"mean_value_00", mean}};
    run.info("mean V(0,0) over " + std::to_string(kernels.size()) + " kernel(s): " + format_double(mean));
    run.finish(g.seed);
}

// --- experiment -----------------------------------------------------------

struct ExperimentArgs {
    std::string config;
    std::string name;
    bool emit_plots = false;
};

void emit_plots(Run& run, const ExperimentReport& report) {
    std::vector<PlotSeries> reward;
    std::vector<PlotSeries> rel;
    for (const auto& sw : report.sweeps) {
        PlotSeries r{"|N| = " + std::to_string(sw.train_size), {}, {}};
        PlotSeries p = r;
        for (const auto& s : sw.by_psi) {
            r.x.push_back(s.psi);
            r.y.push_back(s.mean_out_sample);
            p.x.push_back(s.psi);
            p.y.push_back(s.reliability);
        }
        reward.push_back(std::move(r));
        rel.push_back(std::move(p));
    }
    const std::string psi = report.kind == AmbiguityKind::KL ? "theta" : "alpha";
    run.write("reward.svg", svg_line_chart("Out-of-sample reward", psi, "mean reward", reward));
    run.write("reliability.svg", svg_line_chart("Reliability", psi, "Pr{out >= in}", rel));
}

void cmd_experiment(const Globals& g, const ExperimentArgs& a) {
    Run run(g, "experiment");
    require_file(a.config);
    run.input(a.config);
    const Json cj = read_json_file(a.config);
    const std::string name = !a.name.empty() ? a.name : cj.value("experiment", std::string("impact"));

    if (name == "violation-study") {
        ViolationOptions opts = violation_options_from_json(cj);
        if (g.seed_given) opts.seed = g.seed;
        opts.threads = g.threads;
        run.manifest().config = violation_options_to_json(opts);
        const ViolationSummary summary = violation_study(opts);
        run.write_json("summary.json", violation_summary_to_json(summary));
        run.write("instances.csv", render([&](std::ostream& os) { write_violation_csv(os, summary); }));
        run.manifest().summary = violation_summary_to_json(summary);
        run.info("condition violated in " + std::to_string(summary.condition_violated) + " of " +
                 std::to_string(summary.instances) + "; structure broken in " +
                 std::to_string(summary.broken_given_violated) + " of those");
        run.finish(opts.seed);
        return;
    }

    ExperimentConfig config = experiment_config_from_json(cj, fs::path(a.config).parent_path());
    config.experiment = name;
    if (g.seed_given) config.seed = g.seed;
    config.threads = g.threads;
    run.manifest().config = experiment_config_to_json(config);
    if (cj.contains("data")) run.input((fs::path(a.config).parent_path() / cj.at("data").get<std::string>()).string());

    ExperimentReport report;
    if (name == "impact")
        report = run_impact(config);
    else if (name == "select-validation" || name == "select-reliability")
        report = run_selection(config);
    else
        throw std::invalid_argument("unknown experiment '" + name +
                                    "' (expected impact, select-validation, select-reliability or violation-study)");
    for (const auto& w : report.warnings) run.warn(w);

    run.write_json("report.json", report_to_json(report));
    for (const auto& sw : report.sweeps)
        run.write("records_N" + std::to_string(sw.train_size) + ".csv",
                  render([&](std::ostream& os) { write_records_csv(os, sw); }));
    if (a.emit_plots) emit_plots(run, report);
    for (const auto& sw : report.sweeps)
        run.info("|N| = " + std::to_string(sw.train_size) + ": reliability " + format_double(sw.overall.reliability) +
                 ", mean out-of-sample " + format_double(sw.overall.mean_out_sample));
    run.finish(config.seed);
}

// --- inner-debug ----------------------------------------------------------

struct InnerArgs {
    std::string row;
};

Vector vector_from(const Json& j, const char* key) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("inner-debug: missing '") + key + "'");
    const auto v = j.at(key).get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void cmd_inner(const Globals& g, const InnerArgs& a) {
    Run run(g, "inner-debug");
    require_file(a.row);
    run.input(a.row);
    const Json j = read_json_file(a.row);
    const std::string kind = j.value("kind", std::string(j.contains("nominal") ? "kl" : "interval"));
    const Vector values = vector_from(j, "values");
    InnerResult res;
    std::string method;
    if (kind == "kl") {
        res = kl_inner(vector_from(j, "nominal"), values, j.at("theta").get<double>());
        method = "kl-dual";
    } else if (kind == "interval") {
        const Vector lo = vector_from(j, "lower");
        const Vector up = vector_from(j, "upper");
        if (is_non_increasing(values)) {
            res = interval_inner_greedy(lo, up, values);
            method = "greedy";
        } else {
            res = interval_inner_dual(lo, up, values);
            method = "pwl-dual";
        }
    } else {
        throw std::invalid_argument("inner-debug: unknown kind '" + kind + "'");
    }
    std::vector<double> row(res.worst_row.data(), res.worst_row.data() + res.worst_row.size());
    const Json out{{"kind", kind}, {"method", method}, {"value", res.value}, {"worst_row", row}, {"dual", res.dual}};
    run.write_json("inner.json", out);
    if (!g.quiet) std::cout << out.dump(2) << '\n';
    run.finish(g.seed);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust remanufacturing planning: estimation, ambiguity sets, robust value iteration, experiments"};
    app.set_version_flag("--version", std::string(REMAN_VERSION));
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Random seed")->each([&](const std::string&) { g.seed_given = true; });
    app.add_option("--threads", g.threads, "Worker threads (default: logical cores)")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Output directory");
    app.add_flag("--quiet", g.quiet, "Suppress progress output");

    IngestArgs ia;
    auto* ingest = app.add_subcommand("ingest", "Sensor CSV to discretized condition trajectories");
    ingest->add_option("csv", ia.csv, "C-MAPSS style sensor table")->required();
    ingest->add_option("--states", ia.states, "Number of condition states")->check(CLI::Range(2, 1000));
    ingest->add_option("--setting-columns", ia.setting_columns, "Operational-setting columns after unit and cycle");
    ingest->add_flag("--include-settings", ia.include_settings, "Use setting columns as features");
    ingest->add_option("--sensors", ia.sensors, "1-based sensor indices to keep")->delimiter(',');

    EstimateArgs ea;
    auto* estimate = app.add_subcommand("estimate", "Trajectories to a nominal kernel (and bootstrap samples)");
    estimate->add_option("trajectories", ea.trajectories, "unit,cycle,state CSV")->required();
    estimate->add_option("--states", ea.states, "Number of condition states (default: inferred)");
    estimate->add_option("--k-max", ea.k_max, "Largest remanufacture count")->check(CLI::NonNegativeNumber);
    estimate->add_option("--rho", ea.rho, "Degradation shift per remanufacture");
    estimate->add_option("--bootstrap", ea.bootstrap, "Bootstrap samples to draw (0 = none)");

    AmbiguityArgs aa;
    auto* ambiguity = app.add_subcommand("ambiguity", "Build a KL or interval ambiguity set");
    ambiguity->add_option("--kind", aa.kind, "kl or interval")->check(CLI::IsMember({"kl", "interval"}));
    ambiguity->add_option("--kernel", aa.kernel, "Nominal kernel (JSON or CSV) for KL sets");
    ambiguity->add_option("--theta", aa.theta, "Scalar KL radius");
    ambiguity->add_option("--trajectories", aa.trajectories, "Calibrate per-state KL radii from these counts");
    ambiguity->add_option("--bootstrap", aa.bootstrap, "bootstrap.json for interval sets");
    ambiguity->add_option("--alpha", aa.alpha, "Confidence complement");
    ambiguity->add_option("--k-max", aa.k_max, "Largest remanufacture count (interval sets)");
    ambiguity->add_option("--rho", aa.rho, "Degradation shift (interval sets)");

    SolveArgs sa;
    auto* solve = app.add_subcommand("solve", "Robust value iteration");
    solve->add_option("--model", sa.model, "model.json")->required();
    solve->add_option("--ambiguity", sa.ambiguity, "ambiguity.json")->required();
    solve->add_option("--epsilon", sa.epsilon, "Target accuracy")->check(CLI::PositiveNumber);

    EvaluateArgs va;
    auto* evaluate = app.add_subcommand("evaluate", "Expected reward of a policy under fixed kernels");
    evaluate->add_option("--model", va.model, "model.json")->required();
    evaluate->add_option("--policy", va.policy, "policy.csv from solve")->required();
    evaluate->add_option("--kernel", va.kernels, "Kernel file(s)")->required();
    evaluate->add_option("--epsilon", va.epsilon, "Target accuracy")->check(CLI::PositiveNumber);

    ExperimentArgs xa;
    auto* experiment = app.add_subcommand("experiment", "Run an experiment from a JSON config");
    experiment->add_option("config", xa.config, "Experiment config JSON")->required();
    experiment->add_option("--name", xa.name, "Override the experiment named in the config");
    experiment->add_flag("--emit-plots", xa.emit_plots, "Write SVG charts");

    InnerArgs na;
    auto* inner = app.add_subcommand("inner-debug", "Solve one inner worst-case row");
    inner->add_option("row", na.row, "Row JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) cmd_ingest(g, ia);
        if (*estimate) cmd_estimate(g, ea);
        if (*ambiguity) cmd_ambiguity(g, aa);
        if (*solve) cmd_solve(g, sa);
        if (*evaluate) cmd_evaluate(g, va);
        if (*experiment) cmd_experiment(g, xa);
        if (*inner) cmd_inner(g, na);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
