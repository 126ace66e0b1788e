#include "oracles.hpp"
#include "reman/io.hpp"
#include "reman/synthetic.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace reman;

namespace {

std::filesystem::path temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / ("reman_io_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("format_double round-trips") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double x = oracle::unif(rng, -1e6, 1e6) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
        CHECK(std::stod(format_double(x)) == x);
    }
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("state tables are stored k-major") {
    Matrix t(2, 3);
    t << 1, 2, 3, 4, 5, 6;
    const Json j = state_table_to_json(t);
    CHECK(j.size() == 3);
    CHECK(j[1][0] == 2.0);
    CHECK(state_table_from_json(j, "t") == t);
    CHECK_THROWS_AS(matrix_from_json(Json::parse("[[1,2],[3]]"), "ragged"), std::invalid_argument);
    CHECK_THROWS_AS(matrix_from_json(Json::parse("[[1,\"a\"]]"), "text"), std::invalid_argument);
}

TEST_CASE("model JSON: the three reward forms agree") {
    const ModelSpec cs = case_study_model();
    const ModelSpec back = model_from_json(model_to_json(cs));
    CHECK(back.rewards.reward_table() == cs.rewards.reward_table());
    CHECK(back.beta == cs.beta);
    CHECK(back.salvage == cs.salvage);

    const Json gain_form = Json::parse(R"({"states": 7, "k_max": 10, "beta": 0.9, "c_r": 2, "c_s": 0.5,
        "reward": {"kind": "affine", "gain": {"base": 4, "per_k": -0.25, "per_s": -0.25},
                   "env_cost": {"base": 1, "per_k": 0.25, "per_s": 0.25}}})");
    CHECK((model_from_json(gain_form).rewards.reward_table() - cs.rewards.reward_table()).cwiseAbs().maxCoeff() < 1e-15);

    const Json a_form = Json::parse(R"({"states": 7, "k_max": 10, "beta": 0.9, "c_r": 2, "c_s": 0.5,
        "reward": {"kind": "affine", "a0": 3, "a1": 0.5, "a2": 0.5}})");
    CHECK((model_from_json(a_form).rewards.reward_table() - cs.rewards.reward_table()).cwiseAbs().maxCoeff() < 1e-15);

    Json bad = a_form;
    bad["beta"] = 1.5;
    CHECK_THROWS_AS(model_from_json(bad), std::invalid_argument);
    bad = a_form;
    bad["reward"]["kind"] = "quadratic";
    CHECK_THROWS_AS(model_from_json(bad), std::invalid_argument);
    bad = a_form;
    bad.erase("c_s");
    CHECK_THROWS_AS(model_from_json(bad), std::invalid_argument);
}

TEST_CASE("kernel JSON and CSV round-trip") {
    std::mt19937_64 rng(2);
    const Kernel k = degrade_kernel(random_ifr_slice(5, rng), 0.07, 3);
    const Kernel j = kernel_from_json(kernel_to_json(k));
    std::stringstream csv;
    write_kernel_csv(csv, k);
    const Kernel c = read_kernel_csv(csv);
    for (int i = 0; i <= 3; ++i) {
        CHECK(j[i] == k[i]);
        CHECK(c[i] == k[i]);
    }
    std::stringstream broken("k,s,s_prime,p\n0,0,0,0.5\n0,0,1,0.4\n0,1,1,1\n");
    CHECK_THROWS_AS(read_kernel_csv(broken), std::invalid_argument);
}

TEST_CASE("ambiguity JSON round-trip") {
    const Kernel k = degrade_kernel(default_true_slice(7), 0.07, 2);
    const Ambiguity scalar = make_kl_ambiguity(k, 0.25);
    const Json js = ambiguity_to_json(scalar);
    CHECK(js["type"] == "kl");
    CHECK(js["theta"].is_number());
    const auto back = std::get<KLAmbiguity>(ambiguity_from_json(js));
    CHECK((back.theta.array() == 0.25).all());

    Vector per(7);
    per << 0.1, 0.2, 0.3, std::numeric_limits<double>::infinity(), 0.5, 0.6, 0.7;
    const Json jt = ambiguity_to_json(make_kl_ambiguity(k, per));
    CHECK(jt["theta"].is_array());
    const auto table = std::get<KLAmbiguity>(ambiguity_from_json(jt));
    CHECK(std::isinf(table.theta(3, 1)));
    CHECK(table.theta(2, 2) == 0.3);

    std::mt19937_64 rng(3);
    const TrajectorySet ts = simulate_trajectories(default_true_slice(7), 8, rng);
    const IntervalAmbiguity box = interval_from_bootstrap(bootstrap_kernels(ts, 30, 4), 0.1, 2, 0.07, 4);
    const auto ib = std::get<IntervalAmbiguity>(ambiguity_from_json(ambiguity_to_json(box)));
    CHECK(ib.alpha == box.alpha);
    CHECK(ib.source_seed == 4);
    for (int i = 0; i <= 2; ++i) {
        CHECK(ib.lower[static_cast<std::size_t>(i)] == box.lower[static_cast<std::size_t>(i)]);
        CHECK(ib.upper[static_cast<std::size_t>(i)] == box.upper[static_cast<std::size_t>(i)]);
    }
    CHECK_THROWS_AS(ambiguity_from_json(Json::parse(R"({"type": "wasserstein"})")), std::invalid_argument);
}

TEST_CASE("bootstrap JSON round-trip") {
    std::mt19937_64 rng(5);
    const TrajectorySet ts = simulate_trajectories(default_true_slice(7), 3, rng);
    const auto samples = bootstrap_kernels(ts, 5, 9);
    const Json j = bootstrap_to_json(samples, 9);
    CHECK(j["seed"] == 9);
    CHECK(j["num_samples"] == 5);
    const auto back = bootstrap_from_json(j);
    REQUIRE(back.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(back[i].slice == samples[i].slice);
        CHECK(back[i].unvisited == samples[i].unvisited);
    }
}

TEST_CASE("policy CSV round-trip and solution JSON") {
    const Solution sol = robust_value_iteration(case_study_model(), make_kl_ambiguity(degrade_kernel(default_true_slice(7), 0.07, 10), 0.5));
    std::stringstream csv;
    write_policy_csv(csv, sol);
    CHECK(csv.str().rfind("k,s,V,action\n", 0) == 0);
    CHECK(read_policy_csv(csv) == sol.policy);
    const Json j = solution_to_json(sol);
    CHECK(j["control_limits"]["k_star"] == extract_control_limits(sol).k_star);
    CHECK(j["values"].size() == 11);
    CHECK(parse_action("remanufacture") == Action::Remanufacture);
    CHECK(parse_action("2") == Action::Scrap);
    CHECK_THROWS_AS(parse_action("repair"), std::invalid_argument);
    std::stringstream gap("k,s,V,action\n0,0,1,wait\n1,1,1,wait\n");
    CHECK_THROWS_AS(read_policy_csv(gap), std::invalid_argument);
    std::stringstream dup("k,s,V,action\n0,0,1,wait\n0,0,1,wait\n0,1,1,wait\n1,1,1,wait\n");
    CHECK_THROWS_AS(read_policy_csv(dup), std::invalid_argument);
}

TEST_CASE("trajectory CSV round-trip and errors") {
    TrajectorySet ts;
    ts.num_states = 5;
    ts.unit_ids = {3, 8};
    ts.states = {{0, 1, 1, 4}, {0, 2}};
    std::stringstream out;
    write_trajectories_csv(out, ts);
    const TrajectorySet back = read_trajectories_csv(out, 5);
    CHECK(back.unit_ids == ts.unit_ids);
    CHECK(back.states == ts.states);

    std::stringstream inferred("unit,cycle,state\n1,1,0\n1,2,2\n");
    CHECK(read_trajectories_csv(inferred).num_states == 3);
    std::stringstream skipped("1,1,0\n1,3,1\n");
    CHECK_THROWS_AS(read_trajectories_csv(skipped), std::invalid_argument);
    std::stringstream range("1,1,0\n1,2,7\n");
    CHECK_THROWS_AS(read_trajectories_csv(range, 5), std::invalid_argument);
    CHECK_THROWS_AS(read_trajectories("/nonexistent/trajectories.csv"), std::runtime_error);
}

TEST_CASE("experiment config JSON: round-trip and relative paths") {
    ExperimentConfig c;
    c.experiment = "select-reliability";
    c.kind = AmbiguityKind::Interval;
    c.psi_grid = {0.9, 0.5};
    c.train_sizes = {5, 10};
    c.q = 12;
    c.seed = 77;
    const ExperimentConfig back = experiment_config_from_json(experiment_config_to_json(c));
    CHECK(back.experiment == c.experiment);
    CHECK(back.kind == c.kind);
    CHECK(back.psi_grid == c.psi_grid);
    CHECK(back.train_sizes == c.train_sizes);
    CHECK(back.q == 12);
    CHECK(back.seed == 77);
    CHECK(back.model.rewards.reward_table() == c.model.rewards.reward_table());

    const auto dir = temp_dir();
    write_text_file(dir / "m.json", model_to_json(case_study_model(5, 3)).dump());
    write_text_file(dir / "d.csv", "unit,cycle,state\n1,1,0\n1,2,4\n2,1,0\n");
    const ExperimentConfig rel = experiment_config_from_json(Json::parse(R"({"model": "m.json", "data": "d.csv"})"), dir);
    CHECK(rel.model.space.num_conditions == 5);
    REQUIRE(rel.data.has_value());
    CHECK(rel.data->size() == 2);
    CHECK(rel.data->num_states == 5);
    std::filesystem::remove_all(dir);
}

TEST_CASE("violation options JSON") {
    ViolationOptions o;
    o.num_instances = 12;
    o.ranges.theta = {0.0, 0.5};
    const ViolationOptions back = violation_options_from_json(violation_options_to_json(o));
    CHECK(back.num_instances == 12);
    CHECK(back.ranges.theta == o.ranges.theta);
    CHECK(back.ranges.a0 == o.ranges.a0);
    const ViolationOptions point = violation_options_from_json(Json::parse(R"({"ranges": {"c_s": 0.5}})"));
    CHECK(point.ranges.salvage == std::pair<double, double>{0.5, 0.5});
    CHECK_THROWS_AS(violation_options_from_json(Json::parse(R"({"ranges": {"beta": [0.9, 0.1]}})")), std::invalid_argument);
}

TEST_CASE("records CSV and SVG output") {
    SweepResult sw;
    sw.records.push_back({0.5, 0, 20.0, 21.5, true});
    std::stringstream out;
    write_records_csv(out, sw);
    CHECK(out.str() == "psi,replication,in_sample,out_sample,success\n0.5,0,20,21.5,1\n");
    const std::string svg = svg_line_chart("t", "x", "y", {{"a", {0, 1, 2}, {1, 3, 2}}});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("<polyline") != std::string::npos);
}

TEST_CASE("file helpers") {
    const auto dir = temp_dir();
    write_text_file(dir / "nested" / "a.json", "{\"x\": 1}");
    CHECK(read_json_file(dir / "nested" / "a.json")["x"] == 1);
    write_text_file(dir / "bad.json", "{not json");
    CHECK_THROWS_AS(read_json_file(dir / "bad.json"), std::invalid_argument);
    CHECK_THROWS_AS(read_json_file(dir / "missing.json"), std::runtime_error);
    std::filesystem::remove_all(dir);
}
