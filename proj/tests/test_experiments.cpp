#include "oracles.hpp"
#include "reman/experiments.hpp"
#include "reman/synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace reman;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.psi_grid = {0.0, 0.1, 0.5, 2.0};
    c.train_sizes = {5};
    c.test_size = 10;
    c.replications = 6;
    c.q = 5;
    c.bootstrap_samples = 30;
    c.seed = 7;
    return c;
}

TrajectorySet repeated_units(int count) {
    TrajectorySet ts;
    ts.num_states = 7;
    for (int i = 0; i < count; ++i) {
        ts.unit_ids.push_back(i + 1);
        ts.states.push_back({0, 0, 0, 1, 1, 2, 3, 3, 4, 5, 6});
    }
    return ts;
}

bool same_records(const ExperimentReport& a, const ExperimentReport& b) {
    if (a.sweeps.size() != b.sweeps.size()) return false;
    for (std::size_t i = 0; i < a.sweeps.size(); ++i) {
        const auto& ra = a.sweeps[i].records;
        const auto& rb = b.sweeps[i].records;
        if (ra.size() != rb.size()) return false;
        for (std::size_t j = 0; j < ra.size(); ++j)
            if (ra[j].psi != rb[j].psi || ra[j].in_sample != rb[j].in_sample || ra[j].out_sample != rb[j].out_sample ||
                ra[j].success != rb[j].success)
                return false;
    }
    return true;
}

}  // namespace

TEST_CASE("out_of_sample_eval: self-evaluation and scrap") {
    const ModelSpec m = case_study_model();
    const Kernel k = degrade_kernel(default_true_slice(7), 0.07, 10);
    const Solution sol = robust_value_iteration(m, make_kl_ambiguity(k, 0.0), 1e-12);
    const std::vector<Kernel> one{k};
    CHECK(out_of_sample_eval(sol.policy, one, m, 1e-12) == doctest::Approx(sol.values(0, 0)).epsilon(1e-10));

    std::mt19937_64 rng(3);
    std::vector<Kernel> many;
    for (int i = 0; i < 4; ++i) many.push_back(degrade_kernel(random_ifr_slice(7, rng), 0.07, 10));
    CHECK(out_of_sample_eval(Policy(7, 10, Action::Scrap), many, m) == doctest::Approx(m.salvage));
    CHECK_THROWS_AS(out_of_sample_eval(sol.policy, std::vector<Kernel>{}, m), std::invalid_argument);
}

TEST_CASE("out_of_sample_eval: linear-solve oracle and linearity in the test set") {
    std::mt19937_64 rng(19);
    ModelSpec m;
    m.space = {3, 2};
    m.rewards = RewardModel::affine(m.space, 2.0, 0.3, 0.6);
    m.beta = 0.85;
    m.reman_cost = 1.0;
    m.salvage = 5.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Kernel> test;
        for (int i = 0; i < 3; ++i) test.push_back(degrade_kernel(oracle::random_slice(rng, 3), 0.07, 2));
        Policy pol(3, 2);
        for (int s = 0; s < 3; ++s)
            for (int k = 0; k <= 2; ++k) pol(s, k) = static_cast<Action>(std::uniform_int_distribution<int>(0, k < 2 ? 2 : 0)(rng));
        double expected = 0.0;
        for (const auto& k : test) expected += oracle::linear_policy_value(pol, k, m)(0, 0);
        expected /= 3.0;
        CHECK(out_of_sample_eval(pol, test, m, 1e-13) == doctest::Approx(expected).epsilon(1e-8));

        const std::vector<Kernel> first(test.begin(), test.begin() + 1);
        const std::vector<Kernel> rest(test.begin() + 1, test.end());
        const double combined = (out_of_sample_eval(pol, first, m, 1e-13) + 2.0 * out_of_sample_eval(pol, rest, m, 1e-13)) / 3.0;
        CHECK(out_of_sample_eval(pol, test, m, 1e-13) == doctest::Approx(combined).epsilon(1e-12));
    }
}

TEST_CASE("reliability fraction") {
    std::vector<ReplicationRecord> r(4);
    for (auto& x : r) x.success = true;
    CHECK(reliability(r) == 1.0);
    r[1].success = false;
    CHECK(reliability(r) == doctest::Approx(0.75));
    CHECK_THROWS(reliability(std::span<const ReplicationRecord>{}));
}

TEST_CASE("split_units: sizes, disjointness, determinism") {
    std::mt19937_64 rng(2);
    const TrajectorySet ts = simulate_trajectories(default_true_slice(7), 10, rng);
    const auto [a, b] = split_units(ts, 0.6, 5);
    CHECK(a.size() == 6);
    CHECK(b.size() == 4);
    std::set<int> ids(a.unit_ids.begin(), a.unit_ids.end());
    for (int id : b.unit_ids) CHECK(ids.insert(id).second);
    CHECK(ids.size() == 10);
    CHECK(split_units(ts, 0.6, 5).first.unit_ids == a.unit_ids);
    CHECK(split_units(ts.subset({0, 1}), 0.99, 1).first.size() == 1);
    CHECK_THROWS_AS(split_units(ts.subset({0}), 0.6, 1), std::invalid_argument);
}

TEST_CASE("select_psi_validation") {
    ExperimentConfig c = small_config();
    std::mt19937_64 rng(4);
    const TrajectorySet train = simulate_trajectories(default_true_slice(7), 8, rng);

    ExperimentConfig single = c;
    single.psi_grid = {0.3};
    CHECK(select_psi_validation(train, single, 1).psi == 0.3);

    // every unit has the same path, so validation kernels equal the fitted nominal
    ExperimentConfig pair = c;
    pair.psi_grid = {0.0, 5.0};
    const Selection same = select_psi_validation(repeated_units(6), pair, 3);
    CHECK(same.psi == 0.0);
    CHECK(same.scores[0] >= same.scores[1]);

    const Selection s1 = select_psi_validation(train, c, 11);
    const Selection s2 = select_psi_validation(train, c, 11);
    CHECK(s1.psi == s2.psi);
    CHECK(s1.solution.policy == s2.solution.policy);
    CHECK(s1.solution.values == s2.solution.values);
    const auto best = std::max_element(s1.scores.begin(), s1.scores.end());
    CHECK(s1.index == static_cast<std::size_t>(best - s1.scores.begin()));

    CHECK_THROWS_AS(select_psi_validation(train.subset({0}), c, 1), std::invalid_argument);
}

TEST_CASE("select_psi_reliability") {
    ExperimentConfig c = small_config();
    std::mt19937_64 rng(8);
    const TrajectorySet train = simulate_trajectories(default_true_slice(7), 8, rng);

    ExperimentConfig easy = c;
    easy.gamma = 1e-9;
    const Selection e = select_psi_reliability(train, easy, 2);
    CHECK(e.index == 0);
    CHECK_FALSE(e.fallback);

    for (int q : {1, 4, 9}) {
        ExperimentConfig cq = c;
        cq.q = q;
        const Selection s = select_psi_reliability(train, cq, 5);
        const double need = std::ceil(cq.gamma * q);
        const auto first = std::find_if(s.scores.begin(), s.scores.end(), [&](double x) { return x >= need; });
        if (first == s.scores.end()) {
            CHECK(s.fallback);
            CHECK(s.index == cq.psi_grid.size() - 1);
            CHECK_FALSE(s.warnings.empty());
        } else {
            CHECK_FALSE(s.fallback);
            CHECK(s.index == static_cast<std::size_t>(first - s.scores.begin()));
        }
        for (double x : s.scores) CHECK((x >= 0 && x <= q));
    }

    const Selection a = select_psi_reliability(train, c, 13);
    const Selection b = select_psi_reliability(train, c, 13);
    CHECK(a.scores == b.scores);
    CHECK(a.solution.policy == b.solution.policy);
}

TEST_CASE("run_impact: shape, determinism, thread invariance, orderings") {
    ExperimentConfig c = small_config();
    c.train_sizes = {5, 10};
    const ExperimentReport r1 = run_impact(c);
    REQUIRE(r1.sweeps.size() == 2);
    for (const auto& sw : r1.sweeps) {
        CHECK(sw.records.size() == c.psi_grid.size() * static_cast<std::size_t>(c.replications));
        CHECK(sw.by_psi.size() == c.psi_grid.size());
        CHECK(sw.in_sample_monotone);
        for (const auto& p : sw.by_psi) CHECK((p.reliability >= 0.0 && p.reliability <= 1.0));
        for (const auto& rec : sw.records) CHECK(rec.success == (rec.out_sample >= rec.in_sample));
    }
    CHECK(same_records(r1, run_impact(c)));
    ExperimentConfig threaded = c;
    threaded.threads = 3;
    CHECK(same_records(r1, run_impact(threaded)));
    ExperimentConfig reseeded = c;
    reseeded.seed = 8;
    CHECK_FALSE(same_records(r1, run_impact(reseeded)));

    ExperimentConfig big = c;
    big.psi_grid = {0.0, 50.0};
    big.replications = 20;
    big.train_sizes = {5};
    const ExperimentReport r = run_impact(big);
    CHECK(r.sweeps[0].by_psi[1].reliability == 1.0);
    CHECK(r.sweeps[0].by_psi[0].reliability < r.sweeps[0].by_psi[1].reliability);
}

TEST_CASE("run_impact: interval sets and per-unit test kernels") {
    ExperimentConfig c = small_config();
    c.kind = AmbiguityKind::Interval;
    c.psi_grid = {0.9, 0.5, 0.1};
    c.replications = 3;
    const ExperimentReport r = run_impact(c);
    CHECK(r.sweeps[0].in_sample_monotone);
    CHECK(r.sweeps[0].records.size() == 9);

    ExperimentConfig pu = small_config();
    pu.per_unit_test_kernels = true;
    pu.replications = 3;
    CHECK(run_impact(pu).sweeps[0].records.size() == 12);
}

TEST_CASE("run_impact: data mode draws from the supplied pool") {
    std::mt19937_64 rng(1);
    ExperimentConfig c = small_config();
    c.data = simulate_trajectories(default_true_slice(7), 30, rng);
    c.test_size = 10;
    c.replications = 3;
    const ExperimentReport r = run_impact(c);
    CHECK(r.mode == "data");
    CHECK(r.sweeps[0].records.size() == 12);
    ExperimentConfig too_big = c;
    too_big.test_size = 26;
    CHECK_THROWS_AS(run_impact(too_big), std::invalid_argument);
}

TEST_CASE("run_selection: smoke and determinism") {
    ExperimentConfig c = small_config();
    c.replications = 3;
    c.q = 3;
    for (const char* which : {"select-validation", "select-reliability"}) {
        c.experiment = which;
        const ExperimentReport a = run_selection(c);
        REQUIRE(a.sweeps.size() == 1);
        CHECK(a.sweeps[0].records.size() == 3);
        for (const auto& rec : a.sweeps[0].records)
            CHECK(std::find(c.psi_grid.begin(), c.psi_grid.end(), rec.psi) != c.psi_grid.end());
        CHECK(same_records(a, run_selection(c)));
    }
}

TEST_CASE("experiment config validation") {
    ExperimentConfig c = small_config();
    CHECK_NOTHROW(c.validate());
    auto bad = [&](auto mutate) {
        ExperimentConfig x = small_config();
        mutate(x);
        CHECK_THROWS_AS(x.validate(), std::invalid_argument);
    };
    bad([](ExperimentConfig& x) { x.psi_grid.clear(); });
    bad([](ExperimentConfig& x) { x.psi_grid = {0.5, 0.1}; });
    bad([](ExperimentConfig& x) { x.kind = AmbiguityKind::Interval; x.psi_grid = {0.1, 0.5}; });
    bad([](ExperimentConfig& x) { x.split_fraction = 1.0; });
    bad([](ExperimentConfig& x) { x.gamma = 0.0; });
    bad([](ExperimentConfig& x) { x.q = 0; });
    bad([](ExperimentConfig& x) { x.experiment = "select-validation"; x.train_sizes = {1}; });
    bad([](ExperimentConfig& x) { x.train_sizes = {0}; });
    bad([](ExperimentConfig& x) { x.kind = AmbiguityKind::Interval; x.psi_grid = {0.5}; x.bootstrap_samples = 1; });
    CHECK(parse_ambiguity_kind("interval") == AmbiguityKind::Interval);
    CHECK_THROWS(parse_ambiguity_kind("wasserstein"));
}

TEST_CASE("violation_study: collapsed ranges") {
    ViolationOptions o;
    o.num_instances = 1;
    o.ranges.a0 = {3, 3};
    o.ranges.a1 = {0.5, 0.5};
    o.ranges.a2 = {0.5, 0.5};
    o.ranges.reman_cost = {2, 2};
    o.ranges.salvage = {0.5, 0.5};
    o.ranges.theta = {0.5, 0.5};
    o.ranges.beta = {0.9, 0.9};
    const ViolationSummary s = violation_study(o);
    CHECK(s.instances == 1);
    CHECK(s.rejected_draws == 0);
    CHECK(s.condition_violated == 1);
    CHECK(s.broken_given_violated == 0);
    CHECK(s.records[0].monotone_in_k);

    ViolationOptions nominal;
    nominal.num_instances = 50;
    nominal.ranges.theta = {0.0, 0.0};
    const ViolationSummary n = violation_study(nominal);
    CHECK(n.instances == 50);
    CHECK(n.broken_fraction() >= 0.0);
    CHECK(n.broken_fraction() <= 1.0);
}

TEST_CASE("violation_study: deterministic and thread invariant") {
    ViolationOptions o;
    o.num_instances = 60;
    o.seed = 5;
    const ViolationSummary a = violation_study(o);
    o.threads = 3;
    const ViolationSummary b = violation_study(o);
    CHECK(a.condition_violated == b.condition_violated);
    CHECK(a.broken_given_violated == b.broken_given_violated);
    CHECK(a.rejected_draws == b.rejected_draws);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].a0 == b.records[i].a0);
        CHECK(a.records[i].monotone_in_k == b.records[i].monotone_in_k);
        // every kept draw satisfies the salvage condition
        CHECK((a.records[i].a0 - 6 * a.records[i].a2) / (1 - a.records[i].beta) < a.records[i].salvage);
    }
    ViolationOptions impossible;
    impossible.num_instances = 1;
    impossible.ranges.salvage = {0.0, 0.0};
    impossible.ranges.a0 = {50, 50};
    impossible.ranges.a2 = {1, 1};
    impossible.max_draws = 10;
    CHECK_THROWS(violation_study(impossible));
}
