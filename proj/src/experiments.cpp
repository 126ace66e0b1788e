#include "reman/experiments.hpp"

#include "reman/parallel.hpp"
#include "reman/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace reman {

const char* to_string(AmbiguityKind kind) { return kind == AmbiguityKind::KL ? "kl" : "interval"; }

AmbiguityKind parse_ambiguity_kind(const std::string& name) {
    if (name == "kl") return AmbiguityKind::KL;
    if (name == "interval") return AmbiguityKind::Interval;
    throw std::invalid_argument("unknown ambiguity kind '" + name + "' (expected kl or interval)");
}

std::vector<double> default_psi_grid(AmbiguityKind kind) {
    if (kind == AmbiguityKind::Interval) return {0.99, 0.95, 0.9, 0.8, 0.6, 0.4, 0.2, 0.1, 0.05};
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(0.1 * i);
    return grid;
}

void ExperimentConfig::validate() const {
    model.validate();
    if (psi_grid.empty()) throw std::invalid_argument("psi grid is empty");
    for (std::size_t i = 0; i < psi_grid.size(); ++i) {
        const double p = psi_grid[i];
        if (kind == AmbiguityKind::KL && !(p >= 0.0 && std::isfinite(p)))
            throw std::invalid_argument("KL radius must be finite and non-negative");
        if (kind == AmbiguityKind::Interval && !(p > 0.0 && p < 1.0))
            throw std::invalid_argument("interval alpha must lie in (0,1)");
        if (i > 0) {
            const bool growing = kind == AmbiguityKind::KL ? p > psi_grid[i - 1] : p < psi_grid[i - 1];
            if (!growing)
                throw std::invalid_argument(kind == AmbiguityKind::KL
                                                ? "KL psi grid must be strictly ascending"
                                                : "interval psi grid must be strictly descending in alpha");
        }
    }
    if (train_sizes.empty()) throw std::invalid_argument("no training sizes given");
    for (int n : train_sizes)
        if (n < 1) throw std::invalid_argument("training size must be positive");
    if (experiment.rfind("select", 0) == 0)
        for (int n : train_sizes)
            if (n < 2) throw std::invalid_argument("selection needs at least 2 training units to split");
    if (test_size < 1) throw std::invalid_argument("test size must be positive");
    if (replications < 1) throw std::invalid_argument("need at least one replication");
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw std::invalid_argument("split fraction must lie in (0,1)");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
    if (q < 1) throw std::invalid_argument("q must be at least 1");
    if (bootstrap_samples < 1) throw std::invalid_argument("bootstrap sample count must be positive");
    if (kind == AmbiguityKind::Interval && bootstrap_samples < 2)
        throw std::invalid_argument("interval sets need at least 2 bootstrap samples");
    if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in [0,1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (max_trajectory_length < 2) throw std::invalid_argument("max trajectory length must be at least 2");
    if (threads < 1) throw std::invalid_argument("threads must be positive");

    const int n = model.space.num_conditions;
    if (data) {
        data->validate();
        if (data->num_states != n)
            throw std::invalid_argument("trajectory data has " + std::to_string(data->num_states) +
                                        " states but the model has " + std::to_string(n));
    } else if (true_slice.size() != 0) {
        if (true_slice.rows() != n) throw std::invalid_argument("true slice size does not match the model");
        validate_slice(true_slice);
    }
}

double out_of_sample_eval(const Policy& policy, std::span<const Kernel> test_kernels, const ModelSpec& model,
                          double epsilon) {
    if (test_kernels.empty()) throw std::invalid_argument("out-of-sample evaluation needs at least one test kernel");
    double total = 0.0;
    for (const auto& kernel : test_kernels) total += evaluate_policy(policy, kernel, model, epsilon)(0, 0);
    return total / static_cast<double>(test_kernels.size());
}

double reliability(std::span<const ReplicationRecord> records) {
    if (records.empty()) throw std::invalid_argument("reliability of an empty record set");
    const auto hits = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.success; });
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

Kernel unit_kernel(const TrajectorySet& trajectories, std::size_t index, int k_max, double rho) {
    const SliceEstimate est = mle_kernel(count_transitions(trajectories.subset({index})));
    return degrade_kernel(est.slice, rho, k_max);
}

AmbiguityBuilder::AmbiguityBuilder(const TrajectorySet& train, AmbiguityKind kind, int k_max, double rho,
                                   int bootstrap_samples, std::uint64_t seed)
    : kind_(kind), k_max_(k_max), rho_(rho), seed_(seed) {
    if (train.empty()) throw std::invalid_argument("cannot build an ambiguity set from no units");
    nominal_ = degrade_kernel(mle_kernel(count_transitions(train)).slice, rho, k_max);
    if (kind == AmbiguityKind::Interval) bootstrap_ = bootstrap_kernels(train, bootstrap_samples, seed);
}

Ambiguity AmbiguityBuilder::make(double psi) const {
    if (kind_ == AmbiguityKind::KL) return make_kl_ambiguity(nominal_, psi);
    return interval_from_bootstrap(bootstrap_, psi, k_max_, rho_, seed_);
}

std::pair<TrajectorySet, TrajectorySet> split_units(const TrajectorySet& ts, double fraction, std::uint64_t seed) {
    const std::size_t n = ts.size();
    if (n < 2) throw std::invalid_argument("cannot split fewer than 2 units");
    if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("split fraction must lie in (0,1)");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = substream(seed, 0);
    std::shuffle(order.begin(), order.end(), rng);
    auto first = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
    first = std::clamp<std::size_t>(first, 1, n - 1);
    std::vector<std::size_t> a(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(first));
    std::vector<std::size_t> b(order.begin() + static_cast<std::ptrdiff_t>(first), order.end());
    return {ts.subset(a), ts.subset(b)};
}

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) { return substream(seed, stream)(); }

std::vector<Kernel> unit_kernels(const TrajectorySet& ts, int k_max, double rho) {
    std::vector<Kernel> out;
    out.reserve(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) out.push_back(unit_kernel(ts, i, k_max, rho));
    return out;
}

Matrix true_slice_of(const ExperimentConfig& config) {
    return config.true_slice.size() != 0 ? config.true_slice : default_true_slice(config.model.space.num_conditions);
}

// Training units and test kernels for one replication.
struct ReplicationData {
    TrajectorySet train;
    std::vector<Kernel> test_kernels;
};

ReplicationData draw_replication(const ExperimentConfig& config, int train_size, std::mt19937_64& rng) {
    const int kmax = config.model.space.max_reman;
    ReplicationData out;
    if (config.data) {
        const TrajectorySet& pool = *config.data;
        const auto need = static_cast<std::size_t>(train_size) + static_cast<std::size_t>(config.test_size);
        if (pool.size() < need)
            throw std::invalid_argument("data set has " + std::to_string(pool.size()) + " units; need " +
                                        std::to_string(need) + " for train and test");
        std::vector<std::size_t> order(pool.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<std::size_t> train_idx(order.begin(), order.begin() + train_size);
        std::vector<std::size_t> test_idx(order.begin() + train_size, order.begin() + static_cast<std::ptrdiff_t>(need));
        out.train = pool.subset(train_idx);
        out.test_kernels = unit_kernels(pool.subset(test_idx), kmax, config.rho);
        return out;
    }
    const Matrix truth = true_slice_of(config);
    out.train = simulate_trajectories(truth, train_size, rng, config.max_trajectory_length);
    if (config.per_unit_test_kernels) {
        const TrajectorySet test =
            simulate_trajectories(truth, config.test_size, rng, config.max_trajectory_length, train_size + 1);
        out.test_kernels = unit_kernels(test, kmax, config.rho);
    } else {
        out.test_kernels.push_back(degrade_kernel(truth, config.rho, kmax));
    }
    return out;
}

PsiSummary summarize(double psi, const std::vector<const ReplicationRecord*>& rows) {
    PsiSummary s;
    s.psi = psi;
    s.count = static_cast<int>(rows.size());
    if (rows.empty()) return s;
    int hits = 0;
    for (const auto* r : rows) {
        s.mean_in_sample += r->in_sample;
        s.mean_out_sample += r->out_sample;
        hits += r->success ? 1 : 0;
    }
    s.mean_in_sample /= s.count;
    s.mean_out_sample /= s.count;
    s.reliability = static_cast<double>(hits) / s.count;
    return s;
}

std::uint64_t task_stream(std::size_t sweep, int replication) {
    return (static_cast<std::uint64_t>(sweep) << 32) | static_cast<std::uint64_t>(replication);
}

std::string mode_of(const ExperimentConfig& config) { return config.data ? "data" : "synthetic"; }

}  // namespace

Selection select_psi_validation(const TrajectorySet& train, const ExperimentConfig& config, std::uint64_t seed) {
    if (train.size() < 2) throw std::invalid_argument("validation selection needs at least 2 training units");
    const int kmax = config.model.space.max_reman;
    auto [fit, val] = split_units(train, config.split_fraction, derive_seed(seed, 0));
    const AmbiguityBuilder builder(fit, config.kind, kmax, config.rho, config.bootstrap_samples, derive_seed(seed, 1));
    const std::vector<Kernel> val_kernels = unit_kernels(val, kmax, config.rho);

    Selection sel;
    sel.scores.reserve(config.psi_grid.size());
    for (std::size_t i = 0; i < config.psi_grid.size(); ++i) {
        const Solution sol = robust_value_iteration(config.model, builder.make(config.psi_grid[i]), config.epsilon);
        sel.scores.push_back(out_of_sample_eval(sol.policy, val_kernels, config.model));
        if (sel.scores[i] > sel.scores[sel.index]) sel.index = i;
    }
    sel.psi = config.psi_grid[sel.index];

    const AmbiguityBuilder full(train, config.kind, kmax, config.rho, config.bootstrap_samples, derive_seed(seed, 2));
    sel.solution = robust_value_iteration(config.model, full.make(sel.psi), config.epsilon);
    return sel;
}

Selection select_psi_reliability(const TrajectorySet& train, const ExperimentConfig& config, std::uint64_t seed) {
    if (train.size() < 2) throw std::invalid_argument("reliability selection needs at least 2 training units");
    if (config.q < 1) throw std::invalid_argument("q must be at least 1");
    if (!(config.gamma > 0.0 && config.gamma < 1.0)) throw std::invalid_argument("gamma must lie in (0,1)");
    const int kmax = config.model.space.max_reman;
    const std::size_t n = train.size();

    Selection sel;
    sel.scores.assign(config.psi_grid.size(), 0.0);
    for (int b = 0; b < config.q; ++b) {
        auto rng = substream(seed, static_cast<std::uint64_t>(b));
        std::uniform_int_distribution<std::size_t> draw(0, n - 1);
        std::vector<std::size_t> pick(n);
        for (auto& p : pick) p = draw(rng);
        const TrajectorySet sample = train.subset(pick);
        auto [fit, val] = split_units(sample, config.split_fraction, rng());
        const AmbiguityBuilder builder(fit, config.kind, kmax, config.rho, config.bootstrap_samples, rng());
        const std::vector<Kernel> val_kernels = unit_kernels(val, kmax, config.rho);
        for (std::size_t i = 0; i < config.psi_grid.size(); ++i) {
            const Solution sol = robust_value_iteration(config.model, builder.make(config.psi_grid[i]), config.epsilon);
            if (out_of_sample_eval(sol.policy, val_kernels, config.model) >= sol.values(0, 0)) sel.scores[i] += 1.0;
        }
    }

    const double need = std::ceil(config.gamma * config.q);
    sel.index = config.psi_grid.size() - 1;
    sel.fallback = true;
    for (std::size_t i = 0; i < config.psi_grid.size(); ++i)
        if (sel.scores[i] >= need) {
            sel.index = i;
            sel.fallback = false;
            break;
        }
    sel.psi = config.psi_grid[sel.index];
    if (sel.fallback) {
        std::ostringstream os;
        os << "no psi reached reliability " << config.gamma << " in " << config.q
           << " bootstrap samples; using the largest, psi = " << sel.psi;
        sel.warnings.push_back(os.str());
    }

    const AmbiguityBuilder full(train, config.kind, kmax, config.rho, config.bootstrap_samples,
                                derive_seed(seed, static_cast<std::uint64_t>(config.q)));
    sel.solution = robust_value_iteration(config.model, full.make(sel.psi), config.epsilon);
    return sel;
}

ExperimentReport run_impact(const ExperimentConfig& config) {
    config.validate();
    const int kmax = config.model.space.max_reman;
    const std::size_t grid = config.psi_grid.size();
    const auto reps = static_cast<std::size_t>(config.replications);

    ExperimentReport report;
    report.experiment = "impact";
    report.kind = config.kind;
    report.mode = mode_of(config);
    if (!config.data && !config.per_unit_test_kernels)
        report.notes.push_back("test performance is the expected reward under the true kernel");

    for (std::size_t t = 0; t < config.train_sizes.size(); ++t) {
        const int n = config.train_sizes[t];
        std::vector<std::vector<ReplicationRecord>> rows(reps);
        std::vector<char> monotone(reps, 1);
        parallel_for(reps, config.threads, [&](std::size_t r) {
            auto rng = substream(config.seed, task_stream(t, static_cast<int>(r)));
            const ReplicationData data = draw_replication(config, n, rng);
            const AmbiguityBuilder builder(data.train, config.kind, kmax, config.rho, config.bootstrap_samples, rng());
            auto& out = rows[r];
            out.reserve(grid);
            for (std::size_t i = 0; i < grid; ++i) {
                const Solution sol = robust_value_iteration(config.model, builder.make(config.psi_grid[i]), config.epsilon);
                ReplicationRecord rec;
                rec.psi = config.psi_grid[i];
                rec.replication = static_cast<int>(r);
                rec.in_sample = sol.values(0, 0);
                rec.out_sample = out_of_sample_eval(sol.policy, data.test_kernels, config.model);
                rec.success = rec.out_sample >= rec.in_sample;
                if (i > 0 && rec.in_sample > out.back().in_sample + config.epsilon) monotone[r] = 0;
                out.push_back(rec);
            }
        });

        SweepResult sweep;
        sweep.train_size = n;
        for (std::size_t i = 0; i < grid; ++i) {
            std::vector<const ReplicationRecord*> at;
            for (const auto& rr : rows) at.push_back(&rr[i]);
            sweep.by_psi.push_back(summarize(config.psi_grid[i], at));
        }
        for (std::size_t r = 0; r < reps; ++r)
            sweep.records.insert(sweep.records.end(), rows[r].begin(), rows[r].end());
        sweep.in_sample_monotone = std::all_of(monotone.begin(), monotone.end(), [](char c) { return c != 0; });
        std::vector<const ReplicationRecord*> all;
        for (const auto& rec : sweep.records) all.push_back(&rec);
        sweep.overall = summarize(std::numeric_limits<double>::quiet_NaN(), all);
        if (!sweep.in_sample_monotone)
            report.warnings.push_back("in-sample value increased along the psi grid for |N| = " + std::to_string(n));
        report.sweeps.push_back(std::move(sweep));
    }
    return report;
}

ExperimentReport run_selection(const ExperimentConfig& config) {
    config.validate();
    const bool by_reliability = config.experiment == "select-reliability";
    if (!by_reliability && config.experiment != "select-validation")
        throw std::invalid_argument("run_selection handles select-validation and select-reliability, not '" +
                                    config.experiment + "'");
    const auto reps = static_cast<std::size_t>(config.replications);

    ExperimentReport report;
    report.experiment = config.experiment;
    report.kind = config.kind;
    report.mode = mode_of(config);
    if (by_reliability)
        report.notes.push_back("each bootstrap sample of the training set is split into fitting and validation parts");
    if (!config.data && !config.per_unit_test_kernels)
        report.notes.push_back("test performance is the expected reward under the true kernel");

    for (std::size_t t = 0; t < config.train_sizes.size(); ++t) {
        const int n = config.train_sizes[t];
        std::vector<ReplicationRecord> rows(reps);
        std::vector<char> fallback(reps, 0);
        parallel_for(reps, config.threads, [&](std::size_t r) {
            auto rng = substream(config.seed, task_stream(t, static_cast<int>(r)));
            const ReplicationData data = draw_replication(config, n, rng);
            const std::uint64_t sel_seed = rng();
            const Selection sel = by_reliability ? select_psi_reliability(data.train, config, sel_seed)
                                                 : select_psi_validation(data.train, config, sel_seed);
            ReplicationRecord& rec = rows[r];
            rec.psi = sel.psi;
            rec.replication = static_cast<int>(r);
            rec.in_sample = sel.solution.values(0, 0);
            rec.out_sample = out_of_sample_eval(sel.solution.policy, data.test_kernels, config.model);
            rec.success = rec.out_sample >= rec.in_sample;
            fallback[r] = sel.fallback ? 1 : 0;
        });

        SweepResult sweep;
        sweep.train_size = n;
        sweep.records = rows;
        sweep.fallback_count = static_cast<int>(std::count(fallback.begin(), fallback.end(), 1));
        std::map<std::size_t, std::vector<const ReplicationRecord*>> groups;
        for (const auto& rec : sweep.records) {
            const auto it = std::find(config.psi_grid.begin(), config.psi_grid.end(), rec.psi);
            groups[static_cast<std::size_t>(it - config.psi_grid.begin())].push_back(&rec);
        }
        for (const auto& [idx, group] : groups) sweep.by_psi.push_back(summarize(config.psi_grid[idx], group));
        std::vector<const ReplicationRecord*> all;
        for (const auto& rec : sweep.records) all.push_back(&rec);
        sweep.overall = summarize(std::numeric_limits<double>::quiet_NaN(), all);
        if (sweep.fallback_count > 0)
            report.warnings.push_back(std::to_string(sweep.fallback_count) + " of " + std::to_string(reps) +
                                      " replications with |N| = " + std::to_string(n) +
                                      " reached no psi meeting gamma and used the largest");
        report.sweeps.push_back(std::move(sweep));
    }
    return report;
}

ViolationSummary violation_study(const ViolationOptions& options) {
    if (options.num_instances < 0) throw std::invalid_argument("instance count must be non-negative");
    if (options.num_conditions < 2) throw std::invalid_argument("need at least 2 conditions");
    if (options.max_reman < 0) throw std::invalid_argument("max_reman must be non-negative");
    const auto& rg = options.ranges;
    for (const auto& [lo, hi] : {rg.a0, rg.a1, rg.a2, rg.reman_cost, rg.salvage, rg.theta, rg.beta})
        if (!(lo <= hi)) throw std::invalid_argument("range lower end exceeds upper end");
    if (!(rg.beta.first > 0.0 && rg.beta.second < 1.0)) throw std::invalid_argument("beta range must lie in (0,1)");
    if (rg.theta.first < 0.0) throw std::invalid_argument("theta range must be non-negative");

    const auto count = static_cast<std::size_t>(options.num_instances);
    std::vector<ViolationInstance> records(count);
    parallel_for(count, options.threads, [&](std::size_t i) {
        auto rng = substream(options.seed, i);
        ViolationInstance& inst = records[i];
        ModelSpec model;
        model.space.num_conditions = options.num_conditions;
        model.space.max_reman = options.max_reman;
        for (;;) {
            if (inst.rejected_draws >= options.max_draws)
                throw std::runtime_error("violation study: no draw satisfied the salvage condition");
            inst.a0 = uniform(rng, rg.a0.first, rg.a0.second);
            inst.a1 = uniform(rng, rg.a1.first, rg.a1.second);
            inst.a2 = uniform(rng, rg.a2.first, rg.a2.second);
            inst.reman_cost = uniform(rng, rg.reman_cost.first, rg.reman_cost.second);
            inst.salvage = uniform(rng, rg.salvage.first, rg.salvage.second);
            inst.theta = uniform(rng, rg.theta.first, rg.theta.second);
            inst.beta = uniform(rng, rg.beta.first, rg.beta.second);
            model.rewards = RewardModel::affine(model.space, inst.a0, inst.a1, inst.a2);
            model.beta = inst.beta;
            model.reman_cost = inst.reman_cost;
            model.salvage = inst.salvage;
            const double worst_stream = model.rewards.reward(model.space.worst(), 0) / (1.0 - model.beta);
            if (worst_stream < model.salvage) break;
            ++inst.rejected_draws;
        }
        const Kernel kernel = degrade_kernel(random_ifr_slice(options.num_conditions, rng), options.rho, options.max_reman);
        const Solution sol = robust_value_iteration(model, make_kl_ambiguity(kernel, inst.theta), options.epsilon);
        const ControlLimits cl = extract_control_limits(sol);
        inst.condition_violated = !check_monotone_threshold_condition(model).all();
        inst.control_limit = cl.is_control_limit;
        inst.monotone_in_k = cl.is_monotone_in_k;
    });

    ViolationSummary summary;
    summary.instances = options.num_instances;
    for (const auto& inst : records) {
        summary.rejected_draws += inst.rejected_draws;
        if (!inst.control_limit) ++summary.not_control_limit;
        if (!inst.monotone_in_k) ++summary.broken_total;
        if (inst.condition_violated) {
            ++summary.condition_violated;
            if (!inst.monotone_in_k) ++summary.broken_given_violated;
        }
    }
    summary.records = std::move(records);
    return summary;
}

}  // namespace reman
