#include "reman/model.hpp"

#include <cmath>
#include <sstream>

namespace reman {

void StateSpace::validate() const {
    if (num_conditions < 2) throw std::invalid_argument("state space needs at least 2 condition states");
    if (max_reman < 0) throw std::invalid_argument("max_reman must be non-negative");
}

const char* to_string(Action a) {
    switch (a) {
    case Action::Wait: return "wait";
    case Action::Remanufacture: return "remanufacture";
    case Action::Scrap: return "scrap";
    }
    return "?";
}

RewardModel RewardModel::affine(const StateSpace& space, double a0, double a1, double a2) {
    return affine(space, a0, -a1, -a2, 0.0, 0.0, 0.0);
}

RewardModel RewardModel::affine(const StateSpace& space, double g0, double gk, double gs,
                                double e0, double ek, double es) {
    space.validate();
    RewardModel r;
    r.gain.resize(space.num_conditions, space.num_reman_levels());
    r.env_cost.resize(space.num_conditions, space.num_reman_levels());
    for (int s = 0; s < space.num_conditions; ++s)
        for (int k = 0; k < space.num_reman_levels(); ++k) {
            r.gain(s, k) = g0 + gk * k + gs * s;
            r.env_cost(s, k) = e0 + ek * k + es * s;
        }
    return r;
}

RewardModel RewardModel::from_table(const Matrix& reward) {
    RewardModel r;
    r.gain = reward;
    r.env_cost = Matrix::Zero(reward.rows(), reward.cols());
    return r;
}

void ModelSpec::validate() const {
    space.validate();
    const auto rows = space.num_conditions;
    const auto cols = space.num_reman_levels();
    if (rewards.gain.rows() != rows || rewards.gain.cols() != cols || rewards.env_cost.rows() != rows ||
        rewards.env_cost.cols() != cols)
        throw std::invalid_argument("reward tables must be (states) x (k_max + 1)");
    if (!rewards.gain.allFinite() || !rewards.env_cost.allFinite())
        throw std::invalid_argument("reward tables must be finite");
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("discount factor must lie in (0,1)");
    if (!std::isfinite(reman_cost) || !std::isfinite(salvage))
        throw std::invalid_argument("costs must be finite");
}

ModelSpec case_study_model(int num_conditions, int max_reman) {
    ModelSpec m;
    m.space = StateSpace{num_conditions, max_reman};
    // g = 4 - 0.25 s - 0.25 k, e = 1 + 0.25 s + 0.25 k
    m.rewards = RewardModel::affine(m.space, 4.0, -0.25, -0.25, 1.0, 0.25, 0.25);
    m.beta = 0.9;
    m.reman_cost = 2.0;
    m.salvage = 0.5;
    return m;
}

void validate_slice(const Matrix& slice, int k) {
    if (slice.rows() != slice.cols() || slice.rows() < 2) {
        std::ostringstream os;
        os << "kernel slice k=" << k << " must be square with at least 2 states";
        throw std::invalid_argument(os.str());
    }
    for (Eigen::Index s = 0; s < slice.rows(); ++s) {
        double sum = 0.0;
        for (Eigen::Index t = 0; t < slice.cols(); ++t) {
            const double p = slice(s, t);
            if (!(p >= 0.0 && p <= 1.0)) {
                std::ostringstream os;
                os << "kernel entry (k=" << k << ", s=" << s << ", s'=" << t << ") = " << p
                   << " is not in [0,1]";
                throw std::invalid_argument(os.str());
            }
            if (t < s && p != 0.0) {
                std::ostringstream os;
                os << "kernel entry (k=" << k << ", s=" << s << ", s'=" << t
                   << ") is positive but deterioration is irreversible";
                throw std::invalid_argument(os.str());
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance) {
            std::ostringstream os;
            os.precision(17);
            os << "kernel row (k=" << k << ", s=" << s << ") sums to " << sum;
            throw std::invalid_argument(os.str());
        }
    }
}

void validate_kernel(const Kernel& kernel) {
    if (kernel.slices.empty()) throw std::invalid_argument("kernel has no slices");
    const auto n = kernel.slices.front().rows();
    for (int k = 0; k <= kernel.max_reman(); ++k) {
        if (kernel[k].rows() != n) throw std::invalid_argument("kernel slices differ in size");
        validate_slice(kernel[k], k);
    }
}

Matrix shift_worse(const Matrix& slice, double rho) {
    const Eigen::Index n = slice.cols();
    Matrix out = Matrix::Zero(slice.rows(), n);
    for (Eigen::Index s = 0; s < slice.rows(); ++s) {
        for (Eigen::Index t = 0; t + 1 < n; ++t) {
            out(s, t) += (1.0 - rho) * slice(s, t);
            out(s, t + 1) += rho * slice(s, t);
        }
        out(s, n - 1) += slice(s, n - 1);
    }
    return out;
}

bool StructureReport::all_ifr() const {
    for (bool b : is_ifr_per_k)
        if (!b) return false;
    return true;
}

StructureReport check_assumptions(const ModelSpec& model, const Kernel& kernel) {
    model.validate();
    if (kernel.num_conditions() != model.space.num_conditions || kernel.max_reman() != model.space.max_reman)
        throw std::invalid_argument("check_assumptions: kernel and model dimensions differ");

    StructureReport report;
    for (int k = 0; k <= kernel.max_reman(); ++k) {
        const bool ifr = check_ifr(kernel[k]);
        report.is_ifr_per_k.push_back(ifr);
        if (!ifr)
            report.violations.push_back({"k=" + std::to_string(k), "nominal slice is not IFR"});
    }
    for (int k = 0; k < kernel.max_reman(); ++k) {
        if (!check_dominance(kernel[k + 1], kernel[k])) {
            report.dominance_in_k = false;
            report.violations.push_back({"k=" + std::to_string(k) + "->" + std::to_string(k + 1),
                                         "slice k+1 does not dominate slice k"});
        }
    }

    const Matrix r = model.rewards.reward_table();
    for (Eigen::Index s = 0; s < r.rows(); ++s)
        for (Eigen::Index k = 0; k < r.cols(); ++k) {
            const bool down_s = s + 1 >= r.rows() || r(s + 1, k) <= r(s, k);
            const bool down_k = k + 1 >= r.cols() || r(s, k + 1) <= r(s, k);
            if (!down_s || !down_k) {
                report.reward_monotone = false;
                report.violations.push_back({"(s=" + std::to_string(s) + ",k=" + std::to_string(k) + ")",
                                             "reward increases in s or k"});
            }
        }

    const double lhs = r(model.space.worst(), 0) / (1.0 - model.beta);
    report.salvage_condition = lhs < model.salvage;
    if (!report.salvage_condition) {
        std::ostringstream os;
        os << "r(S,0)/(1-beta) = " << lhs << " is not below salvage value " << model.salvage;
        report.violations.push_back({"(S,0)", os.str()});
    }
    return report;
}

}  // namespace reman
