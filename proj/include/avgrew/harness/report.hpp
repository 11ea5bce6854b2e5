#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "avgrew/environments.hpp"
#include "avgrew/exact_solvers.hpp"
#include "avgrew/harness/config.hpp"

namespace avgrew::harness {

/// Exact solution of one environment, either for a fixed policy or for the
/// optimal policy.
struct SolveReport {
    std::string env;
    std::string mode;  // "policy" or "optimal"
    std::string policy;
    bool communicating = true;
    std::vector<std::string> warnings;
    double reward_rate = 0.0;
    std::vector<double> d;
    std::vector<double> v;
    std::vector<std::vector<double>> q;
    std::vector<std::size_t> greedy_actions;
    std::size_t sweeps = 0;
};

inline std::vector<double> to_vector(const Eigen::VectorXd& x) { return {x.data(), x.data() + x.size()}; }

inline std::vector<std::vector<double>> to_rows(const ActionValues& q) {
    std::vector<std::vector<double>> rows;
    for (std::size_t s = 0; s < q.shape().rows(); ++s) {
        const auto row = q.row(s);
        rows.emplace_back(row.begin(), row.end());
    }
    return rows;
}

/// `policy` empty means optimal. Throws SolverError for chains the solver
/// cannot handle; a non-communicating MDP only produces a warning in
/// optimal mode.
inline SolveReport solve_report(const std::string& env_name, const std::string& policy,
                                const AccessControlParams& params = {}) {
    const auto env = make_environment(env_name, params);
    SolveReport r;
    r.env = env_name;
    r.communicating = is_communicating(env.mdp);
    ChainSolution sol;
    if (policy.empty()) {
        r.mode = "optimal";
        if (!r.communicating) r.warnings.emplace_back("MDP is not communicating");
        SolveOptions opts;
        opts.require_communicating = false;
        const auto opt = solve_optimal(env.mdp, opts);
        r.greedy_actions = opt.greedy_actions;
        r.sweeps = opt.sweeps;
        sol = differential_action_values(env.mdp, opt.greedy_policy);
        r.reward_rate = opt.reward_rate;
    } else {
        r.mode = "policy";
        r.policy = policy;
        sol = differential_action_values(env.mdp, parse_policy(policy, env.mdp));
        r.reward_rate = sol.reward_rate;
    }
    r.d = to_vector(sol.d);
    r.v = to_vector(sol.v);
    r.q = to_rows(*sol.q);
    return r;
}

inline json to_json(const SolveReport& r) {
    json j{{"env", r.env},
           {"mode", r.mode},
           {"communicating", r.communicating},
           {"warnings", r.warnings},
           {"reward_rate", r.reward_rate},
           {"d", r.d},
           {"v", r.v},
           {"q", r.q}};
    if (r.mode == "policy") j["policy"] = r.policy;
    else {
        j["greedy_actions"] = r.greedy_actions;
        j["sweeps"] = r.sweeps;
    }
    return j;
}

inline std::string to_table(const SolveReport& r) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(6);
    out << "env: " << r.env << "\n";
    if (r.mode == "optimal") out << "optimal reward rate r*: " << r.reward_rate << " (" << r.sweeps << " sweeps)\n";
    else out << "policy " << r.policy << " reward rate r: " << r.reward_rate << "\n";
    out << "state        d            v          q(s, .)\n";
    for (std::size_t s = 0; s < r.d.size(); ++s) {
        out.width(5);
        out << s;
        out << "  ";
        out.width(11);
        out << r.d[s] << "  ";
        out.width(11);
        out << r.v[s] << "  ";
        for (double x : r.q[s]) {
            out.width(11);
            out << x << " ";
        }
        if (r.mode == "optimal") out << " greedy=" << r.greedy_actions[s];
        out << "\n";
    }
    return out.str();
}

}  // namespace avgrew::harness
