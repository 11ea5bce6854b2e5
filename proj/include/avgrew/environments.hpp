#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "avgrew/mdp.hpp"

namespace avgrew {

// ---------------------------------------------------------------------------
// Access-Control queuing task

/// free_prob = 0.06 is the value of Sutton & Barto (2018), Example 10.2.
struct AccessControlParams {
    std::size_t n_servers = 10;
    std::vector<double> priorities{1.0, 2.0, 4.0, 8.0};
    double free_prob = 0.06;
};

inline constexpr std::size_t kReject = 0;
inline constexpr std::size_t kAccept = 1;

/// State id of (head-of-queue priority index, number of free servers).
inline std::size_t access_control_state(const AccessControlParams& p, std::size_t priority_index,
                                        std::size_t free_servers) {
    return priority_index * (p.n_servers + 1) + free_servers;
}

/// States are (priority index, free count) laid out as
/// priority_index * (n_servers + 1) + free_count. Action 0 rejects, 1 accepts.
/// An accepted customer occupies a server before the freeing draw; then each
/// busy server frees independently with free_prob, and the next customer's
/// priority is uniform.
inline TabularMdp build_access_control(const AccessControlParams& p = {}) {
    if (p.n_servers < 1) throw std::invalid_argument("access control needs at least one server");
    if (p.priorities.empty()) throw std::invalid_argument("access control needs at least one priority");
    if (!(p.free_prob > 0.0 && p.free_prob < 1.0)) throw std::invalid_argument("free_prob must be in (0, 1)");

    const auto n_prio = p.priorities.size();
    const auto n = p.n_servers;
    const double prio_prob = 1.0 / static_cast<double>(n_prio);

    // binom[b][k] = P(k of b busy servers free up)
    std::vector<std::vector<double>> binom(n + 1);
    for (std::size_t b = 0; b <= n; ++b) {
        binom[b].resize(b + 1);
        for (std::size_t k = 0; k <= b; ++k) {
            const double log_choose = std::lgamma(b + 1.0) - std::lgamma(k + 1.0) - std::lgamma(b - k + 1.0);
            binom[b][k] = std::exp(log_choose) * std::pow(p.free_prob, static_cast<double>(k)) *
                          std::pow(1.0 - p.free_prob, static_cast<double>(b - k));
        }
    }

    std::vector<std::vector<TabularMdp::OutcomeList>> transitions(n_prio * (n + 1));
    for (std::size_t pi = 0; pi < n_prio; ++pi) {
        for (std::size_t f = 0; f <= n; ++f) {
            auto& row = transitions[access_control_state(p, pi, f)];
            row.resize(2);
            for (std::size_t action : {kReject, kAccept}) {
                const bool served = action == kAccept && f > 0;
                const double reward = served ? p.priorities[pi] : 0.0;
                const std::size_t busy = n - f + (served ? 1 : 0);
                auto& list = row[action];
                for (std::size_t k = 0; k <= busy; ++k) {
                    const std::size_t next_free = n - busy + k;
                    for (std::size_t next_pi = 0; next_pi < n_prio; ++next_pi) {
                        list.push_back({binom[busy][k] * prio_prob,
                                        access_control_state(p, next_pi, next_free), reward});
                    }
                }
            }
        }
    }
    TabularMdp mdp(std::move(transitions));
    mdp.normalize_rows();
    return mdp;
}

// ---------------------------------------------------------------------------
// Two Loop task and its variants

enum class TwoLoopVariant { standard, big_reward, rare_state };

inline constexpr std::size_t kLeft = 0;
inline constexpr std::size_t kRight = 1;

/// State 0 chooses left (reward +1, into 1->2->3->4->0) or right (reward 0,
/// into 5->6->7->8->0); the 8->0 step pays +2. big_reward pays +10 there.
/// rare_state adds state 9: from every other state each transition is taken
/// with probability 0.98, and with 0.02 the agent lands in state 9 instead;
/// the reward of the step is still the one of the nominal transition. State 9
/// returns to 0 with reward +100. This gives r* = 3.8431..., while paying 0
/// on the detour step would give 3.8055....
inline TabularMdp build_two_loop(TwoLoopVariant variant = TwoLoopVariant::standard) {
    const double loop_reward = variant == TwoLoopVariant::standard ? 2.0 : 10.0;
    const bool rare = variant == TwoLoopVariant::rare_state;
    const std::size_t n = rare ? 10 : 9;

    auto step = [&](std::size_t next, double reward) -> TabularMdp::OutcomeList {
        if (!rare) return {{1.0, next, reward}};
        return {{0.98, next, reward}, {0.02, 9, reward}};
    };

    std::vector<std::vector<TabularMdp::OutcomeList>> t(n);
    t[0] = {step(1, 1.0), step(5, 0.0)};
    t[1] = {step(2, 0.0)};
    t[2] = {step(3, 0.0)};
    t[3] = {step(4, 0.0)};
    t[4] = {step(0, 0.0)};
    t[5] = {step(6, 0.0)};
    t[6] = {step(7, 0.0)};
    t[7] = {step(8, 0.0)};
    t[8] = {step(0, loop_reward)};
    if (rare) t[9] = {{{1.0, 0, 100.0}}};
    return TabularMdp(std::move(t));
}

/// Two states. State 0: action a stays with probability 0.9 (reward +1) or
/// moves to 1 (reward +1); action b moves to 1 with reward -10. State 1 has
/// one action, a self-loop paying +2. State 0 is transient under every policy.
inline TabularMdp build_two_state_transient() {
    std::vector<std::vector<TabularMdp::OutcomeList>> t(2);
    t[0] = {{{0.9, 0, 1.0}, {0.1, 1, 1.0}}, {{1.0, 1, -10.0}}};
    t[1] = {{{1.0, 1, 2.0}}};
    return TabularMdp(std::move(t));
}

// ---------------------------------------------------------------------------
// Named environments

/// An MDP plus the distribution of its first state.
struct Environment {
    std::string name;
    TabularMdp mdp;
    std::vector<double> initial_distribution;

    std::size_t sample_initial_state(Rng& rng) const {
        const double u = uniform01(rng);
        double cumulative = 0.0;
        std::size_t last = 0;
        for (std::size_t s = 0; s < initial_distribution.size(); ++s) {
            if (initial_distribution[s] <= 0.0) continue;
            cumulative += initial_distribution[s];
            last = s;
            if (u < cumulative) return s;
        }
        return last;
    }
};

inline const std::vector<std::string>& tabular_environment_names() {
    static const std::vector<std::string> names{"access_control", "two_loop", "two_loop_big", "two_loop_rare",
                                                "two_state_transient"};
    return names;
}

/// Builds a named tabular environment. Access-Control starts with all servers
/// free and a uniformly drawn priority; the others start in state 0.
inline Environment make_environment(std::string_view name, const AccessControlParams& ac = {}) {
    auto start_at_zero = [](const TabularMdp& mdp) {
        std::vector<double> init(mdp.num_states(), 0.0);
        init[0] = 1.0;
        return init;
    };
    Environment env;
    env.name = std::string(name);
    if (name == "access_control") {
        env.mdp = build_access_control(ac);
        env.initial_distribution.assign(env.mdp.num_states(), 0.0);
        for (std::size_t pi = 0; pi < ac.priorities.size(); ++pi) {
            env.initial_distribution[access_control_state(ac, pi, ac.n_servers)] =
                1.0 / static_cast<double>(ac.priorities.size());
        }
        return env;
    }
    if (name == "two_loop") env.mdp = build_two_loop(TwoLoopVariant::standard);
    else if (name == "two_loop_big") env.mdp = build_two_loop(TwoLoopVariant::big_reward);
    else if (name == "two_loop_rare") env.mdp = build_two_loop(TwoLoopVariant::rare_state);
    else if (name == "two_state_transient") env.mdp = build_two_state_transient();
    else throw std::invalid_argument("unknown environment '" + std::string(name) + "'");
    env.initial_distribution = start_at_zero(env.mdp);
    return env;
}

}  // namespace avgrew
