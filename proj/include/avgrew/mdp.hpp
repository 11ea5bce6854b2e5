#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "avgrew/ragged_table.hpp"
#include "avgrew/random.hpp"

namespace avgrew {

inline constexpr double kProbabilityTolerance = 1e-12;

/// One branch of a (state, action) transition list.
struct Outcome {
    double probability;
    std::size_t next_state;
    double reward;
};

/// One step of experience: S_t, A_t, R_{t+1}, S_{t+1}.
struct Transition {
    std::size_t state;
    std::size_t action;
    double reward;
    std::size_t next_state;

    friend bool operator==(const Transition&, const Transition&) = default;
};

/// Finite MDP with ragged action sets and sparse transition lists.
///
/// Construction does not validate; run validate_mdp() on anything that did
/// not come from one of the environment builders.
class TabularMdp {
public:
    using OutcomeList = std::vector<Outcome>;

    TabularMdp() = default;

    /// transitions[s][a] is the outcome list of pair (s, a).
    explicit TabularMdp(std::vector<std::vector<OutcomeList>> transitions)
        : transitions_(std::move(transitions)) {
        std::vector<std::size_t> counts;
        counts.reserve(transitions_.size());
        for (const auto& row : transitions_) counts.push_back(row.size());
        shape_ = RaggedShape(std::move(counts));
    }

    std::size_t num_states() const noexcept { return transitions_.size(); }
    std::size_t num_actions(std::size_t s) const { return transitions_.at(s).size(); }
    std::size_t num_pairs() const noexcept { return shape_.size(); }
    const RaggedShape& shape() const noexcept { return shape_; }

    bool is_valid_pair(std::size_t s, std::size_t a) const noexcept { return shape_.contains(s, a); }

    std::span<const Outcome> outcomes(std::size_t s, std::size_t a) const {
        if (!is_valid_pair(s, a)) {
            throw std::out_of_range("invalid state-action pair (" + std::to_string(s) + ", " +
                                    std::to_string(a) + ")");
        }
        return transitions_[s][a];
    }

    /// Expected one-step reward of (s, a).
    double expected_reward(std::size_t s, std::size_t a) const {
        double r = 0.0;
        for (const auto& o : outcomes(s, a)) r += o.probability * o.reward;
        return r;
    }

    /// Rescales every outcome list to sum to one. Builders that expand
    /// products of probabilities call this to absorb rounding.
    void normalize_rows() {
        for (auto& row : transitions_) {
            for (auto& list : row) {
                double total = 0.0;
                for (const auto& o : list) total += o.probability;
                if (total > 0.0) {
                    for (auto& o : list) o.probability /= total;
                }
            }
        }
    }

private:
    std::vector<std::vector<OutcomeList>> transitions_;
    RaggedShape shape_;
};

/// A model of the environment has the same structure as the environment.
using ModelMdp = TabularMdp;

/// Stationary stochastic policy: one probability row per state.
class Policy {
public:
    Policy() = default;
    explicit Policy(RaggedTable<double> probs) : probs_(std::move(probs)) {}

    static Policy uniform(const TabularMdp& mdp) {
        RaggedTable<double> probs(mdp.shape());
        for (std::size_t s = 0; s < mdp.num_states(); ++s) {
            auto row = probs.row(s);
            for (auto& p : row) p = 1.0 / static_cast<double>(row.size());
        }
        return Policy(std::move(probs));
    }

    /// actions[s] receives probability one.
    static Policy deterministic(const TabularMdp& mdp, std::span<const std::size_t> actions) {
        if (actions.size() != mdp.num_states()) throw std::invalid_argument("policy size mismatch");
        RaggedTable<double> probs(mdp.shape());
        for (std::size_t s = 0; s < mdp.num_states(); ++s) {
            if (actions[s] >= mdp.num_actions(s)) throw std::out_of_range("policy action out of range");
            probs(s, actions[s]) = 1.0;
        }
        return Policy(std::move(probs));
    }

    std::size_t num_states() const noexcept { return probs_.rows(); }
    double prob(std::size_t s, std::size_t a) const { return probs_(s, a); }
    std::span<const double> row(std::size_t s) const { return probs_.row(s); }
    const RaggedTable<double>& table() const noexcept { return probs_; }

    /// Draws an action for state s.
    std::size_t sample(std::size_t s, Rng& rng) const {
        const auto p = row(s);
        const double u = uniform01(rng);
        double cumulative = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t a = 0; a < p.size(); ++a) {
            if (p[a] <= 0.0) continue;
            cumulative += p[a];
            last_positive = a;
            if (u < cumulative) return a;
        }
        return last_positive;
    }

private:
    RaggedTable<double> probs_;
};

// ---------------------------------------------------------------------------
// Validation

struct Violation {
    enum class Kind { no_actions, empty_outcomes, probability_sum, negative_probability,
                      index_out_of_range, non_finite_reward, shape_mismatch };
    Kind kind;
    std::size_t state;
    std::size_t action;
    std::string message;
};

using ValidationReport = std::vector<Violation>;

inline ValidationReport validate_mdp(const TabularMdp& mdp) {
    using K = Violation::Kind;
    ValidationReport report;
    const auto n = mdp.num_states();
    if (n == 0) report.push_back({K::no_actions, 0, 0, "MDP has no states"});
    for (std::size_t s = 0; s < n; ++s) {
        if (mdp.num_actions(s) == 0) {
            report.push_back({K::no_actions, s, 0, "state has no actions"});
            continue;
        }
        for (std::size_t a = 0; a < mdp.num_actions(s); ++a) {
            const auto list = mdp.outcomes(s, a);
            if (list.empty()) {
                report.push_back({K::empty_outcomes, s, a, "empty transition list"});
                continue;
            }
            double total = 0.0;
            bool negative = false, out_of_range = false, non_finite = false;
            for (const auto& o : list) {
                total += o.probability;
                negative |= !(o.probability >= 0.0);
                out_of_range |= o.next_state >= n;
                non_finite |= !std::isfinite(o.reward);
            }
            if (negative) report.push_back({K::negative_probability, s, a, "negative probability"});
            if (std::abs(total - 1.0) > kProbabilityTolerance) {
                report.push_back({K::probability_sum, s, a,
                                  "probability sum " + std::to_string(total) + " != 1"});
            }
            if (out_of_range) report.push_back({K::index_out_of_range, s, a, "next state index out of range"});
            if (non_finite) report.push_back({K::non_finite_reward, s, a, "non-finite reward"});
        }
    }
    return report;
}

inline ValidationReport validate_policy(const TabularMdp& mdp, const Policy& policy) {
    using K = Violation::Kind;
    ValidationReport report;
    if (policy.table().shape() != mdp.shape()) {
        report.push_back({K::shape_mismatch, 0, 0, "policy shape does not match MDP"});
        return report;
    }
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        double total = 0.0;
        for (std::size_t a = 0; a < mdp.num_actions(s); ++a) {
            const double p = policy.prob(s, a);
            if (!(p >= 0.0)) report.push_back({K::negative_probability, s, a, "negative probability"});
            total += p;
        }
        if (std::abs(total - 1.0) > kProbabilityTolerance) {
            report.push_back({K::probability_sum, s, 0, "policy row does not sum to 1"});
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Sampling

/// Draws (s', r) for pair (s, a). Throws std::out_of_range for invalid pairs.
inline std::pair<std::size_t, double> sample_transition(const TabularMdp& mdp, std::size_t s,
                                                        std::size_t a, Rng& rng) {
    const auto list = mdp.outcomes(s, a);
    const double u = uniform01(rng);
    double cumulative = 0.0;
    const Outcome* chosen = nullptr;
    for (const auto& o : list) {
        if (o.probability <= 0.0) continue;
        chosen = &o;
        cumulative += o.probability;
        if (u < cumulative) break;
    }
    if (chosen == nullptr) throw std::logic_error("transition list has no positive-probability outcome");
    return {chosen->next_state, chosen->reward};
}

/// Samples a full transition starting from s with action drawn from `policy`.
inline Transition sample_step(const TabularMdp& mdp, const Policy& policy, std::size_t s, Rng& rng) {
    const auto a = policy.sample(s, rng);
    const auto [next, reward] = sample_transition(mdp, s, a, rng);
    return {s, a, reward, next};
}

// ---------------------------------------------------------------------------
// Induced chain

struct InducedChain {
    Eigen::MatrixXd transition;    // P_pi, row-stochastic
    Eigen::VectorXd reward;        // r_pi
};

inline InducedChain induced_chain(const TabularMdp& mdp, const Policy& policy) {
    if (policy.table().shape() != mdp.shape()) throw std::invalid_argument("policy shape does not match MDP");
    const auto n = static_cast<Eigen::Index>(mdp.num_states());
    InducedChain chain{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        const auto i = static_cast<Eigen::Index>(s);
        for (std::size_t a = 0; a < mdp.num_actions(s); ++a) {
            const double pa = policy.prob(s, a);
            if (pa == 0.0) continue;
            for (const auto& o : mdp.outcomes(s, a)) {
                chain.transition(i, static_cast<Eigen::Index>(o.next_state)) += pa * o.probability;
                chain.reward(i) += pa * o.probability * o.reward;
            }
        }
    }
    return chain;
}

/// True iff the union reachability graph (edge s -> s' whenever some action
/// reaches s' with positive probability) is strongly connected.
inline bool is_communicating(const TabularMdp& mdp) {
    const auto n = mdp.num_states();
    if (n == 0) return false;
    std::vector<std::vector<std::size_t>> forward(n), backward(n);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t a = 0; a < mdp.num_actions(s); ++a) {
            for (const auto& o : mdp.outcomes(s, a)) {
                if (o.probability > 0.0) {
                    forward[s].push_back(o.next_state);
                    backward[o.next_state].push_back(s);
                }
            }
        }
    }
    auto all_reached = [n](const std::vector<std::vector<std::size_t>>& graph) {
        std::vector<bool> seen(n, false);
        std::vector<std::size_t> stack{0};
        seen[0] = true;
        std::size_t count = 1;
        while (!stack.empty()) {
            const auto s = stack.back();
            stack.pop_back();
            for (auto t : graph[s]) {
                if (!seen[t]) {
                    seen[t] = true;
                    ++count;
                    stack.push_back(t);
                }
            }
        }
        return count == n;
    };
    return all_reached(forward) && all_reached(backward);
}

}  // namespace avgrew
