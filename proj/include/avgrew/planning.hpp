#pragma once

#include <cstddef>
#include <utility>

#include "avgrew/control.hpp"
#include "avgrew/mdp.hpp"
#include "avgrew/prediction.hpp"
#include "avgrew/random.hpp"

namespace avgrew {

/// Chooses which entry a planning step updates: uniformly at random, or
/// round-robin through all entries in index order.
class PlanningSelector {
public:
    enum class Kind { uniform_random, sweep };

    explicit PlanningSelector(Kind kind = Kind::uniform_random) : kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

    /// Next flat index in [0, n).
    std::size_t next(std::size_t n, Rng& rng) {
        if (kind_ == Kind::uniform_random) return uniform_index(rng, n);
        const auto i = cursor_ % n;
        cursor_ = i + 1;
        return i;
    }

    /// Next (state, action) pair of `model`.
    std::pair<std::size_t, std::size_t> next_pair(const ModelMdp& model, Rng& rng) {
        return model.shape().locate(next(model.num_pairs(), rng));
    }

private:
    Kind kind_;
    std::size_t cursor_ = 0;
};

/// Differential Q-planning: one Differential Q-learning update on a
/// transition simulated from the model. Returns the simulated transition.
inline Transition diffq_planning_step(DifferentialQLearning& learner, const ModelMdp& model,
                                      PlanningSelector& selector, Rng& rng) {
    const auto [s, a] = selector.next_pair(model, rng);
    const auto [next, reward] = sample_transition(model, s, a, rng);
    const Transition tr{s, a, reward, next};
    learner.step(tr);
    return tr;
}

/// Differential TD-planning: picks a state, draws the action from the
/// behavior policy and the outcome from the model, then applies the
/// importance-weighted Differential TD update.
inline Transition difftd_planning_step(DifferentialTD& learner, const ModelMdp& model, const Policy& behavior,
                                       const Policy& target, PlanningSelector& state_selector, Rng& rng) {
    const auto s = state_selector.next(model.num_states(), rng);
    check_coverage(target, behavior, s);
    const auto a = behavior.sample(s, rng);
    const auto [next, reward] = sample_transition(model, s, a, rng);
    const Transition tr{s, a, reward, next};
    learner.step(tr, importance_ratio(target, behavior, s, a));
    return tr;
}

}  // namespace avgrew
