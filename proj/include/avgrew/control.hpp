#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "avgrew/mdp.hpp"
#include "avgrew/ragged_table.hpp"
#include "avgrew/random.hpp"
#include "avgrew/step_size.hpp"

namespace avgrew {

/// TD error shared by every learner so equal inputs give bitwise-equal errors.
inline double td_error(double reward, double baseline, double next_value, double current) noexcept {
    return reward - baseline + next_value - current;
}

// ---------------------------------------------------------------------------
// Action selection

/// Argmax over the actions of s. The first action within `tie_tolerance` of
/// the maximum wins, so exact ties go to the lowest index.
inline std::size_t greedy_action(const ActionValues& q, std::size_t s, double tie_tolerance = 0.0) {
    const auto row = q.row(s);
    const double best = *std::max_element(row.begin(), row.end());
    for (std::size_t a = 0; a < row.size(); ++a) {
        if (row[a] >= best - tie_tolerance) return a;
    }
    return 0;
}

inline double max_action_value(const ActionValues& q, std::size_t s) {
    const auto row = q.row(s);
    return *std::max_element(row.begin(), row.end());
}

/// With probability epsilon a uniformly random action of s, otherwise greedy.
inline std::size_t epsilon_greedy(const ActionValues& q, std::size_t s, double epsilon, Rng& rng,
                                  double tie_tolerance = 0.0) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must be in [0, 1]");
    if (uniform01(rng) < epsilon) return uniform_index(rng, q.shape().row_size(s));
    return greedy_action(q, s, tie_tolerance);
}

// ---------------------------------------------------------------------------
// Reference functions for RVI Q-learning

struct ReferenceFunction {
    enum class Kind { single_pair, mean_all, max_all };
    Kind kind = Kind::single_pair;
    std::size_t state = 0;
    std::size_t action = 0;

    static ReferenceFunction single_pair(std::size_t s, std::size_t a) { return {Kind::single_pair, s, a}; }
    static ReferenceFunction mean_all() { return {Kind::mean_all, 0, 0}; }
    static ReferenceFunction max_all() { return {Kind::max_all, 0, 0}; }
};

inline double reference_value(const ReferenceFunction& f, const ActionValues& q) {
    switch (f.kind) {
        case ReferenceFunction::Kind::single_pair:
            if (!q.shape().contains(f.state, f.action)) throw std::out_of_range("reference pair out of range");
            return q(f.state, f.action);
        case ReferenceFunction::Kind::mean_all:
            return q.sum() / static_cast<double>(q.size());
        case ReferenceFunction::Kind::max_all: {
            const auto all = q.flat();
            return *std::max_element(all.begin(), all.end());
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Differential Q-learning

/// Tabular Differential Q-learning:
///   delta = R - Rbar + max_a Q(S', a) - Q(S, A)
///   Q(S, A) += alpha * delta,  Rbar += eta * alpha * delta
///
/// Rbar stays tied to the table sum: Rbar - Rbar_0 = eta (sum Q - sum Q_0).
class DifferentialQLearning {
public:
    DifferentialQLearning(ActionValues initial_q, double eta, StepSizeSchedule alpha, double initial_rbar = 0.0)
        : q_(std::move(initial_q)), rbar_(initial_rbar), eta_(eta), alpha_(std::move(alpha)) {
        if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
        offset_constant_ = eta_ * q_.sum() - rbar_;
    }

    DifferentialQLearning(const RaggedShape& shape, double eta, StepSizeSchedule alpha, double initial_rbar = 0.0)
        : DifferentialQLearning(ActionValues(shape), eta, std::move(alpha), initial_rbar) {}

    /// Applies one update and returns the TD error.
    double step(const Transition& tr) {
        const double delta =
            td_error(tr.reward, rbar_, max_action_value(q_, tr.next_state), q_(tr.state, tr.action));
        const double increment = alpha_.next(q_.shape().index(tr.state, tr.action)) * delta;
        q_(tr.state, tr.action) += increment;
        rbar_ += eta_ * increment;
        finite_ = finite_ && std::isfinite(q_(tr.state, tr.action)) && std::isfinite(rbar_);
        return delta;
    }

    const ActionValues& q() const noexcept { return q_; }
    double reward_rate() const noexcept { return rbar_; }
    double eta() const noexcept { return eta_; }
    bool finite() const noexcept { return finite_; }
    const StepSizeSchedule& schedule() const noexcept { return alpha_; }

    /// Rbar - (eta sum Q - (eta sum Q_0 - Rbar_0)); zero up to rounding.
    double offset_residual() const { return rbar_ - (eta_ * q_.sum() - offset_constant_); }

private:
    ActionValues q_;
    double rbar_;
    double eta_;
    StepSizeSchedule alpha_;
    double offset_constant_ = 0.0;
    bool finite_ = true;
};

// ---------------------------------------------------------------------------
// RVI Q-learning

/// Tabular RVI Q-learning with reference function f:
///   delta = R - f(Q) + max_a Q(S', a) - Q(S, A),  Q(S, A) += alpha * delta
/// f is evaluated before the write.
///
/// The mean_all reference is tracked incrementally (the mean moves by
/// increment / #pairs on every write), which costs O(1) per step and follows
/// the same floating-point path as the reward-rate estimate of Differential
/// Q-learning with eta = 1 / #pairs.
class RviQLearning {
public:
    RviQLearning(ActionValues initial_q, ReferenceFunction f, StepSizeSchedule alpha)
        : q_(std::move(initial_q)), f_(f), alpha_(std::move(alpha)),
          inv_pairs_(1.0 / static_cast<double>(q_.size())) {
        if (f_.kind == ReferenceFunction::Kind::single_pair && !q_.shape().contains(f_.state, f_.action)) {
            throw std::out_of_range("reference pair out of range");
        }
        if (f_.kind == ReferenceFunction::Kind::mean_all) tracked_mean_ = reference_value(f_, q_);
    }

    RviQLearning(const RaggedShape& shape, ReferenceFunction f, StepSizeSchedule alpha)
        : RviQLearning(ActionValues(shape), f, std::move(alpha)) {}

    double reference() const {
        return f_.kind == ReferenceFunction::Kind::mean_all ? tracked_mean_ : reference_value(f_, q_);
    }

    double step(const Transition& tr) {
        const double delta =
            td_error(tr.reward, reference(), max_action_value(q_, tr.next_state), q_(tr.state, tr.action));
        const double increment = alpha_.next(q_.shape().index(tr.state, tr.action)) * delta;
        q_(tr.state, tr.action) += increment;
        if (f_.kind == ReferenceFunction::Kind::mean_all) tracked_mean_ += inv_pairs_ * increment;
        finite_ = finite_ && std::isfinite(q_(tr.state, tr.action));
        return delta;
    }

    const ActionValues& q() const noexcept { return q_; }
    const ReferenceFunction& reference_function() const noexcept { return f_; }
    /// f(Q) doubles as the reward-rate estimate.
    double reward_rate() const { return reference(); }
    bool finite() const noexcept { return finite_; }

private:
    ActionValues q_;
    ReferenceFunction f_;
    StepSizeSchedule alpha_;
    double inv_pairs_;
    double tracked_mean_ = 0.0;
    bool finite_ = true;
};

// ---------------------------------------------------------------------------
// Centered Differential Q-learning

/// Differential Q-learning plus a second estimator whose reward is the first
/// estimator's value of the visited pair:
///   Delta = Q(S, A) - Qbar + F(S', argmax_a Q(S', a)) - F(S, A)
///   F(S, A) += beta * Delta,  Qbar += kappa * beta * Delta
/// Q(S, A) here is the value after this step's first-estimator update.
/// Q - Qbar e estimates the centered differential action values.
class CenteredDifferentialQLearning {
public:
    CenteredDifferentialQLearning(DifferentialQLearning inner, double kappa, StepSizeSchedule beta,
                                  double initial_qbar = 0.0, double tie_tolerance = 0.0)
        : inner_(std::move(inner)), f_(inner_.q().shape()), qbar_(initial_qbar), kappa_(kappa),
          beta_(std::move(beta)), tie_tolerance_(tie_tolerance) {
        if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
        offset_constant_ = kappa_ * f_.sum() - qbar_;
    }

    double step(const Transition& tr) {
        inner_.step(tr);
        const auto& q = inner_.q();
        const auto next_action = greedy_action(q, tr.next_state, tie_tolerance_);
        const double delta =
            td_error(q(tr.state, tr.action), qbar_, f_(tr.next_state, next_action), f_(tr.state, tr.action));
        const double increment = beta_.next(f_.shape().index(tr.state, tr.action)) * delta;
        f_(tr.state, tr.action) += increment;
        qbar_ += kappa_ * increment;
        return delta;
    }

    const DifferentialQLearning& inner() const noexcept { return inner_; }
    const ActionValues& q() const noexcept { return inner_.q(); }
    const ActionValues& auxiliary() const noexcept { return f_; }
    double reward_rate() const noexcept { return inner_.reward_rate(); }
    double offset() const noexcept { return qbar_; }
    bool finite() const noexcept { return inner_.finite() && std::isfinite(qbar_); }

    ActionValues centered_q() const {
        ActionValues out = inner_.q();
        for (auto& v : out.flat()) v -= qbar_;
        return out;
    }

    /// Qbar - (kappa sum F - (kappa sum F_0 - Qbar_0)); zero up to rounding.
    double offset_residual() const { return qbar_ - (kappa_ * f_.sum() - offset_constant_); }

private:
    DifferentialQLearning inner_;
    ActionValues f_;
    double qbar_;
    double kappa_;
    StepSizeSchedule beta_;
    double tie_tolerance_;
    double offset_constant_ = 0.0;
};

}  // namespace avgrew
