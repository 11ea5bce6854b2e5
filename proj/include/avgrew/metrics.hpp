#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "avgrew/exact_solvers.hpp"

namespace avgrew {

/// Oracle reference for one evaluation: centered values (state or pair
/// order), their stationary weights, and the reward rate.
struct EvalContext {
    std::vector<double> values;
    std::vector<double> weights;
    double reward_rate = 0.0;
};

/// State-value context from a policy solution.
inline EvalContext state_context(const ChainSolution& sol) {
    return {std::vector<double>(sol.v.data(), sol.v.data() + sol.v.size()),
            std::vector<double>(sol.d.data(), sol.d.data() + sol.d.size()), sol.reward_rate};
}

/// Action-value context with weights d(s) pi(a|s). `sol` must carry q.
inline EvalContext pair_context(const ChainSolution& sol, const Policy& policy) {
    if (!sol.q) throw std::invalid_argument("solution has no action values");
    const auto q = sol.q->flat();
    return {std::vector<double>(q.begin(), q.end()), pair_distribution(sol.d, policy), sol.reward_rate};
}

namespace detail {
inline void require_same_size(std::size_t a, std::size_t b) {
    if (a != b) throw std::invalid_argument("metric dimension mismatch");
}
}  // namespace detail

/// RMS value error against the nearest shifted solution v_ref + c e. The
/// optimal shift is c = d . V because d . v_ref = 0.
inline double rmsve_tvr(std::span<const double> values, const EvalContext& ctx) {
    detail::require_same_size(values.size(), ctx.values.size());
    detail::require_same_size(values.size(), ctx.weights.size());
    double offset = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) offset += ctx.weights[i] * values[i];
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double e = values[i] - offset - ctx.values[i];
        total += ctx.weights[i] * e * e;
    }
    return std::sqrt(total);
}

/// Weighted RMS difference with no centering.
inline double rmsve_plain(std::span<const double> values, std::span<const double> reference,
                          std::span<const double> weights) {
    detail::require_same_size(values.size(), reference.size());
    detail::require_same_size(values.size(), weights.size());
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double e = values[i] - reference[i];
        total += weights[i] * e * e;
    }
    return std::sqrt(total);
}

inline double rmsve_plain(std::span<const double> values, const EvalContext& ctx) {
    return rmsve_plain(values, ctx.values, ctx.weights);
}

/// Reward-rate error (r_ref - rbar)^2.
inline double rre(double rbar, const EvalContext& ctx) {
    const double e = ctx.reward_rate - rbar;
    return e * e;
}

/// Element t is the mean of rewards[max(0, t - window + 1) .. t].
inline std::vector<double> windowed_reward_rate(std::span<const double> rewards, std::size_t window) {
    if (window == 0) throw std::invalid_argument("window must be at least 1");
    std::vector<double> out(rewards.size());
    double sum = 0.0;
    for (std::size_t t = 0; t < rewards.size(); ++t) {
        sum += rewards[t];
        if (t >= window) sum -= rewards[t - window];
        const auto len = std::min(window, t + 1);
        out[t] = sum / static_cast<double>(len);
    }
    return out;
}

/// Streaming form of windowed_reward_rate for long runs.
class RewardWindow {
public:
    explicit RewardWindow(std::size_t window) : buffer_(window, 0.0) {
        if (window == 0) throw std::invalid_argument("window must be at least 1");
    }

    void push(double reward) {
        sum_ += reward - buffer_[head_];
        buffer_[head_] = reward;
        head_ = (head_ + 1) % buffer_.size();
        if (count_ < buffer_.size()) ++count_;
    }

    double rate() const { return count_ == 0 ? 0.0 : sum_ / static_cast<double>(count_); }

private:
    std::vector<double> buffer_;
    std::size_t head_ = 0;
    std::size_t count_ = 0;
    double sum_ = 0.0;
};

}  // namespace avgrew
