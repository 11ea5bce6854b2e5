#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "avgrew/control.hpp"
#include "avgrew/random.hpp"

namespace avgrew {

/// Sparse binary feature vector: indices of the active features.
using ActiveFeatures = std::span<const std::size_t>;

/// Differential Q-learning with one linear weight vector per action over
/// binary features:
///   delta = R - Rbar + max_a w_a . x' - w_A . x
///   w_A += alpha delta x,  Rbar += eta alpha delta
/// alpha is used as given; tile-coded callers divide by the tiling count.
class LinearDifferentialQ {
public:
    LinearDifferentialQ(std::size_t n_actions, std::size_t n_features, double alpha, double eta,
                        double initial_rbar = 0.0)
        : weights_(n_actions, std::vector<double>(n_features, 0.0)), rbar_(initial_rbar), alpha_(alpha),
          eta_(eta) {
        if (n_actions == 0 || n_features == 0) throw std::invalid_argument("empty linear action-value model");
        if (!(alpha > 0.0) || !(eta > 0.0)) throw std::invalid_argument("alpha and eta must be positive");
    }

    std::size_t num_actions() const noexcept { return weights_.size(); }

    double value(ActiveFeatures x, std::size_t a) const {
        const auto& w = weights_.at(a);
        double total = 0.0;
        for (auto i : x) total += w[i];
        return total;
    }

    /// Max over the first `available` actions (all when 0).
    double max_value(ActiveFeatures x, std::size_t available = 0) const {
        const auto n = available == 0 ? num_actions() : available;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < n; ++a) best = std::max(best, value(x, a));
        return best;
    }

    std::size_t greedy(ActiveFeatures x, std::size_t available = 0) const {
        const auto n = available == 0 ? num_actions() : available;
        std::size_t best_a = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < n; ++a) {
            const double v = value(x, a);
            if (v > best) {
                best = v;
                best_a = a;
            }
        }
        return best_a;
    }

    std::size_t epsilon_greedy(ActiveFeatures x, double epsilon, Rng& rng, std::size_t available = 0) const {
        const auto n = available == 0 ? num_actions() : available;
        if (uniform01(rng) < epsilon) return uniform_index(rng, n);
        return greedy(x, n);
    }

    /// `next_available` restricts the max to the actions legal after the step.
    double step(ActiveFeatures x, std::size_t a, double reward, ActiveFeatures x_next,
                std::size_t next_available = 0) {
        const double delta = td_error(reward, rbar_, max_value(x_next, next_available), value(x, a));
        const double increment = alpha_ * delta;
        auto& w = weights_.at(a);
        for (auto i : x) w[i] += increment;
        rbar_ += eta_ * increment;
        finite_ = finite_ && std::isfinite(rbar_) && std::isfinite(increment);
        return delta;
    }

    const std::vector<double>& weights(std::size_t a) const { return weights_.at(a); }
    double reward_rate() const noexcept { return rbar_; }
    bool finite() const noexcept { return finite_; }

private:
    std::vector<std::vector<double>> weights_;
    double rbar_;
    double alpha_;
    double eta_;
    bool finite_ = true;
};

/// Minimal continuous task for smoke-testing linear learners: a point on
/// [0, 1] moves left (action 0) or right (action 1) by `step_size` and is
/// paid -|position - target| after each move.
class Track1D {
public:
    explicit Track1D(double target = 0.7, double step_size = 0.05) : target_(target), step_(step_size) {}

    double reset(Rng& rng) {
        position_ = uniform01(rng);
        return position_;
    }

    double position() const noexcept { return position_; }
    static constexpr std::size_t num_actions() { return 2; }

    /// Returns the reward; position() is the next observation.
    double step(std::size_t action) {
        position_ = std::clamp(position_ + (action == 1 ? step_ : -step_), 0.0, 1.0);
        return -std::abs(position_ - target_);
    }

private:
    double target_;
    double step_;
    double position_ = 0.0;
};

}  // namespace avgrew
