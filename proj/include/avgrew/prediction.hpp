#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "avgrew/control.hpp"
#include "avgrew/mdp.hpp"
#include "avgrew/step_size.hpp"

namespace avgrew {

class CoverageError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// rho = pi(a|s) / b(a|s). Throws CoverageError when b(a|s) = 0.
inline double importance_ratio(const Policy& target, const Policy& behavior, std::size_t s, std::size_t a) {
    const double b = behavior.prob(s, a);
    if (!(b > 0.0)) {
        throw CoverageError("behavior policy gives zero probability to (" + std::to_string(s) + ", " +
                            std::to_string(a) + ")");
    }
    return target.prob(s, a) / b;
}

/// Throws CoverageError if pi(a|s) > 0 while b(a|s) = 0 in state s.
inline void check_coverage(const Policy& target, const Policy& behavior, std::size_t s) {
    const auto pi = target.row(s);
    const auto b = behavior.row(s);
    for (std::size_t a = 0; a < pi.size(); ++a) {
        if (pi[a] > 0.0 && !(b[a] > 0.0)) {
            throw CoverageError("behavior policy does not cover (" + std::to_string(s) + ", " +
                                std::to_string(a) + ")");
        }
    }
}

inline void check_coverage(const Policy& target, const Policy& behavior) {
    for (std::size_t s = 0; s < target.num_states(); ++s) check_coverage(target, behavior, s);
}

inline double vector_sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// ---------------------------------------------------------------------------

/// Differential TD-learning (on- or off-policy):
///   delta = R - Rbar + V(S') - V(S)
///   V(S) += alpha rho delta,  Rbar += eta alpha rho delta
class DifferentialTD {
public:
    DifferentialTD(std::vector<double> initial_v, double eta, StepSizeSchedule alpha, double initial_rbar = 0.0)
        : v_(std::move(initial_v)), rbar_(initial_rbar), eta_(eta), alpha_(std::move(alpha)) {
        if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
        offset_constant_ = eta_ * vector_sum(v_) - rbar_;
    }

    DifferentialTD(std::size_t n_states, double eta, StepSizeSchedule alpha, double initial_rbar = 0.0)
        : DifferentialTD(std::vector<double>(n_states, 0.0), eta, std::move(alpha), initial_rbar) {}

    double step(const Transition& tr, double rho = 1.0) {
        if (!(rho >= 0.0)) throw std::invalid_argument("importance ratio must be non-negative");
        const double delta = td_error(tr.reward, rbar_, v_.at(tr.next_state), v_.at(tr.state));
        const double increment = alpha_.next(tr.state) * rho * delta;
        v_[tr.state] += increment;
        rbar_ += eta_ * increment;
        finite_ = finite_ && std::isfinite(v_[tr.state]) && std::isfinite(rbar_);
        return delta;
    }

    const std::vector<double>& v() const noexcept { return v_; }
    double reward_rate() const noexcept { return rbar_; }
    double eta() const noexcept { return eta_; }
    bool finite() const noexcept { return finite_; }

    double offset_residual() const { return rbar_ - (eta_ * vector_sum(v_) - offset_constant_); }

private:
    std::vector<double> v_;
    double rbar_;
    double eta_;
    StepSizeSchedule alpha_;
    double offset_constant_ = 0.0;
    bool finite_ = true;
};

/// Average Cost TD-learning (on-policy only). The reward-rate estimate is an
/// exponential average of rewards and never reads V:
///   V(S) += alpha delta,  Rbar += eta alpha (R - Rbar)
class AverageCostTD {
public:
    AverageCostTD(std::vector<double> initial_v, double eta, StepSizeSchedule alpha, double initial_rbar = 0.0)
        : v_(std::move(initial_v)), rbar_(initial_rbar), eta_(eta), alpha_(std::move(alpha)) {
        if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    }

    AverageCostTD(std::size_t n_states, double eta, StepSizeSchedule alpha, double initial_rbar = 0.0)
        : AverageCostTD(std::vector<double>(n_states, 0.0), eta, std::move(alpha), initial_rbar) {}

    double step(const Transition& tr) {
        const double delta = td_error(tr.reward, rbar_, v_.at(tr.next_state), v_.at(tr.state));
        const double alpha = alpha_.next(tr.state);
        v_[tr.state] += alpha * delta;
        rbar_ += eta_ * alpha * (tr.reward - rbar_);
        finite_ = finite_ && std::isfinite(v_[tr.state]) && std::isfinite(rbar_);
        return delta;
    }

    const std::vector<double>& v() const noexcept { return v_; }
    double reward_rate() const noexcept { return rbar_; }
    bool finite() const noexcept { return finite_; }

private:
    std::vector<double> v_;
    double rbar_;
    double eta_;
    StepSizeSchedule alpha_;
    bool finite_ = true;
};

/// Differential TD-learning plus a second estimator that learns the offset
/// of V with V itself as the reward:
///   Delta = V(S) - Vbar + F(S') - F(S)
///   F(S) += beta rho Delta,  Vbar += kappa beta rho Delta
/// V(S) is the value after this step's first-estimator update.
class CenteredDifferentialTD {
public:
    CenteredDifferentialTD(DifferentialTD inner, double kappa, StepSizeSchedule beta, double initial_vbar = 0.0)
        : inner_(std::move(inner)), f_(inner_.v().size(), 0.0), vbar_(initial_vbar), kappa_(kappa),
          beta_(std::move(beta)) {
        if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
        offset_constant_ = kappa_ * vector_sum(f_) - vbar_;
    }

    double step(const Transition& tr, double rho = 1.0) {
        inner_.step(tr, rho);
        const auto& v = inner_.v();
        const double delta = td_error(v[tr.state], vbar_, f_[tr.next_state], f_[tr.state]);
        const double increment = beta_.next(tr.state) * rho * delta;
        f_[tr.state] += increment;
        vbar_ += kappa_ * increment;
        return delta;
    }

    const DifferentialTD& inner() const noexcept { return inner_; }
    const std::vector<double>& v() const noexcept { return inner_.v(); }
    const std::vector<double>& auxiliary() const noexcept { return f_; }
    double reward_rate() const noexcept { return inner_.reward_rate(); }
    double offset() const noexcept { return vbar_; }
    bool finite() const noexcept { return inner_.finite() && std::isfinite(vbar_); }

    std::vector<double> centered_v() const {
        auto out = inner_.v();
        for (auto& x : out) x -= vbar_;
        return out;
    }

    double offset_residual() const { return vbar_ - (kappa_ * vector_sum(f_) - offset_constant_); }

private:
    DifferentialTD inner_;
    std::vector<double> f_;
    double vbar_;
    double kappa_;
    StepSizeSchedule beta_;
    double offset_constant_ = 0.0;
};

}  // namespace avgrew
