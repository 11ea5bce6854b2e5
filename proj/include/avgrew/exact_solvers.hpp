#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "avgrew/mdp.hpp"
#include "avgrew/ragged_table.hpp"

namespace avgrew {

class SolverError : public std::runtime_error {
public:
    enum class Kind { not_unichain, not_communicating, iteration_cap, numerical };
    SolverError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Oracle solution for a fixed policy. Values are centered: d . v = 0.
struct ChainSolution {
    Eigen::VectorXd d;
    double reward_rate = 0.0;
    Eigen::VectorXd v;
    std::optional<ActionValues> q;
};

struct OptimalSolution {
    double reward_rate = 0.0;
    ActionValues q;
    Policy greedy_policy;
    std::vector<std::size_t> greedy_actions;
    std::size_t sweeps = 0;
    double span = 0.0;   // span of TQ - Q at termination
};

namespace detail {

inline constexpr double kRankThreshold = 1e-10;

inline void require_stochastic(const Eigen::MatrixXd& P) {
    if (P.rows() != P.cols() || P.rows() == 0) throw std::invalid_argument("transition matrix must be square");
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        if (std::abs(P.row(i).sum() - 1.0) > 1e-9 || P.row(i).minCoeff() < 0.0) {
            throw std::invalid_argument("transition matrix row " + std::to_string(i) + " is not a distribution");
        }
    }
}

}  // namespace detail

/// Number of recurrent classes of a stochastic matrix, via the nullity of
/// (P^T - I). Unichain chains have exactly one.
inline Eigen::Index recurrent_class_count(const Eigen::MatrixXd& P) {
    const auto n = P.rows();
    Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(n, n);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(detail::kRankThreshold);
    return n - qr.rank();
}

/// Stationary distribution of a unichain chain by a direct linear solve of
/// (P^T - I) d = 0 with the last equation replaced by sum(d) = 1. Works for
/// periodic chains. Throws SolverError(not_unichain) for multichain input.
inline Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P) {
    detail::require_stochastic(P);
    const auto n = P.rows();
    if (recurrent_class_count(P) != 1) {
        throw SolverError(SolverError::Kind::not_unichain, "induced chain is not unichain");
    }
    Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(n, n);
    A.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    Eigen::VectorXd d = A.fullPivLu().solve(b);
    // Transient states come back as +-1e-17 noise.
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(d(i)) < 1e-14) d(i) = 0.0;
    }
    if (d.minCoeff() < 0.0) throw SolverError(SolverError::Kind::numerical, "negative stationary mass");
    return d / d.sum();
}

inline double reward_rate(const TabularMdp& mdp, const Policy& policy) {
    const auto chain = induced_chain(mdp, policy);
    return stationary_distribution(chain.transition).dot(chain.reward);
}

/// Centered differential state values of a policy. Solves the stacked
/// system [(I - P); d^T] v = [r - g e; 0] by least squares, which tolerates
/// the rank-one deficiency of (I - P) without discarding a row.
inline ChainSolution differential_values(const TabularMdp& mdp, const Policy& policy) {
    const auto chain = induced_chain(mdp, policy);
    const auto n = chain.transition.rows();
    ChainSolution sol;
    sol.d = stationary_distribution(chain.transition);
    sol.reward_rate = sol.d.dot(chain.reward);

    Eigen::MatrixXd A(n + 1, n);
    A.topRows(n) = Eigen::MatrixXd::Identity(n, n) - chain.transition;
    A.row(n) = sol.d.transpose();
    Eigen::VectorXd b(n + 1);
    b.head(n) = chain.reward - Eigen::VectorXd::Constant(n, sol.reward_rate);
    b(n) = 0.0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < n) throw SolverError(SolverError::Kind::numerical, "singular centered Bellman system");
    sol.v = qr.solve(b);
    return sol;
}

/// Centered differential action values q_pi. Built from the centered state
/// values, so sum_{s,a} d(s) pi(a|s) q(s,a) = d . v = 0.
inline ChainSolution differential_action_values(const TabularMdp& mdp, const Policy& policy) {
    auto sol = differential_values(mdp, policy);
    ActionValues q(mdp.shape());
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        for (std::size_t a = 0; a < mdp.num_actions(s); ++a) {
            double value = 0.0;
            for (const auto& o : mdp.outcomes(s, a)) {
                value += o.probability *
                         (o.reward - sol.reward_rate + sol.v(static_cast<Eigen::Index>(o.next_state)));
            }
            q(s, a) = value;
        }
    }
    sol.q = std::move(q);
    return sol;
}

/// State-action stationary weights d(s) pi(a|s), flattened in pair order.
inline std::vector<double> pair_distribution(const Eigen::VectorXd& d, const Policy& policy) {
    std::vector<double> w(policy.table().size());
    for (std::size_t s = 0; s < policy.num_states(); ++s) {
        for (std::size_t a = 0; a < policy.row(s).size(); ++a) {
            w[policy.table().shape().index(s, a)] = d(static_cast<Eigen::Index>(s)) * policy.prob(s, a);
        }
    }
    return w;
}

/// Index of the largest entry; the first index within `tie_tolerance` of the
/// maximum wins.
template <typename Range>
std::size_t argmax_first(const Range& values, double tie_tolerance = 0.0) {
    auto best = -std::numeric_limits<double>::infinity();
    for (auto v : values) best = std::max(best, static_cast<double>(v));
    std::size_t i = 0;
    for (auto v : values) {
        if (static_cast<double>(v) >= best - tie_tolerance) return i;
        ++i;
    }
    return 0;
}

struct SolveOptions {
    double tol = 1e-10;
    std::size_t max_sweeps = 1'000'000;
    bool require_communicating = true;
    /// Weight of TQ in the damped update Q <- (1 - tau) Q + tau TQ. Damping
    /// makes iteration converge on periodic chains (the Two Loop cycles
    /// have period 5); tau = 1 is undamped relative value iteration.
    double damping = 0.5;
    std::size_t reference_state = 0;
    std::size_t reference_action = 0;
};

/// Optimal reward rate and centered optimal action values by relative value
/// iteration on Q. Stops when span(TQ - Q) < tol; the returned rate is the
/// midpoint of [min, max] of TQ - Q, so it is within tol / 2 of r*.
inline OptimalSolution solve_optimal(const TabularMdp& mdp, const SolveOptions& opts = {}) {
    if (!(opts.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (opts.require_communicating && !is_communicating(mdp)) {
        throw SolverError(SolverError::Kind::not_communicating, "MDP is not communicating");
    }
    if (!mdp.is_valid_pair(opts.reference_state, opts.reference_action)) {
        throw std::invalid_argument("invalid reference pair");
    }
    const auto& shape = mdp.shape();
    const auto n_pairs = mdp.num_pairs();
    std::vector<double> q(n_pairs, 0.0), tq(n_pairs, 0.0), state_max(mdp.num_states(), 0.0);
    const auto ref = shape.index(opts.reference_state, opts.reference_action);

    OptimalSolution out;
    for (std::size_t sweep = 1;; ++sweep) {
        for (std::size_t s = 0; s < mdp.num_states(); ++s) {
            const auto first = q.begin() + static_cast<std::ptrdiff_t>(shape.offset(s));
            state_max[s] = *std::max_element(first, first + static_cast<std::ptrdiff_t>(shape.row_size(s)));
        }
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t s = 0; s < mdp.num_states(); ++s) {
            for (std::size_t a = 0; a < mdp.num_actions(s); ++a) {
                double value = 0.0;
                for (const auto& o : mdp.outcomes(s, a)) {
                    value += o.probability * (o.reward + state_max[o.next_state]);
                }
                const auto i = shape.index(s, a);
                tq[i] = value;
                lo = std::min(lo, value - q[i]);
                hi = std::max(hi, value - q[i]);
            }
        }
        if (!std::isfinite(lo) || !std::isfinite(hi)) {
            throw SolverError(SolverError::Kind::numerical, "relative value iteration produced non-finite values");
        }
        out.span = hi - lo;
        if (out.span < opts.tol) {
            out.reward_rate = 0.5 * (lo + hi);
            out.sweeps = sweep;
            break;
        }
        if (sweep >= opts.max_sweeps) {
            throw SolverError(SolverError::Kind::iteration_cap,
                              "relative value iteration did not converge in " + std::to_string(sweep) + " sweeps");
        }
        const double tau = opts.damping;
        const double shift = (1.0 - tau) * q[ref] + tau * tq[ref];
        for (std::size_t i = 0; i < n_pairs; ++i) q[i] = (1.0 - tau) * q[i] + tau * tq[i] - shift;
    }

    const double tie_tolerance = std::max(1e-9, 10.0 * opts.tol);
    out.greedy_actions.resize(mdp.num_states());
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        const auto first = q.begin() + static_cast<std::ptrdiff_t>(shape.offset(s));
        std::span<const double> row(&*first, shape.row_size(s));
        out.greedy_actions[s] = argmax_first(row, tie_tolerance);
    }
    out.greedy_policy = Policy::deterministic(mdp, out.greedy_actions);
    auto centered = differential_action_values(mdp, out.greedy_policy);
    out.q = std::move(*centered.q);
    return out;
}

}  // namespace avgrew
