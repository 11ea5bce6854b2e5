#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "avgrew/control.hpp"
#include "avgrew/environments.hpp"
#include "avgrew/exact_solvers.hpp"
#include "avgrew/harness/config.hpp"
#include "avgrew/lfa.hpp"
#include "avgrew/metrics.hpp"
#include "avgrew/planning.hpp"
#include "avgrew/prediction.hpp"
#include "avgrew/tile_coding.hpp"

namespace avgrew::harness {

enum class RunStatus { converged, running, diverged };

inline const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::converged: return "converged";
        case RunStatus::running: return "running";
        case RunStatus::diverged: return "diverged";
    }
    return "?";
}

struct MetricRow {
    std::size_t run;
    std::size_t step;
    std::string metric;
    double value;
};

/// Result of one seeded run: metric rows in step order, terminal status and
/// the summary statistics used by sweeps.
struct RunResult {
    std::vector<MetricRow> rows;
    RunStatus status = RunStatus::running;
    std::map<std::string, double> summary;
};

/// Rows sorted by (run, step); statuses indexed by run.
struct RunLog {
    std::vector<MetricRow> rows;
    std::vector<RunStatus> status;
    std::vector<std::map<std::string, double>> summaries;
};

/// Reward-rate error below which a finished run counts as converged.
inline constexpr double kConvergedRre = 1e-6;

/// Oracle ground truth for an experiment, shared read-only by all runs.
struct Oracle {
    EvalContext context;
    bool available = false;
};

/// Control algorithms are scored against the centered optimal action values
/// weighted by the greedy policy's pair distribution; prediction algorithms
/// against the target policy's centered state values.
inline Oracle make_oracle(const ExperimentConfig& cfg) {
    Oracle oracle;
    if (cfg.algorithm == "diff_q_lfa") return oracle;
    const auto env = make_environment(cfg.env, cfg.env_params);
    if (is_control(cfg.algorithm)) {
        SolveOptions opts;
        opts.require_communicating = false;
        const auto opt = solve_optimal(env.mdp, opts);
        auto sol = differential_action_values(env.mdp, opt.greedy_policy);
        oracle.context = pair_context(sol, opt.greedy_policy);
    } else {
        const auto target = parse_policy(cfg.target_policy, env.mdp);
        oracle.context = state_context(differential_values(env.mdp, target));
    }
    oracle.available = true;
    return oracle;
}

namespace detail {

inline bool needs_oracle(const ExperimentConfig& cfg) {
    return has_metric(cfg, "rmsve_tvr") || has_metric(cfg, "rmsve_plain") || has_metric(cfg, "rre");
}

/// Collects rows at evaluation steps plus the running summaries.
class Recorder {
public:
    Recorder(const ExperimentConfig& cfg, const Oracle& oracle, std::size_t run) : cfg_(cfg), oracle_(oracle), run_(run) {
        for (const auto& m : cfg.metrics) {
            if (m.name == "window_rate") windows_.emplace_back(m.window);
        }
    }

    void reward(double r) {
        reward_sum_ += r;
        ++reward_count_;
        for (auto& w : windows_) w.push(r);
    }

    bool due(std::size_t step) const { return step % cfg_.eval_every == 0 || step == cfg_.steps; }

    /// `values` is the raw estimate, `centered` the offset-corrected one
    /// (same as raw for uncentered algorithms).
    void record(std::size_t step, std::span<const double> values, std::span<const double> centered, double rbar) {
        std::size_t window_index = 0;
        for (const auto& m : cfg_.metrics) {
            double value = 0.0;
            if (m.name == "rbar") value = rbar;
            else if (m.name == "window_rate") value = windows_[window_index++].rate();
            else if (m.name == "rmsve_tvr") value = rmsve_tvr(values, oracle_.context);
            else if (m.name == "rmsve_plain") value = rmsve_plain(centered, oracle_.context);
            else if (m.name == "rre") value = rre(rbar, oracle_.context);
            result_.rows.push_back({run_, step, m.label(), value});
        }
        if (oracle_.available) {
            tvr_sum_ += rmsve_tvr(values, oracle_.context);
            rre_sum_ += rre(rbar, oracle_.context);
            ++evaluations_;
            last_rre_ = rre(rbar, oracle_.context);
        }
    }

    RunResult finish(bool finite) {
        result_.status = !finite ? RunStatus::diverged
                                 : (oracle_.available && last_rre_ < kConvergedRre ? RunStatus::converged
                                                                                   : RunStatus::running);
        if (reward_count_ > 0) result_.summary["avg_reward"] = reward_sum_ / static_cast<double>(reward_count_);
        if (evaluations_ > 0) {
            result_.summary["avg_rmsve_tvr"] = tvr_sum_ / static_cast<double>(evaluations_);
            result_.summary["avg_rre"] = rre_sum_ / static_cast<double>(evaluations_);
        }
        return std::move(result_);
    }

private:
    const ExperimentConfig& cfg_;
    const Oracle& oracle_;
    std::size_t run_;
    std::vector<RewardWindow> windows_;
    double reward_sum_ = 0.0;
    std::size_t reward_count_ = 0;
    double tvr_sum_ = 0.0, rre_sum_ = 0.0, last_rre_ = INFINITY;
    std::size_t evaluations_ = 0;
    RunResult result_;
};

inline std::span<const double> flat_values(const ActionValues& q) { return q.flat(); }
inline std::span<const double> flat_values(const std::vector<double>& v) { return v; }

template <typename Learner>
RunResult run_control(const ExperimentConfig& cfg, const Oracle& oracle, const Environment& env, Learner learner,
                      std::size_t run, Rng& rng) {
    Recorder rec(cfg, oracle, run);
    auto s = env.sample_initial_state(rng);
    for (std::size_t t = 1; t <= cfg.steps; ++t) {
        const auto a = epsilon_greedy(learner.q(), s, cfg.epsilon, rng);
        const auto [next, reward] = sample_transition(env.mdp, s, a, rng);
        learner.step({s, a, reward, next});
        rec.reward(reward);
        s = next;
        if (!learner.finite()) return rec.finish(false);
        if (rec.due(t)) {
            if constexpr (std::is_same_v<Learner, CenteredDifferentialQLearning>) {
                const auto centered = learner.centered_q();
                rec.record(t, learner.q().flat(), centered.flat(), learner.reward_rate());
            } else {
                rec.record(t, learner.q().flat(), learner.q().flat(), learner.reward_rate());
            }
        }
    }
    return rec.finish(true);
}

template <typename Learner>
RunResult run_prediction(const ExperimentConfig& cfg, const Oracle& oracle, const Environment& env, Learner learner,
                         std::size_t run, Rng& rng) {
    const auto target = parse_policy(cfg.target_policy, env.mdp);
    const auto behavior = parse_policy(cfg.behavior(), env.mdp);
    Recorder rec(cfg, oracle, run);
    auto s = env.sample_initial_state(rng);
    for (std::size_t t = 1; t <= cfg.steps; ++t) {
        const auto tr = sample_step(env.mdp, behavior, s, rng);
        if constexpr (std::is_same_v<Learner, AverageCostTD>) {
            learner.step(tr);
        } else {
            learner.step(tr, importance_ratio(target, behavior, tr.state, tr.action));
        }
        rec.reward(tr.reward);
        s = tr.next_state;
        if (!learner.finite()) return rec.finish(false);
        if (rec.due(t)) {
            if constexpr (std::is_same_v<Learner, CenteredDifferentialTD>) {
                const auto centered = learner.centered_v();
                rec.record(t, learner.v(), centered, learner.reward_rate());
            } else {
                rec.record(t, learner.v(), learner.v(), learner.reward_rate());
            }
        }
    }
    return rec.finish(true);
}

inline RunResult run_diffq_planning(const ExperimentConfig& cfg, const Oracle& oracle, const Environment& env,
                                    DifferentialQLearning learner, std::size_t run, Rng& rng) {
    Recorder rec(cfg, oracle, run);
    PlanningSelector selector(cfg.planning_selector == "sweep" ? PlanningSelector::Kind::sweep
                                                               : PlanningSelector::Kind::uniform_random);
    for (std::size_t t = 1; t <= cfg.steps; ++t) {
        const auto tr = diffq_planning_step(learner, env.mdp, selector, rng);
        rec.reward(tr.reward);
        if (!learner.finite()) return rec.finish(false);
        if (rec.due(t)) rec.record(t, learner.q().flat(), learner.q().flat(), learner.reward_rate());
    }
    return rec.finish(true);
}

inline RunResult run_difftd_planning(const ExperimentConfig& cfg, const Oracle& oracle, const Environment& env,
                                     DifferentialTD learner, std::size_t run, Rng& rng) {
    const auto target = parse_policy(cfg.target_policy, env.mdp);
    const auto behavior = parse_policy(cfg.behavior(), env.mdp);
    Recorder rec(cfg, oracle, run);
    PlanningSelector selector(cfg.planning_selector == "sweep" ? PlanningSelector::Kind::sweep
                                                               : PlanningSelector::Kind::uniform_random);
    for (std::size_t t = 1; t <= cfg.steps; ++t) {
        const auto tr = difftd_planning_step(learner, env.mdp, behavior, target, selector, rng);
        rec.reward(tr.reward);
        if (!learner.finite()) return rec.finish(false);
        if (rec.due(t)) rec.record(t, learner.v(), learner.v(), learner.reward_rate());
    }
    return rec.finish(true);
}

/// Linear Differential Q-learning on Track1D with tile-coded position. The
/// configured alpha is divided by the number of tilings.
inline RunResult run_lfa(const ExperimentConfig& cfg, const Oracle& oracle, std::size_t run, Rng& rng) {
    TileCoder coder(cfg.tilings, {cfg.tiles}, {{0.0, 1.0}});
    LinearDifferentialQ learner(Track1D::num_actions(), coder.num_features(),
                                cfg.alpha / static_cast<double>(cfg.tilings), cfg.eta);
    Track1D env;
    Recorder rec(cfg, oracle, run);
    double pos = env.reset(rng);
    auto x = coder.encode(std::span<const double>(&pos, 1));
    for (std::size_t t = 1; t <= cfg.steps; ++t) {
        const auto a = learner.epsilon_greedy(x, cfg.epsilon, rng);
        const double reward = env.step(a);
        pos = env.position();
        auto x_next = coder.encode(std::span<const double>(&pos, 1));
        learner.step(x, a, reward, x_next);
        rec.reward(reward);
        x = std::move(x_next);
        if (!learner.finite()) return rec.finish(false);
        if (rec.due(t)) rec.record(t, {}, {}, learner.reward_rate());
    }
    return rec.finish(true);
}

}  // namespace detail

/// One independent run. Its RNG is seeded with derive_run_seed(cfg.seed, run),
/// so the result does not depend on which other runs exist.
inline RunResult run_single(const ExperimentConfig& cfg, const Oracle& oracle, std::size_t run) {
    Rng rng(derive_run_seed(cfg.seed, run));
    const auto& algo = cfg.algorithm;
    if (algo == "diff_q_lfa") return detail::run_lfa(cfg, oracle, run, rng);

    const auto env = make_environment(cfg.env, cfg.env_params);
    const auto& shape = env.mdp.shape();
    const auto n = env.mdp.num_states();
    auto alpha = cfg.alpha_schedule.make(cfg.alpha);
    if (algo == "diff_q") {
        return detail::run_control(cfg, oracle, env, DifferentialQLearning(shape, cfg.eta, alpha), run, rng);
    }
    if (algo == "rvi_q") {
        return detail::run_control(cfg, oracle, env, RviQLearning(shape, *cfg.reference, alpha), run, rng);
    }
    if (algo == "centered_diff_q") {
        CenteredDifferentialQLearning learner(DifferentialQLearning(shape, cfg.eta, alpha), cfg.kappa,
                                              cfg.beta_schedule.make(cfg.beta));
        return detail::run_control(cfg, oracle, env, std::move(learner), run, rng);
    }
    if (algo == "diff_q_plan") {
        return detail::run_diffq_planning(cfg, oracle, env, DifferentialQLearning(shape, cfg.eta, alpha), run, rng);
    }
    if (algo == "diff_td") {
        return detail::run_prediction(cfg, oracle, env, DifferentialTD(n, cfg.eta, alpha), run, rng);
    }
    if (algo == "avgcost_td") {
        return detail::run_prediction(cfg, oracle, env, AverageCostTD(n, cfg.eta, alpha), run, rng);
    }
    if (algo == "centered_diff_td") {
        CenteredDifferentialTD learner(DifferentialTD(n, cfg.eta, alpha), cfg.kappa, cfg.beta_schedule.make(cfg.beta));
        return detail::run_prediction(cfg, oracle, env, std::move(learner), run, rng);
    }
    if (algo == "diff_td_plan") {
        return detail::run_difftd_planning(cfg, oracle, env, DifferentialTD(n, cfg.eta, alpha), run, rng);
    }
    throw ConfigError("unknown algorithm '" + algo + "'");
}

/// Calls fn(i) for i in [0, n) on up to `jobs` threads. Each index is
/// processed exactly once; callers write results into per-index slots.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < n; i = next++) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
                next = n;
            }
        });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

inline std::size_t default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

inline RunLog merge_runs(std::vector<RunResult> results) {
    RunLog log;
    for (auto& r : results) {
        log.rows.insert(log.rows.end(), std::make_move_iterator(r.rows.begin()), std::make_move_iterator(r.rows.end()));
        log.status.push_back(r.status);
        log.summaries.push_back(std::move(r.summary));
    }
    return log;
}

/// Validates the config, solves the oracle once if any metric needs it,
/// then executes cfg.runs independent runs on `jobs` workers. The log is
/// identical for any number of workers.
inline RunLog run_experiment(const ExperimentConfig& cfg, std::size_t jobs = 1) {
    validate_config(cfg);
    Oracle oracle;
    if (detail::needs_oracle(cfg) || cfg.algorithm != "diff_q_lfa") {
        try {
            oracle = make_oracle(cfg);
        } catch (const SolverError&) {
            if (detail::needs_oracle(cfg)) throw;
        }
    }
    std::vector<RunResult> results(cfg.runs);
    parallel_for(cfg.runs, jobs, [&](std::size_t run) { results[run] = run_single(cfg, oracle, run); });
    return merge_runs(std::move(results));
}

/// printf("%.9g") formatting used by every CSV writer.
inline std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string to_csv(const RunLog& log) {
    std::string out = "run,step,metric,value\n";
    for (const auto& r : log.rows) {
        out += std::to_string(r.run) + "," + std::to_string(r.step) + "," + r.metric + "," + format_value(r.value) + "\n";
    }
    return out;
}

/// Mean and standard error over the runs of one metric at one step.
struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t count = 0;
};

inline MeanStderr mean_stderr(const std::vector<double>& xs) {
    MeanStderr m;
    m.count = xs.size();
    if (xs.empty()) return m;
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - m.mean) * (x - m.mean);
        m.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
    }
    return m;
}

/// Values of `metric` at `step`, one per run that reached it.
inline std::vector<double> metric_at(const RunLog& log, const std::string& metric, std::size_t step) {
    std::vector<double> out;
    for (const auto& r : log.rows) {
        if (r.step == step && r.metric == metric) out.push_back(r.value);
    }
    return out;
}

}  // namespace avgrew::harness
