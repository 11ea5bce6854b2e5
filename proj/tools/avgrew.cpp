// avgrew: exact solves, single experiments and parameter sweeps.
//
//   avgrew solve --env two_loop --policy 0.5/0.5 [--json]
//   avgrew solve --env two_loop_rare --optimal
//   avgrew run --config cfg.json --runs 30 --jobs 8 --out log.csv
//   avgrew sweep --grid grid.json --out-dir results/

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "avgrew/harness/report.hpp"
#include "avgrew/harness/run.hpp"
#include "avgrew/harness/sweep.hpp"

namespace fs = std::filesystem;
using namespace avgrew;
using namespace avgrew::harness;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("invalid JSON in '" + path + "': " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << text;
}

/// Flag values that override the config file. Each is applied only if the
/// flag was given.
struct Overrides {
    std::string env, algorithm, alpha_schedule, beta_schedule, reference, target_policy, behavior_policy,
        planning_selector;
    double alpha = 0, eta = 0, beta = 0, kappa = 0, epsilon = 0;
    std::size_t steps = 0, runs = 0, eval_every = 0, tilings = 0, tiles = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> metrics;
};

void add_config_flags(CLI::App& cmd, Overrides& o) {
    cmd.add_option("--env", o.env, "environment name");
    cmd.add_option("--algorithm", o.algorithm, "algorithm name");
    cmd.add_option("--alpha", o.alpha, "step size");
    cmd.add_option("--eta", o.eta, "reward-rate step-size ratio");
    cmd.add_option("--beta", o.beta, "offset estimator step size");
    cmd.add_option("--kappa", o.kappa, "offset estimator ratio");
    cmd.add_option("--alpha-schedule", o.alpha_schedule, "constant | exp_decay:F | per_pair_count:E");
    cmd.add_option("--beta-schedule", o.beta_schedule, "schedule for beta");
    cmd.add_option("--epsilon", o.epsilon, "exploration rate");
    cmd.add_option("--reference", o.reference, "single_pair:S:A | mean_all | max_all");
    cmd.add_option("--target-policy", o.target_policy, "uniform | first | last | p0/p1/...");
    cmd.add_option("--behavior-policy", o.behavior_policy, "behavior policy (prediction)");
    cmd.add_option("--planning-selector", o.planning_selector, "uniform_random | sweep");
    cmd.add_option("--steps", o.steps, "steps per run");
    cmd.add_option("--runs", o.runs, "independent runs");
    cmd.add_option("--seed", o.seed, "base seed (default AVGREW_SEED or 0)");
    cmd.add_option("--eval-every", o.eval_every, "metric interval");
    cmd.add_option("--metrics", o.metrics, "rmsve_tvr rmsve_plain rre rbar window_rate:W");
    cmd.add_option("--tilings", o.tilings, "tilings (diff_q_lfa)");
    cmd.add_option("--tiles", o.tiles, "tiles per dimension (diff_q_lfa)");
}

ScheduleSpec parse_schedule_flag(const std::string& text) {
    ScheduleSpec s;
    const auto colon = text.find(':');
    s.kind = text.substr(0, colon);
    if (colon != std::string::npos) {
        const double x = std::stod(text.substr(colon + 1));
        if (s.kind == "exp_decay") s.factor = x;
        else s.exponent = x;
    }
    return s;
}

void apply_overrides(const CLI::App& cmd, const Overrides& o, ExperimentConfig& cfg) {
    auto given = [&](const char* flag) { return cmd.count(flag) > 0; };
    if (given("--env")) cfg.env = o.env;
    if (given("--algorithm")) cfg.algorithm = o.algorithm;
    if (given("--alpha")) cfg.alpha = o.alpha;
    if (given("--eta")) cfg.eta = o.eta;
    if (given("--beta")) cfg.beta = o.beta;
    if (given("--kappa")) cfg.kappa = o.kappa;
    if (given("--alpha-schedule")) cfg.alpha_schedule = parse_schedule_flag(o.alpha_schedule);
    if (given("--beta-schedule")) cfg.beta_schedule = parse_schedule_flag(o.beta_schedule);
    if (given("--epsilon")) cfg.epsilon = o.epsilon;
    if (given("--reference")) cfg.reference = parse_reference(o.reference);
    if (given("--target-policy")) cfg.target_policy = o.target_policy;
    if (given("--behavior-policy")) cfg.behavior_policy = o.behavior_policy;
    if (given("--planning-selector")) cfg.planning_selector = o.planning_selector;
    if (given("--steps")) cfg.steps = o.steps;
    if (given("--runs")) cfg.runs = o.runs;
    if (given("--seed")) cfg.seed = o.seed;
    if (given("--eval-every")) cfg.eval_every = o.eval_every;
    if (given("--metrics")) {
        cfg.metrics.clear();
        for (const auto& m : o.metrics) cfg.metrics.push_back(MetricSpec::parse(m));
    }
    if (given("--tilings")) cfg.tilings = o.tilings;
    if (given("--tiles")) cfg.tiles = o.tiles;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Average-reward tabular learning: exact solves, runs and sweeps"};
    app.require_subcommand(1);

    auto* solve = app.add_subcommand("solve", "exact reward rate and differential values");
    std::string solve_env = "two_loop", solve_policy;
    bool solve_optimal_flag = false, solve_json = false;
    solve->add_option("--env", solve_env, "environment name");
    auto* policy_opt = solve->add_option("--policy", solve_policy, "uniform | first | last | p0/p1/...");
    solve->add_flag("--optimal", solve_optimal_flag, "solve for the optimal policy")->excludes(policy_opt);
    solve->add_flag("--json", solve_json, "print the JSON report instead of the table");

    std::size_t jobs = default_jobs();
    std::string config_path, out_path;
    Overrides run_overrides;
    auto* run = app.add_subcommand("run", "run one experiment and write its metric log as CSV");
    run->add_option("--config", config_path, "JSON experiment config");
    run->add_option("--jobs", jobs, "parallel workers");
    run->add_option("--out", out_path, "CSV path (default stdout)");
    add_config_flags(*run, run_overrides);

    std::string grid_path, out_dir = ".";
    Overrides sweep_overrides;
    auto* sweep = app.add_subcommand("sweep", "run a parameter grid");
    sweep->add_option("--grid", grid_path, "JSON {base, grid}")->required();
    sweep->add_option("--jobs", jobs, "parallel workers");
    sweep->add_option("--out-dir", out_dir, "directory for per-cell CSVs and summary.csv");
    add_config_flags(*sweep, sweep_overrides);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*solve) {
            if (!solve_optimal_flag && solve_policy.empty()) solve_policy = "uniform";
            const auto report = solve_report(solve_env, solve_optimal_flag ? "" : solve_policy);
            for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
            if (solve_json) std::cout << to_json(report).dump(2) << "\n";
            else std::cout << to_table(report);
        } else if (*run) {
            ExperimentConfig cfg;
            cfg.seed = default_seed();
            if (!config_path.empty()) cfg = config_from_json(read_json(config_path), cfg);
            apply_overrides(*run, run_overrides, cfg);
            const auto log = run_experiment(cfg, jobs);
            write_text(out_path, to_csv(log));
            for (std::size_t r = 0; r < log.status.size(); ++r) {
                std::cerr << "run " << r << ": " << to_string(log.status[r]) << "\n";
            }
        } else if (*sweep) {
            ExperimentConfig defaults;
            defaults.seed = default_seed();
            apply_overrides(*sweep, sweep_overrides, defaults);
            const auto result = run_sweep(read_json(grid_path), jobs, defaults);
            fs::create_directories(out_dir);
            for (std::size_t c = 0; c < result.cells.size(); ++c) {
                write_text((fs::path(out_dir) / (result.cells[c].name() + ".csv")).string(), to_csv(result.logs[c]));
            }
            const auto table = summary_csv(result);
            write_text((fs::path(out_dir) / "summary.csv").string(), table);
            std::cout << table;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::out_of_range& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    return 0;
}
