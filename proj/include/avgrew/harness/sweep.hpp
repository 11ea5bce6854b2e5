#pragma once

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "avgrew/harness/run.hpp"

namespace avgrew::harness {

/// One grid cell: the parameter assignment (sorted by key) and its config.
struct SweepCell {
    std::vector<std::pair<std::string, json>> params;
    ExperimentConfig config;

    /// "alpha=0.1_eta=0.5": sorted keys, used as the CSV file stem.
    std::string name() const {
        std::string out;
        for (const auto& [k, v] : params) {
            if (!out.empty()) out += "_";
            std::string value = v.is_string() ? v.get<std::string>() : v.dump();
            for (auto& c : value) {
                if (c == '/' || c == ':' || c == ' ' || c == '"') c = '-';
            }
            out += k + "=" + value;
        }
        return out.empty() ? "base" : out;
    }
};

/// Expands {"base": {...}, "grid": {key: [values]}} into cells. Keys are
/// taken in sorted order and the last key varies fastest. The reference
/// value "all_single_pairs" expands to one single_pair reference per
/// state-action pair of the base environment. An empty grid yields no cells.
inline std::vector<SweepCell> expand_grid(const json& spec, const ExperimentConfig& defaults = {}) {
    if (!spec.is_object()) throw ConfigError("sweep spec must be a JSON object");
    for (const auto& [key, _] : spec.items()) {
        if (key != "base" && key != "grid") throw ConfigError("unknown sweep key '" + key + "'");
    }
    const auto base_json = spec.value("base", json::object());
    const auto base = config_from_json(base_json, defaults);
    const auto grid = spec.value("grid", json::object());
    if (!grid.is_object()) throw ConfigError("sweep grid must be an object of arrays");

    std::map<std::string, std::vector<json>> axes;
    for (const auto& [key, values] : grid.items()) {
        if (!values.is_array()) throw ConfigError("grid entry '" + key + "' must be an array");
        std::vector<json> expanded;
        for (const auto& v : values) {
            if (key == "reference" && v == "all_single_pairs") {
                const auto env = make_environment(base.env, base.env_params);
                for (std::size_t s = 0; s < env.mdp.num_states(); ++s) {
                    for (std::size_t a = 0; a < env.mdp.num_actions(s); ++a) {
                        expanded.emplace_back("single_pair:" + std::to_string(s) + ":" + std::to_string(a));
                    }
                }
            } else {
                expanded.push_back(v);
            }
        }
        if (expanded.empty()) return {};
        axes.emplace(key, std::move(expanded));
    }
    if (axes.empty()) return {};

    std::vector<SweepCell> cells;
    std::vector<std::size_t> index(axes.size(), 0);
    while (true) {
        SweepCell cell;
        json overrides = base_json;
        std::size_t i = 0;
        for (const auto& [key, values] : axes) {
            overrides[key] = values[index[i++]];
            cell.params.emplace_back(key, overrides[key]);
        }
        cell.config = config_from_json(overrides, defaults);
        cells.push_back(std::move(cell));
        std::size_t pos = axes.size();
        while (pos > 0) {
            --pos;
            const auto& values = std::next(axes.begin(), static_cast<std::ptrdiff_t>(pos))->second;
            if (++index[pos] < values.size()) break;
            index[pos] = 0;
            if (pos == 0) return cells;
        }
    }
}

/// Summary statistic of a cell: mean reward over all steps for control,
/// average RMSVE(TVR) and RRE over evaluations for prediction.
inline std::vector<std::string> summary_keys(const ExperimentConfig& cfg) {
    if (is_prediction(cfg.algorithm)) return {"avg_rmsve_tvr", "avg_rre"};
    return {"avg_reward"};
}

struct CellSummary {
    std::string name;
    std::map<std::string, MeanStderr> stats;
    std::size_t diverged = 0;
};

struct SweepResult {
    std::vector<SweepCell> cells;
    std::vector<RunLog> logs;
    std::vector<CellSummary> table;
};

inline CellSummary summarize(const SweepCell& cell, const RunLog& log) {
    CellSummary out;
    out.name = cell.name();
    for (const auto& key : summary_keys(cell.config)) {
        std::vector<double> xs;
        for (const auto& s : log.summaries) {
            if (auto it = s.find(key); it != s.end()) xs.push_back(it->second);
        }
        out.stats[key] = mean_stderr(xs);
    }
    for (auto st : log.status) out.diverged += st == RunStatus::diverged;
    return out;
}

/// Runs every (cell, run) pair on a shared pool of `jobs` workers. Each
/// run's seed depends only on its cell config and run index, so results
/// match a cell executed alone.
inline SweepResult run_sweep(const json& spec, std::size_t jobs = 1, const ExperimentConfig& defaults = {}) {
    SweepResult out;
    out.cells = expand_grid(spec, defaults);
    std::vector<Oracle> oracles(out.cells.size());
    for (std::size_t c = 0; c < out.cells.size(); ++c) {
        const auto& cfg = out.cells[c].config;
        validate_config(cfg);
        if (cfg.algorithm != "diff_q_lfa") oracles[c] = make_oracle(cfg);
    }
    std::vector<std::pair<std::size_t, std::size_t>> tasks;
    std::vector<std::vector<RunResult>> results(out.cells.size());
    for (std::size_t c = 0; c < out.cells.size(); ++c) {
        results[c].resize(out.cells[c].config.runs);
        for (std::size_t r = 0; r < out.cells[c].config.runs; ++r) tasks.emplace_back(c, r);
    }
    parallel_for(tasks.size(), jobs, [&](std::size_t i) {
        const auto [c, r] = tasks[i];
        results[c][r] = run_single(out.cells[c].config, oracles[c], r);
    });
    for (std::size_t c = 0; c < out.cells.size(); ++c) {
        out.logs.push_back(merge_runs(std::move(results[c])));
        out.table.push_back(summarize(out.cells[c], out.logs.back()));
    }
    return out;
}

/// CSV table with one line per cell: cell,statistic,mean,stderr,runs,diverged.
inline std::string summary_csv(const SweepResult& result) {
    std::string out = "cell,statistic,mean,stderr,runs,diverged\n";
    for (const auto& row : result.table) {
        for (const auto& [key, st] : row.stats) {
            out += row.name + "," + key + "," + format_value(st.mean) + "," + format_value(st.stderr_) + "," +
                   std::to_string(st.count) + "," + std::to_string(row.diverged) + "\n";
        }
    }
    return out;
}

}  // namespace avgrew::harness
