#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "avgrew/control.hpp"
#include "avgrew/environments.hpp"
#include "avgrew/mdp.hpp"
#include "avgrew/step_size.hpp"

namespace avgrew::harness {

using nlohmann::json;

/// Invalid experiment configuration; reported before any run starts.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline const std::vector<std::string>& algorithm_names() {
    static const std::vector<std::string> names{"diff_q",  "rvi_q",      "centered_diff_q",  "diff_td",    "avgcost_td",
                                                "centered_diff_td", "diff_q_plan", "diff_td_plan", "diff_q_lfa"};
    return names;
}

inline bool is_control(const std::string& algo) {
    return algo == "diff_q" || algo == "rvi_q" || algo == "centered_diff_q" || algo == "diff_q_plan";
}
inline bool is_prediction(const std::string& algo) {
    return algo == "diff_td" || algo == "avgcost_td" || algo == "centered_diff_td" || algo == "diff_td_plan";
}
inline bool is_centered(const std::string& algo) { return algo == "centered_diff_q" || algo == "centered_diff_td"; }
inline bool is_planning(const std::string& algo) { return algo == "diff_q_plan" || algo == "diff_td_plan"; }

struct ScheduleSpec {
    std::string kind = "constant";   // constant | exp_decay | per_pair_count
    double factor = 1.0;             // exp_decay
    double exponent = 1.0;           // per_pair_count

    StepSizeSchedule make(double alpha0) const {
        if (kind == "constant") return StepSizeSchedule::constant(alpha0);
        if (kind == "exp_decay") return StepSizeSchedule::exp_decay(alpha0, factor);
        if (kind == "per_pair_count") return StepSizeSchedule::per_pair_count(alpha0, exponent);
        throw ConfigError("unknown step-size schedule '" + kind + "'");
    }
};

/// A metric name plus its window for window_rate.
struct MetricSpec {
    std::string name;
    std::size_t window = 0;

    std::string label() const { return window ? name + "_" + std::to_string(window) : name; }

    static MetricSpec parse(const std::string& text) {
        const auto colon = text.find(':');
        MetricSpec m{text.substr(0, colon), 0};
        if (m.name == "window_rate") {
            if (colon == std::string::npos) throw ConfigError("window_rate needs a window, e.g. window_rate:1500");
            try {
                m.window = std::stoul(text.substr(colon + 1));
            } catch (const std::exception&) {
                throw ConfigError("bad window in '" + text + "'");
            }
            if (m.window == 0) throw ConfigError("window must be at least 1");
        } else if (colon != std::string::npos) {
            throw ConfigError("metric '" + m.name + "' takes no argument");
        }
        static const std::vector<std::string> known{"rmsve_tvr", "rmsve_plain", "rre", "rbar", "window_rate"};
        if (std::find(known.begin(), known.end(), m.name) == known.end()) {
            throw ConfigError("unknown metric '" + m.name + "'");
        }
        return m;
    }

    std::string to_string() const { return window ? name + ":" + std::to_string(window) : name; }
};

/// "single_pair:S:A", "mean_all" or "max_all".
inline ReferenceFunction parse_reference(const std::string& text) {
    if (text == "mean_all") return ReferenceFunction::mean_all();
    if (text == "max_all") return ReferenceFunction::max_all();
    if (text.rfind("single_pair:", 0) == 0) {
        std::istringstream in(text.substr(12));
        std::size_t s = 0, a = 0;
        char sep = 0;
        if (in >> s >> sep >> a && sep == ':' && in.eof()) return ReferenceFunction::single_pair(s, a);
    }
    throw ConfigError("bad reference function '" + text + "' (single_pair:S:A | mean_all | max_all)");
}

inline std::string reference_to_string(const ReferenceFunction& f) {
    switch (f.kind) {
        case ReferenceFunction::Kind::mean_all: return "mean_all";
        case ReferenceFunction::Kind::max_all: return "max_all";
        case ReferenceFunction::Kind::single_pair:
            return "single_pair:" + std::to_string(f.state) + ":" + std::to_string(f.action);
    }
    return "";
}

/// Named policy over `mdp`:
///   uniform            uniform over each state's actions
///   first | last       always the first / last action of each state
///   p0/p1/...          these weights (normalized) in every state with that
///                      many actions, uniform elsewhere; e.g. 0.9/0.1, 50/50
inline Policy parse_policy(const std::string& text, const TabularMdp& mdp) {
    if (text == "uniform") return Policy::uniform(mdp);
    if (text == "first" || text == "last") {
        std::vector<std::size_t> actions(mdp.num_states(), 0);
        if (text == "last") {
            for (std::size_t s = 0; s < mdp.num_states(); ++s) actions[s] = mdp.num_actions(s) - 1;
        }
        return Policy::deterministic(mdp, actions);
    }
    std::vector<double> weights;
    std::istringstream in(text);
    std::string part;
    while (std::getline(in, part, '/')) {
        try {
            std::size_t used = 0;
            weights.push_back(std::stod(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw ConfigError("bad policy spec '" + text + "'");
        }
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw ConfigError("negative weight in policy spec '" + text + "'");
        total += w;
    }
    if (weights.size() < 2 || !(total > 0.0)) throw ConfigError("bad policy spec '" + text + "'");
    bool used = false;
    RaggedTable<double> probs(mdp.shape());
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        auto row = probs.row(s);
        if (row.size() == weights.size()) {
            used = true;
            for (std::size_t a = 0; a < row.size(); ++a) row[a] = weights[a] / total;
        } else {
            for (auto& p : row) p = 1.0 / static_cast<double>(row.size());
        }
    }
    if (!used) throw ConfigError("policy spec '" + text + "' matches no state's action count");
    return Policy(std::move(probs));
}

struct ExperimentConfig {
    std::string env = "two_loop";
    AccessControlParams env_params{};
    std::string algorithm = "diff_q";
    double alpha = 0.1;
    double eta = 1.0;
    double beta = 0.1;
    double kappa = 1.0;
    ScheduleSpec alpha_schedule{};
    ScheduleSpec beta_schedule{};
    double epsilon = 0.1;
    std::optional<ReferenceFunction> reference;
    std::string target_policy = "uniform";
    std::string behavior_policy;   // empty = on-policy
    std::string planning_selector = "uniform_random";
    std::size_t steps = 10'000;
    std::size_t runs = 1;
    std::uint64_t seed = 0;
    std::size_t eval_every = 100;
    std::vector<MetricSpec> metrics{{"rbar", 0}};
    // diff_q_lfa only
    std::size_t tilings = 8;
    std::size_t tiles = 8;

    const std::string& behavior() const { return behavior_policy.empty() ? target_policy : behavior_policy; }
};

/// Default seed: AVGREW_SEED if set, else 0.
inline std::uint64_t default_seed() {
    if (const char* s = std::getenv("AVGREW_SEED")) {
        try {
            return std::stoull(s);
        } catch (const std::exception&) {
            throw ConfigError(std::string("AVGREW_SEED is not an unsigned integer: ") + s);
        }
    }
    return 0;
}

inline ScheduleSpec schedule_from_json(const json& j) {
    ScheduleSpec s;
    if (j.is_string()) {
        s.kind = j.get<std::string>();
        return s;
    }
    s.kind = j.value("kind", s.kind);
    s.factor = j.value("factor", s.factor);
    s.exponent = j.value("exponent", s.exponent);
    return s;
}

inline json schedule_to_json(const ScheduleSpec& s) {
    return json{{"kind", s.kind}, {"factor", s.factor}, {"exponent", s.exponent}};
}

/// Reads an ExperimentConfig from a JSON object whose keys are the field
/// names. Unknown keys are rejected.
inline ExperimentConfig config_from_json(const json& j, ExperimentConfig cfg = {}) {
    if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
    static const std::vector<std::string> keys{
        "env",   "env_params", "algorithm",       "alpha",           "eta",       "beta",
        "kappa", "alpha_schedule", "beta_schedule", "epsilon",       "reference", "target_policy",
        "behavior_policy", "planning_selector", "steps", "runs", "seed", "eval_every", "metrics", "tilings", "tiles"};
    for (const auto& [key, _] : j.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError("unknown config key '" + key + "'");
    }
    try {
        cfg.env = j.value("env", cfg.env);
        if (j.contains("env_params")) {
            const auto& p = j.at("env_params");
            cfg.env_params.n_servers = p.value("n_servers", cfg.env_params.n_servers);
            cfg.env_params.priorities = p.value("priorities", cfg.env_params.priorities);
            cfg.env_params.free_prob = p.value("free_prob", cfg.env_params.free_prob);
        }
        cfg.algorithm = j.value("algorithm", cfg.algorithm);
        cfg.alpha = j.value("alpha", cfg.alpha);
        cfg.eta = j.value("eta", cfg.eta);
        cfg.beta = j.value("beta", cfg.beta);
        cfg.kappa = j.value("kappa", cfg.kappa);
        if (j.contains("alpha_schedule")) cfg.alpha_schedule = schedule_from_json(j.at("alpha_schedule"));
        if (j.contains("beta_schedule")) cfg.beta_schedule = schedule_from_json(j.at("beta_schedule"));
        cfg.epsilon = j.value("epsilon", cfg.epsilon);
        if (j.contains("reference")) {
            const auto& r = j.at("reference");
            if (r.is_null()) cfg.reference.reset();
            else cfg.reference = parse_reference(r.get<std::string>());
        }
        cfg.target_policy = j.value("target_policy", cfg.target_policy);
        cfg.behavior_policy = j.value("behavior_policy", cfg.behavior_policy);
        cfg.planning_selector = j.value("planning_selector", cfg.planning_selector);
        cfg.steps = j.value("steps", cfg.steps);
        cfg.runs = j.value("runs", cfg.runs);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.eval_every = j.value("eval_every", cfg.eval_every);
        if (j.contains("metrics")) {
            cfg.metrics.clear();
            for (const auto& m : j.at("metrics")) cfg.metrics.push_back(MetricSpec::parse(m.get<std::string>()));
        }
        cfg.tilings = j.value("tilings", cfg.tilings);
        cfg.tiles = j.value("tiles", cfg.tiles);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config type error: ") + e.what());
    }
    return cfg;
}

inline json config_to_json(const ExperimentConfig& cfg) {
    json metrics = json::array();
    for (const auto& m : cfg.metrics) metrics.push_back(m.to_string());
    json j{{"env", cfg.env},
           {"env_params",
            {{"n_servers", cfg.env_params.n_servers},
             {"priorities", cfg.env_params.priorities},
             {"free_prob", cfg.env_params.free_prob}}},
           {"algorithm", cfg.algorithm},
           {"alpha", cfg.alpha},
           {"eta", cfg.eta},
           {"beta", cfg.beta},
           {"kappa", cfg.kappa},
           {"alpha_schedule", schedule_to_json(cfg.alpha_schedule)},
           {"beta_schedule", schedule_to_json(cfg.beta_schedule)},
           {"epsilon", cfg.epsilon},
           {"reference", cfg.reference ? json(reference_to_string(*cfg.reference)) : json(nullptr)},
           {"target_policy", cfg.target_policy},
           {"behavior_policy", cfg.behavior_policy},
           {"planning_selector", cfg.planning_selector},
           {"steps", cfg.steps},
           {"runs", cfg.runs},
           {"seed", cfg.seed},
           {"eval_every", cfg.eval_every},
           {"metrics", metrics},
           {"tilings", cfg.tilings},
           {"tiles", cfg.tiles}};
    return j;
}

inline bool has_metric(const ExperimentConfig& cfg, const std::string& name) {
    return std::any_of(cfg.metrics.begin(), cfg.metrics.end(), [&](const MetricSpec& m) { return m.name == name; });
}

/// Checks algorithm/parameter compatibility. Throws ConfigError.
inline void validate_config(const ExperimentConfig& cfg) {
    const auto& algos = algorithm_names();
    if (std::find(algos.begin(), algos.end(), cfg.algorithm) == algos.end()) {
        throw ConfigError("unknown algorithm '" + cfg.algorithm + "'");
    }
    const bool lfa = cfg.algorithm == "diff_q_lfa";
    if (lfa != (cfg.env == "track1d")) {
        throw ConfigError("diff_q_lfa runs on env track1d, and track1d only supports diff_q_lfa");
    }
    if (!lfa) {
        const auto& envs = tabular_environment_names();
        if (std::find(envs.begin(), envs.end(), cfg.env) == envs.end()) throw ConfigError("unknown env '" + cfg.env + "'");
    }
    if (cfg.runs == 0) throw ConfigError("runs must be at least 1");
    if (cfg.eval_every == 0) throw ConfigError("eval_every must be at least 1");
    if (!(cfg.alpha > 0.0)) throw ConfigError("alpha must be positive");
    if (cfg.algorithm != "rvi_q" && !(cfg.eta > 0.0)) throw ConfigError("eta must be positive");
    if (is_centered(cfg.algorithm) && !(cfg.beta > 0.0 && cfg.kappa > 0.0)) {
        throw ConfigError("centered algorithms need positive beta and kappa");
    }
    if ((cfg.algorithm == "rvi_q") != cfg.reference.has_value()) {
        throw ConfigError("a reference function is required for rvi_q and only for rvi_q");
    }
    if (!(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0)) throw ConfigError("epsilon must be in [0, 1]");
    if (cfg.planning_selector != "uniform_random" && cfg.planning_selector != "sweep") {
        throw ConfigError("planning_selector must be uniform_random or sweep");
    }
    if (cfg.algorithm == "avgcost_td" && cfg.behavior() != cfg.target_policy) {
        throw ConfigError("avgcost_td is on-policy only; behavior_policy must equal target_policy");
    }
    if (!is_prediction(cfg.algorithm) && !cfg.behavior_policy.empty()) {
        throw ConfigError("behavior_policy applies to prediction algorithms only");
    }
    if (lfa) {
        if (cfg.tilings == 0 || cfg.tiles == 0) throw ConfigError("tilings and tiles must be positive");
        for (const auto& m : cfg.metrics) {
            if (m.name != "rbar" && m.name != "window_rate") {
                throw ConfigError("diff_q_lfa supports only rbar and window_rate metrics");
            }
        }
    }
    // Catch bad schedules and policies before any run starts.
    try {
        (void)cfg.alpha_schedule.make(cfg.alpha);
        if (is_centered(cfg.algorithm)) (void)cfg.beta_schedule.make(cfg.beta);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (!lfa) {
        Environment env;
        try {
            env = make_environment(cfg.env, cfg.env_params);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
        if (cfg.reference && cfg.reference->kind == ReferenceFunction::Kind::single_pair &&
            !env.mdp.is_valid_pair(cfg.reference->state, cfg.reference->action)) {
            throw ConfigError("reference pair out of range for env '" + cfg.env + "'");
        }
        if (is_prediction(cfg.algorithm)) {
            const auto target = parse_policy(cfg.target_policy, env.mdp);
            const auto behavior = parse_policy(cfg.behavior(), env.mdp);
            for (std::size_t s = 0; s < env.mdp.num_states(); ++s) {
                for (std::size_t a = 0; a < env.mdp.num_actions(s); ++a) {
                    if (target.prob(s, a) > 0.0 && !(behavior.prob(s, a) > 0.0)) {
                        throw ConfigError("behavior policy does not cover the target policy");
                    }
                }
            }
        }
    }
}

}  // namespace avgrew::harness
