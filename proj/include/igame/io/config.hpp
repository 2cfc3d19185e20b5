#pragma once

/**
 * @file config.hpp
 * @brief Run configuration: JSON schema with defaults and strict key checking.
 *
 * Schema (every key optional except that a problem must be named somewhere):
 *
 *   {
 *     "problem": "P1" | { inline problem, see problem_from_json },
 *     "grid": { "box": [[lo, hi], ...], "dx": 0.05, "steps": 0, "cfl_safety": 0.9 },
 *     "lattice": { "dx": 0, "steps": 0, "dpp_split": 0, "isaacs": false },
 *     "simulation": { "n_paths": 10000, "x0": [0], "t0": 0, "impulse_cap": 10000 },
 *     "tolerances": { "fixed_point": 1e-10, "failure": 1e-6, "max_iterations": 100,
 *                     "binding": 1e-8, "interior_fraction": 0.8 },
 *     "validation": { "budget": 2000 },
 *     "seed": 1,
 *     "probe": [t, x...],
 *     "threads": 1,
 *     "output": ""
 *   }
 *
 * Zero for grid.steps / lattice.steps means "derive from the stability limit";
 * zero for lattice.dx means "same as grid.dx"; zero for dpp_split means half
 * the lattice steps.
 */

#include <array>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "igame/errors.hpp"
#include "igame/problem_model.hpp"

namespace igame::io {

using json = nlohmann::ordered_json;

struct GridConfig {
    std::vector<std::array<double, 2>> box;  ///< empty: [-4 pi, 4 pi] per axis
    double dx = 0.05;
    std::size_t steps = 0;
    double cfl_safety = 0.9;
};

struct LatticeConfig {
    double dx = 0.0;
    std::size_t steps = 0;
    std::size_t dpp_split = 0;
    bool isaacs = false;
};

struct SimulationConfig {
    std::size_t n_paths = 10000;
    std::vector<double> x0;  ///< empty: origin
    double t0 = 0.0;
    std::size_t impulse_cap = 10000;
};

struct ToleranceConfig {
    double fixed_point = 1e-10;
    double failure = 1e-6;
    int max_iterations = 100;
    double binding = 1e-8;
    double interior_fraction = 0.8;
};

struct RunConfig {
    std::string problem_name;            ///< registry name, or the inline problem's name
    std::optional<json> inline_problem;  ///< set when the problem was given inline
    GridConfig grid;
    LatticeConfig lattice;
    SimulationConfig simulation;
    ToleranceConfig tolerances;
    int validation_budget = 2000;
    std::uint64_t seed = 1;
    std::vector<double> probe;  ///< empty: (t0, x0)
    int threads = 1;
    std::string output;

    ProblemSpec problem() const;
    /// Box with defaults applied for a problem of dimension n.
    std::vector<std::array<double, 2>> box(std::size_t n) const {
        if (!grid.box.empty()) return grid.box;
        return std::vector<std::array<double, 2>>(n, {-4.0 * std::numbers::pi, 4.0 * std::numbers::pi});
    }
    std::vector<double> x0(std::size_t n) const {
        return simulation.x0.empty() ? std::vector<double>(n, 0.0) : simulation.x0;
    }
    double lattice_dx() const { return lattice.dx > 0.0 ? lattice.dx : grid.dx; }
};

namespace detail {

inline void reject_unknown(const json& obj, std::initializer_list<const char*> keys, const std::string& where) {
    if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : obj.items()) {
        if (!allowed.count(k)) throw ConfigError("unknown key '" + (where.empty() ? k : where + "." + k) + "'");
    }
}

template <typename T>
T get_as(const json& obj, const char* key, const std::string& where, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad value for '" + (where.empty() ? std::string(key) : where + "." + key) + "': " + e.what());
    }
}

}  // namespace detail

inline json form_to_json(const CoefficientForm& f) {
    json j;
    j["kind"] = std::string(to_string(f.kind()));
    if (f.kind() == FormKind::tabulated) {
        j["knots"] = f.knots();
        j["values"] = f.table();
    } else {
        j["params"] = f.params();
    }
    return j;
}

/// A form is {"kind": ..., "params": [...]}, {"kind": "tabulated", "knots": [[...]], "values": [...]},
/// or a bare number (constant).
inline CoefficientForm form_from_json(const json& j, const std::string& where) {
    if (j.is_number()) return CoefficientForm::constant(j.get<double>());
    detail::reject_unknown(j, {"kind", "params", "knots", "values"}, where);
    if (!j.contains("kind")) throw ConfigError("'" + where + "' needs a 'kind'");
    FormKind kind;
    try {
        kind = form_kind_from_string(j.at("kind").get<std::string>());
    } catch (const Error& e) {
        throw ConfigError(where + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + ".kind: " + e.what());
    }
    try {
        if (kind == FormKind::tabulated)
            return CoefficientForm::tabulated(j.at("knots").get<std::vector<std::vector<double>>>(),
                                              j.at("values").get<std::vector<double>>());
        return CoefficientForm::make(kind, j.at("params").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

inline json actions_to_json(const DiscreteImpulseSet& s) { return s.actions; }

inline DiscreteImpulseSet actions_from_json(const json& j, Player p, const std::string& where) {
    if (!j.is_array()) throw ConfigError("'" + where + "' must be an array of actions");
    DiscreteImpulseSet s{{}, p};
    for (const auto& a : j) {
        if (a.is_number())
            s.actions.push_back({a.get<double>()});
        else if (a.is_array())
            s.actions.push_back(a.get<std::vector<double>>());
        else
            throw ConfigError("'" + where + "' entries must be numbers or arrays");
    }
    return s;
}

inline json problem_to_json(const ProblemSpec& p) {
    json j;
    j["name"] = p.name;
    j["dim"] = p.dim;
    j["noise_dim"] = p.noise_dim;
    j["horizon"] = p.horizon;
    j["drift"] = json::array();
    for (const auto& f : p.drift) j["drift"].push_back(form_to_json(f));
    j["vol"] = json::array();
    for (const auto& f : p.vol) j["vol"].push_back(form_to_json(f));
    j["driver"] = form_to_json(p.driver);
    j["terminal"] = form_to_json(p.terminal);
    j["cost"] = form_to_json(p.cost_c);
    j["gain"] = form_to_json(p.gain_chi);
    j["h"] = form_to_json(p.h_floor);
    j["U"] = actions_to_json(p.impulse_U);
    j["V"] = actions_to_json(p.impulse_V);
    return j;
}

/// Inline problem. Defaults: dim 1, noise_dim = dim, horizon 1, zero drift,
/// zero volatility, f = 0, h = 0; terminal, cost, gain, U and V are required.
inline ProblemSpec problem_from_json(const json& j) {
    detail::reject_unknown(j, {"name", "dim", "noise_dim", "horizon", "drift", "vol", "driver", "terminal", "cost",
                               "gain", "h", "U", "V"},
                           "problem");
    for (const char* k : {"terminal", "cost", "gain", "U", "V"})
        if (!j.contains(k)) throw ConfigError("inline problem needs '" + std::string(k) + "'");
    ProblemSpec p;
    p.name = detail::get_as<std::string>(j, "name", "problem", "inline");
    p.dim = detail::get_as<std::size_t>(j, "dim", "problem", 1);
    p.noise_dim = detail::get_as<std::size_t>(j, "noise_dim", "problem", p.dim);
    p.horizon = detail::get_as<double>(j, "horizon", "problem", 1.0);
    auto forms = [&](const char* key, std::size_t count) {
        std::vector<CoefficientForm> out;
        if (!j.contains(key)) return std::vector<CoefficientForm>(count, CoefficientForm::constant(0.0));
        const auto& a = j.at(key);
        if (!a.is_array()) throw ConfigError(std::string("problem.") + key + " must be an array");
        for (std::size_t i = 0; i < a.size(); ++i)
            out.push_back(form_from_json(a[i], std::string("problem.") + key + "[" + std::to_string(i) + "]"));
        return out;
    };
    p.drift = forms("drift", p.dim);
    p.vol = forms("vol", p.dim * p.noise_dim);
    p.driver = j.contains("driver") ? form_from_json(j.at("driver"), "problem.driver") : CoefficientForm::constant(0.0);
    p.terminal = form_from_json(j.at("terminal"), "problem.terminal");
    p.cost_c = form_from_json(j.at("cost"), "problem.cost");
    p.gain_chi = form_from_json(j.at("gain"), "problem.gain");
    if (j.contains("h")) p.h_floor = form_from_json(j.at("h"), "problem.h");
    p.impulse_U = actions_from_json(j.at("U"), Player::I, "problem.U");
    p.impulse_V = actions_from_json(j.at("V"), Player::II, "problem.V");
    p.check();
    return p;
}

inline ProblemSpec RunConfig::problem() const {
    if (inline_problem) return problem_from_json(*inline_problem);
    if (problem_name.empty()) throw ConfigError("no problem given");
    try {
        return canonical_problem(problem_name);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

/// Fully-resolved config as JSON (the audit echo embedded in reports).
inline json config_to_json(const RunConfig& c) {
    json j;
    if (c.inline_problem)
        j["problem"] = *c.inline_problem;
    else
        j["problem"] = c.problem_name;
    const std::size_t n = c.inline_problem || !c.problem_name.empty() ? c.problem().dim : 1;
    j["grid"] = {{"box", c.box(n)}, {"dx", c.grid.dx}, {"steps", c.grid.steps}, {"cfl_safety", c.grid.cfl_safety}};
    j["lattice"] = {{"dx", c.lattice.dx},
                    {"steps", c.lattice.steps},
                    {"dpp_split", c.lattice.dpp_split},
                    {"isaacs", c.lattice.isaacs}};
    j["simulation"] = {{"n_paths", c.simulation.n_paths},
                       {"x0", c.x0(n)},
                       {"t0", c.simulation.t0},
                       {"impulse_cap", c.simulation.impulse_cap}};
    j["tolerances"] = {{"fixed_point", c.tolerances.fixed_point},
                       {"failure", c.tolerances.failure},
                       {"max_iterations", c.tolerances.max_iterations},
                       {"binding", c.tolerances.binding},
                       {"interior_fraction", c.tolerances.interior_fraction}};
    j["validation"] = {{"budget", c.validation_budget}};
    j["seed"] = c.seed;
    j["probe"] = c.probe;
    j["threads"] = c.threads;
    j["output"] = c.output;
    return j;
}

/// Builds a config from parsed JSON; unknown keys at any level are errors.
inline RunConfig config_from_json(const json& j) {
    using detail::get_as;
    detail::reject_unknown(j, {"problem", "grid", "lattice", "simulation", "tolerances", "validation", "seed", "probe",
                               "threads", "output"},
                           "");
    RunConfig c;
    if (j.contains("problem")) {
        const auto& p = j.at("problem");
        if (p.is_string()) {
            c.problem_name = p.get<std::string>();
        } else if (p.is_object()) {
            c.inline_problem = p;
            c.problem_name = problem_from_json(p).name;
        } else {
            throw ConfigError("'problem' must be a name or an object");
        }
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        detail::reject_unknown(g, {"box", "dx", "steps", "cfl_safety"}, "grid");
        c.grid.box = get_as<std::vector<std::array<double, 2>>>(g, "box", "grid", {});
        c.grid.dx = get_as<double>(g, "dx", "grid", c.grid.dx);
        c.grid.steps = get_as<std::size_t>(g, "steps", "grid", 0);
        c.grid.cfl_safety = get_as<double>(g, "cfl_safety", "grid", c.grid.cfl_safety);
    }
    if (j.contains("lattice")) {
        const auto& l = j.at("lattice");
        detail::reject_unknown(l, {"dx", "steps", "dpp_split", "isaacs"}, "lattice");
        c.lattice.dx = get_as<double>(l, "dx", "lattice", 0.0);
        c.lattice.steps = get_as<std::size_t>(l, "steps", "lattice", 0);
        c.lattice.dpp_split = get_as<std::size_t>(l, "dpp_split", "lattice", 0);
        c.lattice.isaacs = get_as<bool>(l, "isaacs", "lattice", false);
    }
    if (j.contains("simulation")) {
        const auto& s = j.at("simulation");
        detail::reject_unknown(s, {"n_paths", "x0", "t0", "impulse_cap"}, "simulation");
        c.simulation.n_paths = get_as<std::size_t>(s, "n_paths", "simulation", c.simulation.n_paths);
        c.simulation.x0 = get_as<std::vector<double>>(s, "x0", "simulation", {});
        c.simulation.t0 = get_as<double>(s, "t0", "simulation", 0.0);
        c.simulation.impulse_cap = get_as<std::size_t>(s, "impulse_cap", "simulation", c.simulation.impulse_cap);
    }
    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        detail::reject_unknown(t, {"fixed_point", "failure", "max_iterations", "binding", "interior_fraction"},
                               "tolerances");
        c.tolerances.fixed_point = get_as<double>(t, "fixed_point", "tolerances", c.tolerances.fixed_point);
        c.tolerances.failure = get_as<double>(t, "failure", "tolerances", c.tolerances.failure);
        c.tolerances.max_iterations = get_as<int>(t, "max_iterations", "tolerances", c.tolerances.max_iterations);
        c.tolerances.binding = get_as<double>(t, "binding", "tolerances", c.tolerances.binding);
        c.tolerances.interior_fraction =
            get_as<double>(t, "interior_fraction", "tolerances", c.tolerances.interior_fraction);
    }
    if (j.contains("validation")) {
        const auto& v = j.at("validation");
        detail::reject_unknown(v, {"budget"}, "validation");
        c.validation_budget = get_as<int>(v, "budget", "validation", c.validation_budget);
    }
    c.seed = get_as<std::uint64_t>(j, "seed", "", 1);
    c.probe = get_as<std::vector<double>>(j, "probe", "", {});
    c.threads = get_as<int>(j, "threads", "", 1);
    c.output = get_as<std::string>(j, "output", "", "");

    if (!(c.grid.dx > 0.0)) throw ConfigError("grid.dx must be positive");
    if (!(c.grid.cfl_safety > 0.0 && c.grid.cfl_safety <= 1.0)) throw ConfigError("grid.cfl_safety must be in (0, 1]");
    if (c.lattice.dx < 0.0) throw ConfigError("lattice.dx must be nonnegative");
    if (c.simulation.n_paths < 1) throw ConfigError("simulation.n_paths must be at least 1");
    if (!(c.tolerances.interior_fraction > 0.0 && c.tolerances.interior_fraction <= 1.0))
        throw ConfigError("tolerances.interior_fraction must be in (0, 1]");
    if (c.tolerances.max_iterations < 1) throw ConfigError("tolerances.max_iterations must be at least 1");
    if (c.validation_budget < 1) throw ConfigError("validation.budget must be at least 1");
    return c;
}

/// Parses JSON text, reporting the line of a syntax error.
inline RunConfig parse_config(const std::string& text, const std::string& origin = "<config>") {
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i) line += text[i] == '\n';
        throw ConfigError(origin + ":" + std::to_string(line) + ": " + e.what());
    }
    return config_from_json(j);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

}  // namespace igame::io
