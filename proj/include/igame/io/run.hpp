#pragma once

/**
 * @file run.hpp
 * @brief Orchestration of the five commands: solve, oracle, simulate, check,
 *        compare.
 */

#include <chrono>
#include <cmath>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "igame/field_metrics.hpp"
#include "igame/game_tree.hpp"
#include "igame/hjbi_fd.hpp"
#include "igame/io/config.hpp"
#include "igame/io/field_io.hpp"
#include "igame/io/report.hpp"
#include "igame/problem_model.hpp"
#include "igame/simulate.hpp"

namespace igame::io {

enum class Command { solve, oracle, simulate, check, compare };

inline std::string_view to_string(Command c) {
    switch (c) {
        case Command::solve: return "solve";
        case Command::oracle: return "oracle";
        case Command::simulate: return "simulate";
        case Command::check: return "check";
        case Command::compare: return "compare";
    }
    return "?";
}

inline Command command_from_string(std::string_view s) {
    for (auto c : {Command::solve, Command::oracle, Command::simulate, Command::check, Command::compare})
        if (to_string(c) == s) return c;
    throw ConfigError("unknown command '" + std::string(s) + "'");
}

inline SolverOptions solver_options(const RunConfig& c, bool record = false) {
    SolverOptions o;
    o.fixed_point_tol = c.tolerances.fixed_point;
    o.failure_tol = c.tolerances.failure;
    o.max_iterations = c.tolerances.max_iterations;
    o.binding_tol = c.tolerances.binding;
    o.record_projection = record;
    o.threads = c.threads;
    return o;
}

inline SpaceTimeGrid pde_grid(const RunConfig& c, const ProblemSpec& spec, double dx) {
    return make_space_time_grid(spec, grid_from_box(c.box(spec.dim), dx), c.grid.cfl_safety, c.grid.steps);
}

/// Lattice on the config's lattice step; the time step follows the same
/// stability limit as the PDE grid unless given.
inline LatticeModel make_lattice(const RunConfig& c, const ProblemSpec& spec, std::size_t steps = 0) {
    const double dx = c.lattice_dx();
    if (steps == 0) steps = c.lattice.steps;
    if (steps == 0)
        steps = make_space_time_grid(spec, grid_from_box(c.box(spec.dim), dx), c.grid.cfl_safety).steps;
    return build_lattice(spec, steps, c.box(spec.dim), dx);
}

/// Probe point (t, x...) with defaults (t0, x0).
inline std::vector<double> probe_point(const RunConfig& c, std::size_t n) {
    if (!c.probe.empty()) {
        if (c.probe.size() != n + 1) throw ConfigError("probe needs t and one coordinate per state axis");
        return c.probe;
    }
    std::vector<double> p{c.simulation.t0};
    const auto x0 = c.x0(n);
    p.insert(p.end(), x0.begin(), x0.end());
    return p;
}

/// Value at (t, x): multilinear in x, linear between the two bracketing levels.
inline double probe_value(const ValueField& f, std::span<const double> probe) {
    const double t = probe[0];
    const auto x = probe.subspan(1);
    if (t < -1e-12 || t > f.grid.horizon * (1.0 + 1e-12)) throw DomainError("probe time outside [0, T]");
    const double pos = std::clamp(t / f.grid.dt(), 0.0, static_cast<double>(f.grid.steps));
    const auto k = static_cast<std::size_t>(std::floor(pos));
    const double w = pos - static_cast<double>(k);
    const double v0 = interpolate(f.grid.space, f.level(k), x);
    if (k == f.grid.steps || w < 1e-9) return v0;
    if (w > 1.0 - 1e-9) return interpolate(f.grid.space, f.level(k + 1), x);
    return (1.0 - w) * v0 + w * interpolate(f.grid.space, f.level(k + 1), x);
}

/// Sup of |a - b| over interior nodes of all levels; the fields share a grid.
inline double interior_gap(const ValueField& a, const ValueField& b, double fraction) {
    double gap = 0.0;
    const Grid& g = a.grid.space;
    for (std::size_t k = 0; k < a.levels(); ++k)
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g.in_interior(i, fraction)) gap = std::max(gap, std::abs(a.at(k, i) - b.at(k, i)));
    return gap;
}

namespace detail {

inline std::string artifact(const RunConfig& c, RunReport& r, const std::string& name) {
    const auto p = (std::filesystem::path(c.output) / name).string();
    r.artifacts.push_back(p);
    return p;
}

inline void run_solve(const RunConfig& c, const ProblemSpec& spec, RunReport& r) {
    const auto st = pde_grid(c, spec, c.grid.dx);
    const auto field = solve_pde(spec, st, solver_options(c));
    const auto res = qvi_residual(spec, field, {c.tolerances.interior_fraction, c.threads});
    const auto probe = probe_point(c, spec.dim);
    r.metrics["value_at_probe"] = probe_value(field, probe);
    r.metrics["sup_residual"] = res.sup_norm;
    r.metrics["sup_residual_interior"] = res.sup_interior;
    r.metrics["steps"] = static_cast<double>(st.steps);
    r.metrics["nodes"] = static_cast<double>(st.space.size());
    if (!c.output.empty()) {
        write_field(field, spec, artifact(c, r, "field.csv"));
        write_residual(field, res, artifact(c, r, "residual.csv"));
    }
}

inline void run_oracle(const RunConfig& c, const ProblemSpec& spec, RunReport& r) {
    const auto model = make_lattice(c, spec);
    GameOptions go;
    go.solver = solver_options(c);
    const auto nv = solve_game(model, spec, go);
    r.metrics["oracle_value_at_probe"] = probe_value(nv, probe_point(c, spec.dim));
    r.metrics["lattice_steps"] = static_cast<double>(model.steps);
    if (model.steps >= 2) {
        const std::size_t split = c.lattice.dpp_split ? c.lattice.dpp_split : model.steps / 2;
        r.metrics["dpp_residual"] = dpp_residual(model, spec, nv, split, go);
        r.metrics["dpp_split"] = static_cast<double>(split);
    }
    if (c.lattice.isaacs) r.metrics["isaacs_gap"] = isaacs_gap(model, spec, go, c.tolerances.interior_fraction);
    if (!c.output.empty()) write_field(nv, spec, artifact(c, r, "lattice.csv"));
}

inline void run_simulate(const RunConfig& c, const ProblemSpec& spec, RunReport& r) {
    const auto st = pde_grid(c, spec, c.grid.dx);
    const auto field = solve_pde(spec, st, solver_options(c));
    const auto policy = extract_policy(field, spec);
    const auto x0 = c.x0(spec.dim);
    SimulationOptions so;
    so.impulse_cap = c.simulation.impulse_cap;
    so.threads = c.threads;
    so.record_states = !c.output.empty() && c.simulation.n_paths <= 1000;
    const auto ens = simulate_paths(spec, policy, x0, c.simulation.t0, c.simulation.n_paths, c.seed, so);
    const auto mc = evaluate_cost_mc(ens, spec);
    std::vector<double> p{c.simulation.t0};
    p.insert(p.end(), x0.begin(), x0.end());
    const double pde = probe_value(field, p);
    r.metrics["value_at_probe"] = pde;
    r.metrics["mc_estimate"] = mc.estimate;
    r.metrics["mc_stderr"] = mc.stderr_;
    r.metrics["mc_capped_paths"] = static_cast<double>(mc.capped);
    r.metrics["mc_n_paths"] = static_cast<double>(mc.n_paths);
    r.checks["mc_within_3_stderr"] = std::abs(mc.estimate - pde) <= 3.0 * mc.stderr_ + 1e-12;
    if (so.record_states) write_paths(ens, artifact(c, r, "paths.csv"));
}

inline void run_check(const RunConfig& c, const ProblemSpec& spec, RunReport& r) {
    ValidationOptions vo;
    vo.box = c.box(spec.dim);
    const auto ar = validate_assumptions(spec, c.validation_budget, c.seed, vo);
    r.assumptions = assumptions_to_json(ar);
    r.checks["assumptions"] = ar.passed();

    const auto coarse_st = pde_grid(c, spec, c.grid.dx);
    RunConfig fine_cfg = c;
    if (fine_cfg.grid.steps) fine_cfg.grid.steps *= 4;
    const auto fine_st = pde_grid(fine_cfg, spec, c.grid.dx / 2.0);
    const auto coarse = solve_pde(spec, coarse_st, solver_options(c, true));
    const auto fine = solve_pde(spec, fine_st, solver_options(c, false));
    const double frac = c.tolerances.interior_fraction;

    r.metrics["projection_identity_violations"] = static_cast<double>(projection_identity_violations(coarse));
    r.checks["projection_identity"] = projection_identity_violations(coarse) == 0;
    const double sandwich = obstacle_sandwich_gap(coarse);
    r.metrics["obstacle_sandwich_gap"] = sandwich;
    r.checks["obstacle_sandwich"] = sandwich <= 10.0 * c.tolerances.fixed_point;

    const double bound = boundedness_bound(spec);
    r.metrics["sup_abs_value"] = sup_abs_value(coarse);
    r.metrics["boundedness_bound"] = bound;
    r.checks["boundedness"] = sup_abs_value(coarse) <= bound + 1e-9;

    const double lc = lipschitz_x_constant(coarse, frac), lf = lipschitz_x_constant(fine, frac);
    const double hc = holder_t_constant(coarse, frac), hf = holder_t_constant(fine, frac);
    r.metrics["lipschitz_x_coarse"] = lc;
    r.metrics["lipschitz_x_fine"] = lf;
    r.metrics["holder_t_coarse"] = hc;
    r.metrics["holder_t_fine"] = hf;
    r.checks["regularity"] = lf <= 1.05 * lc + 1e-12 && hf <= 1.05 * hc + 1e-12;

    const double tc = terminal_bound_constant(coarse, 0.1, frac), tf = terminal_bound_constant(fine, 0.1, frac);
    r.metrics["terminal_bound_coarse"] = tc;
    r.metrics["terminal_bound_fine"] = tf;
    r.checks["terminal_bound"] = tf <= 1.1 * tc + 1e-12;

    const auto res = qvi_residual(spec, coarse, {frac, c.threads});
    r.metrics["sup_residual"] = res.sup_norm;
    r.metrics["sup_residual_interior"] = res.sup_interior;
}

inline void run_compare(const RunConfig& c, const ProblemSpec& spec, RunReport& r) {
    const auto st = pde_grid(c, spec, c.grid.dx);
    const auto field = solve_pde(spec, st, solver_options(c));
    RunConfig lc = c;
    lc.lattice.dx = c.grid.dx;
    const auto model = make_lattice(lc, spec, st.steps);
    GameOptions go;
    go.solver = solver_options(c);
    const auto nv = solve_game(model, spec, go);
    const auto probe = probe_point(c, spec.dim);
    r.metrics["value_at_probe"] = probe_value(field, probe);
    r.metrics["oracle_value_at_probe"] = probe_value(nv, probe);
    r.metrics["oracle_gap"] = interior_gap(field, nv, c.tolerances.interior_fraction);
    r.metrics["oracle_gap_mean"] = compare_fields(field, nv, c.tolerances.interior_fraction).mean;
    if (!c.output.empty()) {
        write_field(field, spec, artifact(c, r, "field.csv"));
        write_field(nv, spec, artifact(c, r, "lattice.csv"));
    }
}

}  // namespace detail

/// Runs one command. Module errors are rethrown with the command name
/// prefixed, keeping their category (convergence vs validation).
inline RunReport run(Command cmd, const RunConfig& c) {
    const auto start = std::chrono::steady_clock::now();
    RunReport r;
    r.command = std::string(to_string(cmd));
    const std::string ctx = r.command + ": ";
    try {
        const ProblemSpec spec = c.problem();
        r.config = config_to_json(c);
        if (!c.output.empty()) std::filesystem::create_directories(c.output);
        switch (cmd) {
            case Command::solve: detail::run_solve(c, spec, r); break;
            case Command::oracle: detail::run_oracle(c, spec, r); break;
            case Command::simulate: detail::run_simulate(c, spec, r); break;
            case Command::check: detail::run_check(c, spec, r); break;
            case Command::compare: detail::run_compare(c, spec, r); break;
        }
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(ctx + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(ctx + e.what());
    } catch (const Error& e) {
        throw Error(ctx + e.what());
    }
    r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!c.output.empty()) {
        const auto path = (std::filesystem::path(c.output) / "report.json").string();
        r.artifacts.push_back(path);
        write_report(r, path);
    }
    return r;
}

}  // namespace igame::io
