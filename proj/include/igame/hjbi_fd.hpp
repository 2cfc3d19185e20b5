#pragma once

/**
 * @file hjbi_fd.hpp
 * @brief Explicit monotone finite-difference solver for the double-obstacle
 *        HJBI quasi-variational inequality
 *
 *   max{ V - M^+V, min{ -dV/dt - H(t,x,V,DV,D^2V), V - M^-V } } = 0,
 *   H(t,x,y,p,Q) = <b,p> + 1/2 tr(sigma sigma^T Q) + f(t,x,y,p sigma).
 *
 * Each backward step takes an explicit Euler step of the PDE part (upwind
 * drift, central diffusion, Kushner cross stencil in 2-D) and then iterates
 * the projection V <- min(M^+V, max(cont, M^-V)) to a fixed point, because
 * both obstacles depend on V itself.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "igame/errors.hpp"
#include "igame/grid.hpp"
#include "igame/intervention.hpp"
#include "igame/parallel.hpp"
#include "igame/problem_model.hpp"

namespace igame {

enum class Region : std::uint8_t { CONT, I_INT, II_INT };

inline std::string_view to_string(Region r) {
    switch (r) {
        case Region::CONT: return "CONT";
        case Region::I_INT: return "I_INT";
        case Region::II_INT: return "II_INT";
    }
    return "?";
}

inline Region region_from_string(std::string_view s) {
    if (s == "CONT") return Region::CONT;
    if (s == "I_INT") return Region::I_INT;
    if (s == "II_INT") return Region::II_INT;
    throw ValidationError("unknown region label '" + std::string(s) + "'");
}

/// Spatial grid plus a uniform partition of [0, T] into `steps` intervals.
struct SpaceTimeGrid {
    Grid space;
    std::size_t steps = 1;
    double horizon = 1.0;

    double dt() const { return horizon / static_cast<double>(steps); }
    std::size_t levels() const { return steps + 1; }
    double time(std::size_t level) const {
        return level == steps ? horizon : horizon * static_cast<double>(level) / static_cast<double>(steps);
    }
};

struct SolverOptions {
    double fixed_point_tol = 1e-10;  ///< stop when the sup-change of a projection pass is below this
    double failure_tol = 1e-6;       ///< at the iteration cap, a larger change is a ConvergenceError
    int max_iterations = 100;
    double binding_tol = 1e-8;
    bool record_projection = false;  ///< keep continuation and obstacle values of the final pass
    int threads = 1;
};

/// Grid axes from a box and a common step.
inline Grid grid_from_box(const std::vector<std::array<double, 2>>& box, double dx) {
    std::vector<Axis> axes;
    for (const auto& b : box) axes.push_back(Axis::aligned(b[0], b[1], dx));
    return Grid(std::move(axes));
}

/// Largest dt allowed by dt <= min dx^2 / (n max a_ii + max|b|_1 min dx + eps)
/// over the grid nodes at time t.
inline double cfl_dt_limit(const ProblemSpec& spec, const Grid& g, double t) {
    double a_max = 0.0, b_max = 0.0;
    std::array<double, kMaxDim> b{};
    std::array<double, kMaxDim * kMaxDim> a{};
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto x = g.coords(i);
        const std::span<const double> xs(x.data(), g.dim());
        spec.drift_at(t, xs, b);
        spec.diffusion_at(t, xs, a);
        double b1 = 0.0;
        for (std::size_t k = 0; k < g.dim(); ++k) {
            a_max = std::max(a_max, a[k * g.dim() + k]);
            b1 += std::abs(b[k]);
        }
        b_max = std::max(b_max, b1);
    }
    double dx_min = g.axis(0).step();
    for (std::size_t k = 1; k < g.dim(); ++k) dx_min = std::min(dx_min, g.axis(k).step());
    return dx_min * dx_min / (static_cast<double>(g.dim()) * a_max + b_max * dx_min + 1e-12);
}

/// Time partition obeying the CFL bound with the given safety factor.
/// steps == 0 picks the smallest admissible step count; otherwise the given
/// count is checked. Coefficients are sampled at 11 equispaced times.
inline SpaceTimeGrid make_space_time_grid(const ProblemSpec& spec, Grid space, double cfl_safety,
                                          std::size_t steps = 0) {
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw ValidationError("cfl_safety must lie in (0, 1]");
    if (space.dim() != spec.dim) throw ValidationError("grid dimension does not match problem dimension");
    double limit = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 10; ++k) limit = std::min(limit, cfl_dt_limit(spec, space, spec.horizon * k / 10.0));
    const double dt_max = cfl_safety * limit;
    SpaceTimeGrid st{std::move(space), steps, spec.horizon};
    if (steps == 0) {
        st.steps = static_cast<std::size_t>(std::ceil(spec.horizon / dt_max * (1.0 - 1e-12)));
        st.steps = std::max<std::size_t>(st.steps, 1);
    } else if (st.dt() > dt_max * (1.0 + 1e-12)) {
        throw CflError("time step " + std::to_string(st.dt()) + " exceeds CFL bound " + std::to_string(dt_max));
    }
    return st;
}

/// <b, p> + 1/2 tr(sigma sigma^T Q) + f(t, x, y, p sigma). Q is n x n row-major.
inline double hamiltonian(const ProblemSpec& spec, double t, std::span<const double> x, double y,
                          std::span<const double> p, std::span<const double> Q) {
    const std::size_t n = spec.dim, d = spec.noise_dim;
    std::array<double, kMaxDim> b{};
    std::array<double, kMaxDim * kMaxDim> s{}, a{};
    spec.drift_at(t, x, b);
    spec.vol_at(t, x, s);
    spec.diffusion_at(t, x, a);
    double h = 0.0;
    for (std::size_t i = 0; i < n; ++i) h += b[i] * p[i];
    double tr = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) tr += a[i * n + j] * Q[j * n + i];
    h += 0.5 * tr;
    std::array<double, kMaxDim> z{};
    for (std::size_t k = 0; k < d; ++k)
        for (std::size_t i = 0; i < n; ++i) z[k] += p[i] * s[i * d + k];
    return h + spec.driver(t, x, y, std::span<const double>(z.data(), d));
}

namespace detail {

/// Discrete Hamiltonian at one node.
///
/// Drift uses the upwind one-sided difference selected by the sign of b; a
/// boundary node whose upwind neighbour is missing drops that drift term.
/// Second differences are central and vanish on boundary nodes of their axis.
/// The z argument of f is (gradient) sigma with the upwind gradient (central
/// where b = 0). With scale s != 1 the driver is replaced by
/// s f(t, x, y/s, z/s), the form it takes for W = s V.
///
/// `monotone` receives false when the local explicit step would lose
/// monotonicity for the given dt.
inline double discrete_hamiltonian(const ProblemSpec& spec, const Grid& g, std::span<const double> v,
                                   std::size_t node, double t, double dt, double scale, bool& monotone) {
    const std::size_t n = g.dim(), d = spec.noise_dim;
    const auto idx = g.multi_index(node);
    const Point x = g.coords(node);
    const std::span<const double> xs(x.data(), n);
    std::array<double, kMaxDim> b{};
    std::array<double, kMaxDim * kMaxDim> s{}, a{};
    spec.drift_at(t, xs, b);
    spec.vol_at(t, xs, s);
    spec.diffusion_at(t, xs, a);

    const double vc = v[node];
    std::array<double, kMaxDim> grad{};
    double h = 0.0;
    double centre_rate = spec.driver_lipschitz();
    for (std::size_t k = 0; k < n; ++k) {
        const double dx = g.axis(k).step();
        const std::size_t stride = g.stride(k);
        const bool has_minus = idx[k] > 0;
        const bool has_plus = idx[k] + 1 < g.axis(k).size();
        const double vm = has_minus ? v[node - stride] : vc;
        const double vp = has_plus ? v[node + stride] : vc;
        double p = 0.0;
        if (b[k] > 0.0) {
            if (has_plus) {
                p = (vp - vc) / dx;
                h += b[k] * p;
                centre_rate += b[k] / dx;
            }
        } else if (b[k] < 0.0) {
            if (has_minus) {
                p = (vc - vm) / dx;
                h += b[k] * p;
                centre_rate += -b[k] / dx;
            }
        } else if (has_minus && has_plus) {
            p = (vp - vm) / (2.0 * dx);
        } else if (has_plus) {
            p = (vp - vc) / dx;
        } else if (has_minus) {
            p = (vc - vm) / dx;
        }
        grad[k] = p;
        if (has_minus && has_plus) {
            const double akk = a[k * n + k];
            h += 0.5 * akk * (vp - 2.0 * vc + vm) / (dx * dx);
            centre_rate += akk / (dx * dx);
        }
    }
    if (n == 2) {
        const double a01 = a[1];
        const bool interior = idx[0] > 0 && idx[0] + 1 < g.axis(0).size() && idx[1] > 0 && idx[1] + 1 < g.axis(1).size();
        if (a01 != 0.0 && interior) {
            const double dx = g.axis(0).step(), dy = g.axis(1).step();
            const std::size_t s0 = g.stride(0), s1 = g.stride(1);
            const double side = v[node + s0] + v[node - s0] + v[node + s1] + v[node - s1];
            double dxy;
            if (a01 > 0.0) {
                dxy = (2.0 * vc + v[node + s0 + s1] + v[node - s0 - s1] - side) / (2.0 * dx * dy);
            } else {
                dxy = -(2.0 * vc + v[node + s0 - s1] + v[node - s0 + s1] - side) / (2.0 * dx * dy);
            }
            h += a01 * dxy;
            centre_rate -= std::abs(a01) / (dx * dy);
            if (a[0] / (dx * dx) < std::abs(a01) / (dx * dy) - 1e-12 ||
                a[3] / (dy * dy) < std::abs(a01) / (dx * dy) - 1e-12)
                monotone = false;
        }
    }
    if (dt * centre_rate > 1.0 + 1e-12) monotone = false;

    std::array<double, kMaxDim> z{};
    for (std::size_t k = 0; k < d; ++k)
        for (std::size_t i = 0; i < n; ++i) z[k] += grad[i] * s[i * d + k] / scale;
    return h + scale * spec.driver(t, xs, vc / scale, std::span<const double>(z.data(), d));
}

}  // namespace detail

/// One explicit backward step of the PDE part, without obstacles:
/// V(t, x) = V(t+dt, x) + dt H_disc(t, x, V(t+dt, .)), coefficients at t.
inline GridSlice step_backward(const ProblemSpec& spec, const SpaceTimeGrid& st, const GridSlice& next,
                               int threads = 1) {
    const double dt = st.dt();
    double t = next.time - dt;
    if (t < 0.0 && t > -1e-12 * st.horizon) t = 0.0;
    GridSlice out{next.grid, std::vector<double>(next.values.size()), t};
    std::vector<std::uint8_t> ok(next.values.size(), 1);
    parallel_for(next.values.size(), threads, [&](std::size_t i) {
        bool mono = true;
        out.values[i] = next.values[i] + dt * detail::discrete_hamiltonian(spec, next.grid, next.values, i, t, dt, 1.0, mono);
        ok[i] = mono;
    });
    if (std::find(ok.begin(), ok.end(), 0) != ok.end())
        throw CflError("explicit step at t=" + std::to_string(t) + " violates the monotonicity (CFL) condition");
    return out;
}

/// min(upper, max(cont, lower)) per node; nonbinding obstacles are +-inf, so
/// they never clamp. Upper wins when lower > upper.
inline GridSlice project_double_obstacle(const GridSlice& cont, const ObstacleSlice& lower, const ObstacleSlice& upper) {
    GridSlice out{cont.grid, std::vector<double>(cont.values.size()), cont.time};
    for (std::size_t i = 0; i < cont.values.size(); ++i)
        out.values[i] = std::min(upper.values[i], std::max(cont.values[i], lower.values[i]));
    return out;
}

/// Outcome of the obstacle fixed point on one slice.
struct ProjectionResult {
    GridSlice slice;
    std::vector<Region> region;
    std::vector<int> action;  ///< index into U (I_INT) or V (II_INT); -1 for CONT
    ObstacleSlice lower;      ///< obstacles of the final pass (computed from the previous iterate)
    ObstacleSlice upper;
    int iterations = 0;
    double last_change = 0.0;
};

/// Iterates V <- min(M^+V, max(base, M^-V)) from V = base until the sup-change
/// falls below opts.fixed_point_tol, or opts.max_iterations passes.
/// `cost_scale` multiplies c and chi.
inline ProjectionResult obstacle_fixed_point(const GridSlice& base, const ProblemSpec& spec, const SolverOptions& opts,
                                             double cost_scale = 1.0) {
    const InterventionOptions io{opts.binding_tol, cost_scale, opts.threads};
    const std::size_t n = base.values.size();
    ProjectionResult r;
    GridSlice cur = base;
    GridSlice next = base;
    bool converged = false;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        r.lower = lower_obstacle(cur, spec, io);
        r.upper = upper_obstacle(cur, spec, io);
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            next.values[i] = std::min(r.upper.values[i], std::max(base.values[i], r.lower.values[i]));
            change = std::max(change, std::abs(next.values[i] - cur.values[i]));
        }
        std::swap(cur, next);
        r.iterations = it;
        r.last_change = change;
        if (change <= opts.fixed_point_tol) {
            converged = true;
            break;
        }
    }
    if (!converged && r.last_change > opts.failure_tol)
        throw ConvergenceError("obstacle fixed point at t=" + std::to_string(base.time) + " did not settle after " +
                               std::to_string(opts.max_iterations) + " passes (change " +
                               std::to_string(r.last_change) + ")");
    r.region.assign(n, Region::CONT);
    r.action.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const double inner = std::max(base.values[i], r.lower.values[i]);
        if (r.upper.values[i] < inner) {
            r.region[i] = Region::II_INT;
            r.action[i] = r.upper.best_action[i];
        } else if (r.lower.values[i] > base.values[i]) {
            r.region[i] = Region::I_INT;
            r.action[i] = r.lower.best_action[i];
        }
    }
    r.slice = std::move(cur);
    return r;
}

/// Terminal slice: Phi on the grid projected onto both obstacles.
inline ProjectionResult terminal_projection(const ProblemSpec& spec, const Grid& grid, const SolverOptions& opts = {}) {
    GridSlice phi{grid, std::vector<double>(grid.size()), spec.horizon};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto x = grid.coords(i);
        phi.values[i] = spec.terminal(spec.horizon, std::span<const double>(x.data(), grid.dim()));
    }
    return obstacle_fixed_point(phi, spec, opts);
}

/// Value function on a space-time grid, with region and action labels.
struct ValueField {
    SpaceTimeGrid grid;
    std::vector<double> values;  ///< level-major: values[level * nodes + node]
    std::vector<Region> region;
    std::vector<int> action;
    std::vector<int> iterations;  ///< projection passes per level

    // Populated only with SolverOptions::record_projection.
    std::vector<double> continuation;
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t nodes() const { return grid.space.size(); }
    std::size_t levels() const { return grid.levels(); }
    double& at(std::size_t level, std::size_t node) { return values[level * nodes() + node]; }
    double at(std::size_t level, std::size_t node) const { return values[level * nodes() + node]; }
    std::span<const double> level(std::size_t k) const {
        return std::span<const double>(values).subspan(k * nodes(), nodes());
    }
    GridSlice slice(std::size_t k) const {
        return {grid.space, std::vector<double>(level(k).begin(), level(k).end()), grid.time(k)};
    }
    bool has_projection_record() const { return !continuation.empty(); }

    void allocate(const SpaceTimeGrid& g, bool record) {
        grid = g;
        const std::size_t total = g.levels() * g.space.size();
        values.assign(total, 0.0);
        region.assign(total, Region::CONT);
        action.assign(total, -1);
        iterations.assign(g.levels(), 0);
        if (record) {
            continuation.assign(total, 0.0);
            lower.assign(total, 0.0);
            upper.assign(total, 0.0);
        }
    }

    void store(std::size_t k, const ProjectionResult& p, std::span<const double> cont) {
        const std::size_t off = k * nodes();
        std::copy(p.slice.values.begin(), p.slice.values.end(), values.begin() + off);
        std::copy(p.region.begin(), p.region.end(), region.begin() + off);
        std::copy(p.action.begin(), p.action.end(), action.begin() + off);
        iterations[k] = p.iterations;
        if (has_projection_record()) {
            std::copy(cont.begin(), cont.end(), continuation.begin() + off);
            std::copy(p.lower.values.begin(), p.lower.values.end(), lower.begin() + off);
            std::copy(p.upper.values.begin(), p.upper.values.end(), upper.begin() + off);
        }
    }
};

/// Backward solve: terminal projection at T, then per level an explicit step
/// followed by the obstacle fixed point.
inline ValueField solve_pde(const ProblemSpec& spec, const SpaceTimeGrid& st, const SolverOptions& opts = {}) {
    spec.check();
    if (st.space.dim() != spec.dim) throw ValidationError("grid dimension does not match problem dimension");
    if (std::abs(st.horizon - spec.horizon) > 1e-12 * spec.horizon)
        throw ValidationError("grid horizon does not match problem horizon");
    ValueField field;
    field.allocate(st, opts.record_projection);

    auto term = terminal_projection(spec, st.space, opts);
    GridSlice phi{st.space, std::vector<double>(st.space.size()), spec.horizon};
    for (std::size_t i = 0; i < st.space.size(); ++i) {
        const auto x = st.space.coords(i);
        phi.values[i] = spec.terminal(spec.horizon, std::span<const double>(x.data(), st.space.dim()));
    }
    field.store(st.steps, term, phi.values);

    GridSlice cur = std::move(term.slice);
    for (std::size_t k = st.steps; k-- > 0;) {
        GridSlice cont = step_backward(spec, st, cur, opts.threads);
        cont.time = st.time(k);
        auto proj = obstacle_fixed_point(cont, spec, opts);
        field.store(k, proj, cont.values);
        cur = std::move(proj.slice);
    }
    return field;
}

/// Discrete evaluation of the QVI expression on a solved field.
struct ResidualField {
    std::vector<double> residual;  ///< per (level, node); the terminal level is 0
    double sup_norm = 0.0;         ///< over all nodes of levels < N
    double sup_interior = 0.0;     ///< over the interior box
    std::array<double, 3> sup_by_region{};  ///< CONT, I_INT, II_INT (interior)
    std::vector<double> level_sup;           ///< per level, all nodes
    std::vector<double> level_sup_interior;  ///< per level, interior box
};

struct ResidualOptions {
    double interior_fraction = 0.8;
    int threads = 1;
};

/// max{ V - M^+V, min{ -dV/dt - H_disc(V), V - M^-V } } at every node of
/// levels k < N, with dV/dt = (V_{k+1} - V_k)/dt and the spatial stencils of
/// step_backward applied to V_k. Nonbinding obstacles drop out through their
/// infinite values.
///
/// With theta > 0 the field is read as W = e^{theta t} V and the residual of
/// the exponentially transformed problem is evaluated: costs scaled by
/// e^{theta t}, driver s f(t, x, W/s, DW sigma/s) with s = e^{theta t}, and
/// theta W - dW/dt discretised as (W_k - e^{-theta dt} W_{k+1}) / dt, so that
/// the transformed residual equals e^{theta t_k} times the original one.
inline ResidualField qvi_residual(const ProblemSpec& spec, const ValueField& field, const ResidualOptions& ropts = {},
                                  double theta = 0.0) {
    if (field.levels() < 2) throw PreconditionError("qvi_residual needs at least two time levels");
    const auto& g = field.grid.space;
    const std::size_t n = field.nodes();
    const double dt = field.grid.dt();
    ResidualField out;
    out.residual.assign(field.values.size(), 0.0);
    out.level_sup.assign(field.levels(), 0.0);
    out.level_sup_interior.assign(field.levels(), 0.0);
    std::vector<std::uint8_t> interior(n);
    for (std::size_t i = 0; i < n; ++i) interior[i] = g.in_interior(i, ropts.interior_fraction);

    const double decay = std::exp(-theta * dt);
    for (std::size_t k = 0; k + 1 < field.levels(); ++k) {
        const double t = field.grid.time(k);
        const double scale = std::exp(theta * t);
        const GridSlice cur = field.slice(k);
        const auto nxt = field.level(k + 1);
        const InterventionOptions io{1e-8, scale, ropts.threads};
        const auto lo = lower_obstacle(cur, spec, io);
        const auto up = upper_obstacle(cur, spec, io);
        double* res = out.residual.data() + k * n;
        parallel_for(n, ropts.threads, [&](std::size_t i) {
            bool mono = true;
            const double h = detail::discrete_hamiltonian(spec, g, cur.values, i, t, 0.0, scale, mono);
            const double time_term = theta == 0.0 ? -(nxt[i] - cur.values[i]) / dt
                                                  : (cur.values[i] - decay * nxt[i]) / dt;
            const double pde = time_term - h;
            const double v = cur.values[i];
            res[i] = std::max(v - up.values[i], std::min(pde, v - lo.values[i]));
        });
        for (std::size_t i = 0; i < n; ++i) {
            const double r = std::abs(res[i]);
            out.level_sup[k] = std::max(out.level_sup[k], r);
            if (interior[i]) {
                out.level_sup_interior[k] = std::max(out.level_sup_interior[k], r);
                auto& slot = out.sup_by_region[static_cast<std::size_t>(field.region[k * n + i])];
                slot = std::max(slot, r);
            }
        }
        out.sup_norm = std::max(out.sup_norm, out.level_sup[k]);
        out.sup_interior = std::max(out.sup_interior, out.level_sup_interior[k]);
    }
    return out;
}

/// W = e^{theta t} V level by level; labels are carried over unchanged.
inline ValueField theta_transform(const ValueField& field, double theta) {
    if (theta < 0.0) throw PreconditionError("theta must be non-negative");
    ValueField w = field;
    const std::size_t n = field.nodes();
    for (std::size_t k = 0; k < field.levels(); ++k) {
        const double s = std::exp(theta * field.grid.time(k));
        for (std::size_t i = 0; i < n; ++i) {
            w.values[k * n + i] *= s;
            if (w.has_projection_record()) {
                w.continuation[k * n + i] *= s;
                w.lower[k * n + i] *= s;
                w.upper[k * n + i] *= s;
            }
        }
    }
    return w;
}

}  // namespace igame
