#pragma once

/**
 * @file game_tree.hpp
 * @brief Discrete-game oracle: a controlled Markov chain on a lattice solved by
 *        exact backward induction.
 *
 * Each backward step applies one explicit Euler step of the BSDE over the
 * chain (the discrete backward semigroup), then lets the players intervene:
 * player II decides first, player I second, by iterating node-exact shifted
 * lookups to a fixed point. The code shares no numerical routine with the
 * finite-difference solver except the coefficient forms themselves.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "igame/errors.hpp"
#include "igame/grid.hpp"
#include "igame/hjbi_fd.hpp"
#include "igame/parallel.hpp"
#include "igame/problem_model.hpp"

namespace igame {

/// Node values and labels on the lattice; same layout as the PDE field.
using NodeValues = ValueField;

/// Markov chain on (time level) x (lattice node).
///
/// Interior nodes move to neighbours with the three-point weights
/// a dt/(2 dx^2) + b^{+-} dt/dx per axis, drift upwinded (plus the Kushner
/// cross stencil when n = 2); boundary nodes absorb.
struct LatticeModel {
    Grid lattice;
    std::size_t steps = 1;
    double horizon = 1.0;
    std::vector<std::array<long, kMaxDim>> offsets;  ///< stencil slots
    bool homogeneous = true;                         ///< one weight table shared by all levels
    std::vector<double> weights;                     ///< [stored level][node][slot]

    double dt() const { return horizon / static_cast<double>(steps); }
    double time(std::size_t level) const {
        return level == steps ? horizon : horizon * static_cast<double>(level) / static_cast<double>(steps);
    }
    std::size_t stencil() const { return offsets.size(); }

    /// Transition weights out of `node` at `level` (level < steps).
    std::span<const double> weights_at(std::size_t level, std::size_t node) const {
        const std::size_t stored = homogeneous ? 0 : level;
        return std::span<const double>(weights).subspan((stored * lattice.size() + node) * stencil(), stencil());
    }

    /// Child node reached through `slot`; only meaningful when its weight is positive.
    std::size_t child(std::size_t node, std::size_t slot) const {
        const auto idx = lattice.multi_index(node);
        std::array<std::size_t, kMaxDim> c{};
        for (std::size_t k = 0; k < lattice.dim(); ++k) {
            const long j = static_cast<long>(idx[k]) + offsets[slot][k];
            if (j < 0 || j >= static_cast<long>(lattice.axis(k).size())) return node;
            c[k] = static_cast<std::size_t>(j);
        }
        return lattice.flat_index(c);
    }

    SpaceTimeGrid space_time() const { return {lattice, steps, horizon}; }
};

/// Mean and second moment of the one-step increment out of (level, node).
struct LatticeMoments {
    std::array<double, kMaxDim> mean{};
    std::array<double, kMaxDim * kMaxDim> second{};
};

inline LatticeMoments lattice_moments(const LatticeModel& m, std::size_t level, std::size_t node) {
    LatticeMoments mo;
    const auto w = m.weights_at(level, node);
    const std::size_t n = m.lattice.dim();
    for (std::size_t s = 0; s < m.stencil(); ++s) {
        if (w[s] == 0.0) continue;
        std::array<double, kMaxDim> d{};
        for (std::size_t k = 0; k < n; ++k) d[k] = static_cast<double>(m.offsets[s][k]) * m.lattice.axis(k).step();
        for (std::size_t k = 0; k < n; ++k) {
            mo.mean[k] += w[s] * d[k];
            for (std::size_t j = 0; j < n; ++j) mo.second[k * n + j] += w[s] * d[k] * d[j];
        }
    }
    return mo;
}

/// Builds the chain on the aligned lattice of multiples of dx inside `box`.
/// Throws AlignmentError when an impulse action is not a multiple of dx and
/// NegativeWeightError when dt is too large for nonnegative weights.
inline LatticeModel build_lattice(const ProblemSpec& spec, std::size_t steps,
                                  const std::vector<std::array<double, 2>>& box, double dx) {
    spec.check();
    if (steps < 1) throw ValidationError("lattice needs at least one time step");
    if (box.size() != spec.dim) throw ValidationError("lattice box dimension does not match problem");
    LatticeModel m;
    m.lattice = grid_from_box(box, dx);
    m.steps = steps;
    m.horizon = spec.horizon;
    m.homogeneous = spec.time_homogeneous();
    const std::size_t n = spec.dim;

    for (const auto* set : {&spec.impulse_U, &spec.impulse_V})
        for (const auto& a : set->actions)
            for (double v : a) {
                const double q = v / dx;
                if (std::abs(q - std::round(q)) > 1e-9)
                    throw AlignmentError("impulse action " + std::to_string(v) + " is not a multiple of dx=" +
                                         std::to_string(dx));
            }

    if (n == 1) {
        m.offsets = {{-1, 0}, {0, 0}, {1, 0}};
    } else {
        for (long i = -1; i <= 1; ++i)
            for (long j = -1; j <= 1; ++j) m.offsets.push_back({i, j});
    }
    const std::size_t S = m.stencil();
    const std::size_t centre = n == 1 ? 1 : 4;
    auto slot = [&](long i, long j) { return n == 1 ? static_cast<std::size_t>(i + 1) : static_cast<std::size_t>((i + 1) * 3 + (j + 1)); };

    const double dt = m.dt();
    const std::size_t stored = m.homogeneous ? 1 : steps;
    const std::size_t N = m.lattice.size();
    m.weights.assign(stored * N * S, 0.0);
    for (std::size_t lv = 0; lv < stored; ++lv) {
        const double t = m.time(lv);
        for (std::size_t node = 0; node < N; ++node) {
            double* w = m.weights.data() + (lv * N + node) * S;
            if (m.lattice.on_boundary(node)) {
                w[centre] = 1.0;
                continue;
            }
            const Point x = m.lattice.coords(node);
            const std::span<const double> xs(x.data(), n);
            std::array<double, kMaxDim> b{};
            std::array<double, kMaxDim * kMaxDim> a{};
            spec.drift_at(t, xs, b);
            spec.diffusion_at(t, xs, a);
            double rest = 0.0;
            if (n == 1) {
                const double h = m.lattice.axis(0).step();
                const double diff = a[0] * dt / (2.0 * h * h);
                w[slot(-1, 0)] = diff + std::max(-b[0], 0.0) * dt / h;
                w[slot(1, 0)] = diff + std::max(b[0], 0.0) * dt / h;
                rest = w[slot(-1, 0)] + w[slot(1, 0)];
            } else {
                const double h0 = m.lattice.axis(0).step(), h1 = m.lattice.axis(1).step();
                const double c = std::abs(a[1]) * dt / (2.0 * h0 * h1);
                w[slot(-1, 0)] = a[0] * dt / (2.0 * h0 * h0) + std::max(-b[0], 0.0) * dt / h0 - c;
                w[slot(1, 0)] = a[0] * dt / (2.0 * h0 * h0) + std::max(b[0], 0.0) * dt / h0 - c;
                w[slot(0, -1)] = a[3] * dt / (2.0 * h1 * h1) + std::max(-b[1], 0.0) * dt / h1 - c;
                w[slot(0, 1)] = a[3] * dt / (2.0 * h1 * h1) + std::max(b[1], 0.0) * dt / h1 - c;
                if (a[1] > 0.0) {
                    w[slot(1, 1)] = c;
                    w[slot(-1, -1)] = c;
                } else if (a[1] < 0.0) {
                    w[slot(1, -1)] = c;
                    w[slot(-1, 1)] = c;
                }
                for (std::size_t s = 0; s < S; ++s)
                    if (s != centre) rest += w[s];
            }
            w[centre] = 1.0 - rest;
            for (std::size_t s = 0; s < S; ++s) {
                if (w[s] < 0.0) {
                    if (w[s] > -1e-14) {
                        w[s] = 0.0;
                    } else {
                        throw NegativeWeightError("negative transition weight " + std::to_string(w[s]) +
                                                  " at t=" + std::to_string(t) + "; reduce dt");
                    }
                }
            }
            // Local consistency. Upwinding adds |b| dx dt of numerical diffusion on the diagonal.
            const auto mo = lattice_moments(m, lv, node);
            for (std::size_t k = 0; k < n; ++k) {
                if (std::abs(mo.mean[k] - b[k] * dt) > 1e-8 * dt)
                    throw PreconditionError("lattice drift moment inconsistent with b");
                for (std::size_t j = 0; j < n; ++j) {
                    const double slack = k == j ? std::abs(b[k]) * m.lattice.axis(k).step() * dt : 0.0;
                    if (std::abs(mo.second[k * n + j] - a[k * n + j] * dt) > 1e-8 * dt + slack)
                        throw PreconditionError("lattice second moment inconsistent with sigma sigma^T");
                }
            }
        }
    }
    return m;
}

/// One step of the discrete backward semigroup out of `level`:
///   m = sum_w (child + theta_increment[child]),
///   z = conditional covariance of child values with the increment / dt, mapped to DV sigma,
///   Y = m + f(t, x, m, z) dt.
/// `theta_increment` may be empty (no impulse gains on this step).
inline std::vector<double> backward_semigroup_step(const LatticeModel& model, const ProblemSpec& spec,
                                                   std::size_t level, std::span<const double> child_values,
                                                   std::span<const double> theta_increment, int threads = 1) {
    if (level >= model.steps) throw PreconditionError("semigroup step needs level < terminal");
    const std::size_t N = model.lattice.size();
    const std::size_t n = spec.dim, d = spec.noise_dim;
    const double dt = model.dt();
    const double t = model.time(level);
    std::vector<double> out(N);
    parallel_for(N, threads, [&](std::size_t node) {
        const auto w = model.weights_at(level, node);
        double mean = 0.0;
        for (std::size_t s = 0; s < model.stencil(); ++s) {
            if (w[s] == 0.0) continue;
            const std::size_t c = model.child(node, s);
            mean += w[s] * (child_values[c] + (theta_increment.empty() ? 0.0 : theta_increment[c]));
        }
        std::array<double, kMaxDim> cov{};
        for (std::size_t s = 0; s < model.stencil(); ++s) {
            if (w[s] == 0.0) continue;
            const std::size_t c = model.child(node, s);
            const double dy = child_values[c] + (theta_increment.empty() ? 0.0 : theta_increment[c]) - mean;
            for (std::size_t k = 0; k < n; ++k)
                cov[k] += w[s] * dy * static_cast<double>(model.offsets[s][k]) * model.lattice.axis(k).step();
        }
        const Point x = model.lattice.coords(node);
        const std::span<const double> xs(x.data(), n);
        std::array<double, kMaxDim * kMaxDim> a{}, sig{};
        spec.diffusion_at(t, xs, a);
        spec.vol_at(t, xs, sig);
        // Gradient estimate g solves (a dt) g = cov; axes without diffusion get 0.
        std::array<double, kMaxDim> grad{};
        if (n == 1) {
            if (a[0] > 0.0) grad[0] = cov[0] / (a[0] * dt);
        } else {
            const double det = a[0] * a[3] - a[1] * a[2];
            if (std::abs(det) > 1e-14 * (1.0 + a[0] * a[3])) {
                grad[0] = (a[3] * cov[0] - a[1] * cov[1]) / (det * dt);
                grad[1] = (a[0] * cov[1] - a[2] * cov[0]) / (det * dt);
            } else {
                for (std::size_t k = 0; k < 2; ++k)
                    if (a[k * 3] > 0.0) grad[k] = cov[k] / (a[k * 3] * dt);
            }
        }
        std::array<double, kMaxDim> z{};
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t i = 0; i < n; ++i) z[k] += grad[i] * sig[i * d + k];
        out[node] = mean + spec.driver(t, xs, mean, std::span<const double>(z.data(), d)) * dt;
    });
    return out;
}

/// Which player decides first at a node. The game value uses SecondMover = I
/// (player II first); the reverse order serves the Isaacs-gap diagnostic.
enum class DecisionOrder { II_first, I_first };

struct GameOptions {
    SolverOptions solver;
    DecisionOrder order = DecisionOrder::II_first;
    bool force_cont_initial = false;  ///< skip interventions at level 0
};

namespace detail {

struct LatticeShift {
    std::array<long, kMaxDim> offset{};
    double cost = 0.0;
};

inline std::vector<LatticeShift> lattice_shifts(const Grid& g, const DiscreteImpulseSet& set, const CoefficientForm& cost,
                                                double t, double sign) {
    std::vector<LatticeShift> out;
    for (const auto& a : set.actions) {
        LatticeShift s;
        for (std::size_t k = 0; k < g.dim(); ++k) s.offset[k] = std::lround(a[k] / g.axis(k).step());
        s.cost = sign * cost(t, a);
        out.push_back(s);
    }
    return out;
}

struct LatticeProjection {
    std::vector<double> values;
    std::vector<Region> region;
    std::vector<int> action;
    std::vector<double> lower, upper;
    int iterations = 0;
};

/// Fixed point of the node-level intervention game over exact lattice shifts.
inline LatticeProjection lattice_project(const Grid& g, const ProblemSpec& spec, std::span<const double> base, double t,
                                         const GameOptions& opts) {
    const std::size_t N = g.size();
    const auto ushift = lattice_shifts(g, spec.impulse_U, spec.cost_c, t, -1.0);
    const auto vshift = lattice_shifts(g, spec.impulse_V, spec.gain_chi, t, +1.0);
    constexpr double inf = std::numeric_limits<double>::infinity();

    auto target = [&](std::size_t node, const LatticeShift& s) -> long {
        const auto idx = g.multi_index(node);
        std::array<std::size_t, kMaxDim> c{};
        for (std::size_t k = 0; k < g.dim(); ++k) {
            const long j = static_cast<long>(idx[k]) + s.offset[k];
            if (j < 0 || j >= static_cast<long>(g.axis(k).size())) return -1;
            c[k] = static_cast<std::size_t>(j);
        }
        return static_cast<long>(g.flat_index(c));
    };

    LatticeProjection p;
    p.values.assign(base.begin(), base.end());
    p.lower.assign(N, -inf);
    p.upper.assign(N, inf);
    std::vector<int> best_lo(N, -1), best_up(N, -1);
    std::vector<double> next(N);
    bool converged = false;
    double change = 0.0;
    for (int it = 1; it <= opts.solver.max_iterations; ++it) {
        parallel_for(N, opts.solver.threads, [&](std::size_t i) {
            double lo = -inf, up = inf;
            int alo = -1, aup = -1;
            for (std::size_t k = 0; k < ushift.size(); ++k) {
                const long j = target(i, ushift[k]);
                if (j < 0) continue;
                const double c = p.values[static_cast<std::size_t>(j)] + ushift[k].cost;
                if (alo < 0 || c > lo) lo = c, alo = static_cast<int>(k);
            }
            for (std::size_t k = 0; k < vshift.size(); ++k) {
                const long j = target(i, vshift[k]);
                if (j < 0) continue;
                const double c = p.values[static_cast<std::size_t>(j)] + vshift[k].cost;
                if (aup < 0 || c < up) up = c, aup = static_cast<int>(k);
            }
            p.lower[i] = lo;
            p.upper[i] = up;
            best_lo[i] = alo;
            best_up[i] = aup;
            next[i] = opts.order == DecisionOrder::II_first ? std::min(up, std::max(base[i], lo))
                                                            : std::max(lo, std::min(base[i], up));
        });
        change = 0.0;
        for (std::size_t i = 0; i < N; ++i) change = std::max(change, std::abs(next[i] - p.values[i]));
        p.values.swap(next);
        p.iterations = it;
        if (change <= opts.solver.fixed_point_tol) {
            converged = true;
            break;
        }
    }
    if (!converged && change > opts.solver.failure_tol)
        throw ConvergenceError("lattice intervention fixed point at t=" + std::to_string(t) + " did not settle");

    p.region.assign(N, Region::CONT);
    p.action.assign(N, -1);
    for (std::size_t i = 0; i < N; ++i) {
        if (opts.order == DecisionOrder::II_first) {
            if (p.upper[i] < std::max(base[i], p.lower[i])) {
                p.region[i] = Region::II_INT;
                p.action[i] = best_up[i];
            } else if (p.lower[i] > base[i]) {
                p.region[i] = Region::I_INT;
                p.action[i] = best_lo[i];
            }
        } else {
            if (p.lower[i] > std::min(base[i], p.upper[i])) {
                p.region[i] = Region::I_INT;
                p.action[i] = best_lo[i];
            } else if (p.upper[i] < base[i]) {
                p.region[i] = Region::II_INT;
                p.action[i] = best_up[i];
            }
        }
    }
    return p;
}

inline void store_level(NodeValues& out, std::size_t level, const LatticeProjection& p, std::span<const double> base) {
    const std::size_t N = out.nodes();
    const std::size_t off = level * N;
    std::copy(p.values.begin(), p.values.end(), out.values.begin() + off);
    std::copy(p.region.begin(), p.region.end(), out.region.begin() + off);
    std::copy(p.action.begin(), p.action.end(), out.action.begin() + off);
    out.iterations[level] = p.iterations;
    if (out.has_projection_record()) {
        std::copy(base.begin(), base.end(), out.continuation.begin() + off);
        std::copy(p.lower.begin(), p.lower.end(), out.lower.begin() + off);
        std::copy(p.upper.begin(), p.upper.end(), out.upper.begin() + off);
    }
}

/// Backward induction over levels [0, from) starting with the values already
/// stored at level `from`.
inline void induct(const LatticeModel& model, const ProblemSpec& spec, NodeValues& out, std::size_t from,
                   const GameOptions& opts) {
    for (std::size_t k = from; k-- > 0;) {
        auto cont = backward_semigroup_step(model, spec, k, out.level(k + 1), {}, opts.solver.threads);
        if (k == 0 && opts.force_cont_initial) {
            LatticeProjection p;
            p.values = cont;
            p.region.assign(cont.size(), Region::CONT);
            p.action.assign(cont.size(), -1);
            p.lower.assign(cont.size(), -std::numeric_limits<double>::infinity());
            p.upper.assign(cont.size(), std::numeric_limits<double>::infinity());
            store_level(out, k, p, cont);
            continue;
        }
        auto p = lattice_project(model.lattice, spec, cont, model.time(k), opts);
        store_level(out, k, p, cont);
    }
}

}  // namespace detail

/// Exact backward induction over the chain: terminal projection of Phi, then
/// per level a semigroup step followed by the intervention fixed point.
inline NodeValues solve_game(const LatticeModel& model, const ProblemSpec& spec, const GameOptions& opts = {}) {
    spec.check();
    NodeValues out;
    out.allocate(model.space_time(), opts.solver.record_projection);
    const std::size_t N = model.lattice.size();
    std::vector<double> phi(N);
    for (std::size_t i = 0; i < N; ++i) {
        const Point x = model.lattice.coords(i);
        phi[i] = spec.terminal(spec.horizon, std::span<const double>(x.data(), spec.dim));
    }
    auto term = detail::lattice_project(model.lattice, spec, phi, spec.horizon, opts);
    detail::store_level(out, model.steps, term, phi);
    detail::induct(model, spec, out, model.steps, opts);
    return out;
}

/// Re-solves levels [0, split) from the solution's own values at `split` and
/// returns the sup-node gap to the original over levels <= split.
inline double dpp_residual(const LatticeModel& model, const ProblemSpec& spec, const NodeValues& solution,
                           std::size_t split_level, const GameOptions& opts = {}) {
    if (split_level == 0 || split_level >= model.steps)
        throw PreconditionError("dpp split must satisfy 0 < split < terminal level");
    NodeValues re;
    re.allocate(model.space_time(), false);
    const std::size_t N = model.lattice.size();
    std::copy_n(solution.values.begin() + split_level * N, N, re.values.begin() + split_level * N);
    detail::induct(model, spec, re, split_level, opts);
    double gap = 0.0;
    for (std::size_t k = 0; k <= split_level; ++k)
        for (std::size_t i = 0; i < N; ++i) gap = std::max(gap, std::abs(re.at(k, i) - solution.at(k, i)));
    return gap;
}

/// Sup gap at level 0 (interior box) between the player-II-first value and the
/// player-I-first value.
inline double isaacs_gap(const LatticeModel& model, const ProblemSpec& spec, const GameOptions& opts = {},
                         double interior_fraction = 0.8) {
    GameOptions a = opts, b = opts;
    a.order = DecisionOrder::II_first;
    b.order = DecisionOrder::I_first;
    const auto va = solve_game(model, spec, a);
    const auto vb = solve_game(model, spec, b);
    double gap = 0.0;
    for (std::size_t i = 0; i < model.lattice.size(); ++i)
        if (model.lattice.in_interior(i, interior_fraction)) gap = std::max(gap, std::abs(va.at(0, i) - vb.at(0, i)));
    return gap;
}

}  // namespace igame
