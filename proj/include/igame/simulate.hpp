#pragma once

/**
 * @file simulate.hpp
 * @brief Monte Carlo of the impulse-controlled SDE under a feedback policy read
 *        off a solved field, and pathwise evaluation of the cost for drivers of
 *        the form f = a(t,x) + kappa y.
 */

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "igame/errors.hpp"
#include "igame/grid.hpp"
#include "igame/hjbi_fd.hpp"
#include "igame/impulse_control.hpp"
#include "igame/parallel.hpp"
#include "igame/problem_model.hpp"
#include "igame/random.hpp"

namespace igame {

/// Region and action labels per (level, node), looked up at the nearest node.
struct FeedbackPolicy {
    SpaceTimeGrid grid;
    std::vector<Region> region;
    std::vector<int> action;

    struct Decision {
        Region region = Region::CONT;
        int action = -1;
    };

    std::size_t nodes() const { return grid.space.size(); }

    /// Level whose time is nearest to t.
    std::size_t level_of(double t) const {
        const double k = std::round(t / grid.dt());
        return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(grid.steps)));
    }

    Decision at(std::size_t level, std::span<const double> x) const {
        const std::size_t node = nearest_node(grid.space, x);
        const std::size_t i = level * nodes() + node;
        return {region[i], action[i]};
    }

    /// Policy that never intervenes.
    static FeedbackPolicy continuation_only(const SpaceTimeGrid& g) {
        FeedbackPolicy p;
        p.grid = g;
        p.region.assign(g.levels() * g.space.size(), Region::CONT);
        p.action.assign(p.region.size(), -1);
        return p;
    }
};

/// Copies the labels of a solved field. A node carries a single label, with
/// II_INT already taking precedence where both obstacles bind.
inline FeedbackPolicy extract_policy(const ValueField& field, const ProblemSpec& spec) {
    FeedbackPolicy p;
    p.grid = field.grid;
    p.region = field.region;
    p.action = field.action;
    for (std::size_t i = 0; i < p.region.size(); ++i) {
        const auto r = p.region[i];
        const int a = p.action[i];
        if (r == Region::CONT) {
            p.action[i] = -1;
            continue;
        }
        const std::size_t limit = r == Region::I_INT ? spec.impulse_U.size() : spec.impulse_V.size();
        if (a < 0 || static_cast<std::size_t>(a) >= limit)
            throw PreconditionError("field label references an action outside the impulse set");
    }
    return p;
}

struct SimulationOptions {
    std::size_t impulse_cap = 10000;  ///< per path; further interventions are suppressed and the path flagged
    bool record_states = false;       ///< keep X at every level and the Brownian increments
    int threads = 1;
};

struct PathRecord {
    std::vector<double> x_T;
    ImpulseSchedule u{Player::I};
    ImpulseSchedule v{Player::II};
    double theta_T = 0.0;
    double running = 0.0;  ///< trapezoidal integral of e^{kappa (s - t0)} a(s, X_s)
    bool cap_hit = false;
    std::vector<double> states;      ///< per level, post-impulse (record_states only)
    std::vector<double> increments;  ///< per step and noise axis (record_states only)
};

struct PathEnsemble {
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    double t0 = 0.0;
    std::vector<double> x0;
    double dt = 0.0;
    std::size_t start_level = 0;
    std::size_t steps = 0;  ///< terminal level index
    std::size_t dim = 1;
    std::size_t noise_dim = 1;
    bool affine = false;  ///< running integral and kappa were computed
    double kappa = 0.0;
    std::vector<PathRecord> paths;

    std::size_t capped() const {
        std::size_t c = 0;
        for (const auto& p : paths) c += p.cap_hit;
        return c;
    }
    double time(std::size_t level) const {
        return level == steps ? static_cast<double>(steps) * dt : static_cast<double>(level) * dt;
    }
};

namespace detail {

/// Splits f into a(t,x) + kappa y when it has that shape.
struct AffineDriver {
    bool ok = false;
    double kappa = 0.0;
    std::optional<double> constant_a;  ///< set when f = a + kappa y with constant a
};

inline AffineDriver affine_driver(const CoefficientForm& f) {
    if (f.kind() == FormKind::affine_in_y) return {true, f.params()[1], f.params()[0]};
    if (!f.depends_on_y() && !f.depends_on_z()) return {true, 0.0, std::nullopt};
    return {};
}

}  // namespace detail

/// Euler-Maruyama paths from (t0, x0) on the policy's time grid. At every
/// level the policy is consulted at the nearest node, II first; the player
/// that acts first may chain further impulses of its own at the same instant,
/// the other player waits for the next level. Impulses are applied before the
/// diffusion step, and also at T. Path i draws from substream i of `seed`.
inline PathEnsemble simulate_paths(const ProblemSpec& spec, const FeedbackPolicy& policy, std::span<const double> x0,
                                   double t0, std::size_t n_paths, std::uint64_t seed,
                                   const SimulationOptions& opts = {}) {
    spec.check();
    if (n_paths < 1) throw PreconditionError("simulate_paths needs at least one path");
    if (x0.size() != spec.dim) throw PreconditionError("initial state dimension does not match problem");
    if (policy.grid.space.dim() != spec.dim) throw PreconditionError("policy grid dimension does not match problem");
    const double dt = policy.grid.dt();
    const std::size_t k0 = policy.level_of(t0);
    if (std::abs(policy.grid.time(k0) - t0) > 1e-9 * (1.0 + std::abs(t0)))
        throw PreconditionError("t0 must be a time level of the policy grid");

    PathEnsemble ens;
    ens.n_paths = n_paths;
    ens.seed = seed;
    ens.t0 = policy.grid.time(k0);
    ens.x0.assign(x0.begin(), x0.end());
    ens.dt = dt;
    ens.start_level = k0;
    ens.steps = policy.grid.steps;
    ens.dim = spec.dim;
    ens.noise_dim = spec.noise_dim;
    const auto aff = detail::affine_driver(spec.driver);
    ens.affine = aff.ok;
    ens.kappa = aff.kappa;
    ens.paths.resize(n_paths);

    const std::size_t n = spec.dim, d = spec.noise_dim;
    const double sqdt = std::sqrt(dt);
    auto a_term = [&](double t, std::span<const double> x) {
        const double a = aff.constant_a ? *aff.constant_a : spec.driver(t, x, 0.0, {});
        return std::exp(aff.kappa * (t - ens.t0)) * a;
    };

    parallel_for(n_paths, opts.threads, [&](std::size_t p) {
        const CounterRng rng(seed, p);
        PathRecord rec;
        std::array<double, kMaxDim> x{};
        std::copy(x0.begin(), x0.end(), x.begin());
        const std::span<double> xs(x.data(), n);
        std::size_t impulses = 0;
        if (opts.record_states) {
            rec.states.reserve((ens.steps - k0 + 1) * n);
            rec.increments.reserve((ens.steps - k0) * d);
        }

        auto intervene = [&](std::size_t level) {
            const double t = policy.grid.time(level);
            std::optional<Region> actor;
            while (!rec.cap_hit) {
                const auto dec = policy.at(level, xs);
                if (dec.region == Region::CONT || (actor && dec.region != *actor)) break;
                if (impulses >= opts.impulse_cap) {
                    rec.cap_hit = true;
                    break;
                }
                actor = dec.region;
                const auto& set = dec.region == Region::II_INT ? spec.impulse_V : spec.impulse_U;
                const auto& a = set.actions[static_cast<std::size_t>(dec.action)];
                for (std::size_t k = 0; k < n; ++k) x[k] += a[k];
                if (dec.region == Region::II_INT) {
                    rec.v.push_back({t, a});
                    rec.theta_T += spec.gain(t, a);
                } else {
                    rec.u.push_back({t, a});
                    rec.theta_T -= spec.cost(t, a);
                }
                ++impulses;
            }
        };

        std::array<double, kMaxDim> b{};
        std::array<double, kMaxDim * kMaxDim> sig{};
        std::array<double, kMaxDim> dw{};
        std::uint64_t draw = 0;
        for (std::size_t k = k0; k <= ens.steps; ++k) {
            intervene(k);
            if (opts.record_states) rec.states.insert(rec.states.end(), x.begin(), x.begin() + n);
            if (k == ens.steps) break;
            const double t = policy.grid.time(k);
            const double left = aff.ok ? a_term(t, xs) : 0.0;
            spec.drift_at(t, xs, b);
            spec.vol_at(t, xs, sig);
            for (std::size_t j = 0; j < d; ++j, ++draw) dw[j] = sqdt * rng.normal(draw / 2, draw % 2 == 1);
            if (opts.record_states) rec.increments.insert(rec.increments.end(), dw.begin(), dw.begin() + d);
            std::array<double, kMaxDim> nx{};
            for (std::size_t i = 0; i < n; ++i) {
                nx[i] = x[i] + b[i] * dt;
                for (std::size_t j = 0; j < d; ++j) nx[i] += sig[i * d + j] * dw[j];
            }
            x = nx;
            if (aff.ok) rec.running += 0.5 * dt * (left + a_term(policy.grid.time(k + 1), xs));
        }
        rec.x_T.assign(x.begin(), x.begin() + n);
        ens.paths[p] = std::move(rec);
    });
    return ens;
}

/// Neumaier-compensated sum, taken in index order.
inline double compensated_sum(std::span<const double> xs) {
    double s = 0.0, c = 0.0;
    for (double x : xs) {
        const double t = s + x;
        c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
        s = t;
    }
    return s + c;
}

struct McEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
    std::size_t n_paths = 0;
    std::size_t capped = 0;
};

/// Per-path payoff e^{kappa (T - t0)} (Phi(X_T) + Theta_T) + running integral.
inline std::vector<double> path_payoffs(const PathEnsemble& ens, const ProblemSpec& spec) {
    const auto aff = detail::affine_driver(spec.driver);
    if (!aff.ok)
        throw UnsupportedDriverError("Monte Carlo cost needs f = a(t,x) + kappa y; use the lattice oracle for driver kind " +
                                     std::string(to_string(spec.driver.kind())));
    if (!ens.affine || ens.kappa != aff.kappa)
        throw PreconditionError("ensemble was simulated under a different driver");
    const double disc = std::exp(aff.kappa * (spec.horizon - ens.t0));
    std::vector<double> out(ens.paths.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto& p = ens.paths[i];
        out[i] = disc * (spec.terminal(spec.horizon, p.x_T) + p.theta_T) + p.running;
    }
    return out;
}

/// Sample mean of the path payoffs and its standard error.
inline McEstimate evaluate_cost_mc(const PathEnsemble& ens, const ProblemSpec& spec) {
    const auto pay = path_payoffs(ens, spec);
    McEstimate r;
    r.n_paths = pay.size();
    r.capped = ens.capped();
    const double n = static_cast<double>(pay.size());
    r.estimate = compensated_sum(pay) / n;
    if (pay.size() > 1) {
        std::vector<double> sq(pay.size());
        for (std::size_t i = 0; i < pay.size(); ++i) sq[i] = (pay[i] - r.estimate) * (pay[i] - r.estimate);
        r.stderr_ = std::sqrt(compensated_sum(sq) / (n - 1.0) / n);
    }
    return r;
}

}  // namespace igame
