#pragma once

/**
 * @file intervention.hpp
 * @brief Nonlocal intervention operators on one time slice.
 *
 *   lower:  M^- V(t,x) = max_{y in U} [ V(t, x+y) - c(t, y) ]   (player I)
 *   upper:  M^+ V(t,x) = min_{z in V} [ V(t, x+z) + chi(t, z) ]  (player II)
 *
 * Shifts that leave the grid box are excluded. When no shift stays inside,
 * the obstacle is nonbinding and reported as -inf (lower) or +inf (upper).
 * Off-node targets are read by multilinear interpolation.
 */

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "igame/grid.hpp"
#include "igame/parallel.hpp"
#include "igame/problem_model.hpp"

namespace igame {

/// Values of V(t, .) on a spatial grid.
struct GridSlice {
    Grid grid;
    std::vector<double> values;
    double time = 0.0;
};

struct ObstacleSlice {
    std::vector<double> values;          ///< +-inf where nonbinding
    std::vector<int> best_action;        ///< index into the impulse set, -1 where nonbinding
    std::vector<std::uint8_t> binding;   ///< obstacle within tolerance of the input slice

    bool defined(std::size_t node) const { return best_action[node] >= 0; }
};

struct InterventionOptions {
    double binding_tol = 1e-8;  ///< relative: |obstacle - V| <= tol (1 + |V|)
    double cost_scale = 1.0;    ///< multiplies c and chi (e^{theta t} under the exponential transform)
    int threads = 1;
};

namespace detail {

struct ShiftPlan {
    bool aligned = true;
    std::array<long, kMaxDim> offset{};
    Point shift{};
    double cost = 0.0;  ///< signed: -c for the lower obstacle, +chi for the upper
};

inline std::vector<ShiftPlan> plan_shifts(const Grid& g, const DiscreteImpulseSet& set, double t,
                                          const CoefficientForm& cost, double sign, double scale) {
    std::vector<ShiftPlan> plans;
    plans.reserve(set.size());
    for (const auto& a : set.actions) {
        ShiftPlan p;
        for (std::size_t k = 0; k < g.dim(); ++k) {
            p.shift[k] = a[k];
            const double q = a[k] / g.axis(k).step();
            const double r = std::round(q);
            if (std::abs(q - r) <= 1e-9) {
                p.offset[k] = static_cast<long>(r);
            } else {
                p.aligned = false;
            }
        }
        p.cost = sign * scale * cost(t, a);
        plans.push_back(p);
    }
    return plans;
}

/// Value of V at node+shift, or nullopt-like NaN when the target leaves the box.
inline double shifted_value(const Grid& g, std::span<const double> values, std::size_t node, const ShiftPlan& p) {
    if (p.aligned) {
        const auto idx = g.multi_index(node);
        std::size_t target = 0;
        for (std::size_t k = 0; k < g.dim(); ++k) {
            const long j = static_cast<long>(idx[k]) + p.offset[k];
            if (j < 0 || j >= static_cast<long>(g.axis(k).size())) return std::numeric_limits<double>::quiet_NaN();
            target += static_cast<std::size_t>(j) * g.stride(k);
        }
        return values[target];
    }
    Point x = g.coords(node);
    for (std::size_t k = 0; k < g.dim(); ++k) x[k] += p.shift[k];
    const std::span<const double> xs(x.data(), g.dim());
    if (!grid_contains(g, xs)) return std::numeric_limits<double>::quiet_NaN();
    return interpolate(g, values, xs);
}

template <bool Lower>
ObstacleSlice obstacle(const GridSlice& slice, const DiscreteImpulseSet& set, const CoefficientForm& cost,
                       const InterventionOptions& opts) {
    const Grid& g = slice.grid;
    const std::size_t n = g.size();
    const auto plans = plan_shifts(g, set, slice.time, cost, Lower ? -1.0 : 1.0, opts.cost_scale);
    constexpr double none = Lower ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();

    ObstacleSlice out;
    out.values.assign(n, none);
    out.best_action.assign(n, -1);
    out.binding.assign(n, 0);
    parallel_for(n, opts.threads, [&](std::size_t i) {
        double best = none;
        int arg = -1;
        for (std::size_t k = 0; k < plans.size(); ++k) {
            const double v = shifted_value(g, slice.values, i, plans[k]);
            if (std::isnan(v)) continue;
            const double cand = v + plans[k].cost;
            if (arg < 0 || (Lower ? cand > best : cand < best)) {
                best = cand;
                arg = static_cast<int>(k);
            }
        }
        out.values[i] = best;
        out.best_action[i] = arg;
        if (arg >= 0) {
            const double vi = slice.values[i];
            out.binding[i] = std::abs(best - vi) <= opts.binding_tol * (1.0 + std::abs(vi));
        }
    });
    return out;
}

}  // namespace detail

/// max_{y in U} [V(t, x+y) - c(t, y)] per node; ties go to the smallest action index.
inline ObstacleSlice lower_obstacle(const GridSlice& slice, const ProblemSpec& spec,
                                    const InterventionOptions& opts = {}) {
    return detail::obstacle<true>(slice, spec.impulse_U, spec.cost_c, opts);
}

/// min_{z in V} [V(t, x+z) + chi(t, z)] per node; ties go to the smallest action index.
inline ObstacleSlice upper_obstacle(const GridSlice& slice, const ProblemSpec& spec,
                                    const InterventionOptions& opts = {}) {
    return detail::obstacle<false>(slice, spec.impulse_V, spec.gain_chi, opts);
}

}  // namespace igame
