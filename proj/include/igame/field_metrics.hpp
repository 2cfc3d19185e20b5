#pragma once

/**
 * @file field_metrics.hpp
 * @brief Diagnostics on solved fields: discrete regularity quotients, the
 *        terminal-layer constant, the a-priori bound, and the projection
 *        identity.
 */

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "igame/hjbi_fd.hpp"
#include "igame/problem_model.hpp"

namespace igame {

/// max |V(t,x+dx e_k) - V(t,x)| / dx over all levels and adjacent interior node pairs.
inline double lipschitz_x_constant(const ValueField& f, double interior_fraction = 0.8) {
    const Grid& g = f.grid.space;
    double best = 0.0;
    for (std::size_t k = 0; k < f.levels(); ++k) {
        const auto v = f.level(k);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!g.in_interior(i, interior_fraction)) continue;
            const auto idx = g.multi_index(i);
            for (std::size_t a = 0; a < g.dim(); ++a) {
                if (idx[a] + 1 >= g.axis(a).size()) continue;
                const std::size_t j = i + g.stride(a);
                if (!g.in_interior(j, interior_fraction)) continue;
                best = std::max(best, std::abs(v[j] - v[i]) / g.axis(a).step());
            }
        }
    }
    return best;
}

/// Time lags used by the Hoelder quotient: powers of two and the horizon
/// divided by powers of two, so coarse and fine grids share the long lags.
inline std::vector<std::size_t> holder_lags(std::size_t steps) {
    std::set<std::size_t> lags;
    for (std::size_t l = 1; l <= steps; l *= 2) lags.insert(l);
    for (std::size_t d = 1; d <= steps; d *= 2) {
        const auto l = static_cast<std::size_t>(std::llround(static_cast<double>(steps) / static_cast<double>(d)));
        if (l >= 1) lags.insert(l);
    }
    return {lags.begin(), lags.end()};
}

/// max |V(t+h,x) - V(t,x)| / sqrt(h) over interior nodes, levels and holder_lags.
inline double holder_t_constant(const ValueField& f, double interior_fraction = 0.8) {
    const Grid& g = f.grid.space;
    const double dt = f.grid.dt();
    double best = 0.0;
    for (const std::size_t lag : holder_lags(f.grid.steps)) {
        const double denom = std::sqrt(static_cast<double>(lag) * dt);
        for (std::size_t k = 0; k + lag < f.levels(); ++k) {
            const auto a = f.level(k);
            const auto b = f.level(k + lag);
            for (std::size_t i = 0; i < g.size(); ++i)
                if (g.in_interior(i, interior_fraction)) best = std::max(best, std::abs(b[i] - a[i]) / denom);
        }
    }
    return best;
}

/// max over levels with 0 < T - t <= window * T of sup_x |V(t,x) - V(T,x)| / sqrt(T - t).
inline double terminal_bound_constant(const ValueField& f, double window = 0.1, double interior_fraction = 0.8) {
    const Grid& g = f.grid.space;
    const double T = f.grid.horizon;
    const auto term = f.level(f.grid.steps);
    double best = 0.0;
    for (std::size_t k = 0; k < f.grid.steps; ++k) {
        const double gap = T - f.grid.time(k);
        if (gap > window * T * (1.0 + 1e-12)) continue;
        const auto v = f.level(k);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g.in_interior(i, interior_fraction)) best = std::max(best, std::abs(v[i] - term[i]) / std::sqrt(gap));
    }
    return best;
}

/// A-priori bound (sup|Phi| + T sup|f(.,0,0)|) e^{L_f T} + max chi; infinite
/// when a coefficient is unbounded.
inline double boundedness_bound(const ProblemSpec& spec) {
    const double T = spec.horizon;
    double chi = 0.0;
    for (const auto& a : spec.impulse_V.actions) {
        chi = std::max(chi, spec.gain(0.0, a));
        chi = std::max(chi, spec.gain(T, a));
    }
    const double f0 = spec.driver.kind() == FormKind::affine_in_y ? std::abs(spec.driver.params()[0])
                                                                  : spec.driver.sup_abs(T);
    return (spec.terminal.sup_abs(T) + T * f0) * std::exp(spec.driver_lipschitz() * T) + chi;
}

inline double sup_abs_value(const ValueField& f) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
}

/// Nodes where the stored value differs from min(upper, max(continuation, lower))
/// of the recorded final projection pass. Needs a projection record.
inline std::size_t projection_identity_violations(const ValueField& f) {
    if (!f.has_projection_record()) throw PreconditionError("field has no projection record");
    std::size_t bad = 0;
    for (std::size_t i = 0; i < f.values.size(); ++i)
        if (f.values[i] != std::min(f.upper[i], std::max(f.continuation[i], f.lower[i]))) ++bad;
    return bad;
}

/// Largest violation of lower - tol <= V <= upper + tol (0 when sandwiched).
inline double obstacle_sandwich_gap(const ValueField& f) {
    if (!f.has_projection_record()) throw PreconditionError("field has no projection record");
    double worst = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        if (std::isfinite(f.upper[i])) worst = std::max(worst, f.values[i] - f.upper[i]);
        if (std::isfinite(f.lower[i])) worst = std::max(worst, f.lower[i] - f.values[i]);
    }
    return worst;
}

}  // namespace igame
