#pragma once

/**
 * @file problem_model.hpp
 * @brief Game instances: coefficient forms, impulse sets, canonical problems,
 *        and sampled checks of the standing assumptions.
 *
 * A game is described by drift b, volatility sigma, driver f, terminal payoff
 * Phi, intervention cost c (player I, the maximiser), intervention gain chi
 * (paid by player II, the minimiser), two finite impulse action lists and a
 * horizon T. Coefficients are drawn from a closed registry of named forms so
 * that configs stay reproducible.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "igame/errors.hpp"
#include "igame/grid.hpp"
#include "igame/random.hpp"

namespace igame {

enum class Player { I, II };

inline std::string_view to_string(Player p) { return p == Player::I ? "I" : "II"; }

// ---------------------------------------------------------------------------
// Coefficient forms
// ---------------------------------------------------------------------------

enum class FormKind { constant, linear, affine_in_y, cosine, gaussian_bump, tabulated };

inline std::string_view to_string(FormKind k) {
    switch (k) {
        case FormKind::constant: return "constant";
        case FormKind::linear: return "linear";
        case FormKind::affine_in_y: return "affine_in_y";
        case FormKind::cosine: return "cosine";
        case FormKind::gaussian_bump: return "gaussian_bump";
        case FormKind::tabulated: return "tabulated";
    }
    return "?";
}

inline FormKind form_kind_from_string(std::string_view s) {
    for (auto k : {FormKind::constant, FormKind::linear, FormKind::affine_in_y, FormKind::cosine,
                   FormKind::gaussian_bump, FormKind::tabulated})
        if (to_string(k) == s) return k;
    throw ValidationError("unknown coefficient form kind '" + std::string(s) + "'");
}

/// Scalar coefficient g(t, x, y, z) from the form registry.
///
/// Parameter schemas (n = state dimension):
///   constant       [k]                     k
///   linear         [a0, a_t, a_1..a_n]     a0 + a_t t + sum a_i x_i
///   affine_in_y    [a, kappa]              a + kappa y
///   cosine         [A, w]                  A prod_i cos(w x_i)
///   gaussian_bump  [A, width, c_1..c_n]    A exp(-|x - c|^2 / (2 width^2))
///   tabulated      knots per axis + values multilinear in x, row-major values
///
/// Cost forms read the impulse action as x.
class CoefficientForm {
public:
    CoefficientForm() : kind_(FormKind::constant), params_{0.0} {}

    static CoefficientForm make(FormKind kind, std::vector<double> params) {
        if (kind == FormKind::tabulated)
            throw ValidationError("tabulated forms are built with CoefficientForm::tabulated");
        CoefficientForm f;
        f.kind_ = kind;
        f.params_ = std::move(params);
        return f;
    }
    static CoefficientForm constant(double k) { return make(FormKind::constant, {k}); }
    static CoefficientForm linear(double a0, double a_t, std::vector<double> a_x) {
        std::vector<double> p{a0, a_t};
        p.insert(p.end(), a_x.begin(), a_x.end());
        return make(FormKind::linear, std::move(p));
    }
    static CoefficientForm affine_in_y(double a, double kappa) { return make(FormKind::affine_in_y, {a, kappa}); }
    static CoefficientForm cosine(double amplitude, double frequency) {
        return make(FormKind::cosine, {amplitude, frequency});
    }
    static CoefficientForm gaussian_bump(double amplitude, double width, std::vector<double> centre) {
        std::vector<double> p{amplitude, width};
        p.insert(p.end(), centre.begin(), centre.end());
        return make(FormKind::gaussian_bump, std::move(p));
    }
    static CoefficientForm tabulated(std::vector<std::vector<double>> knots, std::vector<double> values) {
        if (knots.empty() || knots.size() > kMaxDim) throw ValidationError("tabulated form needs 1 or 2 knot axes");
        std::size_t expected = 1;
        for (const auto& k : knots) {
            if (k.size() < 2) throw ValidationError("tabulated axis needs at least two knots");
            for (std::size_t i = 1; i < k.size(); ++i)
                if (!(k[i] > k[i - 1])) throw ValidationError("tabulated knots must be strictly increasing");
            expected *= k.size();
        }
        if (values.size() != expected) throw ValidationError("tabulated value count does not match knot grid");
        for (double v : values)
            if (!std::isfinite(v)) throw ValidationError("tabulated values must be finite");
        CoefficientForm f;
        f.kind_ = FormKind::tabulated;
        f.params_.clear();
        f.knots_ = std::move(knots);
        f.values_ = std::move(values);
        return f;
    }

    FormKind kind() const { return kind_; }
    const std::vector<double>& params() const { return params_; }
    const std::vector<std::vector<double>>& knots() const { return knots_; }
    const std::vector<double>& table() const { return values_; }

    /// Expected parameter count for a state of dimension n (0 for tabulated).
    static std::size_t arity(FormKind kind, std::size_t n) {
        switch (kind) {
            case FormKind::constant: return 1;
            case FormKind::linear: return 2 + n;
            case FormKind::affine_in_y: return 2;
            case FormKind::cosine: return 2;
            case FormKind::gaussian_bump: return 2 + n;
            case FormKind::tabulated: return 0;
        }
        return 0;
    }

    /// Throws ValidationError when the form cannot be evaluated on n-vectors.
    void check(std::size_t n, std::string_view what) const {
        if (kind_ == FormKind::tabulated) {
            if (knots_.size() != n)
                throw ValidationError(std::string(what) + ": tabulated form dimension does not match state dimension");
            return;
        }
        if (params_.size() != arity(kind_, n))
            throw ValidationError(std::string(what) + ": form '" + std::string(to_string(kind_)) + "' expects " +
                                  std::to_string(arity(kind_, n)) + " params, got " +
                                  std::to_string(params_.size()));
        for (double p : params_)
            if (!std::isfinite(p)) throw ValidationError(std::string(what) + ": non-finite parameter");
        if (kind_ == FormKind::gaussian_bump && !(params_[1] > 0.0))
            throw ValidationError(std::string(what) + ": gaussian width must be positive");
    }

    bool depends_on_time() const { return kind_ == FormKind::linear && params_[1] != 0.0; }
    bool depends_on_y() const { return kind_ == FormKind::affine_in_y && params_[1] != 0.0; }
    bool depends_on_z() const { return false; }
    bool depends_on_x() const {
        return kind_ == FormKind::cosine || kind_ == FormKind::gaussian_bump || kind_ == FormKind::tabulated ||
               (kind_ == FormKind::linear &&
                std::any_of(params_.begin() + 2, params_.end(), [](double a) { return a != 0.0; }));
    }

    /// Lipschitz constant in y (and z); zero for forms that ignore them.
    double yz_lipschitz() const { return kind_ == FormKind::affine_in_y ? std::abs(params_[1]) : 0.0; }

    double operator()(double t, std::span<const double> x, double y = 0.0, std::span<const double> z = {}) const {
        (void)z;
        switch (kind_) {
            case FormKind::constant: return params_[0];
            case FormKind::linear: {
                double v = params_[0] + params_[1] * t;
                for (std::size_t i = 0; i + 2 < params_.size() && i < x.size(); ++i) v += params_[2 + i] * x[i];
                return v;
            }
            case FormKind::affine_in_y: return params_[0] + params_[1] * y;
            case FormKind::cosine: {
                double v = params_[0];
                for (double xi : x) v *= std::cos(params_[1] * xi);
                return v;
            }
            case FormKind::gaussian_bump: {
                const double w = params_[1];
                double r2 = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    const double d = x[i] - params_[2 + i];
                    r2 += d * d;
                }
                return params_[0] * std::exp(-r2 / (2.0 * w * w));
            }
            case FormKind::tabulated: return eval_table(x);
        }
        return 0.0;
    }

    /// True when every point of the box [lo, hi] can be evaluated.
    bool covers(std::span<const double> lo, std::span<const double> hi) const {
        if (kind_ != FormKind::tabulated) return true;
        for (std::size_t a = 0; a < knots_.size(); ++a)
            if (lo[a] < knots_[a].front() - 1e-12 || hi[a] > knots_[a].back() + 1e-12) return false;
        return true;
    }

    /// Supremum of |g| over [0, horizon] x R^n at y = 0, z = 0; infinity when
    /// unbounded.
    double sup_abs(double horizon) const {
        switch (kind_) {
            case FormKind::constant: return std::abs(params_[0]);
            case FormKind::cosine:
            case FormKind::gaussian_bump: return std::abs(params_[0]);
            case FormKind::tabulated: {
                double m = 0.0;
                for (double v : values_) m = std::max(m, std::abs(v));
                return m;
            }
            case FormKind::affine_in_y: return std::abs(params_[0]);
            case FormKind::linear:
                return depends_on_x() ? std::numeric_limits<double>::infinity()
                                      : std::max(std::abs(params_[0]), std::abs(params_[0] + params_[1] * horizon));
        }
        return std::numeric_limits<double>::infinity();
    }

private:
    double eval_table(std::span<const double> x) const {
        const std::size_t n = knots_.size();
        if (x.size() < n) throw DomainError("tabulated form queried with too few coordinates");
        std::array<std::size_t, kMaxDim> lo{};
        std::array<double, kMaxDim> w{};
        for (std::size_t a = 0; a < n; ++a) {
            const auto& k = knots_[a];
            const double slack = 1e-12 * (1.0 + std::abs(k.back() - k.front()));
            if (!(x[a] >= k.front() - slack && x[a] <= k.back() + slack))
                throw DomainError("tabulated form queried outside its knot box");
            const double xa = std::clamp(x[a], k.front(), k.back());
            auto it = std::upper_bound(k.begin(), k.end(), xa);
            std::size_t i = it == k.begin() ? 0 : static_cast<std::size_t>(it - k.begin()) - 1;
            if (i + 1 >= k.size()) i = k.size() - 2;
            lo[a] = i;
            w[a] = (xa - k[i]) / (k[i + 1] - k[i]);
        }
        if (n == 1) return (1.0 - w[0]) * values_[lo[0]] + w[0] * values_[lo[0] + 1];
        const std::size_t n1 = knots_[1].size();
        double acc = 0.0;
        for (int c0 = 0; c0 < 2; ++c0)
            for (int c1 = 0; c1 < 2; ++c1) {
                const double ww = (c0 ? w[0] : 1.0 - w[0]) * (c1 ? w[1] : 1.0 - w[1]);
                if (ww != 0.0) acc += ww * values_[(lo[0] + c0) * n1 + lo[1] + c1];
            }
        return acc;
    }

    FormKind kind_;
    std::vector<double> params_;
    std::vector<std::vector<double>> knots_;
    std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Problem specification
// ---------------------------------------------------------------------------

/// Finite list of impulse shifts available to one player.
struct DiscreteImpulseSet {
    std::vector<std::vector<double>> actions;
    Player label = Player::I;

    bool empty() const { return actions.empty(); }
    std::size_t size() const { return actions.size(); }
};

/// A two-player zero-sum impulse game on [0, T] x R^n.
struct ProblemSpec {
    std::string name = "inline";
    std::size_t dim = 1;        ///< state dimension n
    std::size_t noise_dim = 1;  ///< Brownian dimension d
    double horizon = 1.0;

    std::vector<CoefficientForm> drift;  ///< n components
    std::vector<CoefficientForm> vol;    ///< n x d, row-major
    CoefficientForm driver;
    CoefficientForm terminal;
    CoefficientForm cost_c;    ///< player I intervention cost c(t, xi)
    CoefficientForm gain_chi;  ///< player II intervention cost chi(t, eta), a gain for player I
    CoefficientForm h_floor = CoefficientForm::constant(0.0);
    DiscreteImpulseSet impulse_U{{}, Player::I};
    DiscreteImpulseSet impulse_V{{}, Player::II};

    /// Structural invariants; throws ValidationError.
    void check() const {
        if (dim < 1 || dim > kMaxDim) throw ValidationError("state dimension must be 1 or 2");
        if (noise_dim < 1 || noise_dim > kMaxDim) throw ValidationError("noise dimension must be 1 or 2");
        if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("horizon must be positive");
        if (drift.size() != dim) throw ValidationError("drift needs one form per state component");
        if (vol.size() != dim * noise_dim) throw ValidationError("volatility needs n*d forms");
        for (const auto& f : drift) f.check(dim, "drift");
        for (const auto& f : vol) f.check(dim, "vol");
        driver.check(dim, "driver");
        terminal.check(dim, "terminal");
        cost_c.check(dim, "cost_c");
        gain_chi.check(dim, "gain_chi");
        h_floor.check(dim, "h_floor");
        for (const auto* set : {&impulse_U, &impulse_V}) {
            for (std::size_t i = 0; i < set->actions.size(); ++i) {
                const auto& a = set->actions[i];
                if (a.size() != dim) throw ValidationError("impulse action has wrong dimension");
                for (double v : a)
                    if (!std::isfinite(v)) throw ValidationError("impulse action must be finite");
                for (std::size_t j = 0; j < i; ++j)
                    if (set->actions[j] == a) throw ValidationError("duplicate impulse action");
            }
        }
    }

    double cost(double t, std::span<const double> action) const { return cost_c(t, action); }
    double gain(double t, std::span<const double> action) const { return gain_chi(t, action); }

    /// b(t, x) into out[0..n).
    void drift_at(double t, std::span<const double> x, std::span<double> out) const {
        for (std::size_t i = 0; i < dim; ++i) out[i] = drift[i](t, x);
    }

    /// sigma(t, x) into out (n x d row-major).
    void vol_at(double t, std::span<const double> x, std::span<double> out) const {
        for (std::size_t i = 0; i < dim * noise_dim; ++i) out[i] = vol[i](t, x);
    }

    /// a = sigma sigma^T at (t, x), n x n row-major into out.
    void diffusion_at(double t, std::span<const double> x, std::span<double> out) const {
        std::array<double, kMaxDim * kMaxDim> s{};
        vol_at(t, x, s);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < noise_dim; ++k) acc += s[i * noise_dim + k] * s[j * noise_dim + k];
                out[i * dim + j] = acc;
            }
    }

    bool time_homogeneous() const {
        auto td = [](const CoefficientForm& f) { return f.depends_on_time(); };
        return std::none_of(drift.begin(), drift.end(), td) && std::none_of(vol.begin(), vol.end(), td) &&
               !driver.depends_on_time();
    }

    /// Lipschitz constant of the driver in (y, z).
    double driver_lipschitz() const { return driver.yz_lipschitz(); }
};

/// All four coefficient evaluations at one point.
struct CoefficientValues {
    std::vector<double> b;
    std::vector<double> sigma;  ///< n x d row-major
    double f = 0.0;
    double phi = 0.0;
};

inline CoefficientValues evaluate_coefficients(const ProblemSpec& spec, double t, std::span<const double> x,
                                               double y, std::span<const double> z) {
    if (!(t >= 0.0 && t <= spec.horizon)) throw PreconditionError("evaluation time outside [0, T]");
    if (x.size() != spec.dim) throw PreconditionError("state has wrong dimension");
    for (double v : x)
        if (!std::isfinite(v)) throw PreconditionError("state must be finite");
    CoefficientValues out;
    out.b.resize(spec.dim);
    out.sigma.resize(spec.dim * spec.noise_dim);
    spec.drift_at(t, x, out.b);
    spec.vol_at(t, x, out.sigma);
    out.f = spec.driver(t, x, y, z);
    out.phi = spec.terminal(t, x);
    return out;
}

// ---------------------------------------------------------------------------
// Canonical problems
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::vector<double>> ladder(double step, int count) {
    std::vector<std::vector<double>> out;
    for (int k = 1; k <= count; ++k) out.push_back({step * k});
    return out;
}

inline ProblemSpec scalar_game(std::string name, double sigma, CoefficientForm driver, CoefficientForm terminal,
                               double c, double chi, double h) {
    ProblemSpec p;
    p.name = std::move(name);
    p.dim = 1;
    p.noise_dim = 1;
    p.horizon = 1.0;
    p.drift = {CoefficientForm::constant(0.0)};
    p.vol = {CoefficientForm::constant(sigma)};
    p.driver = std::move(driver);
    p.terminal = std::move(terminal);
    p.cost_c = CoefficientForm::constant(c);
    p.gain_chi = CoefficientForm::constant(chi);
    p.h_floor = CoefficientForm::constant(h);
    p.impulse_U = {ladder(0.5, 6), Player::I};
    p.impulse_V = {ladder(-0.5, 6), Player::II};
    return p;
}

}  // namespace detail

/// Terminal level of the frozen problem P0.
inline constexpr double kFrozenLevel = 2.0;

inline std::vector<std::string> canonical_problem_names() { return {"P0", "P1", "P2", "P3"}; }

/// Canonical problems, by id ("P0".."P3") or alias ("frozen", "heat",
/// "discount", "game"). All share U = {0.5, ..., 3.0}, V = {-0.5, ..., -3.0}
/// and T = 1.
inline ProblemSpec canonical_problem(std::string_view name) {
    using F = CoefficientForm;
    if (name == "P0" || name == "frozen")
        return detail::scalar_game("P0", 0.0, F::constant(0.0), F::constant(kFrozenLevel), 1e3, 0.9e3, 50.0);
    if (name == "P1" || name == "heat")
        return detail::scalar_game("P1", 1.0, F::constant(0.0), F::cosine(1.0, 1.0), 10.0, 9.0, 0.5);
    if (name == "P2" || name == "discount")
        return detail::scalar_game("P2", 1.0, F::affine_in_y(0.0, -0.1), F::cosine(1.0, 1.0), 10.0, 9.0, 0.5);
    if (name == "P3" || name == "game")
        return detail::scalar_game("P3", 0.5, F::constant(0.0), F::cosine(1.0, 1.0), 1.0, 0.6, 0.3);
    throw ValidationError("unknown problem '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Assumption validation
// ---------------------------------------------------------------------------

/// One falsified inequality with the point that falsified it.
struct AssumptionViolation {
    std::string id;               ///< "a1", "a2", "a3", "a4", "A4", "A4-reverse", "domain"
    std::vector<double> witness;  ///< id-specific point, see validate_assumptions
    double lhs = 0.0;
    double rhs = 0.0;
};

struct AssumptionReport {
    bool a1_pass = true;
    bool a2_pass = true;
    bool a3_pass = true;
    bool a4_pass = true;
    bool A4_monotone_pass = true;          ///< f strictly increasing in y, as literally stated
    bool A4_reverse_monotone_pass = true;  ///< f strictly decreasing in y
    bool domain_pass = true;               ///< every form evaluable on the sampling box
    std::vector<AssumptionViolation> violations;
    std::vector<std::string> warnings;
    double lipschitz_b = 0.0;
    double lipschitz_sigma = 0.0;
    double lipschitz_f = 0.0;

    /// Gate used before solving: cost structure and domain checks.
    /// A4 is informational only (see A4_monotone_pass / reverse).
    bool passed() const { return a1_pass && a2_pass && a3_pass && a4_pass && domain_pass; }
};

struct ValidationOptions {
    /// Sampling box per state axis; defaults to [-4 pi, 4 pi].
    std::vector<std::array<double, 2>> box;
    double y_range = 10.0;  ///< y samples drawn from [-y_range, y_range]
};

/// Checks (a1)-(a4), (A4) and sampled Lipschitz ratios on deterministic
/// Halton points.
///
/// Witness layouts: a1 (t, action...); a2 (t, y1..., z..., y2...);
/// a3 (t, z1..., z2...); a4 (t, t_check, action...); A4 (t, x..., y1, y2);
/// domain (x...). Only the first violation per id is kept. The time pair
/// (0, T) is always the first one tested for a4.
inline AssumptionReport validate_assumptions(const ProblemSpec& spec, int sample_budget, std::uint64_t seed,
                                             const ValidationOptions& opts = {}) {
    if (sample_budget < 1) throw PreconditionError("sample budget must be at least 1");
    spec.check();
    AssumptionReport rep;
    const std::size_t n = spec.dim;
    const double T = spec.horizon;

    std::vector<std::array<double, 2>> box = opts.box;
    if (box.empty()) box.assign(n, {-4.0 * std::numbers::pi, 4.0 * std::numbers::pi});

    auto record = [&](bool& flag, std::string id, std::vector<double> w, double lhs, double rhs) {
        if (flag) rep.violations.push_back({std::move(id), std::move(w), lhs, rhs});
        flag = false;
    };
    auto cat = [](std::initializer_list<std::span<const double>> parts, std::vector<double> head) {
        for (auto p : parts) head.insert(head.end(), p.begin(), p.end());
        return head;
    };

    const auto& U = spec.impulse_U.actions;
    const auto& V = spec.impulse_V.actions;

    // Time samples, always including both ends of the horizon.
    std::vector<double> times{0.0, T};
    for (int i = 0; i < sample_budget; ++i) times.push_back(T * halton(static_cast<std::uint64_t>(i), 0, seed));

    // Domain coverage of tabulated forms over the sampling box.
    {
        std::vector<double> lo(n), hi(n);
        for (std::size_t a = 0; a < n; ++a) lo[a] = box[a][0], hi[a] = box[a][1];
        std::vector<const CoefficientForm*> state_forms{&spec.driver, &spec.terminal};
        for (const auto& f : spec.drift) state_forms.push_back(&f);
        for (const auto& f : spec.vol) state_forms.push_back(&f);
        for (const auto* f : state_forms)
            if (!f->covers(lo, hi)) record(rep.domain_pass, "domain", lo, 0.0, 0.0);
    }

    auto safe = [](auto&& fn) -> std::pair<bool, double> {
        try {
            return {true, fn()};
        } catch (const DomainError&) {
            return {false, 0.0};
        }
    };

    for (double t : times) {
        const double h = spec.h_floor(t, std::vector<double>(n, 0.0));
        if (!(h > 0.0)) record(rep.a2_pass, "a2", {t}, h, 0.0);
        // (a1) strictly positive costs
        for (const auto& y : U) {
            auto [ok, c] = safe([&] { return spec.cost(t, y); });
            if (ok && !(c > 0.0)) record(rep.a1_pass, "a1", cat({y}, {t}), c, 0.0);
        }
        for (const auto& z : V) {
            auto [ok, x] = safe([&] { return spec.gain(t, z); });
            if (ok && !(x > 0.0)) record(rep.a1_pass, "a1", cat({z}, {t}), x, 0.0);
        }
        // (a2) c(y1+z+y2) <= c(y1) - chi(z) + c(y2) - h, with y1, z, y2 in U
        std::vector<double> sum(n);
        for (const auto& y1 : U)
            for (const auto& z : U)
                for (const auto& y2 : U) {
                    for (std::size_t a = 0; a < n; ++a) sum[a] = y1[a] + z[a] + y2[a];
                    auto [ok, lhs] = safe([&] { return spec.cost(t, sum); });
                    auto [ok2, rhs] = safe([&] { return spec.cost(t, y1) - spec.gain(t, z) + spec.cost(t, y2) - h; });
                    if (ok && ok2 && lhs > rhs) record(rep.a2_pass, "a2", cat({y1, z, y2}, {t}), lhs, rhs);
                }
        // (a3) chi(z1+z2) <= chi(z1) + chi(z2) - h
        for (const auto& z1 : V)
            for (const auto& z2 : V) {
                for (std::size_t a = 0; a < n; ++a) sum[a] = z1[a] + z2[a];
                auto [ok, lhs] = safe([&] { return spec.gain(t, sum); });
                auto [ok2, rhs] = safe([&] { return spec.gain(t, z1) + spec.gain(t, z2) - h; });
                if (ok && ok2 && lhs > rhs) record(rep.a3_pass, "a3", cat({z1, z2}, {t}), lhs, rhs);
            }
    }

    // (a4) costs non-increasing in time: c(t, y) >= c(t', y) for t <= t'.
    {
        std::vector<std::pair<double, double>> pairs{{0.0, T}};
        std::vector<double> sorted(times.begin() + 2, times.end());
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 1; i < sorted.size(); ++i) pairs.emplace_back(sorted[i - 1], sorted[i]);
        for (auto [t, tc] : pairs) {
            for (const auto& y : U) {
                auto [ok, a] = safe([&] { return spec.cost(t, y); });
                auto [ok2, b] = safe([&] { return spec.cost(tc, y); });
                if (ok && ok2 && a < b) record(rep.a4_pass, "a4", cat({y}, {t, tc}), a, b);
            }
            for (const auto& z : V) {
                auto [ok, a] = safe([&] { return spec.gain(t, z); });
                auto [ok2, b] = safe([&] { return spec.gain(tc, z); });
                if (ok && ok2 && a < b) record(rep.a4_pass, "a4", cat({z}, {t, tc}), a, b);
            }
        }
    }

    // Sampled states, strict monotonicity in y, Lipschitz ratios.
    auto sample_x = [&](std::uint64_t i, unsigned offset) {
        std::vector<double> x(n);
        for (std::size_t a = 0; a < n; ++a)
            x[a] = box[a][0] + (box[a][1] - box[a][0]) * halton(i, offset + static_cast<unsigned>(a), seed);
        return x;
    };
    std::vector<double> zero_z(spec.noise_dim, 0.0);
    for (int i = 0; i < sample_budget; ++i) {
        const auto k = static_cast<std::uint64_t>(i);
        const double t = T * halton(k, 0, seed);
        const auto x1 = sample_x(k, 1);
        const auto x2 = sample_x(k, 4);
        double ya = opts.y_range * (2.0 * halton(k, 7, seed) - 1.0);
        double yb = opts.y_range * (2.0 * halton(k, 8, seed) - 1.0);
        if (ya == yb) yb = ya + 1.0;
        const double y1 = std::min(ya, yb), y2 = std::max(ya, yb);

        auto [ok1, f1] = safe([&] { return spec.driver(t, x1, y1, zero_z); });
        auto [ok2, f2] = safe([&] { return spec.driver(t, x1, y2, zero_z); });
        if (ok1 && ok2) {
            auto w = cat({x1}, {t});
            w.push_back(y1);
            w.push_back(y2);
            if (!(f2 > f1)) record(rep.A4_monotone_pass, "A4", w, f1, f2);
            if (!(f2 < f1)) record(rep.A4_reverse_monotone_pass, "A4-reverse", w, f1, f2);
        }

        double dist = 0.0;
        for (std::size_t a = 0; a < n; ++a) dist += (x1[a] - x2[a]) * (x1[a] - x2[a]);
        dist = std::sqrt(dist);
        if (dist > 0.0) {
            try {
                for (const auto& f : spec.drift)
                    rep.lipschitz_b = std::max(rep.lipschitz_b, std::abs(f(t, x1) - f(t, x2)) / dist);
                for (const auto& f : spec.vol)
                    rep.lipschitz_sigma = std::max(rep.lipschitz_sigma, std::abs(f(t, x1) - f(t, x2)) / dist);
                const double d = std::hypot(dist, y2 - y1);
                rep.lipschitz_f =
                    std::max(rep.lipschitz_f, std::abs(spec.driver(t, x1, y1, zero_z) - spec.driver(t, x2, y2, zero_z)) / d);
            } catch (const DomainError&) {
            }
        }
    }

    // U inside V is stated but never exercised; warn only.
    for (const auto& y : U)
        if (std::find(V.begin(), V.end(), y) == V.end()) {
            rep.warnings.push_back("impulse set U is not contained in V");
            break;
        }
    return rep;
}

}  // namespace igame
