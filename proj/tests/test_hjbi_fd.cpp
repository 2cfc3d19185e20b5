#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "igame/field_metrics.hpp"
#include "igame/hjbi_fd.hpp"
#include "test_support.hpp"

using namespace igame;
using igame::test::scalar_spec;
using igame::test::table_1d;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
const double kPi = std::numbers::pi;

ObstacleSlice obstacle_of(std::vector<double> v) {
    ObstacleSlice o;
    o.best_action.assign(v.size(), 0);
    o.binding.assign(v.size(), 0);
    o.values = std::move(v);
    return o;
}

/// Hand example: nodes -2..2, Phi = (0,0,0,0,1), U = {+2} c = 1, V = {-2} chi = 0.6.
ProblemSpec five_node_game(double sigma = 0.0) {
    return scalar_spec(0.0, sigma, table_1d(-2.0, 1.0, {0, 0, 0, 0, 1}), 1.0, 0.6, {2.0}, {-2.0});
}

double value_at(const ValueField& f, std::size_t level, double x) {
    const std::vector<double> p{x};
    return interpolate(f.grid.space, f.level(level), p);
}

}  // namespace

TEST(Hamiltonian, ScalarExample) {
    const auto spec = scalar_spec(1.0, 1.0, CoefficientForm::constant(0), 1, 0.6, {1}, {-1});
    const std::vector<double> x{0.3}, p{2.0}, Q{4.0};
    EXPECT_EQ(hamiltonian(spec, 0.0, x, 0.0, p, Q), 4.0);
}

TEST(Hamiltonian, DriverOnly) {
    const auto spec = scalar_spec(0.0, 0.0, CoefficientForm::constant(0), 1, 0.6, {1}, {-1}, 0.1,
                                  CoefficientForm::affine_in_y(0.0, -0.1));
    const std::vector<double> x{0.3}, p{2.0}, Q{4.0};
    EXPECT_DOUBLE_EQ(hamiltonian(spec, 0.0, x, 10.0, p, Q), -1.0);
}

TEST(Hamiltonian, TwoDimensionalTrace) {
    ProblemSpec spec = canonical_problem("P1");
    spec.dim = 2;
    spec.noise_dim = 2;
    spec.drift = {CoefficientForm::constant(1), CoefficientForm::constant(1)};
    spec.vol = {CoefficientForm::constant(1), CoefficientForm::constant(0), CoefficientForm::constant(0),
                CoefficientForm::constant(1)};
    spec.impulse_U.actions = {{1.0, 0.0}};
    spec.impulse_V.actions = {{-1.0, 0.0}};
    const std::vector<double> x{0.0, 0.0}, p{1.0, -1.0}, Q{2.0, 0.0, 0.0, 4.0};
    EXPECT_EQ(hamiltonian(spec, 0.0, x, 0.0, p, Q), 3.0);
}

TEST(StepBackward, ConstantSlice) {
    const auto spec = canonical_problem("P1");
    const auto g = grid_from_box({{-3.0, 3.0}}, 0.5);
    const SpaceTimeGrid st{g, 100, 1.0};
    const GridSlice next{g, std::vector<double>(g.size(), 1.75), 0.5};
    const auto out = step_backward(spec, st, next);
    for (double v : out.values) EXPECT_EQ(v, 1.75);
    EXPECT_DOUBLE_EQ(out.time, 0.49);
}

TEST(StepBackward, LinearSliceUnderDrift) {
    const auto spec = scalar_spec(1.0, 0.0, CoefficientForm::constant(0), 1, 0.6, {1}, {-1});
    const auto g = grid_from_box({{-1.0, 1.0}}, 0.1);
    const SpaceTimeGrid st{g, 100, 1.0};
    GridSlice next{g, std::vector<double>(g.size()), 0.5};
    for (std::size_t i = 0; i < g.size(); ++i) next.values[i] = g.coords(i)[0];
    const auto out = step_backward(spec, st, next);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) EXPECT_NEAR(out.values[i], next.values[i] + 0.01, 1e-14);
}

TEST(StepBackward, QuadraticSliceUnderDiffusion) {
    const auto spec = scalar_spec(0.0, 1.0, CoefficientForm::constant(0), 1, 0.6, {1}, {-1});
    const auto g = grid_from_box({{-1.0, 1.0}}, 0.2);
    const SpaceTimeGrid st{g, 100, 1.0};
    GridSlice next{g, std::vector<double>(g.size()), 0.5};
    for (std::size_t i = 0; i < g.size(); ++i) next.values[i] = g.coords(i)[0] * g.coords(i)[0];
    const auto out = step_backward(spec, st, next);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) EXPECT_NEAR(out.values[i], next.values[i] + 0.01, 1e-13);
}

TEST(StepBackward, CflViolationIsAnError) {
    const auto spec = canonical_problem("P1");
    const auto g = grid_from_box({{-1.0, 1.0}}, 0.1);
    const SpaceTimeGrid st{g, 10, 1.0};
    const GridSlice next{g, std::vector<double>(g.size(), 0.0), 1.0};
    EXPECT_THROW(step_backward(spec, st, next), CflError);
    EXPECT_THROW(make_space_time_grid(spec, g, 0.9, 10), CflError);
}

TEST(SpaceTimeGrid, CflStepRespectsBound) {
    const auto spec = canonical_problem("P1");
    const auto st = make_space_time_grid(spec, grid_from_box({{-4 * kPi, 4 * kPi}}, 0.05), 0.9);
    EXPECT_LE(st.dt(), 0.9 * 0.05 * 0.05 / 1.0);
    EXPECT_GT(st.dt(), 0.9 * 0.05 * 0.05 / 1.0 * 0.99);
}

TEST(ProjectDoubleObstacle, Examples) {
    const auto g = grid_from_box({{0.0, 2.0}}, 1.0);
    const GridSlice cont{g, {3.0, 3.0, 3.0}, 0.0};
    const auto out = project_double_obstacle(cont, obstacle_of({4.0, 1.0, 5.0}), obstacle_of({10.0, 2.0, 4.0}));
    EXPECT_EQ(out.values[0], 4.0);
    EXPECT_EQ(out.values[1], 2.0);
    EXPECT_EQ(out.values[2], 4.0);
    const auto free = project_double_obstacle(cont, obstacle_of({-inf, -inf, -inf}), obstacle_of({inf, inf, inf}));
    EXPECT_EQ(free.values, cont.values);
}

TEST(TerminalProjection, ProhibitiveCostsLeavePhi) {
    for (const char* name : {"P0", "P1"}) {
        const auto spec = canonical_problem(name);
        const auto g = grid_from_box({{-4 * kPi, 4 * kPi}}, 0.1);
        const auto r = terminal_projection(spec, g);
        EXPECT_EQ(r.iterations, 1);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto x = g.coords(i);
            EXPECT_EQ(r.slice.values[i], spec.terminal(1.0, std::span<const double>(x.data(), 1)));
            EXPECT_EQ(r.region[i], Region::CONT);
        }
    }
}

TEST(TerminalProjection, FiveNodeHandFixedPoint) {
    const auto spec = five_node_game();
    const auto r = terminal_projection(spec, grid_from_box({{-2.0, 2.0}}, 1.0));
    EXPECT_EQ(r.slice.values, (std::vector<double>{0, 0, 0, 0, 0.6}));
    EXPECT_EQ(r.region[4], Region::II_INT);
    EXPECT_EQ(r.action[4], 0);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(r.region[i], Region::CONT) << i;
}

TEST(TerminalProjection, ConstantPayoffStaysConstant) {
    const auto spec = scalar_spec(0, 1, CoefficientForm::constant(1.5), 0.2, 0.1, {0.5, 1.0}, {-0.5, -1.0});
    const auto r = terminal_projection(spec, grid_from_box({{-3.0, 3.0}}, 0.5));
    for (double v : r.slice.values) EXPECT_EQ(v, 1.5);
}

TEST(TerminalProjection, IllPosedCostsDoNotConverge) {
    // Negative cost with opposite shifts lets player I gain forever.
    const auto spec = scalar_spec(0, 1, CoefficientForm::constant(0.0), -0.5, 0.6, {1.0, -1.0}, {});
    EXPECT_THROW(terminal_projection(spec, grid_from_box({{-3.0, 3.0}}, 1.0)), ConvergenceError);
}

TEST(SolvePde, FrozenProblemIsConstant) {
    const auto spec = canonical_problem("P0");
    const auto st = make_space_time_grid(spec, grid_from_box({{-4 * kPi, 4 * kPi}}, 0.05), 0.9, 20);
    const auto f = solve_pde(spec, st);
    for (double v : f.values) EXPECT_EQ(v, kFrozenLevel);
    for (auto r : f.region) EXPECT_EQ(r, Region::CONT);
    const auto res = qvi_residual(spec, f);
    EXPECT_LE(res.sup_norm, 1e-12);
}

TEST(SolvePde, HeatClosedForm) {
    const auto spec = canonical_problem("P1");
    const auto st = make_space_time_grid(spec, grid_from_box({{-4 * kPi, 4 * kPi}}, 0.05), 0.9);
    const auto f = solve_pde(spec, st);
    EXPECT_NEAR(value_at(f, 0, 0.0), std::exp(-0.5), 1e-2);
    for (auto r : f.region) EXPECT_EQ(r, Region::CONT);
}

TEST(SolvePde, AffineDriverClosedForm) {
    const auto spec = canonical_problem("P2");
    const auto st = make_space_time_grid(spec, grid_from_box({{-4 * kPi, 4 * kPi}}, 0.05), 0.9);
    const auto f = solve_pde(spec, st);
    EXPECT_NEAR(value_at(f, 0, 0.0), std::exp(-0.6), 1e-2);
}

TEST(SolvePde, TwoDimensionalHeat) {
    ProblemSpec spec = canonical_problem("P1");
    spec.dim = 2;
    spec.noise_dim = 2;
    spec.drift = {CoefficientForm::constant(0), CoefficientForm::constant(0)};
    spec.vol = {CoefficientForm::constant(1), CoefficientForm::constant(0), CoefficientForm::constant(0),
                CoefficientForm::constant(1)};
    spec.impulse_U.actions = {{1.0, 0.0}, {0.0, 1.0}};
    spec.impulse_V.actions = {{-1.0, 0.0}, {0.0, -1.0}};
    const auto st = make_space_time_grid(spec, grid_from_box({{-2 * kPi, 2 * kPi}, {-2 * kPi, 2 * kPi}}, 0.1), 0.9);
    const auto f = solve_pde(spec, st);
    const std::vector<double> origin{0.0, 0.0};
    EXPECT_NEAR(interpolate(f.grid.space, f.level(0), origin), std::exp(-1.0), 1e-2);
}

TEST(SolvePde, CorrelatedDiffusionInTwoDimensions) {
    // sigma = [[1, 0], [rho, sqrt(1 - rho^2)]]; Phi = cos(x0 - x1) has E = exp(-(1 - rho) (T - t)) cos(x0 - x1).
    ProblemSpec spec = canonical_problem("P1");
    const double rho = 0.5;
    spec.dim = 2;
    spec.noise_dim = 2;
    spec.drift = {CoefficientForm::constant(0), CoefficientForm::constant(0)};
    spec.vol = {CoefficientForm::constant(1), CoefficientForm::constant(0), CoefficientForm::constant(rho),
                CoefficientForm::constant(std::sqrt(1 - rho * rho))};
    std::vector<std::vector<double>> knots(2);
    std::vector<double> vals;
    for (int i = -80; i <= 80; ++i) knots[0].push_back(0.1 * i), knots[1].push_back(0.1 * i);
    for (double a : knots[0])
        for (double b : knots[1]) vals.push_back(std::cos(a - b));
    spec.terminal = CoefficientForm::tabulated(knots, vals);
    spec.impulse_U.actions = {{1.0, 0.0}};
    spec.impulse_V.actions = {{-1.0, 0.0}};
    const auto st = make_space_time_grid(spec, grid_from_box({{-8.0, 8.0}, {-8.0, 8.0}}, 0.1), 0.9);
    const auto f = solve_pde(spec, st);
    const std::vector<double> origin{0.0, 0.0};
    EXPECT_NEAR(interpolate(f.grid.space, f.level(0), origin), std::exp(-(1 - rho)), 2e-2);
}

TEST(SolvePde, ProjectionIdentityAndLabels) {
    const auto spec = canonical_problem("P3");
    SolverOptions o;
    o.record_projection = true;
    const auto st = make_space_time_grid(spec, grid_from_box({{-4 * kPi, 4 * kPi}}, 0.1), 0.9);
    const auto f = solve_pde(spec, st, o);
    EXPECT_EQ(projection_identity_violations(f), 0u);
    std::size_t ii = 0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        const double inner = std::max(f.continuation[i], f.lower[i]);
        EXPECT_EQ(f.region[i] == Region::II_INT, f.upper[i] < inner);
        if (f.region[i] == Region::I_INT) {
            EXPECT_GT(f.lower[i], f.continuation[i]);
        }
        ii += f.region[i] == Region::II_INT;
    }
    EXPECT_GT(ii, 0u);
    EXPECT_LE(obstacle_sandwich_gap(f), 1e-9);
}

TEST(QviResidual, ThreeNodeHandExample) {
    const auto spec = scalar_spec(0.0, 0.0, CoefficientForm::constant(0), 0.1, 0.2, {1.0}, {-1.0});
    ValueField f;
    f.allocate(SpaceTimeGrid{grid_from_box({{0.0, 2.0}}, 1.0), 1, 1.0}, false);
    for (std::size_t k = 0; k < 2; ++k) {
        f.at(k, 0) = 0.0;
        f.at(k, 1) = 1.0;
        f.at(k, 2) = 0.0;
    }
    const auto r = qvi_residual(spec, f);
    EXPECT_NEAR(r.residual[0], -0.9, 1e-15);
}

TEST(QviResidual, DecreasesUnderRefinementForHeat) {
    const auto spec = canonical_problem("P1");
    double prev = inf;
    for (double dx : {0.2, 0.1, 0.05}) {
        const auto st = make_space_time_grid(spec, grid_from_box({{-4 * kPi, 4 * kPi}}, dx), 0.9);
        const auto r = qvi_residual(spec, solve_pde(spec, st));
        EXPECT_LT(r.sup_interior, prev);
        prev = r.sup_interior;
    }
}

TEST(ThetaTransform, IdentityAndScalar) {
    const auto spec = canonical_problem("P3");
    const auto st = make_space_time_grid(spec, grid_from_box({{-2.0, 2.0}}, 0.5), 0.9);
    auto f = solve_pde(spec, st);
    EXPECT_EQ(theta_transform(f, 0.0).values, f.values);
    std::fill(f.values.begin(), f.values.end(), 1.0);
    const auto w = theta_transform(f, std::log(2.0));
    for (std::size_t i = 0; i < f.nodes(); ++i) EXPECT_NEAR(w.at(st.steps, i), 2.0, 1e-15);
    EXPECT_THROW(theta_transform(f, -1.0), PreconditionError);
}

TEST(ThetaTransform, ResidualScalesLevelByLevel) {
    for (const char* name : {"P2", "P3"}) {
        const auto spec = canonical_problem(name);
        const auto st = make_space_time_grid(spec, grid_from_box({{-4 * kPi, 4 * kPi}}, 0.1), 0.9);
        const auto f = solve_pde(spec, st);
        const double theta = spec.driver_lipschitz() + 1.0;
        const auto w = theta_transform(f, theta);
        EXPECT_EQ(w.region, f.region);
        EXPECT_EQ(w.action, f.action);
        const auto rv = qvi_residual(spec, f);
        const auto rw = qvi_residual(spec, w, {}, theta);
        for (std::size_t k = 0; k < st.steps; ++k) {
            const double expect = std::exp(theta * st.time(k)) * rv.level_sup[k];
            EXPECT_NEAR(rw.level_sup[k], expect, 1e-10 * std::max(1.0, expect)) << name << " level " << k;
        }
    }
}

TEST(Properties, SchemeIsMonotone) {
    std::mt19937_64 rng(17);
    const auto spec = canonical_problem("P2");
    const auto g = grid_from_box({{-3.0, 3.0}}, 0.1);
    const auto st = make_space_time_grid(spec, g, 0.9);
    std::uniform_real_distribution<double> d(-1.0, 1.0), bump(0.0, 0.3);
    for (int trial = 0; trial < 50; ++trial) {
        GridSlice a{g, std::vector<double>(g.size()), 0.5}, b = a;
        for (std::size_t i = 0; i < g.size(); ++i) {
            a.values[i] = d(rng);
            b.values[i] = a.values[i] + bump(rng);
        }
        b.time = a.time;
        const auto sa = step_backward(spec, st, a), sb = step_backward(spec, st, b);
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LE(sa.values[i], sb.values[i]);
    }
}

TEST(Properties, ComparisonOfTerminalData) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> d(-1.0, 1.0), bump(0.0, 0.5);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> lo, hi;
        for (int i = 0; i <= 40; ++i) {
            lo.push_back(d(rng));
            hi.push_back(lo.back() + bump(rng));
        }
        const auto s1 = scalar_spec(0, 0.5, table_1d(-4.0, 0.2, lo), 1.0, 0.6, {0.5, 1.0}, {-0.5, -1.0});
        auto s2 = s1;
        s2.terminal = table_1d(-4.0, 0.2, hi);
        const auto st = make_space_time_grid(s1, grid_from_box({{-4.0, 4.0}}, 0.1), 0.9);
        const auto f1 = solve_pde(s1, st), f2 = solve_pde(s2, st);
        for (std::size_t i = 0; i < f1.values.size(); ++i) EXPECT_LE(f1.values[i], f2.values[i]);
    }
}

TEST(Properties, BoundednessOnCanonicalProblems) {
    for (const auto& name : canonical_problem_names()) {
        const auto spec = canonical_problem(name);
        const auto st = make_space_time_grid(spec, grid_from_box({{-4 * kPi, 4 * kPi}}, 0.1), 0.9);
        EXPECT_LE(sup_abs_value(solve_pde(spec, st)), boundedness_bound(spec)) << name;
    }
}

TEST(Properties, ThreadCountDoesNotChangeTheField) {
    const auto spec = canonical_problem("P3");
    const auto st = make_space_time_grid(spec, grid_from_box({{-4 * kPi, 4 * kPi}}, 0.1), 0.9);
    SolverOptions one, many;
    many.threads = 4;
    const auto a = solve_pde(spec, st, one), b = solve_pde(spec, st, many);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.region, b.region);
    EXPECT_EQ(a.action, b.action);
}
