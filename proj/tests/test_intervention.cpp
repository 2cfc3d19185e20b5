#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "igame/hjbi_fd.hpp"
#include "igame/intervention.hpp"
#include "test_support.hpp"

using namespace igame;
using igame::test::scalar_spec;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

GridSlice five_node(std::vector<double> v) { return {grid_from_box({{-2.0, 2.0}}, 1.0), std::move(v), 1.0}; }

GridSlice random_slice(const Grid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    GridSlice s{g, std::vector<double>(g.size()), 0.5};
    for (auto& v : s.values) v = d(rng);
    return s;
}

}  // namespace

TEST(LowerObstacle, ConstantSlice) {
    const auto spec = scalar_spec(0, 1, CoefficientForm::constant(0), 1.0, 0.6, {1.0, 2.0}, {-1.0});
    const GridSlice s{grid_from_box({{-5.0, 5.0}}, 1.0), std::vector<double>(11, 5.0), 0.0};
    const auto lo = lower_obstacle(s, spec);
    for (std::size_t i = 0; i + 1 < 11; ++i) EXPECT_EQ(lo.values[i], 4.0);
}

TEST(LowerObstacle, LinearSlice) {
    const auto spec = scalar_spec(0, 1, CoefficientForm::constant(0), 1.0, 0.6, {1.0, 2.0}, {-1.0});
    const Grid g = grid_from_box({{-5.0, 5.0}}, 1.0);
    GridSlice s{g, std::vector<double>(g.size()), 0.0};
    for (std::size_t i = 0; i < g.size(); ++i) s.values[i] = g.coords(i)[0];
    const auto lo = lower_obstacle(s, spec);
    for (std::size_t i = 0; i + 2 < g.size(); ++i) {
        EXPECT_EQ(lo.values[i], g.coords(i)[0] + 1.0);
        EXPECT_EQ(lo.best_action[i], 1);
    }
    // last node: no shift stays inside
    EXPECT_EQ(lo.values[g.size() - 1], -inf);
    EXPECT_EQ(lo.best_action[g.size() - 1], -1);
    EXPECT_FALSE(lo.defined(g.size() - 1));
}

TEST(UpperObstacle, ConstantSlice) {
    const auto spec = scalar_spec(0, 1, CoefficientForm::constant(0), 1.0, 0.6, {1.0}, {-1.0, -2.0});
    const GridSlice s{grid_from_box({{-5.0, 5.0}}, 1.0), std::vector<double>(11, 5.0), 0.0};
    const auto up = upper_obstacle(s, spec);
    for (std::size_t i = 1; i < 11; ++i) EXPECT_EQ(up.values[i], 5.6);
    EXPECT_EQ(up.values[0], inf);
}

TEST(UpperObstacle, FiveNodeHandExample) {
    const auto spec = scalar_spec(0, 1, CoefficientForm::constant(0), 1.0, 0.6, {2.0}, {-2.0});
    const auto up = upper_obstacle(five_node({0, 0, 0, 0, 1}), spec);
    EXPECT_EQ(up.values[0], inf);  // x = -2
    EXPECT_EQ(up.values[1], inf);  // x = -1
    EXPECT_EQ(up.values[2], 0.6);
    EXPECT_EQ(up.values[3], 0.6);
    EXPECT_EQ(up.values[4], 0.6);
    EXPECT_EQ(up.best_action[4], 0);
}

TEST(UpperObstacle, EmptySetNonbindingEverywhere) {
    const auto spec = scalar_spec(0, 1, CoefficientForm::constant(0), 1.0, 0.6, {2.0}, {});
    const auto up = upper_obstacle(five_node({0, 1, 2, 3, 4}), spec);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(up.values[i], inf);
        EXPECT_FALSE(up.defined(i));
        EXPECT_FALSE(up.binding[i]);
    }
}

TEST(Obstacles, OffNodeShiftsInterpolate) {
    const auto spec = scalar_spec(0, 1, CoefficientForm::constant(0), 0.25, 0.6, {0.5}, {-1.0});
    const Grid g = grid_from_box({{-2.0, 2.0}}, 1.0);
    GridSlice s{g, {0.0, 1.0, 4.0, 9.0, 16.0}, 0.0};
    const auto lo = lower_obstacle(s, spec);
    EXPECT_DOUBLE_EQ(lo.values[2], 6.5 - 0.25);  // midpoint of 4 and 9
    EXPECT_EQ(lo.values[4], -inf);               // x = 2.5 leaves the box
}

TEST(Obstacles, BindingFlag) {
    const auto spec = scalar_spec(0, 1, CoefficientForm::constant(0), 1.0, 0.6, {1.0}, {-1.0});
    const auto lo = lower_obstacle(five_node({0.0, 0.0, 1.0, 2.0, 5.0}), spec);
    // node 3: V(4)-1 = 4 vs V = 2 -> not binding; node 1: V(2)-1 = 0 = V -> binding
    EXPECT_FALSE(lo.binding[3]);
    EXPECT_TRUE(lo.binding[1]);
}

TEST(Obstacles, TiesGoToSmallestIndex) {
    const auto spec = scalar_spec(0, 1, CoefficientForm::constant(0), 1.0, 0.6, {1.0, 2.0}, {-1.0, -2.0});
    const auto s = five_node({3, 3, 3, 3, 3});
    EXPECT_EQ(lower_obstacle(s, spec).best_action[0], 0);
    EXPECT_EQ(upper_obstacle(s, spec).best_action[4], 0);
}

TEST(Properties, MonotoneEquivariantAndFloored) {
    std::mt19937_64 rng(21);
    const auto spec = scalar_spec(0, 1, CoefficientForm::constant(0), 0.7, 0.4, {0.5, 1.0, 1.5}, {-0.5, -1.5});
    const Grid g = grid_from_box({{-3.0, 3.0}}, 0.5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = random_slice(g, rng);
        auto b = a;
        std::uniform_real_distribution<double> bump(0.0, 0.5);
        for (auto& v : b.values) v += bump(rng);
        const auto la = lower_obstacle(a, spec), lb = lower_obstacle(b, spec);
        const auto ua = upper_obstacle(a, spec), ub = upper_obstacle(b, spec);
        auto shifted = a;
        const double k = 0.375;  // exact in binary
        for (auto& v : shifted.values) v += k;
        const auto ls = lower_obstacle(shifted, spec), us = upper_obstacle(shifted, spec);
        const double vmax = *std::max_element(a.values.begin(), a.values.end());
        const double vmin = *std::min_element(a.values.begin(), a.values.end());
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (la.defined(i)) {
                EXPECT_LE(la.values[i], lb.values[i]);
                EXPECT_NEAR(ls.values[i], la.values[i] + k, 1e-14);
                EXPECT_LE(la.values[i], vmax - 0.7);
            }
            if (ua.defined(i)) {
                EXPECT_LE(ua.values[i], ub.values[i]);
                EXPECT_NEAR(us.values[i], ua.values[i] + k, 1e-14);
                EXPECT_GE(ua.values[i], vmin + 0.4);
            }
        }
        EXPECT_EQ(lower_obstacle(a, spec).best_action, la.best_action);
        EXPECT_EQ(upper_obstacle(a, spec).best_action, ua.best_action);
    }
}

TEST(Properties, ParallelMatchesSerial) {
    std::mt19937_64 rng(4);
    const auto spec = canonical_problem("P3");
    const Grid g = grid_from_box({{-6.0, 6.0}}, 0.25);
    const auto s = random_slice(g, rng);
    InterventionOptions one, many;
    many.threads = 4;
    EXPECT_EQ(lower_obstacle(s, spec, one).values, lower_obstacle(s, spec, many).values);
    EXPECT_EQ(upper_obstacle(s, spec, one).best_action, upper_obstacle(s, spec, many).best_action);
}

TEST(Obstacles, TwoDimensionalShifts) {
    ProblemSpec spec = canonical_problem("P1");
    spec.dim = 2;
    spec.noise_dim = 2;
    spec.drift = {CoefficientForm::constant(0), CoefficientForm::constant(0)};
    spec.vol = {CoefficientForm::constant(1), CoefficientForm::constant(0), CoefficientForm::constant(0),
                CoefficientForm::constant(1)};
    spec.impulse_U.actions = {{1.0, 0.0}, {0.0, 1.0}};
    spec.impulse_V.actions = {{-1.0, -1.0}};
    const Grid g = grid_from_box({{-2.0, 2.0}, {-2.0, 2.0}}, 1.0);
    GridSlice s{g, std::vector<double>(g.size()), 0.0};
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto x = g.coords(i);
        s.values[i] = x[0] + 2.0 * x[1];
    }
    const auto lo = lower_obstacle(s, spec);
    const auto up = upper_obstacle(s, spec);
    const std::size_t centre = g.flat_index({2, 2});
    EXPECT_EQ(lo.values[centre], 2.0 - 10.0);  // (0,1) shift: 2 - c
    EXPECT_EQ(lo.best_action[centre], 1);
    EXPECT_EQ(up.values[centre], -3.0 + 9.0);
    EXPECT_EQ(up.values[g.flat_index({0, 3})], inf);
}
