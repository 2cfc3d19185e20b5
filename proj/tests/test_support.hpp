#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "igame/problem_model.hpp"

namespace igame::test {

/// One-dimensional game with constant coefficients; impulse sets given explicitly.
inline ProblemSpec scalar_spec(double b, double sigma, CoefficientForm terminal, double c, double chi,
                               std::vector<double> U, std::vector<double> V, double h = 0.1,
                               CoefficientForm driver = CoefficientForm::constant(0.0), double T = 1.0) {
    ProblemSpec p;
    p.name = "test";
    p.dim = 1;
    p.noise_dim = 1;
    p.horizon = T;
    p.drift = {CoefficientForm::constant(b)};
    p.vol = {CoefficientForm::constant(sigma)};
    p.driver = std::move(driver);
    p.terminal = std::move(terminal);
    p.cost_c = CoefficientForm::constant(c);
    p.gain_chi = CoefficientForm::constant(chi);
    p.h_floor = CoefficientForm::constant(h);
    for (double u : U) p.impulse_U.actions.push_back({u});
    for (double v : V) p.impulse_V.actions.push_back({v});
    p.impulse_U.label = Player::I;
    p.impulse_V.label = Player::II;
    return p;
}

/// Tabulated terminal payoff with the given node values on knots lo, lo+step, ...
inline CoefficientForm table_1d(double lo, double step, const std::vector<double>& values) {
    std::vector<double> knots;
    for (std::size_t i = 0; i < values.size(); ++i) knots.push_back(lo + step * static_cast<double>(i));
    return CoefficientForm::tabulated({knots}, values);
}

}  // namespace igame::test
