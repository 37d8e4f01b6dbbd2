#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "mlshe/polymer.hpp"

namespace mlshe::oracles {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n);

// Integral of f over [a, b] with `panels` Gauss-Legendre panels of `order` points.
double integrate(const std::function<double(double)>& f, double a, double b, int order = 16, int panels = 8);

// P(R <= r) for the Rayleigh law P(R > r) = exp(-r^2 / 2).
double rayleigh_cdf(double r);
// E[exp(c R)] = 1 + c sqrt(2 pi) exp(c^2 / 2) Phi(c).
double rayleigh_exp_moment(double c);
// E[exp(L)] for the collision local time of two independent Brownian bridges
// 0 -> 0 on [0, t]: L has the law of sqrt(t/2) R.
double bridge_pair_exp_local_time(double t);

// Reflection principle: probability two bridges x1 -> y1, x2 -> y2 over time t do not meet.
double two_bridge_noncrossing(double t, double x1, double x2, double y1, double y2);

// Volume of GT(y) by plain rejection sampling in the bounding box.
struct MonteCarloValue {
    double value = 0.0;
    double std_error = 0.0;
};
MonteCarloValue gt_volume_monte_carlo(const std::vector<double>& y, std::size_t samples, std::uint64_t seed);

// Two disjoint up/right paths, N = 3: path one jumps 1 -> 2 at s1, path two
// jumps 2 -> 3 at s2 < s1. The energy is evaluated directly for every pair of
// grid times and summed with nested trapezoid weights.
double polymer_two_path_bruteforce(const polymer::DisorderPath& path);

// Single path from level 1 to level 3 by direct double sum over jump times.
double polymer_single_path_bruteforce_13(const polymer::DisorderPath& path);

}  // namespace mlshe::oracles
