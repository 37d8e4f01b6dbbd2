#pragma once

#include <cstdint>
#include <vector>

// Closed-form Gaussian calculus, written without the core finite-difference or
// determinant code so tests can compare against it.
namespace mlshe::oracles {

// Polynomial in w with coefficients c[k] w^k.
struct Polynomial {
    std::vector<double> c;
    double operator()(double w) const;
};

// P with d_w^k exp(-w^2 / 2t) = P(w) exp(-w^2 / 2t), built by repeated symbolic
// differentiation P' - (w / t) P.
Polynomial gaussian_derivative_polynomial(int k, double t);

// d_x^i d_y^j of the heat kernel p(t, x, y) = exp(-(x-y)^2 / 2t) / sqrt(2 pi t).
double gaussian_derivative(double t, double x, double y, int i, int j);

// det[d_x^i d_y^j p(t, x, y)]_{i,j<n} by permutation expansion (n <= 6).
double free_wronskian(int n, double t, double x, double y);

// det[He_{i+j}(0)]_{i,j<n} in exact integer arithmetic (Bareiss).
std::int64_t hermite_hankel_determinant(int n);

// Determinant by permutation expansion, for small dense matrices.
double leibniz_determinant(const std::vector<std::vector<double>>& a);

}  // namespace mlshe::oracles
