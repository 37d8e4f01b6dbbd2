#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mlshe::fd {

// Central finite-difference weights on the integer offsets -half_width..half_width.
// weights[k + half_width] multiplies f(x + k h); divide the sum by h^derivative.
struct Stencil {
    int derivative = 0;
    int accuracy = 2;
    int half_width = 0;
    std::vector<double> weights;

    double weight(int offset) const { return weights[static_cast<std::size_t>(offset + half_width)]; }
};

// Fornberg weights for the requested derivative order and (even) accuracy order.
// Results are cached; the returned reference stays valid for the program lifetime.
const Stencil& central_stencil(int derivative, int accuracy);

int half_width(int derivative, int accuracy);

// Applies the stencil to a uniformly sampled sequence at `index`; returns
// NaN when the stencil does not fit inside the sequence.
double apply(const Stencil& s, std::span<const double> values, std::size_t index, double step);

// Derivative of a sampled sequence at every index where the stencil fits; NaN elsewhere.
std::vector<double> differentiate(std::span<const double> values, int derivative, int accuracy,
                                  double step);

}  // namespace mlshe::fd
