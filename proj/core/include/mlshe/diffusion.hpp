#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mlshe/grid.hpp"

namespace mlshe {

// One Crank-Nicolson step of length h for u_t = u_yy / 2 with zero Dirichlet
// ends. The constant-coefficient tridiagonal system is factored once.
class DiffusionStep {
public:
    DiffusionStep(std::size_t n_y, double dy, double h, DiffusionStencil stencil);

    // In place; u.size() must equal n_y. Boundary entries are forced to zero.
    void apply(std::span<double> u) const;
    // Same step applied to every contiguous row of a row-major (rows x n_y) block.
    void apply_rows(std::span<double> block, std::size_t rows) const;

    std::size_t size() const { return n_; }

private:
    void apply_with(std::span<double> u, std::vector<double>& rhs) const;

    std::size_t n_;
    double lhs_off_, lhs_diag_;
    double rhs_off_, rhs_diag_;
    std::vector<double> inv_pivot_;   // Thomas forward-sweep reciprocals
    std::vector<double> upper_;       // modified super-diagonal
};

}  // namespace mlshe
