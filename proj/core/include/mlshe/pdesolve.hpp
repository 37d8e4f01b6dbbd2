#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "mlshe/grid.hpp"
#include "mlshe/kernels.hpp"
#include "mlshe/potential.hpp"

namespace mlshe::pde {

using kernels::WeylPoint;

// Z(t, x, y) for every x node on the y grid at the final time, plus the last
// three time levels (t_final - 2dt, t_final - dt, t_final) for residual checks.
struct HeatSurface {
    GridSpec grid;
    PotentialField potential;
    std::vector<std::vector<double>> slices;  // each n_x * n_y, row = x node
    std::vector<double> slice_times;
    std::size_t nonpositive_interior = 0;     // interior nodes with Z <= 0 at t_final

    std::size_t final_slice() const { return slices.size() - 1; }
    double t() const { return slice_times.back(); }
    double z(std::size_t ix, std::size_t iy) const { return slices.back()[ix * grid.n_y + iy]; }
    double z(std::size_t slice, std::size_t ix, std::size_t iy) const {
        return slices[slice][ix * grid.n_y + iy];
    }
};

struct SolveOptions {
    unsigned threads = 0;  // 0: process default
};

// Strang splitting around Crank-Nicolson diffusion, started from the heat
// kernel at init_epsilon. Throws ConfigurationError for inadequate grids.
HeatSurface solve_smooth(const PotentialField& phi, const GridSpec& grid, const SolveOptions& options = {});

// Indices of y nodes with |y - x| <= radius_sigmas * sqrt(t), clipped to the grid.
struct IndexRange {
    std::size_t lo = 0, hi = 0;  // inclusive
    bool contains(std::size_t i) const { return i >= lo && i <= hi; }
    std::size_t count() const { return hi - lo + 1; }
};
IndexRange trust_region(const GridSpec& grid, double x, double t, double radius_sigmas = 4.0);

struct LayerOptions {
    int fd_accuracy = 4;          // order of the x and y derivative stencils
    double trust_sigmas = 4.0;
    std::size_t slice = static_cast<std::size_t>(-1);  // default: final slice
};

// Hierarchy Z_1..Z_N, u_n and both S candidates over the y grid for one start node.
// Arrays are indexed [n-1][iy]; NaN where derivative stencils do not fit.
struct LayerStack {
    double t = 0.0;
    double x = 0.0;
    std::size_t ix = 0;
    int n_max = 0;
    double dy = 0.0;
    std::vector<double> y;
    std::vector<std::vector<double>> z;        // Z_n = c_n W_n
    std::vector<std::vector<double>> u;        // Z_n / Z_{n-1}
    std::vector<std::vector<double>> s_printed;  // (1/nt) Z_{n-1} Z_{n+1} / Z_n^2, n < N
    std::vector<std::vector<double>> s_alt;    // d_x d_y log Z_n, n < N
    std::vector<kernels::ConstantLedger> constants;  // n = 1..N
    IndexRange trust;

    double heat(std::size_t iy) const { return kernels::heat_kernel(t, x, y[iy]); }
};

// Throws SingularityError when some Z_n is not positive in the trust region,
// ConfigurationError when the x pencil around ix is too short or irregular.
LayerStack build_layers(const HeatSurface& surface, std::size_t ix, int n_max, const LayerOptions& options = {});

// Pencil half-width (in x nodes) that build_layers needs for n_max at an accuracy.
int required_pencil(int n_max, int fd_accuracy);

// Derivatives d_x^k Z(t, x, y_j) for k < order at every y node (NaN off-stencil).
std::vector<std::vector<double>> x_derivatives(const HeatSurface& surface, std::size_t slice, std::size_t ix,
                                               int order, int fd_accuracy);

struct ResidualReport {
    int n = 0;
    double max_abs = 0.0;
    double l2 = 0.0;        // sqrt(sum r^2 dy) over the trust region
    double scale = 0.0;     // max |u_n| (or |S|) over the same nodes
    std::size_t nodes = 0;
};

struct LayerHistory {
    std::array<LayerStack, 3> stacks;  // at t - dt, t, t + dt
    double dt = 0.0;
    PotentialField potential;
};

LayerHistory build_history(const HeatSurface& surface, std::size_t ix, int n_max, const LayerOptions& options = {});

// r_n = d_t u_n - u_n''/2 - [phi + d_y^2 log(Z_{n-1}/p^{n-1})] u_n at the middle slice.
ResidualReport layer_residual(const LayerHistory& history, int n);

enum class SDefinition { Printed, LogDerivative };

// d_t S - S''/2 - d_y(S d_y log u_n) at the middle slice for the chosen S_n.
ResidualReport s_evolution_residual(const LayerHistory& history, int n, SDefinition definition);

struct GTReconstruction {
    int n = 0;
    WeylPoint y;               // probe snapped to grid nodes
    double side_a = 0.0;       // det[d_x^{i-1} Z(y_j)] / Delta(y)
    double side_b_printed = 0.0;
    double side_b_alt = 0.0;
    double ratio_printed = 0.0;  // A / B
    double ratio_alt = 0.0;
    double error_printed = 0.0;  // quadrature error estimate propagated to the ratio
    double error_alt = 0.0;
    int expected_sign = 1;
};

GTReconstruction gt_reconstruction_check(const HeatSurface& surface, std::size_t ix, const WeylPoint& y, int n,
                                         const LayerOptions& options = {});

struct RskReport {
    int n_max = 0;
    std::vector<double> max_rel_error;  // per n
    std::size_t nodes = 0;
};

// Requires a symmetric y grid and x nodes symmetric about 0.
RskReport rsk_symmetry_check(const PotentialField& phi, const GridSpec& grid, int n_max,
                             const LayerOptions& options = {});

// Confluent limit by the determinant route: ratio det[Z(x_i, y_j)] / p*(x, y)
// at centered separations 2k dy and 4k dy around (x node ix, y node iy), and its
// Richardson limit, which estimates Z_n / p^n.
struct ConfluentRatio {
    int n = 0;
    double delta_fine = 0.0;
    double ratio_fine = 0.0;
    double ratio_coarse = 0.0;
    double extrapolated = 0.0;
};
ConfluentRatio km_confluent_ratio(const HeatSurface& surface, std::size_t ix, std::size_t iy, int n, int k = 1);

// Empirical constant c with Z_n = c W_n at one probe: extrapolated determinant
// ratio times p^n over the Wronskian of the surface.
struct CalibrationProbe {
    int n = 0;
    double x = 0.0, y = 0.0;
    double wronskian = 0.0;
    double z_n_estimate = 0.0;  // p^n * extrapolated determinant ratio
    double constant = 0.0;
};
CalibrationProbe calibrate_probe(const HeatSurface& surface, std::size_t ix, std::size_t iy, int n,
                                 const LayerOptions& options = {});

}  // namespace mlshe::pde
