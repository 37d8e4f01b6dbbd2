#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mlshe/kernels.hpp"
#include "mlshe/linalg.hpp"

namespace mlshe::detcalc {

using kernels::WeylPoint;
using Function1D = std::function<double(double)>;

// Mixed partials d_x^i d_y^j g(x, y), i, j = 0..m-1, at one base point.
class DerivativeTable {
public:
    DerivativeTable() = default;
    explicit DerivativeTable(std::size_t m, double step = 0.0) : m_(m), step_(step), v_(m * m, 0.0) {}

    std::size_t size() const { return m_; }
    double step() const { return step_; }
    double& operator()(std::size_t i, std::size_t j) { return v_[i * m_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return v_[i * m_ + j]; }
    double value() const { return v_.at(0); }

private:
    std::size_t m_ = 0;
    double step_ = 0.0;
    std::vector<double> v_;
};

double wronskian(const DerivativeTable& table, int n);
linalg::SignedLog log_wronskian(const DerivativeTable& table, int n);

struct DarbouxChain {
    std::vector<double> w;         // W_0 = 1, W_1, ..., W_N
    std::vector<double> t_fields;  // T_1 .. T_{N-1}

    double reconstruct_next(std::size_t n) const;  // T_n W_n^2 / W_{n-1}
};

// Tables on a rectangular grid, node (ix, iy) stored at ix * ny + iy.
struct TableGrid {
    std::size_t nx = 0, ny = 0;
    double hx = 0.0, hy = 0.0;
    std::vector<DerivativeTable> tables;

    const DerivativeTable& at(std::size_t ix, std::size_t iy) const { return tables[ix * ny + iy]; }
};

struct DarbouxGrid {
    std::size_t nx = 0, ny = 0;
    int order = 0;                               // N
    std::vector<DarbouxChain> chains;            // per node
    std::vector<std::vector<double>> residual;   // [n-1][node], NaN on the grid border

    double max_residual(int n) const;
};

// Builds W and T at every node and the residual |T_n - d_xy log W_n|
// with second-order central differences. Throws SingularityError when some W_n = 0.
DarbouxGrid darboux_chain(const TableGrid& grid, int order);

struct FieldEstimate {
    std::vector<double> values;          // NaN where the nested stencils do not fit
    std::vector<double> error_estimate;  // |accuracy-4 result - accuracy-2 result|
};

// Nested derivative quotient d_y( ... d_y( d_y(d_x^n g / g) / T_1 ) / T_2 ... ) / T_{n-1} ).
// dxg[k][j] = d_x^k g(x, y_j) for k = 0..n; t_fields[k-1][j] = T_k(x, y_j).
FieldEstimate divided_difference_chain(const std::vector<std::vector<double>>& dxg,
                                       const std::vector<std::vector<double>>& t_fields, double dy,
                                       int accuracy = 4);

// Uniformly sampled function with cubic (4-point Lagrange) interpolation.
class SampledFunction {
public:
    SampledFunction() = default;
    SampledFunction(double x0, double dx, std::vector<double> values);

    double operator()(double x) const;
    double lo() const { return x0_; }
    double hi() const { return x0_ + dx_ * static_cast<double>(v_.size() - 1); }
    const std::vector<double>& values() const { return v_; }

private:
    double x0_ = 0.0, dx_ = 1.0;
    std::vector<double> v_;
};

struct InterlaceResult {
    double integral_side = 0.0;     // det[f_{i+1}(y_j) - f_{i+1}(y_{j+1})]
    double determinant_side = 0.0;  // det[f_i(y_j)]
    int orientation_sign = 1;
    double relative_discrepancy = 0.0;
};

// Integral over {z interlacing y} of det[f'_{i+1}(z_j)] via the Cauchy-Binet
// difference determinant. Requires f[0] == 1 within 1e-12 (ContractViolation).
InterlaceResult interlace_integral(std::span<const Function1D> f, const WeylPoint& y);

// One triangular array y^1 < y^2 < ... < y^{n-1} < top.
struct GTPattern {
    std::vector<std::vector<double>> levels;  // levels[k-1] has k entries
    WeylPoint top;

    bool interlaced() const;
};

struct GTOptions {
    int nodes = 64;                 // Simpson intervals per slab coordinate (even)
    int monte_carlo_from = 5;       // n at which the sampler replaces nested quadrature
    std::uint64_t mc_samples = 200000;
    std::uint64_t seed = 0x5EEDu;
};

struct GTIntegralResult {
    double value = 0.0;
    double coarse_value = 0.0;      // at half the node count (quadrature) or NaN
    double error_estimate = 0.0;
    bool degenerate = false;
    std::string method;             // "simpson" or "monte-carlo"
};

// Integral over GT(y) of prod_k prod_i S_k(y^{n-k}_i); s_fields[k-1] = S_k.
GTIntegralResult gt_integral(std::span<const Function1D> s_fields, const WeylPoint& y,
                             const GTOptions& options = {});

struct FactorizationReport {
    double lhs = 0.0;               // det[d_x^{i-1} g(x, y_j)]
    double rhs = 0.0;               // prod g(x, y_i) * GT integral of T
    double ratio = 0.0;
    int expected_sign = 1;
    double error_estimate = 0.0;
};

// dxg[k] = d_x^k g(x, .) for k = 0..n-1, t_fields[k-1] = T_k(x, .).
FactorizationReport gt_factorization_check(std::span<const Function1D> dxg,
                                           std::span<const Function1D> t_fields, const WeylPoint& y,
                                           const GTOptions& options = {});

}  // namespace mlshe::detcalc
