#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace mlshe::polymer {

// N Brownian environments sampled on a uniform grid of [0, t] with m steps.
// Between nodes the paths are taken piecewise linear.
struct DisorderPath {
    std::size_t n_levels = 0;
    std::size_t m = 0;
    double t = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> b;  // n_levels x (m + 1), row-major

    double dt() const { return t / static_cast<double>(m); }
    double operator()(std::size_t level, std::size_t k) const { return b[level * (m + 1) + k]; }
    double& operator()(std::size_t level, std::size_t k) { return b[level * (m + 1) + k]; }

    static DisorderPath sample(std::size_t n_levels, std::size_t m, double t, std::uint64_t seed);
    static DisorderPath zero(std::size_t n_levels, std::size_t m, double t);
    // Same piecewise-linear paths on a grid `factor` times finer.
    DisorderPath refined(std::size_t factor) const;
};

// Z_{i,j}(t) for 1 <= i <= j <= N by the cumulative trapezoid recursion.
double single_path_partition(const DisorderPath& path, std::size_t i, std::size_t j);

// All Z_{i,j}(s_k) for j >= i at the final time only; entries with j < i are zero.
struct HierarchyTable {
    std::size_t n_levels = 0;
    std::vector<double> z;  // N x N row-major, 0-based storage of 1-based (i, j)

    double operator()(std::size_t i, std::size_t j) const { return z[(i - 1) * n_levels + (j - 1)]; }
};

HierarchyTable hierarchy_table(const DisorderPath& path, unsigned threads = 1);

// Z_n^N = det[Z_{i, N-n+j}]_{i,j=1..n}.
double multilayer_partition(const HierarchyTable& table, std::size_t n);
std::vector<double> multilayer_all(const HierarchyTable& table);

// X_1 = log Z_1, X_n = log(Z_n / Z_{n-1}); DomainError names the first non-positive layer.
std::vector<double> x_increments(const std::vector<double>& z);

}  // namespace mlshe::polymer
