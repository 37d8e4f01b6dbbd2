#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "mlshe/grid.hpp"
#include "mlshe/kernels.hpp"
#include "mlshe/potential.hpp"

namespace mlshe::lattice {

using kernels::WeylPoint;

// Space-time field of independent standard normals xi[k][j], k < n_t, j < n_y.
// Generated fields are random access from (seed, k, j) and never stored.
class NoiseField {
public:
    NoiseField(std::uint64_t seed, std::size_t n_t, std::size_t n_y, double dt, double dy);
    static NoiseField zeros(std::size_t n_t, std::size_t n_y, double dt, double dy);
    static NoiseField from_values(std::uint64_t seed, std::size_t n_t, std::size_t n_y, double dt, double dy,
                                  std::vector<double> values);
    static NoiseField for_grid(std::uint64_t seed, const GridSpec& grid);

    double at(std::size_t k, std::size_t j) const;
    void row(std::size_t k, std::span<double> out) const;

    // Time steps [first, first + count) as a field of their own.
    NoiseField segment(std::size_t first, std::size_t count) const;
    NoiseField materialized() const;

    std::uint64_t seed() const { return seed_; }
    std::size_t n_t() const { return n_t_; }
    std::size_t n_y() const { return n_y_; }
    double dt() const { return dt_; }
    double dy() const { return dy_; }
    bool is_zero() const { return kind_ == Kind::Zero; }

    // Little-endian header (seed, n_t, n_y as uint64; dt, dy as IEEE-754 bits),
    // then n_t * n_y little-endian doubles in row-major order.
    void write(const std::filesystem::path& path) const;
    void write(std::ostream& os) const;
    static NoiseField read(const std::filesystem::path& path);
    static NoiseField read(std::istream& is);

private:
    enum class Kind { Generated, Zero, Stored };
    NoiseField() = default;

    Kind kind_ = Kind::Generated;
    std::uint64_t seed_ = 0;
    std::size_t n_t_ = 0, n_y_ = 0;
    double dt_ = 0.0, dy_ = 0.0;
    std::size_t offset_ = 0;
    std::vector<double> values_;
};

struct LatticeOptions {
    const PotentialField* shift = nullptr;  // Cameron-Martin drift phi dt added to the multiplier
    double negative_fraction_limit = 1e-3;
};

struct LatticeSolution {
    GridSpec grid;
    std::vector<std::vector<double>> slices;  // retained time levels, each n_x * n_y
    std::vector<double> slice_times;
    std::uint64_t noise_seed = 0;
    double dt = 0.0, dy = 0.0;
    const char* interpretation = "ito";
    std::size_t negative_multipliers = 0;
    std::size_t total_multipliers = 0;

    double z(std::size_t ix, std::size_t iy) const { return slices.back()[ix * grid.n_y + iy]; }
    std::span<const double> row(std::size_t ix) const {
        return std::span<const double>(slices.back()).subspan(ix * grid.n_y, grid.n_y);
    }
};

// Initial data for one start point: discrete delta 1/dy at the node when
// init_epsilon is 0, otherwise the heat kernel at time init_epsilon.
std::vector<double> initial_condition(const GridSpec& grid, double x);

// Per step: half diffusion, multiply by 1 + xi sqrt(dt/dy) (+ phi dt), half diffusion.
// Every x node uses the same noise. Throws StepSizeError when more than the allowed
// fraction of multipliers is negative.
LatticeSolution evolve_she(const NoiseField& noise, const GridSpec& grid, const LatticeOptions& options = {});

// Same dynamics from explicit initial rows (row-major n_rows x n_y).
std::vector<double> evolve_rows(const NoiseField& noise, const GridSpec& grid, std::vector<double> rows,
                                std::size_t n_rows, const LatticeOptions& options = {},
                                std::size_t* negative = nullptr);

struct KMDeterminant {
    double det = 0.0;
    double hat = 0.0;  // det / (Delta(x) Delta(y))
};

KMDeterminant km_determinant(const LatticeSolution& sol, const WeylPoint& x, const WeylPoint& y);

// Default lattice grid: symmetric domain wide enough for t and the start points,
// dt = dy^2 / 5, discrete delta start, three-point stencil.
GridSpec default_grid(double t_final, double dy, std::vector<double> x_nodes);

// Runs realizations r = 0..count-1 with noise seed rng::derive(seed, r) in parallel;
// consumer(r, solution) must only write to storage owned by r.
void run_ensemble(const GridSpec& grid, std::size_t count, std::uint64_t seed,
                  const std::function<void(std::size_t, const LatticeSolution&)>& consumer,
                  const LatticeOptions& options = {}, unsigned threads = 0);

std::uint64_t realization_seed(std::uint64_t seed, std::size_t r);

struct SecondMoment {
    double mean = 0.0;                      // deterministic lattice Z_0(t, x, y)
    double second = 0.0;                    // exact E[Z(t, x, y)^2] of the lattice scheme
    double second_over_heat_squared = 0.0;  // E[Z^2] / p(t, x, y)^2
    double second_over_mean_squared = 0.0;
};

// Propagates E[Z Z^T] through the scheme exactly (Ito multipliers are independent
// across sites with E[(1 + a xi)^2] = 1 + dt/dy).
SecondMoment second_moment_exact(double t, double x, double y, double dy);
SecondMoment second_moment_exact(const GridSpec& grid, double x, double y);

struct RatioSample {
    double lhs = 0.0;
    double rhs_left = 0.0;      // left-point denominator Z(x, z)^2
    double rhs_midpoint = 0.0;  // geometric-midpoint denominator Z(x, z + dy) Z(x, z)
    double rel_left = 0.0;
    double rel_midpoint = 0.0;
    bool skipped = false;
};

// x node index ix and its neighbour at x + h (ix_h); y1 > y2 given as node indices.
RatioSample ratio_identity(const LatticeSolution& sol, std::size_t ix, std::size_t ix_h, std::size_t iy1,
                           std::size_t iy2, double floor = 0.0);

struct RatioIdentityReport {
    std::size_t realizations = 0;
    std::size_t skipped = 0;
    double dy = 0.0;
    double median_rel_left = 0.0;
    double median_rel_midpoint = 0.0;
    std::vector<double> rel_left;
};

RatioIdentityReport ratio_identity_check(double t, double dy, double x, double y1, double y2,
                                         std::size_t realizations, std::uint64_t seed, unsigned threads = 0,
                                         bool zero_noise = false);

struct FlowReport {
    double s = 0.0, t = 0.0;
    std::vector<double> x;
    std::vector<double> max_rel_error;  // per x node, over trust-region y
};

// Z(t_final, x, .) against sum_z dy Z(s, x, z) Z'(t_final - s, z, .), where Z' is
// driven by the noise segment after s.
FlowReport flow_property_check(std::uint64_t seed, const GridSpec& grid, double s, bool zero_noise = false);

struct ProbeMean {
    double estimate = 0.0;
    double std_error = 0.0;
    double reference = 0.0;
};

struct NoiseShiftReport {
    std::size_t realizations = 0;
    ProbeMean single;       // Z(t, x_1, y_1)
    ProbeMean determinant;  // det over x = (x_1, x_2), y = (y_1, y_2)
};

// Shifted-noise ensemble means against the smooth solver's Z^phi built on a
// fine grid; x, y are length-2 Weyl points on lattice nodes.
NoiseShiftReport noise_shift_mean(const PotentialField& phi, const GridSpec& grid, const WeylPoint& x,
                                  const WeylPoint& y, std::size_t realizations, std::uint64_t seed,
                                  unsigned threads = 0);

struct LineEnsembleReport {
    int n_max = 0;
    std::size_t realizations = 0;
    std::vector<double> positive_fraction;  // per n over realizations x trust nodes
    std::vector<double> mean_log_u;         // per n, averaged over positive entries
};

// Confluent hatZ_n at x (adjacent x nodes x, x + dy, ...) across the y grid from
// adjacent y nodes; Z_n = printed constant * hatZ_n, U_n = Z_n / Z_{n-1}.
LineEnsembleReport line_ensemble_diagnostics(const std::vector<LatticeSolution>& ensemble, std::size_t ix,
                                             int n_max);

}  // namespace mlshe::lattice
