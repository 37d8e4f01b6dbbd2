#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "mlshe/linalg.hpp"

namespace mlshe::kernels {

// An ordered point of the Weyl chamber: coords[0] >= coords[1] >= ... .
class WeylPoint {
public:
    WeylPoint() = default;
    // Throws DomainError when the coordinates are not weakly decreasing.
    explicit WeylPoint(std::vector<double> coords);
    WeylPoint(std::initializer_list<double> coords) : WeylPoint(std::vector<double>(coords)) {}

    std::size_t size() const { return coords_.size(); }
    double operator[](std::size_t i) const { return coords_[i]; }
    std::span<const double> coords() const { return coords_; }
    bool strictly_interior() const;

    // n copies of the same coordinate.
    static WeylPoint confluent(std::size_t n, double value);
    // Points value + delta*((n-1)/2 - i): centered, adjacent gap delta.
    static WeylPoint centered(std::size_t n, double value, double delta);

private:
    std::vector<double> coords_;
};

double heat_kernel(double t, double x, double y);
double log_heat_kernel(double t, double x, double y);

// d^i/dx^i d^j/dy^j of the heat kernel, exact (Hermite polynomial form).
double heat_kernel_derivative(double t, double x, double y, int i, int j);

// Karlin-McGregor density of n independent Brownian motions killed on collision.
linalg::SignedLog km_density_log(double t, const WeylPoint& x, const WeylPoint& y);
double km_density(double t, const WeylPoint& x, const WeylPoint& y);

double vandermonde(std::span<const double> x);
inline double vandermonde(const WeylPoint& x) { return vandermonde(x.coords()); }

// Orientation signs for the three determinant identities under the
// decreasing-coordinate convention (rows: derivative order or path index
// ascending, columns: coordinates in decreasing order).
struct OrientationSigns {
    int interlace = 1;       // interval integral vs plain determinant
    int confluent_dx = 1;    // divided-difference limit in x vs derivative rows
    int factorization = 1;   // derivative determinant vs Gelfand-Tsetlin integral
};

struct ConstantLedger {
    int n = 1;
    double t = 1.0;
    // t^{n(n-1)/2} prod_{j<n} j!; correct for the divided-difference (p*) limit.
    double printed_constant = 1.0;
    // Constant c with Z_n = c * W_n forced by Z_n = p^n in the free field.
    double calibrated_constant = 1.0;
    OrientationSigns signs;
    int probes = 0;  // number of free-field evaluations used to pin the values
};

double printed_constant(int n, double t);
double factorial_product(int n);  // prod_{j=1}^{n-1} j!

// Calibration runs once per process per n (cached); scaling in t is applied on top.
ConstantLedger confluent_constants(int n, double t);

// Volume of the Gelfand-Tsetlin polytope below y: Delta(y) / prod_{j<n} j!.
double gt_volume(const WeylPoint& y);

}  // namespace mlshe::kernels
