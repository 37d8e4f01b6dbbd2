#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace mlshe::linalg {

// A real number stored as sign * exp(log_abs); sign 0 means exactly zero.
struct SignedLog {
    double log_abs = -INFINITY;
    int sign = 0;

    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
    static SignedLog from(double v);
};

SignedLog operator*(SignedLog a, SignedLog b);

// Dense row-major square matrix; small sizes only (n <= 16 or so).
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}

    std::size_t size() const { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
    std::span<const double> data() const { return a_; }
    std::span<double> data() { return a_; }

    // Leading k-by-k block.
    SquareMatrix leading(std::size_t k) const;

private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

// Determinant via LU with partial pivoting. Each row is rescaled by its
// largest entry first, so matrices of tiny kernel values do not underflow.
SignedLog log_determinant(SquareMatrix m);
double determinant(const SquareMatrix& m);

}  // namespace mlshe::linalg
