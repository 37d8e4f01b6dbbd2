#include "mlshe/linalg.hpp"

#include <algorithm>
#include <utility>

namespace mlshe::linalg {

SignedLog SignedLog::from(double v) {
    if (v == 0.0) return {};
    return {std::log(std::abs(v)), v > 0 ? 1 : -1};
}

SignedLog operator*(SignedLog a, SignedLog b) {
    if (a.sign == 0 || b.sign == 0) return {};
    return {a.log_abs + b.log_abs, a.sign * b.sign};
}

SquareMatrix SquareMatrix::leading(std::size_t k) const {
    SquareMatrix out(k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) out(i, j) = (*this)(i, j);
    return out;
}

SignedLog log_determinant(SquareMatrix m) {
    const std::size_t n = m.size();
    if (n == 0) return {0.0, 1};
    SignedLog acc{0.0, 1};
    for (std::size_t i = 0; i < n; ++i) {
        double scale = 0.0;
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(m(i, j)));
        if (scale == 0.0) return {};
        for (std::size_t j = 0; j < n; ++j) m(i, j) /= scale;
        acc.log_abs += std::log(scale);
    }
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(m(i, k)) > std::abs(m(piv, k))) piv = i;
        if (m(piv, k) == 0.0) return {};
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
            acc.sign = -acc.sign;
        }
        const double d = m(k, k);
        if (d < 0) acc.sign = -acc.sign;
        acc.log_abs += std::log(std::abs(d));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = m(i, k) / d;
            if (f == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= f * m(k, j);
        }
    }
    return acc;
}

double determinant(const SquareMatrix& m) {
    const std::size_t n = m.size();
    if (n == 1) return m(0, 0);
    if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    return log_determinant(m).value();
}

}  // namespace mlshe::linalg
