#include "mlshe/oracles/symbolic_gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace mlshe::oracles {

double Polynomial::operator()(double w) const {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * w + *it;
    return acc;
}

Polynomial gaussian_derivative_polynomial(int k, double t) {
    Polynomial p{{1.0}};
    for (int step = 0; step < k; ++step) {
        std::vector<double> next(p.c.size() + 1, 0.0);
        for (std::size_t d = 1; d < p.c.size(); ++d) next[d - 1] += static_cast<double>(d) * p.c[d];
        for (std::size_t d = 0; d < p.c.size(); ++d) next[d + 1] -= p.c[d] / t;
        p.c = std::move(next);
    }
    return p;
}

double gaussian_derivative(double t, double x, double y, int i, int j) {
    const double w = x - y;
    const double g = std::exp(-w * w / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi * t);
    const double sign = (j % 2 == 0) ? 1.0 : -1.0;
    return sign * gaussian_derivative_polynomial(i + j, t)(w) * g;
}

double leibniz_determinant(const std::vector<std::vector<double>>& a) {
    const std::size_t n = a.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double total = 0.0;
    do {
        int inversions = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) inversions += perm[i] > perm[j];
        double term = inversions % 2 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) term *= a[i][perm[i]];
        total += term;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return total;
}

double free_wronskian(int n, double t, double x, double y) {
    if (n < 1 || n > 6) throw std::invalid_argument("free_wronskian supports 1 <= n <= 6");
    std::vector<std::vector<double>> a(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = gaussian_derivative(t, x, y, i, j);
    return leibniz_determinant(a);
}

std::int64_t hermite_hankel_determinant(int n) {
    if (n < 1 || n > 8) throw std::invalid_argument("hermite_hankel_determinant supports 1 <= n <= 8");
    // He_k(0) = 0 for odd k, (-1)^{k/2} (k-1)!! for even k.
    auto he0 = [](int k) -> std::int64_t {
        if (k % 2) return 0;
        std::int64_t v = 1;
        for (int m = k - 1; m > 1; m -= 2) v *= m;
        return (k / 2) % 2 ? -v : v;
    };
    const auto un = static_cast<std::size_t>(n);
    std::vector<std::vector<std::int64_t>> a(un, std::vector<std::int64_t>(un));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = he0(i + j);
    // Fraction-free elimination with row swaps.
    std::int64_t prev = 1;
    int sign = 1;
    for (std::size_t k = 0; k + 1 < un; ++k) {
        if (a[k][k] == 0) {
            std::size_t r = k + 1;
            while (r < un && a[r][k] == 0) ++r;
            if (r == un) return 0;
            std::swap(a[k], a[r]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < un; ++i)
            for (std::size_t j = k + 1; j < un; ++j) a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
        prev = a[k][k];
    }
    return sign * a[un - 1][un - 1];
}

}  // namespace mlshe::oracles
