#include "mlshe/oracles/references.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace mlshe::oracles {

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0, p1 = z;
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[static_cast<std::size_t>(i)] = z;
        w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

double integrate(const std::function<double(double)>& f, double a, double b, int order, int panels) {
    const auto [x, w] = gauss_legendre(order);
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        for (std::size_t i = 0; i < x.size(); ++i) total += w[i] * 0.5 * h * f(mid + 0.5 * h * x[i]);
    }
    return total;
}

double rayleigh_cdf(double r) { return r <= 0.0 ? 0.0 : -std::expm1(-0.5 * r * r); }

double rayleigh_exp_moment(double c) {
    const double phi = 0.5 * std::erfc(-c / std::numbers::sqrt2);
    return 1.0 + c * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * c * c) * phi;
}

double bridge_pair_exp_local_time(double t) { return rayleigh_exp_moment(std::sqrt(0.5 * t)); }

double two_bridge_noncrossing(double t, double x1, double x2, double y1, double y2) {
    return -std::expm1(-(x1 - x2) * (y1 - y2) / t);
}

MonteCarloValue gt_volume_monte_carlo(const std::vector<double>& y, std::size_t samples, std::uint64_t seed) {
    const std::size_t n = y.size();
    if (n < 2) return {1.0, 0.0};
    const double lo = y.back(), hi = y.front();
    const std::size_t interior = n * (n - 1) / 2;
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::size_t hits = 0;
    std::vector<std::vector<double>> rows(n);
    rows[0] = y;
    for (std::size_t s = 0; s < samples; ++s) {
        bool ok = true;
        for (std::size_t level = 1; level < n && ok; ++level) {
            rows[level].resize(n - level);
            for (std::size_t i = 0; i < n - level; ++i) {
                const double v = u(gen);
                rows[level][i] = v;
                if (!(rows[level - 1][i] >= v && v >= rows[level - 1][i + 1])) ok = false;
            }
        }
        hits += ok;
    }
    const double box = std::pow(hi - lo, static_cast<double>(interior));
    const double p = static_cast<double>(hits) / static_cast<double>(samples);
    return {box * p, box * std::sqrt(p * (1.0 - p) / static_cast<double>(samples))};
}

namespace {
double trap_weight(std::size_t k, std::size_t last, double h) {
    if (last == 0) return 0.0;
    return (k == 0 || k == last) ? 0.5 * h : h;
}
}  // namespace

double polymer_two_path_bruteforce(const polymer::DisorderPath& b) {
    if (b.n_levels != 3) throw std::invalid_argument("two-path brute force is for N = 3");
    const std::size_t m = b.m;
    const double h = b.dt();
    double total = 0.0;
    for (std::size_t k1 = 1; k1 <= m; ++k1) {
        double inner = 0.0;
        for (std::size_t k2 = 0; k2 <= k1; ++k2) {
            const double e1 = b(0, k1) + b(1, m) - b(1, k1);
            const double e2 = b(1, k2) + b(2, m) - b(2, k2);
            inner += trap_weight(k2, k1, h) * std::exp(e1 + e2);
        }
        total += trap_weight(k1, m, h) * inner;
    }
    return total;
}

double polymer_single_path_bruteforce_13(const polymer::DisorderPath& b) {
    if (b.n_levels < 3) throw std::invalid_argument("needs N >= 3");
    const std::size_t m = b.m;
    const double h = b.dt();
    double total = 0.0;
    for (std::size_t k2 = 1; k2 <= m; ++k2) {
        double inner = 0.0;
        for (std::size_t k1 = 0; k1 <= k2; ++k1) {
            const double e = b(0, k1) + b(1, k2) - b(1, k1) + b(2, m) - b(2, k2);
            inner += trap_weight(k1, k2, h) * std::exp(e);
        }
        total += trap_weight(k2, m, h) * inner;
    }
    return total;
}

}  // namespace mlshe::oracles
