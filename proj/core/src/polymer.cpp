#include "mlshe/polymer.hpp"

#include <cmath>
#include <string>

#include "mlshe/errors.hpp"
#include "mlshe/linalg.hpp"
#include "mlshe/parallel.hpp"
#include "mlshe/rng.hpp"

namespace mlshe::polymer {

DisorderPath DisorderPath::sample(std::size_t n_levels, std::size_t m, double t, std::uint64_t seed) {
    DisorderPath p = zero(n_levels, m, t);
    p.seed = seed;
    const double sd = std::sqrt(p.dt());
    for (std::size_t i = 0; i < n_levels; ++i) {
        rng::Stream s(seed, rng::derive(0x504F4C59ull, i));
        for (std::size_t k = 1; k <= m; ++k) p(i, k) = p(i, k - 1) + sd * s.normal();
    }
    return p;
}

DisorderPath DisorderPath::zero(std::size_t n_levels, std::size_t m, double t) {
    if (n_levels == 0 || m == 0 || !(t > 0.0)) throw DomainError("disorder path needs N >= 1, m >= 1, t > 0");
    DisorderPath p;
    p.n_levels = n_levels;
    p.m = m;
    p.t = t;
    p.b.assign(n_levels * (m + 1), 0.0);
    return p;
}

DisorderPath DisorderPath::refined(std::size_t factor) const {
    if (factor == 0) throw DomainError("refinement factor must be positive");
    DisorderPath p = zero(n_levels, m * factor, t);
    p.seed = seed;
    for (std::size_t i = 0; i < n_levels; ++i)
        for (std::size_t k = 0; k <= p.m; ++k) {
            const std::size_t c = k / factor, r = k % factor;
            const double w = static_cast<double>(r) / static_cast<double>(factor);
            p(i, k) = r == 0 ? (*this)(i, c) : (1.0 - w) * (*this)(i, c) + w * (*this)(i, c + 1);
        }
    return p;
}

namespace {

// Fills row[j - i] = Z_{i,j}(t) for j = i..N (1-based levels).
void fill_from(const DisorderPath& path, std::size_t i, std::size_t j_max, std::vector<double>& out) {
    const std::size_t m = path.m;
    const double h = path.dt();
    std::vector<double> f(m + 1), g(m + 1);
    for (std::size_t k = 0; k <= m; ++k) f[k] = std::exp(path(i - 1, k));
    out.assign(j_max - i + 1, 0.0);
    out[0] = f[m];
    for (std::size_t l = i + 1; l <= j_max; ++l) {
        // F_l(s_k) = e^{B_l(s_k)} * int_0^{s_k} F_{l-1}(s) e^{-B_l(s)} ds
        double acc = 0.0;
        double prev = f[0] * std::exp(-path(l - 1, 0));
        g[0] = 0.0;
        for (std::size_t k = 1; k <= m; ++k) {
            const double cur = f[k] * std::exp(-path(l - 1, k));
            acc += 0.5 * h * (prev + cur);
            prev = cur;
            g[k] = acc * std::exp(path(l - 1, k));
        }
        f.swap(g);
        out[l - i] = f[m];
    }
}

}  // namespace

double single_path_partition(const DisorderPath& path, std::size_t i, std::size_t j) {
    if (i == 0 || i > j) throw DomainError("single_path_partition needs 1 <= i <= j");
    if (j > path.n_levels) throw DomainError("single_path_partition: level beyond N");
    std::vector<double> out;
    fill_from(path, i, j, out);
    return out.back();
}

HierarchyTable hierarchy_table(const DisorderPath& path, unsigned threads) {
    const std::size_t n = path.n_levels;
    HierarchyTable t;
    t.n_levels = n;
    t.z.assign(n * n, 0.0);
    parallel::for_each_index(
        n,
        [&](std::size_t r) {
            std::vector<double> out;
            fill_from(path, r + 1, n, out);
            for (std::size_t c = 0; c < out.size(); ++c) t.z[r * n + r + c] = out[c];
        },
        threads);
    return t;
}

double multilayer_partition(const HierarchyTable& table, std::size_t n) {
    const std::size_t big = table.n_levels;
    if (n == 0 || n > big) throw DomainError("multilayer_partition needs 1 <= n <= N");
    linalg::SquareMatrix a(n);
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= n; ++j) a(i - 1, j - 1) = table(i, big - n + j);
    return linalg::determinant(a);
}

std::vector<double> multilayer_all(const HierarchyTable& table) {
    std::vector<double> z;
    for (std::size_t n = 1; n <= table.n_levels; ++n) z.push_back(multilayer_partition(table, n));
    return z;
}

std::vector<double> x_increments(const std::vector<double>& z) {
    std::vector<double> x(z.size());
    for (std::size_t n = 0; n < z.size(); ++n) {
        if (!(z[n] > 0.0))
            throw DomainError("non-positive partition function at layer " + std::to_string(n + 1));
        x[n] = n == 0 ? std::log(z[0]) : std::log(z[n] / z[n - 1]);
    }
    return x;
}

}  // namespace mlshe::polymer
