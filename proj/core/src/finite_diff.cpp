#include "mlshe/finite_diff.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "mlshe/errors.hpp"

namespace mlshe::fd {

namespace {

// Fornberg's recursion for weights at z = 0 on nodes x[0..n-1].
std::vector<double> fornberg(const std::vector<double>& x, int m) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> c(n, std::vector<double>(static_cast<std::size_t>(m) + 1, 0.0));
    double c1 = 1.0;
    double c4 = x[0];
    c[0][0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        const int mn = std::min(static_cast<int>(i), m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i];
        for (std::size_t j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = c[i][static_cast<std::size_t>(m)];
    return w;
}

}  // namespace

int half_width(int derivative, int accuracy) {
    if (derivative == 0) return 0;
    return (derivative + 1) / 2 - 1 + accuracy / 2;
}

const Stencil& central_stencil(int derivative, int accuracy) {
    if (derivative < 0 || accuracy < 2 || accuracy % 2 != 0)
        throw DomainError("central stencil needs derivative >= 0 and an even accuracy >= 2");
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::unique_ptr<Stencil>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{derivative, accuracy}];
    if (!slot) {
        auto s = std::make_unique<Stencil>();
        s->derivative = derivative;
        s->accuracy = accuracy;
        s->half_width = half_width(derivative, accuracy);
        std::vector<double> nodes;
        for (int k = -s->half_width; k <= s->half_width; ++k) nodes.push_back(k);
        s->weights = fornberg(nodes, derivative);
        slot = std::move(s);
    }
    return *slot;
}

double apply(const Stencil& s, std::span<const double> values, std::size_t index, double step) {
    const auto p = static_cast<std::size_t>(s.half_width);
    if (index < p || index + p >= values.size()) return std::numeric_limits<double>::quiet_NaN();
    double acc = 0.0;
    for (int k = -s.half_width; k <= s.half_width; ++k)
        acc += s.weight(k) * values[static_cast<std::size_t>(static_cast<long>(index) + k)];
    return acc / std::pow(step, s.derivative);
}

std::vector<double> differentiate(std::span<const double> values, int derivative, int accuracy,
                                  double step) {
    const Stencil& s = central_stencil(derivative, accuracy);
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = apply(s, values, i, step);
    return out;
}

}  // namespace mlshe::fd
