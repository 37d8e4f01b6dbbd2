#include "mlshe/detcalc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mlshe/errors.hpp"
#include "mlshe/finite_diff.hpp"
#include "mlshe/rng.hpp"

namespace mlshe::detcalc {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

linalg::SquareMatrix block(const DerivativeTable& t, int n) {
    if (n < 1 || static_cast<std::size_t>(n) > t.size())
        throw DomainError("wronskian order exceeds the derivative table size");
    linalg::SquareMatrix m(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = t(i, j);
    return m;
}
}  // namespace

double wronskian(const DerivativeTable& table, int n) { return linalg::determinant(block(table, n)); }

linalg::SignedLog log_wronskian(const DerivativeTable& table, int n) {
    return linalg::log_determinant(block(table, n));
}

double DarbouxChain::reconstruct_next(std::size_t n) const {
    return t_fields.at(n - 1) * w.at(n) * w.at(n) / w.at(n - 1);
}

double DarbouxGrid::max_residual(int n) const {
    double m = 0.0;
    for (double r : residual.at(static_cast<std::size_t>(n - 1)))
        if (std::isfinite(r)) m = std::max(m, r);
    return m;
}

DarbouxGrid darboux_chain(const TableGrid& grid, int order) {
    if (order < 1) throw DomainError("darboux_chain: order must be >= 1");
    if (grid.tables.size() != grid.nx * grid.ny) throw DomainError("darboux_chain: table count mismatch");
    DarbouxGrid out;
    out.nx = grid.nx;
    out.ny = grid.ny;
    out.order = order;
    out.chains.resize(grid.tables.size());
    std::vector<std::vector<double>> log_w(static_cast<std::size_t>(order) + 1,
                                           std::vector<double>(grid.tables.size(), 0.0));
    for (std::size_t node = 0; node < grid.tables.size(); ++node) {
        DarbouxChain& c = out.chains[node];
        c.w.assign(static_cast<std::size_t>(order) + 1, 1.0);
        for (int n = 1; n <= order; ++n) {
            const double w = wronskian(grid.tables[node], n);
            if (w == 0.0 || !std::isfinite(w))
                throw SingularityError("Wronskian W_" + std::to_string(n) + " vanishes at node " +
                                           std::to_string(node),
                                       n, node);
            c.w[static_cast<std::size_t>(n)] = w;
            log_w[static_cast<std::size_t>(n)][node] = std::log(std::abs(w));
        }
        for (int n = 1; n < order; ++n) {
            const auto k = static_cast<std::size_t>(n);
            c.t_fields.push_back(c.w[k - 1] * c.w[k + 1] / (c.w[k] * c.w[k]));
        }
    }
    out.residual.assign(static_cast<std::size_t>(std::max(order - 1, 0)),
                        std::vector<double>(grid.tables.size(), kNaN));
    for (int n = 1; n < order; ++n) {
        const auto& lw = log_w[static_cast<std::size_t>(n)];
        for (std::size_t ix = 1; ix + 1 < grid.nx; ++ix)
            for (std::size_t iy = 1; iy + 1 < grid.ny; ++iy) {
                auto at = [&](std::size_t a, std::size_t b) { return lw[a * grid.ny + b]; };
                const double mixed = (at(ix + 1, iy + 1) - at(ix + 1, iy - 1) - at(ix - 1, iy + 1) +
                                      at(ix - 1, iy - 1)) /
                                     (4.0 * grid.hx * grid.hy);
                const std::size_t node = ix * grid.ny + iy;
                out.residual[static_cast<std::size_t>(n - 1)][node] =
                    std::abs(out.chains[node].t_fields[static_cast<std::size_t>(n - 1)] - mixed);
            }
    }
    return out;
}

namespace {

std::vector<double> nested_quotient(const std::vector<std::vector<double>>& dxg,
                                    const std::vector<std::vector<double>>& t_fields, double dy,
                                    int accuracy) {
    const std::size_t n = dxg.size() - 1;
    const std::size_t ny = dxg[0].size();
    std::vector<double> f(ny);
    for (std::size_t j = 0; j < ny; ++j) f[j] = dxg[n][j] / dxg[0][j];
    for (std::size_t k = 1; k < n; ++k) {
        std::vector<double> d = fd::differentiate(f, 1, accuracy, dy);
        for (std::size_t j = 0; j < ny; ++j) {
            const double tk = t_fields[k - 1][j];
            if (std::isfinite(d[j]) && std::abs(tk) < 1e-12)
                throw SingularityError("divided_difference_chain: T_" + std::to_string(k) +
                                           " below 1e-12",
                                       static_cast<int>(k), j);
            d[j] /= tk;
        }
        f = std::move(d);
    }
    return fd::differentiate(f, 1, accuracy, dy);
}

}  // namespace

FieldEstimate divided_difference_chain(const std::vector<std::vector<double>>& dxg,
                                       const std::vector<std::vector<double>>& t_fields, double dy,
                                       int accuracy) {
    if (dxg.size() < 2) throw DomainError("divided_difference_chain needs derivative orders 0..n, n >= 1");
    const std::size_t n = dxg.size() - 1;
    if (t_fields.size() + 1 < n) throw DomainError("divided_difference_chain needs T_1..T_{n-1}");
    for (const auto& row : dxg)
        if (row.size() != dxg[0].size()) throw DomainError("divided_difference_chain: ragged samples");
    FieldEstimate out;
    out.values = nested_quotient(dxg, t_fields, dy, accuracy);
    const int other = accuracy == 2 ? 4 : 2;
    const std::vector<double> alt = nested_quotient(dxg, t_fields, dy, other);
    out.error_estimate.resize(out.values.size());
    for (std::size_t j = 0; j < out.values.size(); ++j)
        out.error_estimate[j] = std::abs(out.values[j] - alt[j]);
    return out;
}

SampledFunction::SampledFunction(double x0, double dx, std::vector<double> values)
    : x0_(x0), dx_(dx), v_(std::move(values)) {
    if (v_.size() < 4 || !(dx_ > 0.0)) throw DomainError("SampledFunction needs >= 4 samples and dx > 0");
}

double SampledFunction::operator()(double x) const {
    const double s = (x - x0_) / dx_;
    const double last = static_cast<double>(v_.size() - 1);
    if (s < -1e-9 || s > last + 1e-9) throw DomainError("SampledFunction evaluated outside its grid");
    const double sc = std::clamp(s, 0.0, last);
    auto base = static_cast<long>(std::floor(sc)) - 1;
    base = std::clamp(base, 0L, static_cast<long>(v_.size()) - 4);
    const double r = sc - static_cast<double>(base);
    const double* p = v_.data() + base;
    // Lagrange basis on offsets 0, 1, 2, 3.
    const double l0 = -(r - 1) * (r - 2) * (r - 3) / 6.0;
    const double l1 = r * (r - 2) * (r - 3) / 2.0;
    const double l2 = -r * (r - 1) * (r - 3) / 2.0;
    const double l3 = r * (r - 1) * (r - 2) / 6.0;
    return l0 * p[0] + l1 * p[1] + l2 * p[2] + l3 * p[3];
}

InterlaceResult interlace_integral(std::span<const Function1D> f, const WeylPoint& y) {
    const std::size_t n = f.size();
    if (n != y.size()) throw DomainError("interlace_integral: need one function per coordinate");
    if (n < 1) throw DomainError("interlace_integral: empty input");
    if (!y.strictly_interior()) throw DomainError("interlace_integral: y must be strictly decreasing");
    const double lo = y[n - 1], hi = y[0];
    for (int q = 0; q <= 64; ++q) {
        const double z = lo + (hi - lo) * q / 64.0;
        if (std::abs(f[0](z) - 1.0) > 1e-12)
            throw ContractViolation("interlace_integral: first function must be identically 1");
    }
    InterlaceResult r;
    r.orientation_sign = kernels::confluent_constants(static_cast<int>(n), 1.0).signs.interlace;
    linalg::SquareMatrix plain(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) plain(i, j) = f[i](y[j]);
    r.determinant_side = linalg::determinant(plain);
    if (n == 1) {
        r.integral_side = 1.0;
    } else {
        linalg::SquareMatrix diff(n - 1);
        for (std::size_t i = 1; i < n; ++i)
            for (std::size_t j = 0; j + 1 < n; ++j) diff(i - 1, j) = plain(i, j) - plain(i, j + 1);
        r.integral_side = linalg::determinant(diff);
    }
    const double expected = r.orientation_sign * r.determinant_side;
    const double scale = std::max(std::abs(expected), std::abs(r.integral_side));
    r.relative_discrepancy = scale == 0.0 ? 0.0 : std::abs(r.integral_side - expected) / scale;
    return r;
}

bool GTPattern::interlaced() const {
    const std::size_t n = top.size();
    if (levels.size() + 1 != n) return false;
    auto below = [](const std::vector<double>& z, std::span<const double> yv) {
        if (z.size() + 1 != yv.size()) return false;
        for (std::size_t i = 0; i < z.size(); ++i)
            if (!(yv[i] >= z[i] && z[i] >= yv[i + 1])) return false;
        return true;
    };
    for (std::size_t k = 0; k + 1 < levels.size(); ++k)
        if (!below(levels[k], levels[k + 1])) return false;
    return levels.empty() || below(levels.back(), top.coords());
}

namespace {

class NestedSimpson {
public:
    NestedSimpson(std::span<const Function1D> s, int n, int m) : s_(s), n_(n), m_(m) {
        weights_.resize(static_cast<std::size_t>(m) + 1);
        for (int q = 0; q <= m; ++q) weights_[static_cast<std::size_t>(q)] = (q == 0 || q == m) ? 1.0 : (q % 2 ? 4.0 : 2.0);
    }

    double level(int j, const std::vector<double>& v) const {
        if (j == 1) return 1.0;
        std::vector<double> w(static_cast<std::size_t>(j - 1));
        return box(j, v, 0, w);
    }

private:
    double box(int j, const std::vector<double>& v, std::size_t i, std::vector<double>& w) const {
        if (i + 1 == static_cast<std::size_t>(j)) return level(j - 1, w);
        const double a = v[i + 1], b = v[i];
        if (b <= a) return 0.0;
        const double h = (b - a) / m_;
        const Function1D& sk = s_[static_cast<std::size_t>(n_ - j)];
        double sum = 0.0;
        for (int q = 0; q <= m_; ++q) {
            const double z = (q == m_) ? b : a + h * q;
            const double sv = sk(z);
            if (!(sv >= 0.0))
                throw DomainError("gt_integral: S_" + std::to_string(n_ - j + 1) + " is negative at " +
                                  std::to_string(z));
            w[i] = z;
            sum += weights_[static_cast<std::size_t>(q)] * sv * box(j, v, i + 1, w);
        }
        return sum * h / 3.0;
    }

    std::span<const Function1D> s_;
    int n_;
    int m_;
    std::vector<double> weights_;
};

double mc_sample(std::span<const Function1D> s, int n, const std::vector<double>& top, rng::Stream& stream) {
    double weight = 1.0;
    std::vector<double> v = top;
    for (int j = n; j >= 2; --j) {
        std::vector<double> w(static_cast<std::size_t>(j - 1));
        const Function1D& sk = s[static_cast<std::size_t>(n - j)];
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double a = v[i + 1], b = v[i];
            w[i] = a + (b - a) * stream.uniform();
            const double sv = sk(w[i]);
            if (!(sv >= 0.0)) throw DomainError("gt_integral: S field is negative");
            weight *= (b - a) * sv;
        }
        v = std::move(w);
    }
    return weight;
}

}  // namespace

GTIntegralResult gt_integral(std::span<const Function1D> s_fields, const WeylPoint& y, const GTOptions& options) {
    const int n = static_cast<int>(y.size());
    if (n < 1) throw DomainError("gt_integral: empty top row");
    if (static_cast<int>(s_fields.size()) < n - 1) throw DomainError("gt_integral: need S_1..S_{n-1}");
    GTIntegralResult r;
    if (n == 1) {
        r.value = r.coarse_value = 1.0;
        r.method = "simpson";
        return r;
    }
    if (!y.strictly_interior()) {
        r.degenerate = true;
        r.method = "degenerate";
        return r;
    }
    const std::vector<double> top(y.coords().begin(), y.coords().end());
    if (n >= options.monte_carlo_from) {
        r.method = "monte-carlo";
        rng::Stream stream(options.seed, rng::derive(0x67744D43ull, static_cast<std::uint64_t>(n)));
        double sum = 0.0, sum2 = 0.0;
        for (std::uint64_t k = 0; k < options.mc_samples; ++k) {
            const double w = mc_sample(s_fields, n, top, stream);
            sum += w;
            sum2 += w * w;
        }
        const double ns = static_cast<double>(options.mc_samples);
        r.value = sum / ns;
        r.coarse_value = std::numeric_limits<double>::quiet_NaN();
        r.error_estimate = std::sqrt(std::max(sum2 / ns - r.value * r.value, 0.0) / ns);
        return r;
    }
    int m = std::max(2, options.nodes - options.nodes % 2);
    // Nested Simpson cost grows as m^{n(n-1)/2}; cap the per-coordinate count for n = 4.
    if (n == 4) m = std::min(m, 8);
    r.method = "simpson";
    r.coarse_value = NestedSimpson(s_fields, n, m).level(n, top);
    r.value = NestedSimpson(s_fields, n, 2 * m).level(n, top);
    r.error_estimate = std::abs(r.value - r.coarse_value) / 15.0;
    return r;
}

FactorizationReport gt_factorization_check(std::span<const Function1D> dxg,
                                           std::span<const Function1D> t_fields, const WeylPoint& y,
                                           const GTOptions& options) {
    const std::size_t n = y.size();
    if (dxg.size() < n) throw DomainError("gt_factorization_check: need d_x^k g for k < n");
    FactorizationReport r;
    r.expected_sign = kernels::confluent_constants(static_cast<int>(n), 1.0).signs.factorization;
    linalg::SquareMatrix m(n);
    double prod = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
        prod *= dxg[0](y[j]);
        for (std::size_t i = 0; i < n; ++i) m(i, j) = dxg[i](y[j]);
    }
    r.lhs = linalg::determinant(m);
    const GTIntegralResult gt = gt_integral(t_fields, y, options);
    r.rhs = prod * gt.value;
    r.ratio = r.lhs / r.rhs;
    r.error_estimate = std::abs(prod * gt.error_estimate / r.rhs * r.ratio);
    return r;
}

}  // namespace mlshe::detcalc
