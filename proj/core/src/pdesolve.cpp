#include "mlshe/pdesolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mlshe/detcalc.hpp"
#include "mlshe/diffusion.hpp"
#include "mlshe/errors.hpp"
#include "mlshe/finite_diff.hpp"
#include "mlshe/linalg.hpp"
#include "mlshe/parallel.hpp"

namespace mlshe::pde {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void validate_smooth(const PotentialField& phi, const GridSpec& grid) {
    grid.validate();
    if (!(grid.init_epsilon > 0.0) || grid.init_epsilon > grid.t_final / 100.0 * (1.0 + 1e-12))
        throw ConfigurationError("init_epsilon must lie in (0, t_final/100]");
    const double pad = 6.0 * std::sqrt(grid.t_final);
    for (double x : grid.x_nodes)
        if (x - pad < grid.y_min - 1e-12 || x + pad > grid.y_max + 1e-12)
            throw ConfigurationError("domain must extend at least 6 sqrt(t) beyond every x node");
    for (const Bump& b : phi.bumps()) {
        if (!std::isfinite(b.width_y) || b.amplitude == 0.0) continue;
        const double c = phi.is_reflected() ? -b.center_y : b.center_y;
        if (c - 3.0 * b.width_y < grid.y_min || c + 3.0 * b.width_y > grid.y_max)
            throw ConfigurationError("potential bump lies within 3 widths of the domain boundary");
    }
}

void multiply_potential(std::span<double> u, const PotentialField& phi, const GridSpec& grid, double s,
                        double h) {
    for (std::size_t j = 0; j < u.size(); ++j) u[j] *= std::exp(phi(s, grid.y(j)) * h);
}

}  // namespace

HeatSurface solve_smooth(const PotentialField& phi, const GridSpec& grid, const SolveOptions& options) {
    validate_smooth(phi, grid);
    const std::size_t nx = grid.x_nodes.size(), ny = grid.n_y, nt = grid.n_t;
    const double dt = grid.dt(), dy = grid.dy(), eps = grid.init_epsilon;
    const DiffusionStep half(ny, dy, 0.5 * dt, grid.stencil);
    const std::size_t keep = std::min<std::size_t>(3, nt + 1);

    HeatSurface out;
    out.grid = grid;
    out.potential = phi;
    out.slices.assign(keep, std::vector<double>(nx * ny, 0.0));
    for (std::size_t s = 0; s < keep; ++s) out.slice_times.push_back(grid.time(nt + 1 - keep + s));

    const bool flat = phi.is_zero();
    parallel::for_each_index(
        nx,
        [&](std::size_t ix) {
            const double x = grid.x_nodes[ix];
            std::vector<double> u(ny);
            for (std::size_t j = 0; j < ny; ++j) {
                const double y = grid.y(j);
                u[j] = kernels::heat_kernel(eps, x, y);
                if (!flat) u[j] *= std::exp(eps * phi(0.5 * eps, 0.5 * (x + y)));
            }
            u[0] = u[ny - 1] = 0.0;
            auto store = [&](std::size_t k) {
                if (k + keep < nt + 1) return;
                auto& slice = out.slices[k - (nt + 1 - keep)];
                std::copy(u.begin(), u.end(), slice.begin() + static_cast<std::ptrdiff_t>(ix * ny));
            };
            store(0);
            for (std::size_t k = 0; k < nt; ++k) {
                if (!flat) multiply_potential(u, phi, grid, grid.time(k), 0.5 * dt);
                half.apply(u);
                half.apply(u);
                if (!flat) multiply_potential(u, phi, grid, grid.time(k + 1), 0.5 * dt);
                store(k + 1);
            }
        },
        options.threads);

    for (std::size_t ix = 0; ix < nx; ++ix)
        for (std::size_t j = 1; j + 1 < ny; ++j)
            if (!(out.z(ix, j) > 0.0)) ++out.nonpositive_interior;
    return out;
}

IndexRange trust_region(const GridSpec& grid, double x, double t, double radius_sigmas) {
    const double r = radius_sigmas * std::sqrt(t);
    const double dy = grid.dy();
    const double lo = std::ceil((x - r - grid.y_min) / dy - 1e-9);
    const double hi = std::floor((x + r - grid.y_min) / dy + 1e-9);
    IndexRange out;
    out.lo = static_cast<std::size_t>(std::max(lo, 0.0));
    out.hi = static_cast<std::size_t>(std::min(hi, static_cast<double>(grid.n_y - 1)));
    return out;
}

int required_pencil(int n_max, int fd_accuracy) {
    int r = fd::half_width(n_max - 1, fd_accuracy);
    if (n_max >= 2) r = std::max(r, fd::half_width(1, fd_accuracy) + fd::half_width(n_max - 2, fd_accuracy));
    return r;
}

namespace {

std::size_t resolve_slice(const HeatSurface& s, std::size_t requested) {
    if (requested == static_cast<std::size_t>(-1)) return s.final_slice();
    if (requested >= s.slices.size()) throw DomainError("requested time slice is not retained");
    return requested;
}

void check_pencil(const GridSpec& grid, std::size_t ix, int half) {
    const auto nx = static_cast<long>(grid.x_nodes.size());
    const long c = static_cast<long>(ix);
    if (c - half < 0 || c + half >= nx)
        throw ConfigurationError("x pencil too short: need " + std::to_string(half) + " nodes on each side");
    const double h = grid.dy();
    for (long k = -half; k <= half; ++k) {
        const double expect = grid.x_nodes[ix] + static_cast<double>(k) * h;
        if (std::abs(grid.x_nodes[static_cast<std::size_t>(c + k)] - expect) > 1e-9 * h)
            throw ConfigurationError("x pencil must be uniformly spaced with the y grid step");
    }
}

// W_n(x node ix, y_j) for n = 1..order.
std::vector<std::vector<double>> wronskians_at(const HeatSurface& surface, std::size_t slice, std::size_t ix,
                                               int order, int acc) {
    const std::size_t ny = surface.grid.n_y;
    const double dy = surface.grid.dy();
    const auto dx = x_derivatives(surface, slice, ix, order, acc);
    std::vector<std::vector<double>> w(static_cast<std::size_t>(order), std::vector<double>(ny, kNaN));
    std::vector<const fd::Stencil*> st;
    for (int j = 0; j < order; ++j) st.push_back(&fd::central_stencil(j, acc));
    for (std::size_t iy = 0; iy < ny; ++iy) {
        detcalc::DerivativeTable table(static_cast<std::size_t>(order), dy);
        bool ok = true;
        for (int i = 0; i < order && ok; ++i)
            for (int j = 0; j < order && ok; ++j) {
                const double v = j == 0 ? dx[static_cast<std::size_t>(i)][iy]
                                        : fd::apply(*st[static_cast<std::size_t>(j)], dx[static_cast<std::size_t>(i)], iy, dy);
                if (!std::isfinite(v)) ok = false;
                table(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = v;
            }
        if (!ok) continue;
        for (int n = 1; n <= order; ++n) w[static_cast<std::size_t>(n - 1)][iy] = detcalc::wronskian(table, n);
    }
    return w;
}

}  // namespace

std::vector<std::vector<double>> x_derivatives(const HeatSurface& surface, std::size_t slice, std::size_t ix,
                                               int order, int fd_accuracy) {
    const std::size_t ny = surface.grid.n_y;
    const double h = surface.grid.dy();
    std::vector<std::vector<double>> dx(static_cast<std::size_t>(order), std::vector<double>(ny, 0.0));
    const auto& z = surface.slices.at(slice);
    for (int i = 0; i < order; ++i) {
        const fd::Stencil& s = fd::central_stencil(i, fd_accuracy);
        check_pencil(surface.grid, ix, s.half_width);
        auto& row = dx[static_cast<std::size_t>(i)];
        for (int k = -s.half_width; k <= s.half_width; ++k) {
            const double w = s.weight(k) / std::pow(h, i);
            if (w == 0.0) continue;
            const std::size_t src = static_cast<std::size_t>(static_cast<long>(ix) + k) * ny;
            for (std::size_t iy = 0; iy < ny; ++iy) row[iy] += w * z[src + iy];
        }
    }
    return dx;
}

LayerStack build_layers(const HeatSurface& surface, std::size_t ix, int n_max, const LayerOptions& options) {
    if (n_max < 1 || n_max > 5) throw DomainError("build_layers supports 1 <= N <= 5");
    const GridSpec& g = surface.grid;
    const int acc = options.fd_accuracy;
    const std::size_t slice = resolve_slice(surface, options.slice);
    check_pencil(g, ix, required_pencil(n_max, acc));
    const std::size_t ny = g.n_y;
    const double dy = g.dy();

    LayerStack st;
    st.t = surface.slice_times[slice];
    st.x = g.x_nodes[ix];
    st.ix = ix;
    st.n_max = n_max;
    st.dy = dy;
    st.y.resize(ny);
    for (std::size_t j = 0; j < ny; ++j) st.y[j] = g.y(j);
    for (int n = 1; n <= n_max; ++n) st.constants.push_back(kernels::confluent_constants(n, st.t));

    auto layers_at = [&](std::size_t node, int order) {
        auto w = wronskians_at(surface, slice, node, order, acc);
        for (int n = 1; n <= order; ++n)
            for (double& v : w[static_cast<std::size_t>(n - 1)])
                v *= st.constants[static_cast<std::size_t>(n - 1)].calibrated_constant;
        return w;
    };
    st.z = layers_at(ix, n_max);

    st.u.assign(static_cast<std::size_t>(n_max), std::vector<double>(ny, kNaN));
    for (int n = 1; n <= n_max; ++n)
        for (std::size_t j = 0; j < ny; ++j)
            st.u[static_cast<std::size_t>(n - 1)][j] =
                n == 1 ? st.z[0][j] : st.z[static_cast<std::size_t>(n - 1)][j] / st.z[static_cast<std::size_t>(n - 2)][j];

    st.s_printed.assign(static_cast<std::size_t>(n_max - 1), std::vector<double>(ny, kNaN));
    for (int n = 1; n < n_max; ++n)
        for (std::size_t j = 0; j < ny; ++j) {
            const double prev = n == 1 ? 1.0 : st.z[static_cast<std::size_t>(n - 2)][j];
            const double cur = st.z[static_cast<std::size_t>(n - 1)][j];
            st.s_printed[static_cast<std::size_t>(n - 1)][j] = prev * st.z[static_cast<std::size_t>(n)][j] / (n * st.t * cur * cur);
        }

    st.s_alt.assign(static_cast<std::size_t>(n_max - 1), std::vector<double>(ny, kNaN));
    if (n_max >= 2) {
        const fd::Stencil& d1 = fd::central_stencil(1, acc);
        const int q = d1.half_width;
        std::vector<std::vector<std::vector<double>>> logs;  // [offset][n-1][iy]
        for (int o = -q; o <= q; ++o) {
            auto zl = o == 0 ? std::vector<std::vector<double>>(st.z.begin(), st.z.end() - 1)
                             : layers_at(static_cast<std::size_t>(static_cast<long>(ix) + o), n_max - 1);
            for (auto& layer : zl)
                for (double& v : layer) v = v > 0.0 ? std::log(v) : kNaN;
            logs.push_back(std::move(zl));
        }
        for (int n = 1; n < n_max; ++n) {
            auto& out = st.s_alt[static_cast<std::size_t>(n - 1)];
            std::fill(out.begin(), out.end(), 0.0);
            for (int o = -q; o <= q; ++o) {
                const double w = d1.weight(o) / dy;
                if (w == 0.0) continue;
                const auto dyl = fd::differentiate(logs[static_cast<std::size_t>(o + q)][static_cast<std::size_t>(n - 1)], 1, acc, dy);
                for (std::size_t j = 0; j < ny; ++j) out[j] += w * dyl[j];
            }
        }
    }

    st.trust = trust_region(g, st.x, st.t, options.trust_sigmas);
    for (int n = 1; n <= n_max; ++n)
        for (std::size_t j = st.trust.lo; j <= st.trust.hi; ++j) {
            const double v = st.z[static_cast<std::size_t>(n - 1)][j];
            if (std::isnan(v)) throw ConfigurationError("trust region reaches beyond the derivative stencils");
            if (!(v > 0.0))
                throw SingularityError("Z_" + std::to_string(n) + " is not positive at y node " + std::to_string(j) +
                                           " inside the trust region",
                                       n, j);
        }
    return st;
}

LayerHistory build_history(const HeatSurface& surface, std::size_t ix, int n_max, const LayerOptions& options) {
    if (surface.slices.size() < 3) throw DomainError("residual checks need three retained slices");
    LayerHistory h;
    for (std::size_t s = 0; s < 3; ++s) {
        LayerOptions o = options;
        o.slice = s;
        h.stacks[s] = build_layers(surface, ix, n_max, o);
    }
    h.dt = surface.slice_times[1] - surface.slice_times[0];
    h.potential = surface.potential;
    return h;
}

namespace {

template <class F>
ResidualReport accumulate(const LayerStack& mid, int n, int margin, F&& residual_at, const std::vector<double>& scale_field) {
    ResidualReport r;
    r.n = n;
    double sum2 = 0.0;
    const std::size_t lo = mid.trust.lo + static_cast<std::size_t>(margin);
    const std::size_t hi = mid.trust.hi - static_cast<std::size_t>(margin);
    for (std::size_t j = lo; j <= hi; ++j) {
        const double v = residual_at(j);
        if (!std::isfinite(v)) throw DomainError("residual evaluation hit an undefined value");
        r.max_abs = std::max(r.max_abs, std::abs(v));
        sum2 += v * v;
        r.scale = std::max(r.scale, std::abs(scale_field[j]));
        ++r.nodes;
    }
    r.l2 = std::sqrt(sum2 * mid.dy);
    return r;
}

}  // namespace

ResidualReport layer_residual(const LayerHistory& h, int n) {
    const LayerStack& lo = h.stacks[0];
    const LayerStack& mid = h.stacks[1];
    const LayerStack& hi = h.stacks[2];
    if (n < 1 || n > mid.n_max) throw DomainError("layer_residual: layer out of range");
    const auto k = static_cast<std::size_t>(n - 1);
    const auto& u = mid.u[k];
    const double dy2 = mid.dy * mid.dy;
    auto at = [&](std::size_t j) {
        const double ut = (hi.u[k][j] - lo.u[k][j]) / (2.0 * h.dt);
        const double uyy = (u[j + 1] - 2.0 * u[j] + u[j - 1]) / dy2;
        double pot = h.potential(mid.t, mid.y[j]);
        if (n >= 2) {
            const auto& zp = mid.z[k - 1];
            pot += (std::log(zp[j + 1]) - 2.0 * std::log(zp[j]) + std::log(zp[j - 1])) / dy2 +
                   static_cast<double>(n - 1) / mid.t;
        }
        return ut - 0.5 * uyy - pot * u[j];
    };
    return accumulate(mid, n, 1, at, u);
}

ResidualReport s_evolution_residual(const LayerHistory& h, int n, SDefinition definition) {
    const LayerStack& mid = h.stacks[1];
    if (n < 1 || n >= mid.n_max) throw DomainError("s_evolution_residual needs n < N");
    const auto k = static_cast<std::size_t>(n - 1);
    auto field = [&](const LayerStack& s) -> const std::vector<double>& {
        return definition == SDefinition::Printed ? s.s_printed[k] : s.s_alt[k];
    };
    const auto& s = field(mid);
    const auto& u = mid.u[k];
    const double dy = mid.dy;
    auto flux = [&](std::size_t j) { return s[j] * (std::log(u[j + 1]) - std::log(u[j - 1])) / (2.0 * dy); };
    auto at = [&](std::size_t j) {
        const double st = (field(h.stacks[2])[j] - field(h.stacks[0])[j]) / (2.0 * h.dt);
        const double syy = (s[j + 1] - 2.0 * s[j] + s[j - 1]) / (dy * dy);
        const double div = (flux(j + 1) - flux(j - 1)) / (2.0 * dy);
        return st - 0.5 * syy - div;
    };
    return accumulate(mid, n, 2, at, s);
}

GTReconstruction gt_reconstruction_check(const HeatSurface& surface, std::size_t ix, const WeylPoint& y, int n,
                                         const LayerOptions& options) {
    if (n < 1 || static_cast<int>(y.size()) != n) throw DomainError("gt_reconstruction_check: need n probe points");
    const GridSpec& g = surface.grid;
    const LayerStack st = build_layers(surface, ix, std::max(n, 2), options);
    GTReconstruction r;
    r.n = n;
    std::vector<std::size_t> idx(static_cast<std::size_t>(n));
    std::vector<double> snapped(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        idx[static_cast<std::size_t>(i)] = g.nearest(y[static_cast<std::size_t>(i)]);
        if (!st.trust.contains(idx[static_cast<std::size_t>(i)]))
            throw DomainError("gt_reconstruction_check: probe outside the trust region");
        snapped[static_cast<std::size_t>(i)] = g.y(idx[static_cast<std::size_t>(i)]);
    }
    r.y = WeylPoint(snapped);
    if (!r.y.strictly_interior()) throw DomainError("gt_reconstruction_check: probe points must be distinct nodes");
    r.expected_sign = kernels::confluent_constants(n, st.t).signs.factorization;

    const std::size_t slice = resolve_slice(surface, options.slice);
    const auto dx = x_derivatives(surface, slice, ix, n, options.fd_accuracy);
    linalg::SquareMatrix m(static_cast<std::size_t>(n));
    double prod = 1.0;
    for (int j = 0; j < n; ++j) {
        prod *= st.z[0][idx[static_cast<std::size_t>(j)]];
        for (int i = 0; i < n; ++i) m(i, j) = dx[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(j)]];
    }
    const double delta = kernels::vandermonde(r.y);
    r.side_a = linalg::determinant(m) / delta;

    auto sampled = [&](const std::vector<std::vector<double>>& fields) {
        std::vector<detcalc::Function1D> fs;
        for (int k = 1; k < n; ++k) {
            const auto& f = fields[static_cast<std::size_t>(k - 1)];
            std::vector<double> v(f.begin() + static_cast<std::ptrdiff_t>(st.trust.lo),
                                  f.begin() + static_cast<std::ptrdiff_t>(st.trust.hi) + 1);
            fs.emplace_back(detcalc::SampledFunction(g.y(st.trust.lo), g.dy(), std::move(v)));
        }
        return fs;
    };
    const auto printed = detcalc::gt_integral(sampled(st.s_printed), r.y);
    const auto alt = detcalc::gt_integral(sampled(st.s_alt), r.y);
    r.side_b_printed = prod * printed.value / delta;
    r.side_b_alt = prod * alt.value / delta;
    r.ratio_printed = r.side_a / r.side_b_printed;
    r.ratio_alt = r.side_a / r.side_b_alt;
    r.error_printed = std::abs(r.ratio_printed) * printed.error_estimate / std::abs(printed.value);
    r.error_alt = std::abs(r.ratio_alt) * alt.error_estimate / std::abs(alt.value);
    return r;
}

RskReport rsk_symmetry_check(const PotentialField& phi, const GridSpec& grid, int n_max, const LayerOptions& options) {
    if (n_max < 1 || n_max > 3) throw DomainError("rsk_symmetry_check supports n <= 3");
    if (std::abs(grid.y_min + grid.y_max) > 1e-12 * (grid.y_max - grid.y_min))
        throw ConfigurationError("rsk_symmetry_check needs a symmetric grid");
    for (double v : grid.x_nodes) {
        bool found = false;
        for (double w : grid.x_nodes) found = found || std::abs(v + w) <= 1e-9 * grid.dy();
        if (!found) throw ConfigurationError("rsk_symmetry_check needs x nodes symmetric about 0");
    }
    const std::size_t ix0 = grid.x_index(0.0);
    const HeatSurface a = solve_smooth(phi, grid);
    const HeatSurface b = solve_smooth(phi.reflected(), grid);
    const LayerStack sa = build_layers(a, ix0, n_max, options);
    const LayerStack sb = build_layers(b, ix0, n_max, options);
    RskReport r;
    r.n_max = n_max;
    const std::size_t ny = grid.n_y;
    for (int n = 1; n <= n_max; ++n) {
        double worst = 0.0;
        r.nodes = 0;
        for (std::size_t j = sa.trust.lo; j <= sa.trust.hi; ++j) {
            const double lhs = sb.u[static_cast<std::size_t>(n - 1)][j];
            const double rhs = sa.u[static_cast<std::size_t>(n - 1)][ny - 1 - j];
            worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
            ++r.nodes;
        }
        r.max_rel_error.push_back(worst);
    }
    return r;
}

ConfluentRatio km_confluent_ratio(const HeatSurface& surface, std::size_t ix, std::size_t iy, int n, int k) {
    if (n < 1 || k < 1) throw DomainError("km_confluent_ratio: need n >= 1 and k >= 1");
    const GridSpec& g = surface.grid;
    const double t = surface.t();
    auto ratio = [&](int level) {
        const auto un = static_cast<std::size_t>(n);
        std::vector<long> off(un);
        for (std::size_t i = 0; i < un; ++i) off[i] = static_cast<long>(n - 1 - 2 * static_cast<int>(i)) * level;
        check_pencil(g, ix, static_cast<int>(off[0]));
        linalg::SquareMatrix m(un);
        std::vector<double> xs(un), ys(un);
        for (std::size_t i = 0; i < un; ++i) {
            const long yi = static_cast<long>(iy) + off[i];
            if (yi < 0 || yi >= static_cast<long>(g.n_y)) throw DomainError("km_confluent_ratio: y offsets leave the grid");
            xs[i] = g.x_nodes[static_cast<std::size_t>(static_cast<long>(ix) + off[i])];
            ys[i] = g.y(static_cast<std::size_t>(yi));
        }
        for (std::size_t i = 0; i < un; ++i)
            for (std::size_t j = 0; j < un; ++j)
                m(i, j) = surface.z(static_cast<std::size_t>(static_cast<long>(ix) + off[i]),
                                    static_cast<std::size_t>(static_cast<long>(iy) + off[j]));
        const auto det = linalg::log_determinant(m);
        const auto pstar = kernels::km_density_log(t, WeylPoint(xs), WeylPoint(ys));
        return det.sign * pstar.sign * std::exp(det.log_abs - pstar.log_abs);
    };
    ConfluentRatio r;
    r.n = n;
    r.ratio_fine = ratio(k);
    r.ratio_coarse = ratio(2 * k);
    r.delta_fine = 2.0 * k * g.dy();
    r.extrapolated = (4.0 * r.ratio_fine - r.ratio_coarse) / 3.0;
    return r;
}

CalibrationProbe calibrate_probe(const HeatSurface& surface, std::size_t ix, std::size_t iy, int n,
                                 const LayerOptions& options) {
    const GridSpec& g = surface.grid;
    const std::size_t slice = surface.final_slice();
    const auto w = wronskians_at(surface, slice, ix, n, options.fd_accuracy);
    CalibrationProbe c;
    c.n = n;
    c.x = g.x_nodes[ix];
    c.y = g.y(iy);
    c.wronskian = w[static_cast<std::size_t>(n - 1)][iy];
    const ConfluentRatio r = km_confluent_ratio(surface, ix, iy, n);
    c.z_n_estimate = std::pow(kernels::heat_kernel(surface.t(), c.x, c.y), n) * r.extrapolated;
    c.constant = c.z_n_estimate / c.wronskian;
    return c;
}

}  // namespace mlshe::pde
