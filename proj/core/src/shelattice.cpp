#include "mlshe/shelattice.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <limits>

#include "mlshe/diffusion.hpp"
#include "mlshe/errors.hpp"
#include "mlshe/linalg.hpp"
#include "mlshe/parallel.hpp"
#include "mlshe/pdesolve.hpp"
#include "mlshe/rng.hpp"
#include "mlshe/stats.hpp"

namespace mlshe::lattice {

namespace {
constexpr std::uint64_t kNoiseTag = 0x4E6F697365ull;

std::uint64_t to_le(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t r = 0;
        for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xFF);
        return r;
    }
    return v;
}
}  // namespace

NoiseField::NoiseField(std::uint64_t seed, std::size_t n_t, std::size_t n_y, double dt, double dy)
    : kind_(Kind::Generated), seed_(seed), n_t_(n_t), n_y_(n_y), dt_(dt), dy_(dy) {}

NoiseField NoiseField::zeros(std::size_t n_t, std::size_t n_y, double dt, double dy) {
    NoiseField f(0, n_t, n_y, dt, dy);
    f.kind_ = Kind::Zero;
    return f;
}

NoiseField NoiseField::from_values(std::uint64_t seed, std::size_t n_t, std::size_t n_y, double dt, double dy,
                                   std::vector<double> values) {
    if (values.size() != n_t * n_y) throw DomainError("noise values do not match the declared shape");
    NoiseField f(seed, n_t, n_y, dt, dy);
    f.kind_ = Kind::Stored;
    f.values_ = std::move(values);
    return f;
}

NoiseField NoiseField::for_grid(std::uint64_t seed, const GridSpec& grid) {
    return NoiseField(seed, grid.n_t, grid.n_y, grid.dt(), grid.dy());
}

double NoiseField::at(std::size_t k, std::size_t j) const {
    switch (kind_) {
        case Kind::Zero: return 0.0;
        case Kind::Stored: return values_[(k + offset_) * n_y_ + j];
        case Kind::Generated: break;
    }
    return rng::normal_pair(seed_, rng::derive(kNoiseTag, k + offset_), j / 2)[j % 2];
}

void NoiseField::row(std::size_t k, std::span<double> out) const {
    if (out.size() != n_y_) throw DomainError("noise row size mismatch");
    if (kind_ == Kind::Zero) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    if (kind_ == Kind::Stored) {
        std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>((k + offset_) * n_y_), n_y_, out.begin());
        return;
    }
    const std::uint64_t stream = rng::derive(kNoiseTag, k + offset_);
    for (std::size_t j = 0; j < n_y_; j += 2) {
        const auto z = rng::normal_pair(seed_, stream, j / 2);
        out[j] = z[0];
        if (j + 1 < n_y_) out[j + 1] = z[1];
    }
}

NoiseField NoiseField::segment(std::size_t first, std::size_t count) const {
    if (first + count > n_t_) throw DomainError("noise segment outside the field");
    NoiseField f = *this;
    f.offset_ = offset_ + first;
    f.n_t_ = count;
    return f;
}

NoiseField NoiseField::materialized() const {
    std::vector<double> v(n_t_ * n_y_);
    for (std::size_t k = 0; k < n_t_; ++k) row(k, std::span<double>(v).subspan(k * n_y_, n_y_));
    return from_values(seed_, n_t_, n_y_, dt_, dy_, std::move(v));
}

void NoiseField::write(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigurationError("cannot open noise file for writing: " + path.string());
    write(os);
    if (!os) throw ConfigurationError("failed writing noise file: " + path.string());
}

void NoiseField::write(std::ostream& os) const {
    auto put = [&](std::uint64_t v) {
        v = to_le(v);
        os.write(reinterpret_cast<const char*>(&v), sizeof v);
    };
    put(seed_);
    put(n_t_);
    put(n_y_);
    put(std::bit_cast<std::uint64_t>(dt_));
    put(std::bit_cast<std::uint64_t>(dy_));
    std::vector<double> r(n_y_);
    for (std::size_t k = 0; k < n_t_; ++k) {
        row(k, r);
        for (double v : r) put(std::bit_cast<std::uint64_t>(v));
    }
}

NoiseField NoiseField::read(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigurationError("cannot open noise file: " + path.string());
    return read(is);
}

NoiseField NoiseField::read(std::istream& is) {
    auto get = [&] {
        std::uint64_t v = 0;
        is.read(reinterpret_cast<char*>(&v), sizeof v);
        if (!is) throw ConfigurationError("truncated noise stream");
        return to_le(v);
    };
    const std::uint64_t seed = get();
    const std::uint64_t n_t = get();
    const std::uint64_t n_y = get();
    const double dt = std::bit_cast<double>(get());
    const double dy = std::bit_cast<double>(get());
    if (n_t == 0 || n_y == 0 || n_t > (1ull << 32) / n_y) throw ConfigurationError("noise header has an implausible shape");
    std::vector<double> v(static_cast<std::size_t>(n_t * n_y));
    for (double& x : v) x = std::bit_cast<double>(get());
    return from_values(seed, static_cast<std::size_t>(n_t), static_cast<std::size_t>(n_y), dt, dy, std::move(v));
}

std::vector<double> initial_condition(const GridSpec& grid, double x) {
    std::vector<double> u(grid.n_y, 0.0);
    if (grid.init_epsilon == 0.0) {
        if (!grid.on_grid(x)) throw ConfigurationError("discrete delta start needs x on a grid node");
        u[grid.nearest(x)] = 1.0 / grid.dy();
    } else {
        for (std::size_t j = 0; j < grid.n_y; ++j) u[j] = kernels::heat_kernel(grid.init_epsilon, x, grid.y(j));
    }
    u.front() = u.back() = 0.0;
    return u;
}

namespace {

void check_noise(const NoiseField& noise, const GridSpec& grid) {
    grid.validate();
    if (noise.n_t() != grid.n_t || noise.n_y() != grid.n_y)
        throw ConfigurationError("noise field shape does not match the grid");
    if (std::abs(noise.dt() - grid.dt()) > 1e-12 * grid.dt() || std::abs(noise.dy() - grid.dy()) > 1e-12 * grid.dy())
        throw ConfigurationError("noise field steps do not match the grid");
}

// Advances rows in place; on_step(k) runs after step k (k = 1..n_t).
template <class OnStep>
std::size_t march(const NoiseField& noise, const GridSpec& grid, std::vector<double>& rows, std::size_t n_rows,
                  const LatticeOptions& options, OnStep&& on_step) {
    const std::size_t ny = grid.n_y;
    const double dt = grid.dt(), dy = grid.dy();
    const DiffusionStep half(ny, dy, 0.5 * dt, grid.stencil);
    const double amp = std::sqrt(dt / dy);
    std::vector<double> xi(ny), mult(ny);
    std::size_t negative = 0;
    for (std::size_t k = 0; k < grid.n_t; ++k) {
        noise.row(k, xi);
        const double s = grid.time(k) + 0.5 * dt;
        for (std::size_t j = 0; j < ny; ++j) {
            double m = 1.0 + xi[j] * amp;
            if (options.shift) m += (*options.shift)(s, grid.y(j)) * dt;
            if (m < 0.0) ++negative;
            mult[j] = m;
        }
        for (std::size_t r = 0; r < n_rows; ++r) {
            std::span<double> u(rows.data() + r * ny, ny);
            half.apply(u);
            for (std::size_t j = 0; j < ny; ++j) u[j] *= mult[j];
            half.apply(u);
        }
        on_step(k + 1);
    }
    const double limit = options.negative_fraction_limit * static_cast<double>(grid.n_t * ny);
    if (static_cast<double>(negative) > limit)
        throw StepSizeError("more than the allowed fraction of lattice multipliers are negative; reduce dt");
    return negative;
}

}  // namespace

std::vector<double> evolve_rows(const NoiseField& noise, const GridSpec& grid, std::vector<double> rows,
                                std::size_t n_rows, const LatticeOptions& options, std::size_t* negative) {
    check_noise(noise, grid);
    if (rows.size() != n_rows * grid.n_y) throw DomainError("evolve_rows: block size mismatch");
    const std::size_t neg = march(noise, grid, rows, n_rows, options, [](std::size_t) {});
    if (negative) *negative = neg;
    return rows;
}

LatticeSolution evolve_she(const NoiseField& noise, const GridSpec& grid, const LatticeOptions& options) {
    check_noise(noise, grid);
    const std::size_t nx = grid.x_nodes.size(), ny = grid.n_y, nt = grid.n_t;
    std::vector<double> rows(nx * ny);
    for (std::size_t i = 0; i < nx; ++i) {
        const auto u = initial_condition(grid, grid.x_nodes[i]);
        std::copy(u.begin(), u.end(), rows.begin() + static_cast<std::ptrdiff_t>(i * ny));
    }
    LatticeSolution sol;
    sol.grid = grid;
    sol.noise_seed = noise.seed();
    sol.dt = grid.dt();
    sol.dy = grid.dy();
    const std::size_t keep = std::min<std::size_t>(3, nt + 1);
    for (std::size_t s = 0; s < keep; ++s) sol.slice_times.push_back(grid.time(nt + 1 - keep + s));
    sol.slices.reserve(keep);
    auto store = [&](std::size_t k) {
        if (k + keep >= nt + 1) sol.slices.push_back(rows);
    };
    store(0);
    sol.negative_multipliers = march(noise, grid, rows, nx, options, store);
    sol.total_multipliers = nt * ny;
    return sol;
}

KMDeterminant km_determinant(const LatticeSolution& sol, const WeylPoint& x, const WeylPoint& y) {
    const std::size_t n = x.size();
    if (y.size() != n || n == 0) throw DomainError("km_determinant: x and y must have equal positive length");
    KMDeterminant out;
    if (!x.strictly_interior() || !y.strictly_interior()) return out;
    linalg::SquareMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ix = sol.grid.x_index(x[i]);
        for (std::size_t j = 0; j < n; ++j) {
            if (!sol.grid.on_grid(y[j])) throw DomainError("km_determinant: y must sit on grid nodes");
            m(i, j) = sol.z(ix, sol.grid.nearest(y[j]));
        }
    }
    out.det = linalg::determinant(m);
    out.hat = out.det / (kernels::vandermonde(x) * kernels::vandermonde(y));
    return out;
}

GridSpec default_grid(double t_final, double dy, std::vector<double> x_nodes) {
    double reach = 0.0;
    for (double x : x_nodes) reach = std::max(reach, std::abs(x));
    GridSpec g = GridSpec::symmetric(reach + 5.0 * std::sqrt(t_final) + 0.5, dy, t_final, 1);
    g.n_t = static_cast<std::size_t>(std::ceil(t_final / (0.2 * dy * dy) - 1e-9));
    g.init_epsilon = 0.0;
    g.stencil = DiffusionStencil::Standard2;
    g.x_nodes = std::move(x_nodes);
    return g;
}

std::uint64_t realization_seed(std::uint64_t seed, std::size_t r) { return rng::derive(seed, 0x5245414Cull, r); }

void run_ensemble(const GridSpec& grid, std::size_t count, std::uint64_t seed,
                  const std::function<void(std::size_t, const LatticeSolution&)>& consumer,
                  const LatticeOptions& options, unsigned threads) {
    parallel::for_each_index(
        count,
        [&](std::size_t r) {
            const LatticeSolution sol = evolve_she(NoiseField::for_grid(realization_seed(seed, r), grid), grid, options);
            consumer(r, sol);
        },
        threads);
}

SecondMoment second_moment_exact(const GridSpec& grid, double x, double y) {
    grid.validate();
    const std::size_t n = grid.n_y;
    const double dt = grid.dt(), dy = grid.dy();
    const DiffusionStep half(n, dy, 0.5 * dt, grid.stencil);
    std::vector<double> mean = initial_condition(grid, x);
    std::vector<double> m(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m[i * n + j] = mean[i] * mean[j];
    std::vector<double> tmp(n * n);
    // K M K^T for symmetric M: diffuse rows, transpose, diffuse rows.
    auto sandwich = [&] {
        half.apply_rows(m, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) tmp[j * n + i] = m[i * n + j];
        std::swap(m, tmp);
        half.apply_rows(m, n);
    };
    const double var = dt / dy;
    for (std::size_t k = 0; k < grid.n_t; ++k) {
        sandwich();
        for (std::size_t i = 0; i < n; ++i) m[i * n + i] *= 1.0 + var;
        sandwich();
        half.apply(mean);
        half.apply(mean);
    }
    const std::size_t iy = grid.nearest(y);
    SecondMoment out;
    out.mean = mean[iy];
    out.second = m[iy * n + iy];
    const double p = kernels::heat_kernel(grid.t_final, x, grid.y(iy));
    out.second_over_heat_squared = out.second / (p * p);
    out.second_over_mean_squared = out.second / (out.mean * out.mean);
    return out;
}

SecondMoment second_moment_exact(double t, double x, double y, double dy) {
    return second_moment_exact(default_grid(t, dy, {x}), x, y);
}

RatioSample ratio_identity(const LatticeSolution& sol, std::size_t ix, std::size_t ix_h, std::size_t iy1,
                           std::size_t iy2, double floor) {
    RatioSample r;
    if (iy1 <= iy2) throw DomainError("ratio_identity needs y1 > y2");
    const double h = sol.grid.x_nodes[ix_h] - sol.grid.x_nodes[ix];
    const double dy = sol.dy;
    const double y1 = sol.grid.y(iy1), y2 = sol.grid.y(iy2);
    for (std::size_t j = iy2; j <= iy1; ++j)
        if (!(sol.z(ix, j) > floor) || !(sol.z(ix_h, j) > floor)) {
            r.skipped = true;
            return r;
        }
    auto hat = [&](std::size_t a, std::size_t b, double gap) {
        return (sol.z(ix_h, a) * sol.z(ix, b) - sol.z(ix_h, b) * sol.z(ix, a)) / (h * gap);
    };
    r.lhs = hat(iy1, iy2, y1 - y2) / (sol.z(ix, iy1) * sol.z(ix, iy2));
    std::vector<double> left, mid;
    for (std::size_t j = iy2; j < iy1; ++j) {
        const double hz = hat(j + 1, j, dy);
        left.push_back(dy * hz / (sol.z(ix, j) * sol.z(ix, j)));
        mid.push_back(dy * hz / (sol.z(ix, j + 1) * sol.z(ix, j)));
    }
    r.rhs_left = stats::pairwise_sum(left) / (y1 - y2);
    r.rhs_midpoint = stats::pairwise_sum(mid) / (y1 - y2);
    r.rel_left = std::abs(r.lhs - r.rhs_left) / std::abs(r.lhs);
    r.rel_midpoint = std::abs(r.lhs - r.rhs_midpoint) / std::abs(r.lhs);
    return r;
}

RatioIdentityReport ratio_identity_check(double t, double dy, double x, double y1, double y2,
                                         std::size_t realizations, std::uint64_t seed, unsigned threads,
                                         bool zero_noise) {
    const GridSpec grid = default_grid(t, dy, {x, x + dy});
    const std::size_t iy1 = grid.nearest(y1), iy2 = grid.nearest(y2);
    RatioIdentityReport rep;
    rep.dy = dy;
    std::vector<RatioSample> samples(zero_noise ? 1 : realizations);
    if (zero_noise) {
        const auto sol = evolve_she(NoiseField::zeros(grid.n_t, grid.n_y, grid.dt(), grid.dy()), grid);
        samples[0] = ratio_identity(sol, 0, 1, iy1, iy2);
    } else {
        run_ensemble(
            grid, realizations, seed,
            [&](std::size_t r, const LatticeSolution& sol) { samples[r] = ratio_identity(sol, 0, 1, iy1, iy2); }, {},
            threads);
    }
    std::vector<double> mid;
    for (const auto& s : samples) {
        ++rep.realizations;
        if (s.skipped) {
            ++rep.skipped;
            continue;
        }
        rep.rel_left.push_back(s.rel_left);
        mid.push_back(s.rel_midpoint);
    }
    if (!rep.rel_left.empty()) {
        rep.median_rel_left = stats::median(rep.rel_left);
        rep.median_rel_midpoint = stats::median(mid);
    }
    return rep;
}

FlowReport flow_property_check(std::uint64_t seed, const GridSpec& grid, double s, bool zero_noise) {
    grid.validate();
    const double dt = grid.dt();
    const double ks_real = (s - grid.init_epsilon) / dt;
    const auto ks = static_cast<std::size_t>(std::llround(ks_real));
    if (std::abs(ks_real - static_cast<double>(ks)) > 1e-6 || ks == 0 || ks >= grid.n_t)
        throw ConfigurationError("flow split time must fall on an interior time step");
    const NoiseField noise = zero_noise ? NoiseField::zeros(grid.n_t, grid.n_y, dt, grid.dy())
                                        : NoiseField::for_grid(seed, grid);
    const LatticeSolution full = evolve_she(noise, grid);

    GridSpec first = grid;
    first.n_t = ks;
    first.t_final = grid.time(ks);
    const LatticeSolution head = evolve_she(noise.segment(0, ks), first);

    GridSpec second = grid;
    second.n_t = grid.n_t - ks;
    second.init_epsilon = grid.time(ks);
    const std::size_t ny = grid.n_y;
    std::vector<double> rows(ny * ny, 0.0);
    for (std::size_t z = 1; z + 1 < ny; ++z) rows[z * ny + z] = 1.0 / grid.dy();
    const auto prop = evolve_rows(noise.segment(ks, grid.n_t - ks), second, std::move(rows), ny);

    FlowReport rep;
    rep.s = s;
    rep.t = grid.t_final - s;
    rep.x = grid.x_nodes;
    for (std::size_t ix = 0; ix < grid.x_nodes.size(); ++ix) {
        const auto tr = pde::trust_region(grid, grid.x_nodes[ix], grid.t_final);
        double worst = 0.0;
        for (std::size_t j = tr.lo; j <= tr.hi; ++j) {
            std::vector<double> terms(ny);
            for (std::size_t z = 0; z < ny; ++z) terms[z] = grid.dy() * head.z(ix, z) * prop[z * ny + j];
            const double composed = stats::pairwise_sum(terms);
            worst = std::max(worst, std::abs(composed - full.z(ix, j)) / std::abs(full.z(ix, j)));
        }
        rep.max_rel_error.push_back(worst);
    }
    return rep;
}

NoiseShiftReport noise_shift_mean(const PotentialField& phi, const GridSpec& grid, const WeylPoint& x,
                                  const WeylPoint& y, std::size_t realizations, std::uint64_t seed,
                                  unsigned threads) {
    if (x.size() != 2 || y.size() != 2) throw DomainError("noise_shift_mean uses two start and end points");
    GridSpec g = grid;
    g.x_nodes = {x[0], x[1]};
    const std::size_t iy1 = g.nearest(y[0]), iy2 = g.nearest(y[1]);
    std::vector<double> single(realizations), det(realizations);
    LatticeOptions opts;
    opts.shift = &phi;
    run_ensemble(
        g, realizations, seed,
        [&](std::size_t r, const LatticeSolution& sol) {
            single[r] = sol.z(0, iy1);
            det[r] = sol.z(0, iy1) * sol.z(1, iy2) - sol.z(0, iy2) * sol.z(1, iy1);
        },
        opts, threads);
    NoiseShiftReport rep;
    rep.realizations = realizations;
    const auto ms = stats::mean_and_stderr(single);
    const auto md = stats::mean_and_stderr(det);
    rep.single = {ms.mean, ms.std_error, 0.0};
    rep.determinant = {md.mean, md.std_error, 0.0};

    // Smooth reference on a fine grid.
    const double t = g.t_final;
    const double reach = std::max({std::abs(x[0]), std::abs(x[1]), phi.spatial_extent()});
    GridSpec ref = GridSpec::symmetric(reach + 6.0 * std::sqrt(t) + 0.5, 0.02, t, 1000);
    ref.x_nodes = {x[0], x[1]};
    const auto surf = pde::solve_smooth(phi, ref);
    auto zr = [&](std::size_t ix, double yy) { return surf.z(ix, ref.nearest(yy)); };
    rep.single.reference = zr(0, y[0]);
    rep.determinant.reference = zr(0, y[0]) * zr(1, y[1]) - zr(0, y[1]) * zr(1, y[0]);
    return rep;
}

LineEnsembleReport line_ensemble_diagnostics(const std::vector<LatticeSolution>& ensemble, std::size_t ix,
                                             int n_max) {
    if (n_max < 1 || n_max > 3) throw DomainError("line_ensemble_diagnostics supports n <= 3");
    LineEnsembleReport rep;
    rep.n_max = n_max;
    rep.realizations = ensemble.size();
    std::vector<std::size_t> positive(static_cast<std::size_t>(n_max), 0), total(static_cast<std::size_t>(n_max), 0);
    std::vector<double> log_sum(static_cast<std::size_t>(n_max), 0.0);
    for (const LatticeSolution& sol : ensemble) {
        const GridSpec& g = sol.grid;
        if (ix + static_cast<std::size_t>(n_max) > g.x_nodes.size())
            throw DomainError("line_ensemble_diagnostics needs n_max adjacent x nodes");
        const double t = sol.slice_times.back();
        const auto tr = pde::trust_region(g, g.x_nodes[ix], t);
        for (std::size_t iy = tr.lo; iy + static_cast<std::size_t>(n_max) - 1 <= tr.hi; ++iy) {
            double prev = 1.0;
            for (int n = 1; n <= n_max; ++n) {
                const auto un = static_cast<std::size_t>(n);
                linalg::SquareMatrix m(un);
                std::vector<double> xs(un), ys(un);
                for (std::size_t i = 0; i < un; ++i) {
                    xs[i] = g.x_nodes[ix + un - 1 - i];
                    ys[i] = g.y(iy + un - 1 - i);
                }
                for (std::size_t i = 0; i < un; ++i)
                    for (std::size_t j = 0; j < un; ++j) m(i, j) = sol.z(ix + un - 1 - i, iy + un - 1 - j);
                const double zn = kernels::printed_constant(n, t) * linalg::determinant(m) /
                                  (kernels::vandermonde(xs) * kernels::vandermonde(ys));
                const double u = zn / prev;
                const auto k = un - 1;
                ++total[k];
                if (u > 0.0 && prev > 0.0) {
                    ++positive[k];
                    log_sum[k] += std::log(u);
                }
                prev = zn;
            }
        }
    }
    for (int n = 0; n < n_max; ++n) {
        const auto k = static_cast<std::size_t>(n);
        rep.positive_fraction.push_back(total[k] ? static_cast<double>(positive[k]) / static_cast<double>(total[k]) : 0.0);
        rep.mean_log_u.push_back(positive[k] ? log_sum[k] / static_cast<double>(positive[k]) : 0.0);
    }
    return rep;
}

}  // namespace mlshe::lattice
