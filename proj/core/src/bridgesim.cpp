#include "mlshe/bridgesim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mlshe/errors.hpp"
#include "mlshe/parallel.hpp"
#include "mlshe/shelattice.hpp"
#include "mlshe/stats.hpp"

namespace mlshe::bridges {

void sample_bridge_into(std::span<double> out, double t, double a, double b, rng::Stream& stream) {
    if (!(t > 0.0)) throw DomainError("bridge time must be positive");
    const std::size_t m = out.size() - 1;
    if (out.size() < 3) throw DomainError("bridge needs at least 2 steps");
    const double dt = t / static_cast<double>(m);
    out[0] = a;
    double x = a;
    for (std::size_t k = 0; k + 1 < m; ++k) {
        const double remaining = t - dt * static_cast<double>(k);
        const double mean = x + (b - x) * dt / remaining;
        const double var = dt * (remaining - dt) / remaining;
        x = mean + std::sqrt(var) * stream.normal();
        out[k + 1] = x;
    }
    out[m] = b;
}

std::vector<double> sample_bridge(double t, double a, double b, int m, rng::Stream& stream) {
    if (m < 2) throw DomainError("bridge needs at least 2 steps");
    std::vector<double> out(static_cast<std::size_t>(m) + 1);
    sample_bridge_into(out, t, a, b, stream);
    return out;
}

double noncrossing_probability(double t, const WeylPoint& x, const WeylPoint& y) {
    const auto ps = kernels::km_density_log(t, x, y);
    if (ps.sign <= 0) return 0.0;
    double lp = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) lp += kernels::log_heat_kernel(t, x[i], y[i]);
    return std::exp(ps.log_abs - lp);
}

NonIntersectingSampler::NonIntersectingSampler(int n, double t, WeylPoint x, WeylPoint y, int m,
                                               bool crossing_correction)
    : n_(n), t_(t), x_(std::move(x)), y_(std::move(y)), m_(m), correction_(crossing_correction) {
    if (n < 1 || static_cast<int>(x_.size()) != n || static_cast<int>(y_.size()) != n)
        throw DomainError("non-intersecting sampler: endpoint lengths must equal n");
    if (!x_.strictly_interior() || !y_.strictly_interior())
        throw DomainError("non-intersecting sampler: endpoints must be strictly decreasing");
    if (m < 2) throw DomainError("non-intersecting sampler: need at least 2 steps");
    acceptance_ = n == 1 ? 1.0 : noncrossing_probability(t, x_, y_);
    if (acceptance_ < 1e-6)
        throw InfeasibleConfiguration("non-intersection acceptance below 1e-6; increase the endpoint separation");
}

void NonIntersectingSampler::draw(BridgeEnsemble& out, std::uint64_t seed, std::uint64_t tag,
                                  std::uint64_t sample) const {
    const std::size_t len = static_cast<std::size_t>(m_) + 1;
    out.n = n_;
    out.m = m_;
    out.t = t_;
    out.start = x_;
    out.end = y_;
    out.paths.resize(static_cast<std::size_t>(n_) * len);
    for (int i = 0; i < n_; ++i) {
        rng::Stream s(seed, path_stream(tag, static_cast<std::uint64_t>(i), sample));
        sample_bridge_into(std::span<double>(out.paths).subspan(static_cast<std::size_t>(i) * len, len), t_,
                           x_[static_cast<std::size_t>(i)], y_[static_cast<std::size_t>(i)], s);
    }
    out.accepted = true;
    for (int i = 0; i + 1 < n_ && out.accepted; ++i) {
        const double* a = out.paths.data() + static_cast<std::size_t>(i) * len;
        const double* b = a + len;
        for (std::size_t k = 0; k < len; ++k)
            if (!(a[k] > b[k])) {
                out.accepted = false;
                break;
            }
    }
    out.weight = out.accepted ? 1.0 : 0.0;
    if (out.accepted && correction_ && n_ == 2) {
        // The difference of two bridges is a bridge with variance rate 2: its
        // probability of touching 0 between positive values d0, d1 over dt is exp(-d0 d1 / dt).
        const double dt = t_ / m_;
        const double* a = out.paths.data();
        const double* b = a + len;
        double w = 1.0;
        for (std::size_t k = 0; k + 1 < len; ++k) {
            const double d0 = a[k] - b[k], d1 = a[k + 1] - b[k + 1];
            w *= -std::expm1(-d0 * d1 / dt);
        }
        out.weight = w;
    }
}

BridgeEnsemble NonIntersectingSampler::draw(std::uint64_t seed, std::uint64_t tag, std::uint64_t sample) const {
    BridgeEnsemble e;
    draw(e, seed, tag, sample);
    return e;
}

BridgeEnsemble sample_nonintersecting(int n, double t, const WeylPoint& x, const WeylPoint& y, int m,
                                      std::uint64_t seed, std::uint64_t sample) {
    return NonIntersectingSampler(n, t, x, y, m).draw(seed, 0, sample);
}

namespace {

constexpr std::uint64_t kChunk = 1024;

struct Accum {
    double w = 0, we = 0, w2 = 0, w2e = 0, w2e2 = 0;
    std::uint64_t n = 0, accepted = 0;

    void add(double weight, double e) {
        ++n;
        if (weight <= 0.0) return;
        ++accepted;
        w += weight;
        we += weight * e;
        w2 += weight * weight;
        w2e += weight * weight * e;
        w2e2 += weight * weight * e * e;
    }
};

// Runs body(sample, accum) over chunks in parallel, then reduces in chunk order.
template <class Body>
MCEstimate chunked(std::uint64_t samples, std::uint64_t seed, unsigned threads, Body&& body) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t chunks = static_cast<std::size_t>((samples + kChunk - 1) / kChunk);
    std::vector<Accum> parts(chunks);
    parallel::for_each_index(
        chunks,
        [&](std::size_t c) {
            const std::uint64_t lo = c * kChunk, hi = std::min<std::uint64_t>(samples, lo + kChunk);
            for (std::uint64_t s = lo; s < hi; ++s) body(s, parts[c]);
        },
        threads);
    auto reduce = [&](auto field) {
        std::vector<double> v(chunks);
        for (std::size_t c = 0; c < chunks; ++c) v[c] = field(parts[c]);
        return stats::pairwise_sum(v);
    };
    const double w = reduce([](const Accum& a) { return a.w; });
    const double we = reduce([](const Accum& a) { return a.we; });
    const double w2 = reduce([](const Accum& a) { return a.w2; });
    const double w2e = reduce([](const Accum& a) { return a.w2e; });
    const double w2e2 = reduce([](const Accum& a) { return a.w2e2; });
    MCEstimate est;
    est.seed = seed;
    for (const Accum& a : parts) {
        est.n_samples += a.n;
        est.n_accepted += a.accepted;
    }
    if (w > 0.0) {
        est.value = we / w;
        // Delta-method variance of the ratio sum(w e) / sum(w).
        const double num = std::max(w2e2 - 2.0 * est.value * w2e + est.value * est.value * w2, 0.0);
        est.std_error = std::sqrt(num) / w;
    }
    est.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return est;
}

double path_integral(const PotentialField& phi, std::span<const double> path, double dt) {
    const std::size_t m = path.size() - 1;
    double acc = 0.5 * (phi(0.0, path[0]) + phi(dt * static_cast<double>(m), path[m]));
    for (std::size_t k = 1; k < m; ++k) acc += phi(dt * static_cast<double>(k), path[k]);
    return acc * dt;
}

}  // namespace

MCEstimate conditional_exponential(const PotentialField& phi, int n, double t, const WeylPoint& x,
                                   const WeylPoint& y, const FeynmanKacOptions& options, std::uint64_t tag) {
    const NonIntersectingSampler sampler(n, t, x, y, options.steps);
    const double dt = t / options.steps;
    const bool flat = phi.is_zero();
    return chunked(options.samples, options.seed, options.threads, [&](std::uint64_t s, Accum& acc) {
        thread_local BridgeEnsemble e;
        sampler.draw(e, options.seed, tag, s);
        double expo = 0.0;
        if (e.weight > 0.0 && !flat)
            for (int i = 0; i < n; ++i) expo += path_integral(phi, e.path(i), dt);
        acc.add(e.weight, std::exp(expo));
    });
}

LayerEstimate feynman_kac_layers(const PotentialField& phi, int n, double t, const WeylPoint& x,
                                 const WeylPoint& y, const FeynmanKacOptions& options) {
    if (static_cast<int>(x.size()) != n || static_cast<int>(y.size()) != n)
        throw DomainError("feynman_kac_layers: endpoint lengths must equal n");
    LayerEstimate out;
    const bool x_conf = n > 1 && x[0] == x[static_cast<std::size_t>(n - 1)];
    const bool y_conf = n > 1 && y[0] == y[static_cast<std::size_t>(n - 1)];
    if (x_conf != y_conf) throw DomainError("feynman_kac_layers: mixed confluent and distinct endpoints");
    if (!x_conf) {
        out.estimate = conditional_exponential(phi, n, t, x, y, options, 0);
        const double pref = n == 1 ? kernels::heat_kernel(t, x[0], y[0]) : kernels::km_density(t, x, y);
        out.estimate.value *= pref;
        out.estimate.std_error *= pref;
        return out;
    }
    out.confluent = true;
    const double a = x[0], b = y[0];
    const double pn = std::pow(kernels::heat_kernel(t, a, b), n);
    const double d = options.delta;
    out.coarse = conditional_exponential(phi, n, t, WeylPoint::centered(static_cast<std::size_t>(n), a, d),
                                         WeylPoint::centered(static_cast<std::size_t>(n), b, d), options, 1);
    out.fine = conditional_exponential(phi, n, t, WeylPoint::centered(static_cast<std::size_t>(n), a, d / 2),
                                       WeylPoint::centered(static_cast<std::size_t>(n), b, d / 2), options, 2);
    MCEstimate& e = out.estimate;
    e.value = pn * (4.0 * out.fine.value - out.coarse.value) / 3.0;
    e.std_error = pn * std::sqrt(16.0 * out.fine.std_error * out.fine.std_error +
                                 out.coarse.std_error * out.coarse.std_error) / 3.0;
    e.n_samples = out.coarse.n_samples + out.fine.n_samples;
    e.n_accepted = out.coarse.n_accepted + out.fine.n_accepted;
    e.seed = options.seed;
    e.wall_time = out.coarse.wall_time + out.fine.wall_time;
    for (MCEstimate* m : {&out.coarse, &out.fine}) {
        m->value *= pn;
        m->std_error *= pn;
    }
    out.extrapolation_gap = std::abs(out.fine.value - out.coarse.value);
    return out;
}

LocalTime intersection_local_time(std::span<const double> a, std::span<const double> b, double eps, double dt) {
    if (a.size() != b.size() || a.size() < 2) throw DomainError("local time: paths must share a grid");
    if (!(eps >= 0.5 * std::sqrt(dt))) throw ConfigurationError("local time bandwidth below grid resolution");
    LocalTime out;
    const std::size_t last = a.size() - 1;
    double acc = 0.0;
    bool same = true;
    for (std::size_t k = 0; k <= last; ++k) {
        const double d = std::abs(a[k] - b[k]);
        same = same && d == 0.0;
        if (d < eps) acc += (k == 0 || k == last) ? 0.5 : 1.0;
    }
    out.value = acc * dt / (2.0 * eps);
    out.degenerate = same;
    return out;
}

std::vector<double> rayleigh_samples(std::uint64_t samples, int m, double eps, std::uint64_t seed, unsigned threads) {
    std::vector<double> out(samples);
    const double dt = 1.0 / m;
    const std::size_t chunks = static_cast<std::size_t>((samples + kChunk - 1) / kChunk);
    parallel::for_each_index(
        chunks,
        [&](std::size_t c) {
            std::vector<double> a(static_cast<std::size_t>(m) + 1), b(a.size());
            const std::uint64_t lo = c * kChunk, hi = std::min<std::uint64_t>(samples, lo + kChunk);
            for (std::uint64_t s = lo; s < hi; ++s) {
                rng::Stream sa(seed, path_stream(0x52, 0, s)), sb(seed, path_stream(0x52, 1, s));
                sample_bridge_into(a, 1.0, 0.0, 0.0, sa);
                sample_bridge_into(b, 1.0, 0.0, 0.0, sb);
                out[s] = std::sqrt(2.0) * intersection_local_time(a, b, eps, dt).value;
            }
        },
        threads);
    return out;
}

MCEstimate exp_local_time(double t, double x, double y, double eps, const LocalTimeOptions& options,
                          std::uint64_t tag) {
    const int m = options.steps;
    const double dt = t / m;
    return chunked(options.samples, options.seed, options.threads, [&](std::uint64_t s, Accum& acc) {
        thread_local std::vector<double> a, b;
        a.resize(static_cast<std::size_t>(m) + 1);
        b.resize(a.size());
        rng::Stream sa(options.seed, path_stream(tag, 0, s)), sb(options.seed, path_stream(tag, 1, s));
        sample_bridge_into(a, t, x, y, sa);
        sample_bridge_into(b, t, x, y, sb);
        acc.add(1.0, std::exp(intersection_local_time(a, b, eps, dt).value));
    });
}

SecondMomentReport second_moment_check(double t, double x, double y, const LocalTimeOptions& options,
                                       double lattice_dy) {
    SecondMomentReport r;
    r.t = t;
    r.x = x;
    r.y = y;
    const int m = options.steps;
    const double dt = t / m;
    r.eps = options.eps_factor * std::sqrt(dt);
    const auto n = static_cast<std::size_t>(options.samples);
    // Per-sample values at three bandwidths from the same pair of paths, so that
    // differences between bandwidths carry little Monte Carlo noise.
    std::vector<double> e1(n), e2(n), a(n), b(n), gap(n);
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    const auto start = std::chrono::steady_clock::now();
    parallel::for_each_index(
        chunks,
        [&](std::size_t c) {
            std::vector<double> pa(static_cast<std::size_t>(m) + 1), pb(pa.size());
            const std::size_t lo = c * kChunk, hi = std::min(n, lo + kChunk);
            for (std::size_t s = lo; s < hi; ++s) {
                rng::Stream sa(options.seed, path_stream(0x4C54, 0, s)), sb(options.seed, path_stream(0x4C54, 1, s));
                sample_bridge_into(pa, t, x, y, sa);
                sample_bridge_into(pb, t, x, y, sb);
                const double v1 = std::exp(intersection_local_time(pa, pb, r.eps, dt).value);
                const double v2 = std::exp(intersection_local_time(pa, pb, 0.5 * r.eps, dt).value);
                const double v4 = std::exp(intersection_local_time(pa, pb, 0.25 * r.eps, dt).value);
                e1[s] = v1;
                e2[s] = v2;
                a[s] = 2.0 * v2 - v1;
                b[s] = 2.0 * v4 - v2;
                gap[s] = a[s] - b[s];
            }
        },
        options.threads);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    auto as_estimate = [&](const std::vector<double>& v) {
        const auto me = stats::mean_and_stderr(v);
        MCEstimate e;
        e.value = me.mean;
        e.std_error = me.std_error;
        e.n_samples = e.n_accepted = n;
        e.seed = options.seed;
        e.wall_time = wall;
        return e;
    };
    r.at_eps = as_estimate(e1);
    r.at_half_eps = as_estimate(e2);
    r.extrapolated = as_estimate(a);
    r.extrapolated_fine = as_estimate(b);
    r.refinement_gap = as_estimate(gap);
    const auto mom = lattice::second_moment_exact(t, x, y, lattice_dy);
    r.lattice_ratio = mom.second_over_heat_squared;
    r.relative_difference = std::abs(r.extrapolated.value - r.lattice_ratio) / r.lattice_ratio;
    return r;
}

}  // namespace mlshe::bridges
