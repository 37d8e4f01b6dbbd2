#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mlshe/kernels.hpp"
#include "mlshe/potential.hpp"
#include "mlshe/rng.hpp"

namespace mlshe::bridges {

using kernels::WeylPoint;

// n bridge paths on the uniform grid s_k = k t / m, row-major n x (m + 1).
struct BridgeEnsemble {
    int n = 0;
    int m = 0;
    double t = 0.0;
    std::vector<double> paths;
    WeylPoint start, end;
    bool accepted = false;   // ordered at every grid time
    double weight = 0.0;     // acceptance times the between-grid non-crossing factor (n = 2)

    std::span<const double> path(int i) const {
        return std::span<const double>(paths).subspan(static_cast<std::size_t>(i) * (m + 1), static_cast<std::size_t>(m) + 1);
    }
};

// Exact discrete bridge from a (s = 0) to b (s = t) on out.size() - 1 steps,
// built by sequential conditional Gaussians.
void sample_bridge_into(std::span<double> out, double t, double a, double b, rng::Stream& stream);
std::vector<double> sample_bridge(double t, double a, double b, int m, rng::Stream& stream);

// Probability that n independent Brownian bridges x_i -> y_i never meet: p* / prod p.
double noncrossing_probability(double t, const WeylPoint& x, const WeylPoint& y);

// Stream id of path `path` in Monte Carlo sample `sample` under a tag.
inline std::uint64_t path_stream(std::uint64_t tag, std::uint64_t path, std::uint64_t sample) {
    return rng::derive(tag, path, sample);
}

class NonIntersectingSampler {
public:
    // Throws DomainError unless x and y are strictly decreasing and of equal length,
    // InfeasibleConfiguration when the non-crossing probability is below 1e-6.
    NonIntersectingSampler(int n, double t, WeylPoint x, WeylPoint y, int m, bool crossing_correction = true);

    double acceptance_probability() const { return acceptance_; }
    int n() const { return n_; }
    int steps() const { return m_; }

    // Draw for Monte Carlo sample `sample`; path i uses stream (seed, path_stream(tag, i, sample)).
    void draw(BridgeEnsemble& out, std::uint64_t seed, std::uint64_t tag, std::uint64_t sample) const;
    BridgeEnsemble draw(std::uint64_t seed, std::uint64_t tag, std::uint64_t sample) const;

private:
    int n_;
    double t_;
    WeylPoint x_, y_;
    int m_;
    bool correction_;
    double acceptance_;
};

BridgeEnsemble sample_nonintersecting(int n, double t, const WeylPoint& x, const WeylPoint& y, int m,
                                      std::uint64_t seed, std::uint64_t sample);

struct MCEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t n_samples = 0;
    std::uint64_t n_accepted = 0;
    std::uint64_t seed = 0;
    double wall_time = 0.0;
};

struct FeynmanKacOptions {
    int steps = 200;
    std::uint64_t samples = 100000;
    std::uint64_t seed = 1;
    double delta = 0.4;        // coarse separation for confluent endpoints
    unsigned threads = 0;
};

// Self-normalised estimate of E[exp(sum_i int phi(s, X_i(s)) ds) | non-intersecting]
// (trapezoid rule in time). Value excludes any kernel prefactor.
MCEstimate conditional_exponential(const PotentialField& phi, int n, double t, const WeylPoint& x,
                                   const WeylPoint& y, const FeynmanKacOptions& options, std::uint64_t tag = 0);

struct LayerEstimate {
    MCEstimate estimate;       // Z_n (confluent) or tilde-Z_n (distinct)
    bool confluent = false;
    MCEstimate coarse;         // ratio at separation delta (confluent only)
    MCEstimate fine;           // ratio at separation delta / 2
    double extrapolation_gap = 0.0;  // |fine - coarse| in Z units
};

// Distinct x, y: tilde-Z_n = p*_n E[...]. Confluent x = (a,..,a), y = (b,..,b):
// Z_n = p^n times the two-level Richardson limit of the ratio over centered
// separations delta and delta / 2.
LayerEstimate feynman_kac_layers(const PotentialField& phi, int n, double t, const WeylPoint& x,
                                 const WeylPoint& y, const FeynmanKacOptions& options);

struct LocalTime {
    double value = 0.0;
    bool degenerate = false;  // the two paths coincide at every grid time
};

// Trapezoid-weighted sum of dt/(2 eps) over grid times with |a - b| < eps.
// Throws ConfigurationError when eps < sqrt(dt) / 2.
LocalTime intersection_local_time(std::span<const double> a, std::span<const double> b, double eps, double dt);

// sqrt(2) L_eps for independent standard bridge pairs 0 -> 0 on [0, 1];
// asymptotically Rayleigh distributed.
std::vector<double> rayleigh_samples(std::uint64_t samples, int m, double eps, std::uint64_t seed,
                                     unsigned threads = 0);

struct LocalTimeOptions {
    int steps = 1000;
    double eps_factor = 2.0;   // eps = eps_factor * sqrt(dt)
    std::uint64_t samples = 50000;
    std::uint64_t seed = 7;
    unsigned threads = 0;
};

// E[exp(L_eps)] for two independent bridges x -> y on [0, t].
MCEstimate exp_local_time(double t, double x, double y, double eps, const LocalTimeOptions& options,
                          std::uint64_t tag = 0);

struct SecondMomentReport {
    double t = 0.0, x = 0.0, y = 0.0;
    double eps = 0.0;
    MCEstimate at_eps;         // E[e^{L_eps}]
    MCEstimate at_half_eps;    // E[e^{L_{eps/2}}]
    MCEstimate extrapolated;   // 2 E[e^{L_{eps/2}}] - E[e^{L_eps}]
    MCEstimate extrapolated_fine;  // same one level finer (eps/2, eps/4)
    MCEstimate refinement_gap;     // extrapolated - extrapolated_fine, per sample
    double lattice_ratio = 0.0;    // E[Z^2] / p^2 from the exact lattice moment
    double relative_difference = 0.0;
};

// Compares p^2 E[e^L] (bridge pairs) with the lattice second moment at the same
// point. The lattice spacing is lattice_dy with dt = lattice_dy^2 / 5.
SecondMomentReport second_moment_check(double t, double x, double y, const LocalTimeOptions& options,
                                       double lattice_dy = 0.05);

}  // namespace mlshe::bridges
