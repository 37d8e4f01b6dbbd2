#include "mlshe/lab/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "mlshe/bridgesim.hpp"
#include "mlshe/detcalc.hpp"
#include "mlshe/errors.hpp"
#include "mlshe/oracles/references.hpp"
#include "mlshe/parallel.hpp"
#include "mlshe/pdesolve.hpp"
#include "mlshe/polymer.hpp"
#include "mlshe/rng.hpp"
#include "mlshe/shelattice.hpp"
#include "mlshe/stats.hpp"

namespace mlshe::lab {

using kernels::WeylPoint;

std::uint64_t check_seed(std::uint64_t master, const std::string& check_id) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : check_id) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return rng::derive(master, h);
}

bool RunOutput::all_passed() const {
    return std::none_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.status == Status::Fail; });
}

std::vector<std::string> RunOutput::failing_checks() const {
    std::vector<std::string> ids;
    for (const auto& r : rows)
        if (r.status == Status::Fail) ids.push_back(r.check_id);
    return ids;
}

std::vector<std::string> claims_for(const std::string& experiment) {
    static const std::map<std::string, std::vector<std::string>> table = {
        {"calibrate", {"confluent-wronskian"}},
        {"smooth-suite",
         {"feynman-kac", "confluent-wronskian", "layer-equations", "s-evolution", "gt-reconstruction", "interlace",
          "rsk-symmetry"}},
        {"bridges-suite", {"feynman-kac", "karlin-mcgregor", "confluent-wronskian", "second-moment"}},
        {"lattice-suite", {"lattice-km", "flow", "ratio-identity", "s-transform", "second-moment"}},
        {"polymer-suite", {"polymer"}},
    };
    if (experiment == "all") {
        std::vector<std::string> all;
        for (const char* e : {"calibrate", "smooth-suite", "bridges-suite", "lattice-suite", "polymer-suite"})
            for (const auto& c : table.at(e))
                if (std::find(all.begin(), all.end(), c) == all.end()) all.push_back(c);
        return all;
    }
    const auto it = table.find(experiment);
    if (it == table.end()) throw ConfigError("unknown experiment '" + experiment + "'");
    return it->second;
}

namespace {

class Context {
public:
    Context(const Config& cfg, unsigned threads, RunOutput& out)
        : cfg(cfg), threads(threads), out(out),
          master(static_cast<std::uint64_t>(cfg.integer("mc.master_seed"))) {}

    const Config& cfg;
    unsigned threads;
    RunOutput& out;
    std::uint64_t master;
    std::string experiment;

    std::uint64_t seed(const std::string& id) const { return check_seed(master, id); }
    double tol(const std::string& name) const { return cfg.number("tolerance." + name); }

    ResultRow& add(const std::string& id, const std::string& claim, const std::string& quantity, double value,
                   double error, double reference, const std::string& kind, Relation relation, double tolerance,
                   std::uint64_t seed = 0) {
        ResultRow r;
        r.experiment = experiment;
        r.check_id = id;
        r.claim = claim;
        r.quantity = quantity;
        r.value = value;
        r.error_estimate = error;
        r.reference_value = reference;
        r.reference_kind = kind;
        r.relation = relation;
        r.tolerance = tolerance;
        r.seed = seed;
        judge(r);
        out.rows.push_back(r);
        return out.rows.back();
    }

    ResultRow& diag(const std::string& id, const std::string& claim, const std::string& quantity, double value,
                    double reference = 0.0, double error = 0.0, std::uint64_t seed = 0) {
        return add(id, claim, quantity, value, error, reference, "diagnostic", Relation::None, 0.0, seed);
    }

    template <class F>
    void timed(const std::string& group, F&& f) {
        const auto start = std::chrono::steady_clock::now();
        f();
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.timings.push_back({experiment, group, s});
    }

    GridSpec smooth_grid(int n_max) const {
        GridSpec g = GridSpec::symmetric(cfg.number("grid.half_width"), cfg.number("grid.dy"), cfg.number("grid.t"),
                                         static_cast<std::size_t>(cfg.integer("grid.n_t")));
        g.with_pencil(0.0, pde::required_pencil(n_max, 4));
        return g;
    }

    int n_max() const {
        const auto n = cfg.integer("layers.n_max");
        if (n < 2 || n > 3) throw ConfigError("layers.n_max must be 2 or 3");
        return static_cast<int>(n);
    }
};

// ---------------------------------------------------------------- calibration

void calibration_group(Context& c) {
    c.timed("calibration", [&] {
        const int n_max = c.n_max();
        const GridSpec g = c.smooth_grid(n_max);
        const auto ix = static_cast<std::size_t>(pde::required_pencil(n_max, 4));
        std::vector<PotentialField> pots = {PotentialField::zero(), c.cfg.potential(),
                                            PotentialField::single_bump(-0.6, 0.4, -0.5, 0.3, 0.8)};
        std::vector<std::vector<double>> constants(static_cast<std::size_t>(n_max + 1));
        for (std::size_t p = 0; p < pots.size(); ++p) {
            const auto surf = pde::solve_smooth(pots[p], g, {c.threads});
            for (int n = 2; n <= n_max; ++n) {
                for (double y : {-0.5, 0.0, 0.7}) {
                    const auto probe = pde::calibrate_probe(surf, ix, g.nearest(y), n);
                    constants[static_cast<std::size_t>(n)].push_back(probe.constant);
                }
            }
        }
        for (int n = 2; n <= n_max; ++n) {
            const auto ledger = kernels::confluent_constants(n, g.t_final);
            const auto& v = constants[static_cast<std::size_t>(n)];
            double worst = 0.0;
            for (std::size_t k = 0; k < v.size(); ++k) {
                const double rel = v[k] / ledger.calibrated_constant - 1.0;
                worst = std::max(worst, std::abs(rel));
                c.diag("calibrate.n" + std::to_string(n) + ".probe" + std::to_string(k), "confluent-wronskian",
                       "probe_constant", v[k], ledger.calibrated_constant);
            }
            const std::string id = "calibrate.n" + std::to_string(n);
            c.add(id + ".spread", "confluent-wronskian", "max_rel_deviation_over_9_probes", worst, 0.0, 0.0,
                  "cross-method", Relation::Absolute, c.tol("calibration"));
            c.diag(id + ".printed", "confluent-wronskian", "printed_constant", ledger.printed_constant,
                   ledger.calibrated_constant);
        }
    });
}

// ---------------------------------------------------------------- smooth suite

void free_field_group(Context& c) {
    c.timed("free-field", [&] {
        const int n_max = c.n_max();
        const GridSpec g = c.smooth_grid(n_max);
        const auto ix = static_cast<std::size_t>(pde::required_pencil(n_max, 4));
        const auto surf = pde::solve_smooth(PotentialField::zero(), g, {c.threads});
        const auto stack = pde::build_layers(surf, ix, n_max);
        double heat = 0.0;
        std::vector<double> layer(static_cast<std::size_t>(n_max), 0.0);
        for (std::size_t j = stack.trust.lo; j <= stack.trust.hi; ++j) {
            const double p = stack.heat(j);
            heat = std::max(heat, std::abs(surf.z(ix, j) / p - 1.0));
            for (int n = 1; n <= n_max; ++n)
                layer[static_cast<std::size_t>(n - 1)] =
                    std::max(layer[static_cast<std::size_t>(n - 1)],
                             std::abs(stack.z[static_cast<std::size_t>(n - 1)][j] / std::pow(p, n) - 1.0));
        }
        c.add("smooth.free.heat", "feynman-kac", "max_rel_error_vs_heat_kernel", heat, 0.0, 0.0, "closed-form",
              Relation::Absolute, c.tol("free_field"));
        for (int n = 1; n <= n_max; ++n)
            c.add("smooth.free.layer.n" + std::to_string(n), "confluent-wronskian", "max_rel_error_vs_p_power_n",
                  layer[static_cast<std::size_t>(n - 1)], 0.0, 0.0, "closed-form", Relation::Absolute,
                  c.tol("layers"));

        const double cst = 0.3;
        const auto flat = pde::solve_smooth(PotentialField::constant(cst), g, {c.threads});
        double worst = 0.0;
        for (std::size_t j = stack.trust.lo; j <= stack.trust.hi; ++j)
            worst = std::max(worst, std::abs(flat.z(ix, j) / (std::exp(cst * g.t_final) * stack.heat(j)) - 1.0));
        c.add("smooth.constant.heat", "feynman-kac", "max_rel_error_vs_exp_ct_heat_kernel", worst, 0.0, 0.0,
              "closed-form", Relation::Absolute, c.tol("free_field"));
    });
}

void residual_group(Context& c) {
    c.timed("residuals", [&] {
        const double dy = c.cfg.number("grid.residual_dy");
        const auto nt = static_cast<std::size_t>(c.cfg.integer("grid.residual_n_t"));
        const PotentialField phi = c.cfg.potential();
        const int hw = pde::required_pencil(3, 4);
        std::array<std::array<double, 5>, 2> res{};
        for (int level = 0; level < 2; ++level) {
            GridSpec g = GridSpec::symmetric(c.cfg.number("grid.half_width"), dy / (1 << level), c.cfg.number("grid.t"),
                                             nt << level);
            g.with_pencil(0.0, hw);
            const auto surf = pde::solve_smooth(phi, g, {c.threads});
            const auto h = pde::build_history(surf, static_cast<std::size_t>(hw), 3);
            auto& r = res[static_cast<std::size_t>(level)];
            r[0] = pde::layer_residual(h, 1).max_abs;
            r[1] = pde::layer_residual(h, 2).max_abs;
            r[2] = pde::s_evolution_residual(h, 1, pde::SDefinition::LogDerivative).max_abs;
            r[3] = pde::s_evolution_residual(h, 2, pde::SDefinition::LogDerivative).max_abs;
            r[4] = pde::s_evolution_residual(h, 2, pde::SDefinition::Printed).max_abs;
        }
        const char* names[] = {"smooth.residual.u1", "smooth.residual.u2", "smooth.residual.s1",
                               "smooth.residual.s2", "smooth.residual.s2_printed"};
        const char* claims[] = {"layer-equations", "layer-equations", "s-evolution", "s-evolution", "s-evolution"};
        for (std::size_t k = 0; k < 5; ++k) {
            const double ratio = res[0][k] / res[1][k];
            c.diag(std::string(names[k]) + ".coarse", claims[k], "max_abs_residual", res[0][k]);
            c.diag(std::string(names[k]) + ".fine", claims[k], "max_abs_residual", res[1][k]);
            if (k < 4)
                c.add(std::string(names[k]) + ".ratio", claims[k], "residual_ratio_per_halving", ratio, 0.0, 4.0,
                      "refinement", Relation::Absolute, c.tol("residual_ratio"));
            else
                c.diag(std::string(names[k]) + ".ratio", claims[k], "residual_ratio_per_halving", ratio, 4.0);
        }
    });
}

void gt_group(Context& c) {
    c.timed("gt-reconstruction", [&] {
        const int n_max = c.n_max();
        const GridSpec g = c.smooth_grid(n_max);
        const auto ix = static_cast<std::size_t>(pde::required_pencil(n_max, 4));
        const auto surf = pde::solve_smooth(c.cfg.potential(), g, {c.threads});
        const std::vector<std::vector<double>> probes = {
            {0.5, -0.3, -1.0}, {1.2, 0.1, -0.4}, {0.3, 0.0, -0.2}, {1.5, 0.5, -1.5}, {0.9, -0.6, -1.1}};
        for (int n = 2; n <= n_max; ++n) {
            std::vector<double> alt, printed;
            int sign = 1;
            for (auto y : probes) {
                y.resize(static_cast<std::size_t>(n));
                const auto r = pde::gt_reconstruction_check(surf, ix, WeylPoint(y), n);
                alt.push_back(r.ratio_alt);
                printed.push_back(r.ratio_printed);
                sign = r.expected_sign;
            }
            auto spread = [](const std::vector<double>& v) {
                const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
                double worst = 0.0;
                for (double x : v) worst = std::max(worst, std::abs(x / mean - 1.0));
                return std::pair{mean, worst};
            };
            const auto [mean_alt, spread_alt] = spread(alt);
            const auto [mean_printed, spread_printed] = spread(printed);
            const std::string id = "smooth.gt.n" + std::to_string(n);
            c.add(id + ".spread", "gt-reconstruction", "max_rel_spread_of_ratio_over_5_probes", spread_alt, 0.0, 0.0,
                  "cross-method", Relation::Absolute, c.tol("gt_ratio"));
            c.add(id + ".ratio", "gt-reconstruction", "mean_ratio_log_derivative_S", mean_alt, 0.0,
                  static_cast<double>(sign), "closed-form", Relation::Relative, c.tol("gt_ratio"));
            c.diag(id + ".ratio_printed_S", "gt-reconstruction", "mean_ratio_printed_S", mean_printed);
            c.diag(id + ".spread_printed_S", "gt-reconstruction", "max_rel_spread_printed_S", spread_printed);
        }
    });
}

using Polynomial = std::vector<double>;

double evaluate(const Polynomial& p, double x) {
    double acc = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * x + *it;
    return acc;
}

Polynomial derivative(const Polynomial& p) {
    Polynomial d;
    for (std::size_t k = 1; k < p.size(); ++k) d.push_back(static_cast<double>(k) * p[k]);
    return d;
}

Polynomial random_polynomial(rng::Stream& s, int degree) {
    Polynomial p;
    for (int k = 0; k <= degree; ++k) p.push_back(2.0 * s.uniform() - 1.0);
    return p;
}

void interlace_group(Context& c) {
    c.timed("interlace", [&] {
        for (int n = 2; n <= 3; ++n) {
            const std::string id = "smooth.interlace.n" + std::to_string(n);
            const std::uint64_t seed = c.seed(id);
            rng::Stream s(seed, 0);
            double worst_identity = 0.0, worst_oracle = 0.0;
            std::vector<int> signs;
            for (int family = 0; family < 20; ++family) {
                std::vector<Polynomial> polys(static_cast<std::size_t>(n));
                polys[0] = {1.0};
                for (int i = 1; i < n; ++i) polys[static_cast<std::size_t>(i)] = random_polynomial(s, 2 + i);
                std::vector<detcalc::Function1D> f;
                for (const auto& p : polys) f.emplace_back([p](double x) { return evaluate(p, x); });
                std::vector<double> y(static_cast<std::size_t>(n));
                for (auto& v : y) v = 4.0 * s.uniform() - 2.0;
                std::sort(y.begin(), y.end(), std::greater<>());
                const WeylPoint yw(y);
                const auto r = detcalc::interlace_integral(f, yw);
                signs.push_back(r.orientation_sign);
                worst_identity = std::max(worst_identity, r.relative_discrepancy);
                // Direct quadrature of the interval integral (exact for polynomials).
                double direct = 0.0;
                if (n == 2) {
                    direct = oracles::integrate([&](double z) { return evaluate(derivative(polys[1]), z); }, y[1], y[0]);
                } else {
                    const auto d1 = derivative(polys[1]), d2 = derivative(polys[2]);
                    direct = oracles::integrate(
                        [&](double z1) {
                            return oracles::integrate(
                                [&](double z2) {
                                    return evaluate(d1, z1) * evaluate(d2, z2) - evaluate(d1, z2) * evaluate(d2, z1);
                                },
                                y[2], y[1]);
                        },
                        y[1], y[0]);
                }
                worst_oracle = std::max(worst_oracle, std::abs(direct - r.integral_side) / std::abs(r.integral_side));
            }
            const bool one_sign = std::all_of(signs.begin(), signs.end(), [&](int v) { return v == signs[0]; });
            c.add(id + ".identity", "interlace", "max_rel_discrepancy_20_families", worst_identity, 0.0, 0.0,
                  "closed-form", Relation::Absolute, c.tol("interlace"), seed);
            c.add(id + ".quadrature", "interlace", "max_rel_error_vs_direct_integral", worst_oracle, 0.0, 0.0,
                  "cross-method", Relation::Absolute, c.tol("interlace"), seed);
            c.add(id + ".sign", "interlace", "single_orientation_sign", one_sign ? signs[0] : 0.0, 0.0,
                  kernels::confluent_constants(n, 1.0).signs.interlace, "closed-form", Relation::Absolute, 0.0, seed);
        }
    });
}

void rsk_group(Context& c) {
    c.timed("rsk", [&] {
        const int n_max = c.n_max();
        GridSpec g = c.smooth_grid(n_max);
        const auto phi = PotentialField::single_bump(0.8, 0.5, 0.7, 0.25, 0.5);
        const auto r = pde::rsk_symmetry_check(phi, g, n_max);
        for (int n = 1; n <= n_max; ++n)
            c.add("smooth.rsk.n" + std::to_string(n), "rsk-symmetry", "max_rel_reflection_error",
                  r.max_rel_error[static_cast<std::size_t>(n - 1)], 0.0, 0.0, "cross-method", Relation::Absolute,
                  c.tol("rsk"));
    });
}

void smooth_suite(Context& c) {
    free_field_group(c);
    residual_group(c);
    gt_group(c);
    interlace_group(c);
    rsk_group(c);
}

// ---------------------------------------------------------------- bridges suite

bridges::FeynmanKacOptions fk_options(const Context& c, const std::string& id) {
    bridges::FeynmanKacOptions o;
    o.steps = static_cast<int>(c.cfg.integer("mc.steps"));
    o.samples = static_cast<std::uint64_t>(c.cfg.integer("mc.samples"));
    o.seed = c.seed(id);
    o.delta = c.cfg.number("mc.delta");
    o.threads = c.threads;
    return o;
}

void bridges_suite(Context& c) {
    const double t = c.cfg.number("grid.t");
    const PotentialField phi = c.cfg.potential();
    const double sig = c.tol("sigmas");

    c.timed("feynman-kac", [&] {
        GridSpec g = GridSpec::symmetric(c.cfg.number("grid.half_width"), c.cfg.number("grid.dy"), t,
                                         static_cast<std::size_t>(c.cfg.integer("grid.n_t")));
        g.x_nodes = {0.5, -0.5};
        const auto surf = pde::solve_smooth(phi, g, {c.threads});
        const double y1 = 0.5, y2 = -0.5;
        const std::size_t j1 = g.nearest(y1), j2 = g.nearest(y2);

        auto o1 = fk_options(c, "bridges.fk.n1");
        const auto e1 = bridges::feynman_kac_layers(phi, 1, t, WeylPoint{0.5}, WeylPoint{g.y(j1)}, o1).estimate;
        c.add("bridges.fk.n1", "feynman-kac", "Z_mc_vs_pde", e1.value, e1.std_error, surf.z(0, j1), "cross-method",
              Relation::Sigma, sig, o1.seed);

        const WeylPoint x{0.5, -0.5}, y{g.y(j1), g.y(j2)};
        auto o2 = fk_options(c, "bridges.km.n2");
        const double acc = bridges::noncrossing_probability(t, x, y);
        o2.samples = static_cast<std::uint64_t>(std::ceil(static_cast<double>(o2.samples) / acc));
        const auto e2 = bridges::feynman_kac_layers(phi, 2, t, x, y, o2).estimate;
        const double det = surf.z(0, j1) * surf.z(1, j2) - surf.z(0, j2) * surf.z(1, j1);
        c.add("bridges.km.n2", "karlin-mcgregor", "tildeZ2_mc_vs_pde_determinant", e2.value, e2.std_error, det,
              "cross-method", Relation::Sigma, sig, o2.seed);
        c.add("bridges.km.n2.relative_stderr", "karlin-mcgregor", "mc_relative_stderr", e2.std_error / e2.value, 0.0,
              c.tol("mc_relative_error"), "diagnostic", Relation::AtMost, 0.0, o2.seed);
        c.diag("bridges.km.n2.accepted", "karlin-mcgregor", "accepted_samples", static_cast<double>(e2.n_accepted),
               static_cast<double>(c.cfg.integer("mc.samples")), 0.0, o2.seed);
    });

    c.timed("confluent", [&] {
        GridSpec g = GridSpec::symmetric(c.cfg.number("grid.half_width"), c.cfg.number("grid.dy"), t,
                                         static_cast<std::size_t>(c.cfg.integer("grid.n_t")));
        const int hw = pde::required_pencil(2, 4);
        g.with_pencil(0.0, hw);
        const auto surf = pde::solve_smooth(phi, g, {c.threads});
        const auto stack = pde::build_layers(surf, static_cast<std::size_t>(hw), 2);
        const std::size_t j = g.nearest(0.0);
        auto o = fk_options(c, "bridges.confluent.n2");
        const auto est = bridges::feynman_kac_layers(phi, 2, t, WeylPoint::confluent(2, 0.0),
                                                     WeylPoint::confluent(2, g.y(j)), o);
        c.add("bridges.confluent.n2", "confluent-wronskian", "Z2_extrapolated_mc_vs_calibrated_wronskian",
              est.estimate.value, est.estimate.std_error, stack.z[1][j], "cross-method", Relation::Sigma, sig, o.seed);
        c.diag("bridges.confluent.n2.gap", "confluent-wronskian", "richardson_gap", est.extrapolation_gap, 0.0, 0.0,
               o.seed);
    });

    c.timed("acceptance", [&] {
        const std::vector<std::pair<WeylPoint, WeylPoint>> configs = {
            {{0.5, -0.5}, {0.5, -0.5}}, {{0.2, 0.0}, {0.3, 0.1}}, {{1.0, -1.0}, {0.0, -0.4}},
            {{0.1, -0.1}, {1.0, -1.0}}, {{0.3, 0.0}, {-0.2, -0.5}}};
        const auto samples = static_cast<std::size_t>(std::max<long long>(1000, c.cfg.integer("mc.samples") / 5));
        for (std::size_t k = 0; k < configs.size(); ++k) {
            const auto& [x, y] = configs[k];
            const std::string id = "bridges.acceptance.c" + std::to_string(k);
            const std::uint64_t seed = c.seed(id);
            const bridges::NonIntersectingSampler sampler(2, t, x, y, static_cast<int>(c.cfg.integer("mc.steps")));
            std::vector<double> w(samples);
            parallel::for_each_index(
                samples,
                [&](std::size_t i) {
                    bridges::BridgeEnsemble e;
                    sampler.draw(e, seed, 9, i);
                    w[i] = e.weight;
                },
                c.threads);
            const auto me = stats::mean_and_stderr(w);
            c.add(id, "karlin-mcgregor", "noncrossing_rate_vs_reflection", me.mean, me.std_error,
                  oracles::two_bridge_noncrossing(t, x[0], x[1], y[0], y[1]), "closed-form", Relation::Sigma, sig,
                  seed);
        }
    });

    c.timed("rayleigh", [&] {
        const std::uint64_t seed = c.seed("bridges.rayleigh");
        const auto r = bridges::rayleigh_samples(static_cast<std::uint64_t>(c.cfg.integer("mc.rayleigh_samples")),
                                                 static_cast<int>(c.cfg.integer("mc.rayleigh_steps")),
                                                 c.cfg.number("mc.rayleigh_eps"), seed, c.threads);
        const double ks = stats::ks_distance(r, oracles::rayleigh_cdf);
        c.add("bridges.rayleigh.ks", "second-moment", "ks_distance_vs_rayleigh", ks, 0.0, 0.0, "closed-form",
              Relation::Absolute, c.tol("rayleigh_ks"), seed);
    });

    c.timed("second-moment", [&] {
        for (double tt : {0.25, 1.0}) {
            const std::string id = "bridges.second_moment.t" + format_double(tt);
            bridges::LocalTimeOptions lo;
            lo.steps = static_cast<int>(c.cfg.integer("mc.local_time_steps"));
            lo.samples = static_cast<std::uint64_t>(c.cfg.integer("mc.local_time_samples"));
            lo.seed = c.seed(id);
            lo.threads = c.threads;
            const auto rep = bridges::second_moment_check(tt, 0.0, 0.0, lo, c.cfg.number("lattice.dy"));
            c.add(id + ".lattice", "second-moment", "extrapolated_E_expL_vs_lattice_EZ2_over_p2",
                  rep.extrapolated.value, rep.extrapolated.std_error, rep.lattice_ratio, "cross-method",
                  Relation::Relative, c.tol("second_moment"), lo.seed);
            c.add(id + ".closed_form", "second-moment", "extrapolated_E_expL_vs_rayleigh_moment",
                  rep.extrapolated.value, rep.extrapolated.std_error, oracles::bridge_pair_exp_local_time(tt),
                  "closed-form", Relation::Sigma, sig, lo.seed);
            c.diag(id + ".eps", "second-moment", "E_expL_at_eps", rep.at_eps.value, 0.0, rep.at_eps.std_error,
                   lo.seed);
            c.diag(id + ".half_eps", "second-moment", "E_expL_at_half_eps", rep.at_half_eps.value, 0.0,
                   rep.at_half_eps.std_error, lo.seed);
        }
    });
}

// ---------------------------------------------------------------- lattice suite

void lattice_suite(Context& c) {
    const double t = c.cfg.number("lattice.t");
    const double dy = c.cfg.number("lattice.dy");
    const double sig = c.tol("sigmas");

    c.timed("flow", [&] {
        const std::uint64_t seed = c.seed("lattice.flow");
        const GridSpec g = lattice::default_grid(t, dy, {0.0, 6 * dy});
        const auto ks = g.n_t / 2;
        const auto rep = lattice::flow_property_check(seed, g, g.time(ks));
        for (std::size_t i = 0; i < rep.max_rel_error.size(); ++i)
            c.add("lattice.flow.x" + std::to_string(i), "flow", "max_rel_error_composed_vs_direct",
                  rep.max_rel_error[i], 0.0, 0.0, "cross-method", Relation::Absolute, c.tol("flow"), seed);
        if (c.cfg.flag("lattice.write_noise")) {
            const auto noise = lattice::NoiseField::for_grid(seed, g);
            std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
            noise.write(buf);
            const std::string bytes = buf.str();
            const auto back = lattice::NoiseField::read(buf);
            double worst = 0.0;
            for (std::size_t k = 0; k < g.n_t; k += std::max<std::size_t>(1, g.n_t / 16))
                for (std::size_t j = 0; j < g.n_y; ++j) worst = std::max(worst, std::abs(back.at(k, j) - noise.at(k, j)));
            c.add("lattice.noise.replay", "flow", "max_abs_replay_difference", worst, 0.0, 0.0, "closed-form",
                  Relation::Absolute, 0.0, seed);
            c.out.attachments.emplace_back("noise_flow.bin", std::vector<char>(bytes.begin(), bytes.end()));
        }
    });

    c.timed("ratio-identity", [&] {
        const auto reals = static_cast<std::size_t>(c.cfg.integer("lattice.ratio_realizations"));
        const std::uint64_t seed = c.seed("lattice.ratio");
        const auto coarse = lattice::ratio_identity_check(t, dy, 0.0, 0.5, -0.5, reals, seed, c.threads);
        const auto fine = lattice::ratio_identity_check(t, dy / 2, 0.0, 0.5, -0.5, reals, seed, c.threads);
        c.diag("lattice.ratio.coarse", "ratio-identity", "median_rel_discrepancy", coarse.median_rel_left, 0.0, 0.0,
               seed);
        c.diag("lattice.ratio.fine", "ratio-identity", "median_rel_discrepancy", fine.median_rel_left, 0.0, 0.0, seed);
        c.add("lattice.ratio.improvement", "ratio-identity", "median_ratio_per_halving",
              coarse.median_rel_left / fine.median_rel_left, 0.0, c.tol("ratio_improvement"), "refinement",
              Relation::AtLeast, 0.0, seed);
        c.add("lattice.ratio.midpoint", "ratio-identity", "median_rel_discrepancy_midpoint_denominator",
              std::max(coarse.median_rel_midpoint, fine.median_rel_midpoint), 0.0, 0.0, "closed-form",
              Relation::Absolute, c.tol("flow"), seed);
        c.diag("lattice.ratio.skipped", "ratio-identity", "skipped_realizations",
               static_cast<double>(coarse.skipped + fine.skipped), 0.0, 0.0, seed);
    });

    c.timed("s-transform", [&] {
        const std::uint64_t seed = c.seed("lattice.shift");
        const auto phi = PotentialField::single_bump(0.8, 0.5 * t, 0.2, 0.15, 0.5);
        const WeylPoint x{0.25, -0.25}, y{0.3, -0.3};
        const GridSpec g = lattice::default_grid(t, dy, {x[0], x[1]});
        const auto rep = lattice::noise_shift_mean(
            phi, g, x, y, static_cast<std::size_t>(c.cfg.integer("lattice.shift_realizations")), seed, c.threads);
        c.add("lattice.shift.single", "s-transform", "shifted_mean_Z_vs_smooth_solver", rep.single.estimate,
              rep.single.std_error, rep.single.reference, "cross-method", Relation::Sigma, sig, seed);
        c.add("lattice.shift.determinant", "s-transform", "shifted_mean_det_vs_smooth_solver", rep.determinant.estimate,
              rep.determinant.std_error, rep.determinant.reference, "cross-method", Relation::Sigma, sig, seed);
    });

    c.timed("second-moment", [&] {
        for (double tt : {0.25, 1.0}) {
            const auto m = lattice::second_moment_exact(tt, 0.0, 0.0, dy);
            c.add("lattice.second_moment.t" + format_double(tt), "second-moment", "exact_lattice_EZ2_over_p2",
                  m.second_over_heat_squared, 0.0, oracles::bridge_pair_exp_local_time(tt), "closed-form",
                  Relation::Relative, c.tol("second_moment"));
        }
    });

    c.timed("lattice-km", [&] {
        const std::uint64_t seed = c.seed("lattice.km");
        GridSpec g = lattice::default_grid(t, dy, {0.0, dy, 2 * dy});
        const auto zero = lattice::evolve_she(lattice::NoiseField::zeros(g.n_t, g.n_y, g.dt(), g.dy()), g);
        const WeylPoint x{dy, 0.0};
        double worst = 0.0;
        for (double y1 : {0.3, 0.6}) {
            const WeylPoint y{g.y(g.nearest(y1)), g.y(g.nearest(-0.2))};
            const auto km = lattice::km_determinant(zero, x, y);
            worst = std::max(worst, std::abs(km.det / kernels::km_density(t, x, y) - 1.0));
        }
        c.add("lattice.km.zero_noise", "lattice-km", "rel_error_vs_karlin_mcgregor_density", worst, 0.0, 0.0,
              "closed-form", Relation::Absolute, 1e-2);
        const auto reals = static_cast<std::size_t>(c.cfg.integer("lattice.ensemble_realizations"));
        std::vector<lattice::LatticeSolution> ens(reals);
        lattice::run_ensemble(
            g, reals, seed, [&](std::size_t r, const lattice::LatticeSolution& s) { ens[r] = s; }, {}, c.threads);
        const auto diag = lattice::line_ensemble_diagnostics(ens, 0, 3);
        for (int n = 1; n <= 3; ++n) {
            c.diag("lattice.km.positive.n" + std::to_string(n), "lattice-km", "fraction_positive_U_n",
                   diag.positive_fraction[static_cast<std::size_t>(n - 1)], 1.0, 0.0, seed);
            c.diag("lattice.km.mean_log_u.n" + std::to_string(n), "lattice-km", "mean_log_U_n",
                   diag.mean_log_u[static_cast<std::size_t>(n - 1)], 0.0, 0.0, seed);
        }
        std::size_t negative = 0, total = 0;
        for (const auto& s : ens) {
            negative += s.negative_multipliers;
            total += s.total_multipliers;
        }
        c.diag("lattice.step.negative_fraction", "lattice-km", "negative_multiplier_fraction",
               total ? static_cast<double>(negative) / static_cast<double>(total) : 0.0, 0.0, 0.0, seed);
    });
}

// ---------------------------------------------------------------- polymer suite

void polymer_suite(Context& c) {
    const auto n_levels = static_cast<std::size_t>(c.cfg.integer("polymer.levels"));
    const auto m = static_cast<std::size_t>(c.cfg.integer("polymer.steps"));
    const double t = 1.0;
    const double tol_exact = c.tol("polymer_exact");
    if (n_levels < 3) throw ConfigError("polymer.levels must be at least 3");

    c.timed("closed-forms", [&] {
        const auto zero = polymer::DisorderPath::zero(n_levels, m, t);
        const auto table = polymer::hierarchy_table(zero, c.threads);
        double worst = 0.0;
        for (std::size_t i = 1; i <= n_levels; ++i)
            for (std::size_t j = i; j <= std::min(n_levels, i + 2); ++j) {
                const double exact = std::pow(t, static_cast<double>(j - i)) / std::tgamma(static_cast<double>(j - i + 1));
                worst = std::max(worst, std::abs(table(i, j) / exact - 1.0));
            }
        c.add("polymer.zero.simplex", "polymer", "max_rel_error_vs_t_pow_over_factorial", worst, 0.0, 0.0,
              "closed-form", Relation::Absolute, tol_exact);
        c.add("polymer.zero.full_layer", "polymer", "Z_N_N", polymer::multilayer_partition(table, n_levels), 0.0, 1.0,
              "closed-form", Relation::Absolute, tol_exact);
        const auto three = polymer::hierarchy_table(polymer::DisorderPath::zero(3, m, t));
        const auto x = polymer::x_increments(polymer::multilayer_all(three));
        const double expect[] = {std::log(0.5), 0.0, std::log(2.0)};
        double dx = 0.0;
        for (std::size_t k = 0; k < 3; ++k) dx = std::max(dx, std::abs(x[k] - expect[k]));
        c.add("polymer.zero.increments", "polymer", "max_abs_error_X_vs_closed_form", dx, 0.0, 0.0, "closed-form",
              Relation::Absolute, tol_exact);
    });

    c.timed("lgv", [&] {
        const auto seeds = static_cast<std::size_t>(c.cfg.integer("polymer.seeds"));
        const std::uint64_t base = c.seed("polymer.lgv");
        std::vector<double> err(seeds);
        parallel::for_each_index(
            seeds,
            [&](std::size_t s) {
                const auto path = polymer::DisorderPath::sample(3, m, t, rng::derive(base, s));
                const double lgv = polymer::multilayer_partition(polymer::hierarchy_table(path), 2);
                err[s] = std::abs(lgv / oracles::polymer_two_path_bruteforce(path.refined(2)) - 1.0);
            },
            c.threads);
        c.add("polymer.lgv.n2", "polymer", "max_rel_error_lgv_vs_bruteforce",
              *std::max_element(err.begin(), err.end()), 0.0, 0.0, "cross-method", Relation::Absolute,
              c.tol("polymer"), base);
    });

    c.timed("positivity", [&] {
        const auto seeds = static_cast<std::size_t>(c.cfg.integer("polymer.positivity_seeds"));
        const std::uint64_t base = c.seed("polymer.positivity");
        const std::size_t steps = std::max<std::size_t>(50, m / 10);
        std::vector<char> ok(seeds, 0);
        parallel::for_each_index(
            seeds,
            [&](std::size_t s) {
                const auto path = polymer::DisorderPath::sample(n_levels, steps, t, rng::derive(base, s));
                const auto z = polymer::multilayer_all(polymer::hierarchy_table(path));
                ok[s] = std::all_of(z.begin(), z.end(), [](double v) { return v > 0.0; });
            },
            c.threads);
        const double frac = static_cast<double>(std::count(ok.begin(), ok.end(), 1)) / static_cast<double>(seeds);
        c.add("polymer.positivity", "polymer", "fraction_of_seeds_with_all_Z_n_positive", frac, 0.0, 1.0,
              "closed-form", Relation::Absolute, 0.0, base);

        // Z_1 is monotone under perturbations of B_j that never decrease in time
        // (a nonnegative drift added to the increments) and under any pointwise
        // raise of B_1. A window bump on a middle level is not such a
        // perturbation and can lower Z_1; that count is reported separately.
        std::size_t violations = 0, window_drops = 0;
        for (std::size_t s = 0; s < 20; ++s) {
            const auto path = polymer::DisorderPath::sample(n_levels, steps, t, rng::derive(base, 1000000 + s));
            const double before = polymer::hierarchy_table(path)(1, n_levels);
            const std::size_t level = s % n_levels;
            const std::size_t k0 = steps / 3, k1 = 2 * steps / 3;
            auto ramp = path, window = path, first = path;
            for (std::size_t k = 0; k <= steps; ++k) {
                const double w = k <= k0 ? 0.0 : k >= k1 ? 1.0 : static_cast<double>(k - k0) / static_cast<double>(k1 - k0);
                ramp(level, k) += 0.3 * w;
                if (k >= k0 && k <= k1) {
                    window(level, k) += 0.3;
                    first(0, k) += 0.3;
                }
            }
            if (polymer::hierarchy_table(ramp)(1, n_levels) < before) ++violations;
            if (polymer::hierarchy_table(first)(1, n_levels) < before) ++violations;
            if (polymer::hierarchy_table(window)(1, n_levels) < before) ++window_drops;
        }
        c.add("polymer.monotone", "polymer", "monotonicity_violations", static_cast<double>(violations), 0.0, 0.0,
              "closed-form", Relation::Absolute, 0.0, base);
        c.diag("polymer.monotone.window_bump", "polymer", "drops_under_window_bumps", static_cast<double>(window_drops),
               0.0, 0.0, base);
    });

    c.timed("convergence", [&] {
        const std::uint64_t seed = c.seed("polymer.convergence");
        const auto coarse = polymer::DisorderPath::sample(3, 100, t, seed);
        double z[3];
        for (int k = 0; k < 3; ++k) z[k] = polymer::single_path_partition(coarse.refined(std::size_t{1} << k), 1, 3);
        const double ratio = (z[0] - z[1]) / (z[1] - z[2]);
        c.add("polymer.quadrature.order", "polymer", "error_ratio_per_halving", ratio, 0.0, 4.0, "refinement",
              Relation::Absolute, 1.0, seed);
    });
}

void ledger_entries(RunOutput& out, double t) {
    for (int n = 1; n <= 3; ++n) out.ledger.push_back(kernels::confluent_constants(n, t));
}

}  // namespace

RunOutput run_experiment(const Config& config, unsigned threads) {
    RunOutput out;
    if (threads == 0) threads = 1;
    parallel::set_default_threads(threads);
    Context c(config, threads, out);
    const std::string ex = config.get("run.experiment");
    auto run = [&](const std::string& name, auto&& f) {
        if (ex == name || ex == "all") {
            c.experiment = name;
            f(c);
        }
    };
    try {
        run("calibrate", [](Context& ctx) { calibration_group(ctx); });
        run("smooth-suite", smooth_suite);
        run("bridges-suite", bridges_suite);
        run("lattice-suite", lattice_suite);
        run("polymer-suite", polymer_suite);
    } catch (const ConfigurationError& e) {
        throw ConfigError(e.what());
    }
    // Coverage self-audit: each claimed item must have a row.
    for (const auto& claim : claims_for(ex)) {
        const bool covered = std::any_of(out.rows.begin(), out.rows.end(),
                                         [&](const ResultRow& r) { return r.claim == claim; });
        if (!covered) {
            c.experiment = ex;
            c.add("coverage." + claim, claim, "rows_for_claim", 0.0, 0.0, 1.0, "diagnostic", Relation::AtLeast, 0.0);
        }
    }
    ledger_entries(out, config.number("grid.t"));
    return out;
}

namespace {
const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Plots value against reference for every check in results.csv."""
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
rows = list(csv.DictReader(open(here / "results.csv")))
claims = sorted({r["claim"] for r in rows})
fig, axes = plt.subplots(len(claims), 1, figsize=(9, 2.4 * len(claims)), squeeze=False)
for ax, claim in zip(axes[:, 0], claims):
    sel = [r for r in rows if r["claim"] == claim]
    xs = range(len(sel))
    colors = {"pass": "tab:green", "fail": "tab:red", "diag": "tab:gray"}
    ax.scatter(xs, [float(r["value"]) for r in sel], c=[colors[r["status"]] for r in sel], label="value")
    ax.scatter(xs, [float(r["reference_value"]) for r in sel], marker="x", c="k", label="reference")
    ax.set_xticks(list(xs))
    ax.set_xticklabels([r["check_id"] for r in sel], rotation=60, ha="right", fontsize=6)
    ax.set_title(claim, fontsize=9)
fig.tight_layout()
fig.savefig(here / "results.png", dpi=120)
print("wrote", here / "results.png")
)PY";
}  // namespace

void write_outputs(const RunOutput& out, const Config& config, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream os(dir / name, std::ios::binary);
        if (!os) throw ConfigError("cannot write " + (dir / name).string());
        os << text;
    };
    write("results.csv", to_csv(out.rows));
    std::ostringstream tm;
    tm << "experiment,check_group,wall_time_s\n";
    for (const auto& t : out.timings) tm << t.experiment << ',' << t.check_group << ',' << format_double(t.seconds) << '\n';
    write("timings.csv", tm.str());
    write("ledger.json", ledger_json(out.ledger));
    write("config.resolved", config.resolved());
    write("plot_results.py", kPlotScript);
    for (const auto& [name, bytes] : out.attachments) {
        std::ofstream os(dir / name, std::ios::binary);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
}

std::string report(const std::filesystem::path& dir) {
    const auto path = dir / "results.csv";
    if (!std::filesystem::exists(path)) throw ConfigError("no results.csv in " + dir.string());
    std::ifstream is(path);
    std::stringstream ss;
    ss << is.rdbuf();
    std::vector<ResultRow> rows;
    try {
        rows = parse_csv(ss.str());
    } catch (const std::exception& e) {
        throw ConfigError(std::string("unreadable results.csv: ") + e.what());
    }
    std::ostringstream os;
    std::vector<std::string> failing;
    for (const auto& r : rows)
        if (r.status == Status::Fail) failing.push_back(r.check_id);
    if (!failing.empty()) {
        os << "FAILING CHECKS (" << failing.size() << ")\n";
        for (const auto& id : failing) os << "  " << id << '\n';
        os << '\n';
    }
    std::vector<std::string> order;
    for (const auto& r : rows)
        if (std::find(order.begin(), order.end(), r.claim) == order.end()) order.push_back(r.claim);
    for (const auto& claim : order) {
        std::size_t pass = 0, fail = 0, diag = 0;
        for (const auto& r : rows)
            if (r.claim == claim) (r.status == Status::Pass ? pass : r.status == Status::Fail ? fail : diag)++;
        os << claim << ": " << pass << " pass, " << fail << " fail, " << diag << " diagnostic\n";
        for (const auto& r : rows) {
            if (r.claim != claim || r.status == Status::Diagnostic) continue;
            os << "  [" << (r.status == Status::Pass ? "PASS" : "FAIL") << "] " << r.check_id << "  " << r.quantity
               << " = " << format_double(r.value) << "  (" << to_string(r.relation) << " vs "
               << format_double(r.reference_value) << ", tol " << format_double(r.tolerance) << ", "
               << r.reference_kind << ")\n";
        }
    }
    os << "\n" << rows.size() << " rows, " << failing.size() << " failing\n";
    return os.str();
}

}  // namespace mlshe::lab
