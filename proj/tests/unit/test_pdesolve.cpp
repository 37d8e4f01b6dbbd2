#include <cmath>
#include <vector>

#include "doctest.h"
#include "mlshe/bridgesim.hpp"
#include "mlshe/errors.hpp"
#include "mlshe/kernels.hpp"
#include "mlshe/pdesolve.hpp"

using namespace mlshe;
using kernels::heat_kernel;
using kernels::WeylPoint;

namespace {

GridSpec pencil_grid(int n_max, double dy = 0.02, std::size_t n_t = 1000) {
    GridSpec g = GridSpec::symmetric(8.0, dy, 1.0, n_t);
    g.with_pencil(0.0, pde::required_pencil(n_max, 4));
    return g;
}

const PotentialField& bump() {
    static const PotentialField phi = PotentialField::single_bump(1.0, 0.5, 0.0, 0.2, 0.5);
    return phi;
}

}  // namespace

TEST_CASE("free field reproduces the heat kernel") {
    GridSpec g = GridSpec::symmetric(8.0, 0.02, 1.0, 1000);
    g.x_nodes = {0.0, 0.4};
    const auto surf = pde::solve_smooth(PotentialField::zero(), g);
    for (std::size_t ix = 0; ix < 2; ++ix) {
        const double x = g.x_nodes[ix];
        const auto tr = pde::trust_region(g, x, 1.0);
        double worst = 0.0;
        for (std::size_t j = tr.lo; j <= tr.hi; ++j)
            worst = std::max(worst, std::abs(surf.z(ix, j) / heat_kernel(1.0, x, g.y(j)) - 1.0));
        CHECK(worst < 1e-4);
    }
    CHECK(surf.nonpositive_interior == 0);
    CHECK(surf.t() == doctest::Approx(1.0));
    CHECK(surf.slices.size() == 3);
}

TEST_CASE("constant potential multiplies by exp(ct)") {
    GridSpec g = GridSpec::symmetric(8.0, 0.02, 1.0, 1000);
    const double c = -0.4;
    const auto surf = pde::solve_smooth(PotentialField::constant(c), g);
    const auto tr = pde::trust_region(g, 0.0, 1.0);
    double worst = 0.0;
    for (std::size_t j = tr.lo; j <= tr.hi; ++j)
        worst = std::max(worst, std::abs(surf.z(0, j) / (std::exp(c) * heat_kernel(1.0, 0.0, g.y(j))) - 1.0));
    CHECK(worst < 1e-4);
}

TEST_CASE("grid validation") {
    GridSpec g = GridSpec::symmetric(3.0, 0.05, 1.0, 100);
    CHECK_THROWS_AS(pde::solve_smooth(PotentialField::zero(), g), ConfigurationError);  // domain too narrow
    GridSpec h = GridSpec::symmetric(8.0, 0.05, 1.0, 100);
    h.init_epsilon = 0.5;
    CHECK_THROWS_AS(pde::solve_smooth(PotentialField::zero(), h), ConfigurationError);
    GridSpec k = GridSpec::symmetric(8.0, 0.05, 1.0, 100);
    k.x_nodes = {};
    CHECK_THROWS_AS(pde::solve_smooth(PotentialField::zero(), k), ConfigurationError);
    CHECK_THROWS_AS(k.x_index(0.3), ConfigurationError);
}

TEST_CASE("trust region") {
    const GridSpec g = GridSpec::symmetric(8.0, 0.1, 1.0, 10);
    const auto r = pde::trust_region(g, 0.0, 1.0, 4.0);
    CHECK(g.y(r.lo) == doctest::Approx(-4.0));
    CHECK(g.y(r.hi) == doctest::Approx(4.0));
    CHECK(r.count() == 81);
    const auto clipped = pde::trust_region(g, 7.0, 1.0, 4.0);
    CHECK(clipped.hi == g.n_y - 1);
}

TEST_CASE("free-field layers: Z_n = p^n and both S candidates") {
    const GridSpec g = pencil_grid(3);
    const auto surf = pde::solve_smooth(PotentialField::zero(), g);
    const auto ix = static_cast<std::size_t>(pde::required_pencil(3, 4));
    const auto st = pde::build_layers(surf, ix, 3);
    REQUIRE(st.constants.size() == 3);
    CHECK(st.constants[2].calibrated_constant == doctest::Approx(0.5).epsilon(1e-10));
    for (std::size_t j = st.trust.lo; j <= st.trust.hi; ++j) {
        const double p = st.heat(j);
        double prod = 1.0;
        for (int n = 1; n <= 3; ++n) {
            const auto k = static_cast<std::size_t>(n - 1);
            CHECK(std::abs(st.z[k][j] / std::pow(p, n) - 1.0) < 5e-3);
            prod *= st.u[k][j];
            CHECK(prod == doctest::Approx(st.z[k][j]).epsilon(1e-12));
        }
        for (int n = 1; n <= 2; ++n) {
            const auto k = static_cast<std::size_t>(n - 1);
            CHECK(std::abs(st.s_printed[k][j] * n - 1.0) < 1e-2);
            CHECK(std::abs(st.s_alt[k][j] / n - 1.0) < 1e-2);
        }
    }
}

TEST_CASE("layer construction errors") {
    GridSpec g = GridSpec::symmetric(8.0, 0.05, 1.0, 200);
    g.with_pencil(0.0, 1);
    const auto surf = pde::solve_smooth(PotentialField::zero(), g);
    CHECK_THROWS_AS(pde::build_layers(surf, 1, 3), ConfigurationError);
}

TEST_CASE("free-field layer residual converges at second order") {
    std::array<double, 2> r{};
    for (int level = 0; level < 2; ++level) {
        GridSpec g = GridSpec::symmetric(8.0, 0.05 / (1 << level), 1.0, 200u << level);
        g.with_pencil(0.0, pde::required_pencil(2, 4));
        const auto surf = pde::solve_smooth(PotentialField::zero(), g);
        const auto h = pde::build_history(surf, static_cast<std::size_t>(pde::required_pencil(2, 4)), 2);
        r[static_cast<std::size_t>(level)] = pde::layer_residual(h, 1).max_abs;
    }
    const double ratio = r[0] / r[1];
    CHECK(ratio > 3.0);
    CHECK(ratio < 5.0);
}

TEST_CASE("GT reconstruction in the free field") {
    const GridSpec g = pencil_grid(3);
    const auto surf = pde::solve_smooth(PotentialField::zero(), g);
    const auto ix = static_cast<std::size_t>(pde::required_pencil(3, 4));
    SUBCASE("n = 2") {
        const auto r = pde::gt_reconstruction_check(surf, ix, WeylPoint{0.6, -0.4}, 2);
        const double p1 = heat_kernel(1.0, 0.0, r.y[0]), p2 = heat_kernel(1.0, 0.0, r.y[1]);
        CHECK(std::abs(r.side_a) == doctest::Approx(p1 * p2).epsilon(5e-3));
        CHECK(r.ratio_alt == doctest::Approx(r.expected_sign).epsilon(5e-3));
    }
    SUBCASE("n = 3: the two S candidates differ by the factor n^2 structure") {
        const auto r = pde::gt_reconstruction_check(surf, ix, WeylPoint{0.8, 0.0, -0.6}, 3);
        CHECK(r.ratio_alt == doctest::Approx(r.expected_sign).epsilon(5e-3));
        CHECK(r.ratio_printed / r.ratio_alt == doctest::Approx(4.0).epsilon(1e-2));
    }
}

TEST_CASE("confluent calibration probe") {
    const GridSpec g = pencil_grid(3);
    const auto surf = pde::solve_smooth(bump(), g);
    const auto ix = static_cast<std::size_t>(pde::required_pencil(3, 4));
    for (int n = 2; n <= 3; ++n) {
        const auto probe = pde::calibrate_probe(surf, ix, g.nearest(0.2), n);
        CHECK(probe.constant == doctest::Approx(kernels::confluent_constants(n, 1.0).calibrated_constant).epsilon(5e-3));
    }
}

TEST_CASE("reflection symmetry of u_n") {
    const GridSpec g = pencil_grid(3, 0.04, 300);
    SUBCASE("even potential") {
        const auto r = pde::rsk_symmetry_check(bump(), g, 3);
        for (double e : r.max_rel_error) CHECK(e < 1e-9);
    }
    SUBCASE("off-center bump") {
        const auto r = pde::rsk_symmetry_check(PotentialField::single_bump(0.8, 0.5, 0.7, 0.25, 0.5), g, 3);
        for (double e : r.max_rel_error) CHECK(e < 1e-3);
    }
    SUBCASE("asymmetric grid is rejected") {
        GridSpec a = g;
        a.y_max += 0.5;
        CHECK_THROWS_AS(pde::rsk_symmetry_check(bump(), a, 2), ConfigurationError);
    }
}

TEST_CASE("single bump: solver agrees with Feynman-Kac Monte Carlo") {
    GridSpec g = GridSpec::symmetric(8.0, 0.02, 1.0, 1000);
    const auto surf = pde::solve_smooth(bump(), g);
    bridges::FeynmanKacOptions o;
    o.samples = 40000;
    o.steps = 200;
    o.seed = 99;
    const auto est = bridges::feynman_kac_layers(bump(), 1, 1.0, WeylPoint{0.0}, WeylPoint{0.0}, o);
    const double z = surf.z(0, g.nearest(0.0));
    CHECK(std::abs(est.estimate.value - z) < 3.0 * est.estimate.std_error);
}
