#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mlshe/errors.hpp"
#include "mlshe/kernels.hpp"
#include "mlshe/oracles/references.hpp"
#include "mlshe/oracles/symbolic_gaussian.hpp"

using namespace mlshe;
using namespace mlshe::kernels;

TEST_CASE("heat kernel values and symmetry") {
    CHECK(heat_kernel(1.0, 0.0, 0.0) == doctest::Approx(0.3989422804).epsilon(1e-10));
    CHECK(heat_kernel(2.0, 1.0, -1.0) == doctest::Approx(0.2820947918 * std::exp(-1.0)).epsilon(1e-9));
    CHECK(heat_kernel(2.0, 1.0, -1.0) == doctest::Approx(0.1037769).epsilon(1e-6));
    for (double t : {0.1, 0.7, 3.0})
        for (double a : {-1.3, 0.0, 2.2})
            for (double b : {-0.4, 1.9}) CHECK(heat_kernel(t, a, b) == heat_kernel(t, b, a));
    CHECK(std::log(heat_kernel(0.3, 0.2, 1.1)) == doctest::Approx(log_heat_kernel(0.3, 0.2, 1.1)).epsilon(1e-13));
    CHECK_THROWS_AS(heat_kernel(0.0, 0.0, 0.0), DomainError);
    CHECK_THROWS_AS(heat_kernel(-1.0, 0.0, 0.0), DomainError);
}

TEST_CASE("heat kernel integrates to one and satisfies Chapman-Kolmogorov") {
    for (double t : {0.25, 1.0, 4.0}) {
        const double w = 8.0 * std::sqrt(t);
        const double mass = oracles::integrate([&](double y) { return heat_kernel(t, 0.3, y); }, 0.3 - w, 0.3 + w, 20, 32);
        CHECK(std::abs(mass - 1.0) < 1e-8);
    }
    const double s = 0.4, t = 0.9, x = 0.2, y = -0.5;
    const double ck = oracles::integrate([&](double z) { return heat_kernel(s, x, z) * heat_kernel(t, z, y); }, -10.0,
                                         10.0, 20, 40);
    CHECK(std::abs(ck - heat_kernel(s + t, x, y)) < 1e-6);
}

TEST_CASE("heat kernel derivatives match the symbolic oracle") {
    for (int i = 0; i <= 4; ++i)
        for (int j = 0; j <= 4; ++j)
            for (double t : {0.5, 1.0, 2.0}) {
                const double want = oracles::gaussian_derivative(t, 0.3, -0.7, i, j);
                const double got = heat_kernel_derivative(t, 0.3, -0.7, i, j);
                CHECK(got == doctest::Approx(want).epsilon(1e-11).scale(1.0));
            }
}

TEST_CASE("WeylPoint ordering") {
    CHECK_NOTHROW(WeylPoint{2.0, 1.0, 1.0});
    CHECK_THROWS_AS(WeylPoint({0.0, 1.0}), DomainError);
    CHECK(WeylPoint{2.0, 1.0}.strictly_interior());
    CHECK_FALSE(WeylPoint{1.0, 1.0}.strictly_interior());
    const WeylPoint c = WeylPoint::centered(3, 0.5, 0.2);
    CHECK(c[0] == doctest::Approx(0.7));
    CHECK(c[1] == doctest::Approx(0.5));
    CHECK(c[2] == doctest::Approx(0.3));
    CHECK(WeylPoint::confluent(4, -1.0).size() == 4);
}

TEST_CASE("Karlin-McGregor density") {
    const WeylPoint one{0.4};
    const WeylPoint other{-0.2};
    CHECK(km_density(0.8, one, other) == doctest::Approx(heat_kernel(0.8, 0.4, -0.2)).epsilon(1e-13));
    const double want = (1.0 / (2.0 * std::numbers::pi)) * (1.0 - std::exp(-1.0));
    CHECK(km_density(1.0, WeylPoint{1.0, 0.0}, WeylPoint{1.0, 0.0}) == doctest::Approx(want).epsilon(1e-12));
    CHECK(km_density(1.0, WeylPoint{1.0, 1.0}, WeylPoint{0.5, -0.5}) == 0.0);
    CHECK(km_density(1.0, WeylPoint{1.0, 0.0}, WeylPoint{0.3, 0.3}) == 0.0);
    CHECK_THROWS_AS(km_density(1.0, WeylPoint{1.0, 0.0}, WeylPoint{1.0}), DomainError);
    // Log form agrees with the direct value far into the tails.
    const WeylPoint x{6.0, 5.0, 4.0};
    const WeylPoint y{-4.0, -5.0, -6.0};
    const auto lg = km_density_log(0.5, x, y);
    CHECK(lg.sign == 1);
    CHECK(std::isfinite(lg.log_abs));
}

TEST_CASE("Karlin-McGregor semigroup for two particles") {
    const double s = 0.3, t = 0.5;
    const WeylPoint x{0.4, -0.3};
    const WeylPoint y{0.6, 0.0};
    // Integrate over z1 > z2 with nested Gauss-Legendre panels.
    const double lo = -6.0, hi = 6.0;
    const double total = oracles::integrate(
        [&](double z1) {
            return oracles::integrate(
                [&](double z2) {
                    const WeylPoint z{z1, z2};
                    return km_density(s, x, z) * km_density(t, z, y);
                },
                lo, z1, 16, 16);
        },
        lo, hi, 16, 24);
    CHECK(std::abs(total - km_density(s + t, x, y)) < 1e-5);
}

TEST_CASE("Vandermonde product") {
    const double a[] = {3.0, 1.0};
    const double b[] = {2.0, 1.0, 0.0};
    const double c[] = {5.0};
    CHECK(vandermonde(a) == 2.0);
    CHECK(vandermonde(b) == 2.0);
    CHECK(vandermonde(c) == 1.0);
    const double d[] = {1.0, 2.0};
    CHECK(vandermonde(d) == -1.0);
}

TEST_CASE("printed and calibrated constants") {
    CHECK(printed_constant(1, 0.7) == 1.0);
    CHECK(printed_constant(2, 0.7) == doctest::Approx(0.7));
    CHECK(printed_constant(3, 1.0) == doctest::Approx(2.0));
    CHECK(printed_constant(3, 2.0) == doctest::Approx(16.0));
    for (int n = 2; n <= 6; ++n)
        for (double t : {0.3, 1.0, 2.5}) {
            const double r = printed_constant(n - 1, t) * printed_constant(n + 1, t) / std::pow(printed_constant(n, t), 2);
            CHECK(r == doctest::Approx(n * t).epsilon(1e-14));
        }
    CHECK(factorial_product(4) == 12.0);

    // Calibrated constant forces Z_n = p^n against the symbolic Wronskian oracle.
    for (int n = 2; n <= 4; ++n)
        for (double t : {0.5, 1.0, 2.0}) {
            const auto ledger = confluent_constants(n, t);
            const double p = heat_kernel(t, 0.1, -0.3);
            const double w = oracles::free_wronskian(n, t, 0.1, -0.3);
            CHECK(ledger.calibrated_constant == doctest::Approx(std::pow(p, n) / w).epsilon(1e-9));
            CHECK(ledger.printed_constant == doctest::Approx(printed_constant(n, t)));
            CHECK(ledger.probes > 0);
        }
    CHECK(confluent_constants(3, 1.0).calibrated_constant == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(confluent_constants(2, 1.0).signs.interlace == -1);
    CHECK(confluent_constants(3, 1.0).signs.interlace == 1);
    for (int n = 1; n <= 5; ++n) {
        const auto s = confluent_constants(n, 1.0).signs;
        CHECK(s.interlace == ((n + 1) % 2 == 0 ? 1 : -1));
        CHECK(s.confluent_dx == ((n * (n - 1) / 2) % 2 == 0 ? 1 : -1));
    }
}

TEST_CASE("determinant over separations approaches the free-field confluent limit") {
    // p*(t, x, y) / (Delta(x) Delta(y)) -> p^n / printed constant as the points merge.
    const double t = 1.0, a = 0.2, b = -0.1;
    for (int n = 2; n <= 3; ++n) {
        auto ratio = [&](double d) {
            const WeylPoint x = WeylPoint::centered(static_cast<std::size_t>(n), a, d);
            const WeylPoint y = WeylPoint::centered(static_cast<std::size_t>(n), b, d);
            return km_density(t, x, y) / (vandermonde(x) * vandermonde(y));
        };
        const double fine = ratio(0.01), coarse = ratio(0.02);
        const double limit = (4.0 * fine - coarse) / 3.0;
        const double want = std::pow(heat_kernel(t, a, b), n) / printed_constant(n, t);
        CHECK(limit == doctest::Approx(want).epsilon(1e-6));
    }
}

TEST_CASE("Gelfand-Tsetlin volume") {
    CHECK(gt_volume(WeylPoint{2.0, 1.0, 0.0}) == doctest::Approx(1.0));
    CHECK(gt_volume(WeylPoint{1.0, -1.0}) == doctest::Approx(2.0));
    const auto mc = oracles::gt_volume_monte_carlo({1.5, 0.2, -0.8}, 400000, 11);
    CHECK(std::abs(mc.value - gt_volume(WeylPoint{1.5, 0.2, -0.8})) < 4.0 * mc.std_error);
}
