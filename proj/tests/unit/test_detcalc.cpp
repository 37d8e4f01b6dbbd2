#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "doctest.h"
#include "mlshe/detcalc.hpp"
#include "mlshe/errors.hpp"
#include "mlshe/kernels.hpp"
#include "mlshe/oracles/references.hpp"
#include "mlshe/oracles/symbolic_gaussian.hpp"

using namespace mlshe;
using namespace mlshe::detcalc;
using kernels::heat_kernel;
using kernels::heat_kernel_derivative;

namespace {

DerivativeTable gaussian_table(double t, double x, double y, std::size_t m) {
    DerivativeTable tab(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
            tab(i, j) = heat_kernel_derivative(t, x, y, static_cast<int>(i), static_cast<int>(j));
    return tab;
}

// Mixture of two heat kernels: positive, smooth and with a non-quadratic logarithm.
DerivativeTable mixture_table(double x, double y, std::size_t m) {
    DerivativeTable tab(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const int a = static_cast<int>(i), b = static_cast<int>(j);
            tab(i, j) = heat_kernel_derivative(1.0, x, y, a, b) + 0.5 * heat_kernel_derivative(2.0, x, y, a, b);
        }
    return tab;
}

TableGrid grid_of(double h, std::size_t count, DerivativeTable (*make)(double, double, std::size_t), std::size_t m) {
    TableGrid g;
    g.nx = g.ny = count;
    g.hx = g.hy = h;
    const double c = 0.5 * static_cast<double>(count - 1);
    for (std::size_t ix = 0; ix < count; ++ix)
        for (std::size_t iy = 0; iy < count; ++iy)
            g.tables.push_back(make(0.1 + h * (static_cast<double>(ix) - c), -0.2 + h * (static_cast<double>(iy) - c), m));
    return g;
}

DerivativeTable gaussian_unit(double x, double y, std::size_t m) { return gaussian_table(1.0, x, y, m); }

double center_residual(const DarbouxGrid& d, int n) {
    return d.residual[static_cast<std::size_t>(n - 1)][(d.nx / 2) * d.ny + d.ny / 2];
}

}  // namespace

TEST_CASE("Wronskian of the Gaussian kernel") {
    const double p = heat_kernel(1.0, 0.0, 0.0);
    const auto tab = gaussian_table(1.0, 0.0, 0.0, 4);
    CHECK(wronskian(tab, 1) == doctest::Approx(p).epsilon(1e-14));
    CHECK(wronskian(tab, 2) == doctest::Approx(0.1591549).epsilon(1e-6));
    CHECK(wronskian(tab, 2) == doctest::Approx(oracles::free_wronskian(2, 1.0, 0.0, 0.0)).epsilon(1e-12));
    CHECK(wronskian(tab, 3) == doctest::Approx(0.1269873).epsilon(1e-6));
    // Hermite-Hankel determinant det[He_{i+j}(0)] = -2 with the row sign (-1)^{0+1+2} of the y derivatives.
    CHECK(oracles::hermite_hankel_determinant(3) == -2);
    CHECK(wronskian(tab, 3) == doctest::Approx(-oracles::hermite_hankel_determinant(3) * std::pow(p, 3)).epsilon(1e-12));
    for (double t : {0.5, 2.0})
        for (int n = 1; n <= 4; ++n) {
            const auto tt = gaussian_table(t, 0.3, -0.4, 4);
            CHECK(wronskian(tt, n) == doctest::Approx(oracles::free_wronskian(n, t, 0.3, -0.4)).epsilon(1e-10));
        }
    const auto lw = log_wronskian(tab, 3);
    CHECK(lw.sign == 1);
    CHECK(std::exp(lw.log_abs) == doctest::Approx(wronskian(tab, 3)).epsilon(1e-12));
}

TEST_CASE("Wronskian scaling leaves T_n invariant") {
    auto tab = mixture_table(0.2, 0.1, 4);
    DerivativeTable scaled(4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) scaled(i, j) = 3.0 * tab(i, j);
    for (int n = 1; n <= 4; ++n)
        CHECK(wronskian(scaled, n) == doctest::Approx(std::pow(3.0, n) * wronskian(tab, n)).epsilon(1e-12));
    TableGrid a, b;
    a.nx = a.ny = b.nx = b.ny = 1;
    a.tables = {tab};
    b.tables = {scaled};
    const auto ca = darboux_chain(a, 3).chains[0];
    const auto cb = darboux_chain(b, 3).chains[0];
    for (std::size_t k = 0; k < 2; ++k) CHECK(ca.t_fields[k] == doctest::Approx(cb.t_fields[k]).epsilon(1e-12));
}

TEST_CASE("Darboux chain on the Gaussian kernel") {
    const auto g = grid_of(0.01, 3, gaussian_unit, 4);
    const auto d = darboux_chain(g, 3);
    for (const auto& c : d.chains) {
        CHECK(c.w[0] == 1.0);
        CHECK(c.t_fields[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(c.t_fields[1] == doctest::Approx(2.0).epsilon(1e-12));
        for (std::size_t n = 1; n < 3; ++n) CHECK(c.reconstruct_next(n) == doctest::Approx(c.w[n + 1]).epsilon(1e-13));
    }
    // log W_n is quadratic for the Gaussian, so central differences are exact up to roundoff.
    CHECK(center_residual(d, 1) < 1e-8);
    CHECK(center_residual(d, 2) < 1e-8);
}

TEST_CASE("Darboux residual converges at second order") {
    const auto coarse = darboux_chain(grid_of(0.02, 3, mixture_table, 4), 3);
    const auto fine = darboux_chain(grid_of(0.01, 3, mixture_table, 4), 3);
    for (int n = 1; n <= 2; ++n) {
        const double ratio = center_residual(coarse, n) / center_residual(fine, n);
        CHECK(ratio > 3.5);
        CHECK(ratio < 4.5);
    }
}

TEST_CASE("Darboux chain reports vanishing Wronskians") {
    TableGrid g;
    g.nx = g.ny = 1;
    DerivativeTable tab(3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) tab(i, j) = 1.0;
    g.tables = {tab};
    CHECK_THROWS_AS(darboux_chain(g, 2), SingularityError);
}

TEST_CASE("divided difference chain") {
    const double t = 1.0, x = 0.0, dy = 0.01;
    const std::size_t ny = 41;
    auto sample = [&](int order) {
        std::vector<std::vector<double>> dxg(static_cast<std::size_t>(order) + 1, std::vector<double>(ny));
        for (int k = 0; k <= order; ++k)
            for (std::size_t j = 0; j < ny; ++j)
                dxg[static_cast<std::size_t>(k)][j] = heat_kernel_derivative(t, x, -0.2 + dy * static_cast<double>(j), k, 0);
        return dxg;
    };
    SUBCASE("n = 1 gives 1/t") {
        const auto r = divided_difference_chain(sample(1), {}, dy);
        CHECK(r.values[ny / 2] == doctest::Approx(1.0 / t).epsilon(1e-8));
        CHECK(std::isnan(r.values[0]));
    }
    SUBCASE("n = 2 gives 2/t") {
        std::vector<std::vector<double>> tf(1, std::vector<double>(ny, 1.0 / t));
        const auto r = divided_difference_chain(sample(2), tf, dy);
        CHECK(r.values[ny / 2] == doctest::Approx(2.0 / t).epsilon(1e-6));
        CHECK(r.error_estimate[ny / 2] < 1e-5);
    }
    SUBCASE("constant in y gives zero") {
        std::vector<std::vector<double>> dxg(2, std::vector<double>(ny, 2.0));
        const auto r = divided_difference_chain(dxg, {}, dy);
        CHECK(std::abs(r.values[ny / 2]) < 1e-12);
    }
    SUBCASE("tiny T is a singularity") {
        std::vector<std::vector<double>> tf(1, std::vector<double>(ny, 0.0));
        CHECK_THROWS_AS(divided_difference_chain(sample(2), tf, dy), SingularityError);
    }
}

TEST_CASE("sampled function interpolates cubics exactly") {
    std::vector<double> v;
    for (int k = 0; k <= 20; ++k) {
        const double z = -1.0 + 0.1 * k;
        v.push_back(z * z * z - z);
    }
    const SampledFunction f(-1.0, 0.1, v);
    CHECK(f(0.37) == doctest::Approx(0.37 * 0.37 * 0.37 - 0.37).epsilon(1e-12));
    CHECK(f(1.0) == doctest::Approx(0.0).scale(1.0));
    CHECK_THROWS_AS(f(1.5), DomainError);
}

TEST_CASE("interlace integral examples") {
    const Function1D one = [](double) { return 1.0; };
    SUBCASE("n = 2, f2(y) = y") {
        const std::vector<Function1D> f{one, [](double z) { return z; }};
        const auto r = interlace_integral(f, WeylPoint{1.0, 0.0});
        CHECK(r.integral_side == doctest::Approx(1.0));
        CHECK(r.determinant_side == doctest::Approx(-1.0));
        CHECK(r.orientation_sign == -1);
        CHECK(r.relative_discrepancy < 1e-14);
    }
    SUBCASE("n = 3 monomials") {
        const std::vector<Function1D> f{one, [](double z) { return z; }, [](double z) { return z * z; }};
        const auto r = interlace_integral(f, WeylPoint{2.0, 1.0, 0.0});
        CHECK(std::abs(r.integral_side) == doctest::Approx(2.0));
        CHECK(std::abs(r.determinant_side) == doctest::Approx(2.0));
        CHECK(r.orientation_sign == 1);
        CHECK(r.integral_side == doctest::Approx(r.orientation_sign * r.determinant_side));
    }
    SUBCASE("n = 2, constant f2") {
        const std::vector<Function1D> f{one, [](double) { return 3.0; }};
        const auto r = interlace_integral(f, WeylPoint{1.0, 0.0});
        CHECK(r.integral_side == 0.0);
        CHECK(r.determinant_side == 0.0);
    }
    SUBCASE("contract violation when f1 is not 1") {
        const std::vector<Function1D> f{[](double z) { return 1.0 + z; }, [](double z) { return z; }};
        CHECK_THROWS_AS(interlace_integral(f, WeylPoint{1.0, 0.0}), ContractViolation);
    }
    SUBCASE("ties are rejected") {
        const std::vector<Function1D> f{one, [](double z) { return z; }};
        CHECK_THROWS_AS(interlace_integral(f, WeylPoint{1.0, 1.0}), DomainError);
    }
}

TEST_CASE("interlace identity over random polynomial families, one sign per n") {
    std::mt19937_64 gen(404);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    for (int n = 2; n <= 4; ++n) {
        int sign = 0;
        for (int family = 0; family < 20; ++family) {
            std::vector<std::vector<double>> c(static_cast<std::size_t>(n));
            std::vector<Function1D> f{[](double) { return 1.0; }};
            for (int i = 1; i < n; ++i) {
                std::vector<double> cc(5);
                for (double& v : cc) v = coef(gen);
                f.push_back([cc](double z) {
                    double s = 0.0;
                    for (std::size_t k = cc.size(); k-- > 0;) s = s * z + cc[k];
                    return s;
                });
            }
            std::vector<double> y(static_cast<std::size_t>(n));
            for (double& v : y) v = 2.0 * coef(gen);
            std::sort(y.begin(), y.end(), std::greater<>());
            const auto r = interlace_integral(f, WeylPoint(y));
            CHECK(r.relative_discrepancy < 1e-10);
            if (sign == 0) sign = r.orientation_sign;
            CHECK(r.orientation_sign == sign);
        }
    }
}

TEST_CASE("interlace integral side matches direct quadrature at n = 3") {
    auto f2 = [](double z) { return std::sin(z) + z; };
    auto f3 = [](double z) { return z * z * z; };
    auto d2 = [](double z) { return std::cos(z) + 1.0; };
    auto d3 = [](double z) { return 3.0 * z * z; };
    const std::vector<Function1D> f{[](double) { return 1.0; }, f2, f3};
    const WeylPoint y{1.2, 0.1, -0.9};
    const double direct = oracles::integrate(
        [&](double z1) {
            return oracles::integrate([&](double z2) { return d2(z1) * d3(z2) - d3(z1) * d2(z2); }, y[2], y[1]);
        },
        y[1], y[0]);
    CHECK(interlace_integral(f, y).integral_side == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("GT integral examples") {
    SUBCASE("constant S at n = 2") {
        const std::vector<Function1D> s{[](double) { return 0.7; }};
        CHECK(gt_integral(s, WeylPoint{1.5, -0.5}).value == doctest::Approx(0.7 * 2.0).epsilon(1e-13));
    }
    SUBCASE("S(z) = z on (1, 0)") {
        const std::vector<Function1D> s{[](double z) { return z; }};
        CHECK(gt_integral(s, WeylPoint{1.0, 0.0}).value == doctest::Approx(0.5).epsilon(1e-13));
    }
    SUBCASE("unit S at n = 3 is the polytope volume") {
        const std::vector<Function1D> s{[](double) { return 1.0; }, [](double) { return 1.0; }};
        const std::vector<double> y{1.3, 0.4, -1.1};
        const double v = gt_integral(s, WeylPoint(y)).value;
        CHECK(v == doctest::Approx(kernels::vandermonde(WeylPoint(y)) / 2.0).epsilon(1e-12));
        const auto mc = oracles::gt_volume_monte_carlo(y, 400000, 5);
        CHECK(std::abs(v - mc.value) < 4.0 * mc.std_error);
    }
    SUBCASE("n = 1 is the empty integral") {
        CHECK(gt_integral({}, WeylPoint{0.3}).value == 1.0);
    }
    SUBCASE("ties give a flagged zero") {
        const std::vector<Function1D> s{[](double) { return 1.0; }};
        const auto r = gt_integral(s, WeylPoint{1.0, 1.0});
        CHECK(r.degenerate);
        CHECK(r.value == 0.0);
    }
    SUBCASE("negative S is a domain error") {
        const std::vector<Function1D> s{[](double z) { return z - 0.5; }};
        CHECK_THROWS_AS(gt_integral(s, WeylPoint{1.0, 0.0}), DomainError);
    }
    SUBCASE("Monte Carlo fallback at n = 5") {
        const std::vector<Function1D> s(4, [](double) { return 1.0; });
        const WeylPoint y{2.0, 1.0, 0.0, -1.0, -2.0};
        GTOptions o;
        o.mc_samples = 200000;
        const auto r = gt_integral(s, y, o);
        CHECK(r.method == "monte-carlo");
        CHECK(std::abs(r.value - kernels::gt_volume(y)) < 4.0 * r.error_estimate);
    }
}

TEST_CASE("GT integral scaling, monotonicity and Simpson refinement") {
    const Function1D s1 = [](double z) { return std::exp(0.3 * z); };
    const Function1D s2 = [](double z) { return 1.0 + 0.2 * z * z; };
    const WeylPoint y{1.1, 0.2, -0.8};
    const std::vector<Function1D> base{s1, s2};
    const double v = gt_integral(base, y).value;
    const std::vector<Function1D> scaled{[&](double z) { return 2.0 * s1(z); }, [&](double z) { return 3.0 * s2(z); }};
    CHECK(gt_integral(scaled, y).value == doctest::Approx(v * 4.0 * 3.0).epsilon(1e-13));
    const std::vector<Function1D> bigger{[&](double z) { return s1(z) + 0.01; }, s2};
    CHECK(gt_integral(bigger, y).value > v);

    const std::vector<Function1D> one_level{[](double z) { return std::exp(z); }};
    GTOptions o;
    o.nodes = 4;
    const auto a = gt_integral(one_level, WeylPoint{1.0, -1.0}, o);
    o.nodes = 8;
    const auto b = gt_integral(one_level, WeylPoint{1.0, -1.0}, o);
    const double ratio = std::abs(a.coarse_value - a.value) / std::abs(b.coarse_value - b.value);
    CHECK(ratio > 14.0);
    CHECK(ratio < 18.0);
}

TEST_CASE("factorization of the Gaussian derivative determinant") {
    std::vector<Function1D> dxg;
    for (int k = 0; k < 3; ++k) dxg.push_back([k](double y) { return heat_kernel_derivative(1.0, 0.0, y, k, 0); });
    SUBCASE("n = 2") {
        const std::vector<Function1D> tf{[](double) { return 1.0; }};
        const auto r = gt_factorization_check(dxg, tf, WeylPoint{1.0, -1.0});
        const double closed = heat_kernel(1.0, 0.0, 1.0) * heat_kernel(1.0, 0.0, -1.0) * 2.0;
        CHECK(std::abs(r.lhs) == doctest::Approx(closed).epsilon(1e-12));
        CHECK(r.ratio == doctest::Approx(r.expected_sign).epsilon(1e-12));
        CHECK(r.expected_sign == -1);
    }
    SUBCASE("n = 1") {
        const auto r = gt_factorization_check(dxg, {}, WeylPoint{0.4});
        CHECK(r.lhs == doctest::Approx(heat_kernel(1.0, 0.0, 0.4)));
        CHECK(r.rhs == doctest::Approx(r.lhs));
    }
    SUBCASE("n = 3 across three probes") {
        const std::vector<Function1D> tf{[](double) { return 1.0; }, [](double) { return 2.0; }};
        for (const WeylPoint& y : {WeylPoint{1.0, 0.0, -1.0}, WeylPoint{0.5, -0.2, -1.5}, WeylPoint{2.0, 0.3, 0.1}}) {
            const auto r = gt_factorization_check(dxg, tf, y);
            CHECK(r.ratio == doctest::Approx(r.expected_sign).epsilon(1e-9));
        }
    }
}
