#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_helpers.hpp"
#include "todaspec/toda.hpp"

using namespace todaspec;
using testing::random_complex;
using testing::random_sequence;

static CoefficientWindow constant_window(cd a, cd b, int n_lo, int len) {
    return CoefficientWindow::create(n_lo, VecC(size_t(len), a), VecC(size_t(len), b));
}

static CoefficientWindow random_window(int n_lo, int len, double scale = 1.0) {
    return CoefficientWindow::create(n_lo, random_sequence(size_t(len), scale, 0.25),
                                     random_sequence(size_t(len), scale));
}

TEST_CASE("free lattice: f_1 = 0, f_2 = 1/2, g_1 = -1/2 with vanishing constants") {
    auto w = constant_window(cd(0.5), cd(0.0), -6, 13);
    auto t = hierarchy(w, SummationConstants{{cd(0)}}, 1);
    CHECK(std::abs(t.f[0].at(0) - cd(1.0)) < 1e-15);
    CHECK(std::abs(t.f[1].at(0)) < 1e-15);
    CHECK(std::abs(t.f[2].at(0) - cd(0.5)) < 1e-15);
    CHECK(std::abs(t.g[0].at(0)) < 1e-15);  // g_0 = -c_1 = 0
    CHECK(std::abs(t.g[1].at(0) - cd(-0.5)) < 1e-15);
}

TEST_CASE("f_1 = b + c_1 and f_2 matches its closed form at a random site") {
    auto w = random_window(-5, 11);
    cd c1 = random_complex(), c2 = random_complex();
    auto t = hierarchy(w, SummationConstants{{c1, c2}}, 2);
    const int n = 0;
    CHECK(std::abs(t.f[1].at(n) - (w.b_at(n) + c1)) < 1e-13);
    cd f2_expected = w.a_at(n) * w.a_at(n) + w.a_at(n - 1) * w.a_at(n - 1) +
                     w.b_at(n) * w.b_at(n) + c1 * w.b_at(n) + c2;
    CHECK(std::abs(t.f[2].at(n) - f2_expected) < 1e-13);
}

TEST_CASE("g_2 closed form: -2a^2(b^+ + b) - 2 c_1 a^2 - c_3") {
    auto w = random_window(-5, 14);
    cd c1 = random_complex(), c2 = random_complex(), c3 = random_complex();
    auto t = hierarchy(w, SummationConstants{{c1, c2, c3}}, 3);
    const int n = 1;
    const cd a2 = w.a_at(n) * w.a_at(n);
    cd expected = -2.0 * a2 * (w.b_at(n + 1) + w.b_at(n)) - 2.0 * c1 * a2 - c3;
    CHECK(std::abs(t.g[2].at(n) - expected) < 1e-12);
    // g_1 = -2a^2 - c_2
    CHECK(std::abs(t.g[1].at(n) - (-2.0 * a2 - c2)) < 1e-13);
}

TEST_CASE("spectral polynomials: p = 0 free lattice gives F_0 = 1, G_1 = -z + b") {
    auto w = constant_window(cd(0.5), cd(0.3, -0.1), 0, 9);
    auto sp = build_polys(hierarchy(w, SummationConstants{}, 0));
    const int n = 4;
    REQUIRE(sp.F_at(n).size() == 1);
    CHECK(std::abs(sp.F_at(n)[0] - cd(1.0)) < 1e-15);
    REQUIRE(sp.G_at(n).size() == 2);
    CHECK(std::abs(sp.G_at(n)[1] + cd(1.0)) < 1e-15);
    CHECK(std::abs(sp.G_at(n)[0] - cd(0.3, -0.1)) < 1e-15);
}

TEST_CASE("spectral polynomials: p = 1 G_2 closed form") {
    auto w = random_window(-4, 12);
    cd c1 = random_complex();
    auto sp = build_polys(hierarchy(w, SummationConstants{{c1}}, 1));
    const int n = 0;
    // G_2 = -z^2 + (a^-)^2 - a^2 + b^2 + c_1(-z + b)
    const cd am2 = w.a_at(n - 1) * w.a_at(n - 1);
    const cd a2 = w.a_at(n) * w.a_at(n);
    const cd b = w.b_at(n);
    VecC expected{am2 - a2 + b * b + c1 * b, -c1, cd(-1.0)};
    REQUIRE(sp.G_at(n).size() == 3);
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(sp.G_at(n)[size_t(i)] - expected[size_t(i)]) < 1e-12);
    // F_1 = z + b + c_1
    CHECK(std::abs(sp.F_at(n)[0] - (b + c1)) < 1e-13);
    CHECK(std::abs(sp.F_at(n)[1] - cd(1.0)) < 1e-15);
}

TEST_CASE("stationary residual: constants solve the p = 0 equation exactly") {
    auto w = constant_window(cd(0.4, 0.2), cd(-0.3, 0.7), 0, 9);
    auto [rf, rg] = stationary_residual(w, SummationConstants{}, 0);
    CHECK(rf == 0.0);
    CHECK(rg == 0.0);
}

TEST_CASE("stationary residual: genus-0 closed form from a random complex curve") {
    cd E0 = random_complex(2.0), E1 = random_complex(2.0) + cd(3.0);
    cd b = 0.5 * (E0 + E1);
    cd a = 0.25 * (E1 - E0);  // a^2 = (E1-E0)^2/16
    auto w = constant_window(a, b, -3, 9);
    auto [rf, rg] = stationary_residual(w, SummationConstants{}, 0);
    CHECK(rf < 1e-14);
    CHECK(rg < 1e-14);
}

TEST_CASE("stationary residual: random sequences are far from stationary") {
    auto w = random_window(0, 15);
    auto [rf, rg] = stationary_residual(w, SummationConstants{{cd(0.1)}}, 1);
    CHECK(rf + rg > 0.01);
}

TEST_CASE("ck_from_E: first constant, symmetric curve, permutation invariance") {
    VecC E{cd(-2.1, 0.3), cd(-0.9, -0.2), cd(1.1, 0.4), cd(2.3, -0.1)};
    auto spec = CurveSpec::from_points(E);
    auto cs = ck_from_E(spec);
    REQUIRE(cs.c.size() == 1);
    cd sumE = 0.0;
    for (cd e : E) sumE += e;
    CHECK(std::abs(cs.c[0] - (-0.5 * sumE)) < 1e-13);

    auto sym = CurveSpec::from_points({cd(-2), cd(-1), cd(1), cd(2)});
    CHECK(std::abs(ck_from_E(sym).c[0]) < 1e-15);

    VecC Eperm{E[2], E[0], E[3], E[1]};
    auto cs2 = ck_from_E(CurveSpec::from_points(Eperm));
    CHECK(std::abs(cs.c[0] - cs2.c[0]) < 1e-14);
}

TEST_CASE("ck_from_E agrees with the series expansion of sqrt(prod(1 - E t)) [oracle]") {
    VecC E{cd(-1.7, 0.25), cd(-0.6, -0.45), cd(0.8, 0.35), cd(1.9, -0.15), cd(2.5, 0.6), cd(-2.8, -0.3)};
    auto spec = CurveSpec::from_points(E);  // genus 2
    auto cs = ck_from_E(spec);
    auto series = sqrt_product_series(E, 4, +1.0);
    REQUIRE(cs.c.size() == 2);
    CHECK(std::abs(cs.c[0] - series[1]) < 1e-13);
    CHECK(std::abs(cs.c[1] - series[2]) < 1e-13);
}

TEST_CASE("recover_curve: genus-0 constants reproduce (z - E0)(z - E1)") {
    cd E0(-1.3, 0.4), E1(2.2, -0.6);
    cd b = 0.5 * (E0 + E1), a = 0.25 * (E1 - E0);
    auto w = constant_window(a, b, 0, 9);
    auto sp = build_polys(hierarchy(w, SummationConstants{}, 0));
    auto rc = recover_curve(sp);
    CHECK(rc.max_deviation < 1e-14);
    REQUIRE(rc.roots.size() == 2);
    // roots in sorted order vs expected
    VecC expect{E0, E1};
    std::sort(expect.begin(), expect.end(), [](cd x, cd y) {
        return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
    CHECK(std::abs(rc.roots[0] - expect[0]) < 1e-10);
    CHECK(std::abs(rc.roots[1] - expect[1]) < 1e-10);
}

TEST_CASE("recover_curve rejects non-stationary windows") {
    auto w = random_window(0, 16);
    auto sp = build_polys(hierarchy(w, SummationConstants{{cd(0)}}, 1));
    CHECK_THROWS_AS(recover_curve(sp), NotStationary);
}

TEST_CASE("dirichlet: p = 1 zero of F_1 is -b - c_1") {
    auto w = random_window(-4, 12);
    cd c1 = random_complex();
    auto sp = build_polys(hierarchy(w, SummationConstants{{c1}}, 1));
    auto d = dirichlet(sp, 0);
    REQUIRE(d.mu.size() == 1);
    CHECK(std::abs(d.mu[0] - (-w.b_at(0) - c1)) < 1e-12);
    // lift is -G_2(mu, 0)
    CHECK(std::abs(d.y_hat[0] + poly_eval(sp.G_at(0), d.mu[0])) < 1e-13);
}

TEST_CASE("window validation") {
    CHECK_THROWS_AS(CoefficientWindow::create(0, {cd(0.0)}, {cd(1.0)}), ValidationError);
    CHECK_THROWS_AS(CoefficientWindow::create(0, {cd(1.0)}, {}), ValidationError);
    auto w = constant_window(cd(0.5), cd(0.0), 0, 5);
    CHECK_THROWS_AS(hierarchy(w, SummationConstants{{cd(0), cd(0)}}, 2), WindowTooNarrow);
}

TEST_CASE("trace helper formulas on explicit data") {
    auto spec = CurveSpec::from_points({cd(-2), cd(-1), cd(1), cd(2)});
    VecC mu{cd(0.3, 0.1)};
    CHECK(std::abs(trace_b(spec, mu) - (cd(0.0) - mu[0])) < 1e-15);
    CHECK(std::abs(trace_b_moment(spec, mu, 2) - (cd(5.0) - mu[0] * mu[0])) < 1e-13);
}
