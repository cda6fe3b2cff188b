#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_helpers.hpp"
#include "todaspec/finitegap.hpp"

using namespace todaspec;
using testing::random_complex;
using testing::uniform;

namespace {

struct Setup {
    PeriodPipeline pipe;
    DivisorInput divisor;
    std::unique_ptr<CoefficientGenerator> gen;
    CoefficientWindow window;
    SummationConstants cs;
    SpectralPolys polys;
};

Setup make_setup(VecC E, VecC mu, int n_lo, int n_hi) {
    Setup s;
    s.pipe = PeriodPipeline::run(CurveSpec::from_points(std::move(E)));
    DivisorInput div;
    for (cd m : mu) div.mu_hat.push_back(SurfacePoint{m, std::sqrt(eval_R(s.pipe.spec, m))});
    div.n0 = 0;
    s.divisor = div;
    s.gen = std::make_unique<CoefficientGenerator>(s.pipe, div);
    auto rep = s.gen->generate(n_lo, n_hi);
    REQUIRE(rep.divisor_sites.empty());
    s.window = rep.window;
    s.cs = ck_from_E(s.pipe.spec);
    s.polys = build_polys(hierarchy(s.window, s.cs, s.pipe.spec.genus));
    return s;
}

Setup& genus1_selfadjoint() {
    static Setup s = make_setup({cd(-2), cd(-1), cd(1), cd(2)}, {cd(0.3)}, -24, 24);
    return s;
}

Setup& genus1_complex() {
    static Setup s =
        make_setup({cd(-2, 0.25), cd(-1, -0.3), cd(0.8, 0.4), cd(2, -0.2)}, {cd(0.15, 0.35)}, -24, 24);
    return s;
}

Setup& genus2_complex() {
    static Setup s = make_setup(
        {cd(-2.0, 0.3), cd(-1.1, -0.4), cd(0.2, 0.5), cd(1.0, -0.2), cd(2.1, 0.4), cd(3.0, -0.5)},
        {cd(-0.4, 0.15), cd(1.55, 0.1)}, -24, 24);
    return s;
}

}  // namespace

TEST_CASE("genus 0: closed-form coefficients") {
    auto spec = CurveSpec::from_points({cd(-1.3, 0.4), cd(2.2, -0.6)});
    auto pipe = PeriodPipeline::run(spec);
    CoefficientGenerator gen(pipe, DivisorInput{{}, 0});
    auto rep = gen.generate(-5, 5);
    REQUIRE(rep.divisor_sites.empty());
    const cd b_expect = 0.5 * (spec.branch_points[0] + spec.branch_points[1]);
    const cd d = spec.branch_points[1] - spec.branch_points[0];
    const cd a2_expect = d * d / 16.0;
    for (int n = -5; n <= 5; ++n) {
        CHECK(std::abs(rep.window.b_at(n) - b_expect) < 1e-12);
        CHECK(std::abs(rep.window.a_at(n) * rep.window.a_at(n) - a2_expect) < 1e-12);
    }
    CHECK(std::abs(gen.flow().Lambda0 - b_expect) < 1e-13);
}

TEST_CASE("flow vectors satisfy C = A + B") {
    auto& s = genus2_complex();
    const auto& f = s.gen->flow();
    CHECK((f.C - f.A - f.B).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(f.B.size() == 2);
    CHECK((f.B - s.pipe.data.U0_3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("special divisors (involution pairs) are rejected") {
    // a degree-2 divisor {P, P*} is special; its flow argument sits on the
    // theta divisor and the generator must refuse it
    auto& pipe = genus2_complex().pipe;
    cd z(0.6, 0.9);
    cd y = std::sqrt(eval_R(pipe.spec, z));
    DivisorInput div;
    div.mu_hat.push_back(SurfacePoint{z, y});
    div.mu_hat.push_back(SurfacePoint{z, -y});
    div.n0 = 0;
    CHECK_THROWS_AS(CoefficientGenerator(pipe, div), SpecialDivisor);
}

TEST_CASE("genus 1 self-adjoint: real coefficients within the gap bounds") {
    auto& s = genus1_selfadjoint();
    for (int n = -20; n <= 20; ++n) {
        CHECK(std::abs(s.window.b_at(n).imag()) < 1e-9);
        CHECK(std::abs((s.window.a_at(n) * s.window.a_at(n)).imag()) < 1e-9);
        // trace bound: b = -mu_1 with |mu_1| <= 1 on this curve (gap [-1,1])
        CHECK(std::abs(s.window.b_at(n).real()) < 1.0 + 1e-9);
    }
}

TEST_CASE("end-to-end stationarity and curve recovery (genus 1 and 2)") {
    for (Setup* sp : {&genus1_selfadjoint(), &genus1_complex(), &genus2_complex()}) {
        auto [rf, rg] = stationary_residual(sp->window, sp->cs, sp->pipe.spec.genus);
        CHECK(rf < 1e-10);
        CHECK(rg < 1e-10);
        auto rc = recover_curve(sp->polys);
        REQUIRE(rc.roots.size() == sp->pipe.spec.count());
        VecC expect = sp->pipe.spec.branch_points;
        std::sort(expect.begin(), expect.end(), [](cd a, cd b) {
            return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
        });
        for (std::size_t i = 0; i < expect.size(); ++i)
            CHECK(std::abs(rc.roots[i] - expect[i]) < 1e-7);
    }
}

TEST_CASE("trace formula b(n) = (1/2) sum E - sum mu(n) at every interior site") {
    for (Setup* sp : {&genus1_complex(), &genus2_complex()}) {
        double worst = 0.0;
        for (int n = sp->polys.lo; n <= sp->polys.hi; ++n) {
            auto d = dirichlet(sp->polys, n);
            worst = std::max(worst, std::abs(sp->window.b_at(n) - trace_b(sp->pipe.spec, d.mu)));
        }
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("Dirichlet lifts satisfy the curve equation (degree check)") {
    auto& s = genus2_complex();
    auto rc = recover_curve(s.polys);
    auto d = dirichlet(s.polys, 3, rc.coeffs);
    REQUIRE(d.mu.size() == 2);
    CHECK(d.lift_residual < 1e-8);
}

TEST_CASE("base-site divisor round trip and Abel-map linearization") {
    auto& s = genus1_complex();
    auto d0 = dirichlet(s.polys, 0);
    CHECK(std::abs(d0.mu[0] - s.divisor.mu_hat[0].z) < 1e-9);
    CHECK(std::abs(d0.y_hat[0] - s.divisor.mu_hat[0].y) < 1e-8);

    // alpha(D(n0 +/- 1)) = alpha(D(n0)) -/+ U0 modulo the lattice
    auto& eng = s.gen->engine();
    auto a_base = eng.abel_point(s.divisor.mu_hat[0]);
    for (int step : {+1, -1}) {
        auto dn = dirichlet(s.polys, step);
        SurfacePoint lifted{dn.mu[0], -poly_eval(s.polys.G_at(step), dn.mu[0])};
        auto an = eng.abel_point(lifted);
        auto resid = s.pipe.data.reduce_mod_lattice(an - a_base + double(step) * s.pipe.data.U0_3);
        CHECK(resid.cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("gauge invariance: sign flips of a leave the stationarity residual unchanged") {
    auto& s = genus1_complex();
    CoefficientWindow flipped = s.window;
    for (std::size_t i = 0; i < flipped.a.size(); i += 3) flipped.a[i] = -flipped.a[i];
    auto [rf0, rg0] = stationary_residual(s.window, s.cs, 1);
    auto [rf1, rg1] = stationary_residual(flipped, s.cs, 1);
    CHECK(std::abs(rf0 - rf1) < 1e-12);
    CHECK(std::abs(rg0 - rg1) < 1e-12);
}

TEST_CASE("phi: Riccati, involution product, difference, and the two evaluation forms") {
    for (Setup* sp : {&genus1_complex(), &genus2_complex()}) {
        for (int trial = 0; trial < 6; ++trial) {
            cd z = random_complex(2.4);
            if (sp->pipe.spec.distance_to_branch(z) < 0.25) continue;
            SurfacePoint P{z, std::sqrt(eval_R(sp->pipe.spec, z))};
            SurfacePoint Ps = involution(P);
            const int n = trial - 3;
            const cd a = sp->window.a_at(n);
            const cd am = sp->window.a_at(n - 1);
            const cd b = sp->window.b_at(n);
            const cd phi_n = CoefficientGenerator::phi(P, n, sp->polys);
            const cd phi_nm = CoefficientGenerator::phi(P, n - 1, sp->polys);
            const cd phi_s = CoefficientGenerator::phi(Ps, n, sp->polys);
            // Riccati: a phi(n) + a^- / phi(n-1) = z - b
            CHECK(std::abs(a * phi_n + am / phi_nm - (z - b)) < 1e-9 * (1.0 + std::abs(z)));
            // phi(P) phi(P*) = F(n+1)/F(n)
            const cd F = poly_eval(sp->polys.F_at(n), z);
            const cd Fp = poly_eval(sp->polys.F_at(n + 1), z);
            CHECK(std::abs(phi_n * phi_s - Fp / F) < 1e-9 * (1.0 + std::abs(Fp / F)));
            // phi(P) - phi(P*) = y / (a F)
            CHECK(std::abs(phi_n - phi_s - P.y / (a * F)) < 1e-9 * (1.0 + std::abs(P.y / (a * F))));
            // phi(P) + phi(P*) = -G / (a F)
            const cd G = poly_eval(sp->polys.G_at(n), z);
            CHECK(std::abs(phi_n + phi_s + G / (a * F)) < 1e-9 * (1.0 + std::abs(G / (a * F))));
        }
    }
}

TEST_CASE("Baker-Akhiezer: normalization, eigenfunction property, and product identities") {
    for (Setup* sp : {&genus1_complex(), &genus2_complex()}) {
        auto& gen = *sp->gen;
        for (int trial = 0; trial < 4; ++trial) {
            cd z = random_complex(2.0) + cd(0.3, 0.2);
            if (sp->pipe.spec.distance_to_branch(z) < 0.3) continue;
            SurfacePoint P{z, std::sqrt(eval_R(sp->pipe.spec, z))};
            SurfacePoint Ps = involution(P);
            CHECK(gen.baker_akhiezer(P, 0, sp->window) == cd(1.0));

            // (L - z) psi = 0 at interior sites
            for (int n = -6; n <= 6; n += 3) {
                const cd psi_n = gen.baker_akhiezer(P, n, sp->window);
                const cd psi_p = gen.baker_akhiezer(P, n + 1, sp->window);
                const cd psi_m = gen.baker_akhiezer(P, n - 1, sp->window);
                const cd res = sp->window.a_at(n) * psi_p + sp->window.a_at(n - 1) * psi_m +
                               (sp->window.b_at(n) - z) * psi_n;
                const double scale = std::abs(psi_n) + std::abs(psi_p) + std::abs(psi_m);
                CHECK(std::abs(res) < 1e-8 * (1.0 + scale));
            }

            // psi(P,n) psi(P*,n) = F(n)/F(0)
            for (int n : {-4, 3, 7}) {
                const cd lhs = gen.baker_akhiezer(P, n, sp->window) * gen.baker_akhiezer(Ps, n, sp->window);
                const cd rhs = poly_eval(sp->polys.F_at(n), z) / poly_eval(sp->polys.F_at(0), z);
                CHECK(std::abs(lhs - rhs) < 1e-8 * (1.0 + std::abs(rhs)));
            }

            // Wronskian a(n)[psi(P,n) psi(P*,n+1) - psi(P,n+1) psi(P*,n)] = -y/F(0),
            // independent of n
            const cd F0 = poly_eval(sp->polys.F_at(0), z);
            for (int n : {-3, 2}) {
                const cd w = sp->window.a_at(n) *
                             (gen.baker_akhiezer(P, n, sp->window) * gen.baker_akhiezer(Ps, n + 1, sp->window) -
                              gen.baker_akhiezer(P, n + 1, sp->window) * gen.baker_akhiezer(Ps, n, sp->window));
                CHECK(std::abs(w - (-P.y / F0)) < 1e-8 * (1.0 + std::abs(P.y / F0)));
            }

            // product-sum identity:
            // a(n)[psi(P,n) psi(P*,n+1) + psi(P*,n) psi(P,n+1)] = -G(n)/F(0)
            for (int n : {-2, 4}) {
                const cd v = sp->window.a_at(n) *
                             (gen.baker_akhiezer(P, n, sp->window) * gen.baker_akhiezer(Ps, n + 1, sp->window) +
                              gen.baker_akhiezer(Ps, n, sp->window) * gen.baker_akhiezer(P, n + 1, sp->window));
                const cd rhs = -poly_eval(sp->polys.G_at(n), z) / F0;
                CHECK(std::abs(v - rhs) < 1e-8 * (1.0 + std::abs(rhs)));
            }
            break;  // one well-separated point per curve keeps the suite quick
        }
    }
}

TEST_CASE("psi equals the telescoped product of phi") {
    auto& s = genus1_complex();
    cd z(1.4, 1.1);
    SurfacePoint P{z, std::sqrt(eval_R(s.pipe.spec, z))};
    cd prod = 1.0;
    for (int m = 0; m < 5; ++m) prod *= CoefficientGenerator::phi(P, m, s.polys);
    const cd psi = s.gen->baker_akhiezer(P, 5, s.window);
    CHECK(std::abs(psi - prod) < 1e-8 * (1.0 + std::abs(prod)));
}

TEST_CASE("amplitude calibration matches the regularized third-kind constant (real curves)") {
    auto& s = genus1_selfadjoint();
    const cd at2 = s.gen->amplitude_squared();
    const cd e2 = std::exp(2.0 * s.gen->e3_0());
    CHECK(std::abs(at2 - e2) < 1e-9 * (1.0 + std::abs(e2)));
}
