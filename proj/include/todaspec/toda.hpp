#pragma once

// Stationary Toda hierarchy over a finite coefficient window: recursion
// tables f_j, g_j, the spectral polynomials F_p and G_{p+1}, curve recovery
// from the lattice-constant combination G^2 - 4 a^2 F F^+, trace formulas,
// and Dirichlet divisor extraction.
//
// The homogeneous table entries are computed from local operator moments,
//   fhat_j(n) = (H^j)(n,n),   ghat_j(n) = -2 a(n) (H^j)(n+1,n),
// where H is the Jacobi difference expression a S^+ + a^- S^- + b. This
// reproduces the recursion's normal form (no additive constants in the
// homogeneous part) exactly and needs no telescoped summation; the full
// entries follow from the summation-constant convolution
//   f_j = sum_k c_{j-k} fhat_k,   g_j = sum_{k>=1} c_{j-k} ghat_k - c_{j+1},
// with c_0 = 1. Constants beyond the supplied list (c_{p+1}, ...) are taken
// as zero; they cancel in G_{p+1}, in both stationarity residuals, and in
// the recovered curve.

#include "todaspec/curve.hpp"
#include "todaspec/numeric.hpp"

namespace todaspec {

struct CoefficientWindow {
    int n_lo = 0;
    VecC a, b;  // indexed n_lo .. n_lo + size - 1

    static CoefficientWindow create(int n_lo, VecC a, VecC b) {
        if (a.size() != b.size()) throw ValidationError("a and b must have equal length");
        if (a.empty()) throw ValidationError("empty coefficient window");
        for (std::size_t i = 0; i < a.size(); ++i)
            if (std::abs(a[i]) == 0.0)
                throw ValidationError("a(n) = 0 at n = " + std::to_string(n_lo + static_cast<int>(i)));
        return CoefficientWindow{n_lo, std::move(a), std::move(b)};
    }

    int n_hi() const { return n_lo + static_cast<int>(a.size()) - 1; }
    bool contains(int n) const { return n >= n_lo && n <= n_hi(); }
    cd a_at(int n) const {
        if (!contains(n)) throw WindowTooNarrow("a(" + std::to_string(n) + ") outside the window");
        return a[static_cast<std::size_t>(n - n_lo)];
    }
    cd b_at(int n) const {
        if (!contains(n)) throw WindowTooNarrow("b(" + std::to_string(n) + ") outside the window");
        return b[static_cast<std::size_t>(n - n_lo)];
    }
};

struct SummationConstants {
    VecC c;  // c[k-1] = c_k, k = 1..p (c_0 = 1 implicit)

    cd c_at(std::size_t k) const {  // c_k with the conventions above
        if (k == 0) return cd(1.0);
        if (k <= c.size()) return c[k - 1];
        return cd(0.0);
    }
};

// One hierarchy level over a site range [lo, hi].
struct LevelSeq {
    int lo = 0, hi = -1;
    VecC v;

    bool valid(int n) const { return n >= lo && n <= hi; }
    cd at(int n) const {
        if (!valid(n)) throw WindowTooNarrow("site " + std::to_string(n) + " outside level range");
        return v[static_cast<std::size_t>(n - lo)];
    }
};

struct HierarchyTable {
    int p = 0;
    CoefficientWindow window;
    SummationConstants constants;
    std::vector<LevelSeq> f;  // levels 0..p+1
    std::vector<LevelSeq> g;  // levels 0..p+1
};

namespace detail {

// (H^j)(n, n+d) for j = 0..jmax, |d| <= j, as a local stencil around n.
// col[k][j + offset] holds (H^k)(n + offset, n)... we instead propagate the
// vector H^k e_n restricted to offsets -jmax..jmax.
inline std::vector<VecC> local_moment_columns(const CoefficientWindow& w, int n, int jmax) {
    const int width = 2 * jmax + 1;
    std::vector<VecC> cols(static_cast<std::size_t>(jmax) + 1, VecC(static_cast<std::size_t>(width), cd(0.0)));
    cols[0][static_cast<std::size_t>(jmax)] = 1.0;  // e_n
    for (int k = 1; k <= jmax; ++k) {
        const VecC& prev = cols[static_cast<std::size_t>(k - 1)];
        VecC& cur = cols[static_cast<std::size_t>(k)];
        for (int d = -k; d <= k; ++d) {
            const int site = n + d;
            if (!w.contains(site)) continue;
            const std::size_t i = static_cast<std::size_t>(d + jmax);
            cd acc = w.b_at(site) * prev[i];
            if (w.contains(site + 1) && d + 1 <= jmax) acc += w.a_at(site) * prev[i + 1];
            if (w.contains(site - 1) && d - 1 >= -jmax) acc += w.a_at(site - 1) * prev[i - 1];
            cur[i] = acc;
        }
    }
    return cols;
}

}  // namespace detail

// fhat_j(n) = (H^j)(n,n); requires sites n-j..n+j inside the window.
inline cd homogeneous_f(const CoefficientWindow& w, int n, int j) {
    if (n - j < w.n_lo || n + j > w.n_hi())
        throw WindowTooNarrow("fhat_" + std::to_string(j) + " needs " + std::to_string(j) +
                              " neighbor layers at n = " + std::to_string(n));
    auto cols = detail::local_moment_columns(w, n, j);
    return cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)];
}

// ghat_j(n) = -2 a(n) (H^j)(n+1,n); requires sites n+1-j..n+1+j in window.
inline cd homogeneous_g(const CoefficientWindow& w, int n, int j) {
    if (j == 0) return cd(0.0);
    if (n + 1 - j < w.n_lo || n + 1 + j > w.n_hi())
        throw WindowTooNarrow("ghat_" + std::to_string(j) + " needs neighbor layers at n = " +
                              std::to_string(n));
    auto cols = detail::local_moment_columns(w, n + 1, j);
    // (H^j)(n+1, n) = (H^j e_{n+1})(n): the stencil is centered at n+1, offset -1
    return -2.0 * w.a_at(n) * cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(j - 1)];
}

inline HierarchyTable hierarchy(const CoefficientWindow& window, const SummationConstants& constants,
                                int p) {
    if (p < 0) throw ValidationError("negative genus");
    if (constants.c.size() != static_cast<std::size_t>(p))
        throw ValidationError("expected " + std::to_string(p) + " summation constants, got " +
                              std::to_string(constants.c.size()));
    if (window.n_hi() - window.n_lo < 2 * (p + 1))
        throw WindowTooNarrow("window of " + std::to_string(window.n_hi() - window.n_lo + 1) +
                              " sites cannot support hierarchy level " + std::to_string(p + 1));
    HierarchyTable t{p, window, constants, {}, {}};
    t.f.resize(static_cast<std::size_t>(p) + 2);
    t.g.resize(static_cast<std::size_t>(p) + 2);
    for (int j = 0; j <= p + 1; ++j) {
        LevelSeq& fl = t.f[static_cast<std::size_t>(j)];
        fl.lo = window.n_lo + j;
        fl.hi = window.n_hi() - j;
        LevelSeq& gl = t.g[static_cast<std::size_t>(j)];
        gl.lo = j == 0 ? window.n_lo : window.n_lo + j - 1;
        gl.hi = j == 0 ? window.n_hi() : window.n_hi() - j - 1;
        for (int n = fl.lo; n <= fl.hi; ++n) {
            cd acc = 0.0;
            for (int k = 0; k <= j; ++k)
                acc += constants.c_at(static_cast<std::size_t>(j - k)) * homogeneous_f(window, n, k);
            fl.v.push_back(acc);
        }
        for (int n = gl.lo; n <= gl.hi; ++n) {
            cd acc = -constants.c_at(static_cast<std::size_t>(j) + 1);
            for (int k = 1; k <= j; ++k)
                acc += constants.c_at(static_cast<std::size_t>(j - k)) * homogeneous_g(window, n, k);
            gl.v.push_back(acc);
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Spectral polynomials F_p (monic, degree p) and G_{p+1} (leading -1).

struct SpectralPolys {
    int p = 0;
    int lo = 0, hi = -1;          // common valid site range
    std::vector<VecC> F;          // per site, ascending coeffs, degree p
    std::vector<VecC> G;          // per site, ascending coeffs, degree p+1
    CoefficientWindow window;

    const VecC& F_at(int n) const { return F[idx(n)]; }
    const VecC& G_at(int n) const { return G[idx(n)]; }

  private:
    std::size_t idx(int n) const {
        if (n < lo || n > hi) throw WindowTooNarrow("site " + std::to_string(n) + " outside polynomial range");
        return static_cast<std::size_t>(n - lo);
    }
};

inline SpectralPolys build_polys(const HierarchyTable& t) {
    const int p = t.p;
    SpectralPolys sp;
    sp.p = p;
    sp.window = t.window;
    const LevelSeq& fp1 = t.f[static_cast<std::size_t>(p) + 1];
    const LevelSeq& gp = t.g[static_cast<std::size_t>(p)];
    sp.lo = std::max(t.f[static_cast<std::size_t>(p)].lo, std::max(fp1.lo, gp.lo));
    sp.hi = std::min(t.f[static_cast<std::size_t>(p)].hi, std::min(fp1.hi, gp.hi));
    if (sp.lo > sp.hi) throw WindowTooNarrow("window too narrow to assemble spectral polynomials");
    for (int n = sp.lo; n <= sp.hi; ++n) {
        VecC F(static_cast<std::size_t>(p) + 1);
        for (int j = 0; j <= p; ++j) F[static_cast<std::size_t>(j)] = t.f[static_cast<std::size_t>(p - j)].at(n);
        VecC G(static_cast<std::size_t>(p) + 2);
        G[static_cast<std::size_t>(p) + 1] = -1.0;
        for (int j = 0; j <= p; ++j) G[static_cast<std::size_t>(j)] = t.g[static_cast<std::size_t>(p - j)].at(n);
        G[0] += fp1.at(n);
        sp.F.push_back(std::move(F));
        sp.G.push_back(std::move(G));
    }
    return sp;
}

// Sup norms of the two components of the p-th stationary equation,
// (f_{p+1}^+ - f_{p+1}, g_{p+1} - g_{p+1}^-), over the interior sites.
inline std::pair<double, double> stationary_residual(const CoefficientWindow& window,
                                                     const SummationConstants& constants, int p) {
    const HierarchyTable t = hierarchy(window, constants, p);
    const LevelSeq& f = t.f[static_cast<std::size_t>(p) + 1];
    const LevelSeq& g = t.g[static_cast<std::size_t>(p) + 1];
    double rf = 0.0, rg = 0.0;
    for (int n = f.lo; n + 1 <= f.hi; ++n) rf = std::max(rf, std::abs(f.at(n + 1) - f.at(n)));
    for (int n = g.lo + 1; n <= g.hi; ++n) rg = std::max(rg, std::abs(g.at(n) - g.at(n - 1)));
    return {rf, rg};
}

// Summation constants determined by the curve: coefficients of the expansion
// prod_m (1 - E_m t)^{1/2} = sum_k c_k t^k, written as the closed multinomial
// sum over compositions (symmetric functions of E).
inline SummationConstants ck_from_E(const CurveSpec& spec) {
    const int p = spec.genus;
    SummationConstants out;
    if (p == 0) return out;
    // per-factor series coefficients s_j = -(2j)! / (4^j (j!)^2 (2j-1)), s_0 = 1
    std::vector<double> s(static_cast<std::size_t>(p) + 1);
    s[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        double num = 1.0, den = 1.0;
        for (int i = 1; i <= 2 * j; ++i) num *= i;                  // (2j)!
        for (int i = 1; i <= j; ++i) den *= i;                      // j!
        s[static_cast<std::size_t>(j)] =
            -num / (std::pow(4.0, j) * den * den * (2.0 * j - 1.0));
    }
    out.c.assign(static_cast<std::size_t>(p), cd(0.0));
    // recursive enumeration of compositions j_0 + ... + j_{2p+1} = k
    const std::size_t m_count = spec.count();
    std::vector<int> comp(m_count, 0);
    auto recurse = [&](auto&& self, std::size_t m, int remaining, cd prod) -> void {
        if (m == m_count) {
            if (remaining == 0) {
                // prod already carries s_{j_m} E_m^{j_m} for all m; accumulate at k
                int k = 0;
                for (int j : comp) k += j;
                out.c[static_cast<std::size_t>(k - 1)] += prod;
            }
            return;
        }
        for (int j = 0; j <= remaining; ++j) {
            comp[m] = j;
            cd factor = s[static_cast<std::size_t>(j)] * std::pow(spec.branch_points[m], double(j));
            self(self, m + 1, remaining - j, prod * factor);
        }
        comp[m] = 0;
    };
    for (int k = 1; k <= p; ++k) recurse(recurse, 0, k, cd(1.0));
    return out;
}

// ---------------------------------------------------------------------------
// Curve recovery: R(z) = G_{p+1}(z,n)^2 - 4 a(n)^2 F_p(z,n) F_p(z,n+1).

struct RecoveredCurve {
    VecC coeffs;            // ascending, degree 2p+2, leading 1
    VecC roots;             // the recovered branch points
    double max_deviation;   // max cross-site relative coefficient deviation
};

inline VecC curve_poly_at(const SpectralPolys& sp, int n) {
    const cd a = sp.window.a_at(n);
    VecC R = poly_mul(sp.G_at(n), sp.G_at(n));
    VecC ff = poly_scale(poly_mul(sp.F_at(n), sp.F_at(n + 1)), -4.0 * a * a);
    return poly_add(std::move(R), ff);
}

inline RecoveredCurve recover_curve(const SpectralPolys& sp, double tol_alg = 1e-8) {
    if (sp.lo + 1 > sp.hi) throw WindowTooNarrow("need two adjacent sites to recover the curve");
    int n_ref = sp.lo + (sp.hi - sp.lo) / 2;
    if (n_ref + 1 > sp.hi) n_ref = sp.hi - 1;
    VecC R_ref = curve_poly_at(sp, n_ref);
    double scale = 0.0;
    for (cd c : R_ref) scale = std::max(scale, std::abs(c));
    double dev = 0.0;
    for (int n = sp.lo; n + 1 <= sp.hi; ++n) {
        VecC R_n = curve_poly_at(sp, n);
        for (std::size_t i = 0; i < R_ref.size(); ++i)
            dev = std::max(dev, std::abs(R_n[i] - R_ref[i]) / scale);
    }
    if (dev > tol_alg)
        throw NotStationary("R(z) varies across sites by relative " + std::to_string(dev));
    RecoveredCurve rc;
    rc.coeffs = std::move(R_ref);
    rc.roots = poly_roots(rc.coeffs);
    for (auto& r : rc.roots) r = poly_root_polish(rc.coeffs, r);
    rc.max_deviation = dev;
    return rc;
}

// ---------------------------------------------------------------------------
// Dirichlet divisor at a site: zeros of F_p(.,n) lifted to the curve.

struct DirichletData {
    VecC mu;      // zeros of F_p(.,n)
    VecC y_hat;   // lifts -G_{p+1}(mu_j, n)
    double lift_residual;  // max |R(mu_j) - G(mu_j)^2| / scale
};

inline DirichletData dirichlet(const SpectralPolys& sp, int n, const VecC& curve_coeffs = {}) {
    DirichletData d;
    d.mu = poly_roots(sp.F_at(n));
    for (auto& r : d.mu) r = poly_root_polish(sp.F_at(n), r);
    d.lift_residual = 0.0;
    for (cd m : d.mu) {
        const cd G = poly_eval(sp.G_at(n), m);
        d.y_hat.push_back(-G);
        if (!curve_coeffs.empty()) {
            const cd R = poly_eval(curve_coeffs, m);
            double scale = 1.0 + std::abs(R) + std::abs(G * G);
            d.lift_residual = std::max(d.lift_residual, std::abs(R - G * G) / scale);
        }
    }
    return d;
}

// Trace formula b(n) = (1/2) sum_m E_m - sum_j mu_j(n).
inline cd trace_b(const CurveSpec& spec, const VecC& mu) {
    cd s = 0.0;
    for (cd e : spec.branch_points) s += e;
    s *= 0.5;
    for (cd m : mu) s -= m;
    return s;
}

// b^{(k)}(n) = (1/2) sum_m E_m^k - sum_j mu_j(n)^k.
inline cd trace_b_moment(const CurveSpec& spec, const VecC& mu, int k) {
    cd s = 0.0;
    for (cd e : spec.branch_points) s += std::pow(e, double(k));
    s *= 0.5;
    for (cd m : mu) s -= std::pow(m, double(k));
    return s;
}

// Trace formula for a(n)^2; requires pairwise distinct mu_j. y_hat are the
// divisor lifts (the values of y at the Dirichlet points).
inline cd trace_a_squared(const CurveSpec& spec, const VecC& mu, const VecC& y_hat) {
    const std::size_t p = mu.size();
    double scale = 1.0 + spec.max_abs();
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = j + 1; k < p; ++k)
            if (std::abs(mu[j] - mu[k]) < 1e-6 * scale)
                throw CalibrationDegenerate("Dirichlet eigenvalues coincide: mu_" + std::to_string(j) +
                                            " ~ mu_" + std::to_string(k));
    cd sum = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        cd prod = 1.0;
        for (std::size_t k = 0; k < p; ++k)
            if (k != j) prod *= (mu[j] - mu[k]);
        sum += y_hat[j] / prod;
    }
    const cd b1 = trace_b(spec, mu);
    const cd b2 = trace_b_moment(spec, mu, 2);
    return 0.5 * sum + 0.25 * (b2 - b1 * b1);
}

}  // namespace todaspec
