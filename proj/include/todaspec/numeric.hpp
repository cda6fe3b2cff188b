#pragma once

// Shared numeric utilities: complex polynomial arithmetic, companion-matrix
// root finding, truncated power series, Gauss-Legendre nodes, and the error
// hierarchy used across the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace todaspec {

using cd = std::complex<double>;
using VecC = std::vector<cd>;

inline constexpr double pi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Errors. ValidationError -> bad input (CLI exit 2), NumericalError ->
// computation failed (CLI exit 3).

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : Error {
    using Error::Error;
};
struct NumericalError : Error {
    using Error::Error;
};

#define TODASPEC_ERROR(NAME, BASE)                 \
    struct NAME : BASE {                           \
        explicit NAME(const std::string& msg)      \
            : BASE(std::string(#NAME ": ") + msg) {} \
    }

TODASPEC_ERROR(CutConstructionFailed, NumericalError);
TODASPEC_ERROR(StepTooLarge, NumericalError);
TODASPEC_ERROR(BasisConstructionFailed, NumericalError);
TODASPEC_ERROR(SingularC, NumericalError);
TODASPEC_ERROR(PathInvalid, NumericalError);
TODASPEC_ERROR(PathBlocked, NumericalError);
TODASPEC_ERROR(NotSymplectic, ValidationError);
TODASPEC_ERROR(WindowTooNarrow, ValidationError);
TODASPEC_ERROR(AnchorInconsistent, NumericalError);
TODASPEC_ERROR(NotStationary, NumericalError);
TODASPEC_ERROR(RootFindFailed, NumericalError);
TODASPEC_ERROR(SpecialDivisor, NumericalError);
TODASPEC_ERROR(OnThetaDivisor, NumericalError);
TODASPEC_ERROR(CalibrationDegenerate, NumericalError);
TODASPEC_ERROR(MeanNotConverged, NumericalError);
TODASPEC_ERROR(ArcEscapedBox, NumericalError);
TODASPEC_ERROR(SeedStalled, NumericalError);
TODASPEC_ERROR(ThetaOverflow, NumericalError);
TODASPEC_ERROR(EigenFailed, NumericalError);

#undef TODASPEC_ERROR

// ---------------------------------------------------------------------------
// Polynomials, coefficients in ascending order: p[0] + p[1] z + ...

inline cd poly_eval(const VecC& p, cd z) {
    cd acc = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * z + *it;
    return acc;
}

inline VecC poly_mul(const VecC& f, const VecC& g) {
    if (f.empty() || g.empty()) return {};
    VecC h(f.size() + g.size() - 1, cd(0.0));
    for (std::size_t i = 0; i < f.size(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j) h[i + j] += f[i] * g[j];
    return h;
}

inline VecC poly_add(VecC f, const VecC& g) {
    if (g.size() > f.size()) f.resize(g.size(), cd(0.0));
    for (std::size_t i = 0; i < g.size(); ++i) f[i] += g[i];
    return f;
}

inline VecC poly_scale(VecC f, cd s) {
    for (auto& c : f) c *= s;
    return f;
}

inline VecC poly_from_roots(const VecC& roots) {
    VecC p{cd(1.0)};
    for (cd r : roots) p = poly_mul(p, VecC{-r, cd(1.0)});
    return p;
}

inline VecC poly_derivative(const VecC& p) {
    if (p.size() <= 1) return {cd(0.0)};
    VecC d(p.size() - 1);
    for (std::size_t i = 1; i < p.size(); ++i) d[i - 1] = double(i) * p[i];
    return d;
}

// Roots via the companion matrix. Leading coefficient must dominate; trailing
// degenerate leading terms are stripped first.
inline VecC poly_roots(VecC p) {
    double scale = 0.0;
    for (auto& c : p) scale = std::max(scale, std::abs(c));
    if (scale == 0.0) throw RootFindFailed("zero polynomial");
    while (p.size() > 1 && std::abs(p.back()) < 1e-14 * scale) p.pop_back();
    const std::size_t n = p.size() - 1;
    if (n == 0) return {};
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t i = 0; i + 1 < n; ++i) comp(i + 1, i) = 1.0;
    for (std::size_t i = 0; i < n; ++i) comp(i, n - 1) = -p[i] / p[n];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw RootFindFailed("companion eigensolver failed");
    VecC roots(n);
    for (std::size_t i = 0; i < n; ++i) roots[i] = es.eigenvalues()(static_cast<Eigen::Index>(i));
    std::sort(roots.begin(), roots.end(), [](cd a, cd b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return roots;
}

// Polish a root of p with a few Newton steps (companion output is usually
// ~1e-14 already; this buys the last digits for the trace-formula checks).
inline cd poly_root_polish(const VecC& p, cd z0, int iters = 4) {
    VecC d = poly_derivative(p);
    cd z = z0;
    for (int i = 0; i < iters; ++i) {
        cd fp = poly_eval(d, z);
        if (std::abs(fp) == 0.0) break;
        z -= poly_eval(p, z) / fp;
    }
    return z;
}

// ---------------------------------------------------------------------------
// Truncated power series (coefficients s[0..K]).

inline VecC series_mul(const VecC& a, const VecC& b, std::size_t K) {
    VecC c(K + 1, cd(0.0));
    for (std::size_t i = 0; i <= K && i < a.size(); ++i)
        for (std::size_t j = 0; i + j <= K && j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}

// exp of a series with a[0] = 0, via b' = a' b.
inline VecC series_exp(const VecC& a, std::size_t K) {
    VecC b(K + 1, cd(0.0));
    b[0] = 1.0;
    for (std::size_t n = 1; n <= K; ++n) {
        cd s = 0.0;
        for (std::size_t k = 1; k <= n && k < a.size(); ++k) s += double(k) * a[k] * b[n - k];
        b[n] = s / double(n);
    }
    return b;
}

// Series of prod_m (1 - E_m t)^(+/-1/2) about t = 0.
inline VecC sqrt_product_series(const VecC& E, std::size_t K, double sign_half) {
    VecC log_s(K + 1, cd(0.0));
    for (std::size_t k = 1; k <= K; ++k) {
        cd pk = 0.0;  // power sum
        for (cd e : E) pk += std::pow(e, double(k));
        log_s[k] = -sign_half * 0.5 * pk / double(k);
    }
    return series_exp(log_s, K);
}

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes/weights on [-1,1], computed once per order by Newton
// iteration on P_n.

struct GaussRule {
    std::vector<double> x, w;
};

inline const GaussRule& gauss_legendre(int n) {
    static std::vector<GaussRule> cache(65);
    if (n < 1 || n > 64) throw Error("gauss_legendre: order out of range");
    GaussRule& r = cache[static_cast<std::size_t>(n)];
    if (!r.x.empty()) return r;
    r.x.resize(static_cast<std::size_t>(n));
    r.w.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (x * p1 - p0) / (x * x - 1.0);
        r.x[static_cast<std::size_t>(i)] = x;
        r.w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

// FNV-1a, used for run manifests.
inline std::uint64_t fnv1a(const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace todaspec
