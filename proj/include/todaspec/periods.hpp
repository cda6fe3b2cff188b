#pragma once

// Homology basis and Abelian-integral data for the hyperelliptic curve:
// a-cycles as ellipses around single cuts, b-cycles as ellipses through a
// cut pair, unnormalized/normalized period matrices, the normalized
// third-kind differential with poles at the two points at infinity, Abel
// maps (with series tails at infinity), Riemann constants, and symplectic
// changes of basis.
//
// Orientation bookkeeping: intersection numbers are never computed; instead
// the certificate (tau symmetric, Im tau positive definite) is enforced, and
// per-cycle orientation flips are applied when a sign assignment repairs it.
//
// Sheet convention: the branch with y ~ +z^{p+1} in the cut plane is the
// anchor sheet; the point at infinity reached on the OPPOSITE sheet
// (y ~ -z^{p+1}) carries the +1 residue of the third-kind differential and
// the +log local behavior, and is the one all "infinity_plus" integrals
// refer to.

#include <map>
#include <optional>

#include "todaspec/paths.hpp"
#include "todaspec/quadrature.hpp"

namespace todaspec {

struct EllipseCycle {
    cd center;
    cd dir;  // unit complex, major axis direction
    double alpha = 1.0, beta = 0.5;
    int orientation = +1;
    SurfacePoint start;  // anchored value at t = 0

    cd at(double t) const {
        const double ot = orientation * t;
        return center + dir * cd(alpha * std::cos(ot), beta * std::sin(ot));
    }
    cd deriv(double t) const {
        const double ot = orientation * t;
        return dir * cd(-alpha * std::sin(ot), beta * std::cos(ot)) * double(orientation);
    }
    // point-inside test via the focal sum
    bool encloses(cd q, double margin = 1.0) const {
        const double c = std::sqrt(std::max(alpha * alpha - beta * beta, 0.0));
        const cd f1 = center + dir * c, f2 = center - dir * c;
        return std::abs(q - f1) + std::abs(q - f2) < 2.0 * alpha * margin;
    }
};

struct HomologyBasis {
    int p = 0;
    std::vector<EllipseCycle> a_cycles, b_cycles;  // p each
    std::vector<std::size_t> cut_order;            // canonical cut order; cut_order[p] = shared cut
    int q0_index = 0;                              // base branch point (default E_0)
};

struct SymplecticTransform {
    Eigen::MatrixXi A, B, C, D;

    int genus() const { return static_cast<int>(A.rows()); }

    static SymplecticTransform identity(int p) {
        SymplecticTransform x;
        x.A = x.D = Eigen::MatrixXi::Identity(p, p);
        x.B = x.C = Eigen::MatrixXi::Zero(p, p);
        return x;
    }

    Eigen::MatrixXd stacked() const {
        const int p = genus();
        Eigen::MatrixXd X(2 * p, 2 * p);
        X.topLeftCorner(p, p) = A.cast<double>();
        X.topRightCorner(p, p) = B.cast<double>();
        X.bottomLeftCorner(p, p) = C.cast<double>();
        X.bottomRightCorner(p, p) = D.cast<double>();
        return X;
    }

    void validate() const {
        const int p = genus();
        if (B.rows() != p || C.rows() != p || D.rows() != p)
            throw NotSymplectic("block sizes disagree");
        Eigen::MatrixXd X = stacked();
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * p, 2 * p);
        J.topRightCorner(p, p) = Eigen::MatrixXd::Identity(p, p);
        J.bottomLeftCorner(p, p) = -Eigen::MatrixXd::Identity(p, p);
        if ((X * J * X.transpose() - J).cwiseAbs().maxCoeff() > 1e-9)
            throw NotSymplectic("X J X^T != J");
        if (std::abs(X.determinant() - 1.0) > 1e-6) throw NotSymplectic("det X != 1");
    }
};

struct PeriodData {
    int p = 0;
    Eigen::MatrixXcd C;         // C_{j,k} = loop_{a_k} z^{j-1} dz / y
    Eigen::MatrixXcd c_rows;    // C^{-1}; row j holds the weights of omega_j
    Eigen::MatrixXcd tau;       // tau_{j,l} = loop_{b_j} omega_l
    Eigen::MatrixXcd eta_a, eta_b;  // raw periods of z^i dz/y, i = 0..p (rows) over cycles (cols)
    VecC third_kind_coeffs;     // q_0..q_{p-1}; numerator z^p + sum q_i z^i
    VecC lambda;                // roots of the numerator
    Eigen::VectorXcd U0_3;      // (1/2 pi i) b-periods of the third-kind differential
    Eigen::VectorXcd third_a, third_b;  // raw third-kind periods over cycles
    Eigen::VectorXcd xi;        // Riemann constants (empty until computed)
    cd e3_0 = 0.0;              // regularized third-kind integral constant at infinity_plus

    double tau_asymmetry() const {
        return p == 0 ? 0.0 : (tau - tau.transpose()).cwiseAbs().maxCoeff();
    }
    double im_tau_lambda_min() const {
        if (p == 0) return 1.0;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tau.imag());
        return es.eigenvalues().minCoeff();
    }

    // Reduce v modulo the period lattice Z^p + tau Z^p.
    Eigen::VectorXcd reduce_mod_lattice(const Eigen::VectorXcd& v) const {
        if (p == 0) return v;
        Eigen::MatrixXd im_inv = tau.imag().inverse();
        Eigen::VectorXd n = im_inv * v.imag();
        Eigen::VectorXcd out = v;
        Eigen::VectorXd nr(p);
        for (int j = 0; j < p; ++j) nr(j) = std::round(n(j));
        for (int j = 0; j < p; ++j)
            for (int k = 0; k < p; ++k) out(j) -= nr(k) * tau(k, j);
        for (int j = 0; j < p; ++j) out(j) -= std::round(out(j).real());
        return out;
    }
};

// ---------------------------------------------------------------------------
// Basis construction.

namespace detail {

inline EllipseCycle make_focal_ellipse(cd f1, cd f2, double two_alpha) {
    EllipseCycle e;
    e.center = 0.5 * (f1 + f2);
    const cd d = f2 - f1;
    e.dir = std::abs(d) > 0 ? d / std::abs(d) : cd(1.0);
    e.alpha = 0.5 * two_alpha;
    const double c = 0.5 * std::abs(d);
    e.beta = std::sqrt(std::max(e.alpha * e.alpha - c * c, 1e-30));
    return e;
}

// Largest admissible focal sum for an ellipse with foci (f1,f2) that keeps
// every other branch point strictly outside.
inline double max_focal_sum(const CurveSpec& spec, cd f1, cd f2, int skip1, int skip2) {
    double lim = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < spec.count(); ++m) {
        if (static_cast<int>(m) == skip1 || static_cast<int>(m) == skip2) continue;
        lim = std::min(lim, std::abs(spec.branch_points[m] - f1) + std::abs(spec.branch_points[m] - f2));
    }
    return lim;
}

// Proper boundary crossing: one boundary has sampled points on both sides of
// the other. Nested or disjoint pairs return false.
inline bool ellipses_cross(const EllipseCycle& e1, const EllipseCycle& e2) {
    bool in2 = false, out2 = false, in1 = false, out1 = false;
    for (int k = 0; k < 192; ++k) {
        const double t = 2.0 * pi * k / 192;
        (e2.encloses(e1.at(t)) ? in2 : out2) = true;
        (e1.encloses(e2.at(t)) ? in1 : out1) = true;
    }
    return (in2 && out2) || (in1 && out1);
}

}  // namespace detail

// Cycle realization, with cuts in canonical (midpoint-lexicographic) order
// kappa_1 .. kappa_{p+1}:
//   a_j: ellipse around the adjacent endpoint pair of kappa_j and kappa_{j+1}
//        (for real ordered curves this is an oval around the j-th spectral
//        gap; it makes the third-kind normalization match the spectral one,
//        e.g. lambda = 0 and real U0_3 on symmetric self-adjoint curves);
//   b_j: ellipse enclosing all endpoints of kappa_1 .. kappa_j (nested
//        family), which intersects a_j once and no other basis cycle.
// Q0 defaults to E_0.
inline HomologyBasis build_basis(const CurveSpec& spec, const CutSystem& cuts) {
    validate_cuts(spec, cuts);
    const int p = spec.genus;
    HomologyBasis basis;
    basis.p = p;
    basis.q0_index = 0;
    basis.cut_order.resize(cuts.pairs.size());
    for (std::size_t j = 0; j < cuts.pairs.size(); ++j) basis.cut_order[j] = j;
    std::sort(basis.cut_order.begin(), basis.cut_order.end(), [&](std::size_t i, std::size_t j) {
        const cd mi = cuts.midpoint(spec, i), mj = cuts.midpoint(spec, j);
        if (mi.real() != mj.real()) return mi.real() < mj.real();
        return mi.imag() < mj.imag();
    });
    if (p == 0) return basis;

    const auto bp = [&](int idx) { return spec.branch_points[static_cast<std::size_t>(idx)]; };
    const auto cut_at = [&](int j) { return cuts.pairs[basis.cut_order[static_cast<std::size_t>(j)]]; };

    // a-cycles around adjacent endpoint pairs
    for (int j = 0; j < p; ++j) {
        const auto [u1, u2] = cut_at(j);
        const auto [v1, v2] = cut_at(j + 1);
        const cd mid_next = cuts.midpoint(spec, basis.cut_order[static_cast<std::size_t>(j) + 1]);
        const cd mid_this = cuts.midpoint(spec, basis.cut_order[static_cast<std::size_t>(j)]);
        const int iu = std::abs(bp(u1) - mid_next) <= std::abs(bp(u2) - mid_next) ? u1 : u2;
        const int iv = std::abs(bp(v1) - mid_this) <= std::abs(bp(v2) - mid_this) ? v1 : v2;
        const cd f1 = bp(iu), f2 = bp(iv);
        const double d = std::abs(f2 - f1);
        const double lim = detail::max_focal_sum(spec, f1, f2, iu, iv);
        const double two_alpha = std::min(1.2 * d, lim / 1.05);
        if (two_alpha <= d * (1.0 + 1e-3))
            throw BasisConstructionFailed("cannot inflate a-cycle " + std::to_string(j + 1) +
                                          " without trapping another branch point");
        basis.a_cycles.push_back(detail::make_focal_ellipse(f1, f2, two_alpha));
    }
    // shrink until pairwise disjoint
    for (int pass = 0; pass < 24; ++pass) {
        bool crossing = false;
        for (int i = 0; i < p && !crossing; ++i)
            for (int j = i + 1; j < p && !crossing; ++j)
                if (detail::ellipses_cross(basis.a_cycles[static_cast<std::size_t>(i)],
                                           basis.a_cycles[static_cast<std::size_t>(j)]))
                    crossing = true;
        if (!crossing) break;
        if (pass == 23) throw BasisConstructionFailed("a-cycles cannot be made pairwise disjoint");
        for (auto& e : basis.a_cycles) {
            const double c = std::sqrt(std::max(e.alpha * e.alpha - e.beta * e.beta, 0.0));
            e.alpha = c + (e.alpha - c) * 0.8;
            e.beta = std::sqrt(std::max(e.alpha * e.alpha - c * c, 1e-30));
        }
    }

    // b-cycles: nested ellipses around the growing cut clusters
    std::vector<cd> b_f1(static_cast<std::size_t>(p)), b_f2(static_cast<std::size_t>(p));
    std::vector<double> b_need(static_cast<std::size_t>(p)), b_lim(static_cast<std::size_t>(p)),
        b_sum(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) {
        std::vector<int> cluster;
        for (int k = 0; k <= j; ++k) {
            cluster.push_back(cut_at(k).first);
            cluster.push_back(cut_at(k).second);
        }
        // foci: the widest pair in the cluster
        int fa = cluster[0], fb = cluster[1];
        double dmax = 0.0;
        for (std::size_t x = 0; x < cluster.size(); ++x)
            for (std::size_t y = x + 1; y < cluster.size(); ++y) {
                const double d = std::abs(bp(cluster[x]) - bp(cluster[y]));
                if (d > dmax) {
                    dmax = d;
                    fa = cluster[x];
                    fb = cluster[y];
                }
            }
        const cd f1 = bp(fa), f2 = bp(fb);
        double need = std::abs(f1 - f2) * (1.0 + 1e-3);
        for (int q : cluster) need = std::max(need, (std::abs(bp(q) - f1) + std::abs(bp(q) - f2)) * 1.02);
        double lim = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < spec.count(); ++m) {
            if (std::find(cluster.begin(), cluster.end(), static_cast<int>(m)) != cluster.end()) continue;
            lim = std::min(lim, std::abs(spec.branch_points[m] - f1) + std::abs(spec.branch_points[m] - f2));
        }
        lim /= 1.02;
        if (!(lim > need))
            throw BasisConstructionFailed("b-cycle cluster " + std::to_string(j + 1) +
                                          " cannot be separated from the remaining branch points");
        b_f1[static_cast<std::size_t>(j)] = f1;
        b_f2[static_cast<std::size_t>(j)] = f2;
        b_need[static_cast<std::size_t>(j)] = need;
        b_lim[static_cast<std::size_t>(j)] = lim;
        b_sum[static_cast<std::size_t>(j)] = std::sqrt(need * lim);  // balanced clearance
    }
    auto rebuild_b = [&]() {
        basis.b_cycles.clear();
        for (int j = 0; j < p; ++j)
            basis.b_cycles.push_back(detail::make_focal_ellipse(
                b_f1[static_cast<std::size_t>(j)], b_f2[static_cast<std::size_t>(j)],
                b_sum[static_cast<std::size_t>(j)]));
    };
    rebuild_b();
    // nesting / disjointness repair: shrink inner or grow outer members within
    // their [need, lim] ranges; a_k crossings handled analogously (grow to
    // swallow inner a-cycles, shrink away from outer ones)
    for (int pass = 0; pass < 64; ++pass) {
        bool bad = false;
        for (int j = 0; j < p && !bad; ++j) {
            const auto sj = static_cast<std::size_t>(j);
            for (int k = j + 1; k < p && !bad; ++k) {
                const auto sk = static_cast<std::size_t>(k);
                if (detail::ellipses_cross(basis.b_cycles[sj], basis.b_cycles[sk])) {
                    bad = true;
                    bool fixed = false;
                    if (b_sum[sj] * 0.93 >= b_need[sj]) b_sum[sj] *= 0.93, fixed = true;
                    if (b_sum[sk] * 1.05 <= b_lim[sk]) b_sum[sk] *= 1.05, fixed = true;
                    if (!fixed)
                        throw BasisConstructionFailed("b-cycles " + std::to_string(j + 1) + "," +
                                                      std::to_string(k + 1) + " cannot be nested");
                }
            }
            for (int k = 0; k < p && !bad; ++k) {
                if (k == j) continue;  // b_j must cross a_j; all others are foreign
                const auto sk = static_cast<std::size_t>(k);
                if (detail::ellipses_cross(basis.b_cycles[sj], basis.a_cycles[sk])) {
                    bad = true;
                    bool fixed = false;
                    if (k < j) {  // inner a-cycle: enlarge b_j to contain it
                        if (b_sum[sj] * 1.05 <= b_lim[sj]) b_sum[sj] *= 1.05, fixed = true;
                    } else {  // outer a-cycle: pull b_j away from it
                        if (b_sum[sj] * 0.93 >= b_need[sj]) b_sum[sj] *= 0.93, fixed = true;
                    }
                    if (!fixed)
                        throw BasisConstructionFailed("b-cycle " + std::to_string(j + 1) +
                                                      " cannot avoid a-cycle " + std::to_string(k + 1));
                }
            }
        }
        if (!bad) break;
        if (pass == 63)
            throw BasisConstructionFailed("b-cycle nesting repair did not converge");
        rebuild_b();
    }

    // anchor the t = 0 sheet of every cycle by continuation from the far anchor
    const SurfacePoint anchor = anchor_point(spec);
    PathPlanner planner = PathPlanner::for_curve(spec);
    auto anchor_cycle = [&](EllipseCycle& e) {
        const cd z0 = e.at(0.0);
        VecC poly = planner.plan(anchor.z, z0);
        SurfacePath path{poly, anchor};
        e.start = continue_y(spec, path);
    };
    for (auto& e : basis.a_cycles) anchor_cycle(e);
    for (auto& e : basis.b_cycles) anchor_cycle(e);
    return basis;
}

// ---------------------------------------------------------------------------
// Period computation with the certificate repair.

namespace detail {

inline Eigen::MatrixXcd cycle_power_periods(const CurveSpec& spec, const std::vector<EllipseCycle>& cycles,
                                            int pmax, double tol) {
    Eigen::MatrixXcd out(pmax + 1, static_cast<Eigen::Index>(cycles.size()));
    for (std::size_t k = 0; k < cycles.size(); ++k) {
        const EllipseCycle& e = cycles[k];
        LoopCurve loop{[&](double t) { return e.at(t); }, [&](double t) { return e.deriv(t); }, e.start};
        auto f = [&](cd z, cd y) {
            Eigen::VectorXcd v(pmax + 1);
            cd zp = 1.0;
            for (int i = 0; i <= pmax; ++i) {
                v(i) = zp / y;
                zp *= z;
            }
            return v;
        };
        out.col(static_cast<Eigen::Index>(k)) = integrate_loop_tracked(spec, loop, f, tol);
    }
    return out;
}

inline Eigen::MatrixXcd tau_from_raw(const Eigen::MatrixXcd& c_rows, const Eigen::MatrixXcd& eta_b) {
    const int p = static_cast<int>(c_rows.rows());
    Eigen::MatrixXcd tau(p, p);
    for (int j = 0; j < p; ++j)
        for (int l = 0; l < p; ++l) {
            cd acc = 0.0;
            for (int m = 0; m < p; ++m) acc += c_rows(l, m) * eta_b(m, j);
            tau(j, l) = acc;
        }
    return tau;
}

}  // namespace detail

// Computes C, c_rows, tau and the raw power periods; flips per-cycle
// orientations when a sign assignment makes tau symmetric with Im tau > 0.
inline PeriodData compute_periods(const CurveSpec& spec, HomologyBasis& basis, double tol_quad = 1e-12,
                                  double tol_period = 1e-10) {
    const int p = spec.genus;
    PeriodData data;
    data.p = p;
    if (p == 0) return data;

    Eigen::MatrixXcd eta_a = detail::cycle_power_periods(spec, basis.a_cycles, p, tol_quad);
    Eigen::MatrixXcd eta_b = detail::cycle_power_periods(spec, basis.b_cycles, p, tol_quad);

    auto assemble = [&](const Eigen::MatrixXcd& ea, const Eigen::MatrixXcd& eb, PeriodData& d) {
        d.C = ea.topRows(p);
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(d.C);
        const double cond = svd.singularValues()(0) / svd.singularValues()(p - 1);
        if (!(cond < 1e12)) throw SingularC("unnormalized period matrix condition " + std::to_string(cond));
        d.c_rows = d.C.inverse();
        d.tau = detail::tau_from_raw(d.c_rows, eb.topRows(p));
    };

    PeriodData trial;
    trial.p = p;
    assemble(eta_a, eta_b, trial);

    // sign repair: tau -> diag(s) tau diag(t) from flipping b_j (s) and a_k (t)
    const double scale = 1.0 + trial.tau.cwiseAbs().maxCoeff();
    std::optional<std::pair<int, int>> found;
    for (int smask = 0; smask < (1 << p) && !found; ++smask)
        for (int tmask = 0; tmask < (1 << p) && !found; ++tmask) {
            Eigen::MatrixXcd t2 = trial.tau;
            for (int j = 0; j < p; ++j)
                for (int l = 0; l < p; ++l) {
                    const double sj = (smask >> j) & 1 ? -1.0 : 1.0;
                    const double tl = (tmask >> l) & 1 ? -1.0 : 1.0;
                    t2(j, l) = sj * tl * trial.tau(j, l);
                }
            if ((t2 - t2.transpose()).cwiseAbs().maxCoeff() > 1e3 * tol_period * scale) continue;
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t2.imag());
            if (es.eigenvalues().minCoeff() <= 0.0) continue;
            found = {smask, tmask};
        }
    if (!found)
        throw BasisConstructionFailed(
            "no orientation assignment yields a symmetric tau with Im tau > 0 (asymmetry " +
            std::to_string(trial.tau_asymmetry()) + ")");
    const auto [smask, tmask] = *found;
    for (int j = 0; j < p; ++j) {
        if ((smask >> j) & 1) {
            basis.b_cycles[static_cast<std::size_t>(j)].orientation *= -1;
            eta_b.col(j) = -eta_b.col(j);
        }
        if ((tmask >> j) & 1) {
            basis.a_cycles[static_cast<std::size_t>(j)].orientation *= -1;
            eta_a.col(j) = -eta_a.col(j);
        }
    }
    assemble(eta_a, eta_b, data);
    data.eta_a = eta_a;
    data.eta_b = eta_b;

    if (data.tau_asymmetry() > tol_period * scale)
        throw BasisConstructionFailed("tau asymmetry " + std::to_string(data.tau_asymmetry()) +
                                      " exceeds tolerance after repair");
    if (data.im_tau_lambda_min() <= 0.0)
        throw BasisConstructionFailed("Im tau is not positive definite after repair");
    return data;
}

// Third-kind differential (z^p + q_{p-1} z^{p-1} + ... + q_0) dz / y with
// vanishing a-periods; lambda are the roots of the numerator, U0_3 the
// b-period vector over 2 pi i.
inline void third_kind(const CurveSpec& spec, const HomologyBasis&, PeriodData& data) {
    const int p = data.p;
    if (p == 0) {
        data.third_kind_coeffs.clear();
        data.lambda.clear();
        data.U0_3.resize(0);
        data.third_a.resize(0);
        data.third_b.resize(0);
        return;
    }
    Eigen::MatrixXcd M(p, p);
    Eigen::VectorXcd rhs(p);
    for (int k = 0; k < p; ++k) {
        for (int i = 0; i < p; ++i) M(k, i) = data.eta_a(i, k);
        rhs(k) = -data.eta_a(p, k);
    }
    Eigen::VectorXcd q = M.partialPivLu().solve(rhs);
    data.third_kind_coeffs.assign(q.data(), q.data() + p);
    VecC numer = data.third_kind_coeffs;
    numer.push_back(cd(1.0));
    data.lambda = poly_roots(numer);
    for (auto& r : data.lambda) r = poly_root_polish(numer, r);

    data.third_a.resize(p);
    data.third_b.resize(p);
    data.U0_3.resize(p);
    for (int k = 0; k < p; ++k) {
        cd a_per = data.eta_a(p, k), b_per = data.eta_b(p, k);
        for (int i = 0; i < p; ++i) {
            a_per += q(i) * data.eta_a(i, k);
            b_per += q(i) * data.eta_b(i, k);
        }
        data.third_a(k) = a_per;  // ~ 0 by construction
        data.third_b(k) = b_per;
        data.U0_3(k) = b_per / (2.0 * pi * cd(0, 1));
    }
}

// ---------------------------------------------------------------------------
// Symplectic change of homology basis.

inline PeriodData apply_symplectic(const PeriodData& data, const SymplecticTransform& X) {
    X.validate();
    const int p = data.p;
    if (X.genus() != p) throw NotSymplectic("genus mismatch");
    PeriodData out;
    out.p = p;
    if (p == 0) return out;

    const Eigen::MatrixXcd A = X.A.cast<double>().cast<cd>(), B = X.B.cast<double>().cast<cd>();
    const Eigen::MatrixXcd Cb = X.C.cast<double>().cast<cd>(), D = X.D.cast<double>().cast<cd>();

    out.tau = (Cb + D * data.tau) * (A + B * data.tau).inverse();
    out.eta_a = data.eta_a * A.transpose() + data.eta_b * B.transpose();
    out.eta_b = data.eta_a * Cb.transpose() + data.eta_b * D.transpose();
    out.C = out.eta_a.topRows(p);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(out.C);
    if (!(svd.singularValues()(0) / svd.singularValues()(p - 1) < 1e12))
        throw SingularC("transformed period matrix is numerically singular");
    out.c_rows = out.C.inverse();

    // third-kind differential: transform raw periods, then restore the
    // a'-period normalization by subtracting sum_j alpha_j omega'_j.
    Eigen::VectorXcd A3 = A * data.third_a + B * data.third_b;
    Eigen::VectorXcd B3 = Cb * data.third_a + D * data.third_b;
    Eigen::VectorXcd alpha = A3;
    out.third_a = A3 - alpha;  // zero
    out.third_b = B3 - out.tau * alpha;
    out.U0_3 = out.third_b / (2.0 * pi * cd(0, 1));
    // numerator polynomial of the renormalized differential
    VecC numer(static_cast<std::size_t>(p) + 1, cd(0.0));
    numer[static_cast<std::size_t>(p)] = 1.0;
    for (std::size_t i = 0; i < data.third_kind_coeffs.size(); ++i) numer[i] = data.third_kind_coeffs[i];
    for (int j = 0; j < p; ++j)
        for (int m = 0; m < p; ++m) numer[static_cast<std::size_t>(m)] -= alpha(j) * out.c_rows(j, m);
    numer.pop_back();
    out.third_kind_coeffs = numer;
    numer.push_back(cd(1.0));
    out.lambda = poly_roots(numer);
    // Riemann constants are basis-specific; left empty for the transformed data.
    return out;
}

// Best-effort search for a basis change making Im U0_3 vanish. Returns the
// transform achieving the smallest max-norm; `achieved` reports that norm.
inline std::optional<SymplecticTransform> find_real_basis(const PeriodData& data, int bound,
                                                          double tol_realB = 1e-9,
                                                          double* achieved = nullptr,
                                                          SymplecticTransform* best_out = nullptr) {
    const int p = data.p;
    if (p == 0) {
        if (achieved) *achieved = 0.0;
        return SymplecticTransform::identity(0);
    }
    auto im_norm = [&](const SymplecticTransform& X) {
        try {
            PeriodData d = apply_symplectic(data, X);
            if (d.im_tau_lambda_min() <= 0.0) return std::numeric_limits<double>::infinity();
            return d.U0_3.imag().cwiseAbs().maxCoeff();
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    SymplecticTransform best = SymplecticTransform::identity(p);
    double best_norm = im_norm(best);

    if (p == 1) {
        for (int a = -bound; a <= bound; ++a)
            for (int b = -bound; b <= bound; ++b)
                for (int c = -bound; c <= bound; ++c)
                    for (int d = -bound; d <= bound; ++d) {
                        if (a * d - b * c != 1) continue;
                        SymplecticTransform X;
                        X.A.resize(1, 1);
                        X.B.resize(1, 1);
                        X.C.resize(1, 1);
                        X.D.resize(1, 1);
                        X.A(0, 0) = a;
                        X.B(0, 0) = b;
                        X.C(0, 0) = c;
                        X.D(0, 0) = d;
                        const double v = im_norm(X);
                        if (v < best_norm) {
                            best_norm = v;
                            best = X;
                        }
                    }
    } else if (bound > 0) {
        // generator catalog: tau shifts by symmetric integer matrices and the inversion
        std::vector<SymplecticTransform> gens;
        std::vector<Eigen::MatrixXi> shifts;
        Eigen::MatrixXi S = Eigen::MatrixXi::Zero(p, p);
        // enumerate symmetric integer matrices entrywise over the upper triangle
        std::function<void(int, int)> fill2 = [&](int r, int c) {
            if (r == p) {
                shifts.push_back(S);
                return;
            }
            int nr = r, nc = c + 1;
            if (nc == p) {
                nr = r + 1;
                nc = nr;
            }
            for (int v = -bound; v <= bound; ++v) {
                S(r, c) = v;
                S(c, r) = v;
                fill2(nr, nc);
            }
            S(r, c) = 0;
            S(c, r) = 0;
        };
        fill2(0, 0);
        for (const auto& sh : shifts) {
            SymplecticTransform X = SymplecticTransform::identity(p);
            X.C = sh;
            gens.push_back(X);  // [[I,0],[S,I]]
            SymplecticTransform Y = SymplecticTransform::identity(p);
            Y.B = sh;
            gens.push_back(Y);  // [[I,S],[0,I]]
        }
        SymplecticTransform Jx;
        Jx.A = Jx.D = Eigen::MatrixXi::Zero(p, p);
        Jx.B = Eigen::MatrixXi::Identity(p, p);
        Jx.C = -Eigen::MatrixXi::Identity(p, p);
        gens.push_back(Jx);
        auto compose = [&](const SymplecticTransform& X1, const SymplecticTransform& X2) {
            // stacked product X1 * X2
            Eigen::MatrixXi A = X1.A * X2.A + X1.B * X2.C;
            Eigen::MatrixXi B = X1.A * X2.B + X1.B * X2.D;
            Eigen::MatrixXi Cc = X1.C * X2.A + X1.D * X2.C;
            Eigen::MatrixXi D = X1.C * X2.B + X1.D * X2.D;
            SymplecticTransform out;
            out.A = A;
            out.B = B;
            out.C = Cc;
            out.D = D;
            return out;
        };
        for (const auto& g1 : gens) {
            const double v1 = im_norm(g1);
            if (v1 < best_norm) {
                best_norm = v1;
                best = g1;
            }
            for (const auto& g2 : gens) {
                SymplecticTransform X = compose(g1, g2);
                try {
                    X.validate();
                } catch (const Error&) {
                    continue;
                }
                const double v = im_norm(X);
                if (v < best_norm) {
                    best_norm = v;
                    best = X;
                }
            }
        }
    }
    if (achieved) *achieved = best_norm;
    if (best_out) *best_out = best;
    if (best_norm < tol_realB) return best;
    return std::nullopt;
}

}  // namespace todaspec
