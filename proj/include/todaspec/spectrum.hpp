#pragma once

// Spectrum of the Jacobi operator with quasi-periodic algebro-geometric
// coefficients: Bohr means of the hierarchy tables, the harmonic spectral
// function
//     h(z) = Re( 2 int_{E_{m0}}^z <F_p>(z') dz' / y(z') ),
// whose zero level set is the spectrum, predictor-corrector tracing of the
// spectral arcs with endpoint/crossing classification, the coefficient
// bounding box, and two independent oracles (transfer-matrix Lyapunov
// exponent, finite-section eigenvalues).

#include "todaspec/paths.hpp"
#include "todaspec/periods.hpp"
#include "todaspec/quadrature.hpp"
#include "todaspec/toda.hpp"

namespace todaspec {

// ---------------------------------------------------------------------------
// Bohr means with triangular (Fejer) weights.

struct MeanData {
    int p = 0;
    VecC f_means;       // <f_0> .. <f_p>
    VecC mean_poly;     // <F_p>, ascending, monic
    VecC lambda_tilde;  // roots of the mean polynomial
    int window_len = 0;
    double err_est = 0.0;
};

inline MeanData mean_values(const CoefficientWindow& window, const SummationConstants& constants,
                            int p, double tol_mean = 1e-6) {
    const HierarchyTable t = hierarchy(window, constants, p);
    const int lo = t.f[static_cast<std::size_t>(p)].lo;
    const int hi = t.f[static_cast<std::size_t>(p)].hi;
    if (hi - lo < 8) throw WindowTooNarrow("mean window too short");

    auto weighted_mean = [&](int level, int a, int b) {
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a) + 1.0;
        cd acc = 0.0;
        double wsum = 0.0;
        for (int n = a; n <= b; ++n) {
            const double w = 1.0 - std::abs(n - mid) / half;
            acc += w * t.f[static_cast<std::size_t>(level)].at(n);
            wsum += w;
        }
        return acc / wsum;
    };

    MeanData m;
    m.p = p;
    m.window_len = hi - lo + 1;
    const int quarter = (hi - lo) / 4;
    for (int level = 0; level <= p; ++level) {
        const cd full = weighted_mean(level, lo, hi);
        const cd half = weighted_mean(level, lo + quarter, hi - quarter);
        m.f_means.push_back(full);
        m.err_est = std::max(m.err_est, std::abs(full - half));
    }
    m.f_means[0] = 1.0;  // exact
    if (m.err_est > tol_mean)
        throw MeanNotConverged("half/full window mean discrepancy " + std::to_string(m.err_est));
    m.mean_poly.resize(static_cast<std::size_t>(p) + 1);
    for (int j = 0; j <= p; ++j) m.mean_poly[static_cast<std::size_t>(j)] = m.f_means[static_cast<std::size_t>(p - j)];
    if (p > 0) {
        m.lambda_tilde = poly_roots(m.mean_poly);
        for (auto& r : m.lambda_tilde) r = poly_root_polish(m.mean_poly, r);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Spectral function h and its branch-tracked evaluation machinery.

struct SpectralPointValue {
    double h = 0.0;
    cd H = 0.0;          // the full complex integral (Im is path-dependent)
    SurfacePoint at{};   // evaluation point with the cut-plane branch of y
};

class SpectralFunction {
  public:
    SpectralFunction(const CurveSpec& spec, const CutSystem& cuts, MeanData means,
                     double tol_quad = 1e-10)
        : spec_(spec), cuts_(cuts), means_(std::move(means)), tol_(tol_quad) {
        planner_ = PathPlanner::for_curve(spec_, &cuts_);
        anchor_ = anchor_point(spec_);
        base_index_ = 0;
        for (std::size_t midx = 1; midx < spec_.count(); ++midx)
            if (std::abs(spec_.branch_points[midx]) < std::abs(spec_.branch_points[base_index_]))
                base_index_ = static_cast<std::size_t>(midx);
    }

    const CurveSpec& spec() const { return spec_; }
    const MeanData& means() const { return means_; }
    int base_index() const { return static_cast<int>(base_index_); }
    const PathPlanner& planner() const { return planner_; }

    cd mean_numerator(cd z) const { return poly_eval(means_.mean_poly, z); }

    // derivative of the full integral: H'(z) = 2 <g>(z) on the tracked branch
    cd H_prime(cd z, cd y) const { return 2.0 * mean_numerator(z) / y; }

    // Full evaluation along a fresh path from the base branch point, with the
    // branch normalized to the cut-plane square root (y ~ +z^{p+1} far out).
    // Targets at (or near) another branch point get a square-root
    // regularization on the receiving end as well.
    SpectralPointValue eval(cd z) const {
        const cd base = spec_.branch_points[base_index_];
        if (std::abs(z - base) < 1e-12 * (1.0 + std::abs(base)))
            return SpectralPointValue{0.0, cd(0.0), SurfacePoint{z, cd(0.0)}};
        auto f = [&](cd zz, cd yy) {
            Eigen::VectorXcd v(1);
            v(0) = H_prime(zz, yy);
            return v;
        };

        int target_branch = -1;
        for (std::size_t m = 0; m < spec_.count(); ++m)
            if (std::abs(z - spec_.branch_points[m]) < 1e-10 * (1.0 + spec_.max_abs()))
                target_branch = static_cast<int>(m);

        if (target_branch < 0) {
            VecC path = planner_.plan(base, z);
            auto res = integrate_from_branch(spec_, static_cast<int>(base_index_), path, +1, f, tol_);
            // normalize to the Pi branch by continuing from the far anchor
            VecC ref = planner_.plan(anchor_.z, z);
            SurfacePoint pi_branch = continue_y(spec_, SurfacePath{ref, anchor_});
            cd H = res.value(0);
            SurfacePoint end = res.end;
            const double scale = 1.0 + std::abs(pi_branch.y);
            if (std::abs(end.y - pi_branch.y) <= 1e-6 * scale) {
                // already on the Pi branch
            } else if (std::abs(end.y + pi_branch.y) <= 1e-6 * scale) {
                H = -H;
                end.y = -end.y;
            } else {
                throw PathInvalid("spectral path endpoint landed off both lifts");
            }
            return SpectralPointValue{H.real(), H, end};
        }

        // branch-point target: integrate outward from both endpoints to a
        // common waypoint, then join with the branch matched there
        VecC path = planner_.plan(base, z);
        cd w;  // interior waypoint
        VecC leg1(path.begin(), path.end());
        if (path.size() >= 3) {
            const std::size_t split = path.size() / 2;
            w = path[split];
            leg1.assign(path.begin(), path.begin() + static_cast<long>(split) + 1);
        } else {
            w = 0.5 * (base + z);
            leg1 = {base, w};
        }
        VecC leg2;  // from the target branch point back to w
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
            leg2.push_back(*it);
            if (std::abs(*it - w) < 1e-14 * (1.0 + std::abs(w))) break;
        }
        if (std::abs(leg2.back() - w) > 1e-12 * (1.0 + std::abs(w))) leg2 = {z, w};
        auto r1 = integrate_from_branch(spec_, static_cast<int>(base_index_), leg1, +1, f, tol_);
        auto r2 = integrate_from_branch(spec_, target_branch, leg2, +1, f, tol_);
        cd V2 = r2.value(0);
        const double scale = 1.0 + std::abs(r1.end.y);
        if (std::abs(r2.end.y - r1.end.y) <= 1e-6 * scale) {
            // branches agree at the waypoint
        } else if (std::abs(r2.end.y + r1.end.y) <= 1e-6 * scale) {
            V2 = -V2;
        } else {
            throw PathInvalid("two-sided branch-point evaluation failed to join branches");
        }
        cd H = r1.value(0) - V2;
        // global branch normalization at the waypoint
        VecC ref = planner_.plan(anchor_.z, w);
        SurfacePoint pi_branch = continue_y(spec_, SurfacePath{ref, anchor_});
        if (std::abs(pi_branch.y + r1.end.y) <= 1e-6 * (1.0 + std::abs(pi_branch.y))) H = -H;
        return SpectralPointValue{H.real(), H, SurfacePoint{z, cd(0.0)}};
    }

    // Incremental update of (y, H) along a short segment, continuing the
    // branch; used by the arc tracer so that cuts are crossed analytically
    // (equivalent to locally deforming the cut system).
    void advance(SurfacePoint& pt, cd& H, cd z_next) const {
        const GaussRule& gr = gauss_legendre(8);
        BranchWalker walker(spec_, pt);
        const cd a = pt.z, d = z_next - a;
        if (std::abs(d) == 0.0) return;
        const cd half = 0.5 * d, mid = a + half;
        cd acc = 0.0;
        for (std::size_t i = 0; i < gr.x.size(); ++i) {
            const cd zz = mid + half * gr.x[i];
            const cd yy = walker.advance_to(zz);
            acc += gr.w[i] * half * H_prime(zz, yy);
        }
        const cd y_end = walker.advance_to(z_next);
        pt = SurfacePoint{z_next, y_end};
        H += acc;
    }

    // loop_{cut j} <g> dz: the periods of the spectral derivative, quantized
    // in i pi Z when the means are exact.
    cd cut_loop_period(std::size_t cut_index) const {
        const cd f1 = cuts_.endpoint_a(spec_, cut_index);
        const cd f2 = cuts_.endpoint_b(spec_, cut_index);
        const double dcut = std::abs(f2 - f1);
        double lim = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < spec_.count(); ++m) {
            const cd e = spec_.branch_points[m];
            if (std::abs(e - f1) < 1e-12 || std::abs(e - f2) < 1e-12) continue;
            lim = std::min(lim, std::abs(e - f1) + std::abs(e - f2));
        }
        EllipseCycle cyc = detail::make_focal_ellipse(f1, f2, std::min(1.2 * dcut, lim / 1.05));
        VecC ref = planner_.plan(anchor_.z, cyc.at(0.0));
        cyc.start = continue_y(spec_, SurfacePath{ref, anchor_});
        LoopCurve loop{[&](double t) { return cyc.at(t); }, [&](double t) { return cyc.deriv(t); },
                       cyc.start};
        auto f = [&](cd zz, cd yy) {
            Eigen::VectorXcd v(1);
            v(0) = mean_numerator(zz) / yy;
            return v;
        };
        return integrate_loop_tracked(spec_, loop, f, tol_)(0);
    }

  private:
    const CurveSpec& spec_;
    const CutSystem& cuts_;
    MeanData means_;
    double tol_;
    PathPlanner planner_;
    SurfacePoint anchor_;
    std::size_t base_index_;
};

// ---------------------------------------------------------------------------
// Arc tracing.

struct ArcEndpoint {
    enum class Type { BranchPoint, CrossingLambda, Unterminated };
    Type type = Type::Unterminated;
    int index = -1;
};

struct Arc {
    VecC points;
    ArcEndpoint start, end;
    double arclength = 0.0;
};

struct CrossingInfo {
    int lambda_index = -1;
    cd location;
    double h_value = 0.0;
    bool crossing = false;
    int multiplicity = 1;
};

struct BoundingBox {
    double re_lo = 0, re_hi = 0, im_lo = 0, im_hi = 0;

    bool contains(cd z, double margin) const {
        return z.real() >= re_lo - margin && z.real() <= re_hi + margin &&
               z.imag() >= im_lo - margin && z.imag() <= im_hi + margin;
    }
};

// sup/inf combinations of the coefficient window
inline BoundingBox bounding_box(const CoefficientWindow& w) {
    double sup_re_a = 0, sup_im_a = 0;
    double inf_re_b = std::numeric_limits<double>::infinity(), sup_re_b = -inf_re_b;
    double inf_im_b = inf_re_b, sup_im_b = -inf_re_b;
    for (std::size_t i = 0; i < w.a.size(); ++i) {
        sup_re_a = std::max(sup_re_a, std::abs(w.a[i].real()));
        sup_im_a = std::max(sup_im_a, std::abs(w.a[i].imag()));
        inf_re_b = std::min(inf_re_b, w.b[i].real());
        sup_re_b = std::max(sup_re_b, w.b[i].real());
        inf_im_b = std::min(inf_im_b, w.b[i].imag());
        sup_im_b = std::max(sup_im_b, w.b[i].imag());
    }
    return BoundingBox{-2.0 * sup_re_a + inf_re_b, 2.0 * sup_re_a + sup_re_b,
                       -2.0 * sup_im_a + inf_im_b, 2.0 * sup_im_a + sup_im_b};
}

struct SpectrumResult {
    std::vector<Arc> arcs;
    VecC lambda_tilde;
    std::vector<CrossingInfo> crossings;
    BoundingBox bbox;
    std::vector<std::string> diagnostics;
};

struct TraceConfig {
    double step = 0.0;            // 0: diameter/400
    double tol_arc = 1e-8;
    double tol_coincide = 0.0;    // 0: 1e-6 * diameter
    double crossing_h_tol = 1e-5;
    int max_steps = 100000;
};

namespace detail {

// deflate poly by (z - root)^k and evaluate the quotient at the root
inline cd deflated_value(VecC poly, cd root, int k) {
    for (int pass = 0; pass < k; ++pass) {
        // synthetic division by (z - root)
        VecC q(poly.size() - 1);
        cd carry = poly.back();
        for (int i = static_cast<int>(poly.size()) - 2; i >= 0; --i) {
            q[static_cast<std::size_t>(i)] = carry;
            carry = poly[static_cast<std::size_t>(i)] + carry * root;
        }
        poly = std::move(q);
    }
    return poly_eval(poly, root);
}

struct Seed {
    cd origin;            // endpoint the fan emanates from
    cd direction;         // unit
    ArcEndpoint anchor;   // descriptor of the origin
    bool consumed = false;
};

}  // namespace detail

class ArcTracer {
  public:
    ArcTracer(const SpectralFunction& sf, const BoundingBox& box, TraceConfig cfg = {})
        : sf_(sf), box_(box), cfg_(cfg) {
        const double diam = sf_.spec().diameter();
        if (cfg_.step <= 0.0) cfg_.step = diam / 400.0;
        if (cfg_.tol_coincide <= 0.0) cfg_.tol_coincide = 1e-6 * diam;
        capture_ = 3.0 * cfg_.step;
    }

    SpectrumResult run() {
        SpectrumResult out;
        out.lambda_tilde = sf_.means().lambda_tilde;
        out.bbox = box_;
        detect_crossings(out);
        build_seeds(out);
        for (std::size_t s = 0; s < seeds_.size(); ++s) {
            if (seeds_[s].consumed) continue;
            seeds_[s].consumed = true;
            trace_from(seeds_[s], out);
        }
        // every branch point must be met by at least one arc
        for (std::size_t m = 0; m < sf_.spec().count(); ++m) {
            bool hit = false;
            for (const auto& arc : out.arcs) {
                auto touches = [&](const ArcEndpoint& e) {
                    return e.type == ArcEndpoint::Type::BranchPoint && e.index == static_cast<int>(m);
                };
                if (touches(arc.start) || touches(arc.end)) hit = true;
            }
            if (!hit)
                out.diagnostics.push_back("branch point " + std::to_string(m) +
                                          " not reached by any arc");
        }
        return out;
    }

  private:
    void detect_crossings(SpectrumResult& out) {
        const auto& lt = sf_.means().lambda_tilde;
        for (std::size_t j = 0; j < lt.size(); ++j) {
            double dist_to_E = std::numeric_limits<double>::infinity();
            for (cd e : sf_.spec().branch_points) dist_to_E = std::min(dist_to_E, std::abs(lt[j] - e));
            if (dist_to_E < cfg_.tol_coincide) continue;  // handled as endpoint multiplicity
            if (dist_to_E < 1e3 * cfg_.tol_coincide) {
                out.diagnostics.push_back("lambda_tilde " + std::to_string(j) +
                                          " ambiguously close to a branch point");
                continue;
            }
            CrossingInfo info;
            info.lambda_index = static_cast<int>(j);
            info.location = lt[j];
            info.multiplicity = 0;
            for (cd other : lt)
                if (std::abs(other - lt[j]) < cfg_.tol_coincide) info.multiplicity++;
            info.h_value = sf_.eval(lt[j]).h;
            info.crossing = std::abs(info.h_value) < cfg_.crossing_h_tol;
            out.crossings.push_back(info);
        }
    }

    void build_seeds(SpectrumResult& out) {
        const auto& spec = sf_.spec();
        const auto& lt = sf_.means().lambda_tilde;
        for (std::size_t m = 0; m < spec.count(); ++m) {
            const cd E = spec.branch_points[m];
            int N0 = 0;
            for (cd l : lt)
                if (std::abs(l - E) < cfg_.tol_coincide) N0++;
            // local coefficient: 2 * Q(E) / sqrt(R_red(E)) with Q the mean
            // polynomial deflated by its roots at E
            cd Q = detail::deflated_value(sf_.means().mean_poly, E, N0);
            cd R_red = 1.0;
            for (std::size_t k = 0; k < spec.count(); ++k)
                if (k != m) R_red *= (E - spec.branch_points[k]);
            const cd C = 2.0 * Q / std::sqrt(R_red);
            const double phi0 = std::arg(C);
            const double order = double(N0) + 0.5;
            for (int k = 0; k < 2 * N0 + 1; ++k) {
                const double phi = (0.5 * pi + k * pi - phi0) / order;
                detail::Seed s;
                s.origin = E;
                s.direction = std::exp(cd(0, phi));
                s.anchor = ArcEndpoint{ArcEndpoint::Type::BranchPoint, static_cast<int>(m)};
                seeds_.push_back(s);
            }
        }
        for (const auto& info : out.crossings) {
            if (!info.crossing) continue;
            const int M0 = info.multiplicity;
            cd C0 = detail::deflated_value(sf_.means().mean_poly, info.location, M0);
            C0 = 2.0 * C0 / std::sqrt(eval_R(sf_.spec(), info.location));
            const double phi0 = std::arg(C0);
            for (int k = 0; k < 2 * M0 + 2; ++k) {
                const double phi = (0.5 * pi + k * pi - phi0) / double(M0 + 1);
                detail::Seed s;
                s.origin = info.location;
                s.direction = std::exp(cd(0, phi));
                s.anchor = ArcEndpoint{ArcEndpoint::Type::CrossingLambda, info.lambda_index};
                seeds_.push_back(s);
            }
        }
    }

    // capture targets: branch points and flagged crossings
    struct Target {
        cd location;
        ArcEndpoint desc;
    };

    std::vector<Target> targets(const SpectrumResult& out) const {
        std::vector<Target> t;
        for (std::size_t m = 0; m < sf_.spec().count(); ++m)
            t.push_back({sf_.spec().branch_points[m],
                         ArcEndpoint{ArcEndpoint::Type::BranchPoint, static_cast<int>(m)}});
        for (const auto& c : out.crossings)
            if (c.crossing)
                t.push_back({c.location, ArcEndpoint{ArcEndpoint::Type::CrossingLambda, c.lambda_index}});
        return t;
    }

    void consume_arrival_seed(cd arrival_point, cd arrival_dir) {
        // the seed at the far endpoint pointing back along the arc is spent
        double best = 0.6;  // minimum alignment
        std::size_t best_idx = seeds_.size();
        for (std::size_t s = 0; s < seeds_.size(); ++s) {
            if (seeds_[s].consumed) continue;
            if (std::abs(seeds_[s].origin - arrival_point) > 1e-9 * (1.0 + std::abs(arrival_point)))
                continue;
            const double align = -(seeds_[s].direction.real() * arrival_dir.real() +
                                   seeds_[s].direction.imag() * arrival_dir.imag());
            if (align > best) {
                best = align;
                best_idx = s;
            }
        }
        if (best_idx < seeds_.size()) seeds_[best_idx].consumed = true;
    }

    void trace_from(const detail::Seed& seed, SpectrumResult& out) {
        const auto tgts = targets(out);
        const double seed_offset = 1.5 * cfg_.step;
        cd z0 = seed.origin + seed_offset * seed.direction;
        SpectralPointValue v0 = sf_.eval(z0);
        SurfacePoint pt = v0.at;
        cd H = v0.H;
        // corrector at the seed
        if (!newton_correct(pt, H, seed.direction)) throw SeedStalled("seed correction failed");

        Arc arc;
        arc.start = seed.anchor;
        arc.points.push_back(seed.origin);
        arc.points.push_back(pt.z);
        arc.arclength = std::abs(pt.z - seed.origin);

        cd dir = seed.direction;
        double step = cfg_.step;
        bool armed = false;  // origin capture disabled until the trace leaves
        for (int it = 0; it < cfg_.max_steps; ++it) {
            // tangent from the level-set: perpendicular to grad h = conj(H')
            const cd Hp = sf_.H_prime(pt.z, pt.y);
            if (std::abs(Hp) < 1e-14) throw SeedStalled("vanishing spectral derivative on arc");
            cd tangent = cd(0, 1) * std::conj(Hp) / std::abs(Hp);
            if (tangent.real() * dir.real() + tangent.imag() * dir.imag() < 0.0) tangent = -tangent;

            // curvature adaptation
            const double turn = std::abs(std::arg(tangent / dir));
            if (turn > 0.35 && step > 0.1 * cfg_.step) step *= 0.5;
            else if (turn < 0.05 && step < cfg_.step) step *= 1.4;
            dir = tangent;

            SurfacePoint nxt = pt;
            cd Hn = H;
            sf_.advance(nxt, Hn, pt.z + step * tangent);
            if (!newton_correct(nxt, Hn, tangent)) {
                step *= 0.5;
                if (step < 1e-6 * cfg_.step) throw SeedStalled("corrector failure on arc");
                continue;
            }
            pt = nxt;
            H = Hn;
            arc.arclength += std::abs(pt.z - arc.points.back());
            arc.points.push_back(pt.z);

            if (!box_.contains(pt.z, 2.0 * capture_))
                throw ArcEscapedBox("arc left the coefficient bounding box at (" +
                                    std::to_string(pt.z.real()) + "," + std::to_string(pt.z.imag()) + ")");

            if (!armed && std::abs(pt.z - seed.origin) > 2.0 * capture_) armed = true;

            // capture test
            for (const auto& tgt : tgts) {
                const bool is_origin = std::abs(tgt.location - seed.origin) <
                                       1e-9 * (1.0 + std::abs(tgt.location));
                if (is_origin && !armed) continue;
                if (std::abs(pt.z - tgt.location) < capture_) {
                    arc.points.push_back(tgt.location);
                    arc.end = tgt.desc;
                    arc.arclength += std::abs(tgt.location - pt.z);
                    consume_arrival_seed(tgt.location, dir);
                    out.arcs.push_back(std::move(arc));
                    return;
                }
            }

            // self-collision would mean a closed loop in the spectrum
            if (arc.points.size() > 40) {
                for (std::size_t k = 0; k + 30 < arc.points.size(); ++k) {
                    if (std::abs(pt.z - arc.points[k]) < 0.5 * capture_) {
                        out.diagnostics.push_back("closed-loop trace detected; aborted");
                        arc.end = ArcEndpoint{ArcEndpoint::Type::Unterminated, -1};
                        out.arcs.push_back(std::move(arc));
                        return;
                    }
                }
            }
            // collision with previously traced arcs: deduplicate
            for (const auto& other : out.arcs) {
                for (cd q : other.points) {
                    if (std::abs(pt.z - q) < 0.45 * capture_) {
                        arc.end = ArcEndpoint{ArcEndpoint::Type::Unterminated, -1};
                        out.diagnostics.push_back("trace merged into an existing arc");
                        out.arcs.push_back(std::move(arc));
                        return;
                    }
                }
            }
        }
        throw SeedStalled("arc did not terminate within the step budget");
    }

    // 1D Newton along grad h, with incremental branch/H updates
    bool newton_correct(SurfacePoint& pt, cd& H, cd tangent) {
        for (int k = 0; k < 10; ++k) {
            if (std::abs(H.real()) < cfg_.tol_arc) return true;
            const cd Hp = sf_.H_prime(pt.z, pt.y);
            if (std::abs(Hp) < 1e-14) return false;
            cd delta = -H.real() * std::conj(Hp) / std::norm(Hp);
            // stay transversal to the arc
            const double cap = 0.75 * cfg_.step;
            if (std::abs(delta) > cap) delta *= cap / std::abs(delta);
            (void)tangent;
            sf_.advance(pt, H, pt.z + delta);
        }
        return std::abs(H.real()) < cfg_.tol_arc;
    }

    const SpectralFunction& sf_;
    BoundingBox box_;
    TraceConfig cfg_;
    double capture_;
    std::vector<detail::Seed> seeds_;
};

inline SpectrumResult trace_arcs(const SpectralFunction& sf, const BoundingBox& box,
                                 TraceConfig cfg = {}) {
    return ArcTracer(sf, box, cfg).run();
}

// ---------------------------------------------------------------------------
// Independent oracles.

// Transfer-matrix Lyapunov exponent over N sites starting at the window's
// low edge (plus one, for the a(n-1) entry), with periodic renormalization.
inline double lyapunov(const CoefficientWindow& w, cd z, int N) {
    const int n_start = w.n_lo + 1;
    if (n_start + N - 1 > w.n_hi())
        throw WindowTooNarrow("Lyapunov run of " + std::to_string(N) + " sites exceeds the window");
    cd m00 = 1.0, m01 = 0.0, m10 = 0.0, m11 = 1.0;
    double log_scale = 0.0;
    for (int k = 0; k < N; ++k) {
        const int n = n_start + k;
        const cd a = w.a_at(n), am = w.a_at(n - 1), b = w.b_at(n);
        const cd t00 = (z - b) / a, t01 = -am / a;
        // multiply T * M
        const cd r00 = t00 * m00 + t01 * m10;
        const cd r01 = t00 * m01 + t01 * m11;
        const cd r10 = m00, r11 = m01;
        m00 = r00;
        m01 = r01;
        m10 = r10;
        m11 = r11;
        if ((k & 15) == 15) {
            const double s = std::max(std::max(std::abs(m00), std::abs(m01)),
                                      std::max(std::abs(m10), std::abs(m11)));
            if (s > 0.0) {
                m00 /= s;
                m01 /= s;
                m10 /= s;
                m11 /= s;
                log_scale += std::log(s);
            }
        }
    }
    // top singular value of the remaining 2x2
    const double f2 = std::norm(m00) + std::norm(m01) + std::norm(m10) + std::norm(m11);
    const cd det = m00 * m11 - m01 * m10;
    const double disc = std::sqrt(std::max(f2 * f2 - 4.0 * std::norm(det), 0.0));
    const double smax2 = 0.5 * (f2 + disc);
    const double gamma = (log_scale + 0.5 * std::log(smax2)) / double(N);
    return std::max(gamma, 0.0);
}

// Eigenvalues of the N x N tridiagonal truncation. Marked diagnostic: for
// non-self-adjoint coefficients the finite sections need not converge to the
// spectrum.
struct FiniteSectionResult {
    VecC eigenvalues;
    bool diagnostic = true;
};

inline FiniteSectionResult finite_section(const CoefficientWindow& w, int N) {
    if (N < 1 || w.n_lo + N - 1 > w.n_hi()) throw WindowTooNarrow("finite section exceeds the window");
    bool real_case = true;
    for (int k = 0; k < N && real_case; ++k) {
        const int n = w.n_lo + k;
        if (std::abs(w.a_at(n).imag()) > 1e-14 || std::abs(w.b_at(n).imag()) > 1e-14) real_case = false;
    }
    FiniteSectionResult out;
    if (real_case) {
        Eigen::VectorXd diag(N), sub(N - 1);
        for (int k = 0; k < N; ++k) diag(k) = w.b_at(w.n_lo + k).real();
        for (int k = 0; k + 1 < N; ++k) sub(k) = w.a_at(w.n_lo + k).real();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw EigenFailed("tridiagonal eigensolver failed");
        for (int k = 0; k < N; ++k) out.eigenvalues.push_back(cd(es.eigenvalues()(k), 0.0));
        return out;
    }
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(N, N);
    for (int k = 0; k < N; ++k) {
        const int n = w.n_lo + k;
        M(k, k) = w.b_at(n);
        if (k + 1 < N) {
            M(k, k + 1) = w.a_at(n);
            M(k + 1, k) = w.a_at(n);
        }
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw EigenFailed("dense complex eigensolver failed");
    for (int k = 0; k < N; ++k) out.eigenvalues.push_back(es.eigenvalues()(k));
    return out;
}

}  // namespace todaspec
