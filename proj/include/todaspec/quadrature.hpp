#pragma once

// Branch-tracked contour integration on the two-sheeted surface: adaptive
// Gauss-Legendre along open polylines (with a square-root reparameterization
// for legs that start at a branch point) and doubling trapezoid sums on
// closed analytic loops, where trapezoid converges exponentially.

#include <functional>
#include <optional>

#include "todaspec/curve.hpp"

namespace todaspec {

// Walks y = sqrt(R(z)) by analytic continuation with adaptive substeps.
class BranchWalker {
  public:
    BranchWalker(const CurveSpec& spec, SurfacePoint start) : spec_(&spec), z_(start.z), y_(start.y) {}

    cd z() const { return z_; }
    cd y() const { return y_; }
    SurfacePoint point() const { return SurfacePoint{z_, y_}; }

    cd advance_to(cd target) {
        int guard = 0;
        while (z_ != target) {
            const double clear_here = spec_->distance_to_branch(z_);
            if (clear_here <= 0.0) throw StepTooLarge("continuation hit a branch point");
            const double step_len = std::abs(target - z_);
            if (step_len <= 0.45 * clear_here) {
                y_ = continue_y_step(*spec_, y_, target);
                z_ = target;
            } else {
                const cd mid = z_ + (target - z_) * (0.45 * clear_here / step_len);
                y_ = continue_y_step(*spec_, y_, mid);
                z_ = mid;
            }
            if (++guard > 2000000)
                throw StepTooLarge("continuation did not converge toward the target node");
        }
        return y_;
    }

  private:
    const CurveSpec* spec_;
    cd z_, y_;
};

using SurfaceIntegrand = std::function<Eigen::VectorXcd(cd z, cd y)>;

struct PathIntegralResult {
    Eigen::VectorXcd value;
    SurfacePoint end;
};

namespace detail {

inline double leg_clearance(const CurveSpec& spec, cd a, cd b) {
    double clear_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 8; ++i) {
        cd z = a + (b - a) * (double(i) / 8.0);
        clear_min = std::min(clear_min, spec.distance_to_branch(z));
    }
    return clear_min;
}

// One straight leg, fixed subdivision count, 16-pt Gauss per cell; the walker
// is advanced through the nodes in order.
inline Eigen::VectorXcd leg_fixed(const CurveSpec& spec, SurfacePoint start, cd target, int cells,
                                  const SurfaceIntegrand& f, SurfacePoint* end_out) {
    const GaussRule& gr = gauss_legendre(16);
    BranchWalker walker(spec, start);
    Eigen::VectorXcd acc;
    const cd a = start.z, d = target - start.z;
    for (int c = 0; c < cells; ++c) {
        const cd za = a + d * (double(c) / cells);
        const cd zb = a + d * (double(c + 1) / cells);
        const cd half = 0.5 * (zb - za), mid = 0.5 * (za + zb);
        for (std::size_t i = 0; i < gr.x.size(); ++i) {
            const cd z = mid + half * gr.x[i];
            const cd y = walker.advance_to(z);
            Eigen::VectorXcd v = f(z, y) * (gr.w[i] * half);
            if (acc.size() == 0)
                acc = v;
            else
                acc += v;
        }
        walker.advance_to(zb);
    }
    if (end_out) *end_out = walker.point();
    return acc;
}

}  // namespace detail

// Integrate f(z,y) dz along a polyline starting from an anchored point.
inline PathIntegralResult integrate_from_point(const CurveSpec& spec, SurfacePoint start,
                                               const VecC& polyline, const SurfaceIntegrand& f,
                                               double tol) {
    if (polyline.empty() || std::abs(polyline.front() - start.z) > 1e-12 * (1.0 + std::abs(start.z)))
        throw PathInvalid("polyline must begin at the starting point");
    PathIntegralResult res;
    res.end = start;
    for (std::size_t leg = 1; leg < polyline.size(); ++leg) {
        const cd za = res.end.z, zb = polyline[leg];
        if (za == zb) continue;
        const double clear_min = detail::leg_clearance(spec, za, zb);
        if (!(clear_min > 0.0)) throw PathInvalid("path leg passes through a branch point");
        int cells = std::max(1, static_cast<int>(std::ceil(std::abs(zb - za) / (0.3 * clear_min))));
        SurfacePoint end1, end2;
        Eigen::VectorXcd v1 = detail::leg_fixed(spec, res.end, zb, cells, f, &end1);
        for (int iter = 0; iter < 14; ++iter) {
            Eigen::VectorXcd v2 = detail::leg_fixed(spec, res.end, zb, cells * 2, f, &end2);
            const double err = (v2 - v1).cwiseAbs().maxCoeff();
            const double scale = 1.0 + v2.cwiseAbs().maxCoeff();
            v1 = std::move(v2);
            end1 = end2;
            cells *= 2;
            if (err < tol * scale) break;
        }
        if (res.value.size() == 0)
            res.value = v1;
        else
            res.value += v1;
        res.end = end1;
    }
    return res;
}

// Integrate f(z,y) dz along a polyline whose first node is the branch point
// E_{branch_index}; the first leg is reparameterized z = E + s^2 (z1 - E) so
// that 1/y integrands become smooth. `sign` selects the initial sheet:
// y(s) = s * yred(s) with yred(0) = sign * principal_sqrt(Delta * R_red(E)).
inline PathIntegralResult integrate_from_branch(const CurveSpec& spec, int branch_index,
                                                const VecC& polyline, int sign,
                                                const SurfaceIntegrand& f, double tol) {
    const cd E = spec.branch_points[static_cast<std::size_t>(branch_index)];
    if (polyline.size() < 2) throw PathInvalid("branch-start path needs at least two nodes");
    if (std::abs(polyline.front() - E) > 1e-12 * (1.0 + std::abs(E)))
        throw PathInvalid("path does not start at the branch point");
    const cd z1 = polyline[1];
    const cd delta = z1 - E;

    auto r_reduced = [&](cd z) {
        cd r = 1.0;
        for (std::size_t m = 0; m < spec.count(); ++m)
            if (static_cast<int>(m) != branch_index) r *= (z - spec.branch_points[m]);
        return r;
    };

    // yred(s): continued sqrt of Delta * R_red(z(s)) along s in [0,1]
    auto leg_sqrt = [&](int cells, SurfacePoint* end_out) {
        const GaussRule& gr = gauss_legendre(16);
        Eigen::VectorXcd acc;
        cd yred = double(sign) * std::sqrt(delta * r_reduced(E));
        double s_prev = 0.0;
        auto advance = [&](double s) {
            // substeps in s for a safe sqrt continuation
            const int sub = 4;
            for (int k = 1; k <= sub; ++k) {
                const double ss = s_prev + (s - s_prev) * (double(k) / sub);
                const cd z = E + ss * ss * delta;
                const cd cand = std::sqrt(delta * r_reduced(z));
                yred = (std::abs(cand - yred) <= std::abs(cand + yred)) ? cand : -cand;
            }
            s_prev = s;
        };
        for (int c = 0; c < cells; ++c) {
            const double sa = double(c) / cells, sb = double(c + 1) / cells;
            const double half = 0.5 * (sb - sa), mid = 0.5 * (sa + sb);
            for (std::size_t i = 0; i < gr.x.size(); ++i) {
                const double s = mid + half * gr.x[i];
                advance(s);
                const cd z = E + s * s * delta;
                const cd y = s * yred;
                Eigen::VectorXcd v = f(z, y) * (gr.w[i] * half * 2.0 * s * delta);
                if (acc.size() == 0)
                    acc = v;
                else
                    acc += v;
            }
        }
        advance(1.0);
        if (end_out) *end_out = SurfacePoint{z1, yred};
        return acc;
    };

    const double clear1 = spec.distance_to_branch(z1);
    int cells = std::max(2, static_cast<int>(std::ceil(std::abs(delta) / std::max(0.3 * clear1, 1e-12))));
    SurfacePoint joint{};
    Eigen::VectorXcd v1 = leg_sqrt(cells, &joint);
    for (int iter = 0; iter < 14; ++iter) {
        SurfacePoint joint2{};
        Eigen::VectorXcd v2 = leg_sqrt(cells * 2, &joint2);
        const double err = (v2 - v1).cwiseAbs().maxCoeff();
        const double scale = 1.0 + v2.cwiseAbs().maxCoeff();
        v1 = std::move(v2);
        joint = joint2;
        cells *= 2;
        if (err < tol * scale) break;
    }

    if (polyline.size() == 2) return PathIntegralResult{v1, joint};
    VecC rest(polyline.begin() + 1, polyline.end());
    PathIntegralResult tail = integrate_from_point(spec, joint, rest, f, tol);
    tail.value += v1;
    return tail;
}

// ---------------------------------------------------------------------------
// Closed analytic loops: doubling trapezoid with branch tracking.

struct LoopCurve {
    std::function<cd(double)> z;     // position at t in [0, 2pi)
    std::function<cd(double)> zdot;  // dz/dt
    SurfacePoint start;              // anchored value at t = 0
};

inline Eigen::VectorXcd integrate_loop_tracked(const CurveSpec& spec, const LoopCurve& loop,
                                               const SurfaceIntegrand& f, double tol,
                                               int* nodes_used = nullptr) {
    auto eval_at = [&](int K) {
        BranchWalker walker(spec, loop.start);
        Eigen::VectorXcd acc;
        for (int k = 0; k < K; ++k) {
            const double t = 2.0 * pi * k / K;
            const cd z = loop.z(t);
            const cd y = walker.advance_to(z);
            Eigen::VectorXcd v = f(z, y) * loop.zdot(t);
            if (acc.size() == 0)
                acc = v;
            else
                acc += v;
        }
        // closure check: continuing back to t = 0 must reproduce the sheet
        const cd y_back = walker.advance_to(loop.z(0.0));
        if (std::abs(y_back - loop.start.y) > 1e-6 * (1.0 + std::abs(loop.start.y)))
            throw BasisConstructionFailed("loop does not close on the surface");
        acc *= 2.0 * pi / K;
        return acc;
    };
    int K = 64;
    Eigen::VectorXcd v1 = eval_at(K);
    for (int iter = 0; iter < 12; ++iter) {
        Eigen::VectorXcd v2 = eval_at(2 * K);
        const double err = (v2 - v1).cwiseAbs().maxCoeff();
        const double scale = 1.0 + v2.cwiseAbs().maxCoeff();
        v1 = std::move(v2);
        K *= 2;
        if (err < tol * scale) break;
    }
    if (nodes_used) *nodes_used = K;
    return v1;
}

}  // namespace todaspec
