#pragma once

// Straight-line path planning with circular detours around branch points
// (and optionally cut segments). Produces polylines consumed by the
// branch-tracked integrators.

#include <set>

#include "todaspec/curve.hpp"

namespace todaspec {

struct PathPlanner {
    const CurveSpec* spec = nullptr;
    const CutSystem* cuts = nullptr;      // when set, cut capsules are avoided too
    std::vector<double> branch_radius;    // clearance disc per branch point
    double cut_radius = 0.0;

    static PathPlanner for_curve(const CurveSpec& spec, const CutSystem* cuts = nullptr,
                                 double radius_factor = 0.25) {
        PathPlanner pl;
        pl.spec = &spec;
        pl.cuts = cuts;
        pl.branch_radius.resize(spec.count());
        for (std::size_t m = 0; m < spec.count(); ++m) {
            double nearest = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < spec.count(); ++k)
                if (k != m)
                    nearest = std::min(nearest, std::abs(spec.branch_points[m] - spec.branch_points[k]));
            pl.branch_radius[m] = radius_factor * nearest;
        }
        if (cuts) {
            double gap = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < cuts->pairs.size(); ++i)
                for (std::size_t j = i + 1; j < cuts->pairs.size(); ++j)
                    gap = std::min(gap, geom::segment_segment_distance(
                                            cuts->endpoint_a(spec, i), cuts->endpoint_b(spec, i),
                                            cuts->endpoint_a(spec, j), cuts->endpoint_b(spec, j)));
            if (!std::isfinite(gap)) gap = spec.diameter();
            pl.cut_radius = 0.35 * gap;
        }
        return pl;
    }

    // Endpoints of the path may sit inside obstacle discs (a path may start
    // at a branch point or target a point near a cut); those violations are
    // ignored within `endpoint_slack` of either endpoint.
    VecC plan(cd from, cd to) const {
        VecC nodes{from, to};
        for (int pass = 0; pass < 64; ++pass) {
            bool changed = false;
            VecC out;
            out.push_back(nodes[0]);
            for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
                const cd a = nodes[i], b = nodes[i + 1];
                cd w;
                if (find_detour(a, b, from, to, w)) {
                    out.push_back(w);
                    changed = true;
                }
                out.push_back(b);
            }
            nodes = std::move(out);
            if (!changed) return nodes;
            if (nodes.size() > 512) break;
        }
        throw PathBlocked("no detour found from (" + std::to_string(from.real()) + "," +
                          std::to_string(from.imag()) + ") to (" + std::to_string(to.real()) + "," +
                          std::to_string(to.imag()) + ")");
    }

  private:
    // Worst obstacle violation on segment a->b, excluding violations that are
    // unavoidable because an endpoint of the whole path lies in the disc.
    bool find_detour(cd a, cd b, cd path_from, cd path_to, cd& waypoint) const {
        double worst = 0.0;
        bool found = false;
        for (std::size_t m = 0; m < spec->count(); ++m) {
            const cd e = spec->branch_points[m];
            const double r = branch_radius[m];
            const double d = geom::point_segment_distance(e, a, b);
            if (d >= r) continue;
            if (std::abs(path_from - e) < r || std::abs(path_to - e) < r) continue;  // endpoint lives here
            if (r - d > worst) {
                worst = r - d;
                waypoint = detour_around_point(a, b, e, r);
                found = true;
            }
        }
        if (cuts) {
            for (std::size_t j = 0; j < cuts->pairs.size(); ++j) {
                const cd c0 = cuts->endpoint_a(*spec, j), c1 = cuts->endpoint_b(*spec, j);
                const double d = geom::segment_segment_distance(a, b, c0, c1);
                if (d >= cut_radius) continue;
                if (geom::point_segment_distance(path_from, c0, c1) < cut_radius ||
                    geom::point_segment_distance(path_to, c0, c1) < cut_radius)
                    continue;  // path legitimately enters this capsule at an endpoint
                // route around the nearer cut endpoint
                const double t0 = std::abs(0.5 * (a + b) - c0);
                const double t1 = std::abs(0.5 * (a + b) - c1);
                const cd corner = t0 < t1 ? c0 : c1;
                const double r = 1.8 * cut_radius;
                if (r - d > worst) {
                    worst = r - d;
                    waypoint = detour_around_point(a, b, corner, r);
                    found = true;
                }
            }
        }
        return found;
    }

    static cd detour_around_point(cd a, cd b, cd e, double r) {
        const cd ab = b - a;
        const double len2 = std::norm(ab);
        double t = len2 > 0.0 ? (((e - a).real() * ab.real() + (e - a).imag() * ab.imag()) / len2) : 0.5;
        t = std::clamp(t, 0.05, 0.95);
        const cd foot = a + t * ab;
        cd n = foot - e;
        if (std::abs(n) < 1e-14) {
            n = cd(0, 1) * ab / std::abs(ab);  // segment passes through e: pick the left normal
        } else {
            n /= std::abs(n);
        }
        return e + n * (1.45 * r);
    }
};

}  // namespace todaspec
