#pragma once

// Hyperelliptic curve y^2 = R(z) = prod_m (z - E_m): branch-point bookkeeping,
// straight-segment cut systems, and analytic continuation of y along paths.

#include <optional>
#include <sstream>
#include <utility>

#include "todaspec/numeric.hpp"

namespace todaspec {

struct CurveSpec {
    VecC branch_points;  // E_0..E_{2p+1}, order as supplied
    int genus = 0;       // p = count/2 - 1

    static constexpr double min_separation_factor = 1e-6;

    static CurveSpec from_points(VecC pts) {
        if (pts.size() < 2 || pts.size() % 2 != 0)
            throw ValidationError("curve needs an even number (>= 2) of branch points, got " +
                                  std::to_string(pts.size()));
        double diam = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j)
                diam = std::max(diam, std::abs(pts[i] - pts[j]));
        const double min_sep = min_separation_factor * diam;
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j)
                if (std::abs(pts[i] - pts[j]) <= min_sep) {
                    std::ostringstream os;
                    os << "branch points " << i << " and " << j << " coincide or nearly coincide";
                    throw ValidationError(os.str());
                }
        CurveSpec s;
        s.branch_points = std::move(pts);
        s.genus = static_cast<int>(s.branch_points.size() / 2) - 1;
        return s;
    }

    std::size_t count() const { return branch_points.size(); }

    double max_abs() const {
        double m = 0.0;
        for (cd e : branch_points) m = std::max(m, std::abs(e));
        return m;
    }

    double diameter() const {
        double d = 0.0;
        for (std::size_t i = 0; i < count(); ++i)
            for (std::size_t j = i + 1; j < count(); ++j)
                d = std::max(d, std::abs(branch_points[i] - branch_points[j]));
        return d;
    }

    double distance_to_branch(cd z) const {
        double d = std::numeric_limits<double>::infinity();
        for (cd e : branch_points) d = std::min(d, std::abs(z - e));
        return d;
    }
};

inline cd eval_R(const CurveSpec& spec, cd z) {
    cd r = 1.0;
    for (cd e : spec.branch_points) r *= (z - e);
    return r;
}

// Derivative of R, for seed-direction expansions.
inline cd eval_R_prime(const CurveSpec& spec, cd z) {
    cd sum = 0.0;
    for (std::size_t m = 0; m < spec.count(); ++m) {
        cd prod = 1.0;
        for (std::size_t k = 0; k < spec.count(); ++k)
            if (k != m) prod *= (z - spec.branch_points[k]);
        sum += prod;
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Segment geometry helpers.

namespace geom {

inline double cross(cd a, cd b) { return a.real() * b.imag() - a.imag() * b.real(); }

inline bool segments_intersect(cd a0, cd a1, cd b0, cd b1, double eps = 1e-12) {
    const double d1 = cross(a1 - a0, b0 - a0);
    const double d2 = cross(a1 - a0, b1 - a0);
    const double d3 = cross(b1 - b0, a0 - b0);
    const double d4 = cross(b1 - b0, a1 - b0);
    const double scale = std::abs(a1 - a0) * std::abs(b1 - b0) + eps;
    if (((d1 > eps * scale && d2 < -eps * scale) || (d1 < -eps * scale && d2 > eps * scale)) &&
        ((d3 > eps * scale && d4 < -eps * scale) || (d3 < -eps * scale && d4 > eps * scale)))
        return true;
    return false;
}

inline double point_segment_distance(cd p, cd a, cd b) {
    const cd ab = b - a;
    const double len2 = std::norm(ab);
    if (len2 == 0.0) return std::abs(p - a);
    double t = ((p - a).real() * ab.real() + (p - a).imag() * ab.imag()) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return std::abs(p - (a + t * ab));
}

inline double segment_segment_distance(cd a0, cd a1, cd b0, cd b1) {
    if (segments_intersect(a0, a1, b0, b1)) return 0.0;
    return std::min(std::min(point_segment_distance(a0, b0, b1), point_segment_distance(a1, b0, b1)),
                    std::min(point_segment_distance(b0, a0, a1), point_segment_distance(b1, a0, a1)));
}

}  // namespace geom

// ---------------------------------------------------------------------------
// Cut system: p+1 straight segments pairing up the branch points.

struct CutSystem {
    std::vector<std::pair<int, int>> pairs;  // indices into CurveSpec::branch_points

    cd endpoint_a(const CurveSpec& s, std::size_t j) const {
        return s.branch_points[static_cast<std::size_t>(pairs[j].first)];
    }
    cd endpoint_b(const CurveSpec& s, std::size_t j) const {
        return s.branch_points[static_cast<std::size_t>(pairs[j].second)];
    }
    cd midpoint(const CurveSpec& s, std::size_t j) const {
        return 0.5 * (endpoint_a(s, j) + endpoint_b(s, j));
    }
};

namespace detail {

inline bool matching_has_crossing(const CurveSpec& spec, const std::vector<std::pair<int, int>>& pairs) {
    for (std::size_t i = 0; i < pairs.size(); ++i)
        for (std::size_t j = i + 1; j < pairs.size(); ++j) {
            const cd a0 = spec.branch_points[static_cast<std::size_t>(pairs[i].first)];
            const cd a1 = spec.branch_points[static_cast<std::size_t>(pairs[i].second)];
            const cd b0 = spec.branch_points[static_cast<std::size_t>(pairs[j].first)];
            const cd b1 = spec.branch_points[static_cast<std::size_t>(pairs[j].second)];
            if (geom::segments_intersect(a0, a1, b0, b1)) return true;
        }
    return false;
}

inline double matching_length(const CurveSpec& spec, const std::vector<std::pair<int, int>>& pairs) {
    double len = 0.0;
    for (auto [i, j] : pairs)
        len += std::abs(spec.branch_points[static_cast<std::size_t>(i)] -
                        spec.branch_points[static_cast<std::size_t>(j)]);
    return len;
}

// Enumerate perfect matchings of {0..n-1} (n even), calling f on each.
template <class F>
inline void for_each_matching(std::vector<int>& idx, std::vector<std::pair<int, int>>& acc, F&& f) {
    if (idx.empty()) {
        f(acc);
        return;
    }
    int first = idx[0];
    for (std::size_t k = 1; k < idx.size(); ++k) {
        std::vector<int> rest;
        for (std::size_t m = 1; m < idx.size(); ++m)
            if (m != k) rest.push_back(idx[m]);
        acc.emplace_back(first, idx[k]);
        for_each_matching(rest, acc, f);
        acc.pop_back();
    }
}

}  // namespace detail

// Default cuts: sort lexicographically by (Re, Im) and pair consecutively;
// if segments cross, fall back to the minimum-total-length non-crossing
// perfect matching (exhaustive for p <= 4, greedy swap repair otherwise).
inline CutSystem default_cuts(const CurveSpec& spec) {
    const std::size_t n = spec.count();
    std::vector<int> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        cd za = spec.branch_points[static_cast<std::size_t>(a)];
        cd zb = spec.branch_points[static_cast<std::size_t>(b)];
        if (za.real() != zb.real()) return za.real() < zb.real();
        return za.imag() < zb.imag();
    });
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t i = 0; i + 1 < n; i += 2) pairs.emplace_back(order[i], order[i + 1]);

    if (!detail::matching_has_crossing(spec, pairs)) return CutSystem{pairs};

    if (spec.genus <= 4) {
        std::vector<int> idx(order);
        std::vector<std::pair<int, int>> acc;
        std::optional<std::vector<std::pair<int, int>>> best;
        double best_len = std::numeric_limits<double>::infinity();
        detail::for_each_matching(idx, acc, [&](const std::vector<std::pair<int, int>>& m) {
            if (detail::matching_has_crossing(spec, m)) return;
            const double len = detail::matching_length(spec, m);
            if (len < best_len) {
                best_len = len;
                best = m;
            }
        });
        if (!best) throw CutConstructionFailed("no non-crossing straight-segment pairing exists");
        return CutSystem{*best};
    }

    // Greedy swap repair: uncross intersecting pairs until stable.
    for (int pass = 0; pass < 200; ++pass) {
        bool changed = false;
        for (std::size_t i = 0; i < pairs.size() && !changed; ++i)
            for (std::size_t j = i + 1; j < pairs.size() && !changed; ++j) {
                auto [a, b] = pairs[i];
                auto [c, d] = pairs[j];
                const auto za = [&](int k) { return spec.branch_points[static_cast<std::size_t>(k)]; };
                if (!geom::segments_intersect(za(a), za(b), za(c), za(d))) continue;
                // try the two re-pairings, keep the shorter non-crossing one
                std::vector<std::pair<int, int>> v1 = pairs, v2 = pairs;
                v1[i] = {a, c};
                v1[j] = {b, d};
                v2[i] = {a, d};
                v2[j] = {b, c};
                const bool ok1 = !geom::segments_intersect(za(a), za(c), za(b), za(d));
                const bool ok2 = !geom::segments_intersect(za(a), za(d), za(b), za(c));
                if (ok1 && (!ok2 || detail::matching_length(spec, v1) <= detail::matching_length(spec, v2)))
                    pairs = v1, changed = true;
                else if (ok2)
                    pairs = v2, changed = true;
            }
        if (!changed) break;
    }
    if (detail::matching_has_crossing(spec, pairs))
        throw CutConstructionFailed("greedy repair did not reach a non-crossing pairing");
    return CutSystem{pairs};
}

inline void validate_cuts(const CurveSpec& spec, const CutSystem& cuts) {
    std::vector<int> seen(spec.count(), 0);
    for (auto [i, j] : cuts.pairs) {
        if (i < 0 || j < 0 || i >= static_cast<int>(spec.count()) || j >= static_cast<int>(spec.count()))
            throw ValidationError("cut index out of range");
        if (i == j) throw ValidationError("cut pairs a branch point with itself: index " + std::to_string(i));
        seen[static_cast<std::size_t>(i)]++;
        seen[static_cast<std::size_t>(j)]++;
    }
    for (std::size_t m = 0; m < seen.size(); ++m)
        if (seen[m] != 1)
            throw ValidationError("branch point " + std::to_string(m) + " appears in " +
                                  std::to_string(seen[m]) + " cuts (expected exactly 1)");
    if (detail::matching_has_crossing(spec, cuts.pairs))
        throw ValidationError("cut segments intersect");
}

// ---------------------------------------------------------------------------
// Points and paths on the surface.

struct SurfacePoint {
    cd z;
    cd y;
};

constexpr double tol_curve = 1e-9;

inline bool on_curve(const CurveSpec& spec, const SurfacePoint& P, double tol = tol_curve) {
    const cd R = eval_R(spec, P.z);
    return std::abs(P.y * P.y - R) <= tol * (1.0 + std::abs(R));
}

struct SurfacePath {
    VecC nodes;          // polyline in the z plane; nodes.front() == start.z
    SurfacePoint start;  // anchors the branch
};

// Reference point far from all branch points, on the sheet with y ~ +z^{p+1}.
inline SurfacePoint anchor_point(const CurveSpec& spec) {
    const double radius = 2.0 * (1.0 + spec.max_abs());
    const cd z = cd(radius, 0.0);
    cd y = std::pow(z, static_cast<double>(spec.genus + 1));
    for (cd e : spec.branch_points) y *= std::sqrt(cd(1.0) - e / z);  // factors near 1
    return SurfacePoint{z, y};
}

// One continuation step: choose the square root of R(z_next) nearer y_prev.
// Caller guarantees |z_next - z_prev| is small relative to branch clearance.
inline cd continue_y_step(const CurveSpec& spec, cd y_prev, cd z_next) {
    const cd y1 = std::sqrt(eval_R(spec, z_next));
    const cd y2 = -y1;
    const double d1 = std::abs(y1 - y_prev);
    const double d2 = std::abs(y2 - y_prev);
    if (std::abs(d1 - d2) <= 1e-12 * (d1 + d2))
        throw StepTooLarge("ambiguous square-root continuation at z = (" +
                           std::to_string(z_next.real()) + "," + std::to_string(z_next.imag()) + ")");
    return d1 < d2 ? y1 : y2;
}

// Analytic continuation of y along a polyline. Segments are bisected until
// each step is short against the clearance to the nearest branch point, so
// the root choice is unambiguous.
inline SurfacePoint continue_y(const CurveSpec& spec, const SurfacePath& path) {
    if (path.nodes.empty()) return path.start;
    if (!on_curve(spec, path.start))
        throw ValidationError("path start is not on the curve");
    cd z = path.start.z;
    cd y = path.start.y;
    if (std::abs(path.nodes.front() - z) > 1e-12 * (1.0 + std::abs(z)))
        throw PathInvalid("path does not begin at its starting point");
    for (std::size_t k = 1; k < path.nodes.size(); ++k) {
        cd target = path.nodes[k];
        // walk z -> target adaptively
        while (std::abs(target - z) > 0.0) {
            const double clear_here = spec.distance_to_branch(z);
            const double step_len = std::abs(target - z);
            if (clear_here <= 0.0) throw StepTooLarge("continuation hit a branch point");
            if (step_len <= 0.45 * clear_here) {
                y = continue_y_step(spec, y, target);
                z = target;
            } else {
                const cd mid = z + (target - z) * (0.45 * clear_here / step_len);
                y = continue_y_step(spec, y, mid);
                z = mid;
            }
        }
    }
    return SurfacePoint{z, y};
}

// Sheet-exchange involution P -> P*.
inline SurfacePoint involution(const SurfacePoint& P) { return SurfacePoint{P.z, -P.y}; }

}  // namespace todaspec
