#pragma once

// Covering constructions: greedy Vitali subfamilies, half-density boxing balls,
// covers of the boundary of a ball or cube by balls that see much of the
// boundary of E, the per-scale covers of the boundary of a union of balls, and
// perimeter ratios for unions of large or intersecting balls.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "ball.hpp"
#include "distance_transform.hpp"
#include "family.hpp"
#include "geometry.hpp"
#include "grid.hpp"

namespace maxvar {

/// Greedy disjoint subfamily: balls by decreasing radius (ties by lexicographic
/// center), each kept when it misses every ball kept so far. Every input ball
/// then meets a kept ball at least as large, so the 3-fold (hence 5-fold)
/// enlargements of the kept balls cover the input.
inline BallFamily vitali_subfamily(const BallFamily& fam)
{
    std::vector<std::size_t> order(fam.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (fam[a].radius != fam[b].radius) return fam[a].radius > fam[b].radius;
        return fam[a].center < fam[b].center;
    });
    BallFamily out;
    for (auto i : order) {
        bool free = true;
        for (const auto& k : out)
            if (intersects(k, fam[i])) {
                free = false;
                break;
            }
        if (free) out.add(fam[i]);
    }
    return out;
}

/// Cells of the input union that are missing from the union of the
/// `expansion`-fold enlarged selection.
inline GridSet vitali_uncovered(const GridGeometry& g, const BallFamily& input, const BallFamily& selected,
                                double expansion = 5.0)
{
    return rasterize_union(g, input).minus(rasterize_union(g, selected.scaled(expansion)));
}

/// True when no two balls of the family intersect (center distance >= r1 + r2).
inline bool pairwise_disjoint(const BallFamily& fam)
{
    for (std::size_t i = 0; i < fam.size(); ++i)
        for (std::size_t j = i + 1; j < fam.size(); ++j)
            if (intersects(fam[i], fam[j])) return false;
    return true;
}

// ---------------------------------------------------------------------------

namespace detail {

inline Ball interpolate(const Ball& a, const Ball& b, double t)
{
    Ball r;
    for (int i = 0; i < kMaxDim; ++i) r.center[i] = (1.0 - t) * a.center[i] + t * b.center[i];
    r.radius = (1.0 - t) * a.radius + t * b.radius;
    return r;
}

} // namespace detail

/// Tolerance for a half-density ball: the discrete density moves by about one
/// cell per step along the path.
inline double boxing_tolerance(const GridGeometry& g, const Ball& f) { return 5.0 * g.h / f.diameter(); }

/// A ball F with x in F, F inside B1 and |E n F| / |F| within 5h / diam F of 1/2,
/// found by bisection along the straight path from a one-cell ball at x to B1.
inline Ball boxing_ball(const GridSet& e, const Ball& b1, const Point& x)
{
    const auto& g = e.geometry();
    const double d1 = density(e, b1);
    detail::require(d1 <= 0.5, "the outer ball must have density at most 1/2");
    const double room = b1.radius - dist(x, b1.center);
    const double r0 = std::min(0.75 * g.h, room);
    if (!(room > 0.0)) throw InvalidArgument("point is not inside the outer ball");
    const Ball b0{x, r0};
    const double d0 = density(e, b0);
    if (!(d0 >= 0.5)) throw InvalidArgument("no starting ball of density 1/2 around the point");
    if (d1 == 0.5) return b1;

    // bisect to sub-cell resolution along the path, keeping the closest density
    double lo = 0.0, hi = 1.0;  // density(lo) >= 1/2 >= density(hi)
    Ball best = b0;
    double best_err = std::abs(d0 - 0.5);
    const double path = dist(b0.center, b1.center) + (b1.radius - b0.radius);
    for (int it = 0; it < 64 && (hi - lo) * path > 1e-3 * g.h; ++it) {
        const double mid = 0.5 * (lo + hi);
        const Ball bt = detail::interpolate(b0, b1, mid);
        const double dt = density(e, bt);
        if (std::abs(dt - 0.5) < best_err) {
            best = bt;
            best_err = std::abs(dt - 0.5);
        }
        if (dt == 0.5) break;
        (dt > 0.5 ? lo : hi) = mid;
    }
    return best;
}

struct BoxingCover {
    BallFamily balls;
    std::vector<std::size_t> parent;  // index into the outer family for each ball
    GridSet residual;                 // E cells of the outer union left uncovered
    double residual_fraction = 0.0;   // |residual| / |E n outer union|
};

/// Half-density balls covering the E cells of the union of `outer`. Every outer
/// ball must have density at most 1/2. E cells already inside a ball produced
/// for the same outer ball are not boxed again.
inline BoxingCover boxing_cover(const GridSet& e, const BallFamily& outer)
{
    const auto& g = e.geometry();
    BoxingCover out;
    out.residual = GridSet(g);
    for (std::size_t k = 0; k < outer.size(); ++k) {
        const Ball& b = outer[k];
        detail::require(density(e, b) <= 0.5, "every outer ball must have density at most 1/2");
        BallFamily mine;
        for_each_cell_in_ball(g, b, [&](const auto&, Index i) {
            if (i == kOutside || !e[i]) return;
            const Point x = g.cell_center(i);
            if (mine.covers(x)) return;
            try {
                const Ball f = boxing_ball(e, b, x);
                mine.add(f);
                out.balls.add(f);
                out.parent.push_back(k);
            } catch (const InvalidArgument&) {
                // left for the residual
            }
        });
    }
    const GridSet target = rasterize_union(g, outer) & e;
    out.residual = target.minus(rasterize_union(g, out.balls));
    const Index n = target.count();
    out.residual_fraction = n == 0 ? 0.0 : static_cast<double>(out.residual.count()) / static_cast<double>(n);
    return out;
}

// ---------------------------------------------------------------------------

/// Depth of p in a ball or cube.
inline double depth_in(const std::variant<Ball, Cube>& x, const Point& p)
{
    return std::visit([&](const auto& s) { return s.depth(p); }, x);
}

inline double diameter_of(const std::variant<Ball, Cube>& x)
{
    return std::visit([](const auto& s) { return s.diameter(); }, x);
}

/// Closest point of the boundary of a ball or cube to p.
inline Point project_to_boundary(const std::variant<Ball, Cube>& x, const Point& p, int d)
{
    if (const auto* b = std::get_if<Ball>(&x)) {
        Point q = b->center;
        const double r = dist(p, b->center);
        if (r == 0.0) {
            q[0] += b->radius;
            return q;
        }
        for (int a = 0; a < d; ++a) q[a] = b->center[a] + b->radius * (p[a] - b->center[a]) / r;
        return q;
    }
    const auto& c = std::get<Cube>(x);
    Point q = p;
    int axis = 0;
    double best = -1.0;
    for (int a = 0; a < d; ++a) {
        q[a] = std::clamp(p[a], c.center[a] - c.half, c.center[a] + c.half);
        if (std::abs(q[a] - c.center[a]) > best) {
            best = std::abs(q[a] - c.center[a]);
            axis = a;
        }
    }
    q[axis] = c.center[axis] + (q[axis] >= c.center[axis] ? c.half : -c.half);
    return q;
}

/// Distance from the boundary of X below which the region A(r) is cut off:
/// lambda diam C / (4 d^(d/2 - 1)) with diam C = 2r.
inline double surface_cut(double lambda, double r, int d)
{
    return lambda * 2.0 * r / (4.0 * std::pow(static_cast<double>(d), 0.5 * d - 1.0));
}

struct SurfaceBall {
    Ball ball;
    Point source{};          // sampled point (face midpoint) the ball was grown from
    double density = 0.0;    // density of E in A(r)
    double ratio = 0.0;      // Per(E, A(r)) / (lambda^((d-1)/d) H^(d-1)(dB(x, r)))
};

struct SurfaceCover {
    std::vector<SurfaceBall> balls;
    std::vector<Point> skipped;  // points where the density never dropped below lambda/2
    std::size_t sampled = 0;
    double min_ratio = std::numeric_limits<double>::infinity();
};

namespace detail {

/// Cells of the region A(r) around x for the ball or cube X.
inline GridSet surface_region(const GridGeometry& g, const std::variant<Ball, Cube>& x, const Point& p, double r,
                              double lambda)
{
    const double cut = surface_cut(lambda, r, g.d);
    GridSet a(g);
    for_each_cell_in_ball(g, Ball{p, r}, [&](const auto&, Index i) {
        if (i != kOutside && depth_in(x, g.cell_center(i)) > cut) a.set(i);
    });
    return a;
}

/// Density of E in A(r) without materializing the region.
inline double region_density(const GridSet& e, const std::variant<Ball, Cube>& x, const Point& p, double r,
                             double lambda)
{
    const auto& g = e.geometry();
    const double cut = surface_cut(lambda, r, g.d);
    Index cells = 0, hits = 0;
    for_each_cell_in_ball(g, Ball{p, r}, [&](const auto&, Index i) {
        if (i == kOutside || depth_in(x, g.cell_center(i)) <= cut) return;
        ++cells;
        hits += e[i];
    });
    return cells == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(cells);
}

/// Surface boxing at a point p of the boundary of X: the radius r <= diam X
/// where the density of E in A(r) crosses lambda/2. Returns false when the
/// density stays above lambda/2 at the smallest radius or below it at diam X.
inline bool surface_ball(const GridSet& e, const std::variant<Ball, Cube>& x, const Point& p, double lambda,
                         SurfaceBall& out)
{
    const auto& g = e.geometry();
    const double target = 0.5 * lambda;
    double lo = 0.5 * g.h, hi = diameter_of(x);
    if (region_density(e, x, p, hi, lambda) < target) return false;
    if (region_density(e, x, p, lo, lambda) > target) return false;
    // discrete densities move in single-cell steps; stop at sub-cell resolution
    while (hi - lo > 0.05 * g.h) {
        const double mid = 0.5 * (lo + hi);
        (region_density(e, x, p, mid, lambda) >= target ? hi : lo) = mid;
    }
    const auto region = surface_region(g, x, p, hi, lambda);
    out.ball = Ball{p, hi};
    out.density = static_cast<double>((region & e).count()) / static_cast<double>(std::max<Index>(1, region.count()));
    const double sphere = g.d * unit_ball_volume(g.d) * std::pow(hi, g.d - 1);
    out.ratio = perimeter(e, Domain::within(region)) /
                (std::pow(lambda, static_cast<double>(g.d - 1) / g.d) * sphere);
    return true;
}

/// Outward faces of the raster of X whose two cells miss E, as midpoints.
inline std::vector<Point> boundary_samples(const GridSet& e, const GridSet& xr)
{
    const auto& g = e.geometry();
    std::vector<Point> pts;
    for_each_face(g, Domain::free_space(g), [&](Index a, Index b, const Face& f) {
        const bool ia = a != kOutside && xr[a];
        const bool ib = b != kOutside && xr[b];
        if (ia == ib) return;
        if ((a != kOutside && e[a]) || (b != kOutside && e[b])) return;
        Point p = g.cell_center(f.cell);
        p[f.axis] += (f.low ? -0.5 : 0.5) * g.h;
        pts.push_back(p);
    });
    return pts;
}

} // namespace detail

/// Cover of the part of the boundary of X away from E by balls centered on the
/// boundary, each grown until E has density lambda/2 in the part of the ball
/// that lies well inside X. Sample points are the outward face midpoints of the
/// raster of X, thinned to a net of spacing eta diam X.
inline SurfaceCover surface_boxing_cover(const std::variant<Ball, Cube>& x, const GridSet& e, double lambda,
                                         double eta = 0.05)
{
    detail::require(lambda > 0.0 && lambda < 1.0, "lambda must lie in (0, 1)");
    const auto& g = e.geometry();
    const GridSet xr = std::holds_alternative<Ball>(x) ? rasterize(g, std::get<Ball>(x)) : rasterize(g, std::get<Cube>(x));
    detail::require(!xr.empty(), "X has no cells");
    detail::require(static_cast<double>((xr & e).count()) >= lambda * static_cast<double>(xr.count()),
                    "density of E in X is below lambda");
    SurfaceCover out;
    const double spacing = eta * diameter_of(x);
    std::vector<Point> net;
    for (const Point& p : detail::boundary_samples(e, xr)) {
        bool near = false;
        for (const Point& q : net) near = near || dist(p, q) < spacing;
        if (!near) net.push_back(p);
    }
    out.sampled = net.size();
    for (const Point& p : net) {
        SurfaceBall sb;
        sb.source = p;
        if (!detail::surface_ball(e, x, project_to_boundary(x, p, g.d), lambda, sb)) {
            out.skipped.push_back(p);
            continue;
        }
        out.min_ratio = std::min(out.min_ratio, sb.ratio);
        out.balls.push_back(sb);
    }
    return out;
}

// ---------------------------------------------------------------------------

struct ScaleRecord {
    int scale = 0;
    std::size_t candidates = 0;  // balls before thinning
    std::size_t kept = 0;
    bool disjoint = true;
};

struct CoverBallRecord {
    Ball ball;
    int scale = 0;
    std::size_t parent = 0;        // generating ball of the outer family
    double boundary_mass = 0.0;    // qualified boundary measure of E in the ball
    double constant = 0.0;         // boundary_mass / (lambda^((d-1)/d) H^(d-1)(dC))
    bool near_boundary = true;     // property 3
};

struct CoverReport {
    std::vector<ScaleRecord> scales;
    std::vector<CoverBallRecord> balls;
    std::map<int, BallFamily> covers;   // C_n by scale
    std::size_t boundary_points = 0;
    std::size_t skipped_points = 0;
    std::vector<Point> uncovered;        // property 2 witnesses
    std::vector<std::size_t> far_balls;  // property 3 witnesses
    std::vector<std::size_t> weak_balls; // property 4 witnesses (constant not positive)
    std::vector<std::size_t> unresolved; // radius below two cells; property 4 not assessed
    std::size_t cross_scale_overlaps = 0;
    double min_constant = std::numeric_limits<double>::infinity();

    bool disjoint() const
    {
        return std::all_of(scales.begin(), scales.end(), [](const ScaleRecord& s) { return s.disjoint; });
    }
    bool covered() const { return uncovered.empty(); }
    bool close() const { return far_balls.empty(); }
    bool positive() const { return weak_balls.empty() && balls.size() > unresolved.size(); }
    bool all_pass() const { return disjoint() && covered() && close() && (balls.size() == unresolved.size() || positive()); }
};

/// Per-scale covers C_n of the boundary of the union of `outer` away from E.
/// Every outer ball must have density > lambda. Each boundary face of the union
/// raster whose cells miss E is a sample point; it is handled by the outer ball
/// of smallest scale containing its inner cell, projected onto that ball's
/// sphere and grown by surface boxing. The balls are bucketed by scale,
/// thinned by the greedy Vitali rule, and dropped when their 5-fold enlargement
/// misses every sample point. The report checks: (1) disjointness within each
/// scale, (2) every sample point on the boundary of the union of the scale <= n-1
/// balls lies in 5 C_{<=n}, (3) each ball is within 2 diam C of a sample point,
/// (4) positivity of the boundary measure of E inside C at distance at least
/// lambda d^(1-d/2) 2^(n-3) from the complement of the union. Balls of radius
/// below two cells are listed as unresolved and skipped by (4).
inline CoverReport multiscale_covers(const GridSet& e, const BallFamily& outer, double lambda)
{
    detail::require(lambda > 0.0 && lambda < 1.0, "lambda must lie in (0, 1)");
    const auto& g = e.geometry();
    const int d = g.d;
    for (const auto& b : outer)
        detail::require(count_in_ball(e, b).density() > lambda, "every outer ball must have density above lambda");

    CoverReport rep;
    const GridSet uni = rasterize_union(g, outer);

    // sample points with their smallest containing scale and generating ball
    struct Sample {
        Point p;
        Index inner;
        int scale;
        std::size_t ball;
    };
    std::vector<Sample> samples;
    for_each_face(g, Domain::free_space(g), [&](Index a, Index b, const Face& f) {
        const bool ia = a != kOutside && uni[a];
        const bool ib = b != kOutside && uni[b];
        if (ia == ib) return;
        if ((a != kOutside && e[a]) || (b != kOutside && e[b])) return;
        const Index inner = ia ? a : b;
        const Point c = g.cell_center(inner);
        Sample s{g.cell_center(f.cell), inner, std::numeric_limits<int>::max(), 0};
        s.p[f.axis] += (f.low ? -0.5 : 0.5) * g.h;
        double best_depth = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < outer.size(); ++k) {
            if (!outer[k].contains(c)) continue;
            const int sc = scale_of(outer[k].diameter());
            const double dep = outer[k].depth(c);
            if (sc < s.scale || (sc == s.scale && dep < best_depth)) {
                s.scale = sc;
                s.ball = k;
                best_depth = dep;
            }
        }
        samples.push_back(s);
    });
    rep.boundary_points = samples.size();

    // surface boxing per sample point
    std::vector<std::vector<Ball>> grown(outer.size());
    BallFamily raw;
    std::vector<std::size_t> raw_parent;
    for (const auto& s : samples) {
        bool done = false;
        for (const auto& c : grown[s.ball]) done = done || c.contains(s.p);
        if (done) continue;
        const std::variant<Ball, Cube> x = outer[s.ball];
        SurfaceBall sb;
        if (!detail::surface_ball(e, x, project_to_boundary(x, s.p, d), lambda, sb)) {
            ++rep.skipped_points;
            continue;
        }
        grown[s.ball].push_back(sb.ball);
        raw.add(sb.ball);
        raw_parent.push_back(s.ball);
    }

    // per-scale Vitali thinning, then pruning by 5-fold enlargement
    auto touches = [&](const Ball& c) {
        const Ball five = c.scaled(5.0);
        for (const auto& s : samples)
            if (dist2(s.p, five.center) <= five.radius * five.radius) return true;
        return false;
    };
    for (const auto& [n, idx] : raw.buckets()) {
        BallFamily bucket;
        for (auto i : idx) bucket.add(raw[i]);
        const BallFamily thin = vitali_subfamily(bucket);
        BallFamily kept;
        for (const auto& c : thin)
            if (touches(c)) kept.add(c);
        ScaleRecord sr;
        sr.scale = n;
        sr.candidates = bucket.size();
        sr.kept = kept.size();
        sr.disjoint = pairwise_disjoint(kept);
        rep.scales.push_back(sr);
        rep.covers[n] = kept;
        for (const auto& c : kept) {
            CoverBallRecord r;
            r.ball = c;
            r.scale = n;
            for (auto i : idx)
                if (raw[i] == c) {
                    r.parent = raw_parent[i];
                    break;
                }
            rep.balls.push_back(r);
        }
    }

    // property 2: cumulative enlarged covers by scale
    {
        std::vector<int> scale_keys;
        for (const auto& [n, fam] : rep.covers) scale_keys.push_back(n);
        for (const auto& s : samples) {
            const int n = s.scale + 1;
            bool ok = false;
            for (const auto& [k, fam] : rep.covers) {
                if (k > n) break;
                for (const auto& c : fam)
                    if (c.scaled(5.0).contains(s.p)) {
                        ok = true;
                        break;
                    }
                if (ok) break;
            }
            if (!ok) rep.uncovered.push_back(s.p);
        }
    }

    // properties 3 and 4
    const auto sq = squared_distance_transform(uni.complement(), true);
    const double sphere_const = d * unit_ball_volume(d);
    const auto faces_e = boundary_faces(e, Domain::free_space(g));
    for (std::size_t k = 0; k < rep.balls.size(); ++k) {
        auto& r = rep.balls[k];
        const Ball& c = r.ball;
        r.near_boundary = touches(c);
        if (!r.near_boundary) rep.far_balls.push_back(k);
        const double threshold = lambda * std::pow(static_cast<double>(d), 1.0 - 0.5 * d) * std::ldexp(1.0, r.scale - 3);
        Index count = 0;
        for (const auto& f : faces_e) {
            const Index a = f.low ? kOutside : f.cell;
            Index b = kOutside;
            if (f.low) b = f.cell;
            else {
                const auto co = g.coords(f.cell);
                if (co[f.axis] + 1 < g.shape[f.axis]) b = f.cell + g.stride(f.axis);
            }
            if (a == kOutside || b == kOutside) continue;
            if (!c.contains(g.cell_center(a)) || !c.contains(g.cell_center(b))) continue;
            const double dmin = std::sqrt(std::min(sq[a], sq[b])) * g.h;
            if (dmin >= threshold) ++count;
        }
        r.boundary_mass = static_cast<double>(count) * g.face_area();
        r.constant = r.boundary_mass /
                     (std::pow(lambda, static_cast<double>(d - 1) / d) * sphere_const * std::pow(c.radius, d - 1));
        if (c.radius < 2.0 * g.h) {
            rep.unresolved.push_back(k);
            continue;
        }
        rep.min_constant = std::min(rep.min_constant, r.constant);
        if (!(r.constant > 0.0)) rep.weak_balls.push_back(k);
    }

    for (std::size_t i = 0; i < rep.balls.size(); ++i)
        for (std::size_t j = i + 1; j < rep.balls.size(); ++j)
            if (rep.balls[i].scale != rep.balls[j].scale && intersects(rep.balls[i].ball, rep.balls[j].ball))
                ++rep.cross_scale_overlaps;
    return rep;
}

// ---------------------------------------------------------------------------

namespace detail {

/// Grid over the bounding box of a ball with `cells` cells across its radius.
inline GridGeometry local_grid(const Ball& c, int d, int cells)
{
    GridGeometry g;
    g.d = d;
    g.h = c.radius / cells;
    for (int a = 0; a < d; ++a) {
        g.shape[a] = 2 * cells + 2;
        g.origin[a] = c.center[a] - (cells + 1) * g.h;
    }
    return g;
}

} // namespace detail

struct LargeBallRatio {
    double ratio = 0.0;          // Per(U B, C) / Per(C)
    double normalized = 0.0;     // ratio * K^d
    bool premise = true;         // every diameter >= K diam C
};

/// Boundary of the union of large balls inside a window ball C, relative to the
/// boundary of C, measured on a local grid with `cells` cells across r_C.
inline LargeBallRatio large_ball_boundary_ratio(const Ball& c, const BallFamily& fam, double k, int d,
                                                int cells = 64)
{
    LargeBallRatio r;
    for (const auto& b : fam) r.premise = r.premise && b.diameter() >= k * c.diameter() * (1.0 - 1e-12);
    const auto g = detail::local_grid(c, d, cells);
    const GridSet window = rasterize(g, c);
    const GridSet uni = rasterize_union(g, fam);
    r.ratio = perimeter(uni, Domain::within(window)) / perimeter(window);
    r.normalized = r.ratio * std::pow(k, d);
    return r;
}

struct UnionPerimeterResult {
    double ratio = 0.0;        // Per(F u U B) / Per(F)
    double envelope = 0.0;     // (1 - ln lambda) lambda^(-2 + 3/(d+1))
    double constant = 0.0;     // ratio / envelope
    std::vector<std::size_t> offending;  // balls with |B n F| < lambda |B|
};

/// Perimeter of F together with balls that each put a lambda fraction of
/// their volume inside F, relative to the perimeter of F, on the grid g.
inline UnionPerimeterResult intersecting_union_perimeter_check(const GridGeometry& g, const Ball& f,
                                                               const BallFamily& fam, double lambda)
{
    detail::require(lambda > 0.0 && lambda < 1.0, "lambda must lie in (0, 1)");
    UnionPerimeterResult r;
    for (std::size_t k = 0; k < fam.size(); ++k) {
        const double frac = ball_intersection_volume(fam[k], f, g.d) / ball_volume(fam[k], g.d);
        if (frac < lambda * (1.0 - 1e-12)) r.offending.push_back(k);
    }
    r.envelope = (1.0 - std::log(lambda)) * std::pow(lambda, -2.0 + 3.0 / (g.d + 1));
    if (!r.offending.empty()) {
        r.ratio = r.constant = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    const GridSet fr = rasterize(g, f);
    r.ratio = perimeter(fr | rasterize_union(g, fam)) / perimeter(fr);
    r.constant = r.ratio / r.envelope;
    return r;
}

} // namespace maxvar
