#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "grid.hpp"

namespace maxvar {

/// Open Euclidean ball.
struct Ball {
    Point center{};
    double radius = 0.0;

    bool contains(const Point& p) const { return dist2(p, center) < radius * radius; }
    double diameter() const { return 2.0 * radius; }
    /// Distance from p to the complement; negative outside.
    double depth(const Point& p) const { return radius - dist(p, center); }
    /// Same center, radius scaled by c.
    Ball scaled(double c) const { return Ball{center, c * radius}; }

    bool operator==(const Ball&) const = default;
};

/// Open axis-aligned cube of half side `half`, restricted to the first d axes.
struct Cube {
    Point center{};
    double half = 0.0;
    int d = 2;

    double depth(const Point& p) const
    {
        double m = 0.0;
        for (int a = 0; a < d; ++a) m = std::max(m, std::abs(p[a] - center[a]));
        return half - m;
    }
    bool contains(const Point& p) const { return depth(p) > 0.0; }
    double diameter() const { return 2.0 * half * std::sqrt(static_cast<double>(d)); }
};

inline bool intersects(const Ball& a, const Ball& b) { return dist(a.center, b.center) < a.radius + b.radius; }

/// Discrete ball of the lattice: integer offsets o with |o|^2 < key. A world
/// radius r on a grid of side h gives key = ceil((r/h)^2).
struct LatticeBall {
    struct Row {
        int dy = 0;
        int dz = 0;
        int half_width = 0;  // offsets dx in [-half_width, half_width]
    };

    std::int64_t key = 1;
    int reach = 0;  // largest |offset| along any axis
    std::vector<Row> rows;
    Index cells = 0;

    static std::int64_t key_for(double radius, double h)
    {
        const double s = (radius / h) * (radius / h);
        return static_cast<std::int64_t>(std::ceil(s));
    }

    static LatticeBall make(std::int64_t key, int d)
    {
        LatticeBall b;
        b.key = key;
        // largest integer k with k^2 < key
        auto isqrt_below = [](std::int64_t v) {
            if (v <= 0) return std::int64_t{-1};
            auto k = static_cast<std::int64_t>(std::sqrt(static_cast<double>(v)));
            while (k * k >= v) --k;
            while ((k + 1) * (k + 1) < v) ++k;
            return k;
        };
        b.reach = static_cast<int>(std::max<std::int64_t>(0, isqrt_below(key)));
        const int ry = d >= 2 ? b.reach : 0;
        const int rz = d >= 3 ? b.reach : 0;
        for (int dz = -rz; dz <= rz; ++dz)
            for (int dy = -ry; dy <= ry; ++dy) {
                const std::int64_t rest = key - std::int64_t{dy} * dy - std::int64_t{dz} * dz;
                const auto w = isqrt_below(rest);
                if (w < 0) continue;
                b.rows.push_back({dy, dz, static_cast<int>(w)});
                b.cells += 2 * w + 1;
            }
        return b;
    }
};

namespace detail {

/// Lattice index of p along axis a if p sits on a cell center (within 1e-9 cells).
inline bool lattice_coordinate(const GridGeometry& g, int a, double p, Index& out)
{
    const double u = (p - g.origin[a]) / g.h - 0.5;
    const double r = std::round(u);
    if (std::abs(u - r) > 1e-9) return false;
    out = static_cast<Index>(r);
    return true;
}

} // namespace detail

/// Visits every lattice cell (inside or outside the box) whose center lies in the
/// open ball. fn(coords, linear) receives linear == kOutside for cells beyond the box.
/// Lattice-centered balls are evaluated in integer offsets so the result agrees
/// exactly with LatticeBall. With box_only the cells beyond the box are skipped.
template <class Fn>
void for_each_cell_in_ball(const GridGeometry& g, const Ball& b, Fn&& fn, bool box_only = false)
{
    std::array<Index, kMaxGridDim> lo{0, 0, 0}, hi{0, 0, 0}, ctr{0, 0, 0};
    bool lattice = true;
    for (int a = 0; a < g.d; ++a) {
        lattice = lattice && detail::lattice_coordinate(g, a, b.center[a], ctr[a]);
        lo[a] = static_cast<Index>(std::floor((b.center[a] - b.radius - g.origin[a]) / g.h - 0.5)) - 1;
        hi[a] = static_cast<Index>(std::ceil((b.center[a] + b.radius - g.origin[a]) / g.h - 0.5)) + 1;
        if (box_only) {
            lo[a] = std::max<Index>(lo[a], 0);
            hi[a] = std::min<Index>(hi[a], g.shape[a] - 1);
        }
    }
    const double s = (b.radius / g.h) * (b.radius / g.h);
    const double r2 = b.radius * b.radius;
    for (Index z = lo[2]; z <= hi[2]; ++z)
        for (Index y = lo[1]; y <= hi[1]; ++y)
            for (Index x = lo[0]; x <= hi[0]; ++x) {
                const std::array<Index, kMaxGridDim> c{x, y, z};
                bool in;
                if (lattice) {
                    std::int64_t q = 0;
                    for (int a = 0; a < g.d; ++a) q += (c[a] - ctr[a]) * (c[a] - ctr[a]);
                    in = static_cast<double>(q) < s;
                } else {
                    double q = 0.0;
                    for (int a = 0; a < g.d; ++a) {
                        const double t = g.coordinate(a, c[a]) - b.center[a];
                        q += t * t;
                    }
                    in = q < r2;
                }
                if (!in) continue;
                bool inside = true;
                for (int a = 0; a < g.d; ++a) inside = inside && c[a] >= 0 && c[a] < g.shape[a];
                fn(c, inside ? g.linear(x, y, z) : kOutside);
            }
}

struct BallCount {
    Index cells = 0;      // lattice cells of the ball, including those beyond the box
    Index in_box = 0;     // of which inside the box
    Index hits = 0;       // of which in E

    double density() const { return cells == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(cells); }
};

/// Counts the cells of a ball and of E inside it; cells beyond the box are
/// complement cells (free space).
inline BallCount count_in_ball(const GridSet& e, const Ball& b)
{
    BallCount c;
    for_each_cell_in_ball(e.geometry(), b, [&](const auto&, Index i) {
        ++c.cells;
        if (i == kOutside) return;
        ++c.in_box;
        c.hits += e[i];
    });
    return c;
}

inline double density(const GridSet& e, const Ball& b) { return count_in_ball(e, b).density(); }

inline GridSet rasterize(const GridGeometry& g, const Ball& b)
{
    GridSet s(g);
    for_each_cell_in_ball(
        g, b,
        [&](const auto&, Index i) {
            if (i != kOutside) s.set(i);
        },
        true);
    return s;
}

/// Cells whose centers satisfy pred.
template <class Pred>
GridSet rasterize_if(const GridGeometry& g, Pred&& pred)
{
    GridSet s(g);
    for (Index i = 0; i < g.size(); ++i) s.set(i, pred(g.cell_center(i)));
    return s;
}

inline GridSet rasterize(const GridGeometry& g, const Cube& q)
{
    return rasterize_if(g, [&](const Point& p) { return q.contains(p); });
}

template <class Range>
GridSet rasterize_union(const GridGeometry& g, const Range& balls)
{
    GridSet s(g);
    for (const Ball& b : balls)
        for_each_cell_in_ball(
            g, b,
            [&](const auto&, Index i) {
                if (i != kOutside) s.set(i);
            },
            true);
    return s;
}

} // namespace maxvar
