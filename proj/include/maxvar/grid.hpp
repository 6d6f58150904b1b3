#pragma once

// Uniform-grid sets and fields: measure, face-count perimeter, measure-theoretic
// cell classes, superlevel sets and variation through the coarea identity.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace maxvar {

using Index = std::int64_t;

/// Largest ambient dimension for continuous geometry (balls, campaigns).
inline constexpr int kMaxDim = 4;
/// Largest dimension of a grid.
inline constexpr int kMaxGridDim = 3;

/// A point in up to four dimensions; unused trailing coordinates stay zero so
/// Euclidean distances need no dimension argument.
using Point = std::array<double, kMaxDim>;

inline double dist2(const Point& a, const Point& b)
{
    double s = 0.0;
    for (int i = 0; i < kMaxDim; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

inline double dist(const Point& a, const Point& b) { return std::sqrt(dist2(a, b)); }

inline double norm(const Point& a) { return std::sqrt(dist2(a, Point{})); }

/// Sum in a fixed pairwise tree order, so the result does not depend on how the
/// caller partitioned the work.
inline double pairwise_sum(std::span<const double> v)
{
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct GridGeometry {
    int d = 2;
    std::array<Index, kMaxGridDim> shape{1, 1, 1};
    double h = 1.0;
    std::array<double, kMaxGridDim> origin{0.0, 0.0, 0.0};

    /// n^d cells of side h with the low corner at the origin. h <= 0 means 1/n.
    static GridGeometry cube(int d, Index n, double h = 0.0)
    {
        GridGeometry g;
        g.d = d;
        for (int a = 0; a < d; ++a) g.shape[a] = n;
        g.h = h > 0.0 ? h : 1.0 / static_cast<double>(n);
        g.validate();
        return g;
    }

    void validate() const
    {
        detail::require(d >= 1 && d <= kMaxGridDim, "grid dimension must be 1, 2 or 3");
        detail::require(h > 0.0 && std::isfinite(h), "cell side h must be positive");
        Index total = 1;
        for (int a = 0; a < kMaxGridDim; ++a) {
            if (a < d) {
                detail::require(shape[a] >= 1, "shape entries must be positive");
                detail::require(total <= std::numeric_limits<Index>::max() / shape[a], "grid too large");
                total *= shape[a];
            } else {
                detail::require(shape[a] == 1, "unused axes must have extent 1");
            }
        }
    }

    Index size() const { return shape[0] * shape[1] * shape[2]; }

    Index linear(Index x, Index y = 0, Index z = 0) const { return x + shape[0] * (y + shape[1] * z); }

    std::array<Index, kMaxGridDim> coords(Index i) const
    {
        const Index x = i % shape[0];
        const Index yz = i / shape[0];
        return {x, yz % shape[1], yz / shape[1]};
    }

    /// Stride of one step along axis a in linear indexing.
    Index stride(int a) const { return a == 0 ? 1 : (a == 1 ? shape[0] : shape[0] * shape[1]); }

    double coordinate(int axis, Index c) const { return origin[axis] + (static_cast<double>(c) + 0.5) * h; }

    Point cell_center(Index i) const
    {
        const auto c = coords(i);
        Point p{};
        for (int a = 0; a < d; ++a) p[a] = coordinate(a, c[a]);
        return p;
    }

    double cell_volume() const { return std::pow(h, d); }
    double face_area() const { return std::pow(h, d - 1); }

    double extent(int a) const { return static_cast<double>(shape[a]) * h; }

    double diameter() const
    {
        double s = 0.0;
        for (int a = 0; a < d; ++a) s += extent(a) * extent(a);
        return std::sqrt(s);
    }

    bool all_powers_of_two() const
    {
        for (int a = 0; a < d; ++a)
            if ((shape[a] & (shape[a] - 1)) != 0) return false;
        return true;
    }

    bool operator==(const GridGeometry&) const = default;
};

inline void require_same(const GridGeometry& a, const GridGeometry& b, const char* what)
{
    if (!(a == b)) throw GeometryMismatch(what);
}

/// Binary set on a grid; one byte per cell.
class GridSet {
public:
    GridSet() = default;
    explicit GridSet(const GridGeometry& g, bool value = false)
        : geometry_(g), mask_(static_cast<std::size_t>(g.size()), value ? 1 : 0)
    {
        g.validate();
    }

    const GridGeometry& geometry() const { return geometry_; }
    Index size() const { return static_cast<Index>(mask_.size()); }

    bool operator[](Index i) const { return mask_[static_cast<std::size_t>(i)] != 0; }
    void set(Index i, bool v = true) { mask_[static_cast<std::size_t>(i)] = v ? 1 : 0; }

    std::span<const std::uint8_t> data() const { return mask_; }

    Index count() const { return static_cast<Index>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1})); }
    bool empty() const { return count() == 0; }

    GridSet complement() const
    {
        GridSet r = *this;
        for (auto& b : r.mask_) b = b ? 0 : 1;
        return r;
    }

    GridSet& operator|=(const GridSet& o)
    {
        require_same(geometry_, o.geometry_, "set union");
        for (std::size_t i = 0; i < mask_.size(); ++i) mask_[i] |= o.mask_[i];
        return *this;
    }

    GridSet& operator&=(const GridSet& o)
    {
        require_same(geometry_, o.geometry_, "set intersection");
        for (std::size_t i = 0; i < mask_.size(); ++i) mask_[i] &= o.mask_[i];
        return *this;
    }

    friend GridSet operator|(GridSet a, const GridSet& b) { return a |= b; }
    friend GridSet operator&(GridSet a, const GridSet& b) { return a &= b; }

    /// Cells of this set that are not in o.
    GridSet minus(const GridSet& o) const { return *this & o.complement(); }

    bool subset_of(const GridSet& o) const
    {
        require_same(geometry_, o.geometry_, "subset test");
        for (std::size_t i = 0; i < mask_.size(); ++i)
            if (mask_[i] && !o.mask_[i]) return false;
        return true;
    }

    bool operator==(const GridSet&) const = default;

private:
    GridGeometry geometry_;
    std::vector<std::uint8_t> mask_;
};

/// Real-valued grid function with values in [0, 1].
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(const GridGeometry& g, double value = 0.0)
        : geometry_(g), values_(static_cast<std::size_t>(g.size()), value)
    {
        g.validate();
    }
    ScalarField(const GridGeometry& g, std::vector<double> values) : geometry_(g), values_(std::move(values))
    {
        g.validate();
        if (static_cast<Index>(values_.size()) != g.size()) throw GeometryMismatch("field length");
    }

    static ScalarField indicator(const GridSet& s)
    {
        ScalarField f(s.geometry());
        for (Index i = 0; i < s.size(); ++i) f.values_[static_cast<std::size_t>(i)] = s[i] ? 1.0 : 0.0;
        return f;
    }

    const GridGeometry& geometry() const { return geometry_; }
    Index size() const { return static_cast<Index>(values_.size()); }

    double operator[](Index i) const { return values_[static_cast<std::size_t>(i)]; }
    double& operator[](Index i) { return values_[static_cast<std::size_t>(i)]; }

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    bool in_unit_range() const
    {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
    }

    bool operator==(const ScalarField&) const = default;

private:
    GridGeometry geometry_;
    std::vector<double> values_;
};

/// The open set Omega. Either the whole space (cells outside the grid box act as
/// complement cells of every set) or the cells of a mask.
class Domain {
public:
    static Domain free_space(const GridGeometry& g)
    {
        Domain d;
        d.geometry_ = g;
        return d;
    }

    static Domain within(GridSet omega)
    {
        Domain d;
        d.geometry_ = omega.geometry();
        d.mask_ = std::move(omega);
        return d;
    }

    /// Omega equal to the open grid box.
    static Domain box(const GridGeometry& g) { return within(GridSet(g, true)); }

    bool is_free_space() const { return !mask_.has_value(); }
    const GridGeometry& geometry() const { return geometry_; }
    const GridSet* mask() const { return mask_ ? &*mask_ : nullptr; }

    bool contains(Index i) const { return !mask_ || (*mask_)[i]; }

    GridSet cells() const { return mask_ ? *mask_ : GridSet(geometry_, true); }

private:
    GridGeometry geometry_;
    std::optional<GridSet> mask_;
};

/// Marker for "the neighbor lies outside the grid box".
inline constexpr Index kOutside = -1;

/// A grid face: between `cell` and its +axis neighbor, or (low == true, only at
/// the low box edge) between `cell` and the outside cell below it.
struct Face {
    Index cell = 0;
    int axis = 0;
    bool low = false;

    bool operator==(const Face&) const = default;
};

using FaceSet = std::vector<Face>;

/// Calls fn(a, b, face) for every face that lies in Omega: both cells inside the
/// mask, or, in free space, every face of every box cell (a or b may then be kOutside).
template <class Fn>
void for_each_face(const GridGeometry& g, const Domain& omega, Fn&& fn)
{
    const bool free = omega.is_free_space();
    const auto& sh = g.shape;
    for (int axis = 0; axis < g.d; ++axis) {
        const Index st = g.stride(axis);
        for (Index z = 0; z < sh[2]; ++z)
            for (Index y = 0; y < sh[1]; ++y)
                for (Index x = 0; x < sh[0]; ++x) {
                    const Index i = g.linear(x, y, z);
                    const Index c = axis == 0 ? x : (axis == 1 ? y : z);
                    const bool last = c + 1 == sh[axis];
                    if (free) {
                        if (c == 0) fn(kOutside, i, Face{i, axis, true});
                        fn(i, last ? kOutside : i + st, Face{i, axis, false});
                    } else if (!last && omega.contains(i) && omega.contains(i + st)) {
                        fn(i, i + st, Face{i, axis, false});
                    }
                }
    }
}

// ---------------------------------------------------------------------------

/// Lebesgue measure of the cells of S.
inline double measure(const GridSet& s) { return static_cast<double>(s.count()) * s.geometry().cell_volume(); }

/// Faces separating a cell of E from a cell outside E, within Omega.
inline FaceSet boundary_faces(const GridSet& e, const Domain& omega)
{
    require_same(e.geometry(), omega.geometry(), "boundary_faces");
    FaceSet out;
    for_each_face(e.geometry(), omega, [&](Index a, Index b, const Face& f) {
        const bool ia = a != kOutside && e[a];
        const bool ib = b != kOutside && e[b];
        if (ia != ib) out.push_back(f);
    });
    return out;
}

/// Number of faces of the discrete boundary of E inside Omega.
inline Index perimeter_faces(const GridSet& e, const Domain& omega)
{
    require_same(e.geometry(), omega.geometry(), "perimeter");
    Index n = 0;
    for_each_face(e.geometry(), omega, [&](Index a, Index b, const Face&) {
        const bool ia = a != kOutside && e[a];
        const bool ib = b != kOutside && e[b];
        n += ia != ib;
    });
    return n;
}

/// Face-count perimeter of E in Omega (world units^(d-1)).
inline double perimeter(const GridSet& e, const Domain& omega)
{
    return static_cast<double>(perimeter_faces(e, omega)) * e.geometry().face_area();
}

inline double perimeter(const GridSet& e) { return perimeter(e, Domain::free_space(e.geometry())); }

enum class CellClass : std::uint8_t { Outside = 0, Interior, Boundary, Exterior };

struct CellPartition {
    std::vector<CellClass> cls;
    Index interior = 0;
    Index boundary = 0;
    Index exterior = 0;

    GridSet select(const GridGeometry& g, CellClass c) const
    {
        GridSet s(g);
        for (Index i = 0; i < s.size(); ++i) s.set(i, cls[static_cast<std::size_t>(i)] == c);
        return s;
    }
};

/// Discrete interior / boundary / exterior of E among the cells of Omega. Only
/// face-neighbors that are themselves Omega cells inside the box are consulted.
inline CellPartition classify_cells(const GridSet& e, const Domain& omega)
{
    const auto& g = e.geometry();
    require_same(g, omega.geometry(), "classify_cells");
    CellPartition p;
    p.cls.assign(static_cast<std::size_t>(g.size()), CellClass::Outside);
    for (Index i = 0; i < g.size(); ++i) {
        if (!omega.contains(i)) continue;
        const auto c = g.coords(i);
        bool any_in = e[i];
        bool any_out = !e[i];
        for (int a = 0; a < g.d; ++a) {
            const Index st = g.stride(a);
            if (c[a] > 0 && omega.contains(i - st)) (e[i - st] ? any_in : any_out) = true;
            if (c[a] + 1 < g.shape[a] && omega.contains(i + st)) (e[i + st] ? any_in : any_out) = true;
        }
        CellClass k = CellClass::Boundary;
        if (!any_out) k = CellClass::Interior;
        else if (!any_in) k = CellClass::Exterior;
        p.cls[static_cast<std::size_t>(i)] = k;
        (k == CellClass::Interior ? p.interior : k == CellClass::Exterior ? p.exterior : p.boundary)++;
    }
    return p;
}

/// Strict superlevel set {f > lambda}.
inline GridSet level_set(const ScalarField& f, double lambda)
{
    detail::require(lambda >= 0.0 && lambda < 1.0, "level must lie in [0, 1)");
    GridSet s(f.geometry());
    for (Index i = 0; i < f.size(); ++i) s.set(i, f[i] > lambda);
    return s;
}

/// Sorted distinct values of f.
inline std::vector<double> attained_levels(const ScalarField& f)
{
    std::vector<double> v(f.values().begin(), f.values().end());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

/// Variation of f in Omega by the direct face sum h^(d-1) * sum |f(a) - f(b)|.
/// Cells outside the box read 0 in free space.
inline double total_variation_direct(const ScalarField& f, const Domain& omega)
{
    const auto& g = f.geometry();
    require_same(g, omega.geometry(), "total_variation_direct");
    std::vector<double> jumps;
    jumps.reserve(static_cast<std::size_t>(g.size() * g.d));
    for_each_face(g, omega, [&](Index a, Index b, const Face&) {
        const double fa = a == kOutside ? 0.0 : f[a];
        const double fb = b == kOutside ? 0.0 : f[b];
        if (fa != fb) jumps.push_back(std::abs(fa - fb));
    });
    return pairwise_sum(jumps) * g.face_area();
}

namespace detail {

/// Levels v_0 = 0 < v_1 < ... < v_m attained by f on Omega, and for each
/// consecutive pair the number of faces separating {f > v_i} from its complement.
struct LevelFaceCounts {
    std::vector<double> levels;
    std::vector<Index> faces;  // faces[i] = perimeter_faces({f > levels[i]})
};

inline LevelFaceCounts level_face_counts(const ScalarField& f, const Domain& omega)
{
    const auto& g = f.geometry();
    require_same(g, omega.geometry(), "variation");
    LevelFaceCounts r;
    r.levels.push_back(0.0);
    for (Index i = 0; i < g.size(); ++i)
        if (omega.contains(i)) r.levels.push_back(f[i]);
    std::sort(r.levels.begin(), r.levels.end());
    r.levels.erase(std::unique(r.levels.begin(), r.levels.end()), r.levels.end());
    std::vector<Index> diff(r.levels.size() + 1, 0);
    auto index_of = [&](double v) {
        return static_cast<std::size_t>(std::lower_bound(r.levels.begin(), r.levels.end(), v) - r.levels.begin());
    };
    for_each_face(g, omega, [&](Index a, Index b, const Face&) {
        const double fa = a == kOutside ? 0.0 : f[a];
        const double fb = b == kOutside ? 0.0 : f[b];
        if (fa == fb) return;
        // the face separates {f > v} exactly for lo <= v < hi
        diff[index_of(std::min(fa, fb))] += 1;
        diff[index_of(std::max(fa, fb))] -= 1;
    });
    r.faces.resize(r.levels.size());
    Index run = 0;
    for (std::size_t i = 0; i < r.levels.size(); ++i) r.faces[i] = run += diff[i];
    return r;
}

} // namespace detail

/// Variation of f in Omega as the integral over levels of the perimeter of the
/// strict superlevel sets, evaluated exactly on the attained levels.
inline double variation_coarea(const ScalarField& f, const Domain& omega)
{
    detail::require(f.in_unit_range(), "field values must lie in [0, 1]");
    const auto lf = detail::level_face_counts(f, omega);
    std::vector<double> slabs;
    slabs.reserve(lf.levels.size());
    for (std::size_t i = 0; i + 1 < lf.levels.size(); ++i)
        slabs.push_back(static_cast<double>(lf.faces[i]) * (lf.levels[i + 1] - lf.levels[i]));
    return pairwise_sum(slabs) * f.geometry().face_area();
}

/// Perimeter in Omega of {f > lambda} for each lambda, in one pass over the faces.
inline std::vector<double> level_set_perimeters(const ScalarField& f, const Domain& omega,
                                                std::span<const double> lambdas)
{
    const auto& g = f.geometry();
    require_same(g, omega.geometry(), "level_set_perimeters");
    std::vector<double> sorted(lambdas.begin(), lambdas.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<Index> diff(sorted.size() + 1, 0);
    for_each_face(g, omega, [&](Index a, Index b, const Face&) {
        const double fa = a == kOutside ? 0.0 : f[a];
        const double fb = b == kOutside ? 0.0 : f[b];
        if (fa == fb) return;
        const double lo = std::min(fa, fb), hi = std::max(fa, fb);
        // lambdas with lo <= lambda < hi
        const auto first = std::lower_bound(sorted.begin(), sorted.end(), lo) - sorted.begin();
        const auto last = std::lower_bound(sorted.begin(), sorted.end(), hi) - sorted.begin();
        diff[static_cast<std::size_t>(first)] += 1;
        diff[static_cast<std::size_t>(last)] -= 1;
    });
    std::vector<double> per_sorted(sorted.size());
    Index run = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) per_sorted[i] = static_cast<double>(run += diff[i]) * g.face_area();
    std::vector<double> out;
    out.reserve(lambdas.size());
    for (double l : lambdas)
        out.push_back(per_sorted[static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), l) - sorted.begin())]);
    return out;
}

/// Faces of the boundary of A u B that are neither a boundary face of A whose
/// outer cell misses B, nor one of B whose outer cell misses A, nor a common
/// boundary face. Always empty; returned for inspection.
inline FaceSet boundary_union_check(const GridSet& a, const GridSet& b)
{
    const auto& g = a.geometry();
    require_same(g, b.geometry(), "boundary_union_check");
    FaceSet violations;
    for_each_face(g, Domain::free_space(g), [&](Index p, Index q, const Face& face) {
        auto in = [](const GridSet& s, Index i) { return i != kOutside && s[i]; };
        const bool u_p = in(a, p) || in(b, p), u_q = in(a, q) || in(b, q);
        if (u_p == u_q) return;
        const Index outer = u_p ? q : p;
        const bool bd_a = in(a, p) != in(a, q);
        const bool bd_b = in(b, p) != in(b, q);
        const bool ok = (bd_a && !in(b, outer)) || (bd_b && !in(a, outer)) || (bd_a && bd_b);
        if (!ok) violations.push_back(face);
    });
    return violations;
}

} // namespace maxvar
